#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "isinglab/sampler.h"
#include "json.hpp"

namespace isinglab::cli {

using json = nlohmann::json;

// A JSON argument given inline, or as a path (optionally prefixed by @).
json parse_json_arg(const std::string& s);

Domain domain_from_json(const json& j);  // {"vertices": [[x,y],...]} or {"rect": [x0,y0,x1,y1]}
BoundaryCondition bc_from_json(const json& j);  // {"marked": [{"face":[..],"edge":[..]}, ...]}
HalfEdge half_edge_from_json(const json& j);
DualEdge dual_edge_from_json(const json& j);
std::vector<DualEdge> edges_from_json(const json& j);
// {"U": [{"edges": [[mx2,my2],...], "value": v}, ...]} or the same with "V".
PotentialU potential_from_json(const json& j);

json to_json(Vertex v);
json to_json(Face f);
json to_json(const DualEdge& e);
json to_json(const HalfEdge& h);
json to_json(const std::vector<DualEdge>& es);
json to_json(const InterfacePath& p);
json to_json(const AuditReport& r);

// %.17g
std::string fmt(double v);

void write_paths_csv(std::ostream& os, const std::vector<InterfacePath>& paths);
void write_driving_csv(std::ostream& os, const std::vector<DrivingRecord>& recs);
std::vector<DrivingRecord> read_driving_csv(std::istream& is);
// Complete paths as written by write_paths_csv.
std::vector<InterfacePath> read_paths_csv(std::istream& is);

}  // namespace isinglab::cli
