#include <cstdio>
#include <fstream>
#include <sstream>

#include "cli.h"
#include "cli_io.h"
#include "doctest.h"

using isinglab::cli::dispatch;
using isinglab::cli::json;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = dispatch(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

const std::string bc22 = R"({"marked":[{"face":[1,-1],"edge":[1,-2]},{"face":[1,3],"edge":[1,4]}]})";

}  // namespace

TEST_CASE("partition of one vertex at x = 1/2") {
    auto r = run({"partition", "--domain", R"({"rect":[0,0,0,0]})", "--x", "0.5"});
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["Z"].get<double>() == 1.0625);
    CHECK(j["Z_pfaffian"].get<double>() == doctest::Approx(1.0625).epsilon(1e-14));
}

TEST_CASE("usage and validation errors exit 1 with a JSON diagnostic") {
    for (auto args : std::vector<std::vector<std::string>>{
             {"partition", "--bogus"},
             {"partition", "--domain", R"({"rect":[0,0,0,0],"extra":1})"},
             {"partition", "--domain", "{not json"},
             {"partition", "--domain", R"({"rect":[0,0,0,0]})", "--x", "-1"},
             {"observable", "--domain", R"({"rect":[0,0,1,1]})", "--bc", R"({"marked":[]})"},
             {"explore", "--domain", R"({"rect":[0,0,1,1]})", "--bc", bc22, "--contour", "[[0,1]]"},
             {"nosuch"}}) {
        auto r = run(args);
        CHECK(r.code == 1);
        CHECK(json::parse(r.err).contains("error"));
    }
}

TEST_CASE("enumeration guard exits 2") {
    auto r = run({"identity-check", "--domain", R"({"rect":[0,0,3,3]})", "--all-subsets"});
    CHECK(r.code == 2);
    CHECK(json::parse(r.err)["error"] == "guard");
}

TEST_CASE("a failed check exits 3") {
    auto r = run({"sholo-check", "--domain", R"({"rect":[0,0,3,2]})", "--bc",
                  R"({"marked":[{"face":[3,-1],"edge":[3,-2]},{"face":[3,5],"edge":[3,6]}]})", "--x", "0.3", "--tol",
                  "1e-9"});
    CHECK(r.code == 3);
    CHECK(json::parse(r.out)["result"] == "FAIL");
}

TEST_CASE("config file values yield to explicit flags") {
    const std::string path = "test_cli_config.json";
    {
        std::ofstream f(path);
        f << R"({"domain":{"rect":[0,0,0,0]},"x":0.3})";
    }
    auto a = run({"partition", "--config", path});
    auto b = run({"partition", "--config", path, "--x", "0.5"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(json::parse(a.out)["Z"].get<double>() == doctest::Approx(1 + 0.3 * 0.3 * 0.3 * 0.3));
    CHECK(json::parse(b.out)["Z"].get<double>() == 1.0625);
    {
        std::ofstream f(path);
        f << R"({"bogus":1})";
    }
    CHECK(run({"partition", "--config", path}).code == 1);
    std::remove(path.c_str());
}

TEST_CASE("sample is reproducible and round-trips through CSV") {
    std::vector<std::string> args = {"sample", "--domain", R"({"rect":[0,0,1,1]})", "--bc", bc22,
                                     "--count", "200", "--seed", "5"};
    auto a = run(args), b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    auto j = json::parse(a.out);
    CHECK(j["seed"] == 5);
    CHECK(j["method"] == "exact-sequential");
    int total = 0;
    for (const auto& h : j["histogram"]) total += h["count"].get<int>();
    CHECK(total == 200);

    const std::string csv = "test_cli_paths.csv";
    args.insert(args.end(), {"--csv", csv});
    REQUIRE(run(args).code == 0);
    std::ifstream in(csv);
    auto paths = isinglab::cli::read_paths_csv(in);
    CHECK(paths.size() == 200);
    for (const auto& p : paths) CHECK(p.steps.back() == isinglab::DualEdge{1, 4});
    std::remove(csv.c_str());
}

TEST_CASE("every subcommand passes its selftest") {
    for (const char* c : {"graphs", "enumerate", "partition", "identity-check", "explore", "observable",
                          "martingale-audit", "sholo-check", "polymer-table", "sample", "driving", "kappa",
                          "scaling-compare"}) {
        CAPTURE(c);
        auto r = run({c, "--selftest"});
        CHECK(r.code == 0);
        CHECK(json::parse(r.out)["result"] == "PASS");
    }
}

TEST_CASE("help exits 0") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"kappa", "--help"}).code == 0);
}
