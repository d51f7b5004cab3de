#include "doctest.h"
#include "toruslab/harness.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace toruslab::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("toruslab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_in(const fs::path& out, std::vector<std::string> args) {
    ::setenv("TORUSLAB_OUT", out.c_str(), 1);
    args.insert(args.begin(), "--quiet");
    const int rc = run_cli(args);
    ::unsetenv("TORUSLAB_OUT");
    return rc;
}

}  // namespace

TEST_SUITE("cli_harness") {

TEST_CASE("config files and overrides") {
    const fs::path dir = scratch("config");
    {
        std::ofstream f(dir / "a.ini");
        f << "[run]\nseed = 11\nworkers = 3\n\n[equidist]\nfamily = cubic\n";
    }
    Config c = Config::defaults();
    c.load_file(dir / "a.ini");
    CHECK(c.get_int("run.seed") == 11);
    CHECK(c.get("equidist.family") == "cubic");
    c.set_assignment("equidist.density=2.5");
    CHECK(c.get_double("equidist.density") == 2.5);
    CHECK(c.get_list("building.primes") == std::vector<std::string>{"5", "7", "11", "13"});
    CHECK_THROWS_AS(c.set("run.nope", "1"), ConfigError);
    CHECK_THROWS_AS(c.set_assignment("run.seed"), ConfigError);
    c.set("run.seed", "12x");
    CHECK_THROWS_AS(c.get_int("run.seed"), ConfigError);
    c.set("run.cache", "maybe");
    CHECK_THROWS_AS(c.get_bool("run.cache"), ConfigError);
    {
        std::ofstream f(dir / "b.ini");
        f << "[zeta]\nnot_a_key = 3\n";
    }
    CHECK_THROWS_AS(c.load_file(dir / "b.ini"), ConfigError);
    {
        std::ofstream f(dir / "c.ini");
        f << "[zeta\nB = 3\n";
    }
    CHECK_THROWS_AS(c.load_file(dir / "c.ini"), ConfigError);
    CHECK(c.section("disc") == json{{"poly", "x^3 - x - 1"}});
}

TEST_CASE("digests and csv quoting") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(CsvWriter::quote("plain") == "plain");
    CHECK(CsvWriter::quote("a,b") == "\"a,b\"");
    CHECK(CsvWriter::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(CsvWriter::quote("two\nlines") == "\"two\nlines\"");
    CsvWriter w({"x", "y"});
    w.row({"1", "2,3"});
    CHECK(w.str() == "x,y\r\n1,\"2,3\"\r\n");
    CHECK_THROWS(w.row({"1"}));
    CHECK(fmt_real(0.1) == "0.1");
    CHECK(std::stod(fmt_real(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("cache hits, busts and corruption") {
    const fs::path dir = scratch("cache");
    Logger log(true);
    Cache cache(dir, true, log);
    int computed = 0;
    auto f = [&] {
        ++computed;
        return json{{"v", 1.25}};
    };
    const json k1 = {{"op", "t"}, {"x", 1}}, k2 = {{"op", "t"}, {"x", 2}};
    CHECK(cache.get_or_compute(k1, f) == json{{"v", 1.25}});
    CHECK(cache.get_or_compute(k1, f) == json{{"v", 1.25}});
    CHECK(computed == 1);
    CHECK(cache.hits() == 1);
    cache.get_or_compute(k2, f);
    CHECK(computed == 2);
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ofstream out(e.path(), std::ios::binary | std::ios::trunc);
        out << R"({"key":{"op":"t","x":1},"value":{"v":9},"digest":"00"})";
    }
    CHECK(cache.get_or_compute(k1, f) == json{{"v", 1.25}});
    CHECK(computed == 3);
    Cache off(dir, false, log);
    off.get_or_compute(k1, f);
    CHECK(computed == 4);
    CHECK(off.hits() == 0);
}

TEST_CASE("worker pool merges by index") {
    for (std::size_t w : {1, 2, 5}) {
        const auto v = parallel_map<std::size_t>(37, w, [](std::size_t i) { return i * i; });
        REQUIRE(v.size() == 37);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == i * i);
    }
    CHECK_THROWS_WITH(parallel_map<int>(5, 3,
                                        [](std::size_t i) -> int {
                                            if (i >= 2) throw std::runtime_error("item " + std::to_string(i));
                                            return 0;
                                        }),
                      "item 2");
}

TEST_CASE("subcommands and exit codes") {
    const fs::path out = scratch("cli");
    CHECK(run_in(out, {"classes", "--poly", "x^3 - x - 1"}) == 0);
    const std::string csv = slurp(out / "classes" / "classes.csv");
    CHECK(csv.find("x^3 - x - 1,-23,0,0,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(run_in(out, {"classes", "--poly", "x^3 - x - 1"}) == 0);
    CHECK(slurp(out / "classes" / "classes.csv") == csv);

    CHECK(run_in(out, {"building", "--prime", "7", "--poly", "x^2 - x - 1", "--conjugate", "1,0;0,7"}) == 0);
    const std::string row = slurp(out / "building" / "local.csv");
    CHECK(row.find("\n7,x^2 - x - 1,\"1,0;0,7\",49,1,") != std::string::npos);

    CHECK(run_in(out, {"--set", "run.bogus=1", "disc"}) == 2);
    CHECK(run_in(out, {"disc", "--poly", "x^2 +"}) == 2);
    CHECK(run_in(out, {"nosuch"}) == 2);
    CHECK(run_in(out, {"classes", "--poly", "x^2 - 12", "--cap", "1", "--no-cache"}) == 3);
    CHECK(run_in(out, {"report"}) == 0);
    const std::string rep = slurp(out / "report" / "report.csv");
    CHECK(rep.find("classes,1,1,\r\n") != std::string::npos);
    {
        std::ofstream f(out / "classes" / "classes.csv", std::ios::app);
        f << "tampered\n";
    }
    CHECK(run_in(out, {"report"}) == 1);
}

TEST_CASE("determinism across worker counts and cache state") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const std::vector<std::string> cmd{"equidist", "--family", "quadratic", "--kmax", "200", "--seed", "7"};
    auto with = [&](std::vector<std::string> extra) {
        std::vector<std::string> v = extra;
        v.insert(v.end(), cmd.begin(), cmd.end());
        return v;
    };
    REQUIRE(run_in(a, with({"--workers", "1"})) == 0);
    REQUIRE(run_in(b, with({"--workers", "3", "--no-cache"})) == 0);
    for (const char* f : {"equidist.csv", "summary.json", "manifest.json"})
        CHECK(slurp(a / "equidist" / f) == slurp(b / "equidist" / f));
    const std::string first = slurp(a / "equidist" / "equidist.csv");
    REQUIRE(run_in(a, with({"--workers", "2"})) == 0);
    CHECK(slurp(a / "equidist" / "equidist.csv") == first);
}

}  // TEST_SUITE
