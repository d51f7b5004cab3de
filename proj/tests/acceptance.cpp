#include "oracles.hpp"
#include "toruslab/correspondence.hpp"
#include "toruslab/harness.hpp"
#include "toruslab/zeta_lfn.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

using namespace toruslab;
using harness::json;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double census_seconds = 600;
constexpr double regulator_rel = 1e-9;
constexpr double cnf_quadratic = 0.02, cnf_cubic = 0.05;
constexpr double hecke_quadratic = 1e-6, hecke_cubic = 1e-4;
constexpr double equidist_decrease = 0.5;
constexpr double ray_slope_factor = -0.05;
constexpr double tate_tol = 1e-12;
constexpr double quad_slope_lo = 0.35, quad_slope_hi = 0.65, cubic_slope_lo = 0.3, cubic_slope_hi = 0.7;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Table = std::vector<std::map<std::string, std::string>>;

Table read_csv(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    std::vector<std::vector<std::string>> rows(1);
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quoted) {
            if (c == '"' && i + 1 < s.size() && s[i + 1] == '"')
                field += '"', ++i;
            else if (c == '"')
                quoted = false;
            else
                field += c;
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            rows.back().push_back(field);
            field.clear();
        } else if (c == '\r') {
        } else if (c == '\n') {
            rows.back().push_back(field);
            field.clear();
            rows.emplace_back();
        } else {
            field += c;
        }
    }
    rows.pop_back();
    Table t;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        std::map<std::string, std::string> m;
        for (std::size_t k = 0; k < rows[0].size(); ++k) m[rows[0][k]] = rows[r].at(k);
        t.push_back(m);
    }
    return t;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double num(const std::string& s) { return std::stod(s); }

struct Runner {
    fs::path out;
    void operator()(std::vector<std::string> args, const fs::path& dir = {}) const {
        ::setenv("TORUSLAB_OUT", (dir.empty() ? out : dir).c_str(), 1);
        args.insert(args.begin(), "--quiet");
        const int rc = harness::run_cli(args);
        if (rc != 0) throw std::runtime_error(fmt::format("toruslab {} exited with {}", args.at(1), rc));
    }
};

// ---------------------------------------------------------------------------

Outcome census() {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t polys = 0, bad = 0, classes = 0, roundtrip_bad = 0;
    std::string first_bad;
    auto check = [&](const MonicIntPoly& P, long height) {
        ClassRegistry reg(make_field(P));
        const auto bf = brute_force_conjugacy(reg, height);
        const auto packets = enumerate_coarse_classes(reg);
        const std::size_t e = class_count(packets);
        ++polys;
        classes += e;
        if (bf.representatives.size() != e || !bf.consistent || bf.components != e) {
            ++bad;
            if (first_bad.empty()) first_bad = poly_string(P);
        }
        for (const auto& pk : packets)
            for (const auto& c : pk.classes) roundtrip_bad += matrix_to_class(reg, class_to_matrix(c)).id != c.id;
    };
    for (long a1 : {0L, -1L})
        for (long a0 = -101; a0 <= 101; ++a0) {
            const long disc = a1 * a1 - 4 * a0;
            if (std::labs(disc) > 400) continue;
            MonicIntPoly P;
            try {
                P = make_poly({Int(a0), Int(a1)});
            } catch (const std::invalid_argument&) {
                continue;
            }
            check(P, std::max(30L, std::labs(disc) / 4 + 1));
        }
    for (long a2 : {-1L, 0L, 1L})
        for (long a1 = -6; a1 <= 6; ++a1)
            for (long a0 = -6; a0 <= 6; ++a0) {
                const long disc = oracle::disc_closed_form({a0, a1, a2});
                if (std::labs(disc) > 200 || disc == 0) continue;
                MonicIntPoly P;
                try {
                    P = make_poly({Int(a0), Int(a1), Int(a2)});
                } catch (const std::invalid_argument&) {
                    continue;
                }
                check(P, 6);
            }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {bad == 0 && roundtrip_bad == 0 && secs <= census_seconds,
            fmt::format("{} polynomials, {} classes, {} count mismatches{}, {} roundtrip failures, {:.0f}s (limit {:.0f}s)", polys,
                        classes, bad, first_bad.empty() ? "" : " (first " + first_bad + ")", roundtrip_bad, secs, census_seconds)};
}

Outcome regulators() {
    double worst = 0;
    std::size_t count = 0;
    for (long d : {2, 3, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 17, 18, 19, 20, 21, 22, 23, 24}) {
        const double got = unit_group(order_from_poly(make_field(make_poly({Int(-d), Int(0)})))).regulator;
        const double ref = static_cast<double>(oracle::quad_regulator(0, -d, 1000));
        worst = std::max(worst, std::abs(got - ref) / ref);
        ++count;
    }
    for (const std::vector<oracle::i64>& a : std::vector<std::vector<oracle::i64>>{
             {-1, -2, 1}, {-1, -3, 0}, {1, -3, -1}, {-1, -4, -1}, {-1, -4, 0}}) {
        const double got = unit_group(order_from_poly(make_field(make_poly({Int(a[0]), Int(a[1]), Int(a[2])})))).regulator;
        const double ref = static_cast<double>(oracle::cubic_regulator(a, 5));
        worst = std::max(worst, std::abs(got - ref) / ref);
        ++count;
    }
    return {worst <= regulator_rel, fmt::format("{} orders, worst relative difference {:.2e} (limit {:.0e})", count, worst, regulator_rel)};
}

Outcome class_number_formula(const Runner& run) {
    struct Case {
        const char* poly;
        long B;
        double tol;
    };
    bool ok = true;
    std::string detail;
    for (const Case& c : {Case{"x^2 - x - 1", 1000000, cnf_quadratic}, Case{"x^2 + 1", 1000000, cnf_quadratic},
                          Case{"x^3 - x - 1", 100000, cnf_cubic}}) {
        run({"zeta", "--poly", c.poly, "--B", std::to_string(c.B)});
        const json r = read_json(run.out / "zeta" / "cnf.json");
        const double rel = r["relerr"];
        ok = ok && rel <= c.tol;
        detail += fmt::format("{}{} B={} relerr {:.2e} (limit {})", detail.empty() ? "" : "; ", c.poly, c.B, rel, c.tol);
    }
    return {ok, detail};
}

Outcome hecke(const Runner& run) {
    run({"hecke"});
    const auto t = read_csv(run.out / "hecke" / "hecke.csv");
    std::size_t nq = 0, nc = 0;
    double wq = 0, wc = 0;
    for (const auto& r : t) {
        const double e = num(r.at("relerr"));
        if (r.at("n") == "2")
            ++nq, wq = std::max(wq, e);
        else
            ++nc, wc = std::max(wc, e);
    }
    return {nq >= 10 && nc >= 5 && wq <= hecke_quadratic && wc <= hecke_cubic,
            fmt::format("{} quadratic classes worst {:.2e} (limit {:.0e}); {} cubic classes worst {:.2e} (limit {:.0e})", nq, wq,
                        hecke_quadratic, nc, wc, hecke_cubic)};
}

std::pair<double, double> decile_means(const Table& t) {
    std::vector<std::pair<double, double>> v;
    for (const auto& r : t) v.emplace_back(std::abs(num(r.at("disc"))), num(r.at("maxdev")));
    std::sort(v.begin(), v.end());
    const std::size_t m = std::max<std::size_t>(1, (v.size() + 9) / 10);
    double a = 0, b = 0;
    for (std::size_t i = 0; i < m; ++i) a += v[i].second / double(m), b += v[v.size() - 1 - i].second / double(m);
    return {a, b};
}

Outcome equidistribution(const Runner& run) {
    run({"equidist", "--family", "cubic", "--count", "12"});
    const auto [cf, cl] = decile_means(read_csv(run.out / "equidist" / "equidist.csv"));
    run({"equidist", "--family", "quadratic"});
    const auto t = read_csv(run.out / "equidist" / "equidist.csv");
    double dmin = INFINITY, dmax = 0;
    for (const auto& r : t) dmin = std::min(dmin, num(r.at("disc"))), dmax = std::max(dmax, num(r.at("disc")));
    const auto [first, last] = decile_means(t);
    const double dec = 1 - last / first;
    return {dec >= equidist_decrease && dmin >= 100 && dmax <= 1e6 && dmax >= 1e5,
            fmt::format("{} quadratic packets, disc {:.0f}..{:.0f}, decile means {:.4f} -> {:.4f}, decrease {:.0f}% (need {:.0f}%); "
                        "cubic k<=200 reported: {:.4f} -> {:.4f}",
                        t.size(), dmin, dmax, first, last, 100 * dec, 100 * equidist_decrease, cf, cl)};
}

Outcome mass_exponents(const Runner& run) {
    run({"equidist", "--mass"});
    const json e = read_json(run.out / "equidist" / "exponents.json");
    const double n = e["n"];
    const double clo = e["cusp"]["lo"], chi = e["cusp"]["hi"], blo = e["ball"]["lo"], bhi = e["ball"]["hi"];
    const bool cusp = clo <= -n && -n <= chi;
    const bool ball = blo <= n && n <= bhi && !(blo <= n - 1 && n - 1 <= bhi);
    return {cusp && ball && e["samples"].get<double>() >= 1e5,
            fmt::format("{} (disc {}), {} samples: cusp slope {:.3f} [{:.3f}, {:.3f}] vs {}; ball slope {:.3f} [{:.3f}, {:.3f}] vs {}",
                        e["poly"].get<std::string>(), e["disc"].get<std::string>(), e["samples"].get<std::size_t>(),
                        e["cusp"]["slope"].get<double>(), clo, chi, -n, e["ball"]["slope"].get<double>(), blo, bhi, n)};
}

Outcome building_lemmas(const Runner& run) {
    run({"building", "--lemmas"});
    bool ok = true;
    std::string detail;
    for (const auto& r : read_csv(run.out / "building" / "lemmas.csv")) {
        const long cases = std::stol(r.at("cases")), passed = std::stol(r.at("passed"));
        ok = ok && cases >= 100 && passed == cases;
        detail += fmt::format("{}{} {}/{}", detail.empty() ? "" : ", ", r.at("lemma"), passed, cases);
    }
    return {ok, detail};
}

Outcome rays(const Runner& run) {
    run({"building", "--rays"});
    bool ok = true;
    std::string detail;
    for (const auto& r : read_csv(run.out / "building" / "ray_fits.csv")) {
        const double bound = ray_slope_factor * std::log(7.0);
        const double slope = num(r.at("slope_r_ge_2")), step = num(r.at("max_step_r_ge_2"));
        ok = ok && slope <= bound && step <= bound;
        detail += fmt::format("{}n={} slope {:.4f}, largest step {:.4f} (bound {:.4f})", detail.empty() ? "" : "; ", r.at("n"),
                              slope, step, bound);
    }
    return {ok, detail};
}

Outcome tate(const Runner& run) {
    run({"building", "--tate"});
    double rel = 0, eps = 0;
    std::size_t points = 0;
    for (const auto& r : read_csv(run.out / "building" / "tate.csv")) {
        rel = std::max(rel, num(r.at("max_relerr")));
        eps = std::max(eps, num(r.at("max_eps_deviation")));
        points = std::stoul(r.at("points"));
    }
    return {rel <= tate_tol && eps <= tate_tol && points >= 10,
            fmt::format("{}-point grid: max relerr {:.2e}, max ||eps|-1| {:.2e} (limit {:.0e})", points, rel, eps, tate_tol)};
}

Outcome characters(const Runner& run) {
    run({"zeta", "--characters"});
    const auto t = read_csv(run.out / "zeta" / "characters.csv");
    const json j = read_json(run.out / "zeta" / "characters.json");
    std::string series;
    for (const auto& r : t) series += fmt::format("{}{}:{:.3f}", series.empty() ? "" : " ", r.at("disc"), num(r.at("max_abs_ratio")));
    const bool generated = t.size() >= 2 && j.contains("log_log_slope");
    return {generated, fmt::format("informational: {} fields, log-log slope {:.3f} [{:.3f}, {:.3f}], {}/{} decreasing steps; {}", t.size(),
                                   j.value("log_log_slope", NAN), j.value("lo", NAN), j.value("hi", NAN),
                                   j["decreasing_steps"].get<std::size_t>(), j["steps"].get<std::size_t>(), series)};
}

Outcome volume_slopes(const Runner& run) {
    run({"zeta", "--trend", "--family", "quadratic"});
    const json q = read_json(run.out / "zeta" / "trend.json");
    run({"zeta", "--trend", "--family", "cubic"});
    const json c = read_json(run.out / "zeta" / "trend.json");
    const bool ok = quad_slope_lo <= q["lo"].get<double>() && q["hi"].get<double>() <= quad_slope_hi &&
                    cubic_slope_lo <= c["lo"].get<double>() && c["hi"].get<double>() <= cubic_slope_hi;
    return {ok, fmt::format("quadratic {:.3f} [{:.3f}, {:.3f}] in [{}, {}]; cubic {:.3f} [{:.3f}, {:.3f}] in [{}, {}]",
                            q["slope"].get<double>(), q["lo"].get<double>(), q["hi"].get<double>(), quad_slope_lo, quad_slope_hi,
                            c["slope"].get<double>(), c["lo"].get<double>(), c["hi"].get<double>(), cubic_slope_lo, cubic_slope_hi)};
}

Outcome determinism(const Runner& run) {
    const std::vector<std::vector<std::string>> experiments{
        {"equidist", "--family", "quadratic", "--kmax", "20000", "--count", "12"},
        {"hecke"},
        {"building", "--lemmas"},
        {"zeta", "--trend", "--family", "quadratic", "--set", "zeta.count=15"},
        {"packets", "--poly", "x^3 - 4*x - 1", "--samples", "40"},
    };
    std::size_t compared = 0;
    std::vector<std::string> differing;
    for (const auto& ex : experiments) {
        std::vector<fs::path> dirs;
        for (const char* w : {"1", "3"}) {
            const fs::path d = run.out / "determinism" / ex[0] / w;
            fs::remove_all(d);
            auto args = ex;
            args.insert(args.end(), {"--workers", w, "--no-cache"});
            run(args, d);
            dirs.push_back(d / ex[0]);
        }
        for (const auto& e : fs::directory_iterator(dirs[0])) {
            ++compared;
            if (slurp(e.path()) != slurp(dirs[1] / e.path().filename())) differing.push_back(ex[0] + "/" + e.path().filename().string());
        }
    }
    std::string diff;
    for (const auto& d : differing) diff += " " + d;
    return {differing.empty() && compared > 0,
            fmt::format("{} experiments, {} artifacts compared between 1 and 3 workers, {} differ{}", experiments.size(), compared,
                        differing.size(), diff)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string out = (fs::temp_directory_path() / "toruslab_acceptance").string();
    std::vector<int> only;
    app.add_option("--out", out, "scratch output directory");
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    fs::remove_all(out);
    fs::create_directories(out);
    const Runner run{out};

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"class census against brute-force conjugacy", census},
        {"regulators against unit search", regulators},
        {"class number formula", [&] { return class_number_formula(run); }},
        {"torus integral of E_f against the unfolded sum", [&] { return hecke(run); }},
        {"equidistribution trend", [&] { return equidistribution(run); }},
        {"cusp and ball mass exponents", [&] { return mass_exponents(run); }},
        {"local building inequalities", [&] { return building_lemmas(run); }},
        {"local integral decay along apartment rays", [&] { return rays(run); }},
        {"local functional equation", [&] { return tate(run); }},
        {"class character sums", [&] { return characters(run); }},
        {"volume against discriminant", [&] { return volume_slopes(run); }},
        {"determinism across worker counts", [&] { return determinism(run); }},
    };
    std::size_t failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        fmt::print("criterion {:2d} {} | {} | {:.1f}s | {}\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, secs, o.detail);
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
