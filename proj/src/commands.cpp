#include "toruslab/correspondence.hpp"
#include "toruslab/harness.hpp"
#include "toruslab/local_building.hpp"
#include "toruslab/zeta_lfn.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

namespace toruslab::harness {

namespace fs = std::filesystem;

namespace {

struct Ctx {
    Config cfg;
    Logger log;
    Cache cache;
    fs::path out;
    std::size_t workers;
    std::uint64_t seed;

    Ctx(Config c, const fs::path& o)
        : cfg(std::move(c)),
          log(cfg.get_bool("run.quiet")),
          cache(o / "cache", cfg.get_bool("run.cache"), log),
          out(o),
          workers(static_cast<std::size_t>(std::max(1L, cfg.get_int("run.workers")))),
          seed(static_cast<std::uint64_t>(cfg.get_int("run.seed"))) {}

    json manifest_config(const std::string& section) const {
        json j = cfg.section(section);
        j["seed"] = cfg.get("run.seed");
        return j;
    }
};

MonicIntPoly poly_arg(const std::string& s) {
    try {
        return parse_poly(s);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("bad polynomial '{}': {}", s, e.what()));
    }
}

std::string zstr(const Int& x) { return x.get_str(); }

std::string hnf_string(const Lattice& L) {
    std::string s = "[";
    for (std::size_t i = 0; i < L.hnf.size(); ++i) {
        s += i ? ";" : "";
        for (std::size_t j = 0; j < L.hnf[i].size(); ++j) s += (j ? "," : "") + zstr(L.hnf[i][j]);
    }
    s += "]";
    if (L.den != 1) s += "/" + zstr(L.den);
    return s;
}

std::string matrix_string(const ZMat& m) {
    std::string s;
    for (std::size_t i = 0; i < m.size(); ++i) {
        s += i ? ";" : "";
        for (std::size_t j = 0; j < m[i].size(); ++j) s += (j ? "," : "") + zstr(m[i][j]);
    }
    return s;
}

QMat parse_rat_matrix(const std::string& s) {
    QMat m;
    std::stringstream rows(s);
    for (std::string row; std::getline(rows, row, ';');) {
        std::vector<Rat> r;
        std::stringstream cells(row);
        for (std::string c; std::getline(cells, c, ',');) {
            c.erase(std::remove(c.begin(), c.end(), ' '), c.end());
            try {
                Rat q(c);
                q.canonicalize();
                r.push_back(q);
            } catch (const std::invalid_argument&) {
                throw ConfigError("bad matrix entry '" + c + "'");
            }
        }
        m.push_back(std::move(r));
    }
    for (const auto& r : m)
        if (r.size() != m.size()) throw ConfigError("matrix '" + s + "' is not square");
    return m;
}

// ---------------------------------------------------------------------------

int cmd_disc(Ctx& c) {
    const auto P = poly_arg(c.cfg.get("disc.poly"));
    ClassRegistry reg(make_field(P));
    CsvWriter csv({"poly", "order_disc", "packet_id", "class_id", "orbit_disc", "archimedean", "regulator"});
    const auto packets = enumerate_coarse_classes(reg);
    for (std::size_t k = 0; k < packets.size(); ++k)
        for (const auto& cl : packets[k].classes) {
            const auto d = orbit_discriminant(reg, cl.id);
            csv.row({poly_string(P), zstr(packets[k].order.disc), std::to_string(k), std::to_string(cl.id), zstr(d.finite),
                     fmt_real(d.archimedean), fmt_real(reg.info(cl.id).regulator)});
        }
    RunDir run(c.out, "disc", c.manifest_config("disc"));
    run.write("disc.csv", csv.str());
    run.finish();
    return 0;
}

json class_rows(Ctx& c, const MonicIntPoly& P, std::size_t cap) {
    const json key = {{"op", "classes"}, {"poly", poly_string(P)}, {"cap", cap}, {"v", 1}};
    return c.cache.get_or_compute(key, [&] {
        ClassRegistry reg(make_field(P));
        json rows = json::array();
        const auto packets = enumerate_coarse_classes(reg, cap);
        for (std::size_t k = 0; k < packets.size(); ++k)
            for (const auto& cl : packets[k].classes) {
                const auto m = class_to_matrix(cl);
                const bool rt = matrix_to_class(reg, m).id == cl.id;
                rows.push_back({poly_string(P), zstr(packets[k].order.disc), std::to_string(k), std::to_string(cl.id),
                                hnf_string(cl.representative.lat), matrix_string(m.m), rt ? "true" : "false"});
            }
        return rows;
    });
}

int cmd_classes(Ctx& c) {
    const auto P = poly_arg(c.cfg.get("classes.poly"));
    const json rows = class_rows(c, P, static_cast<std::size_t>(c.cfg.get_int("classes.cap")));
    CsvWriter csv({"poly", "order_disc", "packet_id", "class_id", "class_hnf", "matrix", "roundtrip"});
    for (const auto& r : rows) csv.row(r.get<std::vector<std::string>>());
    RunDir run(c.out, "classes", c.manifest_config("classes"));
    run.write("classes.csv", csv.str());
    run.finish();
    c.log.info(fmt::format("{} classes", rows.size()));
    return 0;
}

std::string f64_bytes(const std::vector<double>& v) {
    std::string out(v.size() * 8, '\0');
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(v[i]);
        for (int b = 0; b < 8; ++b) out[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((u >> (8 * b)) & 0xff);
    }
    return out;
}

int cmd_packets(Ctx& c) {
    const auto P = poly_arg(c.cfg.get("packets.poly"));
    ClassRegistry reg(make_field(P));
    const long mc = c.cfg.get_int("packets.samples");
    const SampleScheme scheme = mc > 0 ? SampleScheme{SampleScheme::monte_carlo, static_cast<std::size_t>(mc), c.seed}
                                       : SampleScheme{SampleScheme::grid, static_cast<std::size_t>(c.cfg.get_int("packets.grid")), c.seed};
    RunDir run(c.out, "packets", c.manifest_config("packets"));
    CsvWriter csv({"poly", "order_disc", "packet_id", "class_id", "regulator", "samples", "file"});
    const auto packets = enumerate_coarse_classes(reg);
    for (std::size_t k = 0; k < packets.size(); ++k)
        for (const auto& cl : packets[k].classes) {
            const auto orbit = orbit_of(reg, cl.id);
            std::vector<double> flat;
            const std::size_t count = sample_count(orbit, scheme);
            for (std::size_t i = 0; i < count; ++i) {
                const auto e = sample_point(orbit, parallelepiped_point(orbit, scheme, i));
                for (Eigen::Index a = 0; a < e.basis.rows(); ++a)
                    for (Eigen::Index b = 0; b < e.basis.cols(); ++b) flat.push_back(e.basis(a, b));
            }
            const std::string file = fmt::format("orbit_{}_{}.f64", k, cl.id);
            run.write(file, f64_bytes(flat));
            run.write_json(file + ".json", {{"orbit_id", cl.id},
                                            {"packet_id", k},
                                            {"poly", poly_string(P)},
                                            {"seed", scheme.seed},
                                            {"scheme", scheme.kind == SampleScheme::grid ? "grid" : "monte_carlo"},
                                            {"scheme_count", scheme.count},
                                            {"samples", count},
                                            {"n", P.n},
                                            {"layout", "samples x n x n binary64 little-endian row-major, rows are basis vectors"}});
            csv.row({poly_string(P), zstr(packets[k].order.disc), std::to_string(k), std::to_string(cl.id),
                     fmt_real(orbit.regulator), std::to_string(count), file});
        }
    run.write("packets.csv", csv.str());
    run.finish();
    return 0;
}

// ---------------------------------------------------------------------------

std::vector<TestFunction> equidist_suite(int n) {
    std::vector<TestFunction> fs{TestFunction::make_gaussian(n, 0.75), TestFunction::make_gaussian(n, 1.0),
                                 TestFunction::make_gaussian(n, 1.5)};
    const double centers[3][3] = {{0.6, 0.6, 0.6}, {1.3, 0.2, 0.4}, {0.4, 1.8, 0.3}};
    const double eps[3] = {0.3, 0.35, 0.4};
    for (int k = 0; k < 3; ++k) {
        RVec x(n);
        for (int i = 0; i < n; ++i) x(i) = centers[k][i];
        fs.push_back(TestFunction::make_bump(x, eps[k]));
    }
    return fs;
}

std::vector<MonicIntPoly> equidist_family(const Config& cfg) {
    const std::string fam = cfg.get("equidist.family");
    const long count = cfg.get_int("equidist.count");
    long kmax = cfg.get_int("equidist.kmax");
    std::vector<MonicIntPoly> out;
    if (fam == "quadratic") {
        if (kmax == 0) kmax = 249999;
        const long kmin = cfg.get_int("equidist.kmin");
        if (kmin < 1 || kmax < kmin || count < 1) throw ConfigError("equidist: need 1 <= kmin <= kmax and count >= 1");
        long last = 0;
        for (long i = 0; i < count; ++i) {
            const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
            long k = std::max(last + 1, std::lround(std::exp(std::log(double(kmin)) + t * std::log(double(kmax) / double(kmin)))));
            for (;; ++k) {
                const long sq = std::lround(std::sqrt(1.0 + 4.0 * double(k)));
                if (sq * sq != 1 + 4 * k) break;
            }
            if (k > kmax && !out.empty()) break;
            out.push_back(make_poly({Int(-k), Int(-1)}));
            last = k;
        }
    } else if (fam == "cubic") {
        if (kmax == 0) kmax = 200;
        for (const auto& o : cubic_family(kmax, static_cast<std::size_t>(count))) out.push_back(o.K->poly());
    } else {
        throw ConfigError("equidist.family must be quadratic or cubic");
    }
    return out;
}

SampleScheme equidist_scheme(const TorusOrbitRep& o, double density, std::uint64_t seed) {
    const double rank = static_cast<double>(o.unit_logs.size());
    const double per_axis = density * std::pow(o.regulator, 1.0 / std::max(1.0, rank));
    return {SampleScheme::grid, std::max<std::size_t>(rank > 1 ? 4 : 8, static_cast<std::size_t>(std::ceil(per_axis))), seed};
}

json equidist_row(Ctx& c, const MonicIntPoly& P, double density) {
    const json key = {{"op", "equidist.row"}, {"poly", poly_string(P)}, {"density", fmt_real(density)}, {"seed", c.seed}, {"v", 1}};
    return c.cache.get_or_compute(key, [&] {
        ClassRegistry reg(make_field(P));
        const auto o = order_from_poly(reg.field());
        const auto packet = packet_orbits(o, reg);
        const auto fs = equidist_suite(P.n);
        const auto st = weyl_averages(packet, fs, equidist_scheme(packet.front(), density, c.seed));
        json devs = json::array();
        double mx = 0;
        for (std::size_t j = 0; j < fs.size(); ++j) {
            const double d = std::abs(st[j].mean - siegel_rhs(fs[j]));
            devs.push_back(d);
            mx = std::max(mx, d);
        }
        return json{{"poly", poly_string(P)}, {"disc", zstr(o.disc)}, {"h", packet.size()}, {"regulator", packet.front().regulator},
                    {"samples", st.front().samples}, {"dev", devs}, {"maxdev", mx}};
    });
}

struct DecileTrend {
    double first = 0, last = 0, decrease = 0;
};

DecileTrend decile_trend(std::vector<std::pair<double, double>> disc_dev) {
    std::sort(disc_dev.begin(), disc_dev.end());
    const std::size_t m = std::max<std::size_t>(1, (disc_dev.size() + 9) / 10);
    DecileTrend t;
    for (std::size_t i = 0; i < m; ++i) {
        t.first += disc_dev[i].second / double(m);
        t.last += disc_dev[disc_dev.size() - 1 - i].second / double(m);
    }
    t.decrease = t.first > 0 ? 1.0 - t.last / t.first : 0.0;
    return t;
}

int cmd_mass(Ctx& c);

int cmd_equidist(Ctx& c) {
    if (c.cfg.get_bool("equidist.mass")) return cmd_mass(c);
    const auto polys = equidist_family(c.cfg);
    const double density = c.cfg.get_double("equidist.density");
    const auto rows = parallel_map<json>(polys.size(), c.workers, [&](std::size_t i) {
        auto r = equidist_row(c, polys[i], density);
        c.log.info(fmt::format("{} maxdev {:.4f}", r["poly"].get<std::string>(), r["maxdev"].get<double>()));
        return r;
    });
    const auto fs = equidist_suite(polys.front().n);
    std::vector<std::string> header{"poly", "disc", "h", "regulator", "samples"};
    for (std::size_t j = 0; j < fs.size(); ++j) header.push_back(fmt::format("dev{}", j + 1));
    header.push_back("maxdev");
    CsvWriter csv(header);
    std::vector<std::pair<double, double>> trend;
    for (const auto& r : rows) {
        std::vector<std::string> f{r["poly"], r["disc"], std::to_string(r["h"].get<std::size_t>()), fmt_real(r["regulator"]),
                                   std::to_string(r["samples"].get<std::size_t>())};
        for (const auto& d : r["dev"]) f.push_back(fmt_real(d));
        f.push_back(fmt_real(r["maxdev"]));
        csv.row(f);
        trend.emplace_back(std::stod(r["disc"].get<std::string>()), r["maxdev"].get<double>());
    }
    const auto t = decile_trend(trend);
    json suite = json::array();
    for (const auto& f : fs) suite.push_back(f.describe());
    RunDir run(c.out, "equidist", c.manifest_config("equidist"));
    run.write("equidist.csv", csv.str());
    run.write_json("summary.json", {{"family", c.cfg.get("equidist.family")},
                                    {"packets", rows.size()},
                                    {"suite", suite},
                                    {"first_decile_mean", t.first},
                                    {"last_decile_mean", t.last},
                                    {"decrease", t.decrease},
                                    {"threshold", 0.5},
                                    {"pass", t.decrease >= 0.5}});
    run.finish();
    c.log.info(fmt::format("decile means {:.4f} -> {:.4f} ({:.0f}% decrease)", t.first, t.last, 100 * t.decrease));
    return 0;
}

std::vector<double> geometric(double lo, double hi, std::size_t k) {
    std::vector<double> v;
    for (std::size_t i = 0; i < k; ++i) v.push_back(lo * std::pow(hi / lo, k == 1 ? 0.0 : double(i) / double(k - 1)));
    return v;
}

int cmd_mass(Ctx& c) {
    Config cubic = c.cfg;
    cubic.set("equidist.family", "cubic");
    const auto polys = equidist_family(cubic);
    const auto P = polys.back();
    ClassRegistry reg(make_field(P));
    const auto o = order_from_poly(reg.field());
    const auto packet = packet_orbits(o, reg);
    const std::size_t total = static_cast<std::size_t>(c.cfg.get_int("equidist.mass_samples"));
    const std::size_t per = (total + packet.size() - 1) / packet.size();
    const RMat x0 = RMat::Identity(P.n, P.n);
    struct Stat {
        double ht, dist;
    };
    std::vector<std::vector<Stat>> chunks = parallel_map<std::vector<Stat>>(packet.size(), c.workers, [&](std::size_t k) {
        const SampleScheme sc{SampleScheme::monte_carlo, per, sample_seed(c.seed, k)};
        std::vector<Stat> s;
        for (std::size_t i = 0; i < per; ++i) {
            const auto e = sample_point(packet[k], parallelepiped_point(packet[k], sc, i));
            s.push_back({cusp_height(e.basis), lattice_distance(e.basis, x0)});
        }
        return s;
    });
    std::vector<double> ht, dist;
    for (const auto& ch : chunks)
        for (const auto& s : ch) {
            ht.push_back(s.ht);
            dist.push_back(s.dist);
        }
    const std::size_t floor = static_cast<std::size_t>(c.cfg.get_int("equidist.mass_floor"));
    const std::size_t pts = static_cast<std::size_t>(c.cfg.get_int("equidist.mass_points"));
    if (ht.size() < 10 * floor) throw ConfigError("equidist.mass_samples too small for mass_floor");
    std::vector<double> hs = ht, ds = dist;
    std::sort(hs.begin(), hs.end(), std::greater<>());
    std::sort(ds.begin(), ds.end());
    const double r_hi = hs[floor - 1], e_lo = ds[floor - 1];
    const auto rt = geometric(r_hi / 10, r_hi, pts), et = geometric(e_lo, 10 * e_lo, pts);
    const auto cusp = fit_mass_exponent(ht, rt, true, c.seed);
    const auto ball = fit_mass_exponent(dist, et, false, c.seed + 1);
    CsvWriter csv({"statistic", "threshold", "mass"});
    for (double r : rt) csv.row({"cusp", fmt_real(r), fmt_real(empirical_mass(ht, r, true))});
    for (double e : et) csv.row({"ball", fmt_real(e), fmt_real(empirical_mass(dist, e, false))});
    const double n = P.n;
    auto fit_json = [](const ExponentFit& f) { return json{{"slope", f.slope}, {"lo", f.lo}, {"hi", f.hi}, {"points", f.points}}; };
    RunDir run(c.out, "equidist", c.manifest_config("equidist"));
    run.write("mass.csv", csv.str());
    run.write_json("exponents.json", {{"poly", poly_string(P)},
                                      {"disc", zstr(o.disc)},
                                      {"h", packet.size()},
                                      {"samples", ht.size()},
                                      {"n", P.n},
                                      {"cusp", fit_json(cusp)},
                                      {"ball", fit_json(ball)},
                                      {"cusp_contains_minus_n", cusp.lo <= -n && -n <= cusp.hi},
                                      {"ball_contains_n", ball.lo <= n && n <= ball.hi},
                                      {"ball_excludes_n_minus_1", !(ball.lo <= n - 1 && n - 1 <= ball.hi)}});
    run.finish();
    c.log.info(fmt::format("cusp slope {:.3f} [{:.3f},{:.3f}], ball slope {:.3f} [{:.3f},{:.3f}]", cusp.slope, cusp.lo, cusp.hi,
                           ball.slope, ball.lo, ball.hi));
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_hecke(Ctx& c) {
    struct Item {
        MonicIntPoly P;
        std::size_t limit;
        double tol;
    };
    std::vector<Item> items;
    for (const auto& s : c.cfg.get_list("hecke.quadratic")) items.push_back({poly_arg(s), 0, 1e-6});
    for (const auto& s : c.cfg.get_list("hecke.cubic")) items.push_back({poly_arg(s), 0, 1e-4});
    for (const auto& it : items)
        if (it.P.s != 0) throw ConfigError("hecke: " + poly_string(it.P) + " is not totally real");
    const double sigma = c.cfg.get_double("hecke.sigma"), qtol = c.cfg.get_double("hecke.quadrature_tol");
    const auto per_poly = parallel_map<json>(items.size(), c.workers, [&](std::size_t i) {
        const auto& P = items[i].P;
        const json key = {{"op", "hecke"}, {"poly", poly_string(P)}, {"sigma", fmt_real(sigma)}, {"qtol", fmt_real(qtol)}, {"v", 1}};
        return c.cache.get_or_compute(key, [&] {
            ClassRegistry reg(make_field(P));
            const auto packet = packet_orbits(order_from_poly(reg.field()), reg);
            json rows = json::array();
            for (const auto& orbit : packet) {
                const auto r = hecke_unfolding_check(orbit, TestFunction::make_gaussian(P.n, sigma), qtol);
                rows.push_back({{"class_id", orbit.base.class_id}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"relerr", r.relerr},
                                {"tail", r.tail_change}, {"nodes", r.lhs_nodes}, {"terms", r.rhs_terms}});
            }
            return rows;
        });
    });
    const std::size_t cap[2] = {static_cast<std::size_t>(c.cfg.get_int("hecke.max_quadratic")),
                                static_cast<std::size_t>(c.cfg.get_int("hecke.max_cubic"))};
    std::size_t used[2] = {0, 0};
    CsvWriter csv({"poly", "n", "class_id", "lhs", "rhs", "relerr", "tail_change", "lhs_nodes", "rhs_terms", "tolerance", "pass"});
    std::size_t failed = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const int g = items[i].P.n == 2 ? 0 : 1;
        for (const auto& r : per_poly[i]) {
            if (used[g] >= cap[g]) break;
            ++used[g];
            const bool ok = r["relerr"].get<double>() <= items[i].tol;
            failed += !ok;
            csv.row({poly_string(items[i].P), std::to_string(items[i].P.n), std::to_string(r["class_id"].get<std::size_t>()),
                     fmt_real(r["lhs"]), fmt_real(r["rhs"]), fmt_real(r["relerr"]), fmt_real(r["tail"]),
                     std::to_string(r["nodes"].get<std::size_t>()), std::to_string(r["terms"].get<std::size_t>()),
                     fmt_real(items[i].tol), ok ? "true" : "false"});
        }
    }
    RunDir run(c.out, "hecke", c.manifest_config("hecke"));
    run.write("hecke.csv", csv.str());
    run.write_json("summary.json", {{"quadratic_classes", used[0]}, {"cubic_classes", used[1]}, {"failed", failed}});
    run.finish();
    return 0;
}

// ---------------------------------------------------------------------------

std::vector<long> long_list(const Config& cfg, const std::string& key) {
    std::vector<long> out;
    for (const auto& s : cfg.get_list(key)) {
        try {
            out.push_back(std::stol(s));
        } catch (const std::exception&) {
            throw ConfigError(key + ": bad integer '" + s + "'");
        }
    }
    return out;
}

int building_row(Ctx& c, RunDir& run) {
    const long p = c.cfg.get_int("building.prime");
    const auto P = poly_arg(c.cfg.get("building.poly"));
    const QMat g = parse_rat_matrix(c.cfg.get("building.conjugate"));
    if (static_cast<int>(g.size()) != P.n) throw ConfigError("building.conjugate must be n x n");
    ZVec coeffs(P.a.begin(), P.a.end());
    LocalTorusData d;
    try {
        d = conjugated_companion(Int(p), coeffs, g);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto lam = lambda_order(d);
    std::string disc_a, delta, I;
    try {
        disc_a = zstr(algebra_disc(d));
    } catch (const std::exception&) {
    }
    if (is_split_unramified(d)) {
        delta = fmt_real(delta_distance(d).delta);
        I = fmt_real(local_integral(d, std::vector<long>(static_cast<std::size_t>(P.n), 0)));
    }
    CsvWriter csv({"p", "poly", "conjugator", "disc_D", "disc_A", "delta", "unit_density", "I_NA"});
    csv.row({std::to_string(p), poly_string(P), c.cfg.get("building.conjugate"), zstr(lam.disc_D), disc_a, delta,
             fmt_real(unit_density(d)), I});
    run.write("local.csv", csv.str());
    return 0;
}

std::vector<LocalTorusData> lemma_data(const Config& cfg, std::uint64_t seed) {
    const auto primes = long_list(cfg, "building.primes");
    const long count = cfg.get_int("building.lemma_count");
    std::mt19937_64 rng(seed);
    std::vector<LocalTorusData> out;
    for (long i = 0; i < count; ++i) {
        const long p = primes[static_cast<std::size_t>(i) % primes.size()];
        const int n = 2 + static_cast<int>((i / static_cast<long>(primes.size())) % 2);
        out.push_back(random_split_data(Int(p), n, rng));
    }
    return out;
}

int building_lemmas(Ctx& c, RunDir& run) {
    const auto data = lemma_data(c.cfg, c.seed);
    const std::size_t per = static_cast<std::size_t>(c.cfg.get_int("building.extreme_per_datum"));
    const auto reports = parallel_map<LemmaReport>(4, c.workers, [&](std::size_t k) {
        switch (k) {
            case 0: return check_dual_volume(data);
            case 1: return check_unit_density(data);
            case 2: return check_extreme(data, per, c.seed);
            default: return check_delta_bound(data);
        }
    });
    CsvWriter summary({"lemma", "cases", "passed", "worst_margin"});
    CsvWriter detail({"lemma", "row"});
    for (const auto& r : reports) {
        summary.row({r.name, std::to_string(r.cases), std::to_string(r.passed), fmt_real(r.worst_margin)});
        for (const auto& row : r.rows) detail.row({r.name, row});
    }
    run.write("lemmas.csv", summary.str());
    run.write("lemma_rows.csv", detail.str());
    return 0;
}

int building_rays(Ctx& c, RunDir& run) {
    const long p = c.cfg.get_int("building.rays_prime");
    const long rmax = c.cfg.get_int("building.rays_max");
    CsvWriter csv({"n", "poly", "r", "I", "log_I"});
    CsvWriter fit({"n", "poly", "slope_r_ge_2", "max_step_r_ge_2", "bound"});
    for (const auto& s : c.cfg.get_list("building.rays_polys")) {
        const auto P = poly_arg(s);
        const auto d = conjugated_companion(Int(p), ZVec(P.a.begin(), P.a.end()), [&] {
            QMat id(static_cast<std::size_t>(P.n), std::vector<Rat>(static_cast<std::size_t>(P.n), Rat(0)));
            for (int i = 0; i < P.n; ++i) id[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1;
            return id;
        }());
        if (!is_split_unramified(d)) throw ConfigError(poly_string(P) + " is not split unramified at " + std::to_string(p));
        std::vector<double> xs, ys;
        double max_step = -INFINITY, prev = 0;
        for (long r = 0; r <= rmax; ++r) {
            std::vector<long> t(static_cast<std::size_t>(P.n), 0);
            t.back() = r;
            const double I = local_integral(d, t);
            csv.row({std::to_string(P.n), poly_string(P), std::to_string(r), fmt_real(I), fmt_real(std::log(I))});
            if (r >= 2) {
                xs.push_back(double(r));
                ys.push_back(std::log(I));
                if (r > 2) max_step = std::max(max_step, std::log(I) - prev);
            }
            prev = std::log(I);
        }
        const auto f = fit_slope(xs, ys, c.seed);
        fit.row({std::to_string(P.n), poly_string(P), fmt_real(f.slope), fmt_real(max_step), fmt_real(-0.05 * std::log(double(p)))});
    }
    run.write("rays.csv", csv.str());
    run.write("ray_fits.csv", fit.str());
    return 0;
}

std::vector<std::complex<double>> tate_grid(std::size_t k) {
    std::vector<std::complex<double>> g;
    const std::size_t half = (k + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) g.emplace_back(0.5, -2.0 + 4.0 * double(i) / double(std::max<std::size_t>(1, half - 1)));
    for (std::size_t i = half; i < k; ++i) g.emplace_back(-0.3 + 0.4 * double(i - half), 0.7);
    return g;
}

int building_tate(Ctx& c, RunDir& run) {
    const long p = c.cfg.get_int("building.prime");
    const auto grid = tate_grid(static_cast<std::size_t>(c.cfg.get_int("building.tate_points")));
    struct Case {
        std::vector<double> angles;
        std::vector<long> a;
    };
    const std::vector<Case> cases{{{0.1, 0.37}, {0, 1}}, {{0.0, 0.25, 0.6}, {-1, 0, 2}}, {{0.0, 0.0}, {0, 0}}};
    CsvWriter csv({"p", "n", "angles", "shifts", "points", "max_relerr", "max_eps_deviation"});
    for (const auto& cs : cases) {
        const auto t = tate_local_check(Int(p), cs.angles, cs.a, grid);
        std::string ang, sh;
        for (std::size_t i = 0; i < cs.a.size(); ++i) {
            ang += (i ? ";" : "") + fmt_real(cs.angles[i]);
            sh += (i ? ";" : "") + std::to_string(cs.a[i]);
        }
        csv.row({std::to_string(p), std::to_string(cs.a.size()), ang, sh, std::to_string(grid.size()), fmt_real(t.max_relerr),
                 fmt_real(t.max_eps_deviation)});
    }
    run.write("tate.csv", csv.str());
    return 0;
}

int building_growth(Ctx& c, RunDir& run) {
    const long p = c.cfg.get_int("building.growth_prime");
    const double rmax = c.cfg.get_double("building.growth_rmax");
    CsvWriter csv({"n", "R", "count"});
    CsvWriter fit({"n", "exponent", "bound"});
    for (int n = 2; n <= 3; ++n) {
        const auto g = unit_shell_growth(Int(p), n, rmax);
        for (std::size_t i = 0; i < g.radius.size(); ++i) csv.row({std::to_string(n), fmt_real(g.radius[i]), fmt_real(g.count[i])});
        fit.row({std::to_string(n), fmt_real(g.exponent), fmt_real(n - 1 + 0.2)});
    }
    run.write("growth.csv", csv.str());
    run.write("growth_fit.csv", fit.str());
    return 0;
}

int cmd_building(Ctx& c) {
    const std::string mode = c.cfg.get("building.mode");
    RunDir run(c.out, "building", c.manifest_config("building"));
    if (mode == "row")
        building_row(c, run);
    else if (mode == "lemmas")
        building_lemmas(c, run);
    else if (mode == "rays")
        building_rays(c, run);
    else if (mode == "tate")
        building_tate(c, run);
    else if (mode == "growth")
        building_growth(c, run);
    else
        throw ConfigError("building.mode must be row, lemmas, rays, tate or growth");
    run.finish();
    return 0;
}

// ---------------------------------------------------------------------------

int zeta_cnf(Ctx& c, RunDir& run) {
    const auto P = poly_arg(c.cfg.get("zeta.poly"));
    const long B = c.cfg.get_int("zeta.B");
    if (B < 16) throw ConfigError("zeta.B must be at least 16");
    const json key = {{"op", "zeta.cnf"}, {"poly", poly_string(P)}, {"B", B}, {"v", 1}};
    const json r = c.cache.get_or_compute(key, [&] {
        const auto g = cnf_check(maximal_order(make_field(P)), B);
        return json{{"poly", poly_string(P)}, {"B", B},        {"residue", g.residue}, {"error_bar", g.error_bar},
                    {"acnf", g.acnf},         {"relerr", g.relerr}, {"h", g.h},         {"regulator", g.regulator},
                    {"w", g.w},               {"disc", zstr(g.disc)}};
    });
    run.write_json("cnf.json", r);
    c.log.info(fmt::format("residue {} acnf {} relerr {:.3e}", fmt_real(r["residue"]), fmt_real(r["acnf"]), r["relerr"].get<double>()));
    return 0;
}

int zeta_trend(Ctx& c, RunDir& run) {
    const std::string fam = c.cfg.get("zeta.family");
    std::vector<OrderRep> orders;
    if (fam == "quadratic")
        orders = quadratic_family(c.cfg.get_int("zeta.dmin"), c.cfg.get_int("zeta.dmax"), static_cast<std::size_t>(c.cfg.get_int("zeta.count")));
    else if (fam == "cubic")
        orders = cubic_family(c.cfg.get_int("zeta.cubic_kmax"), static_cast<std::size_t>(c.cfg.get_int("zeta.cubic_count")));
    else
        throw ConfigError("zeta.family must be quadratic or cubic");
    const auto rows = parallel_map<json>(orders.size(), c.workers, [&](std::size_t i) {
        const json key = {{"op", "zeta.volume"}, {"poly", poly_string(orders[i].K->poly())}, {"v", 1}};
        return c.cache.get_or_compute(key, [&] {
            const auto v = packet_volume(orders[i]);
            return json{{"poly", poly_string(orders[i].K->poly())}, {"disc", zstr(v.disc)}, {"h", v.h}, {"regulator", v.regulator}};
        });
    });
    CsvWriter csv({"poly", "disc", "h", "regulator", "volume"});
    std::vector<VolumePoint> pts;
    for (const auto& r : rows) {
        VolumePoint v{Int(r["disc"].get<std::string>()), r["h"].get<long>(), r["regulator"].get<double>()};
        pts.push_back(v);
        csv.row({r["poly"], r["disc"], std::to_string(v.h), fmt_real(v.regulator), fmt_real(v.volume())});
    }
    ExponentFit f;
    try {
        f = volume_disc_trend(pts, c.seed);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const double lo = fam == "quadratic" ? 0.35 : 0.3, hi = fam == "quadratic" ? 0.65 : 0.7;
    run.write("trend.csv", csv.str());
    run.write_json("trend.json", {{"family", fam},
                                  {"points", pts.size()},
                                  {"slope", f.slope},
                                  {"lo", f.lo},
                                  {"hi", f.hi},
                                  {"target", {lo, hi}},
                                  {"pass", lo <= f.lo && f.hi <= hi}});
    c.log.info(fmt::format("slope {:.4f} [{:.4f}, {:.4f}]", f.slope, f.lo, f.hi));
    return 0;
}

bool squarefree(long d) {
    for (long q = 2; q * q <= d; ++q)
        if (d % (q * q) == 0) return false;
    return true;
}

int zeta_characters(Ctx& c, RunDir& run) {
    const long dmin = c.cfg.get_int("zeta.char_dmin"), dmax = c.cfg.get_int("zeta.char_dmax");
    const long count = c.cfg.get_int("zeta.char_count");
    const double delta = c.cfg.get_double("zeta.delta");
    if (dmin < 3 || dmax <= dmin || count < 2) throw ConfigError("zeta: need 3 <= char_dmin < char_dmax and char_count >= 2");
    // imaginary quadratic fields with class number at least 2, |disc| roughly log-spaced
    std::vector<MonicIntPoly> polys;
    long last = 0;
    for (long i = 0; i < count; ++i) {
        const double target = std::exp(std::log(double(dmin)) + double(i) / double(count - 1) * std::log(double(dmax) / double(dmin)));
        for (long D = std::max(last + 1, std::lround(target)); D <= 2 * dmax; ++D) {
            MonicIntPoly P;
            if (D % 4 == 3 && squarefree(D))
                P = make_poly({Int((D + 1) / 4), Int(1)});
            else if (D % 4 == 0 && (D / 4) % 4 != 3 && (D / 4) % 4 != 0 && squarefree(D / 4))
                P = make_poly({Int(D / 4), Int(0)});
            else
                continue;
            if (picard_group(order_from_poly(make_field(P))).order() < 2) continue;
            polys.push_back(P);
            last = D;
            break;
        }
    }
    const auto rows = parallel_map<json>(polys.size(), c.workers, [&](std::size_t i) {
        const json key = {{"op", "zeta.characters"}, {"poly", poly_string(polys[i])}, {"delta", fmt_real(delta)}, {"v", 1}};
        return c.cache.get_or_compute(key, [&] {
            ClassRegistry reg(make_field(polys[i]));
            const auto o = order_from_poly(reg.field());
            const auto pic = picard_group(o, reg);
            double worst = 0;
            std::size_t arg = 0;
            for (std::size_t k = 0; k < pic.order(); ++k) {
                if (std::all_of(pic.characters[k].begin(), pic.characters[k].end(), [](const Rat& a) { return a == 0; })) continue;
                const double v = std::abs(class_character_sum(o, reg, pic, k, delta));
                if (v > worst) worst = v, arg = k;
            }
            return json{{"poly", poly_string(polys[i])}, {"disc", zstr(o.disc)}, {"h", pic.order()}, {"max_abs", worst}, {"character", arg}};
        });
    });
    CsvWriter csv({"poly", "disc", "h", "delta", "max_abs_ratio", "character"});
    std::vector<double> x, y;
    std::size_t down = 0;
    double prev = INFINITY;
    for (const auto& r : rows) {
        csv.row({r["poly"], r["disc"], std::to_string(r["h"].get<std::size_t>()), fmt_real(delta), fmt_real(r["max_abs"]),
                 std::to_string(r["character"].get<std::size_t>())});
        const double v = r["max_abs"].get<double>();
        down += v < prev;
        prev = v;
        if (v > 0) {
            x.push_back(std::log(std::abs(std::stod(r["disc"].get<std::string>()))));
            y.push_back(std::log(v));
        }
    }
    json trend = {{"fields", rows.size()}, {"decreasing_steps", down > 0 ? down - 1 : 0}, {"steps", rows.empty() ? 0 : rows.size() - 1}};
    if (x.size() >= 2) {
        const auto f = fit_slope(x, y, c.seed);
        trend["log_log_slope"] = f.slope;
        trend["lo"] = f.lo;
        trend["hi"] = f.hi;
    }
    run.write("characters.csv", csv.str());
    run.write_json("characters.json", trend);
    return 0;
}

int cmd_zeta(Ctx& c) {
    const std::string mode = c.cfg.get("zeta.mode");
    RunDir run(c.out, "zeta", c.manifest_config("zeta"));
    if (mode == "cnf")
        zeta_cnf(c, run);
    else if (mode == "trend")
        zeta_trend(c, run);
    else if (mode == "characters")
        zeta_characters(c, run);
    else
        throw ConfigError("zeta.mode must be cnf, trend or characters");
    run.finish();
    return 0;
}

int cmd_cube_roots(Ctx& c) {
    const auto ds = long_list(c.cfg, "cube_roots.d");
    const double radius = c.cfg.get_double("cube_roots.radius");
    const std::size_t cap = static_cast<std::size_t>(c.cfg.get_int("cube_roots.cap"));
    const auto rows = parallel_map<json>(ds.size(), c.workers, [&](std::size_t i) {
        ClassRegistry reg(make_field(poly_arg(fmt::format("x^3 - {}", ds[i]))));
        const auto w = Window::box(3, radius);
        const auto a = integral_points_in_window(reg, w, cap);
        const auto b = integral_points_in_window(reg, w.dilated(2.0), cap);
        return json{{"d", ds[i]}, {"W", a.points.size()}, {"2W", b.points.size()}, {"word_length", b.word_length}, {"capped", a.capped || b.capped}};
    });
    CsvWriter csv({"d", "count_W", "count_2W", "ratio", "word_length", "capped"});
    for (const auto& r : rows) {
        const double wa = r["W"].get<double>(), wb = r["2W"].get<double>();
        csv.row({std::to_string(r["d"].get<long>()), std::to_string(r["W"].get<std::size_t>()), std::to_string(r["2W"].get<std::size_t>()),
                 wa > 0 ? fmt_real(wb / wa) : "", std::to_string(r["word_length"].get<int>()), r["capped"].get<bool>() ? "true" : "false"});
    }
    RunDir run(c.out, "cube-roots", c.manifest_config("cube_roots"));
    run.write("cube_roots.csv", csv.str());
    run.finish();
    return 0;
}

int cmd_report(Ctx& c) {
    const auto checks = verify_manifests(c.out);
    CsvWriter csv({"subcommand", "artifacts", "verified", "mismatched"});
    std::size_t bad = 0;
    for (const auto& ch : checks) {
        if (ch.subcommand == "report") continue;
        std::string mis;
        for (const auto& m : ch.mismatched) mis += (mis.empty() ? "" : ";") + m;
        bad += ch.mismatched.size();
        csv.row({ch.subcommand, std::to_string(ch.artifacts), std::to_string(ch.verified), mis});
    }
    RunDir run(c.out, "report", c.manifest_config("report"));
    run.write("report.csv", csv.str());
    run.finish();
    if (bad) c.log.warn(fmt::format("{} artifacts failed re-verification", bad));
    return bad ? 1 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    Config cfg = Config::defaults();
    CLI::App app{"toruslab: torus orbits, ideal classes and local buildings"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_file, out_dir;
    std::vector<std::string> sets;
    long seed = -1, workers = -1;
    bool no_cache = false, quiet = false;
    app.add_option("--config", config_file, "INI configuration file");
    app.add_option("--set", sets, "section.key=value override (repeatable)");
    app.add_option("--out", out_dir, "output directory (TORUSLAB_OUT wins)");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--workers", workers, "worker threads");
    app.add_flag("--no-cache", no_cache, "bypass the result cache");
    app.add_flag("--quiet", quiet, "suppress progress logging");

    std::vector<std::pair<std::string, std::string>> overrides;
    auto opt = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
    };
    auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& value, const std::string& help) {
        sub->add_flag_callback(name, [&overrides, key, value] { overrides.emplace_back(key, value); }, help);
    };

    auto* disc = app.add_subcommand("disc", "orbit discriminants of every class of Z[t]/P");
    opt(disc, "--poly", "disc.poly", "polynomial");
    auto* classes = app.add_subcommand("classes", "coarse ideal classes and their matrices");
    opt(classes, "--poly", "classes.poly", "polynomial");
    opt(classes, "--cap", "classes.cap", "enumeration cap");
    auto* packets = app.add_subcommand("packets", "packets with sampled orbit points");
    opt(packets, "--poly", "packets.poly", "polynomial");
    opt(packets, "--grid", "packets.grid", "grid points per axis");
    opt(packets, "--samples", "packets.samples", "Monte Carlo samples per orbit (0 = grid)");
    auto* equi = app.add_subcommand("equidist", "Weyl-sum equidistribution trend");
    opt(equi, "--family", "equidist.family", "quadratic or cubic");
    opt(equi, "--kmin", "equidist.kmin", "smallest k");
    opt(equi, "--kmax", "equidist.kmax", "largest k (0 = family default)");
    opt(equi, "--count", "equidist.count", "family size");
    opt(equi, "--density", "equidist.density", "grid points per unit regulator");
    flag(equi, "--mass", "equidist.mass", "true", "cusp and ball mass exponents of the largest cubic packet");
    opt(equi, "--mass-samples", "equidist.mass_samples", "Monte Carlo samples for --mass");
    auto* hecke = app.add_subcommand("hecke", "torus integral of E_f against the unfolded sum");
    opt(hecke, "--sigma", "hecke.sigma", "gaussian width");
    auto* building = app.add_subcommand("building", "local building report");
    opt(building, "--prime", "building.prime", "prime p");
    opt(building, "--poly", "building.poly", "polynomial");
    opt(building, "--conjugate", "building.conjugate", "rational conjugator rows, e.g. \"1,0;0,7\"");
    flag(building, "--lemmas", "building.mode", "lemmas", "randomized lemma checks");
    flag(building, "--rays", "building.mode", "rays", "local integral along apartment rays");
    flag(building, "--tate", "building.mode", "tate", "local functional equation");
    flag(building, "--growth", "building.mode", "growth", "unit shell growth");
    auto* zeta = app.add_subcommand("zeta", "partial zeta sums and class number formula");
    opt(zeta, "--poly", "zeta.poly", "polynomial");
    opt(zeta, "--B", "zeta.B", "norm bound");
    opt(zeta, "--family", "zeta.family", "quadratic or cubic (with --trend)");
    flag(zeta, "--trend", "zeta.mode", "trend", "volume against discriminant");
    flag(zeta, "--characters", "zeta.mode", "characters", "class character sums");
    auto* cube = app.add_subcommand("cube-roots", "integral matrix cube roots in a window and its double");
    opt(cube, "--d", "cube_roots.d", "values of d, ';'-separated");
    opt(cube, "--radius", "cube_roots.radius", "window radius");
    auto* report = app.add_subcommand("report", "re-verify all manifests under out_dir");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!config_file.empty()) cfg.load_file(config_file);
        if (!out_dir.empty()) cfg.set("run.out_dir", out_dir);
        if (seed >= 0) cfg.set("run.seed", std::to_string(seed));
        if (workers >= 0) cfg.set("run.workers", std::to_string(workers));
        if (no_cache) cfg.set("run.cache", "false");
        if (quiet) cfg.set("run.quiet", "true");
        for (const auto& [k, v] : overrides) cfg.set(k, v);
        for (const auto& s : sets) cfg.set_assignment(s);
        Ctx ctx(cfg, resolve_out_dir(cfg));
        int rc = 0;
        if (disc->parsed()) rc = cmd_disc(ctx);
        if (classes->parsed()) rc = cmd_classes(ctx);
        if (packets->parsed()) rc = cmd_packets(ctx);
        if (equi->parsed()) rc = cmd_equidist(ctx);
        if (hecke->parsed()) rc = cmd_hecke(ctx);
        if (building->parsed()) rc = cmd_building(ctx);
        if (zeta->parsed()) rc = cmd_zeta(ctx);
        if (cube->parsed()) rc = cmd_cube_roots(ctx);
        if (report->parsed()) rc = cmd_report(ctx);
        if (ctx.cache.hits() + ctx.cache.misses())
            ctx.log.info(fmt::format("cache: {} hits, {} misses", ctx.cache.hits(), ctx.cache.misses()));
        return rc;
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return 2;
    } catch (const ResourceError& e) {
        fmt::print(stderr, "resource cap: {}\n", e.what());
        return 3;
    } catch (const ConvergenceError& e) {
        fmt::print(stderr, "no convergence: {}\n", e.what());
        return 4;
    }
}

}  // namespace toruslab::harness
