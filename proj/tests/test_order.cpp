#include "doctest.h"
#include "oracles.hpp"
#include "toruslab/order_core.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace toruslab;

namespace {

FieldPtr F(const char* s) { return make_field(parse_poly(s)); }

QVec qv(std::initializer_list<long> xs) {
    QVec v;
    for (long x : xs) v.emplace_back(x);
    return v;
}

FracIdealRep random_ideal(const OrderRep& o, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> c(-6, 6);
    const std::size_t n = static_cast<std::size_t>(o.K->n());
    std::vector<QVec> gens;
    for (int g = 0; g < 2; ++g) {
        QVec v(n);
        for (auto& x : v) x = c(rng);
        if (std::all_of(v.begin(), v.end(), [](const Rat& x) { return x == 0; })) v[0] = 1;
        gens.push_back(v);
    }
    return ideal_from_generators(o, gens);
}

}  // namespace

TEST_SUITE("order_core") {
TEST_CASE("discriminants against the closed form") {
    CHECK(poly_disc(parse_poly("x^2 - x - 1")) == 5);
    CHECK(poly_disc(parse_poly("x^3 - x - 1")) == -23);
    CHECK(poly_disc(parse_poly("x^3 - 2")) == -108);
    for (long a = -4; a <= 4; ++a)
        for (long b = -4; b <= 4; ++b)
            for (long c = 1; c <= 4; ++c) {
                const std::vector<long> co{c, b, a};
                if (oracle::disc_closed_form(co) == 0) continue;
                ZVec z{Int(c), Int(b), Int(a)};
                MonicIntPoly p;
                try {
                    p = make_poly(z);
                } catch (const std::invalid_argument&) {
                    continue;
                }
                CHECK(poly_disc(p) == oracle::disc_closed_form(co));
            }
}

TEST_CASE("reducible and degenerate polynomials are rejected") {
    CHECK_THROWS(parse_poly("x^2 - 1"));
    CHECK_THROWS(parse_poly("x^2 - 2x + 1"));
    CHECK_THROWS(parse_poly("x^3 - x"));
    CHECK_THROWS(parse_poly("x^4 + 1"));
    CHECK_THROWS(parse_poly("2x^2 + 1"));
}

TEST_CASE("polynomial parse roundtrip") {
    for (const char* s : {"x^2 - x - 1", "x^3 - x - 1", "x^3 - 2", "x^2 + 5", "x^3 + 2x^2 - 3x + 7"})
        CHECK(parse_poly(poly_string(parse_poly(s))) == parse_poly(s));
}

TEST_CASE("monogenic and maximal orders") {
    auto o = order_from_poly(F("x^2 - x - 1"));
    CHECK(o.disc == 5);
    CHECK(maximal_order(F("x^2 - x - 1")).lat == o.lat);
    auto m3 = maximal_order(F("x^2 + 3"));
    CHECK(m3.disc == -3);
    CHECK(lat_contains(m3.lat, QVec{Rat(1, 2), Rat(1, 2)}));
    CHECK(poly_index(F("x^2 + 3")) == 2);
    CHECK(maximal_order(F("x^3 - x - 1")).disc == -23);
    CHECK(maximal_order(F("x^3 - 2")).disc == -108);
    CHECK(maximal_order(F("x^2 - 12")).disc == 12);
    CHECK(maximal_order(F("x^2 + 16")).disc == -4);
    CHECK(maximal_order(F("x^3 - 19")).disc == -3 * 19 * 19);
    CHECK(poly_index(F("x^3 - 19")) == 3);
    auto m = maximal_order(F("x^2 + 3"));
    CHECK(multiplier_ring(as_ideal(m)).lat == m.lat);
}

TEST_CASE("multiplier rings") {
    auto K = F("x^2 + 3");
    auto o = order_from_poly(K);
    CHECK(multiplier_ring(as_ideal(o)).lat == o.lat);
    auto m = maximal_order(K);
    CHECK(multiplier_ring(as_ideal(m)).lat == m.lat);
    auto K3 = F("x^3 - x - 1");
    auto o3 = order_from_poly(K3);
    CHECK(multiplier_ring(ideal_scale(as_ideal(o3), qv({2, 0, 0}))).lat == o3.lat);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> c(-5, 5);
    for (int i = 0; i < 200; ++i) {
        auto KK = i % 2 ? F("x^2 + 15") : F("x^3 - 2");
        auto oo = order_from_poly(KK);
        auto L = random_ideal(oo, rng);
        QVec lam(static_cast<std::size_t>(KK->n()));
        for (auto& x : lam) x = Rat(c(rng), 1 + std::abs(c(rng)));
        if (std::all_of(lam.begin(), lam.end(), [](const Rat& x) { return x == 0; })) lam[0] = 1;
        CHECK(multiplier_ring(ideal_scale(L, lam)).lat == multiplier_ring(L).lat);
    }
}

TEST_CASE("ideal multiplication") {
    auto K = F("x^2 + 5");
    auto o = order_from_poly(K);
    auto p2 = ideal_from_generators(o, {qv({2, 0}), qv({1, 1})});
    CHECK(p2.norm() == 2);
    CHECK(ideal_mul(p2, p2) == ideal_scale(as_ideal(o), qv({2, 0})));
    CHECK(ideal_mul(as_ideal(o), p2) == p2);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
        auto KK = i % 2 ? F("x^3 - x - 1") : F("x^2 + 5");
        auto oo = order_from_poly(KK);
        auto a = random_ideal(oo, rng), b = random_ideal(oo, rng), c = random_ideal(oo, rng);
        CHECK(ideal_mul(a, b) == ideal_mul(b, a));
        CHECK(ideal_mul(ideal_mul(a, b), c) == ideal_mul(a, ideal_mul(b, c)));
        const QVec lam = i % 2 ? qv({1, -2, 1}) : qv({3, 1});
        CHECK(ideal_mul(a, ideal_scale(as_ideal(oo), lam)) == ideal_scale(a, lam));
    }
}

TEST_CASE("homothety") {
    auto K = F("x^2 + 5");
    auto o = order_from_poly(K);
    auto L = as_ideal(o);
    QVec w;
    CHECK(is_homothetic(L, ideal_scale(L, qv({3, 0})), &w));
    CHECK(ideal_scale(ideal_scale(L, qv({3, 0})), w) == L);
    CHECK(is_homothetic(L, L, &w));
    auto p2 = ideal_from_generators(o, {qv({2, 0}), qv({1, 1})});
    CHECK_FALSE(is_homothetic(L, p2));
    auto M = ideal_scale(p2, qv({1, 2}));
    CHECK(is_homothetic(M, p2, &w));
    CHECK(ideal_scale(p2, w) == M);
}

TEST_CASE("local homothety") {
    auto K = F("x^2 + 3");
    auto o = order_from_poly(K);
    auto m = maximal_order(K);
    CHECK_FALSE(is_locally_homothetic(as_ideal(o), as_ideal(m)));
    auto p2 = ideal_from_generators(order_from_poly(F("x^2 + 5")), {qv({2, 0}), qv({1, 1})});
    CHECK(is_locally_homothetic(p2, as_ideal(order_from_poly(F("x^2 + 5")))));
    auto K3 = F("x^3 - 2");
    auto o3 = order_from_poly(K3);
    auto a = ideal_from_generators(o3, {qv({5, 0, 0}), qv({0, 1, 0})});
    CHECK(is_locally_homothetic(a, ideal_scale(a, qv({1, 1, 0}))));
}

TEST_CASE("ideals of bounded norm against sublattice enumeration") {
    auto zphi = order_from_poly(F("x^2 - x - 1"));
    CHECK(ideals_of_bounded_norm(zphi, 1).size() == 1);
    auto l5 = ideals_of_bounded_norm(zphi, 5);
    REQUIRE(l5.size() == 3);
    std::vector<Rat> norms;
    for (const auto& a : l5) norms.push_back(a.norm());
    CHECK(norms == std::vector<Rat>{1, 4, 5});
    auto zi = ideals_of_bounded_norm(order_from_poly(F("x^2 + 1")), 2);
    REQUIRE(zi.size() == 2);
    CHECK(zi[1].norm() == 2);
    for (const char* s : {"x^2 - x - 1", "x^2 + 1", "x^2 + 3", "x^2 - 12", "x^2 + 5", "x^3 - x - 1", "x^3 - 2", "x^3 + x^2 - 2x - 1", "x^3 - 19"}) {
        auto p = parse_poly(s);
        std::vector<long> a;
        for (const auto& c : p.a) a.push_back(c.get_si());
        const long B = p.n == 2 ? 60 : 30;
        auto ref = oracle::zt_ideals(a, B);
        auto got = ideals_of_bounded_norm(order_from_poly(make_field(p)), B);
        REQUIRE(got.size() == ref.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].norm() == ref[i].first);
    }
}

TEST_CASE("unit groups") {
    auto u = unit_group(order_from_poly(F("x^2 - x - 1")));
    CHECK(u.regulator == doctest::Approx(0.48121182505960347).epsilon(1e-12));
    CHECK(u.torsion_order == 2);
    auto u2 = unit_group(order_from_poly(F("x^2 - 2")));
    CHECK(u2.regulator == doctest::Approx(0.88137358701954302).epsilon(1e-12));
    auto u3 = unit_group(maximal_order(F("x^3 - x - 1")));
    CHECK(u3.fundamental_logs.size() == 1);
    CHECK(u3.torsion_order == 2);
    CHECK(u3.regulator == doctest::Approx(0.28119957432296184).epsilon(1e-10));
    CHECK(unit_group(order_from_poly(F("x^2 + 1"))).torsion_order == 4);
    CHECK(unit_group(maximal_order(F("x^2 + 3"))).torsion_order == 6);
    CHECK(unit_group(order_from_poly(F("x^2 + 3"))).torsion_order == 2);
    for (const auto& e : u2.fundamental_units) CHECK(abs(order_from_poly(F("x^2 - 2")).K->norm(e)) == 1);
}

TEST_CASE("unit groups against the box oracle") {
    for (long d : {3, 6, 7, 11, 13, 14, 19}) {
        auto p = make_poly(ZVec{Int(-d), Int(0)});
        auto u = unit_group(order_from_poly(make_field(p)));
        CHECK(u.regulator == doctest::Approx(static_cast<double>(oracle::quad_regulator(0, -d, 200))).epsilon(1e-9));
    }
    auto u = unit_group(order_from_poly(F("x^3 + x^2 - 2x - 1")));
    CHECK(u.regulator == doctest::Approx(static_cast<double>(oracle::cubic_regulator({-1, -2, 1}, 4))).epsilon(1e-9));
}

TEST_CASE("sub-order regulators are integer multiples") {
    double base = unit_group(order_from_poly(F("x^2 - x - 1"))).regulator;
    for (const char* s : {"x^2 - 5", "x^2 - x - 11", "x^2 - 45"}) {
        double r = unit_group(order_from_poly(F(s))).regulator;
        double q = r / base;
        CHECK(std::abs(q - std::round(q)) < 1e-9 * q);
    }
}

TEST_CASE("picard groups against reduced forms") {
    CHECK(picard_group(maximal_order(F("x^2 - x - 1"))).order() == 1);
    CHECK(picard_group(maximal_order(F("x^2 + 5"))).order() == 2);
    CHECK(picard_group(maximal_order(F("x^3 - x - 1"))).order() == 1);
    for (long d : {5, 6, 14, 17, 21, 23, 26, 29, 30, 41, 47, 71}) {
        auto p = make_poly(ZVec{Int(d), Int(0)});
        auto G = picard_group(order_from_poly(make_field(p)));
        CHECK(static_cast<long>(G.order()) == oracle::class_number_imag(-4 * d));
    }
    for (long D : {-3, -4, -7, -8, -11, -12, -16, -27, -28, -36, -44, -99}) {
        ZVec a = D % 4 == 0 ? ZVec{Int(-D / 4), Int(0)} : ZVec{Int((1 - D) / 4), Int(-1)};
        auto G = picard_group(order_from_poly(make_field(make_poly(a))));
        CHECK(static_cast<long>(G.order()) == oracle::class_number_imag(D));
    }
}

TEST_CASE("picard group laws and characters") {
    for (const char* s : {"x^2 + 14", "x^2 + 21", "x^2 + 47", "x^2 - 79", "x^3 - 11"}) {
        auto G = picard_group(order_from_poly(F(s)));
        const std::size_t h = G.order();
        for (std::size_t c = 0; c < h; ++c) {
            std::size_t x = 0;
            for (std::size_t k = 0; k < h; ++k) x = G.table[x][c];
            CHECK(x == 0);
        }
        REQUIRE(G.characters.size() == h);
        for (std::size_t a = 0; a < h; ++a)
            for (std::size_t b = 0; b < h; ++b) {
                std::complex<double> sum = 0;
                for (std::size_t c = 0; c < h; ++c) {
                    const double ang = Rat(G.characters[a][c] - G.characters[b][c]).get_d();
                    sum += std::polar(1.0, 2 * M_PI * ang);
                }
                CHECK(std::abs(sum - std::complex<double>(a == b ? static_cast<double>(h) : 0.0)) < 1e-12);
            }
    }
}

TEST_CASE("json serialization") {
    auto o = maximal_order(F("x^2 + 3"));
    const std::string j = to_json(o);
    CHECK(j.find("\"den\":\"2\"") != std::string::npos);
}
}
