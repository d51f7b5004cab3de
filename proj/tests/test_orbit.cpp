#include "doctest.h"
#include "oracles.hpp"
#include "toruslab/correspondence.hpp"
#include "toruslab/orbit_geometry.hpp"

#include <cmath>

using namespace toruslab;

namespace {

ClassRegistry R(const char* s) { return ClassRegistry(make_field(parse_poly(s))); }

bool unimodular_relation(const RMat& a, const RMat& b) {
    const Eigen::Index n = a.cols();
    for (int mask = 0; mask < (1 << n); ++mask) {
        RMat sa = a;
        for (Eigen::Index k = 0; k < n; ++k)
            if (mask >> k & 1) sa.col(k) *= -1;
        const RMat u = sa * b.inverse();
        bool ok = std::abs(std::abs(u.determinant()) - 1) < 1e-8;
        for (Eigen::Index i = 0; i < u.rows() && ok; ++i)
            for (Eigen::Index j = 0; j < u.cols() && ok; ++j) ok = std::abs(u(i, j) - std::round(u(i, j))) < 1e-8;
        if (ok) return true;
    }
    return false;
}

}  // namespace

TEST_SUITE("orbit_geometry") {
TEST_CASE("real embeddings") {
    auto e = real_embedding(parse_poly("x^2 - x - 1"));
    REQUIRE(e.real_roots.size() == 2);
    CHECK(e.real_roots[0] == doctest::Approx((1 - std::sqrt(5.0)) / 2).epsilon(1e-15));
    CHECK(e.real_roots[1] == doctest::Approx((1 + std::sqrt(5.0)) / 2).epsilon(1e-15));
    auto c = real_embedding(parse_poly("x^3 - 2"));
    REQUIRE(c.real_roots.size() == 1);
    REQUIRE(c.complex_roots.size() == 1);
    CHECK(c.real_roots[0] == doctest::Approx(std::cbrt(2.0)).epsilon(1e-15));
    CHECK(c.complex_roots[0].imag() > 0);
    auto pl = real_embedding(parse_poly("x^3 - x - 1"));
    CHECK(pl.real_roots[0] == doctest::Approx(static_cast<double>(oracle::plastic_number())).epsilon(1e-15));
    auto t = real_embedding(parse_poly("x^3 - 7x + 5"));
    REQUIRE(t.real_roots.size() == 3);
    CHECK(std::is_sorted(t.real_roots.begin(), t.real_roots.end()));
    for (double x : t.real_roots) CHECK(std::abs(x * x * x - 7 * x + 5) < 1e-12);
    auto ref = oracle::real_roots({5, -7, 0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(t.real_roots[i] == doctest::Approx(static_cast<double>(ref[i])).epsilon(1e-14));
}

TEST_CASE("embedded lattices are unimodular with the Minkowski covolume") {
    for (const char* s : {"x^2 - x - 1", "x^2 + 5", "x^3 - 2", "x^3 - x - 1", "x^3 - 7x + 5", "x^2 - 12"}) {
        auto reg = R(s);
        const Field& K = *reg.field();
        for (const auto& pk : enumerate_coarse_classes(reg))
            for (const auto& c : pk.classes) {
                auto e = embed_class(c);
                CHECK(std::abs(std::abs(e.basis.determinant()) - 1) < 1e-12);
                const double expect = std::sqrt(std::abs(poly_disc(K.poly()).get_d())) * c.representative.lat.covolume().get_d();
                CHECK(minkowski_covolume(K, c.representative.lat) == doctest::Approx(expect).epsilon(1e-9));
            }
    }
    auto reg = R("x^2 - x - 1");
    auto e = embed_lattice(*reg.field(), order_from_poly(reg.field()).lat);
    CHECK(e.scale == doctest::Approx(std::pow(5.0, -0.25)).epsilon(1e-14));
}

TEST_CASE("orbit volumes and stabilizers") {
    auto reg = R("x^2 - x - 1");
    auto id = reg.classify(order_from_poly(reg.field()).lat);
    auto o = orbit_of(reg, id);
    CHECK(o.regulator == doctest::Approx(0.48121182505960347).epsilon(1e-12));
    CHECK(o.hyperplane_covolume == doctest::Approx(std::sqrt(2.0) * o.regulator).epsilon(1e-10));
    auto reg3 = R("x^3 - 7x + 5");
    auto id3 = reg3.classify(order_from_poly(reg3.field()).lat);
    auto o3 = orbit_of(reg3, id3);
    CHECK(o3.hyperplane_covolume == doctest::Approx(std::sqrt(3.0) * o3.regulator).epsilon(1e-9));
    auto regp = R("x^2 - 79");
    for (const auto& pk : enumerate_coarse_classes(regp)) {
        REQUIRE_FALSE(pk.classes.empty());
        auto first = orbit_of(regp, pk.classes[0].id);
        for (const auto& c : pk.classes) {
            auto oc = orbit_of(regp, c.id);
            CHECK(oc.regulator == doctest::Approx(first.regulator).epsilon(1e-9));
            CHECK(std::abs(std::abs(oc.unit_logs[0][0]) - std::abs(first.unit_logs[0][0])) < 1e-9);
        }
    }
}

TEST_CASE("orbit discriminants") {
    auto reg = R("x^2 - x - 1");
    CHECK(orbit_discriminant(reg, reg.classify(order_from_poly(reg.field()).lat)).finite == 5);
    auto reg2 = R("x^2 - 2x - 4");
    CHECK(orbit_discriminant(reg2, reg2.classify(order_from_poly(reg2.field()).lat)).finite == 20);
    const double a = archimedean_disc_factor(*make_field(parse_poly("x^3 - 7x + 5")));
    const double b = archimedean_disc_factor(*make_field(parse_poly("x^3 - 4x - 1")));
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
    CHECK(a == doctest::Approx(1.0 / 36).epsilon(1e-9));
    CHECK(archimedean_disc_factor(*make_field(parse_poly("x^3 - 2"))) == doctest::Approx(1.0 / 36).epsilon(1e-9));
    CHECK(archimedean_disc_factor(*make_field(parse_poly("x^2 - 3"))) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("orbit sampling") {
    auto reg = R("x^3 - 7x + 5");
    auto o = orbit_of(reg, reg.classify(order_from_poly(reg.field()).lat));
    auto one = sample_orbit(o, {SampleScheme::grid, 1, 0});
    REQUIRE(one.size() == 1);
    CHECK((one[0].basis - o.base.basis).norm() < 1e-15);
    for (const auto& e : sample_orbit(o, {SampleScheme::grid, 5, 0})) CHECK(std::abs(std::abs(e.basis.determinant()) - 1) < 1e-12);
    auto mc = sample_orbit(o, {SampleScheme::monte_carlo, 50, 9});
    auto mc2 = sample_orbit(o, {SampleScheme::monte_carlo, 50, 9});
    for (std::size_t i = 0; i < mc.size(); ++i) CHECK((mc[i].basis - mc2[i].basis).norm() == 0);
    CHECK(sample_seed(9, 3) != sample_seed(9, 4));
    // one full period returns the base lattice up to a change of basis
    for (std::size_t k = 0; k < o.unit_logs.size(); ++k) {
        std::vector<double> c(o.unit_logs.size(), 0.0);
        c[k] = 1.0;
        CHECK(unimodular_relation(sample_point(o, c).basis, o.base.basis));
        c[k] = 0.37;
        auto p = sample_point(o, c);
        c[k] = 1.37;
        CHECK(unimodular_relation(sample_point(o, c).basis, p.basis));
    }
}
TEST_CASE("anchored sampling") {
    for (const char* poly : {"x^2 - 31", "x^3 - 7x + 5"}) {
        auto reg = R(poly);
        auto o = orbit_of(reg, reg.classify(order_from_poly(reg.field()).lat));
        REQUIRE(o.anchors.size() > 1);
        auto direct = o;
        direct.anchors.clear();
        for (std::size_t i = 0; i < 20; ++i) {
            const auto c = parallelepiped_point(o, {SampleScheme::monte_carlo, 20, 4}, i);
            CHECK(unimodular_relation(sample_point(o, c).basis, sample_point(direct, c).basis));
        }
    }
    // regulator about 113: direct action would lose every digit
    auto reg = R("x^2 - x - 2930");
    auto o = orbit_of(reg, reg.classify(order_from_poly(reg.field()).lat));
    for (double t : {0.1, 0.5, 0.93}) {
        const auto e = sample_point(o, {t});
        CHECK(std::abs(std::abs(e.basis.determinant()) - 1) < 1e-9);
        CHECK(e.basis.rowwise().norm().maxCoeff() < 1e4);
    }
}
}
