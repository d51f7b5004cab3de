#include "doctest.h"
#include "oracles.hpp"
#include "toruslab/arith.hpp"
#include "toruslab/lll.hpp"

#include <random>

using namespace toruslab;

namespace {

ZMat random_unimodular(std::mt19937_64& rng, std::size_t n, int steps) {
    ZMat u = zmat(n, n);
    for (std::size_t i = 0; i < n; ++i) u[i][i] = 1;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1), coef(-3, 3);
    for (int s = 0; s < steps; ++s) {
        int i = pick(rng), j = pick(rng);
        if (i == j) continue;
        long c = coef(rng);
        for (std::size_t k = 0; k < n; ++k) u[i][k] += c * u[j][k];
        if (s % 5 == 0) std::swap(u[i], u[j]);
    }
    return u;
}

}  // namespace

TEST_SUITE("arith") {
TEST_CASE("hnf is canonical under unimodular base change") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> entry(-9, 9);
    for (std::size_t n : {2u, 3u}) {
        ZMat b = zmat(n, n);
        do {
            for (auto& row : b)
                for (auto& x : row) x = entry(rng);
        } while (z_det(b) == 0);
        const Lattice ref = lattice_from_int_rows(b, 6, n);
        for (int trial = 0; trial < 1000; ++trial) {
            const ZMat c = z_mul(random_unimodular(rng, n, 12), b);
            const Lattice l = lattice_from_int_rows(c, 6, n);
            REQUIRE(l == ref);
            REQUIRE(l.hnf == ref.hnf);
            REQUIRE(l.den == ref.den);
        }
    }
}

TEST_CASE("denominator is normalized") {
    ZMat b = {{2, 0}, {0, 4}};
    const Lattice l = lattice_from_int_rows(b, 4, 2);
    CHECK(l.den == 2);
    CHECK(l.covolume() == Rat(1, 2));
}

TEST_CASE("elementary divisors match determinantal divisors") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> entry(-20, 20);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<long>> g(3, std::vector<long>(3));
        ZMat a = zmat(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a[i][j] = g[i][j] = entry(rng) * ((i + j + trial) % 3 == 0 ? 7 : 1);
        if (z_det(a) == 0) continue;
        const ZVec d = elementary_divisors(a);
        REQUIRE(d.size() == 3);
        std::vector<int> e;
        for (const auto& x : d) e.push_back(valuation(x, Int(7)));
        std::sort(e.begin(), e.end());
        CHECK(e == oracle::smith_exponents_by_minors(g, 7));
    }
}

TEST_CASE("dual, sum and intersection") {
    ZMat b = {{2, 0}, {1, 3}};
    const Lattice a = lattice_from_int_rows(b, 1, 2);
    const Lattice d = lat_dual(a);
    CHECK(a.covolume() * d.covolume() == 1);
    CHECK(lat_dual(d) == a);
    const Lattice z = lattice_from_int_rows({{1, 0}, {0, 1}}, 1, 2);
    CHECK(lat_sum(a, z) == z);
    CHECK(lat_intersect(a, z) == a);
    CHECK(lat_contains(z, a));
    CHECK_FALSE(lat_contains(a, z));
    CHECK(lat_index(z, a) == 6);
}

TEST_CASE("integer kernel and saturation") {
    ZMat a = {{2, 4, 6}};
    const ZMat k = integer_kernel(a);
    CHECK(k.size() == 2);
    for (const auto& row : k) CHECK(2 * row[0] + 4 * row[1] + 6 * row[2] == 0);
    const ZMat s = saturation({{2, 0, 0}, {0, 3, 3}});
    REQUIRE(s.size() == 2);
    for (const auto& row : s) CHECK(row[1] == row[2]);
    CHECK(z_det({{s[0][0], s[0][1], 0}, {s[1][0], s[1][1], 0}, {0, 0, 1}}) != 0);
    CHECK(abs(z_det({{s[0][0], s[0][1], 0}, {s[1][0], s[1][1], 0}, {0, 0, 1}})) == 1);
}

TEST_CASE("fincke-pohst census equals coefficient box") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = trial % 2 ? 3 : 2;
        RMat b(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) b(i, j) = (i == j ? 1.0 : 0.0) + 0.3 * g(rng);
        b /= std::pow(std::abs(b.determinant()), 1.0 / static_cast<double>(n));
        std::vector<std::vector<double>> rows(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) rows[i][j] = b(i, j);
        const auto v = short_vectors(b, 4.0);
        CHECK(v.size() == oracle::ball_count_box(rows, 2.0, 10));
    }
}

TEST_CASE("fincke-pohst on Z^2") {
    RMat b = RMat::Identity(2, 2);
    CHECK(short_vectors(b, 1.0).size() == 4);
    CHECK(short_vectors(b, 2.25).size() == 8);
    CHECK(short_vectors(b, 2.25, true).size() == 4);
}
}
