#pragma once

#include "toruslab/order_core.hpp"

#include <array>

namespace toruslab {

struct IntMatrixRep {
    ZMat m;
    MonicIntPoly charpoly;

    bool operator==(const IntMatrixRep& o) const { return m == o.m; }
};

/// Coefficients a_0..a_{n-1} of det(X - m).
ZVec charpoly_coeffs(const ZMat& m);
/// Throws std::invalid_argument if the characteristic polynomial is reducible.
IntMatrixRep make_matrix(const ZMat& m);
ZMat companion_matrix(const MonicIntPoly& p);
/// gamma * m * gamma^-1 for unimodular gamma.
ZMat conjugate(const ZMat& m, const ZMat& gamma);
ZMat unimodular_inverse(const ZMat& gamma);

/// Z-span of the entries of the first column of adj(t - M), an O_P-module isomorphic to Z^n with t acting by M.
Lattice adjugate_lattice(const Field& K, const ZMat& m);
IdealClassRep matrix_to_class(ClassRegistry& reg, const IntMatrixRep& m);

/// Matrix of multiplication by t on the HNF basis: t b_i = sum_j M_ij b_j.
ZMat lattice_to_matrix(const Field& K, const Lattice& L);
IntMatrixRep class_to_matrix(const IdealClassRep& c);

struct PacketRep {
    OrderRep order;
    std::vector<IdealClassRep> classes;
    Int discriminant;
};

/// Every coarse ideal class of Z[t]/P, grouped by multiplier ring, split into packets.
std::vector<PacketRep> enumerate_coarse_classes(ClassRegistry& reg, std::size_t cap = 200'000);
std::size_t class_count(const std::vector<PacketRep>& packets);

struct ConjugacyCensus {
    std::vector<IntMatrixRep> representatives;
    std::size_t matrices = 0;
    /// Components of the graph on box matrices joined by generator conjugations (with bridging words).
    std::size_t components = 0;
    /// No component meets two classes.
    bool consistent = true;
};

/// All M with char poly P and entries bounded by height, one representative per GL_n(Z) class.
ConjugacyCensus brute_force_conjugacy(ClassRegistry& reg, long height, std::size_t cap = 5'000'000);
/// Raw box enumeration without classification, entries as flat row-major arrays.
std::vector<ZMat> matrices_with_charpoly(const MonicIntPoly& p, long height, std::size_t cap = 5'000'000);

struct Window {
    /// Bounds on the entries of M / |det M|^(1/n), row-major.
    std::vector<double> lo, hi;
    static Window box(int n, double radius);
    Window dilated(double c) const;
    bool contains(const ZMat& m, double scale) const;
};

struct WindowResult {
    std::vector<IntMatrixRep> points;
    bool capped = false;
    int word_length = 0;
};

/// Integral points of Z_P whose radial projection lies in the window.
WindowResult integral_points_in_window(ClassRegistry& reg, const Window& w, std::size_t cap = 100'000,
                                       std::size_t threads = 1);

std::string to_json(const IntMatrixRep& m);

}  // namespace toruslab
