#pragma once

#include "toruslab/order_core.hpp"

#include <complex>
#include <cstdint>
#include <random>

namespace toruslab {

/// Point of the standard apartment: the norm x -> max q^{t_i} |x_i|. place == 0 stands for the real place.
struct ApartmentPoint {
    Int place;
    std::vector<Rat> t;
    bool is_vertex() const;
};

double apartment_class_distance(const ApartmentPoint& u, const ApartmentPoint& v);

/// Elementary divisor exponents e_1 <= ... <= e_n of an invertible rational matrix over Z_p.
std::vector<long> elementary_exponents(const QMat& g, const Int& p);
/// Distance between [N_0] and [g N_0].
double vertex_distance(const QMat& g, const Int& p);

/// A = Q_p[M] inside M_n(Q_p).
struct LocalTorusData {
    Int p;
    QMat M;
    ZVec charpoly;  // monic, low degree first, leading 1 omitted
    int prec = 10;
    int n() const { return static_cast<int>(M.size()); }
};

ZVec rational_charpoly(const QMat& M);
LocalTorusData make_local_data(const Int& p, const QMat& M);
/// g^-1 C g with C the companion matrix of P.
LocalTorusData conjugated_companion(const Int& p, const ZVec& poly, const QMat& g);

struct LocalComponent {
    int e = 1;
    int f = 1;
};

struct CanonicalNorm {
    std::vector<LocalComponent> components;
    /// Coordinates of a Z-basis of the maximal order on 1, M, ..., M^{n-1}; its p-adic closure is O_A.
    Lattice order;
    int disc_exponent = 0;
    bool split() const;
    bool unramified() const;
};

/// Factorization of A through a p-maximal generator and Dedekind-Kummer; needs an irreducible charpoly.
CanonicalNorm canonical_norm(const LocalTorusData& d);
/// N_A(x) = p^{-k} with k returned, for x having normalized valuations w_i (v_{K_i}(x_i) / e_i) per component.
long canonical_norm_exponent(const std::vector<Rat>& w);

struct LambdaOrder {
    std::vector<QMat> basis;  // integral matrices spanning Lambda
    Lattice coords;           // the same on 1, M, ..., M^{n-1}
    ZMat trace_form;
    int trace_valuation = 0;
    int disc_exponent = 0;
    Int disc_D;
};

LambdaOrder lambda_order(const LocalTorusData& d);
/// p-part of the discriminant of A.
Int algebra_disc(const LocalTorusData& d);
/// vol(Lambda*) / vol(Lambda) with Lambda* the trace dual.
Int dual_volume_ratio(const LocalTorusData& d);
/// [O_A : Lambda].
Int order_index(const LocalTorusData& d);
double unit_density(const LocalTorusData& d);

/// Roots of the charpoly in Z_p to precision p^prec when A is split and p does not divide disc P.
std::vector<Int> split_roots(const LocalTorusData& d, int prec);
bool is_split_unramified(const LocalTorusData& d);

struct DeltaResult {
    double delta = 0;
    long half_steps = 0;  // delta = half_steps * (log p) / 2
    std::vector<long> shift;
};

DeltaResult delta_distance(const LocalTorusData& d);

/// Exact I(N) for N with unit ball the lattice spanned by the rows of h in eigen-coordinates of split A.
double local_integral_lattice(const Int& p, const ZMat& h);
/// Same value by direct summation over valuation vectors within `window` of the critical box.
double local_integral_direct(const Int& p, const ZMat& h, int window);
/// Unit ball of the norm y -> max p^{t_i} |y_i| on Q_p^n pulled back to eigen-coordinates through a -> e a.
ZMat vertex_norm_lattice(const LocalTorusData& d, const std::vector<long>& t);
double local_integral(const LocalTorusData& d, const std::vector<long>& t);

struct MonteCarloValue {
    double value = 0;
    double stderr_ = 0;
    std::size_t samples = 0;
    bool converged = false;
};

/// I(Q) for a positive definite form on R^n, stratified over sign orthants after x_i = +-u_i^2.
MonteCarloValue local_integral_real(const RMat& Q, std::size_t samples, std::uint64_t seed, double target = 0.01);

struct TateCheck {
    double max_relerr = 0;
    double max_eps_deviation = 0;  // max | |eps| - 1 | over the grid points with Re s = 1/2
    std::vector<std::complex<double>> eps;
};

/// Split unramified A = Q_p^n, psi unramified with psi_i(p) = exp(2 pi i angle_i), Phi the indicator of
/// the product of p^{a_i} Z_p.
TateCheck tate_local_check(const Int& p, const std::vector<double>& angles, const std::vector<long>& a,
                           const std::vector<std::complex<double>>& s_grid);

// ---------------------------------------------------------------------------
// randomized checks

/// Companion of an irreducible P split modulo p with distinct roots, conjugated by a random integral matrix.
LocalTorusData random_split_data(const Int& p, int n, std::mt19937_64& rng);

struct LemmaReport {
    std::string name;
    std::size_t cases = 0;
    std::size_t passed = 0;
    double worst_margin = 0;  // min over cases of (lhs - rhs), or max ratio deviation
    std::vector<std::string> rows;
};

LemmaReport check_dual_volume(const std::vector<LocalTorusData>& data);
LemmaReport check_unit_density(const std::vector<LocalTorusData>& data);
LemmaReport check_extreme(const std::vector<LocalTorusData>& data, std::size_t per_datum, std::uint64_t seed);
LemmaReport check_delta_bound(const std::vector<LocalTorusData>& data);

struct GrowthFit {
    std::vector<double> radius;
    std::vector<double> count;
    double exponent = 0;
};

/// Normalized counts of A^x / k^x O_A^x with log||t|| in [R, R+1] for split A of dimension n.
GrowthFit unit_shell_growth(const Int& p, int n, double rmax);

}  // namespace toruslab
