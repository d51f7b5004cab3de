#pragma once

#include "toruslab/orbit_geometry.hpp"

#include <complex>

namespace toruslab {

struct TestFunction {
    enum Kind { gaussian, bump } kind = gaussian;
    int n = 2;
    double sigma = 1.0;
    RVec center;
    double eps = 0.1;

    static TestFunction make_gaussian(int n, double sigma);
    static TestFunction make_bump(const RVec& center, double eps);

    double operator()(const RVec& x) const;
    /// Average of f over the diagonal sign changes of x.
    double symmetric(const RVec& x) const;
    double integral() const;
    /// f vanishes (or is below 1e-17 of its peak) outside this radius.
    double support_radius() const;
    std::string describe() const;
};

/// Degree-7 smoothstep: 0 at u <= 0, 1 at u >= 1, three vanishing derivatives at both ends.
double smoothstep7(double u);

std::vector<RVec> vectors_in_ball(const RMat& basis, double R, std::size_t cap = 10'000'000);
double siegel_transform(const RMat& basis, const TestFunction& f, bool symmetrize = false);
double siegel_rhs(const TestFunction& f);

/// Sum in a fixed binary tree over index order.
double pairwise_sum(const std::vector<double>& v, std::size_t lo = 0, std::size_t hi = SIZE_MAX);

struct WeylStats {
    double mean = 0;
    double stderr_ = 0;
    std::size_t samples = 0;
};

/// Equal-weight average of E_f over samples of every orbit; batch-means error over `batches` interleaved batches.
WeylStats weyl_average(const std::vector<TorusOrbitRep>& packet, const TestFunction& f, const SampleScheme& scheme,
                       std::size_t batches = 16);
/// Same average for several test functions sharing the samples.
std::vector<WeylStats> weyl_averages(const std::vector<TorusOrbitRep>& packet, const std::vector<TestFunction>& fs,
                                     const SampleScheme& scheme, std::size_t batches = 16);

struct HeckeResult {
    double lhs = 0;
    double rhs = 0;
    double relerr = 0;
    /// Relative change of the rhs when the norm cutoff is doubled.
    double tail_change = 0;
    std::size_t lhs_nodes = 0;
    std::size_t rhs_terms = 0;
};

/// Torus average of E_f (gaussian f) against the unfolded sum over L / units.
HeckeResult hecke_unfolding_check(const TorusOrbitRep& orbit, const TestFunction& f, double tol = 1e-9);

double shortest_vector_length(const RMat& basis);
double cusp_height(const RMat& basis);
/// min over signed permutations P of |red(b) - P red(x0)|_F with red the LLL-reduced basis.
double lattice_distance(const RMat& b, const RMat& x0);

struct ExponentFit {
    double slope = 0;
    double lo = 0;
    double hi = 0;
    std::size_t points = 0;
};

/// Least squares of log(mass) on log(threshold); 95% bootstrap interval over resampled statistics.
/// mass(x) = fraction of stats >= x (upper = true) or <= x (upper = false).
ExponentFit fit_mass_exponent(const std::vector<double>& stats, const std::vector<double>& thresholds, bool upper,
                              std::uint64_t seed, std::size_t resamples = 400);
double empirical_mass(const std::vector<double>& stats, double threshold, bool upper);
/// Least squares line with 95% bootstrap interval on (x, y) pairs.
ExponentFit fit_slope(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t seed,
                      std::size_t resamples = 1000);

/// sum over invertible integral ideals a with N(a) <= delta sqrt|D| of psi([a]), divided by their number.
std::complex<double> class_character_sum(const OrderRep& o, ClassRegistry& reg, const PicardGroup& pic,
                                         std::size_t character, double delta);

/// Orbits of all classes in the Picard group of o (the packet of o).
std::vector<TorusOrbitRep> packet_orbits(const OrderRep& o, ClassRegistry& reg);

}  // namespace toruslab
