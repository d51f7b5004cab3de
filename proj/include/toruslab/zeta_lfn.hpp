#pragma once

#include "toruslab/equidist.hpp"

#include <complex>
#include <cstdint>

namespace toruslab {

/// a(m) = number of ideals of the maximal order o with norm m, for m = 0..B (a(0) = 0).
std::vector<long> ideal_counts(const OrderRep& o, long B);
/// Residue degrees of the primes of the maximal order o above p.
std::vector<int> residue_degrees(const OrderRep& o, long p);

/// sum over invertible ideals a of o with N(a) <= B of psi(a) N(a)^-s, in (norm, HNF) order.
/// character == npos gives the trivial character.
std::complex<double> zeta_partial(const OrderRep& o, ClassRegistry& reg, const PicardGroup& pic, std::size_t character,
                                  std::complex<double> s, long B);
/// Trivial-character partial sum for a maximal order through the multiplicative ideal counts.
std::complex<double> zeta_partial(const OrderRep& o, std::complex<double> s, long B);
/// Same sum restricted to principal ideals.
std::complex<double> principal_partial(const OrderRep& o, ClassRegistry& reg, const PicardGroup& pic,
                                       std::complex<double> s, long B);
/// zeta(s)^n, an upper bound for the trivial partial sums at real s > 1.
double zeta_majorant(int n, double s);

struct CnfResult {
    double residue = 0;
    double error_bar = 0;
    double acnf = 0;
    double relerr = 0;
    long B = 0;
    long h = 1;
    double regulator = 1;
    int w = 2;
    Int disc;
};

/// Residue of the Dedekind zeta function at 1 from ideal counts up to B and 2B, against 2^r (2 pi)^s h R / (w sqrt|d|).
CnfResult cnf_check(const OrderRep& maximal, long B);

struct VolumePoint {
    Int disc;
    long h = 1;
    double regulator = 1;
    double volume() const { return static_cast<double>(h) * regulator; }
};

VolumePoint packet_volume(const OrderRep& o);
/// Slope of log(h R) against log|disc|; needs at least 10 points over two decades.
ExponentFit volume_disc_trend(const std::vector<VolumePoint>& pts, std::uint64_t seed);

/// Maximal orders of Q(sqrt d), d squarefree, with field discriminants roughly log-spaced from dmin to dmax.
std::vector<OrderRep> quadratic_family(long dmin, long dmax, std::size_t count);
/// Z[t]/(t^3 - k t - 1) for k in [3, kmax] with squarefree discriminant (so Z[t] is maximal), thinned to `count`.
std::vector<OrderRep> cubic_family(long kmax, std::size_t count);

}  // namespace toruslab
