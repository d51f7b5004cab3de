#pragma once

#include "toruslab/order_core.hpp"

#include <cstdint>

namespace toruslab {

struct EmbeddedLattice {
    RMat basis;
    std::size_t class_id = 0;
    /// Factor applied to the Minkowski rows to reach determinant +-1.
    double scale = 1.0;
    double condition = 1.0;
};

struct TorusOrbitRep {
    EmbeddedLattice base;
    /// log|sigma_i(u)| per place, one row per generator.
    std::vector<std::vector<double>> unit_logs;
    double regulator = 1.0;
    /// Covolume of the unit logs inside the trace-zero hyperplane of R^n (coordinates, not places).
    double hyperplane_covolume = 1.0;
    int r = 0;
    int s = 0;
    /// Totally real orbits only: the reduced lattices of the class, each equal to a(-shift) base up to signs.
    std::vector<EmbeddedLattice> anchors;
    RMat anchor_shift;
    /// coordinate_logs of unit_logs, one row each.
    RMat unit_coords;
};

/// Minkowski rows of the HNF basis of L rescaled to unit covolume.
EmbeddedLattice embed_lattice(const Field& K, const Lattice& L, std::size_t class_id = 0);
EmbeddedLattice embed_class(const IdealClassRep& c);
/// Covolume of the Minkowski rows before rescaling.
double minkowski_covolume(const Field& K, const Lattice& L);

TorusOrbitRep orbit_of(ClassRegistry& reg, std::size_t class_id);

struct OrbitDiscriminant {
    Int finite;
    double archimedean;
};

/// |disc(O_L)| and the archimedean factor (2n)^(1-n) |det tr(f_i f_j)|^-1 over an orthonormal basis of theta(K x R).
OrbitDiscriminant orbit_discriminant(ClassRegistry& reg, std::size_t class_id);
double archimedean_disc_factor(const Field& K);

/// Coordinate log-scalings of a torus element given per-place logs.
RVec coordinate_logs(int r, int s, const std::vector<double>& place_logs);
/// Row-wise action of diag(exp(t)) on a basis.
RMat torus_act(const RMat& b, const RVec& t);

struct SampleScheme {
    enum Kind { grid, monte_carlo } kind = grid;
    std::size_t count = 1;  // grid points per axis, or total samples
    std::uint64_t seed = 0;
};

/// Per-sample seed derived from (seed, index), independent of evaluation order.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

/// Point of the fundamental parallelepiped for sample idx as coefficients on the unit-log basis.
std::vector<double> parallelepiped_point(const TorusOrbitRep& orbit, const SampleScheme& scheme, std::size_t idx);
std::size_t sample_count(const TorusOrbitRep& orbit, const SampleScheme& scheme);
/// With anchors the point is only determined up to diagonal sign changes.
EmbeddedLattice sample_point(const TorusOrbitRep& orbit, const std::vector<double>& coeffs);
std::vector<EmbeddedLattice> sample_orbit(const TorusOrbitRep& orbit, const SampleScheme& scheme);

}  // namespace toruslab
