#include "toruslab/orbit_geometry.hpp"

#include <cmath>
#include <random>

namespace toruslab {

double minkowski_covolume(const Field& K, const Lattice& L) {
    return std::abs(K.minkowski_rows(L.basis()).determinant());
}

EmbeddedLattice embed_lattice(const Field& K, const Lattice& L, std::size_t class_id) {
    EmbeddedLattice e;
    e.basis = K.minkowski_rows(L.basis());
    const double det = std::abs(e.basis.determinant());
    e.scale = std::pow(det, -1.0 / K.n());
    e.basis *= e.scale;
    e.class_id = class_id;
    Eigen::JacobiSVD<RMat> svd(e.basis);
    const auto& sv = svd.singularValues();
    e.condition = sv(0) / sv(sv.size() - 1);
    return e;
}

EmbeddedLattice embed_class(const IdealClassRep& c) {
    return embed_lattice(*c.representative.K, c.representative.lat, c.id);
}

RVec coordinate_logs(int r, int s, const std::vector<double>& place_logs) {
    RVec t(r + 2 * s);
    for (int i = 0; i < r; ++i) t(i) = place_logs[static_cast<std::size_t>(i)];
    for (int j = 0; j < s; ++j) t(r + 2 * j) = t(r + 2 * j + 1) = place_logs[static_cast<std::size_t>(r + j)];
    return t;
}

RMat torus_act(const RMat& b, const RVec& t) {
    RMat out = b;
    for (Eigen::Index k = 0; k < b.cols(); ++k) out.col(k) *= std::exp(t(k));
    return out;
}

TorusOrbitRep orbit_of(ClassRegistry& reg, std::size_t class_id) {
    const Field& K = *reg.field();
    const ClassData& cd = reg.info(class_id);
    TorusOrbitRep o;
    o.base = embed_lattice(K, cd.canonical, class_id);
    o.regulator = cd.regulator;
    o.r = K.r();
    o.s = K.s();
    const std::size_t rank = cd.unit_logs.size();
    if (rank == 0) {
        o.hyperplane_covolume = 1.0;
        return o;
    }
    RMat logs(static_cast<Eigen::Index>(rank), K.n());
    for (std::size_t i = 0; i < rank; ++i) logs.row(static_cast<Eigen::Index>(i)) = coordinate_logs(o.r, o.s, cd.unit_logs[i]).transpose();
    lll_reduce(logs);
    for (Eigen::Index i = 0; i < logs.rows(); ++i) {
        std::vector<double> pl(static_cast<std::size_t>(K.places()));
        for (int k = 0; k < o.r; ++k) pl[static_cast<std::size_t>(k)] = logs(i, k);
        for (int j = 0; j < o.s; ++j) pl[static_cast<std::size_t>(o.r + j)] = logs(i, o.r + 2 * j);
        o.unit_logs.push_back(pl);
    }
    o.hyperplane_covolume = std::sqrt(std::abs((logs * logs.transpose()).determinant()));
    o.unit_coords = logs;
    if (o.s > 0) return o;
    const auto nodes = reg.class_nodes(class_id);
    std::size_t c = 0;
    while (!(nodes[c].lat == cd.canonical)) ++c;
    o.anchor_shift.resize(static_cast<Eigen::Index>(nodes.size()), K.n());
    for (std::size_t u = 0; u < nodes.size(); ++u) {
        std::vector<double> d(nodes[u].log_pos.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = nodes[c].log_pos[i] - nodes[u].log_pos[i];
        RVec y = coordinate_logs(o.r, o.s, d);
        y.array() -= y.mean();
        o.anchor_shift.row(static_cast<Eigen::Index>(u)) = y.transpose();
        o.anchors.push_back(embed_lattice(K, nodes[u].lat, class_id));
    }
    return o;
}

double archimedean_disc_factor(const Field& K) {
    const int n = K.n();
    const auto& emb = K.embedding();
    std::vector<RMat> f;
    for (int j = 0; j < n; ++j) {
        RMat x = RMat::Zero(n, n);
        for (int i = 0; i < K.r(); ++i) x(i, i) = std::pow(emb.real_roots[static_cast<std::size_t>(i)], j);
        for (int c = 0; c < K.s(); ++c) {
            const std::complex<double> z = std::pow(emb.complex_roots[static_cast<std::size_t>(c)], j);
            const int b = K.r() + 2 * c;
            x(b, b) = z.real();
            x(b, b + 1) = -z.imag();
            x(b + 1, b) = z.imag();
            x(b + 1, b + 1) = z.real();
        }
        f.push_back(x);
    }
    auto hs = [](const RMat& a, const RMat& b) { return (a.array() * b.array()).sum(); };
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < i; ++k) f[i] -= hs(f[i], f[k]) * f[k];
        f[i] /= std::sqrt(hs(f[i], f[i]));
    }
    RMat g(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) g(i, k) = (f[i] * f[k]).trace();
    return std::pow(2.0 * n, 1 - n) / std::abs(g.determinant());
}

OrbitDiscriminant orbit_discriminant(ClassRegistry& reg, std::size_t class_id) {
    return {abs(reg.info(class_id).multiplier_disc), archimedean_disc_factor(*reg.field())};
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    return mix(mix(seed) ^ index);
}

std::size_t sample_count(const TorusOrbitRep& orbit, const SampleScheme& scheme) {
    if (scheme.kind == SampleScheme::monte_carlo) return scheme.count;
    std::size_t c = 1;
    for (std::size_t i = 0; i < orbit.unit_logs.size(); ++i) c *= scheme.count;
    return c;
}

std::vector<double> parallelepiped_point(const TorusOrbitRep& orbit, const SampleScheme& scheme, std::size_t idx) {
    const std::size_t rank = orbit.unit_logs.size();
    std::vector<double> c(rank);
    if (scheme.kind == SampleScheme::grid) {
        const std::size_t k = scheme.count;
        for (std::size_t i = 0; i < rank; ++i) {
            c[i] = k == 1 ? 0.0 : (static_cast<double>(idx % k) + 0.5) / static_cast<double>(k);
            idx /= k;
        }
        return c;
    }
    std::mt19937_64 rng(sample_seed(scheme.seed, idx));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& x : c) x = u(rng);
    return c;
}

EmbeddedLattice sample_point(const TorusOrbitRep& orbit, const std::vector<double>& coeffs) {
    const std::size_t m = static_cast<std::size_t>(orbit.r + orbit.s);
    std::vector<double> pl(m, 0.0);
    for (std::size_t k = 0; k < coeffs.size(); ++k)
        for (std::size_t i = 0; i < m; ++i) pl[i] += coeffs[k] * orbit.unit_logs[k][i];
    const RVec x = coordinate_logs(orbit.r, orbit.s, pl);
    if (orbit.anchors.empty()) {
        EmbeddedLattice e = orbit.base;
        e.basis = torus_act(orbit.base.basis, x);
        return e;
    }
    const RMat& U = orbit.unit_coords;
    const Eigen::LDLT<RMat> gram((U * U.transpose()).eval());
    std::size_t best = 0;
    RVec best_res;
    for (Eigen::Index u = 0; u < orbit.anchor_shift.rows(); ++u) {
        const RVec y = x - orbit.anchor_shift.row(u).transpose();
        const RVec c = gram.solve(U * y).array().round().matrix();
        const RVec res = y - U.transpose() * c;
        if (u == 0 || res.squaredNorm() < best_res.squaredNorm()) {
            best = static_cast<std::size_t>(u);
            best_res = res;
        }
    }
    EmbeddedLattice e = orbit.anchors[best];
    e.basis = torus_act(e.basis, best_res);
    return e;
}

std::vector<EmbeddedLattice> sample_orbit(const TorusOrbitRep& orbit, const SampleScheme& scheme) {
    const std::size_t total = sample_count(orbit, scheme);
    std::vector<EmbeddedLattice> out;
    out.reserve(total);
    for (std::size_t i = 0; i < total; ++i) out.push_back(sample_point(orbit, parallelepiped_point(orbit, scheme, i)));
    return out;
}

}  // namespace toruslab
