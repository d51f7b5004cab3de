#include "toruslab/equidist.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace toruslab {

double smoothstep7(double u) {
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    const double u4 = u * u * u * u;
    return u4 * (35 - 84 * u + 70 * u * u - 20 * u * u * u);
}

TestFunction TestFunction::make_gaussian(int n, double sigma) {
    TestFunction f;
    f.kind = gaussian;
    f.n = n;
    f.sigma = sigma;
    f.center = RVec::Zero(n);
    return f;
}

TestFunction TestFunction::make_bump(const RVec& center, double eps) {
    TestFunction f;
    f.kind = bump;
    f.n = static_cast<int>(center.size());
    f.center = center;
    f.eps = eps;
    return f;
}

double TestFunction::operator()(const RVec& x) const {
    if (kind == gaussian) return std::exp(-M_PI * x.squaredNorm() / (sigma * sigma));
    const double r = (x - center).norm();
    return 1.0 - smoothstep7((r - eps) / eps);
}

double TestFunction::symmetric(const RVec& x) const {
    if (kind == gaussian) return (*this)(x);
    double acc = 0;
    const int patterns = 1 << n;
    RVec y = x;
    for (int m = 0; m < patterns; ++m) {
        for (int k = 0; k < n; ++k) y(k) = (m >> k & 1) ? -x(k) : x(k);
        acc += (*this)(y);
    }
    return acc / patterns;
}

double TestFunction::integral() const {
    if (kind == gaussian) return std::pow(sigma, n);
    const double omega = 2 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0);
    // (1 - S(u)) (1 + u)^(n-1) integrated over [0, 1]
    std::vector<double> a{1, 0, 0, 0, -35, 84, -70, 20};
    std::vector<double> b(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) b[static_cast<std::size_t>(k)] = std::tgamma(n) / (std::tgamma(k + 1) * std::tgamma(n - k));
    double shell = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) shell += a[i] * b[j] / static_cast<double>(i + j + 1);
    return omega * std::pow(eps, n) * (1.0 / n + shell);
}

double TestFunction::support_radius() const {
    if (kind == gaussian) return sigma * std::sqrt(17 * std::log(10.0) / M_PI);
    return center.norm() + 2 * eps;
}

std::string TestFunction::describe() const {
    std::ostringstream os;
    os.precision(6);
    if (kind == gaussian) {
        os << "gaussian(sigma=" << sigma << ")";
    } else {
        os << "bump(center=";
        for (int k = 0; k < n; ++k) os << (k ? ";" : "") << center(k);
        os << ",eps=" << eps << ")";
    }
    return os.str();
}

std::vector<RVec> vectors_in_ball(const RMat& basis, double R, std::size_t cap) {
    std::vector<RVec> out;
    const double r2 = R * R;
    fincke_pohst(
        basis, r2 * (1 + 1e-12),
        [&](const CoeffVec& x) {
            RVec v = RVec::Zero(basis.cols());
            for (std::size_t i = 0; i < x.size(); ++i)
                if (x[i]) v += static_cast<double>(x[i]) * basis.row(static_cast<Eigen::Index>(i)).transpose();
            if (v.squaredNorm() <= r2 * (1 + 1e-12)) out.push_back(v);
        },
        false, cap);
    return out;
}

double siegel_transform(const RMat& basis, const TestFunction& f, bool symmetrize) {
    std::vector<double> terms;
    for (const auto& v : vectors_in_ball(basis, f.support_radius())) terms.push_back(symmetrize ? f.symmetric(v) : f(v));
    std::sort(terms.begin(), terms.end());
    return pairwise_sum(terms);
}

double siegel_rhs(const TestFunction& f) { return f.integral(); }

double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    hi = std::min(hi, v.size());
    if (hi <= lo) return 0;
    if (hi - lo <= 8) {
        double s = 0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

std::vector<WeylStats> weyl_averages(const std::vector<TorusOrbitRep>& packet, const std::vector<TestFunction>& fs,
                                     const SampleScheme& scheme, std::size_t batches) {
    double radius = 0;
    for (const auto& f : fs) radius = std::max(radius, f.support_radius());
    std::vector<std::vector<double>> vals(fs.size());
    for (std::size_t o = 0; o < packet.size(); ++o) {
        SampleScheme sc = scheme;
        sc.seed = sample_seed(scheme.seed, 0x5eed0000ull + o);
        const std::size_t count = sample_count(packet[o], sc);
        for (std::size_t i = 0; i < count; ++i) {
            const EmbeddedLattice e = sample_point(packet[o], parallelepiped_point(packet[o], sc, i));
            const auto vecs = vectors_in_ball(e.basis, radius);
            for (std::size_t k = 0; k < fs.size(); ++k) {
                std::vector<double> terms;
                terms.reserve(vecs.size());
                for (const auto& v : vecs) terms.push_back(fs[k].symmetric(v));
                std::sort(terms.begin(), terms.end());
                vals[k].push_back(pairwise_sum(terms));
            }
        }
    }
    std::vector<WeylStats> out;
    for (const auto& v : vals) {
        WeylStats st;
        st.samples = v.size();
        if (v.empty()) {
            out.push_back(st);
            continue;
        }
        st.mean = pairwise_sum(v) / static_cast<double>(v.size());
        const std::size_t B = std::min(batches, v.size());
        std::vector<double> means;
        for (std::size_t b = 0; b < B; ++b) {
            std::vector<double> part;
            for (std::size_t i = b; i < v.size(); i += B) part.push_back(v[i]);
            means.push_back(pairwise_sum(part) / static_cast<double>(part.size()));
        }
        double var = 0;
        for (double m : means) var += (m - st.mean) * (m - st.mean);
        st.stderr_ = B > 1 ? std::sqrt(var / static_cast<double>(B - 1) / static_cast<double>(B)) : 0.0;
        out.push_back(st);
    }
    return out;
}

WeylStats weyl_average(const std::vector<TorusOrbitRep>& packet, const TestFunction& f, const SampleScheme& scheme,
                       std::size_t batches) {
    return weyl_averages(packet, {f}, scheme, batches)[0];
}

namespace {

/// int_R exp(-y (e^{2s} + e^{-s})) ds
double unfold_11(double y) {
    const double lo = -std::log(60.0 / y) - 1, hi = 0.5 * std::log(60.0 / y) + 1;
    auto g = [y](double s) { return std::exp(-y * (std::exp(2 * s) + std::exp(-s))); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, std::min(lo, -1.0), std::max(hi, 1.0), 15, 1e-14);
}

/// int_R exp(-z e^{2u}) K_0(2 z e^{-u}) du, the totally real cubic orbit integral
double unfold_30(double z) {
    const double lo = std::log(2 * z / 60.0) - 1, hi = 0.5 * std::log(60.0 / z) + 1;
    auto g = [z](double u) {
        const double arg = 2 * z * std::exp(-u);
        if (arg > 700) return 0.0;
        return std::exp(-z * std::exp(2 * u)) * std::cyl_bessel_k(0.0, arg);
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, std::min(lo, -1.0), std::max(hi, 1.0), 15, 1e-14);
}

struct UnfoldGeometry {
    int r, s, m;
    std::size_t rank;
    RMat L;        // rank x m place logs
    RMat Linv;     // inverse of the first rank columns
    double jac;    // |det| of the first rank columns
};

UnfoldGeometry unfold_geometry(const TorusOrbitRep& o) {
    UnfoldGeometry g{o.r, o.s, o.r + o.s, o.unit_logs.size(), {}, {}, 1.0};
    g.L = RMat(static_cast<Eigen::Index>(g.rank), g.m);
    for (std::size_t k = 0; k < g.rank; ++k)
        for (int i = 0; i < g.m; ++i) g.L(static_cast<Eigen::Index>(k), i) = o.unit_logs[k][static_cast<std::size_t>(i)];
    const RMat sq = g.L.leftCols(static_cast<Eigen::Index>(g.rank));
    g.jac = std::abs(sq.determinant());
    g.Linv = sq.inverse();
    return g;
}

std::vector<double> place_abs_of(const RVec& x, int r, int s) {
    std::vector<double> a;
    for (int i = 0; i < r; ++i) a.push_back(std::abs(x(i)));
    for (int j = 0; j < s; ++j) a.push_back(std::hypot(x(r + 2 * j), x(r + 2 * j + 1)) / std::sqrt(2.0));
    return a;
}

}  // namespace

HeckeResult hecke_unfolding_check(const TorusOrbitRep& orbit, const TestFunction& f, double tol) {
    if (f.kind != TestFunction::gaussian) throw std::invalid_argument("hecke_unfolding_check: gaussian test function only");
    const int n = orbit.r + 2 * orbit.s;
    if (orbit.unit_logs.empty()) throw std::invalid_argument("hecke_unfolding_check: unit rank zero");
    const UnfoldGeometry g = unfold_geometry(orbit);
    const double sig2 = f.sigma * f.sigma;
    HeckeResult res;

    // left side: average of E_f over the unit parallelepiped, composite Gauss-Legendre
    constexpr int q = 10;
    const auto& xs = boost::math::quadrature::gauss<double, q>::abscissa();
    const auto& ws = boost::math::quadrature::gauss<double, q>::weights();
    std::vector<double> nodes, weights;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        nodes.push_back(xs[i]);
        weights.push_back(ws[i]);
        if (xs[i] != 0) {
            nodes.push_back(-xs[i]);
            weights.push_back(ws[i]);
        }
    }
    double maxlen = 0;
    for (const auto& l : orbit.unit_logs) {
        double nn = 0;
        for (double x : l) nn += x * x;
        maxlen = std::max(maxlen, std::sqrt(nn));
    }
    auto lhs_at = [&](int panels) {
        std::vector<double> pts, wts;
        for (int p = 0; p < panels; ++p)
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                pts.push_back((p + 0.5 + 0.5 * nodes[i]) / panels);
                wts.push_back(0.5 * weights[i] / panels);
            }
        std::vector<double> terms;
        std::size_t cnt = 0;
        std::vector<std::size_t> idx(g.rank, 0);
        while (true) {
            std::vector<double> c(g.rank);
            double w = 1;
            for (std::size_t k = 0; k < g.rank; ++k) {
                c[k] = pts[idx[k]];
                w *= wts[idx[k]];
            }
            terms.push_back(w * siegel_transform(sample_point(orbit, c).basis, f));
            ++cnt;
            std::size_t k = 0;
            while (k < g.rank && ++idx[k] == pts.size()) idx[k++] = 0;
            if (k == g.rank) break;
        }
        res.lhs_nodes = cnt;
        return pairwise_sum(terms);
    };
    int panels = std::max(2, static_cast<int>(std::ceil(maxlen)));
    double prev = lhs_at(panels);
    for (int it = 0;; ++it) {
        panels *= 2;
        const double cur = lhs_at(panels);
        if (std::abs(cur - prev) <= tol * std::abs(cur)) {
            res.lhs = cur;
            break;
        }
        if (it >= 4) throw ConvergenceError("hecke_unfolding_check: lhs quadrature did not converge");
        prev = cur;
    }

    // right side: sum over lambda in a fundamental domain for the units of the full torus integral
    const double c0 = -0.4873;
    auto orbit_integral = [&](const RVec& x) {
        if (orbit.r == 2 && orbit.s == 0) return std::cyl_bessel_k(0.0, 2 * M_PI * std::abs(x(0) * x(1)) / sig2);
        if (orbit.r == 3) {
            const double z = M_PI / sig2 * std::pow(std::abs(x(0) * x(1) * x(2)), 2.0 / 3.0);
            return unfold_30(z);
        }
        if (orbit.r == 1 && orbit.s == 1) {
            const double A = M_PI * x(0) * x(0) / sig2, B = M_PI * (x(1) * x(1) + x(2) * x(2)) / sig2;
            return unfold_11(std::cbrt(A) * std::cbrt(B * B));
        }
        throw std::invalid_argument("hecke_unfolding_check: unsupported signature");
    };
    auto in_domain = [&](const RVec& x) {
        const auto a = place_abs_of(x, orbit.r, orbit.s);
        double lognorm = 0;
        std::vector<double> v(static_cast<std::size_t>(g.m));
        for (int i = 0; i < g.m; ++i) {
            v[static_cast<std::size_t>(i)] = std::log(a[static_cast<std::size_t>(i)]);
            lognorm += (i < orbit.r ? 1 : 2) * v[static_cast<std::size_t>(i)];
        }
        RVec head(static_cast<Eigen::Index>(g.rank));
        for (std::size_t i = 0; i < g.rank; ++i) head(static_cast<Eigen::Index>(i)) = v[i] - lognorm / n;
        const RVec c = head.transpose() * g.Linv;
        for (Eigen::Index k = 0; k < c.size(); ++k)
            if (c(k) < c0 || c(k) >= c0 + 1) return std::pair{false, lognorm};
        return std::pair{true, lognorm};
    };
    double nmax = 0;
    if (orbit.r == 2) nmax = 46 * sig2 / (2 * M_PI);
    else if (orbit.r == 3) nmax = std::pow(16 * sig2 / M_PI, 1.5);
    else nmax = std::pow(26 * sig2 / M_PI, 1.5);
    auto rhs_at = [&](double N) {
        std::vector<double> bound(static_cast<std::size_t>(n));
        for (int i = 0; i < g.m; ++i) {
            double e = 0;
            for (std::size_t k = 0; k < g.rank; ++k)
                e += std::max(std::abs(c0), std::abs(c0 + 1)) * std::abs(g.L(static_cast<Eigen::Index>(k), i));
            const double b = std::pow(N, 1.0 / n) * std::exp(e);
            if (i < orbit.r) bound[static_cast<std::size_t>(i)] = b;
            else bound[static_cast<std::size_t>(orbit.r + 2 * (i - orbit.r))] = bound[static_cast<std::size_t>(orbit.r + 2 * (i - orbit.r) + 1)] = std::sqrt(2.0) * b;
        }
        RMat scaled = orbit.base.basis;
        for (int j = 0; j < n; ++j) scaled.col(j) /= bound[static_cast<std::size_t>(j)];
        std::vector<double> terms;
        const double logN = std::log(N);
        fincke_pohst(scaled, n * (1 + 1e-9), [&](const CoeffVec& cv) {
            RVec x = RVec::Zero(n);
            for (std::size_t i = 0; i < cv.size(); ++i)
                if (cv[i]) x += static_cast<double>(cv[i]) * orbit.base.basis.row(static_cast<Eigen::Index>(i)).transpose();
            auto [inside, lognorm] = in_domain(x);
            if (!inside || lognorm > logN) return;
            terms.push_back(orbit_integral(x));
        }, false, 200'000'000);
        std::sort(terms.begin(), terms.end());
        res.rhs_terms = terms.size();
        return pairwise_sum(terms) / g.jac;
    };
    const double r1 = rhs_at(nmax);
    const double r2 = rhs_at(2 * nmax);
    res.rhs = r2;
    res.tail_change = std::abs(r2 - r1) / std::abs(r2);
    res.relerr = std::abs(res.lhs - res.rhs) / std::abs(res.rhs);
    return res;
}

double shortest_vector_length(const RMat& basis) {
    RMat b = basis;
    lll_reduce(b);
    double best = b.row(0).squaredNorm();
    fincke_pohst(b, best * (1 + 1e-12), [&](const CoeffVec& x) {
        RVec v = RVec::Zero(b.cols());
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i]) v += static_cast<double>(x[i]) * b.row(static_cast<Eigen::Index>(i)).transpose();
        best = std::min(best, v.squaredNorm());
    }, true);
    return std::sqrt(best);
}

double cusp_height(const RMat& basis) { return 1.0 / shortest_vector_length(basis); }

double lattice_distance(const RMat& b, const RMat& x0) {
    RMat rb = b, r0 = x0;
    lll_reduce(rb);
    lll_reduce(r0);
    const int n = static_cast<int>(b.rows());
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        for (int mask = 0; mask < (1 << n); ++mask) {
            double d = 0;
            for (int i = 0; i < n; ++i) {
                const double sgn = (mask >> i & 1) ? -1.0 : 1.0;
                d += (rb.row(i) - sgn * r0.row(perm[static_cast<std::size_t>(i)])).squaredNorm();
            }
            best = std::min(best, d);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best);
}

double empirical_mass(const std::vector<double>& stats, double threshold, bool upper) {
    if (stats.empty()) return 0;
    std::size_t c = 0;
    for (double x : stats) c += upper ? (x >= threshold) : (x <= threshold);
    return static_cast<double>(c) / static_cast<double>(stats.size());
}

namespace {

bool least_squares(const std::vector<double>& x, const std::vector<double>& y, double& slope) {
    const std::size_t m = x.size();
    if (m < 2) return false;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m, my = std::accumulate(y.begin(), y.end(), 0.0) / m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0) return false;
    slope = sxy / sxx;
    return true;
}

std::pair<double, double> percentile_interval(std::vector<double> v) {
    if (v.empty()) return {NAN, NAN};
    std::sort(v.begin(), v.end());
    auto at = [&](double q) { return v[static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)))]; };
    return {at(0.025), at(0.975)};
}

}  // namespace

ExponentFit fit_mass_exponent(const std::vector<double>& stats, const std::vector<double>& thresholds, bool upper,
                              std::uint64_t seed, std::size_t resamples) {
    auto fit = [&](const std::vector<double>& s, ExponentFit& out) {
        std::vector<double> sorted = s;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> lx, ly;
        for (double t : thresholds) {
            const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
            const std::size_t c = upper ? static_cast<std::size_t>(sorted.end() - it)
                                        : static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
            if (c == 0) continue;
            lx.push_back(std::log(t));
            ly.push_back(std::log(static_cast<double>(c) / static_cast<double>(s.size())));
        }
        out.points = lx.size();
        return least_squares(lx, ly, out.slope);
    };
    ExponentFit res;
    if (!fit(stats, res)) {
        res.slope = res.lo = res.hi = NAN;
        return res;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, stats.size() - 1);
    std::vector<double> slopes;
    std::vector<double> s(stats.size());
    for (std::size_t b = 0; b < resamples; ++b) {
        for (auto& x : s) x = stats[pick(rng)];
        ExponentFit e;
        if (fit(s, e) && e.points >= 2) slopes.push_back(e.slope);
    }
    std::tie(res.lo, res.hi) = percentile_interval(slopes);
    return res;
}

ExponentFit fit_slope(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t seed, std::size_t resamples) {
    ExponentFit res;
    res.points = x.size();
    if (!least_squares(x, y, res.slope)) throw std::invalid_argument("fit_slope: insufficient spread");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    std::vector<double> slopes, bx(x.size()), by(y.size());
    for (std::size_t b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const std::size_t j = pick(rng);
            bx[i] = x[j];
            by[i] = y[j];
        }
        double sl;
        if (least_squares(bx, by, sl)) slopes.push_back(sl);
    }
    std::tie(res.lo, res.hi) = percentile_interval(slopes);
    return res;
}

std::complex<double> class_character_sum(const OrderRep& o, ClassRegistry& reg, const PicardGroup& pic,
                                         std::size_t character, double delta) {
    const double bound = delta * std::sqrt(std::abs(o.disc.get_d()));
    const Int B(static_cast<long>(std::floor(bound)));
    std::complex<double> acc = 0;
    std::size_t count = 0;
    if (B < 1) return 0;
    for (const auto& I : ideals_of_bounded_norm(o, B)) {
        if (!is_invertible(I, o)) continue;
        const std::size_t pos = pic.index_of_class(reg.classify(I.lat));
        acc += std::polar(1.0, 2 * M_PI * pic.characters.at(character).at(pos).get_d());
        ++count;
    }
    return count ? acc / static_cast<double>(count) : std::complex<double>(0);
}

std::vector<TorusOrbitRep> packet_orbits(const OrderRep& o, ClassRegistry& reg) {
    const PicardGroup pic = picard_group(o, reg);
    std::vector<TorusOrbitRep> out;
    for (const auto& c : pic.classes) out.push_back(orbit_of(reg, c.id));
    return out;
}

}  // namespace toruslab
