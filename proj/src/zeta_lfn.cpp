#include "toruslab/zeta_lfn.hpp"

#include <boost/math/special_functions/zeta.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

namespace toruslab {

namespace {

using i128 = __int128;
using ModPoly = std::vector<long>;  // low degree first, reduced mod p

long md(i128 x, long p) {
    const long r = static_cast<long>(x % p);
    return r < 0 ? r + p : r;
}

long pow_mod(long a, long e, long p) {
    i128 r = 1, b = md(a, p);
    for (; e > 0; e >>= 1, b = b * b % p)
        if (e & 1) r = r * b % p;
    return static_cast<long>(r);
}

void trim(ModPoly& f) {
    while (!f.empty() && f.back() == 0) f.pop_back();
}

/// a mod f for monic f.
ModPoly poly_mod(ModPoly a, const ModPoly& f, long p) {
    const std::size_t d = f.size() - 1;
    trim(a);
    while (a.size() > d) {
        const long c = a.back();
        const std::size_t shift = a.size() - 1 - d;
        for (std::size_t i = 0; i <= d; ++i) a[shift + i] = md(a[shift + i] - static_cast<i128>(c) * f[i], p);
        trim(a);
    }
    return a;
}

ModPoly poly_mulmod(const ModPoly& a, const ModPoly& b, const ModPoly& f, long p) {
    if (a.empty() || b.empty()) return {};
    ModPoly c(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] = md(c[i + j] + static_cast<i128>(a[i]) * b[j], p);
    return poly_mod(c, f, p);
}

ModPoly poly_gcd(ModPoly a, ModPoly b, long p) {
    trim(a);
    trim(b);
    while (!b.empty()) {
        const long inv = pow_mod(b.back(), p - 2, p);
        for (auto& x : b) x = md(static_cast<i128>(x) * inv, p);
        a = poly_mod(a, b, p);
        std::swap(a, b);
    }
    return a;
}

ModPoly reduce(const ZVec& monic_low, long p) {
    ModPoly f;
    for (const auto& c : monic_low) {
        Int r;
        mpz_fdiv_r_ui(r.get_mpz_t(), c.get_mpz_t(), static_cast<unsigned long>(p));
        f.push_back(r.get_si());
    }
    f.push_back(1);
    return f;
}

/// Degrees of the distinct irreducible factors of a monic polynomial of degree <= 3 modulo p.
std::vector<int> factor_degrees(const ZVec& a, long p, bool squarefree) {
    ModPoly f = reduce(a, p);
    const int n = static_cast<int>(a.size());
    if (squarefree) {
        // number of roots = deg gcd(x^p - x, f)
        ModPoly xp{1}, base{0, 1};
        base = poly_mod(base, f, p);
        for (long e = p; e > 0; e >>= 1, base = poly_mulmod(base, base, f, p))
            if (e & 1) xp = poly_mulmod(xp, base, f, p);
        xp.resize(std::max<std::size_t>(xp.size(), 2), 0);
        xp[1] = md(xp[1] - 1, p);
        const int roots = static_cast<int>(poly_gcd(f, xp, p).size()) - 1;
        std::vector<int> out(static_cast<std::size_t>(roots), 1);
        if (n - roots > 0) out.push_back(n - roots);
        return out;
    }
    std::vector<int> out;
    int left = n;
    for (long x = 0; x < p && left > 0; ++x) {
        bool root = false;
        for (;;) {
            i128 v = 0;
            for (std::size_t k = f.size(); k-- > 0;) v = (v * x + f[k]) % p;
            if (v != 0) break;
            root = true;
            ModPoly q(f.size() - 1, 0);
            i128 carry = 0;
            for (std::size_t k = f.size(); k-- > 1;) {
                carry = (carry * x + f[k]) % p;
                q[k - 1] = static_cast<long>(carry);
            }
            f = q;
            --left;
        }
        if (root) out.push_back(1);
    }
    if (left > 0) out.push_back(left);
    return out;
}

ZVec charpoly_of(const Field& K, const QVec& x) {
    const int n = K.n();
    std::vector<Rat> pw(static_cast<std::size_t>(n) + 1), e(static_cast<std::size_t>(n) + 1);
    QVec xk = x;
    for (int k = 1; k <= n; ++k) {
        pw[static_cast<std::size_t>(k)] = K.trace(xk);
        xk = K.mul(xk, x);
    }
    e[0] = 1;
    for (int k = 1; k <= n; ++k) {
        Rat acc = 0;
        for (int i = 1; i <= k; ++i)
            acc += (i % 2 ? 1 : -1) * e[static_cast<std::size_t>(k - i)] * pw[static_cast<std::size_t>(i)];
        e[static_cast<std::size_t>(k)] = acc / k;
    }
    ZVec a(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) a[static_cast<std::size_t>(n - k)] = Rat((k % 2 ? -1 : 1) * e[static_cast<std::size_t>(k)]).get_num();
    return a;
}

Int charpoly_disc(const ZVec& a) {
    if (a.size() == 2) return a[1] * a[1] - 4 * a[0];
    const Int &c = a[0], &b = a[1], &q = a[2];
    return q * q * b * b - 4 * b * b * b - 4 * q * q * q * c - 27 * c * c + 18 * q * b * c;
}

/// Ideal counts of norm p^k for k <= kmax from the residue degrees.
std::vector<long> local_counts(const std::vector<int>& f, int kmax) {
    std::vector<long> c(static_cast<std::size_t>(kmax) + 1, 0);
    c[0] = 1;
    for (int fi : f)
        for (int k = fi; k <= kmax; ++k) c[static_cast<std::size_t>(k)] += c[static_cast<std::size_t>(k - fi)];
    return c;
}

Rat ideal_index(const OrderRep& o, const FracIdealRep& a) { return a.norm() / o.lat.covolume(); }

}  // namespace

std::vector<int> residue_degrees(const OrderRep& o, long p) {
    const Field& K = *o.K;
    const Int pi(p);
    const Rat cov = o.lat.covolume();
    if (cov.get_num() != 1) throw std::invalid_argument("residue_degrees: order must contain Z[t]");
    const Int index = cov.get_den();
    const ZVec& P = K.poly().a;
    const Int dP = charpoly_disc(P);
    if (index % pi != 0) return factor_degrees(P, p, dP % pi != 0);
    const int target = valuation(o.disc, pi);
    const QMat ob = o.lat.basis();
    const int n = K.n();
    for (int box = 1; box <= 3; ++box) {
        std::vector<long> c(static_cast<std::size_t>(n), -box);
        for (;;) {
            QVec alpha(static_cast<std::size_t>(n), Rat(0));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) alpha[static_cast<std::size_t>(j)] += c[static_cast<std::size_t>(i)] * ob[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const ZVec cp = charpoly_of(K, alpha);
            const Int d = charpoly_disc(cp);
            if (d != 0 && valuation(d, pi) == target) return factor_degrees(cp, p, d % pi != 0);
            std::size_t k = 0;
            while (k < c.size() && ++c[k] > box) c[k++] = -box;
            if (k == c.size()) break;
        }
    }
    // common index divisor: read the degrees off the ideals of norm p^k, k <= n
    long bound = 1;
    for (int k = 0; k < n; ++k) bound *= p;
    std::vector<long> cnt(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& a : ideals_of_bounded_norm(o, Int(bound))) {
        long N = Rat(ideal_index(o, a)).get_num().get_si();
        int k = 0;
        while (N % p == 0) {
            N /= p;
            ++k;
        }
        if (N == 1) ++cnt[static_cast<std::size_t>(k)];
    }
    std::vector<int> f;
    for (int d = 1; d <= n; ++d) {
        const auto have = local_counts(f, n);
        for (long m = cnt[static_cast<std::size_t>(d)] - have[static_cast<std::size_t>(d)]; m > 0; --m) f.push_back(d);
    }
    return f;
}

std::vector<long> ideal_counts(const OrderRep& o, long B) {
    if (o.disc != maximal_order(o.K).disc) throw std::invalid_argument("ideal_counts: order is not maximal");
    if (B < 1) return std::vector<long>(1, 0);
    std::vector<long> spf(static_cast<std::size_t>(B) + 1, 0);
    for (long i = 2; i <= B; ++i)
        if (spf[static_cast<std::size_t>(i)] == 0)
            for (long j = i; j <= B; j += i)
                if (spf[static_cast<std::size_t>(j)] == 0) spf[static_cast<std::size_t>(j)] = i;
    std::unordered_map<long, std::vector<long>> local;
    std::vector<long> a(static_cast<std::size_t>(B) + 1, 0);
    a[1] = 1;
    for (long m = 2; m <= B; ++m) {
        const long p = spf[static_cast<std::size_t>(m)];
        long rest = m;
        int k = 0;
        while (rest % p == 0) {
            rest /= p;
            ++k;
        }
        auto it = local.find(p);
        if (it == local.end()) {
            int kmax = 0;
            for (long q = p; q <= B / p; q *= p) ++kmax;
            it = local.emplace(p, local_counts(residue_degrees(o, p), kmax + 1)).first;
        }
        a[static_cast<std::size_t>(m)] = a[static_cast<std::size_t>(rest)] * it->second[static_cast<std::size_t>(k)];
    }
    return a;
}

std::complex<double> zeta_partial(const OrderRep& o, ClassRegistry& reg, const PicardGroup& pic, std::size_t character,
                                  std::complex<double> s, long B) {
    if (o.K->n() < 2) throw std::invalid_argument("zeta_partial: degree must be at least 2");
    std::vector<std::complex<double>> terms;
    for (const auto& a : ideals_of_bounded_norm(o, Int(B))) {
        if (!is_invertible(a, o)) continue;
        const double N = ideal_index(o, a).get_d();
        std::complex<double> t = std::exp(-s * std::log(N));
        if (character != std::string::npos) {
            const std::size_t pos = pic.index_of_class(reg.classify(a.lat));
            t *= std::polar(1.0, 2 * M_PI * pic.characters.at(character).at(pos).get_d());
        }
        terms.push_back(t);
    }
    std::vector<double> re, im;
    for (const auto& t : terms) {
        re.push_back(t.real());
        im.push_back(t.imag());
    }
    return {pairwise_sum(re), pairwise_sum(im)};
}

std::complex<double> zeta_partial(const OrderRep& o, std::complex<double> s, long B) {
    const auto a = ideal_counts(o, B);
    std::vector<double> re(a.size(), 0.0), im(a.size(), 0.0);
    for (long m = 1; m <= B; ++m) {
        const std::complex<double> t = static_cast<double>(a[static_cast<std::size_t>(m)]) * std::exp(-s * std::log(static_cast<double>(m)));
        re[static_cast<std::size_t>(m)] = t.real();
        im[static_cast<std::size_t>(m)] = t.imag();
    }
    return {pairwise_sum(re), pairwise_sum(im)};
}

std::complex<double> principal_partial(const OrderRep& o, ClassRegistry& reg, const PicardGroup& pic,
                                       std::complex<double> s, long B) {
    const std::size_t unit = pic.index_of_class(reg.classify(o.lat));
    std::vector<double> re, im;
    for (const auto& a : ideals_of_bounded_norm(o, Int(B))) {
        if (!is_invertible(a, o) || pic.index_of_class(reg.classify(a.lat)) != unit) continue;
        const std::complex<double> t = std::exp(-s * std::log(ideal_index(o, a).get_d()));
        re.push_back(t.real());
        im.push_back(t.imag());
    }
    return {pairwise_sum(re), pairwise_sum(im)};
}

double zeta_majorant(int n, double s) { return std::pow(boost::math::zeta(s), n); }

CnfResult cnf_check(const OrderRep& maximal, long B) {
    const Field& K = *maximal.K;
    const int n = K.n();
    const auto a = ideal_counts(maximal, 2 * B);
    std::vector<long> cum(a.size(), 0);
    for (std::size_t m = 1; m < a.size(); ++m) cum[m] = cum[m - 1] + a[m];
    auto density = [&](long b) { return static_cast<double>(cum[static_cast<std::size_t>(b)]) / static_cast<double>(b); };
    const double g = std::pow(2.0, 1.0 / n);
    auto richardson = [&](long b) { return (g * density(2 * b) - density(b)) / (g - 1); };
    CnfResult r;
    r.B = B;
    r.residue = richardson(B);
    r.error_bar = std::abs(r.residue - richardson(B / 2));
    ClassRegistry reg(maximal.K);
    r.h = static_cast<long>(picard_group(maximal, reg).order());
    const UnitGroupRep u = unit_group(maximal);
    r.regulator = u.regulator;
    r.w = u.torsion_order;
    r.disc = maximal.disc;
    r.acnf = std::pow(2.0, K.r()) * std::pow(2 * M_PI, K.s()) * static_cast<double>(r.h) * r.regulator /
             (r.w * std::sqrt(std::abs(maximal.disc.get_d())));
    r.relerr = std::abs(r.residue - r.acnf) / r.acnf;
    return r;
}

VolumePoint packet_volume(const OrderRep& o) {
    ClassRegistry reg(o.K);
    VolumePoint v;
    v.disc = o.disc;
    v.h = static_cast<long>(picard_group(o, reg).order());
    v.regulator = unit_group(o).regulator;
    return v;
}

ExponentFit volume_disc_trend(const std::vector<VolumePoint>& pts, std::uint64_t seed) {
    if (pts.size() < 10) throw std::invalid_argument("volume_disc_trend: need at least 10 packets");
    std::vector<double> x, y;
    for (const auto& p : pts) {
        x.push_back(std::log(std::abs(p.disc.get_d())));
        y.push_back(std::log(p.volume()));
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*hi - *lo < 2 * std::log(10.0)) throw std::invalid_argument("volume_disc_trend: discriminants span less than two decades");
    return fit_slope(x, y, seed);
}

namespace {

bool squarefree(long m) {
    m = std::abs(m);
    for (long q = 2; q * q <= m; ++q)
        if (m % (q * q) == 0) return false;
    return m != 0;
}

}  // namespace

std::vector<OrderRep> quadratic_family(long dmin, long dmax, std::size_t count) {
    std::vector<OrderRep> out;
    long last = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double frac = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
        const long target = std::max(last + 1, static_cast<long>(std::llround(std::exp(std::log(double(dmin)) + frac * std::log(double(dmax) / dmin)))));
        for (long D = target;; ++D) {
            // fundamental discriminants D = d (d = 1 mod 4) or 4d
            long d = 0;
            if (D % 4 == 1 && squarefree(D)) d = D;
            else if (D % 4 == 0 && (D / 4) % 4 != 1 && squarefree(D / 4)) d = D / 4;
            if (d == 0 || d == 1) continue;
            ZVec a = d % 4 == 1 ? ZVec{Int((1 - d) / 4), Int(-1)} : ZVec{Int(-d), Int(0)};
            const auto K = make_field(make_poly(a));
            out.push_back(order_from_poly(K));
            last = D;
            break;
        }
    }
    return out;
}

std::vector<OrderRep> cubic_family(long kmax, std::size_t count) {
    std::vector<long> ks;
    for (long k = 2; k <= kmax; ++k)
        if (squarefree(4 * k * k * k - 27) && k != 2) ks.push_back(k);  // t^3 - 2t - 1 = (t + 1)(t^2 - t - 1)
    std::vector<long> pick;
    if (ks.size() <= count) {
        pick = ks;
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            const double frac = static_cast<double>(i) / static_cast<double>(count - 1);
            const double target = std::exp(std::log(double(ks.front())) + frac * std::log(double(ks.back()) / ks.front()));
            const auto it = std::lower_bound(ks.begin(), ks.end(), static_cast<long>(std::ceil(target)));
            const long k = it == ks.end() ? ks.back() : *it;
            if (pick.empty() || pick.back() != k) pick.push_back(k);
        }
    }
    std::vector<OrderRep> out;
    for (long k : pick) out.push_back(order_from_poly(make_field(make_poly({Int(-1), Int(-k), Int(0)}))));
    return out;
}

}  // namespace toruslab
