#include "toruslab/local_building.hpp"

#include "toruslab/orbit_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <climits>
#include <map>
#include <numeric>
#include <sstream>

namespace toruslab {

namespace {

Int ipow(const Int& p, long k) {
    Int r;
    mpz_pow_ui(r.get_mpz_t(), p.get_mpz_t(), static_cast<unsigned long>(k));
    return r;
}

Int mod(const Int& a, const Int& m) {
    Int r = a % m;
    if (r < 0) r += m;
    return r;
}

Int inv_mod(const Int& a, const Int& m) {
    Int r;
    if (!mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t())) throw std::domain_error("inv_mod: not a unit");
    return r;
}

Rat rfloor(const Rat& x) {
    Int q;
    mpz_fdiv_q(q.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return Rat(q);
}

double log_of(const Int& p) { return std::log(p.get_d()); }

QMat q_scale(const QMat& a, const Rat& c) {
    QMat r = a;
    for (auto& row : r)
        for (auto& x : row) x *= c;
    return r;
}

QMat q_add(const QMat& a, const QMat& b) {
    QMat r = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) r[i][j] += b[i][j];
    return r;
}

Rat q_trace(const QMat& a) {
    Rat t = 0;
    for (std::size_t i = 0; i < a.size(); ++i) t += a[i][i];
    return t;
}

QMat companion_rows(const ZVec& a) {
    const std::size_t n = a.size();
    QMat c = qmat(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) c[i][i + 1] = 1;
    for (std::size_t j = 0; j < n; ++j) c[n - 1][j] = -a[j];
    return c;
}

std::vector<QMat> powers(const QMat& M) {
    const std::size_t n = M.size();
    std::vector<QMat> pw{q_identity(n)};
    for (std::size_t j = 1; j < n; ++j) pw.push_back(q_mul(pw.back(), M));
    return pw;
}

Int eval_mod(const ZVec& a, const Int& x, const Int& m) {
    Int v = 1;
    for (std::size_t k = a.size(); k-- > 0;) v = mod(v * x + a[k], m);
    return v;
}

Int deval_mod(const ZVec& a, const Int& x, const Int& m) {
    const std::size_t n = a.size();
    Int v = n;
    for (std::size_t k = n; k-- > 1;) v = mod(v * x + Int(static_cast<long>(k)) * a[k], m);
    return v;
}

/// Degrees and multiplicities of the irreducible factors of a monic polynomial of degree <= 3 modulo p.
std::vector<LocalComponent> kummer_components(ZVec a, long p) {
    std::vector<Int> c(a.size() + 1);
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = mod(a[i], Int(p));
    c.back() = 1;
    std::map<long, int> mult;
    for (long r = 0; r < p && c.size() > 1; ++r) {
        for (;;) {
            if (c.size() <= 1) break;
            Int v = 0;
            for (std::size_t k = c.size(); k-- > 0;) v = mod(v * r + c[k], Int(p));
            if (v != 0) break;
            std::vector<Int> q(c.size() - 1);
            Int carry = 0;
            for (std::size_t k = c.size(); k-- > 1;) {
                carry = mod(carry * r + c[k], Int(p));
                q[k - 1] = carry;
            }
            c = q;
            ++mult[r];
        }
    }
    std::vector<LocalComponent> out;
    for (const auto& [r, e] : mult) out.push_back({e, 1});
    if (c.size() > 2) out.push_back({1, static_cast<int>(c.size() - 1)});
    return out;
}

Int trace_form_det(const ZVec& a) {
    MonicIntPoly p;
    p.n = static_cast<int>(a.size());
    p.a = a;
    return poly_disc(p);
}

FieldPtr field_of(const LocalTorusData& d) { return make_field(make_poly(d.charpoly)); }

/// p-adic integer lift of a rational with nonnegative valuation, modulo p^N.
Int padic_lift(const Rat& x, const Int& pN) {
    if (x == 0) return 0;
    const Int num = x.get_num(), den = x.get_den();
    return mod(num * inv_mod(mod(den, pN), pN), pN);
}

int vp_det_hnf(const ZMat& h, const Int& p) {
    int v = 0;
    for (std::size_t i = 0; i < h.size(); ++i) v += valuation(h[i][i], p);
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------

bool ApartmentPoint::is_vertex() const {
    return std::all_of(t.begin(), t.end(), [](const Rat& x) { return x.get_den() == 1; });
}

double apartment_class_distance(const ApartmentPoint& u, const ApartmentPoint& v) {
    if (u.place != v.place || u.t.size() != v.t.size()) throw std::invalid_argument("apartment points differ in place or rank");
    Rat lo = u.t[0] - v.t[0], hi = lo;
    for (std::size_t i = 1; i < u.t.size(); ++i) {
        const Rat d = u.t[i] - v.t[i];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    const double lq = u.place == 0 ? 1.0 : log_of(u.place);
    return 0.5 * lq * Rat(hi - lo).get_d();
}

std::vector<long> elementary_exponents(const QMat& g, const Int& p) {
    const Int den = lcm_den(g);
    ZMat z(g.size(), ZVec(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) z[i][j] = Rat(g[i][j] * den).get_num();
    const ZVec d = elementary_divisors(z);
    std::vector<long> e;
    const int vd = valuation(den, p);
    for (const auto& x : d) {
        if (x == 0) throw std::invalid_argument("elementary_exponents: singular matrix");
        e.push_back(valuation(x, p) - vd);
    }
    std::sort(e.begin(), e.end());
    return e;
}

double vertex_distance(const QMat& g, const Int& p) {
    const auto e = elementary_exponents(g, p);
    return 0.5 * log_of(p) * static_cast<double>(e.back() - e.front());
}

// ---------------------------------------------------------------------------

ZVec rational_charpoly(const QMat& M) {
    const std::size_t n = M.size();
    std::vector<Rat> c(n + 1);
    c[n] = 1;
    QMat Mk = q_identity(n);
    for (std::size_t k = 1; k <= n; ++k) {
        if (k > 1) Mk = q_add(q_mul(M, Mk), q_scale(q_identity(n), c[n - k + 1]));
        c[n - k] = -q_trace(q_mul(M, Mk)) / Rat(static_cast<long>(k));
    }
    ZVec a(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (c[i].get_den() != 1) throw std::invalid_argument("characteristic polynomial is not integral");
        a[i] = c[i].get_num();
    }
    return a;
}

LocalTorusData make_local_data(const Int& p, const QMat& M) {
    if (p < 2 || mpz_probab_prime_p(p.get_mpz_t(), 30) == 0) throw std::invalid_argument("p must be prime");
    LocalTorusData d;
    d.p = p;
    d.M = M;
    d.charpoly = rational_charpoly(M);
    const Int disc = trace_form_det(d.charpoly);
    if (disc == 0) throw std::invalid_argument("characteristic polynomial is not squarefree");
    d.prec = valuation(disc, p) + 10;
    return d;
}

LocalTorusData conjugated_companion(const Int& p, const ZVec& poly, const QMat& g) {
    return make_local_data(p, q_mul(q_mul(q_inverse(g), companion_rows(poly)), g));
}

bool CanonicalNorm::split() const {
    return std::all_of(components.begin(), components.end(), [](const LocalComponent& c) { return c.e == 1 && c.f == 1; });
}

bool CanonicalNorm::unramified() const {
    return std::all_of(components.begin(), components.end(), [](const LocalComponent& c) { return c.e == 1; });
}

CanonicalNorm canonical_norm(const LocalTorusData& d) {
    const FieldPtr K = field_of(d);
    const OrderRep O = maximal_order(K);
    CanonicalNorm cn;
    cn.order = O.lat;
    cn.disc_exponent = valuation(O.disc, d.p);
    const QMat ob = O.lat.basis();
    const int n = d.n();
    std::vector<std::vector<long>> trials;
    for (int box = 1; box <= 3; ++box) {
        std::vector<long> c(static_cast<std::size_t>(n), -box);
        for (;;) {
            const long mx = std::abs(*std::max_element(c.begin(), c.end(), [](long x, long y) { return std::abs(x) < std::abs(y); }));
            if (mx == box) trials.push_back(c);
            std::size_t k = 0;
            while (k < c.size() && ++c[k] > box) c[k++] = -box;
            if (k == c.size()) break;
        }
    }
    for (const auto& c : trials) {
        QVec alpha(static_cast<std::size_t>(n), Rat(0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) alpha[static_cast<std::size_t>(j)] += Rat(c[static_cast<std::size_t>(i)]) * ob[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const ZVec cp = rational_charpoly(K->mul_matrix(alpha));
        const Int disc = trace_form_det(cp);
        if (disc == 0 || valuation(disc, d.p) != cn.disc_exponent) continue;
        cn.components = kummer_components(cp, d.p.get_si());
        return cn;
    }
    throw std::domain_error("canonical_norm: no p-maximal monogenic generator found (common index divisor)");
}

long canonical_norm_exponent(const std::vector<Rat>& w) {
    const Rat m = *std::min_element(w.begin(), w.end());
    return rfloor(m).get_num().get_si();
}

LambdaOrder lambda_order(const LocalTorusData& d) {
    const std::size_t n = static_cast<std::size_t>(d.n());
    const auto pw = powers(d.M);
    ZMat V(n, ZVec(n * n));
    QMat Vq(n, QVec(n * n));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) Vq[j][a * n + b] = pw[j][a][b];
        const Int den = lcm_den(Vq[j]);
        for (std::size_t k = 0; k < n * n; ++k) V[j][k] = Rat(Vq[j][k] * den).get_num();
    }
    const ZMat sat = saturation(V);
    LambdaOrder L;
    const QMat VVt_inv = q_inverse(q_mul(Vq, q_transpose(Vq)));
    QMat coords;
    for (const auto& row : sat) {
        QMat f = qmat(n, n);
        QVec fv(n * n);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) f[a][b] = fv[a * n + b] = Rat(row[a * n + b]);
        L.basis.push_back(f);
        coords.push_back(q_vecmat(q_vecmat(fv, q_transpose(Vq)), VVt_inv));
    }
    L.coords = lattice_from_rows(coords, n);
    L.trace_form = zmat(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) L.trace_form[i][j] = q_trace(q_mul(L.basis[i], L.basis[j])).get_num();
    L.trace_valuation = valuation(z_det(L.trace_form), d.p);
    L.disc_exponent = L.trace_valuation + static_cast<int>(n - 1) * valuation(Int(static_cast<long>(2 * n)), d.p);
    L.disc_D = ipow(d.p, L.disc_exponent);
    return L;
}

Int algebra_disc(const LocalTorusData& d) {
    return ipow(d.p, valuation(maximal_order(field_of(d)).disc, d.p));
}

Int dual_volume_ratio(const LocalTorusData& d) {
    const std::size_t n = static_cast<std::size_t>(d.n());
    const auto pw = powers(d.M);
    QMat T = qmat(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) T[j][k] = q_trace(q_mul(pw[j], pw[k]));
    const LambdaOrder L = lambda_order(d);
    const QMat B = L.coords.basis();
    const Lattice dual = lattice_from_rows(q_inverse(q_mul(T, q_transpose(B))), n);
    if (!lat_contains(dual, L.coords)) throw std::logic_error("dual_volume_ratio: Lambda not inside its dual");
    const int v = valuation(L.coords.covolume(), d.p) - valuation(dual.covolume(), d.p);
    return ipow(d.p, v);
}

Int order_index(const LocalTorusData& d) {
    const Lattice O = maximal_order(field_of(d)).lat;
    const LambdaOrder L = lambda_order(d);
    return ipow(d.p, valuation(Rat(L.coords.covolume() / O.covolume()), d.p));
}

double unit_density(const LocalTorusData& d) {
    const LambdaOrder L = lambda_order(d);
    const CanonicalNorm cn = canonical_norm(d);
    const std::size_t n = static_cast<std::size_t>(d.n());
    const long p = d.p.get_si();
    std::vector<ZMat> f;
    for (const auto& b : L.basis) {
        ZMat z = zmat(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) z[i][j] = b[i][j].get_num();
        f.push_back(z);
    }
    std::vector<long> c(n, 0);
    std::size_t units = 0, total = 0;
    for (;;) {
        ZMat x = zmat(n, n);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) x[i][j] += c[k] * f[k][i][j];
        units += mod(z_det(x), d.p) != 0;
        ++total;
        std::size_t k = 0;
        while (k < n && ++c[k] == p) c[k++] = 0;
        if (k == n) break;
    }
    double rho_o = 1;
    for (const auto& comp : cn.components) rho_o *= 1 - std::pow(static_cast<double>(p), -comp.f);
    const double rho_l = static_cast<double>(units) / static_cast<double>(total);
    return rho_l / (rho_o * order_index(d).get_d());
}

// ---------------------------------------------------------------------------

bool is_split_unramified(const LocalTorusData& d) {
    if (valuation(trace_form_det(d.charpoly), d.p) != 0) return false;
    std::size_t roots = 0;
    for (long r = 0; r < d.p.get_si(); ++r) roots += eval_mod(d.charpoly, Int(r), d.p) == 0;
    return roots == d.charpoly.size();
}

std::vector<Int> split_roots(const LocalTorusData& d, int prec) {
    if (!is_split_unramified(d)) throw std::invalid_argument("split_roots: A is not split unramified");
    const Int pk = ipow(d.p, prec);
    std::vector<Int> out;
    for (long r0 = 0; r0 < d.p.get_si(); ++r0) {
        if (eval_mod(d.charpoly, Int(r0), d.p) != 0) continue;
        Int r = r0;
        for (Int m = d.p; m < pk;) {
            m = std::min(Int(m * m), pk);
            r = mod(r - eval_mod(d.charpoly, r, m) * inv_mod(deval_mod(d.charpoly, r, m), m), m);
        }
        out.push_back(r);
    }
    return out;
}

namespace {

/// Rows: left eigenvectors e * eps_i for the cyclic vector e, eps_i the eigen-idempotents.
struct EigenFrame {
    QMat W;
    QMat V;     // rows e M^j
    QMat vand;  // vand[j][i] = lambda_i^j
};

EigenFrame eigen_frame(const LocalTorusData& d, int prec) {
    const std::size_t n = static_cast<std::size_t>(d.n());
    const auto lam = split_roots(d, prec);
    const auto pw = powers(d.M);
    EigenFrame fr;
    for (std::size_t c = 0; c < n; ++c) {
        QMat V(n);
        for (std::size_t j = 0; j < n; ++j) V[j] = pw[j][c];
        if (q_det(V) != 0) {
            fr.V = V;
            break;
        }
    }
    if (fr.V.empty()) throw std::domain_error("eigen_frame: no cyclic coordinate vector");
    fr.vand = qmat(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        Rat x = 1;
        for (std::size_t j = 0; j < n; ++j) {
            fr.vand[j][i] = x;
            x *= Rat(lam[i]);
        }
    }
    fr.W = q_mul(q_inverse(fr.vand), fr.V);
    return fr;
}

/// Integral HNF of p^s * (rows of B) as a Z_p-lattice modulo p^N; returns false when p^N Z_p^n is not inside.
bool padic_hnf(const QMat& B, const Int& p, int N, ZMat& out) {
    const std::size_t n = B.size();
    int vmin = INT_MAX;
    for (const auto& row : B)
        for (const auto& x : row)
            if (x != 0) vmin = std::min(vmin, valuation(x, p));
    const int s = std::max(0, -vmin);
    const Int pN = ipow(p, N);
    const Rat scale = Rat(ipow(p, s));
    ZMat gens;
    for (const auto& row : B) {
        ZVec z(n);
        for (std::size_t j = 0; j < n; ++j) z[j] = padic_lift(row[j] * scale, pN);
        gens.push_back(z);
    }
    for (std::size_t j = 0; j < n; ++j) {
        ZVec z(n, Int(0));
        z[j] = pN;
        gens.push_back(z);
    }
    out = hnf_full(gens, n);
    const ZVec ed = elementary_divisors(out);
    int K = 0;
    for (const auto& e : ed) K = std::max(K, valuation(e, p));
    return K + 5 <= N;
}

}  // namespace

DeltaResult delta_distance(const LocalTorusData& d) {
    const std::size_t n = static_cast<std::size_t>(d.n());
    const LambdaOrder L = lambda_order(d);
    const long R = 2 * L.disc_exponent + static_cast<long>(n);
    for (int prec = d.prec, round = 0; round <= 3; ++round, prec *= 2) {
        const EigenFrame fr = eigen_frame(d, prec + 2 * static_cast<int>(R));
        const Int pN = ipow(d.p, prec + 2 * R);
        int vmin = INT_MAX;
        for (const auto& row : fr.W)
            for (const auto& x : row)
                if (x != 0) vmin = std::min(vmin, valuation(x, d.p));
        const Rat scale = Rat(ipow(d.p, std::max(0, -vmin)));
        ZMat W = zmat(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) W[i][j] = padic_lift(fr.W[i][j] * scale, pN);
        DeltaResult best;
        best.half_steps = LONG_MAX;
        bool exhausted = false;
        std::vector<long> s(n, 0);
        s[0] = R;
        for (;;) {
            ZMat g = W;
            for (std::size_t i = 0; i < n; ++i) {
                const Int f = ipow(d.p, s[i]);
                for (auto& x : g[i]) x *= f;
            }
            long lo = LONG_MAX, hi = LONG_MIN;
            for (const auto& e : elementary_divisors(g)) {
                const long v = valuation(e, d.p);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi + 5 > prec + 2 * R) exhausted = true;
            if (hi - lo < best.half_steps) {
                best.half_steps = hi - lo;
                best.shift = s;
            }
            std::size_t k = 1;
            while (k < n && ++s[k] > 2 * R) s[k++] = 0;
            if (k == n) break;
        }
        if (exhausted) continue;
        best.delta = 0.5 * log_of(d.p) * static_cast<double>(best.half_steps);
        return best;
    }
    throw ConvergenceError("delta_distance: p-adic precision exhausted");
}

// ---------------------------------------------------------------------------

namespace {

struct LatticeProfile {
    ZMat h;
    std::vector<long> lo;
    long K = 0;
    long vol = 0;
};

LatticeProfile profile(const Int& p, const ZMat& gens) {
    const std::size_t n = gens.empty() ? 0 : gens[0].size();
    LatticeProfile pr;
    pr.h = hnf_full(gens, n);
    pr.lo.assign(n, LONG_MAX);
    for (const auto& row : pr.h)
        for (std::size_t j = 0; j < n; ++j)
            if (row[j] != 0) pr.lo[j] = std::min<long>(pr.lo[j], valuation(row[j], p));
    for (const auto& e : elementary_divisors(pr.h)) pr.K = std::max<long>(pr.K, valuation(e, p));
    pr.vol = vp_det_hnf(pr.h, p);
    return pr;
}

/// v_p of the covolume of L + S_b with S_b = prod p^{b_j} Z_p.
long sum_valuation(const LatticeProfile& pr, const Int& p, const std::vector<long>& b) {
    const std::size_t n = pr.h.size();
    ZMat gens = pr.h;
    for (std::size_t j = 0; j < n; ++j) {
        ZVec z(n, Int(0));
        z[j] = ipow(p, b[j]);
        gens.push_back(z);
    }
    return vp_det_hnf(hnf_full(gens, n), p);
}

}  // namespace

double local_integral_lattice(const Int& p, const ZMat& h) {
    const LatticeProfile pr = profile(p, h);
    const std::size_t n = pr.h.size();
    const double lp = log_of(p);
    const double q = std::pow(p.get_d(), -0.5);
    std::vector<long> hi(n);
    for (std::size_t j = 0; j < n; ++j) hi[j] = std::max(pr.K, pr.lo[j] + 1);
    std::vector<long> b = pr.lo;
    std::vector<double> terms;
    for (;;) {
        double logw = 0;
        long sb = 0;
        for (std::size_t j = 0; j < n; ++j) {
            logw += 0.5 * lp * static_cast<double>(b[j]);
            if (b[j] == pr.lo[j] || b[j] == hi[j]) logw -= std::log(1 - q);
            sb += b[j];
        }
        const long fv = pr.vol + sb - sum_valuation(pr, p, b);
        terms.push_back(std::exp(logw - lp * static_cast<double>(fv) + 0.5 * lp * static_cast<double>(pr.vol)));
        std::size_t k = 0;
        while (k < n && ++b[k] > hi[k]) {
            b[k] = pr.lo[k];
            ++k;
        }
        if (k == n) break;
    }
    std::sort(terms.begin(), terms.end());
    double s = 0;
    for (double t : terms) s += t;
    return std::pow(1 - q, static_cast<double>(n)) * s;
}

double local_integral_direct(const Int& p, const ZMat& h, int window) {
    const std::size_t n = h.size();
    ZMat shifted = h;
    const Int pw = ipow(p, window);
    for (auto& row : shifted)
        for (auto& x : row) x *= pw;
    const LatticeProfile base = profile(p, h);
    const LatticeProfile pr = profile(p, shifted);
    const double lp = log_of(p);
    const double q = std::pow(p.get_d(), -0.5);
    std::vector<long> lo(n), hi(n);
    for (std::size_t j = 0; j < n; ++j) {
        lo[j] = base.lo[j] - window;
        hi[j] = base.K + window;
    }
    std::vector<long> b = lo;
    std::vector<double> terms;
    for (;;) {
        std::vector<long> bs(n);
        long sb = 0;
        for (std::size_t j = 0; j < n; ++j) {
            bs[j] = b[j] + window;
            sb += b[j];
        }
        // vol(L cap S_b) = p^{n window} vol(p^window L cap S_{b + window})
        const long fv = pr.vol + (sb + static_cast<long>(n) * window) - sum_valuation(pr, p, bs) - static_cast<long>(n) * window;
        terms.push_back(std::exp(0.5 * lp * static_cast<double>(sb) - lp * static_cast<double>(fv) +
                                 0.5 * lp * static_cast<double>(base.vol)));
        std::size_t k = 0;
        while (k < n && ++b[k] > hi[k]) {
            b[k] = lo[k];
            ++k;
        }
        if (k == n) break;
    }
    std::sort(terms.begin(), terms.end());
    double s = 0;
    for (double t : terms) s += t;
    return std::pow(1 - q, static_cast<double>(n)) * s;
}

ZMat vertex_norm_lattice(const LocalTorusData& d, const std::vector<long>& t) {
    const std::size_t n = static_cast<std::size_t>(d.n());
    if (t.size() != n) throw std::invalid_argument("vertex_norm_lattice: wrong number of exponents");
    long spread = *std::max_element(t.begin(), t.end()) - *std::min_element(t.begin(), t.end());
    for (int N = d.prec + static_cast<int>(spread) + 10, round = 0; round <= 3; ++round, N *= 2) {
        const EigenFrame fr = eigen_frame(d, N);
        QMat D = qmat(n, n);
        for (std::size_t i = 0; i < n; ++i) D[i][i] = t[i] >= 0 ? Rat(ipow(d.p, t[i])) : Rat(1, ipow(d.p, -t[i]));
        const QMat B = q_mul(q_mul(D, q_inverse(fr.V)), fr.vand);
        ZMat h;
        if (padic_hnf(B, d.p, N, h)) return h;
    }
    throw ConvergenceError("vertex_norm_lattice: p-adic precision exhausted");
}

double local_integral(const LocalTorusData& d, const std::vector<long>& t) {
    return local_integral_lattice(d.p, vertex_norm_lattice(d, t));
}

MonteCarloValue local_integral_real(const RMat& Q, std::size_t samples, std::uint64_t seed, double target) {
    const int n = static_cast<int>(Q.rows());
    Eigen::LLT<RMat> llt(Q);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("local_integral_real: form is not positive definite");
    const RMat Qi = Q.inverse();
    RVec U(n);
    double box = 1;
    for (int i = 0; i < n; ++i) {
        U(i) = std::pow(Qi(i, i), 0.25);
        box *= U(i);
    }
    const int orthants = 1 << n;
    const std::size_t per = std::max<std::size_t>(1, samples / static_cast<std::size_t>(orthants));
    double total = 0, var = 0;
    RVec x(n);
    for (int o = 0; o < orthants; ++o) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < per; ++i) {
            for (int k = 0; k < n; ++k) {
                const std::uint64_t bits = sample_seed(seed, (static_cast<std::uint64_t>(o) << 40) + i * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(k));
                const double u = static_cast<double>(bits >> 11) * 0x1.0p-53 * U(k);
                x(k) = ((o >> k) & 1 ? -1.0 : 1.0) * u * u;
            }
            hits += x.dot(Q * x) <= 1.0;
        }
        const double frac = static_cast<double>(hits) / static_cast<double>(per);
        total += box * frac;
        var += box * box * frac * (1 - frac) / static_cast<double>(per);
    }
    const double vn = std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1) / std::sqrt(Q.determinant());
    const double scale = std::pow(2.0, n) / std::sqrt(vn);
    MonteCarloValue res;
    res.value = scale * total;
    res.stderr_ = scale * std::sqrt(var);
    res.samples = per * static_cast<std::size_t>(orthants);
    res.converged = res.value > 0 && res.stderr_ <= target * res.value;
    return res;
}

// ---------------------------------------------------------------------------

namespace {

/// Fourier transform of the indicator of p^a Z_p at x = p^v, from the finite character sum.
double ball_fourier(long p, long a, long v) {
    const long m = std::max(a, -v) + 1;
    const long terms = static_cast<long>(std::llround(std::pow(static_cast<double>(p), static_cast<double>(m - a))));
    const long period = v + a >= 0 ? 1 : static_cast<long>(std::llround(std::pow(static_cast<double>(p), static_cast<double>(-(v + a)))));
    double re = 0;
    for (long j = 0; j < terms; ++j) re += std::cos(2 * M_PI * static_cast<double>(j % period) / static_cast<double>(period));
    return re * std::pow(static_cast<double>(p), static_cast<double>(-m));
}

}  // namespace

TateCheck tate_local_check(const Int& p, const std::vector<double>& angles, const std::vector<long>& a,
                           const std::vector<std::complex<double>>& s_grid) {
    if (angles.size() != a.size()) throw std::invalid_argument("tate_local_check: one angle and exponent per component");
    using C = std::complex<double>;
    const long pl = p.get_si();
    const double pd = static_cast<double>(pl);
    TateCheck res;
    for (const C& s : s_grid) {
        C lhs = 1, rhs = 1;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const C chi = std::polar(1.0, 2 * M_PI * angles[i]);
            const C X = chi * std::pow(pd, -s);
            const C Y = std::conj(chi) * std::pow(pd, -(1.0 - s));
            // zeta integral of Phi against psi_s: shells v >= a_i, divided by L(psi, s)
            C z = 0;
            const long vtop = a[i] + 3;
            for (long v = a[i]; v < vtop; ++v) z += std::pow(X, v);
            z += std::pow(X, vtop) / (1.0 - X);
            lhs *= z * (1.0 - X);
            // dual side: shells of the Fourier transform, numerically below the plateau
            C zh = 0;
            const long v0 = -a[i] - 3, v1 = -a[i] + 2;
            for (long v = v0; v < v1; ++v) zh += ball_fourier(pl, a[i], v) * std::pow(Y, v);
            zh += ball_fourier(pl, a[i], v1) * std::pow(Y, v1) / (1.0 - Y);
            rhs *= zh * (1.0 - Y);
        }
        const C eps = rhs / lhs;
        res.eps.push_back(eps);
        res.max_relerr = std::max(res.max_relerr, std::abs(lhs - rhs) / std::abs(rhs));
        if (std::abs(s.real() - 0.5) < 1e-15) res.max_eps_deviation = std::max(res.max_eps_deviation, std::abs(std::abs(eps) - 1));
    }
    return res;
}

// ---------------------------------------------------------------------------

LocalTorusData random_split_data(const Int& p, int n, std::mt19937_64& rng) {
    const long pl = p.get_si();
    std::uniform_int_distribution<long> root(0, pl - 1), small(-2, 2), pick(0, 2);
    for (;;) {
        std::vector<long> r;
        while (static_cast<int>(r.size()) < n) {
            const long x = root(rng);
            if (std::find(r.begin(), r.end(), x) == r.end()) r.push_back(x);
        }
        ZVec poly{Int(1)};  // high degree first while building
        for (long x : r) {
            ZVec next(poly.size() + 1, Int(0));
            for (std::size_t k = 0; k < poly.size(); ++k) {
                next[k] += poly[k];
                next[k + 1] -= poly[k] * x;
            }
            poly = next;
        }
        ZVec a(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) a[static_cast<std::size_t>(k)] = poly[static_cast<std::size_t>(n - k)] + p * small(rng);
        try {
            make_poly(a);
        } catch (const std::invalid_argument&) {
            continue;
        }
        // random g = U1 diag(p^k) U2 with elementary unimodular factors
        auto unimodular = [&]() {
            QMat u = q_identity(static_cast<std::size_t>(n));
            std::uniform_int_distribution<int> idx(0, n - 1);
            for (int step = 0; step < 4; ++step) {
                const int i = idx(rng), j = idx(rng);
                if (i == j) continue;
                const long c = small(rng);
                for (int k = 0; k < n; ++k) u[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] += Rat(c) * u[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
            }
            return u;
        };
        QMat dg = q_identity(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) dg[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = Rat(ipow(p, pick(rng)));
        const QMat g = q_mul(q_mul(unimodular(), dg), unimodular());
        return conjugated_companion(p, a, g);
    }
}

namespace {

std::string datum_label(const LocalTorusData& d) {
    std::ostringstream os;
    os << "p=" << d.p << " P=[";
    for (std::size_t i = 0; i < d.charpoly.size(); ++i) os << (i ? "," : "") << d.charpoly[i];
    os << "]";
    return os.str();
}

}  // namespace

LemmaReport check_dual_volume(const std::vector<LocalTorusData>& data) {
    LemmaReport rep;
    rep.name = "dual_volume";
    rep.worst_margin = 1;
    for (const auto& d : data) {
        const Int ratio = dual_volume_ratio(d);
        const Int disc = lambda_order(d).disc_D;
        ++rep.cases;
        const bool large_p = d.p > d.n();
        if (!large_p || ratio == disc) ++rep.passed;
        const double q = Rat(Rat(disc) / Rat(ratio)).get_d();
        if (large_p) rep.worst_margin = std::min(rep.worst_margin, ratio == disc ? 1.0 : 0.0);
        rep.rows.push_back(datum_label(d) + " disc_D=" + to_string(disc) + " ratio=" + to_string(ratio) + " quotient=" + std::to_string(q));
    }
    return rep;
}

LemmaReport check_unit_density(const std::vector<LocalTorusData>& data) {
    LemmaReport rep;
    rep.name = "unit_density";
    rep.worst_margin = INFINITY;
    for (const auto& d : data) {
        const double pd = d.p.get_d();
        const int n = d.n();
        const double dens = unit_density(d);
        const Int dD = lambda_order(d).disc_D, dA = algebra_disc(d);
        const double bound = std::max(1 - n / pd, std::pow(pd, -n)) / std::sqrt(Rat(Rat(dD) / Rat(dA)).get_d());
        const Int idx = order_index(d);
        const bool index_ok = d.p <= n || Rat(idx * idx) == Rat(dD) / Rat(dA);
        ++rep.cases;
        if (dens >= bound * (1 - 1e-12) && index_ok) ++rep.passed;
        rep.worst_margin = std::min(rep.worst_margin, dens / bound);
        rep.rows.push_back(datum_label(d) + " density=" + std::to_string(dens) + " bound=" + std::to_string(bound));
    }
    return rep;
}

LemmaReport check_extreme(const std::vector<LocalTorusData>& data, std::size_t per_datum, std::uint64_t seed) {
    LemmaReport rep;
    rep.name = "extreme";
    rep.worst_margin = INFINITY;
    std::mt19937_64 rng(seed);
    for (const auto& d : data) {
        const FieldPtr K = field_of(d);
        const QMat B = canonical_norm(d).order.basis();
        const QMat Binv = q_inverse(B);
        const int prec = 40;
        const Int pk = ipow(d.p, prec);
        const auto lam = split_roots(d, prec);
        const long range = d.p.get_si() * d.p.get_si() * d.p.get_si();
        std::uniform_int_distribution<long> coef(-range, range);
        for (std::size_t it = 0; it < per_datum; ++it) {
            QVec c(static_cast<std::size_t>(d.n()));
            for (auto& x : c) x = Rat(coef(rng));
            if (K->norm(c) == 0) continue;
            const QMat g = q_mul(q_mul(B, K->mul_matrix(c)), Binv);
            const auto e = elementary_exponents(g, d.p);
            long vlo = LONG_MAX, vhi = LONG_MIN;
            for (const auto& l : lam) {
                Int v = 0;
                for (std::size_t j = c.size(); j-- > 0;) v = mod(v * l + c[j].get_num(), pk);
                const long val = v == 0 ? prec : valuation(v, d.p);
                if (val >= prec) throw ConvergenceError("check_extreme: valuation beyond working precision");
                vlo = std::min(vlo, val);
                vhi = std::max(vhi, val);
            }
            const double dist = 0.5 * log_of(d.p) * static_cast<double>(e.back() - e.front());
            const double rhs = 0.5 * log_of(d.p) * static_cast<double>(vhi - vlo);
            ++rep.cases;
            if (e.back() - e.front() >= vhi - vlo) ++rep.passed;
            rep.worst_margin = std::min(rep.worst_margin, dist - rhs);
        }
    }
    return rep;
}

LemmaReport check_delta_bound(const std::vector<LocalTorusData>& data) {
    LemmaReport rep;
    rep.name = "delta_bound";
    rep.worst_margin = INFINITY;
    for (const auto& d : data) {
        const DeltaResult dr = delta_distance(d);
        const LambdaOrder L = lambda_order(d);
        const int va = valuation(algebra_disc(d), d.p);
        const double bound = (L.disc_exponent - va) * log_of(d.p) / (4.0 * d.n());
        ++rep.cases;
        if (d.p <= d.n() || dr.delta >= bound - 1e-12) ++rep.passed;
        rep.worst_margin = std::min(rep.worst_margin, dr.delta - bound);
        rep.rows.push_back(datum_label(d) + " delta=" + std::to_string(dr.delta) + " bound=" + std::to_string(bound));
    }
    return rep;
}

GrowthFit unit_shell_growth(const Int& p, int n, double rmax) {
    const double lp = log_of(p);
    const long dmax = static_cast<long>(std::floor((rmax + 1) / lp)) + 1;
    std::vector<double> by_spread(static_cast<std::size_t>(dmax + 1), 0.0);
    std::vector<long> mu(static_cast<std::size_t>(n), -dmax);
    mu[0] = 0;
    for (;;) {
        const long spread = *std::max_element(mu.begin(), mu.end()) - *std::min_element(mu.begin(), mu.end());
        if (spread <= dmax) by_spread[static_cast<std::size_t>(spread)] += 1;
        std::size_t k = 1;
        while (k < mu.size() && ++mu[k] > dmax) mu[k++] = -dmax;
        if (k >= mu.size()) break;
    }
    GrowthFit g;
    std::vector<double> lx, ly;
    for (long R = 0; static_cast<double>(R) <= rmax; ++R) {
        double c = 0;
        for (long D = 0; D <= dmax; ++D) {
            const double x = static_cast<double>(D) * lp;
            if (x >= static_cast<double>(R) && x <= static_cast<double>(R + 1)) c += by_spread[static_cast<std::size_t>(D)];
        }
        g.radius.push_back(static_cast<double>(R));
        g.count.push_back(c);
        if (c > 0) {
            lx.push_back(std::log(1.0 + static_cast<double>(R)));
            ly.push_back(std::log(c));
        }
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    g.exponent = sxx > 0 ? sxy / sxx : 0.0;
    return g;
}

}  // namespace toruslab
