#include "toruslab/field.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

namespace toruslab {

ZVec power_traces(const MonicIntPoly& p) {
    const int n = p.n;
    ZVec pk(2 * n - 1, Int(0));
    pk[0] = n;
    for (int k = 1; k <= 2 * n - 2; ++k) {
        Int s = 0;
        for (int i = 1; i <= std::min(k - 1, n); ++i) s += p.a[n - i] * pk[k - i];
        if (k <= n) s += k * p.a[n - k];
        pk[k] = -s;
    }
    return pk;
}

Int poly_disc(const MonicIntPoly& p) {
    if (static_cast<int>(p.a.size()) != p.n || p.n < 1) throw std::invalid_argument("poly_disc: not a monic polynomial");
    ZVec pk = power_traces(p);
    ZMat t = zmat(p.n, p.n);
    for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j) t[i][j] = pk[i + j];
    return z_det(t);
}

namespace {

std::vector<std::complex<long double>> polished_roots(const ZVec& a, int r) {
    const int n = static_cast<int>(a.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) c(i, i - 1) = 1;
    for (int i = 0; i < n; ++i) c(i, n - 1) = -a[i].get_d();
    Eigen::EigenSolver<Eigen::MatrixXd> es(c, false);
    std::vector<std::complex<long double>> z;
    for (int i = 0; i < n; ++i) z.emplace_back(es.eigenvalues()(i).real(), es.eigenvalues()(i).imag());
    std::sort(z.begin(), z.end(), [](auto x, auto y) { return std::abs(x.imag()) < std::abs(y.imag()); });
    std::vector<long double> al(n);
    for (int i = 0; i < n; ++i) al[i] = static_cast<long double>(a[i].get_d());
    for (int i = 0; i < n; ++i) {
        if (i < r) z[i] = {z[i].real(), 0.0L};
        for (int it = 0; it < 60; ++it) {
            std::complex<long double> f = 1, df = 0;
            for (int k = n - 1; k >= 0; --k) {
                df = df * z[i] + f;
                f = f * z[i] + al[k];
            }
            if (df == std::complex<long double>(0)) break;
            auto step = f / df;
            if (i < r) step = {step.real(), 0.0L};
            z[i] -= step;
            if (std::abs(step) <= 1e-19L * (1 + std::abs(z[i]))) break;
        }
    }
    std::sort(z.begin(), z.begin() + r, [](auto x, auto y) { return x.real() < y.real(); });
    for (int i = r; i < n; ++i)
        if (z[i].imag() < 0) z[i] = std::conj(z[i]);
    std::vector<std::complex<long double>> cx(z.begin() + r, z.end());
    std::sort(cx.begin(), cx.end(), [](auto x, auto y) { return x.real() < y.real(); });
    // each complex pair appears twice after conjugation; keep one
    std::vector<std::complex<long double>> res(z.begin(), z.begin() + r);
    for (std::size_t i = 0; i < cx.size(); i += 2) res.push_back(cx[i]);
    return res;
}

bool is_square(const Int& x) { return x >= 0 && mpz_perfect_square_p(x.get_mpz_t()) != 0; }

}  // namespace

MonicIntPoly make_poly(const ZVec& a) {
    MonicIntPoly p;
    p.n = static_cast<int>(a.size());
    p.a = a;
    if (p.n != 2 && p.n != 3) throw std::invalid_argument("polynomial degree must be 2 or 3");
    const Int d = poly_disc(p);
    if (d == 0) throw std::invalid_argument("polynomial has zero discriminant");
    if (p.n == 2) {
        if (is_square(d)) throw std::invalid_argument("polynomial is reducible");
        p.r = d > 0 ? 2 : 0;
        p.s = d > 0 ? 0 : 1;
    } else {
        p.r = d > 0 ? 3 : 1;
        p.s = d > 0 ? 0 : 1;
        if (a[0] == 0) throw std::invalid_argument("polynomial is reducible");
        for (const auto& z : polished_roots(a, p.r)) {
            if (std::abs(static_cast<double>(z.imag())) > 1e-6) continue;
            const double x = static_cast<double>(z.real());
            for (double c : {std::floor(x), std::ceil(x)}) {
                if (std::abs(c) > 1e15) continue;
                Int v(static_cast<long>(c));
                Int val = v * v * v + a[2] * v * v + a[1] * v + a[0];
                if (val == 0) throw std::invalid_argument("polynomial is reducible");
            }
        }
    }
    return p;
}

MonicIntPoly parse_poly(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(c)));
    if (s.empty()) throw std::invalid_argument("empty polynomial");
    std::map<int, Int> terms;
    std::size_t i = 0;
    while (i < s.size()) {
        int sign = 1;
        if (s[i] == '+' || s[i] == '-') {
            if (s[i] == '-') sign = -1;
            ++i;
        }
        std::string digits;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits.push_back(s[i++]);
        if (i < s.size() && s[i] == '*') ++i;
        int deg = 0;
        if (i < s.size() && (s[i] == 'x' || s[i] == 't')) {
            ++i;
            deg = 1;
            if (i < s.size() && s[i] == '^') {
                ++i;
                std::string e;
                while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) e.push_back(s[i++]);
                if (e.empty()) throw std::invalid_argument("bad exponent in polynomial: " + text);
                deg = std::stoi(e);
            }
        } else if (digits.empty()) {
            throw std::invalid_argument("cannot parse polynomial: " + text);
        }
        Int c = digits.empty() ? Int(1) : parse_int(digits);
        terms[deg] += sign * c;
        if (i < s.size() && s[i] != '+' && s[i] != '-') throw std::invalid_argument("cannot parse polynomial: " + text);
    }
    int n = 0;
    for (const auto& [d, c] : terms)
        if (c != 0) n = std::max(n, d);
    if (terms[n] != 1) throw std::invalid_argument("polynomial is not monic: " + text);
    ZVec a(n, Int(0));
    for (const auto& [d, c] : terms)
        if (d < n) a[d] = c;
    return make_poly(a);
}

std::string poly_string(const MonicIntPoly& p) {
    std::string out = p.n == 1 ? "x" : "x^" + std::to_string(p.n);
    for (int d = p.n - 1; d >= 0; --d) {
        const Int& c = p.a[d];
        if (c == 0) continue;
        out += c < 0 ? " - " : " + ";
        Int m = abs(c);
        if (d == 0 || m != 1) out += m.get_str();
        if (d >= 1) out += "x";
        if (d >= 2) out += "^" + std::to_string(d);
    }
    return out;
}

std::vector<long long> poly_roots_mod(const MonicIntPoly& p, long long q) {
    std::vector<long long> roots;
    std::vector<long long> a(p.n);
    for (int i = 0; i < p.n; ++i) {
        Int m;
        mpz_fdiv_r_ui(m.get_mpz_t(), p.a[i].get_mpz_t(), static_cast<unsigned long>(q));
        a[i] = m.get_si();
    }
    for (long long x = 0; x < q; ++x) {
        __int128 v = 1;
        for (int k = p.n - 1; k >= 0; --k) v = (v * x + a[k]) % q;
        if (v == 0) roots.push_back(x);
    }
    return roots;
}

EmbeddingRep real_embedding(const MonicIntPoly& p) {
    EmbeddingRep e;
    e.poly = p;
    auto z = polished_roots(p.a, p.r);
    for (int i = 0; i < p.r; ++i) e.real_roots.push_back(static_cast<double>(z[i].real()));
    for (std::size_t i = p.r; i < z.size(); ++i)
        e.complex_roots.emplace_back(static_cast<double>(z[i].real()), static_cast<double>(z[i].imag()));
    return e;
}

Field::Field(MonicIntPoly p) : p_(std::move(p)) {
    emb_ = real_embedding(p_);
    roots_ = polished_roots(p_.a, p_.r);
    const int n = p_.n;
    red_.assign(2 * n - 1, ZVec(n, Int(0)));
    for (int k = 0; k < n; ++k) red_[k][k] = 1;
    for (int k = n; k <= 2 * n - 2; ++k) {
        const ZVec& prev = red_[k - 1];
        ZVec cur(n, Int(0));
        for (int i = 0; i + 1 < n; ++i) cur[i + 1] = prev[i];
        const Int& top = prev[n - 1];
        for (int i = 0; i < n; ++i) cur[i] -= top * p_.a[i];
        red_[k] = cur;
    }
}

QVec Field::one() const {
    QVec v(n(), Rat(0));
    v[0] = 1;
    return v;
}

QVec Field::gen() const {
    QVec v(n(), Rat(0));
    v[1] = 1;
    return v;
}

QVec Field::mul(const QVec& x, const QVec& y) const {
    const int nn = n();
    QVec c(nn, Rat(0));
    for (int i = 0; i < nn; ++i) {
        if (x[i] == 0) continue;
        for (int j = 0; j < nn; ++j) {
            if (y[j] == 0) continue;
            const Rat xy = x[i] * y[j];
            const ZVec& rd = red_[i + j];
            for (int k = 0; k < nn; ++k)
                if (rd[k] != 0) c[k] += xy * rd[k];
        }
    }
    return c;
}

QMat Field::mul_matrix(const QVec& x) const {
    QMat m(n());
    for (int i = 0; i < n(); ++i) {
        QVec e(n(), Rat(0));
        e[i] = 1;
        m[i] = mul(e, x);
    }
    return m;
}

QVec Field::inverse(const QVec& x) const { return q_inverse(mul_matrix(x))[0]; }

Rat Field::norm(const QVec& x) const { return q_det(mul_matrix(x)); }

Rat Field::trace(const QVec& x) const {
    QMat m = mul_matrix(x);
    Rat t = 0;
    for (int i = 0; i < n(); ++i) t += m[i][i];
    return t;
}

QVec Field::eval_poly(const ZVec& coeffs) const {
    QVec acc(n(), Rat(0));
    QVec pw = one();
    for (const auto& c : coeffs) {
        for (int k = 0; k < n(); ++k) acc[k] += c * pw[k];
        pw = mul(pw, gen());
    }
    return acc;
}

std::vector<std::complex<double>> Field::sigma(const QVec& x) const {
    std::vector<std::complex<double>> out;
    out.reserve(roots_.size());
    std::vector<long double> xl(n());
    for (int j = 0; j < n(); ++j) xl[j] = static_cast<long double>(x[j].get_d());
    for (const auto& rho : roots_) {
        std::complex<long double> acc = 0;
        for (int j = n() - 1; j >= 0; --j) acc = acc * rho + xl[j];
        out.emplace_back(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
    }
    return out;
}

std::vector<double> Field::place_abs(const QVec& x) const {
    auto s = sigma(x);
    std::vector<double> a(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) a[i] = std::abs(s[i]);
    return a;
}

RVec Field::minkowski(const QVec& x) const {
    auto sg = sigma(x);
    RVec v(n());
    for (int i = 0; i < r(); ++i) v(i) = sg[i].real();
    for (int j = 0; j < s(); ++j) {
        v(r() + 2 * j) = std::sqrt(2.0) * sg[r() + j].real();
        v(r() + 2 * j + 1) = std::sqrt(2.0) * sg[r() + j].imag();
    }
    return v;
}

RMat Field::minkowski_rows(const QMat& rows) const {
    RMat b(rows.size(), n());
    for (std::size_t i = 0; i < rows.size(); ++i) b.row(static_cast<Eigen::Index>(i)) = minkowski(rows[i]).transpose();
    return b;
}

FieldPtr make_field(const MonicIntPoly& p) { return std::make_shared<const Field>(p); }

}  // namespace toruslab
