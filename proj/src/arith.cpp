#include "toruslab/arith.hpp"

#include <algorithm>
#include <climits>
#include <sstream>

namespace toruslab {

ZMat zmat(std::size_t rows, std::size_t cols) { return ZMat(rows, ZVec(cols, Int(0))); }
QMat qmat(std::size_t rows, std::size_t cols) { return QMat(rows, QVec(cols, Rat(0))); }

QMat to_q(const ZMat& a) {
    QMat r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        r[i].resize(a[i].size());
        for (std::size_t j = 0; j < a[i].size(); ++j) r[i][j] = Rat(a[i][j]);
    }
    return r;
}

QMat q_identity(std::size_t n) {
    QMat r = qmat(n, n);
    for (std::size_t i = 0; i < n; ++i) r[i][i] = 1;
    return r;
}

QMat q_mul(const QMat& a, const QMat& b) {
    QMat r = qmat(a.size(), b.empty() ? 0 : b[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (a[i][k] == 0) continue;
            for (std::size_t j = 0; j < b[k].size(); ++j) r[i][j] += a[i][k] * b[k][j];
        }
    return r;
}

ZMat z_mul(const ZMat& a, const ZMat& b) {
    ZMat r = zmat(a.size(), b.empty() ? 0 : b[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (a[i][k] == 0) continue;
            for (std::size_t j = 0; j < b[k].size(); ++j) r[i][j] += a[i][k] * b[k][j];
        }
    return r;
}

QVec q_vecmat(const QVec& v, const QMat& a) {
    QVec r(a.empty() ? 0 : a[0].size(), Rat(0));
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (v[k] == 0) continue;
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += v[k] * a[k][j];
    }
    return r;
}

QMat q_transpose(const QMat& a) {
    if (a.empty()) return {};
    QMat r = qmat(a[0].size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) r[j][i] = a[i][j];
    return r;
}

Rat q_det(QMat a) {
    const std::size_t n = a.size();
    Rat det = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        while (piv < n && a[piv][c] == 0) ++piv;
        if (piv == n) return 0;
        if (piv != c) {
            std::swap(a[piv], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (std::size_t i = c + 1; i < n; ++i) {
            if (a[i][c] == 0) continue;
            Rat f = a[i][c] / a[c][c];
            for (std::size_t j = c; j < n; ++j) a[i][j] -= f * a[c][j];
        }
    }
    return det;
}

Int z_det(const ZMat& a) {
    // Bareiss fraction-free elimination
    const std::size_t n = a.size();
    if (n == 0) return 1;
    ZMat m = a;
    Int prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (m[k][k] == 0) {
            std::size_t piv = k + 1;
            while (piv < n && m[piv][k] == 0) ++piv;
            if (piv == n) return 0;
            std::swap(m[piv], m[k]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j) {
                Int t = m[i][j] * m[k][k] - m[i][k] * m[k][j];
                mpz_divexact(t.get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
                m[i][j] = t;
            }
        prev = m[k][k];
    }
    return sign * m[n - 1][n - 1];
}

QMat q_inverse(const QMat& a) {
    const std::size_t n = a.size();
    QMat m = a;
    QMat r = q_identity(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        while (piv < n && m[piv][c] == 0) ++piv;
        if (piv == n) throw std::domain_error("singular matrix");
        std::swap(m[piv], m[c]);
        std::swap(r[piv], r[c]);
        Rat inv = 1 / m[c][c];
        for (std::size_t j = 0; j < n; ++j) {
            m[c][j] *= inv;
            r[c][j] *= inv;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == c || m[i][c] == 0) continue;
            Rat f = m[i][c];
            for (std::size_t j = 0; j < n; ++j) {
                m[i][j] -= f * m[c][j];
                r[i][j] -= f * r[c][j];
            }
        }
    }
    return r;
}

ZMat z_adjugate(const ZMat& a) {
    const std::size_t n = a.size();
    ZMat adj = zmat(n, n);
    if (n == 1) {
        adj[0][0] = 1;
        return adj;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            ZMat minor;
            for (std::size_t r = 0; r < n; ++r) {
                if (r == i) continue;
                ZVec row;
                for (std::size_t c = 0; c < n; ++c)
                    if (c != j) row.push_back(a[r][c]);
                minor.push_back(row);
            }
            Int d = z_det(minor);
            adj[j][i] = ((i + j) % 2 == 0) ? d : Int(-d);
        }
    return adj;
}

Int lcm_den(const QVec& v) {
    Int l = 1;
    for (const auto& x : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
    return l;
}

Int lcm_den(const QMat& a) {
    Int l = 1;
    for (const auto& row : a) {
        Int r = lcm_den(row);
        mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), r.get_mpz_t());
    }
    return l;
}

Int vec_content(const ZVec& v) {
    Int g = 0;
    for (const auto& x : v) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
    return g;
}

int valuation(const Int& x, const Int& p) {
    if (x == 0) return INT_MAX / 4;
    Int y = abs(x);
    int v = 0;
    while (mpz_divisible_p(y.get_mpz_t(), p.get_mpz_t())) {
        mpz_divexact(y.get_mpz_t(), y.get_mpz_t(), p.get_mpz_t());
        ++v;
    }
    return v;
}

int valuation(const Rat& x, const Int& p) {
    if (x == 0) return INT_MAX / 4;
    return valuation(Int(x.get_num()), p) - valuation(Int(x.get_den()), p);
}

namespace {

void axpy_row(ZVec& dst, const Int& q, const ZVec& src, std::size_t upto) {
    for (std::size_t c = 0; c <= upto; ++c)
        if (src[c] != 0) dst[c] -= q * src[c];
}

bool row_is_zero(const ZVec& r) {
    for (const auto& x : r)
        if (x != 0) return false;
    return true;
}

}  // namespace

ZMat hnf_full(ZMat gens, std::size_t n) {
    std::vector<ZVec> work;
    work.reserve(gens.size());
    for (auto& g : gens)
        if (!row_is_zero(g)) work.push_back(std::move(g));
    ZMat h = zmat(n, n);
    for (std::size_t jj = n; jj-- > 0;) {
        for (;;) {
            std::ptrdiff_t best = -1;
            for (std::size_t i = 0; i < work.size(); ++i)
                if (work[i][jj] != 0 &&
                    (best < 0 || cmpabs(work[i][jj], work[static_cast<std::size_t>(best)][jj]) < 0))
                    best = static_cast<std::ptrdiff_t>(i);
            if (best < 0) throw std::domain_error("hnf_full: lattice is not of full rank");
            const auto b = static_cast<std::size_t>(best);
            bool others = false;
            for (std::size_t i = 0; i < work.size(); ++i) {
                if (i == b || work[i][jj] == 0) continue;
                Int q;
                mpz_tdiv_q(q.get_mpz_t(), work[i][jj].get_mpz_t(), work[b][jj].get_mpz_t());
                axpy_row(work[i], q, work[b], jj);
                if (work[i][jj] != 0) others = true;
            }
            if (!others) {
                h[jj] = work[b];
                work.erase(work.begin() + best);
                if (h[jj][jj] < 0)
                    for (auto& x : h[jj]) x = -x;
                break;
            }
        }
        work.erase(std::remove_if(work.begin(), work.end(), row_is_zero), work.end());
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t jj = i; jj-- > 0;) {
            Int q;
            mpz_fdiv_q(q.get_mpz_t(), h[i][jj].get_mpz_t(), h[jj][jj].get_mpz_t());
            if (q != 0) axpy_row(h[i], q, h[jj], jj);
        }
    return h;
}

ZVec elementary_divisors(ZMat a) {
    const std::size_t m = a.size();
    const std::size_t k = m ? a[0].size() : 0;
    const std::size_t t_end = std::min(m, k);
    ZVec d;
    for (std::size_t t = 0; t < t_end; ++t) {
        for (;;) {
            // pivot with minimal absolute value
            std::size_t pi = m, pj = k;
            for (std::size_t i = t; i < m; ++i)
                for (std::size_t j = t; j < k; ++j)
                    if (a[i][j] != 0 && (pi == m || cmpabs(a[i][j], a[pi][pj]) < 0)) {
                        pi = i;
                        pj = j;
                    }
            if (pi == m) {
                while (d.size() < t_end) d.push_back(0);
                return d;
            }
            std::swap(a[t], a[pi]);
            for (std::size_t i = 0; i < m; ++i) std::swap(a[i][t], a[i][pj]);
            bool dirty = false;
            for (std::size_t i = t + 1; i < m; ++i) {
                if (a[i][t] == 0) continue;
                Int q;
                mpz_tdiv_q(q.get_mpz_t(), a[i][t].get_mpz_t(), a[t][t].get_mpz_t());
                for (std::size_t j = t; j < k; ++j) a[i][j] -= q * a[t][j];
                if (a[i][t] != 0) dirty = true;
            }
            for (std::size_t j = t + 1; j < k; ++j) {
                if (a[t][j] == 0) continue;
                Int q;
                mpz_tdiv_q(q.get_mpz_t(), a[t][j].get_mpz_t(), a[t][t].get_mpz_t());
                for (std::size_t i = t; i < m; ++i) a[i][j] -= q * a[i][t];
                if (a[t][j] != 0) dirty = true;
            }
            if (dirty) continue;
            bool fixed = false;
            for (std::size_t i = t + 1; i < m && !fixed; ++i)
                for (std::size_t j = t + 1; j < k; ++j)
                    if (!mpz_divisible_p(a[i][j].get_mpz_t(), a[t][t].get_mpz_t())) {
                        for (std::size_t jj = t; jj < k; ++jj) a[t][jj] += a[i][jj];
                        fixed = true;
                        break;
                    }
            if (fixed) continue;
            d.push_back(abs(a[t][t]));
            break;
        }
    }
    return d;
}

ZMat integer_kernel(const ZMat& a) {
    const std::size_t r = a.size();
    const std::size_t m = r ? a[0].size() : 0;
    ZMat w = zmat(m, r + m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < r; ++c) w[i][c] = a[c][i];
        w[i][r + i] = 1;
    }
    std::size_t row = 0;
    for (std::size_t c = 0; c < r && row < m; ++c) {
        for (;;) {
            std::size_t best = m;
            for (std::size_t i = row; i < m; ++i)
                if (w[i][c] != 0 && (best == m || cmpabs(w[i][c], w[best][c]) < 0)) best = i;
            if (best == m) break;
            std::swap(w[row], w[best]);
            bool others = false;
            for (std::size_t i = row + 1; i < m; ++i) {
                if (w[i][c] == 0) continue;
                Int q;
                mpz_tdiv_q(q.get_mpz_t(), w[i][c].get_mpz_t(), w[row][c].get_mpz_t());
                for (std::size_t j = 0; j < r + m; ++j) w[i][j] -= q * w[row][j];
                if (w[i][c] != 0) others = true;
            }
            if (!others) {
                ++row;
                break;
            }
        }
    }
    ZMat ker;
    for (std::size_t i = row; i < m; ++i) {
        bool zero = true;
        for (std::size_t c = 0; c < r; ++c)
            if (w[i][c] != 0) zero = false;
        if (!zero) continue;
        ker.emplace_back(w[i].begin() + static_cast<std::ptrdiff_t>(r), w[i].end());
    }
    return ker;
}

ZMat saturation(const ZMat& a) {
    ZMat k = integer_kernel(a);
    if (k.empty()) {
        const std::size_t m = a.empty() ? 0 : a[0].size();
        ZMat id = zmat(m, m);
        for (std::size_t i = 0; i < m; ++i) id[i][i] = 1;
        return id;
    }
    return integer_kernel(k);
}

QMat Lattice::basis() const {
    QMat b = to_q(hnf);
    for (auto& row : b)
        for (auto& x : row) {
            x /= den;
            x.canonicalize();
        }
    return b;
}

Rat Lattice::covolume() const {
    Int d = 1;
    for (std::size_t i = 0; i < hnf.size(); ++i) d *= hnf[i][i];
    Int dn = 1;
    for (std::size_t i = 0; i < hnf.size(); ++i) dn *= den;
    Rat r(d, dn);
    r.canonicalize();
    return r;
}

bool Lattice::operator==(const Lattice& o) const { return den == o.den && hnf == o.hnf; }

std::strong_ordering Lattice::operator<=>(const Lattice& o) const {
    if (int c = cmp(den, o.den); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    for (std::size_t i = 0; i < hnf.size(); ++i)
        for (std::size_t j = 0; j < hnf[i].size(); ++j)
            if (int c = cmp(hnf[i][j], o.hnf[i][j]); c != 0)
                return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::string Lattice::key() const {
    std::string s = den.get_str();
    for (const auto& row : hnf)
        for (const auto& x : row) {
            s.push_back(',');
            s += x.get_str();
        }
    return s;
}

Lattice lattice_from_int_rows(const ZMat& rows, const Int& den, std::size_t n) {
    Lattice l;
    l.hnf = hnf_full(rows, n);
    Int g = den;
    for (const auto& row : l.hnf) {
        Int c = vec_content(row);
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
    }
    l.den = den / g;
    if (g != 1)
        for (auto& row : l.hnf)
            for (auto& x : row) mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
    return l;
}

Lattice lattice_from_rows(const QMat& rows, std::size_t n) {
    Int d = lcm_den(rows);
    ZMat z(rows.size(), ZVec(n));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Rat t = rows[i][j] * d;
            z[i][j] = t.get_num();
        }
    return lattice_from_int_rows(z, d, n);
}

Lattice lat_scale(const Lattice& a, const Rat& c) {
    QMat b = a.basis();
    for (auto& row : b)
        for (auto& x : row) x *= c;
    return lattice_from_rows(b, a.dim());
}

Lattice lat_sum(const Lattice& a, const Lattice& b) {
    QMat rows = a.basis();
    QMat rb = b.basis();
    rows.insert(rows.end(), rb.begin(), rb.end());
    return lattice_from_rows(rows, a.dim());
}

Lattice lat_dual(const Lattice& a) {
    return lattice_from_rows(q_transpose(q_inverse(a.basis())), a.dim());
}

Lattice lat_intersect(const Lattice& a, const Lattice& b) {
    return lat_dual(lat_sum(lat_dual(a), lat_dual(b)));
}

QVec lat_coords(const Lattice& a, const QVec& v) {
    const std::size_t n = a.dim();
    QVec c(n);
    for (std::size_t jj = n; jj-- > 0;) {
        Rat s = v[jj] * a.den;
        for (std::size_t i = jj + 1; i < n; ++i) s -= c[i] * a.hnf[i][jj];
        c[jj] = s / a.hnf[jj][jj];
    }
    return c;
}

bool lat_contains(const Lattice& a, const QVec& v) {
    for (const auto& x : lat_coords(a, v))
        if (x.get_den() != 1) return false;
    return true;
}

bool lat_contains(const Lattice& a, const Lattice& b) {
    for (const auto& row : b.basis())
        if (!lat_contains(a, row)) return false;
    return true;
}

Rat lat_index(const Lattice& a, const Lattice& b) { return b.covolume() / a.covolume(); }

std::string to_string(const Int& x) { return x.get_str(); }
std::string to_string(const Rat& x) { return x.get_str(); }

Int parse_int(const std::string& s) {
    Int r;
    if (r.set_str(s, 10) != 0) throw std::invalid_argument("not an integer: " + s);
    return r;
}

}  // namespace toruslab
