#include "toruslab/order_core.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace toruslab {

Int index_of(const Lattice& big, const Lattice& small) {
    Rat q = lat_index(big, small);
    if (q.get_den() != 1) throw std::domain_error("index_of: not a sublattice");
    return q.get_num();
}

std::vector<std::pair<Int, int>> factor_int(Int x) {
    std::vector<std::pair<Int, int>> f;
    x = abs(x);
    if (x <= 1) return f;
    auto take = [&](const Int& p) {
        int e = 0;
        while (mpz_divisible_p(x.get_mpz_t(), p.get_mpz_t())) {
            mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t());
            ++e;
        }
        if (e) f.emplace_back(p, e);
    };
    take(2);
    take(3);
    for (unsigned long d = 5; Int(d) * d <= x; d += 6) {
        if (d > 20'000'000UL) break;
        take(Int(d));
        take(Int(d + 2));
    }
    if (x > 1) {
        if (mpz_probab_prime_p(x.get_mpz_t(), 30) == 0) {
            Int r = sqrt(x);
            if (r * r == x && mpz_probab_prime_p(r.get_mpz_t(), 30) != 0)
                f.emplace_back(r, 2);
            else
                throw ResourceError("factor_int: cofactor too large to factor: " + x.get_str());
        } else {
            f.emplace_back(x, 1);
        }
    }
    std::sort(f.begin(), f.end());
    return f;
}

OrderRep order_from_lattice(const FieldPtr& K, const Lattice& lat) {
    OrderRep o{K, lat, 0};
    Rat d = Rat(poly_disc(K->poly())) * lat.covolume() * lat.covolume();
    if (d.get_den() != 1) throw std::domain_error("order_from_lattice: non-integral discriminant");
    o.disc = d.get_num();
    return o;
}

OrderRep order_from_poly(const FieldPtr& K) {
    ZMat id = zmat(K->n(), K->n());
    for (int i = 0; i < K->n(); ++i) id[i][i] = 1;
    return order_from_lattice(K, Lattice{1, id});
}

bool is_order(const FieldPtr& K, const Lattice& lat) {
    if (!lat_contains(lat, K->one())) return false;
    QMat b = lat.basis();
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = i; j < b.size(); ++j)
            if (!lat_contains(lat, K->mul(b[i], b[j]))) return false;
    return true;
}

Lattice lat_mul_elem(const Field& K, const Lattice& L, const QVec& x) {
    QMat rows = L.basis();
    for (auto& r : rows) r = K.mul(r, x);
    return lattice_from_rows(rows, L.dim());
}

FracIdealRep as_ideal(const OrderRep& o) { return {o.K, o.lat}; }

FracIdealRep ideal_from_generators(const OrderRep& o, const std::vector<QVec>& gens) {
    QMat rows;
    QMat b = o.lat.basis();
    for (const auto& g : gens)
        for (const auto& bi : b) rows.push_back(o.K->mul(g, bi));
    return {o.K, lattice_from_rows(rows, o.K->n())};
}

FracIdealRep ideal_scale(const FracIdealRep& a, const QVec& lambda) { return {a.K, lat_mul_elem(*a.K, a.lat, lambda)}; }

FracIdealRep ideal_mul(const FracIdealRep& a, const FracIdealRep& b) {
    QMat rows;
    QMat ba = a.lat.basis(), bb = b.lat.basis();
    for (const auto& x : ba)
        for (const auto& y : bb) rows.push_back(a.K->mul(x, y));
    return {a.K, lattice_from_rows(rows, a.K->n())};
}

FracIdealRep ideal_colon(const FracIdealRep& a, const FracIdealRep& b) {
    QMat bb = b.lat.basis();
    Lattice acc = lat_mul_elem(*a.K, a.lat, a.K->inverse(bb[0]));
    for (std::size_t i = 1; i < bb.size(); ++i) acc = lat_intersect(acc, lat_mul_elem(*a.K, a.lat, a.K->inverse(bb[i])));
    return {a.K, acc};
}

OrderRep multiplier_ring(const FracIdealRep& a) { return order_from_lattice(a.K, ideal_colon(a, a).lat); }

bool is_invertible(const FracIdealRep& a, const OrderRep& o) {
    FracIdealRep oi = as_ideal(o);
    return ideal_mul(a, ideal_colon(oi, a)).lat == o.lat;
}

bool contains(const FracIdealRep& a, const QVec& x) { return lat_contains(a.lat, x); }

namespace {

long mod_ll(const Int& x, long p) {
    Int m;
    mpz_fdiv_r_ui(m.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(p));
    return m.get_si();
}

long powmod_ll(long b, long e, long p) {
    long r = 1 % p;
    b %= p;
    while (e) {
        if (e & 1) r = static_cast<long>(static_cast<__int128>(r) * b % p);
        b = static_cast<long>(static_cast<__int128>(b) * b % p);
        e >>= 1;
    }
    return r;
}

/// Basis of the left kernel of an integer matrix modulo p.
std::vector<std::vector<long>> left_kernel_mod(const std::vector<std::vector<long>>& a, long p) {
    const std::size_t m = a.size();
    const std::size_t n = m ? a[0].size() : 0;
    std::vector<std::vector<long>> w(m, std::vector<long>(n + m, 0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) w[i][j] = ((a[i][j] % p) + p) % p;
        w[i][n + i] = 1;
    }
    std::size_t row = 0;
    for (std::size_t c = 0; c < n && row < m; ++c) {
        std::size_t piv = row;
        while (piv < m && w[piv][c] == 0) ++piv;
        if (piv == m) continue;
        std::swap(w[piv], w[row]);
        const long inv = powmod_ll(w[row][c], p - 2, p);
        for (auto& x : w[row]) x = static_cast<long>(static_cast<__int128>(x) * inv % p);
        for (std::size_t i = 0; i < m; ++i) {
            if (i == row || w[i][c] == 0) continue;
            const long f = w[i][c];
            for (std::size_t j = 0; j < n + m; ++j) w[i][j] = ((w[i][j] - f * w[row][j]) % p + p) % p;
        }
        ++row;
    }
    std::vector<std::vector<long>> ker;
    for (std::size_t i = row; i < m; ++i) ker.emplace_back(w[i].begin() + static_cast<std::ptrdiff_t>(n), w[i].end());
    return ker;
}

/// Structure constants of a lattice closed under multiplication: c[i][j] = coords(b_i b_j).
std::vector<std::vector<ZVec>> structure_constants(const Field& K, const Lattice& o) {
    QMat b = o.basis();
    const std::size_t n = b.size();
    std::vector<std::vector<ZVec>> c(n, std::vector<ZVec>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            QVec co = lat_coords(o, K.mul(b[i], b[j]));
            ZVec z(n);
            for (std::size_t k = 0; k < n; ++k) {
                if (co[k].get_den() != 1) throw std::domain_error("structure_constants: not a ring");
                z[k] = co[k].get_num();
            }
            c[i][j] = z;
        }
    return c;
}

Lattice p_radical(const FieldPtr& K, const Lattice& o, long p) {
    const auto c = structure_constants(*K, o);
    const std::size_t n = o.dim();
    long q = p;
    while (q < static_cast<long>(n)) q *= p;
    auto mulmod = [&](const std::vector<long>& x, const std::vector<long>& y) {
        std::vector<long> z(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!x[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (!y[j]) continue;
                const long xy = x[i] * y[j] % p;
                for (std::size_t k = 0; k < n; ++k) z[k] = (z[k] + xy * mod_ll(c[i][j][k], p)) % p;
            }
        }
        return z;
    };
    std::vector<std::vector<long>> frob(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<long> base(n, 0), acc(n, 0);
        base[i] = 1;
        acc[0] = 1;
        // 1 is the first basis vector of an order in HNF
        long e = q;
        while (e) {
            if (e & 1) acc = mulmod(acc, base);
            base = mulmod(base, base);
            e >>= 1;
        }
        frob[i] = acc;
    }
    auto ker = left_kernel_mod(frob, p);
    QMat ob = o.basis();
    QMat rows;
    for (const auto& bi : ob) {
        QVec v = bi;
        for (auto& x : v) x *= p;
        rows.push_back(v);
    }
    for (const auto& kv : ker) {
        QVec v(n, Rat(0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) v[k] += kv[i] * ob[i][k];
        rows.push_back(v);
    }
    return lattice_from_rows(rows, n);
}

}  // namespace

OrderRep maximal_order(const FieldPtr& K) {
    OrderRep o = order_from_poly(K);
    for (const auto& [p, e] : factor_int(o.disc)) {
        if (e < 2) continue;
        for (;;) {
            Lattice rad = p_radical(K, o.lat, p.get_si());
            OrderRep next = multiplier_ring({K, rad});
            if (next.lat == o.lat) break;
            o = next;
        }
    }
    return o;
}

Int poly_index(const FieldPtr& K) { return index_of(maximal_order(K).lat, order_from_poly(K).lat); }

bool is_locally_homothetic_at(const FracIdealRep& a, const FracIdealRep& b, const Int& p_big) {
    const long p = p_big.get_si();
    const auto n = static_cast<std::size_t>(a.K->n());
    FracIdealRep m = ideal_colon(a, b);
    QMat mb = m.lat.basis(), bb = b.lat.basis();
    std::vector<std::vector<std::vector<long>>> t(n);
    for (std::size_t k = 0; k < n; ++k) {
        t[k].assign(n, std::vector<long>(n));
        for (std::size_t i = 0; i < n; ++i) {
            QVec co = lat_coords(a.lat, a.K->mul(bb[i], mb[k]));
            for (std::size_t j = 0; j < n; ++j) {
                if (co[j].get_den() != 1) throw std::domain_error("local homothety: colon lattice mismatch");
                t[k][i][j] = mod_ll(co[j].get_num(), p);
            }
        }
    }
    double total = std::pow(static_cast<double>(p), static_cast<double>(n));
    if (total > 2e7) throw ResourceError("local homothety search too large at p = " + p_big.get_str());
    std::vector<long> c(n, 0);
    auto det_mod = [&](const std::vector<std::vector<long>>& x) -> long {
        if (n == 2) return ((x[0][0] * x[1][1] - x[0][1] * x[1][0]) % p + p) % p;
        __int128 d = 0;
        d += static_cast<__int128>(x[0][0]) * ((x[1][1] * x[2][2] - x[1][2] * x[2][1]) % p);
        d -= static_cast<__int128>(x[0][1]) * ((x[1][0] * x[2][2] - x[1][2] * x[2][0]) % p);
        d += static_cast<__int128>(x[0][2]) * ((x[1][0] * x[2][1] - x[1][1] * x[2][0]) % p);
        return static_cast<long>(((d % p) + p) % p);
    };
    std::vector<std::vector<long>> x(n, std::vector<long>(n));
    for (;;) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                long s = 0;
                for (std::size_t k = 0; k < n; ++k) s += c[k] * t[k][i][j];
                x[i][j] = s % p;
            }
        if (det_mod(x) != 0) return true;
        std::size_t k = 0;
        while (k < n && ++c[k] == p) c[k++] = 0;
        if (k == n) break;
    }
    return false;
}

bool is_locally_homothetic(const FracIdealRep& a, const FracIdealRep& b) {
    OrderRep oa = multiplier_ring(a), ob = multiplier_ring(b);
    if (!(oa.lat == ob.lat)) return false;
    Int f = index_of(maximal_order(a.K).lat, oa.lat);
    for (const auto& [p, e] : factor_int(f))
        if (!is_locally_homothetic_at(a, b, p)) return false;
    return true;
}

namespace {

std::vector<long> primes_upto(long b) {
    std::vector<char> comp(static_cast<std::size_t>(b + 1), 0);
    std::vector<long> ps;
    for (long i = 2; i <= b; ++i) {
        if (comp[i]) continue;
        ps.push_back(i);
        for (long j = i * i; j <= b; j += i) comp[j] = 1;
    }
    return ps;
}

/// Monic irreducible factors of P mod p (coefficients low to high), without multiplicity.
std::vector<std::vector<long>> factors_mod_p(const MonicIntPoly& P, long p) {
    std::vector<long> f(P.n + 1);
    for (int i = 0; i < P.n; ++i) f[i] = mod_ll(P.a[i], p);
    f[P.n] = 1;
    std::vector<std::vector<long>> out;
    for (long rt : poly_roots_mod(P, p)) {
        out.push_back({(p - rt) % p, 1});
        while (f.size() > 1) {
            // synthetic division by (x - rt)
            std::vector<long> q(f.size() - 1);
            long carry = 0;
            for (std::size_t i = f.size(); i-- > 1;) {
                carry = (carry * rt + f[i]) % p;
                q[i - 1] = carry;
            }
            const long rem = (carry * rt + f[0]) % p;
            if (rem != 0) break;
            f = q;
        }
    }
    if (f.size() > 1) out.push_back(f);
    return out;
}

/// Ideals of o with index p^k, 1 <= k <= kmax, by exhaustive HNF search.
std::vector<std::pair<Int, FracIdealRep>> p_ideals_bruteforce(const OrderRep& o, long p, int kmax,
                                                              std::size_t cap) {
    const std::size_t n = o.lat.dim();
    const auto c = structure_constants(*o.K, o.lat);
    QMat ob = o.lat.basis();
    std::vector<std::pair<Int, FracIdealRep>> out;
    std::vector<int> e(n, 0);
    std::function<void(std::size_t, int)> choose_exps;
    std::size_t work = 0;
    auto test_hnf = [&](const ZMat& h) {
        Lattice hl{1, h};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                QVec prod(n, Rat(0));
                for (std::size_t k = 0; k < n; ++k) {
                    if (h[i][k] == 0) continue;
                    for (std::size_t l = 0; l < n; ++l) prod[l] += h[i][k] * c[k][j][l];
                }
                if (!lat_contains(hl, prod)) return false;
            }
        return true;
    };
    auto emit = [&](const ZMat& h) {
        QMat rows(n, QVec(n, Rat(0)));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l) rows[i][l] += h[i][k] * ob[k][l];
        Int idx = 1;
        for (std::size_t i = 0; i < n; ++i) idx *= h[i][i];
        out.emplace_back(idx, FracIdealRep{o.K, lattice_from_rows(rows, n)});
    };
    std::function<void(ZMat&, std::size_t, std::size_t)> fill = [&](ZMat& h, std::size_t i, std::size_t j) {
        if (i == n) {
            if (++work > cap) throw ResourceError("ideal enumeration cap exceeded");
            if (test_hnf(h)) emit(h);
            return;
        }
        if (j == i) {
            fill(h, i + 1, 0);
            return;
        }
        for (Int v = 0; v < h[j][j]; ++v) {
            h[i][j] = v;
            fill(h, i, j + 1);
        }
        h[i][j] = 0;
    };
    choose_exps = [&](std::size_t i, int left) {
        if (i == n - 1) {
            e[i] = left;
            int tot = 0;
            for (int x : e) tot += x;
            if (tot == 0) return;
            ZMat h = zmat(n, n);
            for (std::size_t k = 0; k < n; ++k) {
                Int d;
                mpz_ui_pow_ui(d.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(e[k]));
                h[k][k] = d;
            }
            fill(h, 0, 0);
            return;
        }
        for (int x = 0; x <= left; ++x) {
            e[i] = x;
            choose_exps(i + 1, left - x);
        }
    };
    for (int k = 1; k <= kmax; ++k) choose_exps(0, k);
    return out;
}

std::vector<std::pair<Int, FracIdealRep>> products_of_primes(const OrderRep& o,
                                                             const std::vector<std::pair<int, FracIdealRep>>& primes,
                                                             long p, const Int& bound) {
    std::vector<std::pair<Int, FracIdealRep>> out;
    std::function<void(std::size_t, const Int&, const FracIdealRep&)> rec = [&](std::size_t i, const Int& idx,
                                                                                const FracIdealRep& cur) {
        if (i == primes.size()) {
            if (idx > 1) out.emplace_back(idx, cur);
            return;
        }
        rec(i + 1, idx, cur);
        Int q;
        mpz_ui_pow_ui(q.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(primes[i].first));
        Int nidx = idx * q;
        FracIdealRep nxt = ideal_mul(cur, primes[i].second);
        while (nidx <= bound) {
            rec(i + 1, nidx, nxt);
            nidx *= q;
            nxt = ideal_mul(nxt, primes[i].second);
        }
    };
    rec(0, Int(1), as_ideal(o));
    return out;
}

}  // namespace

std::vector<FracIdealRep> ideals_of_bounded_norm(const OrderRep& o, const Int& bound, std::size_t cap) {
    if (bound < 1) return {};
    const FieldPtr& K = o.K;
    const long b = bound.get_si();
    OrderRep ok = maximal_order(K);
    const Int fpoly = index_of(ok.lat, order_from_poly(K).lat);
    const Int fo = index_of(ok.lat, o.lat);
    std::vector<std::pair<Int, FracIdealRep>> acc{{Int(1), as_ideal(o)}};
    for (long p : primes_upto(b)) {
        std::vector<std::pair<Int, FracIdealRep>> local;
        int kmax = 0;
        for (Int q = p; q <= bound; q *= p) ++kmax;
        if (!mpz_divisible_ui_p(fpoly.get_mpz_t(), static_cast<unsigned long>(p))) {
            std::vector<std::pair<int, FracIdealRep>> primes;
            for (const auto& g : factors_mod_p(K->poly(), p)) {
                const int f = static_cast<int>(g.size()) - 1;
                ZVec gz(g.begin(), g.end());
                QVec pe = K->one();
                pe[0] = p;
                primes.emplace_back(f, ideal_from_generators(o, {pe, K->eval_poly(gz)}));
            }
            local = products_of_primes(o, primes, p, bound);
        } else if (!mpz_divisible_ui_p(fo.get_mpz_t(), static_cast<unsigned long>(p))) {
            auto small = p_ideals_bruteforce(o, p, std::min(kmax, K->n()), cap);
            std::vector<std::pair<int, FracIdealRep>> primes;
            for (const auto& [idx, I] : small) {
                bool maximal = true;
                for (const auto& [idx2, J] : small)
                    if (idx2 < idx && lat_contains(J.lat, I.lat)) maximal = false;
                if (maximal) primes.emplace_back(valuation(idx, Int(p)), I);
            }
            local = products_of_primes(o, primes, p, bound);
        } else {
            local = p_ideals_bruteforce(o, p, kmax, cap);
        }
        if (local.empty()) continue;
        std::vector<std::pair<Int, FracIdealRep>> next = acc;
        for (const auto& [i1, a] : acc)
            for (const auto& [i2, c] : local) {
                if (i1 * i2 > bound) continue;
                next.emplace_back(i1 * i2, ideal_mul(a, c));
                if (next.size() > cap) throw ResourceError("ideals_of_bounded_norm: count exceeds cap");
            }
        acc = std::move(next);
    }
    std::sort(acc.begin(), acc.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first < y.first;
        return x.second.lat < y.second.lat;
    });
    std::vector<FracIdealRep> out;
    out.reserve(acc.size());
    for (auto& [i, a] : acc) out.push_back(std::move(a));
    return out;
}

std::string to_json(const FracIdealRep& a) {
    nlohmann::json j;
    j["poly"] = poly_string(a.K->poly());
    j["den"] = a.lat.den.get_str();
    nlohmann::json h = nlohmann::json::array();
    for (const auto& row : a.lat.hnf) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& x : row) r.push_back(x.get_str());
        h.push_back(r);
    }
    j["hnf"] = h;
    return j.dump();
}

std::string to_json(const OrderRep& o) { return to_json(as_ideal(o)); }

}  // namespace toruslab
