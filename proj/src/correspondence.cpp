#include "toruslab/correspondence.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace toruslab {

ZVec charpoly_coeffs(const ZMat& m) {
    const std::size_t n = m.size();
    if (n == 2) return {m[0][0] * m[1][1] - m[0][1] * m[1][0], -(m[0][0] + m[1][1])};
    if (n != 3) throw std::invalid_argument("charpoly: only n = 2, 3");
    Int tr = m[0][0] + m[1][1] + m[2][2];
    Int c2 = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2] -
             m[1][2] * m[2][1];
    return {-z_det(m), c2, -tr};
}

IntMatrixRep make_matrix(const ZMat& m) { return {m, make_poly(charpoly_coeffs(m))}; }

ZMat companion_matrix(const MonicIntPoly& p) {
    const auto n = static_cast<std::size_t>(p.n);
    ZMat c = zmat(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) c[i][i + 1] = 1;
    for (std::size_t j = 0; j < n; ++j) c[n - 1][j] = -p.a[j];
    return c;
}

ZMat unimodular_inverse(const ZMat& gamma) {
    const Int d = z_det(gamma);
    if (d != 1 && d != -1) throw std::invalid_argument("unimodular_inverse: det is not +-1");
    ZMat adj = z_adjugate(gamma);
    for (auto& row : adj)
        for (auto& x : row) x *= d;
    return adj;
}

ZMat conjugate(const ZMat& m, const ZMat& gamma) { return z_mul(z_mul(gamma, m), unimodular_inverse(gamma)); }

namespace {

using PolyT = std::vector<Int>;  // coefficients in t, low to high

PolyT padd(const PolyT& a, const PolyT& b) {
    PolyT c(std::max(a.size(), b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) c[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) c[i] += b[i];
    return c;
}

PolyT pmul(const PolyT& a, const PolyT& b) {
    if (a.empty() || b.empty()) return {};
    PolyT c(a.size() + b.size() - 1);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

PolyT pneg(PolyT a) {
    for (auto& x : a) x = -x;
    return a;
}

std::vector<std::vector<PolyT>> t_minus(const ZMat& m) {
    const std::size_t n = m.size();
    std::vector<std::vector<PolyT>> a(n, std::vector<PolyT>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = i == j ? PolyT{-m[i][j], 1} : PolyT{-m[i][j]};
    return a;
}

}  // namespace

Lattice adjugate_lattice(const Field& K, const ZMat& m) {
    const std::size_t n = m.size();
    auto a = t_minus(m);
    std::vector<PolyT> col(n);
    if (n == 2) {
        col[0] = a[1][1];
        col[1] = pneg(a[1][0]);
    } else {
        auto minor = [&](std::size_t c0, std::size_t c1) {
            return padd(pmul(a[1][c0], a[2][c1]), pneg(pmul(a[1][c1], a[2][c0])));
        };
        col[0] = minor(1, 2);
        col[1] = pneg(minor(0, 2));
        col[2] = minor(0, 1);
    }
    QMat rows;
    for (const auto& p : col) {
        ZVec c(p.begin(), p.end());
        rows.push_back(K.eval_poly(c));
    }
    return lattice_from_rows(rows, n);
}

IdealClassRep matrix_to_class(ClassRegistry& reg, const IntMatrixRep& m) {
    if (!(charpoly_coeffs(m.m) == reg.field()->poly().a))
        throw std::invalid_argument("matrix_to_class: characteristic polynomial differs from P");
    return reg.class_rep(reg.classify(adjugate_lattice(*reg.field(), m.m)));
}

ZMat lattice_to_matrix(const Field& K, const Lattice& L) {
    const std::size_t n = L.dim();
    const QMat b = L.basis();
    ZMat out = zmat(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const QVec c = lat_coords(L, K.mul(K.gen(), b[i]));
        for (std::size_t j = 0; j < n; ++j) {
            if (c[j].get_den() != 1) throw std::domain_error("lattice_to_matrix: lattice is not t-stable");
            out[i][j] = c[j].get_num();
        }
    }
    return out;
}

IntMatrixRep class_to_matrix(const IdealClassRep& c) {
    const Field& K = *c.representative.K;
    return {lattice_to_matrix(K, c.representative.lat), K.poly()};
}

namespace {

/// Upper triangular HNF sublattices H of Z^n with f Z^n inside H, visited as integer row matrices.
void sublattices_containing(std::size_t n, long f, const std::function<void(const std::vector<std::vector<long>>&)>& visit) {
    std::vector<long> divs;
    for (long d = 1; d <= f; ++d)
        if (f % d == 0) divs.push_back(d);
    std::vector<std::vector<long>> h(n, std::vector<long>(n, 0));
    auto contains_f = [&]() {
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<long> v(n, 0);
            v[k] = f;
            for (std::size_t i = 0; i < n; ++i) {
                if (v[i] % h[i][i]) return false;
                const long c = v[i] / h[i][i];
                for (std::size_t j = i; j < n; ++j) v[j] -= c * h[i][j];
            }
        }
        return true;
    };
    std::function<void(std::size_t, std::size_t)> off = [&](std::size_t i, std::size_t j) {
        if (i == n) {
            if (contains_f()) visit(h);
            return;
        }
        if (j >= n) {
            off(i + 1, i + 2);
            return;
        }
        for (long v = 0; v < h[j][j]; ++v) {
            h[i][j] = v;
            off(i, j + 1);
        }
        h[i][j] = 0;
    };
    std::function<void(std::size_t)> diag = [&](std::size_t i) {
        if (i == n) {
            off(0, 1);
            return;
        }
        for (long d : divs) {
            h[i][i] = d;
            diag(i + 1);
        }
    };
    diag(0);
}

}  // namespace

std::vector<PacketRep> enumerate_coarse_classes(ClassRegistry& reg, std::size_t cap) {
    const FieldPtr& K = reg.field();
    const std::size_t n = static_cast<std::size_t>(K->n());
    const OrderRep ok = maximal_order(K);
    const Int fbig = poly_index(K);
    if (!fbig.fits_slong_p() || fbig > 100000) throw ResourceError("enumerate_coarse_classes: index too large");
    const long f = fbig.get_si();
    const PicardGroup pic = picard_group(ok, reg);

    std::set<std::size_t> ids;
    std::size_t visited = 0;
    for (const auto& A : pic.classes) {
        const Lattice& al = A.representative.lat;
        const QMat ab = al.basis();
        const ZMat T = lattice_to_matrix(*K, al);
        sublattices_containing(n, f, [&](const std::vector<std::vector<long>>& h) {
            if (++visited > cap) throw ResourceError("enumerate_coarse_classes: sublattice cap exceeded");
            // t-stability: each row of h * T must lie in the row lattice of h
            for (std::size_t r = 0; r < n; ++r) {
                std::vector<Int> v(n, 0);
                for (std::size_t k = 0; k < n; ++k)
                    for (std::size_t j = 0; j < n; ++j) v[j] += Int(h[r][k]) * T[k][j];
                for (std::size_t i = 0; i < n; ++i) {
                    if (!mpz_divisible_ui_p(v[i].get_mpz_t(), static_cast<unsigned long>(h[i][i]))) return;
                    const Int c = v[i] / h[i][i];
                    for (std::size_t j = i; j < n; ++j) v[j] -= c * h[i][j];
                }
            }
            QMat rows(n, QVec(n));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < n; ++k)
                    for (std::size_t j = 0; j < n; ++j) rows[i][j] += Rat(h[i][k]) * ab[k][j];
            ids.insert(reg.classify(lattice_from_rows(rows, n)));
        });
    }

    std::map<Lattice, std::vector<std::size_t>> by_order;
    for (std::size_t id : ids) by_order[reg.info(id).multiplier].push_back(id);

    std::vector<PacketRep> out;
    for (auto& [mult, members] : by_order) {
        const OrderRep o = order_from_lattice(K, mult);
        std::sort(members.begin(), members.end(),
                  [&](std::size_t a, std::size_t b) { return reg.info(a).canonical < reg.info(b).canonical; });
        std::vector<std::size_t> parent(members.size());
        std::iota(parent.begin(), parent.end(), 0);
        std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
            return parent[x] == x ? x : parent[x] = find(parent[x]);
        };
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                if (find(i) == find(j)) continue;
                if (is_locally_homothetic(reg.class_rep(members[i]).representative,
                                          reg.class_rep(members[j]).representative))
                    parent[find(j)] = find(i);
            }
        std::map<std::size_t, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < members.size(); ++i) groups[find(i)].push_back(members[i]);
        for (auto& [root, g] : groups) {
            PacketRep pk{o, {}, abs(o.disc)};
            for (std::size_t id : g) pk.classes.push_back(reg.class_rep(id));
            out.push_back(std::move(pk));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const PacketRep& a, const PacketRep& b) {
        return cmp(a.discriminant, b.discriminant) < 0;
    });
    return out;
}

std::size_t class_count(const std::vector<PacketRep>& packets) {
    std::size_t c = 0;
    for (const auto& p : packets) c += p.classes.size();
    return c;
}

namespace {

using Flat = std::array<long, 9>;

struct FlatHash {
    std::size_t operator()(const Flat& a) const {
        std::size_t h = 1469598103934665603ull;
        for (long x : a) h = (h ^ static_cast<std::size_t>(x + 1000003)) * 1099511628211ull;
        return h;
    }
};

Flat flatten(const ZMat& m) {
    Flat f{};
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) f[i * n + j] = m[i][j].get_si();
    return f;
}

ZMat unflatten(const Flat& f, std::size_t n) {
    ZMat m = zmat(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i][j] = f[i * n + j];
    return m;
}

long max_abs(const Flat& f) {
    long b = 0;
    for (long x : f) b = std::max(b, std::labs(x));
    return b;
}

/// Conjugations of m by the generators: elementary e_ij^{+-1}, transpositions, and a sign change.
template <class F>
void for_each_neighbor(const Flat& m, std::size_t n, F&& visit) {
    auto at = [n](Flat& x, std::size_t i, std::size_t j) -> long& { return x[i * n + j]; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            for (long s : {1L, -1L}) {
                // (1 + s E_ij) m (1 - s E_ij): add s*row j to row i, then subtract s*column i from column j
                Flat x = m;
                for (std::size_t k = 0; k < n; ++k) at(x, i, k) += s * at(x, j, k);
                for (std::size_t k = 0; k < n; ++k) at(x, k, j) -= s * at(x, k, i);
                visit(x);
            }
        }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        Flat x = m;
        for (std::size_t k = 0; k < n; ++k) std::swap(at(x, i, k), at(x, i + 1, k));
        for (std::size_t k = 0; k < n; ++k) std::swap(at(x, k, i), at(x, k, i + 1));
        visit(x);
    }
    Flat x = m;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0) continue;
        at(x, 0, k) = -at(x, 0, k);
        at(x, k, 0) = -at(x, k, 0);
    }
    visit(x);
}

}  // namespace

std::vector<ZMat> matrices_with_charpoly(const MonicIntPoly& p, long h, std::size_t cap) {
    std::vector<ZMat> out;
    auto push = [&](ZMat m) {
        if (out.size() >= cap) throw ResourceError("matrices_with_charpoly: cap exceeded");
        out.push_back(std::move(m));
    };
    if (p.n == 2) {
        const long tr = -p.a[1].get_si(), det = p.a[0].get_si();
        for (long a = -h; a <= h; ++a) {
            const long d = tr - a;
            if (d < -h || d > h) continue;
            const long bc = a * d - det;
            if (bc == 0) continue;
            for (long b = -h; b <= h; ++b) {
                if (b == 0 || bc % b) continue;
                const long c = bc / b;
                if (c < -h || c > h) continue;
                push({{Int(a), Int(b)}, {Int(c), Int(d)}});
            }
        }
        return out;
    }
    const long tr = -p.a[2].get_si(), a1 = p.a[1].get_si(), det = -p.a[0].get_si();
    const long pmax = h * h;
    std::vector<std::vector<std::pair<long, long>>> pairs(static_cast<std::size_t>(2 * pmax + 1));
    for (long x = -h; x <= h; ++x)
        for (long y = -h; y <= h; ++y) pairs[static_cast<std::size_t>(x * y + pmax)].emplace_back(x, y);
    auto P = [&](long v) -> const std::vector<std::pair<long, long>>& { return pairs[static_cast<std::size_t>(v + pmax)]; };
    for (long d1 = -h; d1 <= h; ++d1)
        for (long d2 = -h; d2 <= h; ++d2) {
            const long d3 = tr - d1 - d2;
            if (d3 < -h || d3 > h) continue;
            const long S = d1 * d2 + d1 * d3 + d2 * d3 - a1;
            for (long p12 = -pmax; p12 <= pmax; ++p12)
                for (long p13 = -pmax; p13 <= pmax; ++p13) {
                    const long p23 = S - p12 - p13;
                    if (p23 < -pmax || p23 > pmax) continue;
                    const auto &A = P(p12), &B = P(p13), &C = P(p23);
                    if (A.empty() || B.empty() || C.empty()) continue;
                    const long R = det - d1 * d2 * d3 + d1 * p23 + d2 * p13 + d3 * p12;
                    for (const auto& [m12, m21] : A)
                        for (const auto& [m13, m31] : B)
                            for (const auto& [m23, m32] : C)
                                if (m12 * m23 * m31 + m13 * m32 * m21 == R)
                                    push({{Int(d1), Int(m12), Int(m13)}, {Int(m21), Int(d2), Int(m23)}, {Int(m31), Int(m32), Int(d3)}});
                }
        }
    return out;
}

ConjugacyCensus brute_force_conjugacy(ClassRegistry& reg, long height, std::size_t cap) {
    const MonicIntPoly& p = reg.field()->poly();
    const std::size_t n = static_cast<std::size_t>(p.n);
    if (p.n == 2 && height > 1000) throw ResourceError("brute_force_conjugacy: height too large for n = 2");
    if (p.n == 3 && height > 8) throw ResourceError("brute_force_conjugacy: height too large for n = 3");
    const std::vector<ZMat> mats = matrices_with_charpoly(p, height, cap);
    ConjugacyCensus out;
    out.matrices = mats.size();

    std::unordered_map<Flat, std::size_t, FlatHash> index;
    for (std::size_t i = 0; i < mats.size(); ++i) index.emplace(flatten(mats[i]), i);
    std::vector<std::size_t> parent(mats.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };
    for (std::size_t i = 0; i < mats.size(); ++i)
        for_each_neighbor(flatten(mats[i]), n, [&](const Flat& x) {
            auto it = index.find(x);
            if (it != index.end()) unite(i, it->second);
        });
    // bridging words: short excursions outside the box reconnect box matrices
    const long wide = p.n == 2 ? 2 * height : height + 4;
    const int depth = 8;
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < mats.size(); ++i) roots.insert(find(i));
    for (std::size_t r : roots) {
        std::unordered_map<Flat, int, FlatHash> seen;
        std::vector<Flat> frontier{flatten(mats[r])};
        seen.emplace(frontier[0], 0);
        for (int d = 1; d <= depth && !frontier.empty(); ++d) {
            std::vector<Flat> next;
            for (const Flat& m : frontier)
                for_each_neighbor(m, n, [&](const Flat& x) {
                    if (max_abs(x) > wide || seen.count(x)) return;
                    if (seen.size() > 2'000'000) return;
                    seen.emplace(x, d);
                    next.push_back(x);
                    auto it = index.find(x);
                    if (it != index.end()) unite(r, it->second);
                });
            frontier = std::move(next);
        }
    }

    std::map<std::size_t, std::size_t> comp_class;
    std::map<std::size_t, std::size_t> class_first;
    for (std::size_t i = 0; i < mats.size(); ++i) {
        const std::size_t cls = reg.classify(adjugate_lattice(*reg.field(), mats[i]));
        const std::size_t c = find(i);
        auto [it, fresh] = comp_class.emplace(c, cls);
        if (!fresh && it->second != cls) out.consistent = false;
        class_first.emplace(cls, i);
    }
    out.components = comp_class.size();
    std::vector<std::size_t> firsts;
    for (const auto& [cls, i] : class_first) firsts.push_back(i);
    std::sort(firsts.begin(), firsts.end());
    for (std::size_t i : firsts) out.representatives.push_back({mats[i], p});
    return out;
}

Window Window::box(int n, double radius) {
    const auto k = static_cast<std::size_t>(n * n);
    return {std::vector<double>(k, -radius), std::vector<double>(k, radius)};
}

Window Window::dilated(double c) const {
    Window w = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        const double mid = (lo[i] + hi[i]) / 2, half = (hi[i] - lo[i]) / 2;
        w.lo[i] = mid - c * half;
        w.hi[i] = mid + c * half;
    }
    return w;
}

bool Window::contains(const ZMat& m, double scale) const {
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double x = m[i][j].get_d() / scale;
            if (x < lo[i * n + j] || x > hi[i * n + j]) return false;
        }
    return true;
}

WindowResult integral_points_in_window(ClassRegistry& reg, const Window& w, std::size_t cap, std::size_t threads) {
    const MonicIntPoly& p = reg.field()->poly();
    const std::size_t n = static_cast<std::size_t>(p.n);
    if (!(p.r == 1 && p.s == 1) && !(p.r == 3)) throw std::invalid_argument("integral_points_in_window: signature (1,1) or (3,0)");
    WindowResult res;
    bool empty = false;
    double wmax = 0;
    for (std::size_t i = 0; i < w.lo.size(); ++i) {
        if (w.lo[i] > w.hi[i]) empty = true;
        wmax = std::max({wmax, std::abs(w.lo[i]), std::abs(w.hi[i])});
    }
    if (empty) return res;
    const double scale = std::pow(std::abs(p.a[0].get_d()), 1.0 / static_cast<double>(n));
    const long prune = 2 * static_cast<long>(std::ceil(wmax * scale)) + 2;

    std::vector<ZMat> reps;
    for (const auto& pk : enumerate_coarse_classes(reg))
        for (const auto& c : pk.classes) reps.push_back(class_to_matrix(c).m);

    struct Local {
        std::set<Flat> hits;
        int length = 0;
        bool capped = false;
    };
    auto search = [&](const ZMat& m0) {
        Local loc;
        std::unordered_map<Flat, int, FlatHash> seen;
        std::vector<Flat> frontier{flatten(m0)};
        seen.emplace(frontier[0], 0);
        auto record = [&](const Flat& x) {
            if (w.contains(unflatten(x, n), scale)) loc.hits.insert(x);
        };
        record(frontier[0]);
        int target = 6, depth = 0;
        std::vector<std::size_t> census;
        while (true) {
            while (depth < target && !frontier.empty()) {
                ++depth;
                std::vector<Flat> next;
                for (const Flat& m : frontier)
                    for_each_neighbor(m, n, [&](const Flat& x) {
                        if (max_abs(x) > prune || seen.count(x)) return;
                        seen.emplace(x, depth);
                        next.push_back(x);
                        record(x);
                    });
                frontier = std::move(next);
                if (seen.size() > 4'000'000 || loc.hits.size() > cap) {
                    loc.capped = true;
                    loc.length = depth;
                    return loc;
                }
            }
            census.push_back(loc.hits.size());
            const std::size_t k = census.size();
            if (frontier.empty() || (k >= 3 && census[k - 1] == census[k - 2] && census[k - 2] == census[k - 3])) break;
            target *= 2;
        }
        loc.length = depth;
        return loc;
    };
    std::vector<Local> parts(reps.size());
    const std::size_t workers = std::max<std::size_t>(1, threads);
    for (std::size_t base = 0; base < reps.size(); base += workers) {
        std::vector<std::future<Local>> fut;
        for (std::size_t i = base; i < std::min(reps.size(), base + workers); ++i)
            fut.push_back(std::async(std::launch::async, search, std::cref(reps[i])));
        for (std::size_t i = 0; i < fut.size(); ++i) parts[base + i] = fut[i].get();
    }
    std::set<Flat> all;
    for (const auto& l : parts) {
        all.insert(l.hits.begin(), l.hits.end());
        res.capped = res.capped || l.capped;
        res.word_length = std::max(res.word_length, l.length);
    }
    if (all.size() > cap) res.capped = true;
    for (const Flat& x : all) {
        if (res.points.size() >= cap) break;
        res.points.push_back({unflatten(x, n), p});
    }
    return res;
}

std::string to_json(const IntMatrixRep& m) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : m.m) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& x : row) r.push_back(x.get_str());
        j.push_back(r);
    }
    return j.dump();
}

}  // namespace toruslab
