#include "toruslab/order_core.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>
#include <set>

namespace toruslab {

namespace {

struct LogGen {
    std::vector<double> v;  // weighted logs, last place dropped
    std::map<std::size_t, Int> word;
};

void add_word(std::map<std::size_t, Int>& acc, const std::map<std::size_t, Int>& w, const Int& c) {
    if (c == 0) return;
    for (const auto& [k, e] : w) {
        Int& x = acc[k];
        x += c * e;
        if (x == 0) acc.erase(k);
    }
}

/// Integer row echelon form of g with the unimodular transform u (u * g = echelon).
void echelon_transform(ZMat g, ZMat& u, ZMat& e) {
    const std::size_t m = g.size();
    const std::size_t n = m ? g[0].size() : 0;
    u = zmat(m, m);
    for (std::size_t i = 0; i < m; ++i) u[i][i] = 1;
    std::size_t row = 0;
    for (std::size_t c = 0; c < n && row < m; ++c) {
        for (;;) {
            std::size_t best = m;
            for (std::size_t i = row; i < m; ++i)
                if (g[i][c] != 0 && (best == m || cmpabs(g[i][c], g[best][c]) < 0)) best = i;
            if (best == m) break;
            std::swap(g[row], g[best]);
            std::swap(u[row], u[best]);
            bool others = false;
            for (std::size_t i = row + 1; i < m; ++i) {
                if (g[i][c] == 0) continue;
                Int q;
                mpz_tdiv_q(q.get_mpz_t(), g[i][c].get_mpz_t(), g[row][c].get_mpz_t());
                for (std::size_t j = 0; j < n; ++j) g[i][j] -= q * g[row][j];
                for (std::size_t j = 0; j < m; ++j) u[i][j] -= q * u[row][j];
                if (g[i][c] != 0) others = true;
            }
            if (!others) {
                ++row;
                break;
            }
        }
    }
    e = g;
}

class LogLattice {
public:
    explicit LogLattice(std::size_t rank) : rank_(rank) {}

    void add(const std::vector<double>& v, std::size_t rel) {
        if (rank_ == 0) return;
        double nv = 0;
        for (double x : v) nv += x * x;
        if (std::sqrt(nv) < 1e-7) return;
        const std::size_t t = basis_.size();
        Eigen::MatrixXd b(t, rank_);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < rank_; ++j) b(i, j) = basis_[i].v[j];
        Eigen::VectorXd vv(rank_);
        for (std::size_t j = 0; j < rank_; ++j) vv(j) = v[j];
        Eigen::VectorXd x = Eigen::VectorXd::Zero(t);
        double resid = vv.norm();
        if (t > 0) {
            x = b.transpose().colPivHouseholderQr().solve(vv);
            resid = (b.transpose() * x - vv).norm();
        }
        LogGen g{v, {{rel, Int(1)}}};
        if (resid > 1e-6 * (1 + vv.norm())) {
            if (t == rank_) throw ConvergenceError("unit relations exceed the expected rank");
            basis_.push_back(g);
            return;
        }
        long q = 0;
        for (long cand = 1; cand <= 100000; ++cand) {
            bool ok = true;
            for (std::size_t i = 0; i < t && ok; ++i) {
                const double y = cand * x(static_cast<Eigen::Index>(i));
                if (std::abs(y - std::round(y)) > 1e-5 * cand) ok = false;
            }
            if (ok) {
                q = cand;
                break;
            }
        }
        if (q == 0) throw ConvergenceError("unit relation is not commensurable with the current basis");
        if (q == 1) return;
        ZMat gm = zmat(t + 1, t);
        for (std::size_t i = 0; i < t; ++i) gm[i][i] = q;
        for (std::size_t i = 0; i < t; ++i) gm[t][i] = Int(static_cast<long>(std::llround(q * x(static_cast<Eigen::Index>(i)))));
        ZMat u, e;
        echelon_transform(gm, u, e);
        std::vector<LogGen> gens = basis_;
        gens.push_back(g);
        std::vector<LogGen> nb;
        for (std::size_t i = 0; i < t; ++i) {
            LogGen ng{std::vector<double>(rank_, 0.0), {}};
            for (std::size_t l = 0; l <= t; ++l) {
                if (u[i][l] == 0) continue;
                const double c = u[i][l].get_d();
                for (std::size_t j = 0; j < rank_; ++j) ng.v[j] += c * gens[l].v[j];
                add_word(ng.word, gens[l].word, u[i][l]);
            }
            nb.push_back(std::move(ng));
        }
        basis_ = std::move(nb);
    }

    void reduce_basis() {
        if (basis_.size() != rank_ || rank_ < 2) {
            if (rank_ == 1 && !basis_.empty() && basis_[0].v[0] < 0) negate(basis_[0]);
            return;
        }
        for (int iter = 0; iter < 1000; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < basis_.size(); ++i)
                for (std::size_t j = 0; j < basis_.size(); ++j) {
                    if (i == j) continue;
                    const double dij = dot(basis_[i].v, basis_[j].v), djj = dot(basis_[j].v, basis_[j].v);
                    const double mu = std::round(dij / djj);
                    if (mu != 0 && std::abs(dij / djj) > 0.5 + 1e-12) {
                        for (std::size_t k = 0; k < rank_; ++k) basis_[i].v[k] -= mu * basis_[j].v[k];
                        add_word(basis_[i].word, basis_[j].word, Int(static_cast<long>(-mu)));
                        changed = true;
                    }
                }
            if (!changed) break;
        }
        std::sort(basis_.begin(), basis_.end(),
                  [](const LogGen& a, const LogGen& b) { return dot(a.v, a.v) < dot(b.v, b.v); });
    }

    const std::vector<LogGen>& basis() const { return basis_; }

private:
    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }
    static void negate(LogGen& g) {
        for (auto& x : g.v) x = -x;
        for (auto& [k, e] : g.word) e = -e;
    }
    std::size_t rank_;
    std::vector<LogGen> basis_;
};

QVec coeffs_to_elt(const CoeffVec& x, const QMat& b) {
    QVec e(b[0].size(), Rat(0));
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!x[i]) continue;
        for (std::size_t k = 0; k < e.size(); ++k) e[k] += Rat(static_cast<long>(x[i])) * b[i][k];
    }
    return e;
}

std::vector<double> place_abs_from_mink(const RVec& y, int r, int s) {
    std::vector<double> a(static_cast<std::size_t>(r + s));
    for (int i = 0; i < r; ++i) a[i] = std::abs(y(i));
    for (int j = 0; j < s; ++j) a[r + j] = std::sqrt((y(r + 2 * j) * y(r + 2 * j) + y(r + 2 * j + 1) * y(r + 2 * j + 1)) / 2);
    return a;
}

}  // namespace

ClassRegistry::ClassRegistry(FieldPtr K, RegistryOptions opts) : K_(std::move(K)), opts_(opts) {}

std::pair<Lattice, QVec> ClassRegistry::reduce(const Lattice& L) const {
    QMat bq = L.basis();
    RMat b = K_->minkowski_rows(bq);
    RMat bl = b;
    lll_reduce(bl);
    double r2 = bl.row(0).squaredNorm();
    auto cands = short_vectors(b, r2 * (1 + 1e-9), true);
    const CoeffVec* best = nullptr;
    double bn = 0;
    for (const auto& x : cands) {
        RVec y = RVec::Zero(b.cols());
        for (std::size_t i = 0; i < x.size(); ++i) y += static_cast<double>(x[i]) * b.row(static_cast<Eigen::Index>(i)).transpose();
        const double nn = y.squaredNorm();
        if (!best || nn < bn * (1 - 1e-12) || (nn <= bn * (1 + 1e-12) && x < *best)) {
            best = &x;
            bn = nn;
        }
    }
    if (!best) throw ConvergenceError("reduce: no short vector found");
    QVec v = coeffs_to_elt(*best, bq);
    return {lat_mul_elem(*K_, L, K_->inverse(v)), v};
}

std::vector<ClassRegistry::Minimum> ClassRegistry::minima_region(const Lattice& M) const {
    const int r = K_->r(), s = K_->s(), m = r + s;
    QMat bq = M.basis();
    RMat b = K_->minkowski_rows(bq);
    const double vol = std::abs(b.determinant());
    const double bnd = opts_.region_factor * std::pow(2.0 / std::numbers::pi, s) * vol;
    const double logb = std::log(std::max(bnd, 1.0));
    const double h = opts_.log_step;
    std::set<CoeffVec> cand;
    std::vector<double> a(static_cast<std::size_t>(m), 0.0);
    std::function<void(int, double)> grid = [&](int i, double budget) {
        if (i == m) {
            RMat sb = b;
            for (int k = 0; k < r; ++k) sb.col(k) /= std::exp(a[k] + h);
            for (int j = 0; j < s; ++j) {
                const double c = std::sqrt(2.0) * std::exp(a[r + j] + h);
                sb.col(r + 2 * j) /= c;
                sb.col(r + 2 * j + 1) /= c;
            }
            for (auto& x : short_vectors(sb, m + 1e-9, true)) cand.insert(x);
            return;
        }
        const int d = K_->place_weight(i);
        for (double ai = 0; d * ai <= budget + 1e-12; ai += h) {
            a[i] = ai;
            grid(i + 1, budget - d * ai);
        }
    };
    grid(0, logb);

    struct Cand {
        CoeffVec x;
        std::vector<double> abs;
        double height;
    };
    std::vector<Cand> cs;
    for (const auto& x : cand) {
        RVec y = RVec::Zero(b.cols());
        for (std::size_t i = 0; i < x.size(); ++i) y += static_cast<double>(x[i]) * b.row(static_cast<Eigen::Index>(i)).transpose();
        auto ab = place_abs_from_mink(y, r, s);
        double lh = 0;
        for (int i = 0; i < m; ++i) lh += K_->place_weight(i) * std::log(std::max(1.0, ab[i]));
        if (lh > logb + 1e-9) continue;
        cs.push_back({x, ab, lh});
    }
    std::vector<Minimum> out;
    for (const auto& c : cs) {
        bool dominated = false;
        for (const auto& z : cs) {
            bool all = true;
            for (int i = 0; i < m && all; ++i)
                if (!(z.abs[i] < c.abs[i] * (1 - 1e-9))) all = false;
            if (all) {
                dominated = true;
                break;
            }
        }
        if (!dominated) out.push_back({coeffs_to_elt(c.x, bq), c.abs});
    }
    return out;
}

std::size_t ClassRegistry::explore(const Lattice& m0) {
    const std::size_t cls = classes_.size();
    const int m = K_->places();
    classes_.emplace_back();
    relations_.emplace_back();
    unit_words_.emplace_back();
    const std::size_t root = nodes_.size();
    nodes_.push_back({m0, cls, root, K_->one(), std::vector<double>(static_cast<std::size_t>(m), 0.0)});
    index_[m0.key()] = root;
    std::deque<std::size_t> queue{root};
    std::vector<Relation> rels;
    std::size_t count = 1;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        const Lattice lu = nodes_[u].lat;
        const std::vector<double> lpu = nodes_[u].log_pos;
        for (const auto& w : minima_region(lu)) {
            Lattice nb = lat_mul_elem(*K_, lu, K_->inverse(w.elt));
            std::vector<double> lp = lpu;
            for (int i = 0; i < m; ++i) lp[i] += std::log(w.abs[i]);
            auto it = index_.find(nb.key());
            if (it == index_.end()) {
                if (++count > opts_.node_cap) throw ResourceError("class exploration exceeded the node cap");
                const std::size_t id = nodes_.size();
                nodes_.push_back({nb, cls, u, w.elt, lp});
                index_[nb.key()] = id;
                queue.push_back(id);
            } else {
                const std::size_t b = it->second;
                if (nodes_[b].cls != cls) throw ConvergenceError("reduced lattice reached from two classes");
                std::vector<double> lg(static_cast<std::size_t>(m));
                double nn = 0;
                for (int i = 0; i < m; ++i) {
                    lg[i] = lp[i] - nodes_[b].log_pos[i];
                    nn += lg[i] * lg[i];
                }
                if (std::sqrt(nn) > 1e-7) rels.push_back({u, w.elt, b, lg});
            }
        }
    }
    ClassData& cd = classes_[cls];
    cd.root = root;
    cd.node_count = count;
    cd.canonical = m0;
    for (std::size_t i = root; i < nodes_.size(); ++i)
        if (nodes_[i].lat < cd.canonical) cd.canonical = nodes_[i].lat;
    FracIdealRep rootideal{K_, m0};
    cd.multiplier = ideal_colon(rootideal, rootideal).lat;
    OrderRep mo = order_from_lattice(K_, cd.multiplier);
    cd.multiplier_disc = mo.disc;
    cd.torsion = torsion_order(mo);

    const std::size_t rank = static_cast<std::size_t>(m - 1);
    LogLattice ll(rank);
    for (std::size_t j = 0; j < rels.size(); ++j) {
        std::vector<double> wv(rank);
        for (std::size_t i = 0; i < rank; ++i) wv[i] = K_->place_weight(static_cast<int>(i)) * rels[j].log[i];
        ll.add(wv, j);
    }
    ll.reduce_basis();
    if (ll.basis().size() != rank) throw ConvergenceError("unit lattice of deficient rank");
    Eigen::MatrixXd reg(rank, rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const auto& g = ll.basis()[i];
        std::vector<double> logs(static_cast<std::size_t>(m), 0.0);
        for (const auto& [rel, e] : g.word)
            for (int k = 0; k < m; ++k) logs[k] += e.get_d() * rels[rel].log[k];
        cd.unit_logs.push_back(logs);
        for (std::size_t k = 0; k < rank; ++k) reg(i, k) = g.v[k];
        unit_words_[cls].push_back(g.word);
    }
    cd.regulator = rank == 0 ? 1.0 : std::abs(reg.determinant());
    relations_[cls] = std::move(rels);
    return cls;
}

std::size_t ClassRegistry::classify(const Lattice& L) {
    auto [m, v] = reduce(L);
    auto it = index_.find(m.key());
    if (it != index_.end()) return nodes_[it->second].cls;
    return explore(m);
}

std::vector<ClassRegistry::NodeView> ClassRegistry::class_nodes(std::size_t id) const {
    const ClassData& cd = classes_.at(id);
    std::vector<NodeView> out;
    for (std::size_t i = cd.root; i < nodes_.size() && out.size() < cd.node_count; ++i)
        if (nodes_[i].cls == id) out.push_back({nodes_[i].lat, nodes_[i].log_pos});
    return out;
}

IdealClassRep ClassRegistry::class_rep(std::size_t id) const {
    const ClassData& cd = classes_.at(id);
    return {{K_, cd.canonical}, order_from_lattice(K_, cd.multiplier), id};
}

QVec ClassRegistry::alpha(std::size_t node) const {
    std::vector<std::size_t> path;
    std::size_t u = node;
    while (nodes_[u].parent != u) {
        path.push_back(u);
        u = nodes_[u].parent;
    }
    QVec acc = K_->one();
    for (auto it = path.rbegin(); it != path.rend(); ++it) acc = K_->mul(acc, nodes_[*it].step);
    return acc;
}

QVec ClassRegistry::relation_unit(const Relation& r) const {
    return K_->mul(K_->mul(alpha(r.a), r.w), K_->inverse(alpha(r.b)));
}

std::vector<QVec> ClassRegistry::fundamental_units(std::size_t id) const {
    std::vector<QVec> units;
    const auto& rels = relations_.at(id);
    for (const auto& word : unit_words_.at(id)) {
        QVec u = K_->one();
        for (const auto& [rel, e] : word) {
            QVec base = relation_unit(rels[rel]);
            if (e < 0) base = K_->inverse(base);
            Int k = abs(e);
            QVec pw = K_->one();
            while (k > 0) {
                if (mpz_odd_p(k.get_mpz_t())) pw = K_->mul(pw, base);
                base = K_->mul(base, base);
                k /= 2;
            }
            u = K_->mul(u, pw);
        }
        Rat nm = K_->norm(u);
        if (nm != 1 && nm != -1) throw ConvergenceError("fundamental unit has norm " + nm.get_str());
        units.push_back(u);
    }
    return units;
}

std::optional<QVec> ClassRegistry::homothety(const Lattice& a, const Lattice& b) {
    const std::size_t ca = classify(a), cb = classify(b);
    if (ca != cb) return std::nullopt;
    auto [ma, va] = reduce(a);
    auto [mb, vb] = reduce(b);
    const std::size_t na = index_.at(ma.key()), nb = index_.at(mb.key());
    QVec num = K_->mul(va, alpha(nb));
    QVec den = K_->mul(alpha(na), vb);
    return K_->mul(num, K_->inverse(den));
}

bool is_homothetic(const FracIdealRep& a, const FracIdealRep& b, QVec* witness) {
    ClassRegistry reg(a.K);
    auto w = reg.homothety(a.lat, b.lat);
    if (w && witness) *witness = *w;
    return w.has_value();
}

int torsion_order(const OrderRep& o) {
    if (o.K->r() > 0) return 2;
    QMat bq = o.lat.basis();
    RMat b = o.K->minkowski_rows(bq);
    int count = 0;
    for (const auto& x : short_vectors(b, o.K->n() + 1e-6)) {
        QVec e = coeffs_to_elt(x, bq);
        if (o.K->norm(e) == 1) ++count;
    }
    return count;
}

UnitGroupRep unit_group(const OrderRep& o, bool exact_units) {
    ClassRegistry reg(o.K);
    const std::size_t id = reg.classify(o.lat);
    const ClassData& cd = reg.info(id);
    UnitGroupRep u;
    u.torsion_order = cd.torsion;
    u.fundamental_logs = cd.unit_logs;
    u.regulator = cd.regulator;
    if (exact_units) u.fundamental_units = reg.fundamental_units(id);
    return u;
}

double minkowski_constant(int n, int s) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return std::pow(4.0 / std::numbers::pi, s) * f / std::pow(static_cast<double>(n), n);
}

PicardGroup picard_group(const OrderRep& o, ClassRegistry& reg) {
    const int n = o.K->n(), s = o.K->s();
    const double mb = minkowski_constant(n, s) * std::sqrt(std::abs(o.disc.get_d()));
    const Int bound = Int(static_cast<long>(std::ceil(mb - 1e-9)));
    const std::size_t idO = reg.classify(o.lat);
    std::vector<std::size_t> found{idO};
    std::set<std::size_t> seen{idO};
    for (const auto& I : ideals_of_bounded_norm(o, std::max(bound, Int(1)))) {
        if (!is_invertible(I, o)) continue;
        const std::size_t id = reg.classify(I.lat);
        if (seen.insert(id).second) found.push_back(id);
    }

    std::map<std::size_t, std::vector<long>> exps{{idO, {}}};
    std::map<std::size_t, Lattice> rep;
    for (std::size_t id : found) rep[id] = reg.info(id).canonical;
    rep[idO] = o.lat;
    std::vector<long> orders;
    std::vector<std::vector<long>> carries;
    auto pad = [](std::vector<long> v, std::size_t k) {
        v.resize(k, 0);
        return v;
    };
    auto product = [&](const Lattice& x, const Lattice& y) { return ideal_mul({o.K, x}, {o.K, y}).lat; };
    for (std::size_t g : found) {
        if (exps.count(g)) continue;
        const std::size_t k = orders.size();
        std::vector<Lattice> powers{o.lat, rep.at(g)};
        std::size_t cur = g;
        long r = 1;
        while (!exps.count(cur)) {
            Lattice nxt = product(powers.back(), rep.at(g));
            cur = reg.classify(nxt);
            if (!rep.count(cur)) rep[cur] = reg.info(cur).canonical;
            powers.push_back(rep.at(cur));
            ++r;
            if (r > 100000) throw ResourceError("picard_group: element order too large");
        }
        orders.push_back(r);
        carries.push_back(pad(exps.at(cur), k));
        std::map<std::size_t, std::vector<long>> next;
        for (const auto& [h, e] : exps) {
            for (long i = 0; i < r; ++i) {
                std::size_t id = h;
                if (i > 0) {
                    id = reg.classify(product(rep.at(h), powers[static_cast<std::size_t>(i)]));
                    if (!rep.count(id)) rep[id] = reg.info(id).canonical;
                }
                std::vector<long> ne = pad(e, k + 1);
                ne[k] = i;
                if (next.count(id)) throw ConvergenceError("picard_group: inconsistent presentation");
                next[id] = ne;
            }
        }
        exps = std::move(next);
    }
    if (exps.size() != found.size())
        throw ConvergenceError("picard_group: group generated by small ideals is larger than the enumerated classes");

    const std::size_t k = orders.size();
    PicardGroup pg;
    pg.relative_orders = orders;
    std::map<std::vector<long>, std::size_t> by_exp;
    for (std::size_t id : found) {
        pg.position[id] = pg.classes.size();
        IdealClassRep c = reg.class_rep(id);
        if (id == idO) c.representative = as_ideal(o);
        pg.classes.push_back(c);
        std::vector<long> e = pad(exps.at(id), k);
        pg.exponents.push_back(e);
        by_exp[e] = pg.classes.size() - 1;
    }
    auto normalize = [&](std::vector<long> e) {
        for (std::size_t i = k; i-- > 0;) {
            const long q = static_cast<long>(std::floor(static_cast<double>(e[i]) / orders[i]));
            e[i] -= q * orders[i];
            for (std::size_t j = 0; j < i; ++j) e[j] += q * carries[i][j];
        }
        return e;
    };
    const std::size_t h = pg.classes.size();
    pg.table.assign(h, std::vector<std::size_t>(h));
    for (std::size_t a = 0; a < h; ++a)
        for (std::size_t b = 0; b < h; ++b) {
            std::vector<long> e(k);
            for (std::size_t i = 0; i < k; ++i) e[i] = pg.exponents[a][i] + pg.exponents[b][i];
            pg.table[a][b] = by_exp.at(normalize(e));
        }
    for (std::size_t a = 0; a < h; ++a)
        for (std::size_t g = 0; g < k; ++g) {
            std::vector<long> eg(k, 0);
            eg[g] = 1;
            const std::size_t gi = by_exp.at(normalize(eg));
            const std::size_t id = reg.classify(product(rep.at(found[a]), rep.at(found[gi])));
            if (pg.position.at(id) != pg.table[a][gi]) throw ConvergenceError("picard_group: multiplication table check failed");
        }

    std::vector<Rat> theta(k);
    std::function<void(std::size_t)> chars = [&](std::size_t i) {
        if (i == k) {
            std::vector<Rat> row(h);
            for (std::size_t c = 0; c < h; ++c) {
                Rat a = 0;
                for (std::size_t j = 0; j < k; ++j) a += pg.exponents[c][j] * theta[j];
                Int fl;
                mpz_fdiv_q(fl.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
                a -= fl;
                a.canonicalize();
                row[c] = a;
            }
            pg.characters.push_back(row);
            return;
        }
        Rat base = 0;
        for (std::size_t j = 0; j < i; ++j) base += carries[i][j] * theta[j];
        for (long mm = 0; mm < orders[i]; ++mm) {
            theta[i] = (base + mm) / Rat(orders[i]);
            theta[i].canonicalize();
            chars(i + 1);
        }
    };
    chars(0);
    return pg;
}

PicardGroup picard_group(const OrderRep& o) {
    ClassRegistry reg(o.K);
    return picard_group(o, reg);
}

}  // namespace toruslab
