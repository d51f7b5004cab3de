#include "toruslab/lll.hpp"

#include "toruslab/arith.hpp"

#include <cmath>

namespace toruslab {

namespace {

void gram_schmidt(const RMat& b, RMat& mu, RVec& bb) {
    const auto n = b.rows();
    RMat bs = b;
    mu.setZero(n, n);
    bb.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            mu(i, j) = b.row(i).dot(bs.row(j)) / bb(j);
            bs.row(i) -= mu(i, j) * bs.row(j);
        }
        bb(i) = bs.row(i).squaredNorm();
    }
}

}  // namespace

void lll_reduce(RMat& b, IMat* u, double delta) {
    const auto n = b.rows();
    if (u) *u = IMat::Identity(n, n);
    if (n <= 1) return;
    RMat mu;
    RVec bb;
    gram_schmidt(b, mu, bb);
    Eigen::Index k = 1;
    int guard = 0;
    while (k < n) {
        if (++guard > 100000) throw ConvergenceError("lll_reduce: no convergence");
        for (Eigen::Index j = k - 1; j >= 0; --j) {
            const double q = std::round(mu(k, j));
            if (q != 0.0) {
                b.row(k) -= q * b.row(j);
                if (u) u->row(k) -= static_cast<long long>(q) * u->row(j);
                gram_schmidt(b, mu, bb);
            }
        }
        if (bb(k) >= (delta - mu(k, k - 1) * mu(k, k - 1)) * bb(k - 1)) {
            ++k;
        } else {
            b.row(k).swap(b.row(k - 1));
            if (u) u->row(k).swap(u->row(k - 1));
            gram_schmidt(b, mu, bb);
            k = std::max<Eigen::Index>(k - 1, 1);
        }
    }
}

void fincke_pohst(const RMat& b_in, double r2, const std::function<void(const CoeffVec&)>& visit, bool half,
                  std::size_t cap) {
    const auto n = static_cast<int>(b_in.rows());
    RMat b = b_in;
    IMat u;
    lll_reduce(b, &u);
    RMat mu;
    RVec bb;
    gram_schmidt(b, mu, bb);
    const double bound = r2 * (1 + 1e-12) + 1e-300;
    std::vector<long long> x(n, 0);
    CoeffVec out(n);
    std::size_t visits = 0;

    std::function<void(int, double, bool)> rec = [&](int i, double partial, bool upper_zero) {
        double c = 0;
        for (int j = i + 1; j < n; ++j) c -= x[j] * mu(j, i);
        const double room = bound - partial;
        if (room < 0) return;
        const double w = std::sqrt(room / bb(i));
        long long lo = static_cast<long long>(std::ceil(c - w));
        const long long hi = static_cast<long long>(std::floor(c + w));
        if (half && upper_zero && lo < 0) lo = 0;
        for (long long v = lo; v <= hi; ++v) {
            const double d = v - c;
            const double np = partial + d * d * bb(i);
            if (np > bound) continue;
            x[i] = v;
            if (i == 0) {
                bool zero = true;
                for (int j = 0; j < n; ++j)
                    if (x[j] != 0) zero = false;
                if (zero) continue;
                if (++visits > cap) throw ResourceError("fincke_pohst: enumeration cap exceeded");
                for (int j = 0; j < n; ++j) {
                    long long s = 0;
                    for (int k = 0; k < n; ++k) s += x[k] * u(k, j);
                    out[j] = s;
                }
                visit(out);
            } else {
                rec(i - 1, np, upper_zero && v == 0);
            }
        }
        x[i] = 0;
    };
    if (n > 0) rec(n - 1, 0.0, true);
}

std::vector<CoeffVec> short_vectors(const RMat& b, double r2, bool half, std::size_t cap) {
    std::vector<CoeffVec> res;
    fincke_pohst(b, r2, [&](const CoeffVec& x) { res.push_back(x); }, half, cap);
    return res;
}

}  // namespace toruslab
