#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace toruslab {

using Int = mpz_class;
using Rat = mpq_class;
using ZVec = std::vector<Int>;
using QVec = std::vector<Rat>;
using ZMat = std::vector<ZVec>;
using QMat = std::vector<QVec>;

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int cmpabs(const Int& a, const Int& b) { return mpz_cmpabs(a.get_mpz_t(), b.get_mpz_t()); }

ZMat zmat(std::size_t rows, std::size_t cols);
QMat qmat(std::size_t rows, std::size_t cols);
QMat to_q(const ZMat& a);
QMat q_identity(std::size_t n);
QMat q_mul(const QMat& a, const QMat& b);
ZMat z_mul(const ZMat& a, const ZMat& b);
QVec q_vecmat(const QVec& v, const QMat& a);
QMat q_transpose(const QMat& a);
Rat q_det(QMat a);
Int z_det(const ZMat& a);
QMat q_inverse(const QMat& a);
ZMat z_adjugate(const ZMat& a);

Int lcm_den(const QMat& a);
Int lcm_den(const QVec& v);
Int vec_content(const ZVec& v);

int valuation(const Int& x, const Int& p);
int valuation(const Rat& x, const Int& p);

/// Row Hermite normal form of a generating set of a full-rank lattice in Z^n.
/// The result is lower triangular with positive diagonal and
/// 0 <= h[i][j] < h[j][j] for j < i.
ZMat hnf_full(ZMat gens, std::size_t n);

/// Elementary divisors d_1 | d_2 | ... of an integer matrix (nonnegative, zeros last).
ZVec elementary_divisors(ZMat a);

/// Rows of a basis of (rowspace(a) tensor Q) cap Z^m.
ZMat saturation(const ZMat& a);

/// Basis of the integer right-kernel {x : a x = 0}.
ZMat integer_kernel(const ZMat& a);

/// A full-rank lattice in Q^n stored as hnf / den with den minimal.
struct Lattice {
    Int den;
    ZMat hnf;

    std::size_t dim() const { return hnf.size(); }
    QMat basis() const;
    Rat covolume() const;
    bool operator==(const Lattice& o) const;
    std::strong_ordering operator<=>(const Lattice& o) const;
    std::string key() const;
};

Lattice lattice_from_rows(const QMat& rows, std::size_t n);
Lattice lattice_from_int_rows(const ZMat& rows, const Int& den, std::size_t n);
Lattice lat_scale(const Lattice& a, const Rat& c);
Lattice lat_sum(const Lattice& a, const Lattice& b);
Lattice lat_dual(const Lattice& a);
Lattice lat_intersect(const Lattice& a, const Lattice& b);
bool lat_contains(const Lattice& a, const QVec& v);
bool lat_contains(const Lattice& a, const Lattice& b);
QVec lat_coords(const Lattice& a, const QVec& v);
/// Index [a : b] for b contained in a.
Rat lat_index(const Lattice& a, const Lattice& b);

std::string to_string(const Int& x);
std::string to_string(const Rat& x);
Int parse_int(const std::string& s);

}  // namespace toruslab
