#pragma once

#include "toruslab/arith.hpp"
#include "toruslab/lll.hpp"

#include <complex>
#include <memory>
#include <string>
#include <vector>

namespace toruslab {

/// P = X^n + a[n-1] X^(n-1) + ... + a[0], degree 2 or 3, irreducible.
struct MonicIntPoly {
    int n = 0;
    ZVec a;
    int r = 0;
    int s = 0;

    bool operator==(const MonicIntPoly& o) const { return a == o.a; }
};

MonicIntPoly make_poly(const ZVec& a);
MonicIntPoly parse_poly(const std::string& text);
std::string poly_string(const MonicIntPoly& p);
/// Determinant of the trace form on Z[t]/P.
Int poly_disc(const MonicIntPoly& p);
/// Power sums tr(t^k), k = 0 .. 2n-2.
ZVec power_traces(const MonicIntPoly& p);
std::vector<long long> poly_roots_mod(const MonicIntPoly& p, long long q);

struct EmbeddingRep {
    MonicIntPoly poly;
    std::vector<double> real_roots;
    std::vector<std::complex<double>> complex_roots;
};

EmbeddingRep real_embedding(const MonicIntPoly& p);

/// K = Q[t]/P with exact arithmetic on power-basis coordinates and its embeddings.
class Field {
public:
    explicit Field(MonicIntPoly p);

    const MonicIntPoly& poly() const { return p_; }
    int n() const { return p_.n; }
    int r() const { return p_.r; }
    int s() const { return p_.s; }
    int places() const { return p_.r + p_.s; }
    const EmbeddingRep& embedding() const { return emb_; }

    QVec one() const;
    QVec gen() const;
    QVec mul(const QVec& x, const QVec& y) const;
    /// Rows are the coordinates of t^i * x.
    QMat mul_matrix(const QVec& x) const;
    QVec inverse(const QVec& x) const;
    Rat norm(const QVec& x) const;
    Rat trace(const QVec& x) const;
    QVec eval_poly(const ZVec& coeffs) const;

    std::vector<std::complex<double>> sigma(const QVec& x) const;
    /// |sigma_i(x)| for each place, real places first.
    std::vector<double> place_abs(const QVec& x) const;
    /// Minkowski coordinates: real places, then sqrt2*Re, sqrt2*Im per complex place.
    RVec minkowski(const QVec& x) const;
    RMat minkowski_rows(const QMat& rows) const;
    /// Multiplicity d_i of each place (1 real, 2 complex).
    int place_weight(int i) const { return i < p_.r ? 1 : 2; }

private:
    MonicIntPoly p_;
    EmbeddingRep emb_;
    std::vector<std::complex<long double>> roots_;
    ZMat red_;
};

using FieldPtr = std::shared_ptr<const Field>;
FieldPtr make_field(const MonicIntPoly& p);

}  // namespace toruslab
