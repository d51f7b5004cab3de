#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace toruslab {

using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
using CoeffVec = std::vector<long long>;

/// LLL on the rows of b. On return b = U * b_in with U unimodular.
void lll_reduce(RMat& b, IMat* u = nullptr, double delta = 0.99);

/// Calls visit(x) for every nonzero integer x with |x * b|^2 <= r2.
/// With half = true only one of x, -x is visited.
/// Throws ResourceError after cap visits.
void fincke_pohst(const RMat& b, double r2, const std::function<void(const CoeffVec&)>& visit,
                  bool half = false, std::size_t cap = 50'000'000);

/// All nonzero x with |x * b|^2 <= r2, coefficients relative to the rows of b.
std::vector<CoeffVec> short_vectors(const RMat& b, double r2, bool half = false,
                                    std::size_t cap = 50'000'000);

}  // namespace toruslab
