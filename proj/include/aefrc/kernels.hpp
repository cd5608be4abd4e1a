#pragma once

// Batch cost/gradient kernels. `serial` is a per-sample loop kept as the
// reference; `parallel` works on fixed row blocks with OpenMP and reduces the
// block partials in block order, so results do not depend on the thread count.

#include "aefrc/network.hpp"

namespace aefrc::kernels {

/// Rows per block in the parallel kernels.
inline constexpr Eigen::Index kBlockRows = 256;

namespace serial {
std::vector<Matrix> forward(const Network& net, const Matrix& x);
CostGrad cost_grad(const Network& net, const Matrix& x, const Matrix& targets, double lambda,
                   const std::optional<SparsityTerm>& sparsity);
}  // namespace serial

namespace parallel {
std::vector<Matrix> forward(const Network& net, const Matrix& x);
CostGrad cost_grad(const Network& net, const Matrix& x, const Matrix& targets, double lambda,
                   const std::optional<SparsityTerm>& sparsity);
}  // namespace parallel

}  // namespace aefrc::kernels
