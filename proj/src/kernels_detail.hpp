#pragma once

#include "aefrc/errors.hpp"
#include "aefrc/kernels.hpp"

#include <string>

namespace aefrc::kernels {

namespace detail {

inline void check_inputs(const Network& net, const Matrix& x, const Matrix* targets) {
    if (net.layer_count() < 2) throw DataError("network needs at least two layers");
    if (static_cast<std::size_t>(x.cols()) != net.input_width())
        throw DataError("input has " + std::to_string(x.cols()) + " columns, network expects " +
                        std::to_string(net.input_width()));
    if (targets) {
        if (targets->rows() != x.rows() || static_cast<std::size_t>(targets->cols()) != net.output_width())
            throw DataError("target matrix is " + std::to_string(targets->rows()) + "x" + std::to_string(targets->cols()) +
                            ", expected " + std::to_string(x.rows()) + "x" + std::to_string(net.output_width()));
        if (x.rows() == 0) throw DataError("cost evaluation on zero samples");
    }
}

/// d KL / d rho_hat, zero where rho_hat sits on the clamp.
inline double kl_slope(double rho, double raw_rho_hat) {
    if (raw_rho_hat <= kRhoHatClamp || raw_rho_hat >= 1.0 - kRhoHatClamp) return 0.0;
    return -rho / raw_rho_hat + (1.0 - rho) / (1.0 - raw_rho_hat);
}

}  // namespace detail

}  // namespace aefrc::kernels
