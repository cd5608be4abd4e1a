#include "kernels_detail.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aefrc::kernels {
namespace serial {

std::vector<Matrix> forward(const Network& net, const Matrix& x) {
    detail::check_inputs(net, x, nullptr);
    std::vector<Matrix> acts;
    acts.reserve(net.layer_count());
    acts.push_back(x);
    for (std::size_t l = 0; l + 1 < net.layer_count(); ++l) {
        const Matrix& in = acts.back();
        const Matrix& w = net.weights[l];
        const Vector& b = net.biases[l];
        Matrix out(in.rows(), w.rows());
        for (Eigen::Index i = 0; i < in.rows(); ++i) {
            for (Eigen::Index k = 0; k < w.rows(); ++k) {
                double z = b(k);
                for (Eigen::Index q = 0; q < w.cols(); ++q) z += w(k, q) * in(i, q);
                out(i, k) = sigmoid(z);
                if (!std::isfinite(out(i, k)))
                    throw NumericalError("non-finite activation at layer " + std::to_string(l + 1));
            }
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

CostGrad cost_grad(const Network& net, const Matrix& x, const Matrix& targets, double lambda,
                   const std::optional<SparsityTerm>& sparsity) {
    detail::check_inputs(net, x, &targets);
    const auto acts = serial::forward(net, x);
    const std::size_t layers = net.layer_count();
    const auto m = x.rows();
    const double inv_m = 1.0 / static_cast<double>(m);

    CostGrad out;
    out.grad = Network::zeros(net.layer_sizes);

    // Observed mean activation per hidden unit.
    std::vector<Vector> raw_rho(layers);
    for (std::size_t l = 1; l + 1 < layers; ++l) {
        raw_rho[l] = Vector::Zero(acts[l].cols());
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index q = 0; q < acts[l].cols(); ++q) raw_rho[l](q) += acts[l](i, q);
        raw_rho[l] *= inv_m;
        Vector clamped = raw_rho[l];
        for (Eigen::Index q = 0; q < clamped.size(); ++q)
            clamped(q) = std::min(std::max(clamped(q), kRhoHatClamp), 1.0 - kRhoHatClamp);
        out.rho_hat.push_back(clamped);
    }

    double squared = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const Matrix& top = acts[layers - 1];
        Vector delta(top.cols());
        for (Eigen::Index k = 0; k < top.cols(); ++k) {
            const double a = top(i, k);
            const double diff = a - targets(i, k);
            squared += diff * diff;
            delta(k) = diff * a * (1.0 - a);
        }
        for (std::size_t l = layers - 1; l >= 1; --l) {
            const Matrix& below = acts[l - 1];
            Matrix& gw = out.grad.weights[l - 1];
            Vector& gb = out.grad.biases[l - 1];
            for (Eigen::Index k = 0; k < delta.size(); ++k) {
                gb(k) += delta(k);
                for (Eigen::Index q = 0; q < below.cols(); ++q) gw(k, q) += delta(k) * below(i, q);
            }
            if (l == 1) break;
            const Matrix& w = net.weights[l - 1];
            Vector prev(below.cols());
            for (Eigen::Index q = 0; q < below.cols(); ++q) {
                double s = 0.0;
                for (Eigen::Index k = 0; k < delta.size(); ++k) s += w(k, q) * delta(k);
                if (sparsity) s += sparsity->beta * detail::kl_slope(sparsity->rho, raw_rho[l - 1](q));
                const double a = below(i, q);
                prev(q) = s * a * (1.0 - a);
            }
            delta = std::move(prev);
        }
    }

    double decay = 0.0;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        out.grad.weights[l] *= inv_m;
        out.grad.biases[l] *= inv_m;
        const Matrix& w = net.weights[l];
        for (Eigen::Index k = 0; k < w.rows(); ++k)
            for (Eigen::Index q = 0; q < w.cols(); ++q) {
                decay += w(k, q) * w(k, q);
                out.grad.weights[l](k, q) += lambda * w(k, q);
            }
    }

    double kl = 0.0;
    if (sparsity) {
        for (const auto& rh : out.rho_hat)
            for (Eigen::Index q = 0; q < rh.size(); ++q) kl += kl_divergence(sparsity->rho, rh(q));
    }

    out.cost = 0.5 * squared * inv_m + 0.5 * lambda * decay + (sparsity ? sparsity->beta * kl : 0.0);
    if (!std::isfinite(out.cost)) throw NumericalError("non-finite cost");
    return out;
}

}  // namespace serial
}  // namespace aefrc::kernels
