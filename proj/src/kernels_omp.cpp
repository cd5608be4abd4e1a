#include "kernels_detail.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aefrc::kernels::parallel {

namespace {

Eigen::Index block_count(Eigen::Index rows) { return (rows + kBlockRows - 1) / kBlockRows; }

void sigmoid_inplace(Matrix& z) {
    z = z.unaryExpr([](double v) { return sigmoid(v); });
}

struct BlockPartial {
    double squared = 0.0;
    std::vector<Matrix> gw;
    std::vector<Vector> gb;
};

}  // namespace

std::vector<Matrix> forward(const Network& net, const Matrix& x) {
    detail::check_inputs(net, x, nullptr);
    const auto m = x.rows();
    const auto nb = block_count(m);
    std::vector<Matrix> acts(net.layer_count());
    acts[0] = x;
    for (std::size_t l = 1; l < net.layer_count(); ++l)
        acts[l].resize(m, static_cast<Eigen::Index>(net.layer_sizes[l]));

#pragma omp parallel for schedule(static) if (nb > 1)
    for (Eigen::Index b = 0; b < nb; ++b) {
        const Eigen::Index r0 = b * kBlockRows;
        const Eigen::Index rows = std::min(kBlockRows, m - r0);
        for (std::size_t l = 1; l < net.layer_count(); ++l) {
            Matrix z = acts[l - 1].middleRows(r0, rows) * net.weights[l - 1].transpose();
            z.rowwise() += net.biases[l - 1].transpose();
            sigmoid_inplace(z);
            acts[l].middleRows(r0, rows) = z;
        }
    }
    for (std::size_t l = 1; l < acts.size(); ++l) {
        if (!acts[l].allFinite()) throw NumericalError("non-finite activation at layer " + std::to_string(l));
    }
    return acts;
}

CostGrad cost_grad(const Network& net, const Matrix& x, const Matrix& targets, double lambda,
                   const std::optional<SparsityTerm>& sparsity) {
    detail::check_inputs(net, x, &targets);
    const auto acts = parallel::forward(net, x);
    const std::size_t layers = net.layer_count();
    const auto m = x.rows();
    const auto nb = block_count(m);
    const double inv_m = 1.0 / static_cast<double>(m);

    CostGrad out;

    // Per-unit sparsity slopes, added to the hidden deltas of every sample.
    std::vector<Eigen::RowVectorXd> slope(layers);
    for (std::size_t l = 1; l + 1 < layers; ++l) {
        Vector raw = Vector::Zero(acts[l].cols());
        for (Eigen::Index b = 0; b < nb; ++b) {
            const Eigen::Index r0 = b * kBlockRows;
            raw += acts[l].middleRows(r0, std::min(kBlockRows, m - r0)).colwise().sum().transpose();
        }
        raw *= inv_m;
        out.rho_hat.push_back(raw.unaryExpr([](double v) { return std::clamp(v, kRhoHatClamp, 1.0 - kRhoHatClamp); }));
        slope[l] = Eigen::RowVectorXd::Zero(raw.size());
        if (sparsity) {
            for (Eigen::Index q = 0; q < raw.size(); ++q)
                slope[l](q) = sparsity->beta * detail::kl_slope(sparsity->rho, raw(q));
        }
    }

    std::vector<BlockPartial> partial(static_cast<std::size_t>(nb));

#pragma omp parallel for schedule(static) if (nb > 1)
    for (Eigen::Index b = 0; b < nb; ++b) {
        const Eigen::Index r0 = b * kBlockRows;
        const Eigen::Index rows = std::min(kBlockRows, m - r0);
        BlockPartial& part = partial[static_cast<std::size_t>(b)];
        part.gw.resize(layers - 1);
        part.gb.resize(layers - 1);

        const auto top = acts[layers - 1].middleRows(r0, rows);
        const Matrix diff = top - targets.middleRows(r0, rows);
        part.squared = diff.squaredNorm();
        Matrix delta = diff.cwiseProduct(top.cwiseProduct((1.0 - top.array()).matrix()));

        for (std::size_t l = layers - 1; l >= 1; --l) {
            const auto below = acts[l - 1].middleRows(r0, rows);
            part.gw[l - 1] = delta.transpose() * below;
            part.gb[l - 1] = delta.colwise().sum().transpose();
            if (l == 1) break;
            Matrix back = delta * net.weights[l - 1];
            back.rowwise() += slope[l - 1];
            delta = back.cwiseProduct(below.cwiseProduct((1.0 - below.array()).matrix()));
        }
    }

    out.grad = Network::zeros(net.layer_sizes);
    double squared = 0.0;
    for (const auto& part : partial) {
        squared += part.squared;
        for (std::size_t l = 0; l + 1 < layers; ++l) {
            out.grad.weights[l] += part.gw[l];
            out.grad.biases[l] += part.gb[l];
        }
    }

    double decay = 0.0;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        out.grad.weights[l] = out.grad.weights[l] * inv_m + lambda * net.weights[l];
        out.grad.biases[l] *= inv_m;
        decay += net.weights[l].squaredNorm();
    }

    double kl = 0.0;
    if (sparsity) {
        for (const auto& rh : out.rho_hat)
            for (Eigen::Index q = 0; q < rh.size(); ++q) kl += kl_divergence(sparsity->rho, rh(q));
    }

    out.cost = 0.5 * squared * inv_m + 0.5 * lambda * decay + (sparsity ? sparsity->beta * kl : 0.0);
    if (!std::isfinite(out.cost)) throw NumericalError("non-finite cost");
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        if (!out.grad.weights[l].allFinite() || !out.grad.biases[l].allFinite())
            throw NumericalError("non-finite gradient at layer " + std::to_string(l + 1));
    }
    return out;
}

}  // namespace aefrc::kernels::parallel
