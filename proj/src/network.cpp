#include "aefrc/network.hpp"

#include "aefrc/errors.hpp"
#include "aefrc/kernels.hpp"
#include "aefrc/optim.hpp"
#include "aefrc/random.hpp"

#include <cmath>

namespace aefrc {

Network Network::zeros(std::vector<std::size_t> layer_sizes) {
    if (layer_sizes.size() < 2) throw DataError("network needs at least two layers");
    Network net;
    net.layer_sizes = std::move(layer_sizes);
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        const auto rows = static_cast<Eigen::Index>(net.layer_sizes[l + 1]);
        const auto cols = static_cast<Eigen::Index>(net.layer_sizes[l]);
        net.weights.push_back(Matrix::Zero(rows, cols));
        net.biases.push_back(Vector::Zero(rows));
    }
    return net;
}

Network Network::random(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
    Network net = zeros(std::move(layer_sizes));
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const double r = std::sqrt(6.0 / static_cast<double>(net.layer_sizes[l] + net.layer_sizes[l + 1]));
        auto& w = net.weights[l];
        for (Eigen::Index k = 0; k < w.rows(); ++k)
            for (Eigen::Index q = 0; q < w.cols(); ++q) w(k, q) = r * unit(rng);
    }
    return net;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) n += layer_sizes[l + 1] * layer_sizes[l] + layer_sizes[l + 1];
    return n;
}

void Network::validate() const {
    if (layer_sizes.size() < 2) throw DataError("network needs at least two layers");
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != layer_sizes.size() - 1)
        throw DataError("network parameter count does not match layer count");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (layer_sizes[l] == 0) throw DataError("network layer " + std::to_string(l) + " is empty");
        if (static_cast<std::size_t>(weights[l].rows()) != layer_sizes[l + 1] ||
            static_cast<std::size_t>(weights[l].cols()) != layer_sizes[l] ||
            static_cast<std::size_t>(biases[l].size()) != layer_sizes[l + 1])
            throw DataError("network layer " + std::to_string(l + 1) + " has inconsistent parameter shapes");
        if (!weights[l].allFinite() || !biases[l].allFinite())
            throw DataError("network layer " + std::to_string(l + 1) + " has non-finite parameters");
    }
}

Vector Network::flatten() const {
    Vector out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const auto& w = weights[l];
        for (Eigen::Index k = 0; k < w.rows(); ++k)
            for (Eigen::Index q = 0; q < w.cols(); ++q) out(pos++) = w(k, q);
        out.segment(pos, biases[l].size()) = biases[l];
        pos += biases[l].size();
    }
    return out;
}

void Network::unflatten(const Vector& params) {
    if (static_cast<std::size_t>(params.size()) != parameter_count())
        throw DataError("unflatten: expected " + std::to_string(parameter_count()) + " parameters, got " +
                        std::to_string(params.size()));
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        auto& w = weights[l];
        for (Eigen::Index k = 0; k < w.rows(); ++k)
            for (Eigen::Index q = 0; q < w.cols(); ++q) w(k, q) = params(pos++);
        biases[l] = params.segment(pos, biases[l].size());
        pos += biases[l].size();
    }
}

std::vector<Matrix> forward(const Network& net, const Matrix& x) { return kernels::parallel::forward(net, x); }

Matrix encode(const Network& net, const Matrix& x) { return std::move(kernels::parallel::forward(net, x).back()); }

void AEConfig::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw UsageError("sparsity target rho must lie in (0,1)");
    if (!(beta_sparse >= 0.0)) throw UsageError("sparsity weight beta must be >= 0");
    if (!(lambda >= 0.0)) throw UsageError("weight decay lambda must be >= 0");
    if (denoise_snr_db && !std::isfinite(*denoise_snr_db)) throw UsageError("denoising SNR must be finite");
}

double kl_divergence(double rho, double rho_hat) {
    const double r = std::clamp(rho_hat, kRhoHatClamp, 1.0 - kRhoHatClamp);
    return rho * std::log(rho / r) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - r));
}

CostGrad network_cost_grad(const Network& net, const Matrix& x, const Matrix& targets, double lambda,
                           const std::optional<SparsityTerm>& sparsity) {
    return kernels::parallel::cost_grad(net, x, targets, lambda, sparsity);
}

CostGrad ae_cost_grad(const Network& ae, const Matrix& x, const Matrix& o, const AEConfig& cfg) {
    if (ae.layer_count() != 3) throw DataError("autoencoder must have exactly one hidden layer");
    return network_cost_grad(ae, x, o, cfg.lambda, SparsityTerm{cfg.rho, cfg.beta_sparse});
}

Matrix corrupt(const Matrix& x, double snr_db, std::uint64_t seed) {
    if (!std::isfinite(snr_db)) throw DataError("corrupt: SNR must be finite");
    Matrix out = x;
    if (x.rows() == 0) return out;
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double ratio = std::pow(10.0, snr_db / 10.0);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double power = x.col(j).squaredNorm() / static_cast<double>(x.rows());
        if (!(power > 0.0)) continue;
        const double sd = std::sqrt(power / ratio);
        for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) += sd * normal(rng);
    }
    return out;
}

Network train_ae(const Matrix& x, std::size_t hidden, const AEConfig& cfg, const OptimizerConfig& opt,
                 std::uint64_t seed) {
    if (hidden < 1) throw DataError("train_ae: hidden layer needs at least one unit");
    cfg.validate();
    const auto visible = static_cast<std::size_t>(x.cols());
    Network ae = Network::random({visible, hidden, visible}, derive_seed(seed, {1}));
    const Matrix input = cfg.denoise_snr_db ? corrupt(x, *cfg.denoise_snr_db, derive_seed(seed, {2})) : x;

    Network scratch = ae;
    const CostGradFn fn = [&](const Vector& params, Vector& grad) {
        scratch.unflatten(params);
        const auto cg = ae_cost_grad(scratch, input, x, cfg);
        grad = cg.grad.flatten();
        return cg.cost;
    };
    const auto res = minimize(fn, ae.flatten(), opt);
    ae.unflatten(res.x);
    return ae;
}

Network stack(const Matrix& x, const std::vector<std::size_t>& hidden_sizes, const AEConfig& cfg,
              const OptimizerConfig& opt, std::uint64_t seed) {
    if (hidden_sizes.empty()) throw DataError("stack: at least one hidden layer is required");
    std::vector<std::size_t> sizes{static_cast<std::size_t>(x.cols())};
    sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
    Network encoder = Network::zeros(sizes);

    Matrix codes = x;
    for (std::size_t l = 0; l < hidden_sizes.size(); ++l) {
        const Network ae = train_ae(codes, hidden_sizes[l], cfg, opt, derive_seed(seed, {l}));
        encoder.weights[l] = ae.weights[0];
        encoder.biases[l] = ae.biases[0];
        Network half = Network::zeros({static_cast<std::size_t>(codes.cols()), hidden_sizes[l]});
        half.weights[0] = ae.weights[0];
        half.biases[0] = ae.biases[0];
        codes = encode(half, codes);
    }
    return encoder;
}

}  // namespace aefrc
