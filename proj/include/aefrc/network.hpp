#pragma once

#include "aefrc/dataset.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace aefrc {

struct OptimizerConfig;

/// Fully connected sigmoid network. weights[l] maps layer l (width s_l) to
/// layer l+1 (width s_{l+1}) and has shape s_{l+1} x s_l.
struct Network {
    std::vector<std::size_t> layer_sizes;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    static Network zeros(std::vector<std::size_t> layer_sizes);
    /// Uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    static Network random(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

    std::size_t layer_count() const { return layer_sizes.size(); }
    std::size_t input_width() const { return layer_sizes.front(); }
    std::size_t output_width() const { return layer_sizes.back(); }
    std::size_t parameter_count() const;

    /// Throws DataError on inconsistent shapes or non-finite parameters.
    void validate() const;

    /// Layer-by-layer: W row-major, then b.
    Vector flatten() const;
    void unflatten(const Vector& params);
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// All layer activations, input first. Each entry is m x s_l.
std::vector<Matrix> forward(const Network& net, const Matrix& x);

/// Activations of the last layer only.
Matrix encode(const Network& net, const Matrix& x);

struct AEConfig {
    double rho = 0.1;
    double beta_sparse = 3.0;
    double lambda = 1e-4;
    std::optional<double> denoise_snr_db = 10.0;

    void validate() const;
};

inline constexpr double kRhoHatClamp = 1e-8;

/// KL(rho || rho_hat) for a single Bernoulli unit; rho_hat is clamped to
/// [1e-8, 1 - 1e-8] first.
double kl_divergence(double rho, double rho_hat);

struct SparsityTerm {
    double rho;
    double beta;
};

struct CostGrad {
    double cost = 0.0;
    /// Gradient with the same shapes as the network parameters.
    Network grad;
    /// Mean activation of each hidden layer (clamped), layer 1 first.
    std::vector<Vector> rho_hat;
};

/// (1/m) sum 1/2 ||a_L(x_i) - t_i||^2 + lambda/2 sum W^2 [+ beta sum_j KL(rho || rho_hat_j)
/// over every hidden unit]. Backpropagated gradient for every weight and bias.
/// Non-finite intermediates raise NumericalError naming the layer.
CostGrad network_cost_grad(const Network& net, const Matrix& x, const Matrix& targets, double lambda,
                           const std::optional<SparsityTerm>& sparsity);

/// Sparse autoencoder cost; `ae` must have exactly one hidden layer.
CostGrad ae_cost_grad(const Network& ae, const Matrix& x, const Matrix& o, const AEConfig& cfg);

/// x + Gaussian noise at the given per-feature signal-to-noise ratio.
/// Signal power of feature j is mean(x_ij^2); zero-power features stay untouched.
Matrix corrupt(const Matrix& x, double snr_db, std::uint64_t seed);

/// Trains a single-hidden-layer autoencoder to reconstruct the clean input.
Network train_ae(const Matrix& x, std::size_t hidden, const AEConfig& cfg, const OptimizerConfig& opt,
                 std::uint64_t seed);

/// Greedy layerwise pretraining; returns the encoder (input + hidden layers).
Network stack(const Matrix& x, const std::vector<std::size_t>& hidden_sizes, const AEConfig& cfg,
              const OptimizerConfig& opt, std::uint64_t seed);

}  // namespace aefrc
