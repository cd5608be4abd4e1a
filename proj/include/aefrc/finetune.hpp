#pragma once

#include "aefrc/network.hpp"
#include "aefrc/optim.hpp"
#include "aefrc/rules.hpp"

#include <optional>
#include <string>
#include <vector>

namespace aefrc {

/// Per-class targets in the last hidden layer. Row p holds class p+1's target.
struct ConvergencePoints {
    Matrix c;

    int class_count() const { return static_cast<int>(c.rows()); }
    std::size_t width() const { return static_cast<std::size_t>(c.cols()); }
};

/// Column-wise class median (mean of the two central values for even counts),
/// or the class mean when `use_mean` is set.
ConvergencePoints class_targets_median(const Matrix& h, const std::vector<int>& labels, int class_count,
                                       bool use_mean = false);

/// (1/m) sum 1/2 ||h_last(x_i) - C_{y_i}||^2 over all encoder parameters, no weight decay.
double target_cost(const Network& net, const Matrix& xp, const std::vector<int>& labels, const ConvergencePoints& c);

/// Backpropagates the target cost from `net` and returns the updated encoder.
Network converge_to_targets(const Network& net, const Matrix& xp, const std::vector<int>& labels,
                            const ConvergencePoints& c, const OptimizerConfig& opt);

/// Median targets (or mean), then converge_to_targets.
Network ft1(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
            const OptimizerConfig& opt, bool use_mean = false);

class FitnessReport {
public:
    FitnessReport(double t_acc, std::size_t g_d, int p_consequent, std::size_t m, int class_count);

    double t_acc() const { return t_acc_; }
    std::size_t g_d() const { return g_d_; }
    int p_consequent() const { return p_consequent_; }
    double fitness() const { return fitness_; }

private:
    double t_acc_;
    std::size_t g_d_;
    int p_consequent_;
    double fitness_;
};

/// Encode, fit the rule base on the codes, classify the training data, and
/// score -accuracy + rules/m - distinct consequents/P.
FitnessReport frc_fitness(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
                          FrcOptions options = {});

struct FineTuneTrace {
    int step = 0;
    double t_acc = 0.0;
    std::size_t g_d = 0;
    int p_consequent = 0;
    double fitness = 0.0;
};

struct FineTuneResult {
    Network net;
    std::optional<ConvergencePoints> points;
    /// Separation weight chosen by FT-IV.
    std::optional<double> beta_sep;
    std::optional<FitnessReport> initial;
    std::optional<FitnessReport> final;
    /// CMA-ES gave up; `net` is the pretrained encoder.
    bool aborted = false;
    int evaluations = 0;
    std::vector<FineTuneTrace> trace;
    std::vector<std::string> warnings;
};

/// Scale-aware default step size: 0.1 * RMS of the encoder parameters.
double ft2_default_sigma(const Network& net);

/// CMA-ES over every encoder parameter with the rule-classifier fitness.
/// `cma.sigma0 <= 0` selects ft2_default_sigma.
FineTuneResult ft2(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
                   CmaesConfig cma, FrcOptions options = {});

/// CMA-ES over the P x n' convergence points starting from the class medians.
/// Every candidate retrains the pretrained encoder toward its points with
/// `inner` before scoring; the returned encoder is the one retrained toward
/// the best points with the same budget.
FineTuneResult ft3(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
                   const CmaesConfig& cma, const OptimizerConfig& inner, FrcOptions options = {});

struct FtIvConfig {
    /// Separation weight; ignored when `beta_grid` is non-empty.
    double beta_sep = 0.1;
    double zeta = 0.05;
    std::vector<double> beta_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    double c_abs_cap = 10.0;

    void validate() const;
};

/// 1/2 sum_j sum_{y_i=j} ||h_i - C_j||^2 / m_j - beta/(2(P-1)) sum_{j<l} ||C_j - C_l||^2
/// + zeta/(2P) sum_j ||C_j||^2, with its gradient written into `grad` (same shape as C).
double ft4_cost_grad(const Matrix& h, const std::vector<int>& labels, const Matrix& c, double beta, double zeta,
                     Matrix& grad);

struct Ft4Targets {
    ConvergencePoints points;
    double beta = 0.0;
    /// No grid value kept every point inside the cap.
    bool cap_violated = false;
};

/// Minimizes the objective from the class means. With a grid, picks the
/// largest beta whose points all stay within the cap; otherwise the smallest.
Ft4Targets ft4_targets(const Matrix& h, const std::vector<int>& labels, int class_count, const FtIvConfig& cfg,
                       const OptimizerConfig& opt);

FineTuneResult ft4(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
                   const FtIvConfig& cfg, const OptimizerConfig& opt);

void write_trace(const std::filesystem::path& path, const std::vector<FineTuneTrace>& trace);

}  // namespace aefrc
