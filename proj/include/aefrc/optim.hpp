#pragma once

#include "aefrc/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

namespace aefrc {

struct OptimizerConfig {
    int max_iters = 400;
    double tol = 1e-6;
    /// Curvature pairs kept by the quasi-Newton update.
    int history = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Returns the cost at x and writes the gradient into `grad` (already sized).
using CostGradFn = std::function<double(const Vector& x, Vector& grad)>;

enum class StopReason {
    gradient_tolerance,
    cost_tolerance,
    max_iterations,
    line_search_failure,
};

const char* to_string(StopReason r);

struct IterationTrace {
    int iteration = 0;
    double cost = 0.0;
    double step_norm = 0.0;
};

struct MinimizeResult {
    Vector x;
    double cost = 0.0;
    int iterations = 0;
    int evaluations = 0;
    StopReason reason = StopReason::max_iterations;
    /// Accepted steps only; non-increasing in cost.
    std::vector<IterationTrace> trace;

    bool line_search_failed() const { return reason == StopReason::line_search_failure; }
};

/// Limited-memory BFGS with a strong-Wolfe line search. Stops when the
/// gradient infinity norm or the relative cost change falls below `tol`, or
/// after `max_iters` iterations. Throws NumericalError if f(x0) is not finite.
MinimizeResult minimize(const CostGradFn& f, Vector x0, const OptimizerConfig& cfg);

struct GenerationTrace;

struct CmaesConfig {
    /// Candidates per generation; 0 selects 4 + floor(3 ln d).
    int population = 0;
    double sigma0 = 0.3;
    /// Budget on generation evaluations (the evaluation of x0 is not counted).
    int max_evals = 10000;
    std::uint64_t seed = 0;
    /// Stop once the recent best-fitness history and the current generation
    /// both span less than this.
    double tol_fitness = 1e-12;
    /// Stop once the best fitness reaches this value.
    double target_fitness = -std::numeric_limits<double>::infinity();
    /// Called after every generation with the trace row and the best point so far.
    std::function<void(const GenerationTrace&, const Vector& best_x)> on_generation;

    void validate() const;
    int resolved_population(std::size_t dimension) const;
};

struct FitnessFn {
    std::function<double(const Vector&)> fn;
    /// Candidates of one generation may be evaluated concurrently.
    bool concurrent_safe = false;
};

struct GenerationTrace {
    int generation = 0;
    double best_fitness = 0.0;
    double generation_best = 0.0;
    double sigma = 0.0;
};

struct CmaesResult {
    Vector best_x;
    double best_fitness = 0.0;
    double initial_fitness = 0.0;
    int generations = 0;
    int evaluations = 0;
    int population = 0;
    /// Three consecutive generations without a single finite fitness.
    bool aborted = false;
    std::vector<GenerationTrace> trace;
};

/// (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation and
/// rank-one + rank-mu covariance updates. Returns the best point ever
/// evaluated, x0 included. Deterministic for a fixed seed.
CmaesResult cmaes(const FitnessFn& f, const Vector& x0, const CmaesConfig& cfg);

/// Delimited trace dumps for plotting.
void write_trace(const std::filesystem::path& path, const std::vector<IterationTrace>& trace);
void write_trace(const std::filesystem::path& path, const std::vector<GenerationTrace>& trace);

}  // namespace aefrc
