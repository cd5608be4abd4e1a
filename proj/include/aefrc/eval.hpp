#pragma once

#include "aefrc/dataset.hpp"
#include "aefrc/finetune.hpp"
#include "aefrc/mf.hpp"
#include "aefrc/network.hpp"
#include "aefrc/optim.hpp"
#include "aefrc/rules.hpp"
#include "aefrc/serialize.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace aefrc {

enum class Strategy { none, ft1, ft2, ft3, ft4 };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct PipelineConfig {
    std::vector<std::size_t> hidden_sizes{4};
    AEConfig ae;
    Strategy strategy = Strategy::ft1;
    /// Pretraining, FT-I/FT-IV target convergence, and the FT-IV point search.
    OptimizerConfig opt;
    /// FT-II / FT-III search. sigma0 <= 0 picks the strategy default.
    CmaesConfig cma = [] {
        CmaesConfig c;
        c.sigma0 = 0.0;
        c.max_evals = 2000;
        return c;
    }();
    /// Per-candidate retraining budget of FT-III.
    OptimizerConfig ft3_inner{.max_iters = 100};
    FtIvConfig ft4;
    FrcOptions frc;
    /// FT-I toward class means instead of medians (forced on with expert knowledge).
    bool ft1_use_mean = false;
    std::optional<ExpertKnowledge> expert;
    DontCarePolicy dont_care = DontCarePolicy::zeros;

    /// Every violation, not just the first.
    std::vector<std::string> problems() const;
};

/// Everything needed to classify raw samples.
struct TrainedPipeline {
    PreprocSpec preproc;
    Network encoder;
    RuleBase rules;
    std::vector<std::string> class_names;
    /// FT-II/FT-III search progress; not persisted with the model.
    std::vector<FineTuneTrace> trace;
};

std::vector<Classification> predict(const TrainedPipeline& p, const Matrix& raw);
std::vector<int> predict_labels(const TrainedPipeline& p, const Matrix& raw);

struct FoldResult {
    int fold = 0;
    bool valid = false;
    std::string error;
    double test_accuracy = 0.0;
    double train_accuracy = 0.0;
    std::size_t rule_count = 0;
    std::size_t weak_rules = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::optional<double> beta_sep;
    std::optional<double> initial_fitness;
    std::optional<double> final_fitness;
    int cma_evaluations = 0;
    double seconds = 0.0;
    std::vector<std::string> warnings;
};

/// Preprocess (fitted on `train` only), pretrain, fine-tune, fit the rule base.
TrainedPipeline train_pipeline(const Dataset& train, const PipelineConfig& cfg, std::uint64_t seed,
                               FoldResult* info = nullptr);

/// Trains on `train` and scores `test`. Stage failures are caught and
/// recorded in the result instead of thrown.
FoldResult run_fold(const Dataset& train, const Dataset& test, const PipelineConfig& cfg, std::uint64_t seed,
                    TrainedPipeline* trained = nullptr);

struct ExperimentReport {
    std::string dataset;
    std::string strategy;
    std::vector<std::size_t> architecture;
    double rho = 0.0;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<FoldResult> folds;
    double wall_seconds = 0.0;
    Json config;

    std::size_t valid_folds = 0;
    double mean_accuracy = 0.0;
    /// Sample standard deviation over valid folds.
    double std_accuracy = 0.0;
    double mean_rules = 0.0;
    double std_rules = 0.0;

    /// Recomputes the aggregates from the per-fold values.
    void summarize();
};

Json to_json(const ExperimentReport& r);
/// Throws DataError when the stored aggregates disagree with the folds.
ExperimentReport report_from_json(const Json& j);

struct CvOptions {
    int k = 10;
    std::uint64_t seed = 0;
    /// Externally supplied assignments; overrides k and seed when present.
    std::optional<FoldPlan> plan;
    bool best_effort = false;
    /// Worker threads; 0 = OpenMP default.
    int jobs = 0;
    std::string dataset_name;
};

/// Resolved configuration echo, embedded in every report.
Json config_json(const PipelineConfig& cfg, const CvOptions& cv);

FoldPlan make_plan(const Dataset& ds, const CvOptions& cv);

/// k-fold cross-validation; folds run concurrently. When `pipelines` is
/// given it receives the trained pipeline of every fold (index = fold).
ExperimentReport run_cv(const Dataset& ds, const PipelineConfig& cfg, const CvOptions& cv,
                        std::vector<TrainedPipeline>* pipelines = nullptr);

struct SweepResult {
    double best_rho = 0.0;
    std::size_t best_index = 0;
    std::vector<ExperimentReport> reports;
};

/// Index of the best mean accuracy; ties go to the earlier (lower) entry.
std::size_t select_best(const std::vector<ExperimentReport>& reports);

/// One cross-validation per rho with every (rho, fold) cell scheduled
/// concurrently. Fold seeds are shared across rho values. `pipelines`
/// receives [rho index][fold] trained pipelines when given.
SweepResult sweep_rho(const Dataset& ds, const PipelineConfig& cfg, const std::vector<double>& grid,
                      const CvOptions& cv, std::vector<std::vector<TrainedPipeline>>* pipelines = nullptr);

/// Generic sweep over an arbitrary cell evaluator, for callers that bring
/// their own pipeline.
SweepResult sweep_rho(const std::vector<double>& grid, const std::function<ExperimentReport(double rho)>& cell);

inline const std::vector<double> kDefaultRhoGrid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

}  // namespace aefrc
