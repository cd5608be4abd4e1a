#include "aefrc/eval.hpp"

#include "aefrc/errors.hpp"
#include "aefrc/random.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>

namespace aefrc {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Json optimizer_json(const OptimizerConfig& o) {
    return {{"max_iters", o.max_iters}, {"tol", o.tol}, {"history", o.history}};
}

Json fold_json(const FoldResult& f) {
    Json j{{"fold", f.fold},
           {"valid", f.valid},
           {"test_accuracy", f.test_accuracy},
           {"test_accuracy_percent", 100.0 * f.test_accuracy},
           {"train_accuracy", f.train_accuracy},
           {"rule_count", f.rule_count},
           {"weak_rules", f.weak_rules},
           {"train_size", f.train_size},
           {"test_size", f.test_size},
           {"cma_evaluations", f.cma_evaluations},
           {"seconds", f.seconds},
           {"warnings", f.warnings}};
    if (!f.error.empty()) j["error"] = f.error;
    if (f.beta_sep) j["beta_sep"] = *f.beta_sep;
    if (f.initial_fitness) j["initial_fitness"] = *f.initial_fitness;
    if (f.final_fitness) j["final_fitness"] = *f.final_fitness;
    return j;
}

FoldResult fold_from_json(const Json& j) {
    FoldResult f;
    f.fold = j.at("fold").get<int>();
    f.valid = j.at("valid").get<bool>();
    f.test_accuracy = j.at("test_accuracy").get<double>();
    f.train_accuracy = j.value("train_accuracy", 0.0);
    f.rule_count = j.at("rule_count").get<std::size_t>();
    f.weak_rules = j.value("weak_rules", std::size_t{0});
    f.train_size = j.value("train_size", std::size_t{0});
    f.test_size = j.value("test_size", std::size_t{0});
    f.cma_evaluations = j.value("cma_evaluations", 0);
    f.seconds = j.value("seconds", 0.0);
    f.warnings = j.value("warnings", std::vector<std::string>{});
    f.error = j.value("error", std::string{});
    if (j.contains("beta_sep")) f.beta_sep = j["beta_sep"].get<double>();
    if (j.contains("initial_fitness")) f.initial_fitness = j["initial_fitness"].get<double>();
    if (j.contains("final_fitness")) f.final_fitness = j["final_fitness"].get<double>();
    return f;
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    sd = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return;
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
}

struct Cell {
    std::size_t config;
    int fold;
};

}  // namespace

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::none: return "none";
        case Strategy::ft1: return "ft1";
        case Strategy::ft2: return "ft2";
        case Strategy::ft3: return "ft3";
        case Strategy::ft4: return "ft4";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& s) {
    for (auto v : {Strategy::none, Strategy::ft1, Strategy::ft2, Strategy::ft3, Strategy::ft4})
        if (s == to_string(v)) return v;
    throw UsageError("unknown strategy '" + s + "' (expected none, ft1, ft2, ft3 or ft4)");
}

std::vector<std::string> PipelineConfig::problems() const {
    std::vector<std::string> out;
    auto check = [&](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            out.emplace_back(e.what());
        }
    };
    if (hidden_sizes.empty()) out.emplace_back("architecture needs at least one hidden layer");
    for (auto h : hidden_sizes)
        if (h == 0) out.emplace_back("hidden layer sizes must be >= 1");
    check([&] { ae.validate(); });
    check([&] { opt.validate(); });
    if (strategy == Strategy::ft2 || strategy == Strategy::ft3) {
        if (cma.population != 0 && cma.population < 4) out.emplace_back("CMA-ES population must be >= 4");
        if (cma.max_evals < 1) out.emplace_back("CMA-ES max_evals must be >= 1");
    }
    if (strategy == Strategy::ft3) check([&] { ft3_inner.validate(); });
    if (strategy == Strategy::ft4) check([&] { ft4.validate(); });
    if (expert) check([&] { expert->spec.validate(); });
    return out;
}

std::vector<Classification> predict(const TrainedPipeline& p, const Matrix& raw) {
    const Matrix codes = encode(p.encoder, preprocess(raw, p.preproc));
    std::vector<Classification> out;
    out.reserve(static_cast<std::size_t>(codes.rows()));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = codes;
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        out.push_back(classify(p.rules, rows.row(i).data(), static_cast<std::size_t>(rows.cols())));
    return out;
}

std::vector<int> predict_labels(const TrainedPipeline& p, const Matrix& raw) {
    if (raw.rows() == 0) return {};
    return classify_all(p.rules, encode(p.encoder, preprocess(raw, p.preproc)));
}

TrainedPipeline train_pipeline(const Dataset& train, const PipelineConfig& cfg, std::uint64_t seed, FoldResult* info) {
    const auto problems = cfg.problems();
    if (!problems.empty()) throw UsageError(problems.front());
    train.validate();

    TrainedPipeline out;
    out.class_names = train.class_names;
    out.preproc = cfg.expert ? cfg.expert->spec : fit_ramp_spec(train);
    Dataset xp = preprocess(train, out.preproc);
    if (cfg.expert) xp = append_expert(xp, make_expert_samples(cfg.expert->rules, out.preproc, train.class_names, cfg.dont_care));
    const int classes = xp.class_count();

    Network enc = stack(xp.samples, cfg.hidden_sizes, cfg.ae, cfg.opt, derive_seed(seed, {1}));

    std::optional<FineTuneResult> tuned;
    switch (cfg.strategy) {
        case Strategy::none: break;
        case Strategy::ft1:
            enc = ft1(enc, xp.samples, xp.labels, classes, cfg.opt, cfg.ft1_use_mean || cfg.expert.has_value());
            break;
        case Strategy::ft2: {
            CmaesConfig cma = cfg.cma;
            cma.seed = derive_seed(seed, {2});
            tuned = ft2(enc, xp.samples, xp.labels, classes, cma, cfg.frc);
            break;
        }
        case Strategy::ft3: {
            CmaesConfig cma = cfg.cma;
            cma.seed = derive_seed(seed, {3});
            if (!(cma.sigma0 > 0.0)) cma.sigma0 = 0.1;
            tuned = ft3(enc, xp.samples, xp.labels, classes, cma, cfg.ft3_inner, cfg.frc);
            break;
        }
        case Strategy::ft4: tuned = ft4(enc, xp.samples, xp.labels, classes, cfg.ft4, cfg.opt); break;
    }
    if (tuned) {
        enc = tuned->net;
        out.trace = tuned->trace;
        if (info) {
            info->beta_sep = tuned->beta_sep;
            if (tuned->initial) info->initial_fitness = tuned->initial->fitness();
            if (tuned->final) info->final_fitness = tuned->final->fitness();
            info->cma_evaluations = tuned->evaluations;
            info->warnings.insert(info->warnings.end(), tuned->warnings.begin(), tuned->warnings.end());
        }
    }
    out.encoder = std::move(enc);

    const Matrix codes = encode(out.encoder, xp.samples);
    out.rules = generate_rules(codes, xp.labels, fit_mf_bank(codes, xp.labels, classes), cfg.frc);
    if (info) {
        info->rule_count = rule_count(out.rules);
        info->weak_rules = static_cast<std::size_t>(
            std::count_if(out.rules.rules.begin(), out.rules.rules.end(), [](const FuzzyRule& r) { return r.weak(); }));
        info->train_accuracy = accuracy(classify_all(out.rules, codes), xp.labels);
        info->train_size = xp.sample_count();
        if (out.rules.skipped_samples)
            info->warnings.push_back(std::to_string(out.rules.skipped_samples) + " training samples had zero membership");
    }
    return out;
}

FoldResult run_fold(const Dataset& train, const Dataset& test, const PipelineConfig& cfg, std::uint64_t seed,
                    TrainedPipeline* trained) {
    FoldResult r;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        TrainedPipeline p = train_pipeline(train, cfg, seed, &r);
        r.test_size = test.sample_count();
        r.test_accuracy = test.sample_count() ? accuracy(predict_labels(p, test.samples), test.labels) : 0.0;
        r.valid = true;
        if (trained) *trained = std::move(p);
    } catch (const std::exception& e) {
        r.valid = false;
        r.error = e.what();
    }
    r.seconds = seconds_since(t0);
    return r;
}

void ExperimentReport::summarize() {
    std::vector<double> acc;
    std::vector<double> rules;
    for (const auto& f : folds)
        if (f.valid) {
            acc.push_back(f.test_accuracy);
            rules.push_back(static_cast<double>(f.rule_count));
        }
    valid_folds = acc.size();
    mean_std(acc, mean_accuracy, std_accuracy);
    mean_std(rules, mean_rules, std_rules);
}

Json to_json(const ExperimentReport& r) {
    Json folds = Json::array();
    for (const auto& f : r.folds) folds.push_back(fold_json(f));
    return {{"format", "aefrc-report"},
            {"version", 1},
            {"dataset", r.dataset},
            {"strategy", r.strategy},
            {"architecture", r.architecture},
            {"rho", r.rho},
            {"k", r.k},
            {"seed", r.seed},
            {"wall_seconds", r.wall_seconds},
            {"config", r.config},
            {"folds", folds},
            {"summary",
             {{"valid_folds", r.valid_folds},
              {"mean_accuracy", r.mean_accuracy},
              {"std_accuracy", r.std_accuracy},
              {"mean_accuracy_percent", 100.0 * r.mean_accuracy},
              {"std_accuracy_percent", 100.0 * r.std_accuracy},
              {"mean_rules", r.mean_rules},
              {"std_rules", r.std_rules}}}};
}

ExperimentReport report_from_json(const Json& j) {
    ExperimentReport r;
    try {
        if (j.value("format", std::string{}) != "aefrc-report") throw DataError("not an experiment report");
        if (j.value("version", -1) != 1) throw DataError("unsupported report version");
        r.dataset = j.at("dataset").get<std::string>();
        r.strategy = j.at("strategy").get<std::string>();
        r.architecture = j.at("architecture").get<std::vector<std::size_t>>();
        r.rho = j.at("rho").get<double>();
        r.k = j.at("k").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.wall_seconds = j.value("wall_seconds", 0.0);
        r.config = j.value("config", Json::object());
        for (const auto& jf : j.at("folds")) r.folds.push_back(fold_from_json(jf));
    } catch (const Json::exception& e) {
        throw DataError(std::string("report: ") + e.what());
    }
    r.summarize();
    const auto& s = j.at("summary");
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); };
    if (s.at("valid_folds").get<std::size_t>() != r.valid_folds || !close(s.at("mean_accuracy").get<double>(), r.mean_accuracy) ||
        !close(s.at("std_accuracy").get<double>(), r.std_accuracy) || !close(s.at("mean_rules").get<double>(), r.mean_rules) ||
        !close(s.at("std_rules").get<double>(), r.std_rules))
        throw DataError("report: stored summary does not match the per-fold values");
    return r;
}

Json config_json(const PipelineConfig& cfg, const CvOptions& cv) {
    Json ae{{"rho", cfg.ae.rho}, {"beta", cfg.ae.beta_sparse}, {"lambda", cfg.ae.lambda}};
    ae["denoise_snr_db"] = cfg.ae.denoise_snr_db ? Json(*cfg.ae.denoise_snr_db) : Json(nullptr);
    Json j{{"architecture", cfg.hidden_sizes},
           {"ae", ae},
           {"strategy", to_string(cfg.strategy)},
           {"optimizer", optimizer_json(cfg.opt)},
           {"cmaes",
            {{"population", cfg.cma.population},
             {"sigma0", cfg.cma.sigma0},
             {"max_evals", cfg.cma.max_evals},
             {"tol_fitness", cfg.cma.tol_fitness}}},
           {"ft3_inner", optimizer_json(cfg.ft3_inner)},
           {"ft4",
            {{"beta", cfg.ft4.beta_sep},
             {"zeta", cfg.ft4.zeta},
             {"beta_grid", cfg.ft4.beta_grid},
             {"cap", cfg.ft4.c_abs_cap}}},
           {"frc",
            {{"tnorm", cfg.frc.tnorm == TNorm::product ? "product" : "sum"},
             {"aggregation", cfg.frc.aggregation == RuleAggregation::sum ? "sum" : "max"}}},
           {"ft1_use_mean", cfg.ft1_use_mean},
           {"dont_care", cfg.dont_care == DontCarePolicy::zeros ? "zeros" : "uniform"},
           {"cv", {{"k", cv.plan ? cv.plan->k : cv.k}, {"seed", cv.seed}, {"best_effort", cv.best_effort}}}};
    if (cfg.expert) j["expert"] = Json::parse(format_expert_knowledge(*cfg.expert));
    return j;
}

FoldPlan make_plan(const Dataset& ds, const CvOptions& cv) {
    if (cv.plan) {
        if (cv.plan->assignments.size() != ds.sample_count())
            throw DataError("fold plan covers " + std::to_string(cv.plan->assignments.size()) + " samples, dataset has " +
                            std::to_string(ds.sample_count()));
        return *cv.plan;
    }
    return stratified_kfold(ds, cv.k, derive_seed(cv.seed, {0xF01D}), cv.best_effort);
}

namespace {

std::vector<ExperimentReport> run_cells(const Dataset& ds, const std::vector<PipelineConfig>& configs,
                                        const CvOptions& cv, std::vector<std::vector<TrainedPipeline>>* pipelines) {
    const auto t0 = std::chrono::steady_clock::now();
    const FoldPlan plan = make_plan(ds, cv);
    std::vector<std::pair<Dataset, Dataset>> splits;
    for (int f = 0; f < plan.k; ++f) splits.push_back(split(ds, plan, f));

    std::vector<Cell> cells;
    for (std::size_t c = 0; c < configs.size(); ++c)
        for (int f = 0; f < plan.k; ++f) cells.push_back({c, f});
    std::vector<FoldResult> results(cells.size());
    if (pipelines) {
        pipelines->assign(configs.size(), {});
        for (auto& v : *pipelines) v.resize(static_cast<std::size_t>(plan.k));
    }

    const int threads = cv.jobs > 0 ? cv.jobs : omp_get_max_threads();
    const auto count = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long i = 0; i < count; ++i) {
        const auto& cell = cells[static_cast<std::size_t>(i)];
        const auto& [train, test] = splits[static_cast<std::size_t>(cell.fold)];
        TrainedPipeline* sink = pipelines ? &(*pipelines)[cell.config][static_cast<std::size_t>(cell.fold)] : nullptr;
        results[static_cast<std::size_t>(i)] = run_fold(train, test, configs[cell.config],
                                                        derive_seed(cv.seed, {1, static_cast<std::uint64_t>(cell.fold)}), sink);
        results[static_cast<std::size_t>(i)].fold = cell.fold;
    }

    std::vector<ExperimentReport> reports;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        ExperimentReport r;
        r.dataset = cv.dataset_name;
        r.strategy = to_string(configs[c].strategy);
        r.architecture = {configs[c].expert ? configs[c].expert->spec.output_width() : ds.feature_count()};
        r.architecture.insert(r.architecture.end(), configs[c].hidden_sizes.begin(), configs[c].hidden_sizes.end());
        r.rho = configs[c].ae.rho;
        r.k = plan.k;
        r.seed = cv.seed;
        r.config = config_json(configs[c], cv);
        for (std::size_t i = 0; i < cells.size(); ++i)
            if (cells[i].config == c) r.folds.push_back(results[i]);
        r.summarize();
        r.wall_seconds = seconds_since(t0);
        reports.push_back(std::move(r));
    }
    return reports;
}

}  // namespace

ExperimentReport run_cv(const Dataset& ds, const PipelineConfig& cfg, const CvOptions& cv,
                        std::vector<TrainedPipeline>* pipelines) {
    std::vector<std::vector<TrainedPipeline>> sink;
    auto reports = run_cells(ds, {cfg}, cv, pipelines ? &sink : nullptr);
    if (pipelines) *pipelines = std::move(sink.front());
    return std::move(reports.front());
}

std::size_t select_best(const std::vector<ExperimentReport>& reports) {
    if (reports.empty()) throw UsageError("nothing to select from an empty sweep");
    std::size_t best = 0;
    for (std::size_t i = 1; i < reports.size(); ++i)
        if (reports[i].valid_folds > 0 &&
            (reports[best].valid_folds == 0 || reports[i].mean_accuracy > reports[best].mean_accuracy))
            best = i;
    return best;
}

SweepResult sweep_rho(const Dataset& ds, const PipelineConfig& cfg, const std::vector<double>& grid,
                      const CvOptions& cv, std::vector<std::vector<TrainedPipeline>>* pipelines) {
    if (grid.empty()) throw UsageError("rho grid is empty");
    std::vector<PipelineConfig> configs;
    for (double rho : grid) {
        PipelineConfig c = cfg;
        c.ae.rho = rho;
        configs.push_back(std::move(c));
    }
    SweepResult out;
    out.reports = run_cells(ds, configs, cv, pipelines);
    out.best_index = select_best(out.reports);
    out.best_rho = grid[out.best_index];
    return out;
}

SweepResult sweep_rho(const std::vector<double>& grid, const std::function<ExperimentReport(double rho)>& cell) {
    if (grid.empty()) throw UsageError("rho grid is empty");
    SweepResult out;
    for (double rho : grid) out.reports.push_back(cell(rho));
    out.best_index = select_best(out.reports);
    out.best_rho = grid[out.best_index];
    return out;
}

}  // namespace aefrc
