#include "aefrc/cli.hpp"

#include "aefrc/errors.hpp"
#include "aefrc/stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <ostream>
#include <sstream>

namespace aefrc {

namespace fs = std::filesystem;

namespace {

/// Typed lookups that record a problem instead of throwing.
class Reader {
public:
    explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

    void problem(const std::string& path, const std::string& what) { problems_.push_back(path + ": " + what); }

    bool object(const Json& j, const std::string& path) {
        if (j.is_object()) return true;
        problem(path, "expected an object");
        return false;
    }

    void known_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
        for (const auto& [k, v] : j.items())
            if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; }))
                problem(join(path, k), "unknown setting");
    }

    void number(const Json& j, const std::string& path, const char* key, double& dst) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (v.is_number())
            dst = v.get<double>();
        else
            problem(join(path, key), "expected a number");
    }

    void integer(const Json& j, const std::string& path, const char* key, int& dst) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (v.is_number_integer())
            dst = v.get<int>();
        else
            problem(join(path, key), "expected an integer");
    }

    void seed(const Json& j, const std::string& path, const char* key, std::uint64_t& dst) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (v.is_number_unsigned())
            dst = v.get<std::uint64_t>();
        else
            problem(join(path, key), "expected a non-negative integer");
    }

    void boolean(const Json& j, const std::string& path, const char* key, bool& dst) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (v.is_boolean())
            dst = v.get<bool>();
        else
            problem(join(path, key), "expected true or false");
    }

    void string(const Json& j, const std::string& path, const char* key, std::string& dst) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (v.is_string())
            dst = v.get<std::string>();
        else
            problem(join(path, key), "expected a string");
    }

    void numbers(const Json& j, const std::string& path, const char* key, std::vector<double>& dst) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); }))
            dst = v.get<std::vector<double>>();
        else
            problem(join(path, key), "expected an array of numbers");
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

private:
    std::vector<std::string>& problems_;
};

void read_optimizer(Reader& r, const Json& j, const std::string& path, OptimizerConfig& o) {
    if (!r.object(j, path)) return;
    r.known_keys(j, path, {"max_iters", "tol", "history"});
    r.integer(j, path, "max_iters", o.max_iters);
    r.number(j, path, "tol", o.tol);
    r.integer(j, path, "history", o.history);
}

Json schema_label(const CsvSchema& s) {
    if (s.label_name) return *s.label_name;
    return s.label_index;
}

std::string describe(const std::vector<double>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

}  // namespace

fs::path resolve_data_path(const fs::path& p) {
    if (p.is_absolute() || fs::exists(p)) return p;
    if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) {
        const fs::path alt = fs::path(dir) / p;
        if (fs::exists(alt)) return alt;
    }
    return p;
}

RunConfig run_config_from_json(const Json& j, std::vector<std::string>& problems) {
    RunConfig rc;
    Reader r(problems);
    if (!r.object(j, "config")) return rc;
    r.known_keys(j, "", {"format", "dataset", "architecture", "ae", "strategy", "optimizer", "cmaes", "ft3_inner", "ft4",
                         "frc", "ft1_use_mean", "dont_care", "expert", "cv", "rho_grid", "output", "jobs"});
    auto& p = rc.pipeline;

    if (!j.contains("dataset")) {
        r.problem("dataset", "missing (give dataset.path or --dataset)");
    } else if (const auto& d = j.at("dataset"); r.object(d, "dataset")) {
        r.known_keys(d, "dataset", {"path", "label", "header", "delimiter", "name"});
        std::string path;
        r.string(d, "dataset", "path", path);
        if (path.empty()) r.problem("dataset.path", "missing");
        rc.dataset_path = path;
        if (d.contains("label")) {
            const auto& l = d.at("label");
            if (l.is_string())
                rc.schema.label_name = l.get<std::string>();
            else if (l.is_number_integer())
                rc.schema.label_index = l.get<int>();
            else
                r.problem("dataset.label", "expected a column name or index");
        }
        r.boolean(d, "dataset", "header", rc.schema.has_header);
        std::string delim;
        r.string(d, "dataset", "delimiter", delim);
        if (delim.size() > 1) r.problem("dataset.delimiter", "expected a single character");
        if (delim.size() == 1) rc.schema.delimiter = delim[0];
        rc.dataset_name = fs::path(path).stem().string();
        r.string(d, "dataset", "name", rc.dataset_name);
    }

    if (j.contains("architecture")) {
        const auto& a = j.at("architecture");
        if (a.is_array() && std::all_of(a.begin(), a.end(), [](const Json& e) { return e.is_number_unsigned(); }))
            p.hidden_sizes = a.get<std::vector<std::size_t>>();
        else
            r.problem("architecture", "expected an array of hidden layer sizes");
    }

    if (j.contains("ae") && r.object(j.at("ae"), "ae")) {
        const auto& a = j.at("ae");
        r.known_keys(a, "ae", {"rho", "beta", "lambda", "denoise_snr_db"});
        r.number(a, "ae", "rho", p.ae.rho);
        r.number(a, "ae", "beta", p.ae.beta_sparse);
        r.number(a, "ae", "lambda", p.ae.lambda);
        if (a.contains("denoise_snr_db")) {
            const auto& v = a.at("denoise_snr_db");
            if (v.is_null())
                p.ae.denoise_snr_db.reset();
            else if (v.is_number())
                p.ae.denoise_snr_db = v.get<double>();
            else
                r.problem("ae.denoise_snr_db", "expected a number or null");
        }
    }

    if (j.contains("strategy")) {
        std::string s;
        r.string(j, "", "strategy", s);
        try {
            if (!s.empty()) p.strategy = strategy_from_string(s);
        } catch (const Error& e) {
            r.problem("strategy", e.what());
        }
    }

    if (j.contains("optimizer")) read_optimizer(r, j.at("optimizer"), "optimizer", p.opt);
    if (j.contains("ft3_inner")) read_optimizer(r, j.at("ft3_inner"), "ft3_inner", p.ft3_inner);

    if (j.contains("cmaes") && r.object(j.at("cmaes"), "cmaes")) {
        const auto& c = j.at("cmaes");
        r.known_keys(c, "cmaes", {"population", "sigma0", "max_evals", "tol_fitness"});
        r.integer(c, "cmaes", "population", p.cma.population);
        r.number(c, "cmaes", "sigma0", p.cma.sigma0);
        r.integer(c, "cmaes", "max_evals", p.cma.max_evals);
        r.number(c, "cmaes", "tol_fitness", p.cma.tol_fitness);
    }

    if (j.contains("ft4") && r.object(j.at("ft4"), "ft4")) {
        const auto& f = j.at("ft4");
        r.known_keys(f, "ft4", {"beta", "zeta", "beta_grid", "cap"});
        r.number(f, "ft4", "beta", p.ft4.beta_sep);
        r.number(f, "ft4", "zeta", p.ft4.zeta);
        r.numbers(f, "ft4", "beta_grid", p.ft4.beta_grid);
        r.number(f, "ft4", "cap", p.ft4.c_abs_cap);
    }

    if (j.contains("frc") && r.object(j.at("frc"), "frc")) {
        const auto& f = j.at("frc");
        r.known_keys(f, "frc", {"tnorm", "aggregation"});
        std::string tnorm = "product", agg = "sum";
        r.string(f, "frc", "tnorm", tnorm);
        r.string(f, "frc", "aggregation", agg);
        if (tnorm == "product")
            p.frc.tnorm = TNorm::product;
        else if (tnorm == "sum")
            p.frc.tnorm = TNorm::sum;
        else
            r.problem("frc.tnorm", "expected product or sum, got '" + tnorm + "'");
        if (agg == "sum")
            p.frc.aggregation = RuleAggregation::sum;
        else if (agg == "max")
            p.frc.aggregation = RuleAggregation::max;
        else
            r.problem("frc.aggregation", "expected sum or max, got '" + agg + "'");
    }

    r.boolean(j, "", "ft1_use_mean", p.ft1_use_mean);
    if (j.contains("dont_care")) {
        std::string dc;
        r.string(j, "", "dont_care", dc);
        if (dc == "zeros")
            p.dont_care = DontCarePolicy::zeros;
        else if (dc == "uniform")
            p.dont_care = DontCarePolicy::uniform;
        else
            r.problem("dont_care", "expected zeros or uniform, got '" + dc + "'");
    }

    if (j.contains("expert")) {
        const auto& e = j.at("expert");
        if (e.is_string()) {
            rc.expert_path = e.get<std::string>();
        } else if (e.is_object()) {
            try {
                p.expert = parse_expert_knowledge(e.dump());
            } catch (const Error& ex) {
                r.problem("expert", ex.what());
            }
        } else if (!e.is_null()) {
            r.problem("expert", "expected a file path or an embedded expert document");
        }
    }

    if (j.contains("cv") && r.object(j.at("cv"), "cv")) {
        const auto& c = j.at("cv");
        r.known_keys(c, "cv", {"k", "seed", "best_effort", "folds"});
        r.integer(c, "cv", "k", rc.cv.k);
        r.seed(c, "cv", "seed", rc.cv.seed);
        r.boolean(c, "cv", "best_effort", rc.cv.best_effort);
        std::string folds;
        r.string(c, "cv", "folds", folds);
        if (!folds.empty()) rc.fold_file = folds;
    }
    if (!rc.fold_file && rc.cv.k < 2) r.problem("cv.k", "must be >= 2");
    r.integer(j, "", "jobs", rc.cv.jobs);
    if (rc.cv.jobs < 0) r.problem("jobs", "must be >= 0");

    if (j.contains("rho_grid")) {
        const auto& g = j.at("rho_grid");
        if (g.is_string() && g.get<std::string>() == "default")
            rc.rho_grid = kDefaultRhoGrid;
        else
            r.numbers(j, "", "rho_grid", rc.rho_grid);
        for (double v : rc.rho_grid)
            if (!(v > 0.0 && v < 1.0)) r.problem("rho_grid", "values must lie in (0,1)");
    }

    if (j.contains("output") && r.object(j.at("output"), "output")) {
        const auto& o = j.at("output");
        r.known_keys(o, "output", {"dir", "trace"});
        std::string dir;
        r.string(o, "output", "dir", dir);
        if (!dir.empty()) rc.output_dir = dir;
        r.boolean(o, "output", "trace", rc.write_trace);
    }

    for (auto& msg : p.problems()) problems.push_back(std::move(msg));
    rc.cv.dataset_name = rc.dataset_name;
    return rc;
}

Json to_json(const RunConfig& rc) {
    Json j = config_json(rc.pipeline, rc.cv);
    j["format"] = "aefrc-run";
    Json d{{"path", rc.dataset_path.string()}, {"label", schema_label(rc.schema)}, {"header", rc.schema.has_header},
           {"name", rc.dataset_name}};
    if (rc.schema.delimiter) d["delimiter"] = std::string(1, rc.schema.delimiter);
    j["dataset"] = d;
    if (rc.fold_file) j["cv"]["folds"] = rc.fold_file->string();
    if (!rc.pipeline.expert && rc.expert_path) j["expert"] = rc.expert_path->string();
    if (!rc.rho_grid.empty()) j["rho_grid"] = rc.rho_grid;
    j["output"] = {{"dir", rc.output_dir.string()}, {"trace", rc.write_trace}};
    return j;
}

namespace {

/// Settings shared by `run` and `folds export`; unset flags leave the file's values alone.
struct CommonFlags {
    std::string config;
    std::string dataset;
    std::string label;
    std::optional<int> k;
    std::optional<std::uint64_t> seed;
    bool best_effort = false;

    void add(CLI::App* app) {
        app->add_option("-c,--config", config, "JSON run configuration");
        app->add_option("-d,--dataset", dataset, "CSV dataset (relative paths fall back to $FRC_DATA_DIR)");
        app->add_option("--label", label, "label column name or 0-based index (default: last column)");
        app->add_option("-k,--kfold", k, "number of cross-validation folds");
        app->add_option("-s,--seed", seed, "root seed");
        app->add_flag("--best-effort", best_effort, "allow classes smaller than k");
    }

    Json load() const {
        Json j = Json::object();
        if (!config.empty()) {
            const fs::path path = config;
            try {
                j = Json::parse(read_text_file(path));
            } catch (const Json::exception& e) {
                throw DataError(path.string() + ": " + e.what());
            }
        }
        if (!j.is_object()) throw UsageError(config + ": configuration must be a JSON object");
        if (!dataset.empty()) j["dataset"]["path"] = dataset;
        if (!label.empty()) {
            const bool numeric = std::all_of(label.begin(), label.end(), [](char c) { return std::isdigit(c) || c == '-'; });
            j["dataset"]["label"] = numeric ? Json(std::stoi(label)) : Json(label);
        }
        if (k) j["cv"]["k"] = *k;
        if (seed) j["cv"]["seed"] = *seed;
        if (best_effort) j["cv"]["best_effort"] = true;
        return j;
    }
};

struct RunFlags {
    CommonFlags common;
    std::string strategy;
    std::vector<std::size_t> arch;
    std::optional<double> rho;
    std::vector<double> rho_grid;
    bool sweep = false;
    std::optional<double> lambda;
    std::optional<double> beta;
    bool no_denoise = false;
    std::optional<int> max_evals;
    std::string expert;
    std::string folds;
    std::string out;
    bool trace = false;
    std::optional<int> jobs;
};

RunConfig checked_config(const Json& j) {
    std::vector<std::string> problems;
    RunConfig rc = run_config_from_json(j, problems);
    if (!problems.empty()) {
        std::string msg = "invalid configuration (" + std::to_string(problems.size()) + " problem" +
                          (problems.size() == 1 ? "" : "s") + "):";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw UsageError(msg);
    }
    return rc;
}

Dataset load_dataset(const RunConfig& rc) {
    const fs::path path = resolve_data_path(rc.dataset_path);
    if (!fs::exists(path)) throw DataError("dataset file not found: " + rc.dataset_path.string());
    return load_csv(path, rc.schema);
}

/// Highest test accuracy, then fewest rules, then lowest fold index.
std::optional<std::size_t> best_fold(const ExperimentReport& r) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < r.folds.size(); ++i) {
        const auto& f = r.folds[i];
        if (!f.valid) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = r.folds[*best];
        if (f.test_accuracy > b.test_accuracy || (f.test_accuracy == b.test_accuracy && f.rule_count < b.rule_count))
            best = i;
    }
    return best;
}

std::string summary_line(const ExperimentReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << r.dataset << " " << r.strategy << " rho=" << r.rho
       << " accuracy=" << 100.0 * r.mean_accuracy << " +- " << 100.0 * r.std_accuracy << "% rules=" << r.mean_rules
       << " (" << r.valid_folds << "/" << r.folds.size() << " folds valid)";
    return os.str();
}

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
    Json j = f.common.load();
    if (!f.strategy.empty()) j["strategy"] = f.strategy;
    if (!f.arch.empty()) j["architecture"] = f.arch;
    if (f.rho) j["ae"]["rho"] = *f.rho;
    if (f.lambda) j["ae"]["lambda"] = *f.lambda;
    if (f.beta) j["ae"]["beta"] = *f.beta;
    if (f.no_denoise) j["ae"]["denoise_snr_db"] = nullptr;
    if (!f.rho_grid.empty()) j["rho_grid"] = f.rho_grid;
    if (f.sweep && f.rho_grid.empty()) j["rho_grid"] = "default";
    if (f.max_evals) j["cmaes"]["max_evals"] = *f.max_evals;
    if (!f.expert.empty()) j["expert"] = f.expert;
    if (!f.folds.empty()) j["cv"]["folds"] = f.folds;
    if (!f.out.empty()) j["output"]["dir"] = f.out;
    if (f.trace) j["output"]["trace"] = true;
    if (f.jobs) j["jobs"] = *f.jobs;

    RunConfig rc = checked_config(j);
    const Dataset ds = load_dataset(rc);
    if (rc.expert_path) {
        const fs::path path = resolve_data_path(*rc.expert_path);
        if (!fs::exists(path)) throw DataError("expert knowledge file not found: " + rc.expert_path->string());
        rc.pipeline.expert = load_expert_knowledge(path);
    }
    if (rc.fold_file) {
        rc.cv.plan = load_folds(resolve_data_path(*rc.fold_file), ds.sample_count());
        rc.cv.k = rc.cv.plan->k;
    }
    err << "aefrc: " << rc.dataset_name << ", " << ds.sample_count() << " samples, " << ds.feature_count()
        << " features, " << ds.class_count() << " classes\n";

    ExperimentReport report;
    std::vector<TrainedPipeline> pipelines;
    Json sweep_doc;
    if (rc.rho_grid.empty()) {
        report = run_cv(ds, rc.pipeline, rc.cv, &pipelines);
        report.config = to_json(rc);
    } else {
        std::vector<std::vector<TrainedPipeline>> all;
        SweepResult sweep = sweep_rho(ds, rc.pipeline, rc.rho_grid, rc.cv, &all);
        sweep_doc = {{"format", "aefrc-sweep"}, {"version", 1}, {"config", to_json(rc)}, {"best_rho", sweep.best_rho}};
        sweep_doc["reports"] = Json::array();
        for (std::size_t i = 0; i < sweep.reports.size(); ++i) {
            RunConfig cell = rc;
            cell.rho_grid.clear();
            cell.pipeline.ae.rho = rc.rho_grid[i];
            sweep.reports[i].config = to_json(cell);
            sweep_doc["reports"].push_back(to_json(sweep.reports[i]));
            err << "  " << summary_line(sweep.reports[i]) << "\n";
        }
        report = sweep.reports[sweep.best_index];
        pipelines = std::move(all[sweep.best_index]);
        err << "aefrc: best rho " << sweep.best_rho << " (grid " << describe(rc.rho_grid) << ")\n";
    }

    fs::create_directories(rc.output_dir);
    write_text_file(rc.output_dir / "report.json", to_json(report).dump(2) + "\n");
    if (!sweep_doc.is_null()) write_text_file(rc.output_dir / "sweep.json", sweep_doc.dump(2) + "\n");
    for (const auto& fr : report.folds)
        if (!fr.valid) err << "aefrc: fold " << fr.fold << " failed: " << fr.error << "\n";

    const auto best = best_fold(report);
    if (!best) {
        err << "aefrc: every fold failed; no model written\n";
        out << summary_line(report) << "\n";
        return static_cast<int>(ExitCode::numerical);
    }
    const TrainedPipeline& p = pipelines[*best];
    write_text_file(rc.output_dir / "model.json", dump_model({p.preproc, p.encoder, p.class_names}));
    write_text_file(rc.output_dir / "rulebase.json", dump_rulebase(p.rules));
    write_text_file(rc.output_dir / "rules.txt", format_rule_listing(p.rules, p.class_names));
    const auto& bf = report.folds[*best];
    write_text_file(rc.output_dir / "best_fold.json",
                    Json{{"fold", bf.fold},
                         {"test_accuracy", bf.test_accuracy},
                         {"train_accuracy", bf.train_accuracy},
                         {"rule_count", bf.rule_count}}
                            .dump(2) +
                        "\n");
    if (rc.write_trace)
        for (std::size_t i = 0; i < pipelines.size(); ++i)
            if (!pipelines[i].trace.empty())
                write_trace(rc.output_dir / ("trace_fold" + std::to_string(i) + ".csv"), pipelines[i].trace);

    out << summary_line(report) << "\n";
    err << "aefrc: wrote " << rc.output_dir.string() << "/{report.json,model.json,rulebase.json,rules.txt}\n";
    return 0;
}

struct PredictFlags {
    std::string model;
    std::string rules;
    std::string input;
    std::string output;
};

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, delim)) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

int cmd_predict(const PredictFlags& f, std::ostream& out, std::ostream& err) {
    const StoredModel model = parse_model(read_text_file(f.model));
    const RuleBase rb = parse_rulebase(read_text_file(f.rules));
    if (model.encoder.output_width() != rb.feature_count())
        throw DataError("model encodes " + std::to_string(model.encoder.output_width()) + " features but the rule base expects " +
                        std::to_string(rb.feature_count()));
    if (static_cast<std::size_t>(rb.class_count()) != model.class_names.size())
        throw DataError("rule base has " + std::to_string(rb.class_count()) + " classes, model names " +
                        std::to_string(model.class_names.size()));

    const std::string text = f.input == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {})
                                            : read_text_file(resolve_data_path(f.input));
    std::vector<std::string> lines;
    {
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line))
            if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
    }
    const std::size_t width = model.preproc.input_width();
    const char delim = !lines.empty() && lines.front().find(';') != std::string::npos &&
                               lines.front().find(',') == std::string::npos
                           ? ';'
                           : ',';
    std::size_t first = 0;
    if (!lines.empty()) {
        const auto fields = split_fields(lines.front(), delim);
        double v = 0.0;
        if (!fields.empty() && !parse_double(fields.front(), v)) first = 1;
    }

    Matrix raw(static_cast<Eigen::Index>(lines.size() - first), static_cast<Eigen::Index>(width));
    std::vector<std::string> truth;
    for (std::size_t i = first; i < lines.size(); ++i) {
        const auto fields = split_fields(lines[i], delim);
        const std::string where = f.input + ":" + std::to_string(i + 1);
        if (fields.size() != width && fields.size() != width + 1)
            throw DataError(where + ": expected " + std::to_string(width) + " feature columns (optionally plus a label), got " +
                            std::to_string(fields.size()));
        for (std::size_t c = 0; c < width; ++c) {
            double v = 0.0;
            if (!parse_double(fields[c], v))
                throw DataError(where + ":" + std::to_string(c + 1) + ": not a number: '" + fields[c] + "'");
            raw(static_cast<Eigen::Index>(i - first), static_cast<Eigen::Index>(c)) = v;
        }
        if (fields.size() == width + 1) truth.push_back(fields.back());
    }
    if (!truth.empty() && truth.size() != static_cast<std::size_t>(raw.rows()))
        throw DataError(f.input + ": some rows carry a label column and some do not");
    if (raw.rows() == 0) return 0;

    const TrainedPipeline p{model.preproc, model.encoder, rb, model.class_names, {}};
    const auto results = predict(p, raw);

    std::ostringstream os;
    os << "class";
    for (const auto& name : model.class_names) os << ",alpha_" << name;
    os << "\n" << std::setprecision(17);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& name = model.class_names[static_cast<std::size_t>(results[i].label - 1)];
        os << name;
        for (double s : results[i].class_scores) os << "," << s;
        os << "\n";
        if (!truth.empty() && truth[i] == name) ++correct;
    }
    if (f.output.empty())
        out << os.str();
    else
        write_text_file(f.output, os.str());
    if (!truth.empty())
        err << "aefrc: accuracy " << std::setprecision(6) << static_cast<double>(correct) / static_cast<double>(results.size())
            << " (" << correct << "/" << results.size() << ")\n";
    return 0;
}

int cmd_stats(const std::string& table, const std::string& reference, double alpha, std::optional<double> q,
              std::ostream& out) {
    const RankTable rt = load_rank_table(resolve_data_path(table));
    const std::string ref = reference.empty() ? rt.methods.back() : reference;
    if (std::find(rt.methods.begin(), rt.methods.end(), ref) == rt.methods.end())
        throw UsageError("unknown reference method '" + ref + "'");
    if (q && !(*q > 0.0)) throw UsageError("--q must be positive");
    out << format_stats_report(rt, ref, alpha, q);
    return 0;
}

int cmd_folds_export(const CommonFlags& c, const std::string& path, std::ostream& out) {
    const RunConfig rc = checked_config(c.load());
    const Dataset ds = load_dataset(rc);
    const FoldPlan plan = make_plan(ds, rc.cv);
    save_folds(plan, path);
    out << "wrote " << plan.k << " folds over " << ds.sample_count() << " samples to " << path << "\n";
    return 0;
}

int cmd_folds_import(const CommonFlags& c, const std::string& path, std::ostream& out) {
    const RunConfig rc = checked_config(c.load());
    const Dataset ds = load_dataset(rc);
    const FoldPlan plan = load_folds(resolve_data_path(path), ds.sample_count());
    out << "fold";
    for (const auto& name : ds.class_names) out << "," << name;
    out << ",total\n";
    for (int f = 0; f < plan.k; ++f) {
        const auto rows = plan.test_rows(f);
        std::vector<std::size_t> per(ds.class_names.size(), 0);
        for (auto r : rows) ++per[static_cast<std::size_t>(ds.labels[r] - 1)];
        out << f;
        for (auto n : per) out << "," << n;
        out << "," << rows.size() << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Autoencoder-based fuzzy rule classifier"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    RunFlags run;
    auto* run_cmd = app.add_subcommand("run", "cross-validate a pipeline (or sweep rho) and store the best fold's model");
    run.common.add(run_cmd);
    run_cmd->add_option("--strategy", run.strategy, "none|ft1|ft2|ft3|ft4");
    run_cmd->add_option("--arch", run.arch, "hidden layer sizes, e.g. --arch 5 3")->expected(1, -1);
    run_cmd->add_option("--rho", run.rho, "target mean activation");
    run_cmd->add_option("--rho-grid", run.rho_grid, "sweep these rho values")->expected(1, -1);
    run_cmd->add_flag("--sweep", run.sweep, "sweep rho over 0.1..0.9");
    run_cmd->add_option("--lambda", run.lambda, "weight decay");
    run_cmd->add_option("--beta", run.beta, "sparsity weight");
    run_cmd->add_flag("--no-denoise", run.no_denoise, "pretrain without input corruption");
    run_cmd->add_option("--max-evals", run.max_evals, "CMA-ES evaluation budget");
    run_cmd->add_option("--expert", run.expert, "expert knowledge JSON");
    run_cmd->add_option("--folds", run.folds, "fold assignment file (overrides k and seed)");
    run_cmd->add_option("-o,--out", run.out, "output directory");
    run_cmd->add_flag("--trace", run.trace, "write FT-II/FT-III search traces");
    run_cmd->add_option("-j,--jobs", run.jobs, "worker threads (0 = all cores)");

    PredictFlags pred;
    auto* pred_cmd = app.add_subcommand("predict", "classify a CSV with a stored model and rule base");
    pred_cmd->add_option("-m,--model", pred.model, "model.json")->required();
    pred_cmd->add_option("-r,--rules", pred.rules, "rulebase.json")->required();
    pred_cmd->add_option("-i,--input", pred.input, "CSV of raw features, optional trailing label ('-' = stdin)")->required();
    pred_cmd->add_option("-o,--output", pred.output, "write predictions here instead of stdout");

    std::string table, reference;
    double alpha = 0.05;
    std::optional<double> q_value;
    auto* stats_cmd = app.add_subcommand("stats", "rank-based comparison of methods over datasets");
    stats_cmd->add_option("table", table, "CSV: dataset,<method>,... with NA for missing results")->required();
    stats_cmd->add_option("--reference", reference, "method compared pairwise against the others (default: last)");
    stats_cmd->add_option("--alpha", alpha, "0.05 or 0.10");
    stats_cmd->add_option("--q", q_value, "critical value for the CD line instead of the table entry");

    auto* folds_cmd = app.add_subcommand("folds", "export or check fold assignments");
    folds_cmd->require_subcommand(1);
    CommonFlags exp_flags, imp_flags;
    std::string exp_path, imp_path;
    auto* exp_cmd = folds_cmd->add_subcommand("export", "write the stratified plan a run would use");
    exp_flags.add(exp_cmd);
    exp_cmd->add_option("file", exp_path, "output file")->required();
    auto* imp_cmd = folds_cmd->add_subcommand("import", "validate a fold file against a dataset");
    imp_flags.add(imp_cmd);
    imp_cmd->add_option("file", imp_path, "fold file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "aefrc: " << e.what() << "\n" << "run 'aefrc --help' for usage\n";
        return static_cast<int>(ExitCode::usage);
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run, out, err);
        if (pred_cmd->parsed()) return cmd_predict(pred, out, err);
        if (stats_cmd->parsed()) return cmd_stats(table, reference, alpha, q_value, out);
        if (exp_cmd->parsed()) return cmd_folds_export(exp_flags, exp_path, out);
        if (imp_cmd->parsed()) return cmd_folds_import(imp_flags, imp_path, out);
    } catch (const Error& e) {
        err << "aefrc: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        err << "aefrc: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    }
    return static_cast<int>(ExitCode::usage);
}

}  // namespace aefrc
