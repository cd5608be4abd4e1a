#include "aefrc/finetune.hpp"

#include "aefrc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace aefrc {

namespace {

void check_inputs(const Matrix& x, const std::vector<int>& labels, int class_count) {
    if (labels.size() != static_cast<std::size_t>(x.rows()))
        throw DataError("label count " + std::to_string(labels.size()) + " does not match sample count " +
                        std::to_string(x.rows()));
    if (class_count < 1) throw DataError("class count must be >= 1");
    std::vector<bool> seen(static_cast<std::size_t>(class_count), false);
    for (int y : labels) {
        if (y < 1 || y > class_count) throw DataError("label " + std::to_string(y) + " out of range");
        seen[static_cast<std::size_t>(y - 1)] = true;
    }
    for (int p = 0; p < class_count; ++p)
        if (!seen[static_cast<std::size_t>(p)]) throw DataError("class " + std::to_string(p + 1) + " has no samples");
}

Matrix target_matrix(const std::vector<int>& labels, const ConvergencePoints& c) {
    Matrix t(static_cast<Eigen::Index>(labels.size()), c.c.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) t.row(static_cast<Eigen::Index>(i)) = c.c.row(labels[i] - 1);
    return t;
}

void check_points(const Network& net, const ConvergencePoints& c, const std::vector<int>& labels) {
    if (c.width() != net.output_width())
        throw DataError("convergence points have width " + std::to_string(c.width()) + ", last hidden layer has " +
                        std::to_string(net.output_width()));
    for (int y : labels)
        if (y < 1 || y > c.class_count()) throw DataError("label " + std::to_string(y) + " has no convergence point");
}

FineTuneTrace trace_row(int step, const FitnessReport& r) {
    return {step, r.t_acc(), r.g_d(), r.p_consequent(), r.fitness()};
}

Matrix points_from_vector(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), rows, cols);
}

Vector points_to_vector(const Matrix& c) {
    Vector v(c.size());
    Eigen::Index pos = 0;
    for (Eigen::Index p = 0; p < c.rows(); ++p)
        for (Eigen::Index k = 0; k < c.cols(); ++k) v(pos++) = c(p, k);
    return v;
}

}  // namespace

ConvergencePoints class_targets_median(const Matrix& h, const std::vector<int>& labels, int class_count, bool use_mean) {
    check_inputs(h, labels, class_count);
    ConvergencePoints out;
    out.c.resize(class_count, h.cols());
    std::vector<double> values;
    for (int p = 0; p < class_count; ++p) {
        for (Eigen::Index k = 0; k < h.cols(); ++k) {
            values.clear();
            for (std::size_t i = 0; i < labels.size(); ++i)
                if (labels[i] == p + 1) values.push_back(h(static_cast<Eigen::Index>(i), k));
            std::sort(values.begin(), values.end());
            double v;
            if (use_mean) {
                v = 0.0;
                for (double x : values) v += x;
                v /= static_cast<double>(values.size());
            } else {
                const std::size_t mid = values.size() / 2;
                v = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
            }
            out.c(p, k) = v;
        }
    }
    return out;
}

double target_cost(const Network& net, const Matrix& xp, const std::vector<int>& labels, const ConvergencePoints& c) {
    check_points(net, c, labels);
    return network_cost_grad(net, xp, target_matrix(labels, c), 0.0, std::nullopt).cost;
}

Network converge_to_targets(const Network& net, const Matrix& xp, const std::vector<int>& labels,
                            const ConvergencePoints& c, const OptimizerConfig& opt) {
    check_points(net, c, labels);
    if (labels.size() != static_cast<std::size_t>(xp.rows())) throw DataError("label count does not match sample count");
    const Matrix targets = target_matrix(labels, c);
    Network scratch = net;
    const CostGradFn fn = [&](const Vector& params, Vector& grad) {
        scratch.unflatten(params);
        const auto cg = network_cost_grad(scratch, xp, targets, 0.0, std::nullopt);
        grad = cg.grad.flatten();
        return cg.cost;
    };
    const auto res = minimize(fn, net.flatten(), opt);
    Network out = net;
    out.unflatten(res.x);
    return out;
}

Network ft1(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
            const OptimizerConfig& opt, bool use_mean) {
    const auto points = class_targets_median(encode(net, xp), labels, class_count, use_mean);
    return converge_to_targets(net, xp, labels, points, opt);
}

FitnessReport::FitnessReport(double t_acc, std::size_t g_d, int p_consequent, std::size_t m, int class_count)
    : t_acc_(t_acc), g_d_(g_d), p_consequent_(p_consequent) {
    if (!(t_acc >= 0.0 && t_acc <= 1.0)) throw DataError("fitness report: training accuracy outside [0,1]");
    if (p_consequent < 0 || p_consequent > class_count) throw DataError("fitness report: consequent count exceeds P");
    if (m == 0 || class_count < 1) throw DataError("fitness report: empty sample or class count");
    fitness_ = -t_acc + static_cast<double>(g_d) / static_cast<double>(m) -
               static_cast<double>(p_consequent) / static_cast<double>(class_count);
}

FitnessReport frc_fitness(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
                          FrcOptions options) {
    const Matrix codes = encode(net, xp);
    const auto bank = fit_mf_bank(codes, labels, class_count);
    const auto rb = generate_rules(codes, labels, bank, options);
    const double acc = accuracy(classify_all(rb, codes), labels);
    std::set<int> consequents;
    for (const auto& r : rb.rules) consequents.insert(r.consequent);
    return FitnessReport(acc, rule_count(rb), static_cast<int>(consequents.size()), labels.size(), class_count);
}

double ft2_default_sigma(const Network& net) {
    const Vector p = net.flatten();
    const double rms = p.size() ? std::sqrt(p.squaredNorm() / static_cast<double>(p.size())) : 0.0;
    return rms > 0.0 ? 0.1 * rms : 0.1;
}

FineTuneResult ft2(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
                   CmaesConfig cma, FrcOptions options) {
    check_inputs(xp, labels, class_count);
    if (!(cma.sigma0 > 0.0)) cma.sigma0 = ft2_default_sigma(net);

    FineTuneResult out;
    out.initial = frc_fitness(net, xp, labels, class_count, options);
    out.trace.push_back(trace_row(0, *out.initial));

    const FitnessFn fitness{[&](const Vector& params) {
                                Network candidate = net;
                                candidate.unflatten(params);
                                return frc_fitness(candidate, xp, labels, class_count, options).fitness();
                            },
                            true};
    double last_best = out.initial->fitness();
    FitnessReport best_report = *out.initial;
    cma.on_generation = [&](const GenerationTrace& g, const Vector& best_x) {
        if (g.best_fitness < last_best) {
            Network candidate = net;
            candidate.unflatten(best_x);
            best_report = frc_fitness(candidate, xp, labels, class_count, options);
            last_best = g.best_fitness;
        }
        out.trace.push_back(trace_row(g.generation, best_report));
    };

    const auto res = cmaes(fitness, net.flatten(), cma);
    out.evaluations = res.evaluations;
    if (res.aborted) {
        out.aborted = true;
        out.warnings.push_back("CMA-ES aborted after repeated non-finite fitness; keeping the pretrained encoder");
        out.net = net;
        out.final = out.initial;
        return out;
    }
    out.net = net;
    out.net.unflatten(res.best_x);
    out.final = frc_fitness(out.net, xp, labels, class_count, options);
    return out;
}

FineTuneResult ft3(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
                   const CmaesConfig& cma, const OptimizerConfig& inner, FrcOptions options) {
    check_inputs(xp, labels, class_count);
    const auto medians = class_targets_median(encode(net, xp), labels, class_count);
    const Eigen::Index rows = medians.c.rows();
    const Eigen::Index cols = medians.c.cols();

    auto retrain = [&](const Vector& v) {
        return converge_to_targets(net, xp, labels, ConvergencePoints{points_from_vector(v, rows, cols)}, inner);
    };

    FineTuneResult out;
    out.initial = frc_fitness(net, xp, labels, class_count, options);
    out.trace.push_back(trace_row(0, *out.initial));

    const FitnessFn fitness{[&](const Vector& v) {
                                try {
                                    return frc_fitness(retrain(v), xp, labels, class_count, options).fitness();
                                } catch (const NumericalError&) {
                                    return std::numeric_limits<double>::infinity();
                                }
                            },
                            true};
    CmaesConfig cfg = cma;
    double last_best = std::numeric_limits<double>::infinity();
    std::optional<FitnessReport> best_report;
    cfg.on_generation = [&](const GenerationTrace& g, const Vector& best_x) {
        if (g.best_fitness < last_best) {
            best_report = frc_fitness(retrain(best_x), xp, labels, class_count, options);
            last_best = g.best_fitness;
        }
        if (best_report) out.trace.push_back(trace_row(g.generation, *best_report));
    };

    const auto res = cmaes(fitness, points_to_vector(medians.c), cfg);
    out.evaluations = res.evaluations;
    if (res.aborted) {
        out.aborted = true;
        out.warnings.push_back("CMA-ES aborted after repeated non-finite fitness; keeping the pretrained encoder");
        out.net = net;
        out.final = out.initial;
        return out;
    }
    out.points = ConvergencePoints{points_from_vector(res.best_x, rows, cols)};
    out.net = retrain(res.best_x);
    out.final = frc_fitness(out.net, xp, labels, class_count, options);
    return out;
}

void FtIvConfig::validate() const {
    if (!(zeta >= 0.0)) throw UsageError("ft4 zeta must be >= 0");
    if (beta_grid.empty() && !(beta_sep > 0.0)) throw UsageError("ft4 beta must be > 0");
    for (double b : beta_grid)
        if (!(b > 0.0)) throw UsageError("ft4 beta grid values must be > 0");
    if (!(c_abs_cap > 0.0)) throw UsageError("ft4 convergence-point cap must be > 0");
}

double ft4_cost_grad(const Matrix& h, const std::vector<int>& labels, const Matrix& c, double beta, double zeta,
                     Matrix& grad) {
    const auto classes = c.rows();
    const double P = static_cast<double>(classes);
    if (h.cols() != c.cols()) throw DataError("ft4: hidden width does not match convergence point width");
    std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
    for (int y : labels) {
        if (y < 1 || y > classes) throw DataError("ft4: label out of range");
        counts[static_cast<std::size_t>(y - 1)] += 1.0;
    }

    grad = Matrix::Zero(c.rows(), c.cols());
    double cost = 0.0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        const auto p = labels[static_cast<std::size_t>(i)] - 1;
        const double inv = 1.0 / counts[static_cast<std::size_t>(p)];
        const Eigen::RowVectorXd d = c.row(p) - h.row(i);
        cost += 0.5 * inv * d.squaredNorm();
        grad.row(p) += inv * d;
    }
    if (classes > 1) {
        const double scale = beta / (P - 1.0);
        for (Eigen::Index j = 0; j < classes; ++j)
            for (Eigen::Index l = 0; l < classes; ++l) {
                if (l == j) continue;
                const Eigen::RowVectorXd d = c.row(j) - c.row(l);
                if (l > j) cost -= 0.5 * scale * d.squaredNorm();
                grad.row(j) -= scale * d;
            }
    }
    cost += zeta / (2.0 * P) * c.squaredNorm();
    grad += (zeta / P) * c;
    return cost;
}

Ft4Targets ft4_targets(const Matrix& h, const std::vector<int>& labels, int class_count, const FtIvConfig& cfg,
                       const OptimizerConfig& opt) {
    cfg.validate();
    const auto start = class_targets_median(h, labels, class_count, true);
    const Eigen::Index rows = start.c.rows();
    const Eigen::Index cols = start.c.cols();

    auto solve = [&](double beta) {
        const CostGradFn fn = [&](const Vector& v, Vector& g) {
            Matrix grad;
            const double cost = ft4_cost_grad(h, labels, points_from_vector(v, rows, cols), beta, cfg.zeta, grad);
            g = points_to_vector(grad);
            return cost;
        };
        return points_from_vector(minimize(fn, points_to_vector(start.c), opt).x, rows, cols);
    };

    Ft4Targets out;
    if (cfg.beta_grid.empty()) {
        out.beta = cfg.beta_sep;
        out.points.c = solve(out.beta);
        out.cap_violated = !(out.points.c.cwiseAbs().maxCoeff() <= cfg.c_abs_cap);
        return out;
    }
    std::vector<double> grid = cfg.beta_grid;
    std::sort(grid.begin(), grid.end());
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
        Matrix c = solve(*it);
        if (c.allFinite() && c.cwiseAbs().maxCoeff() <= cfg.c_abs_cap) {
            out.beta = *it;
            out.points.c = std::move(c);
            return out;
        }
    }
    out.beta = grid.front();
    out.points.c = solve(out.beta);
    out.cap_violated = true;
    return out;
}

FineTuneResult ft4(const Network& net, const Matrix& xp, const std::vector<int>& labels, int class_count,
                   const FtIvConfig& cfg, const OptimizerConfig& opt) {
    const auto targets = ft4_targets(encode(net, xp), labels, class_count, cfg, opt);
    FineTuneResult out;
    if (targets.cap_violated)
        out.warnings.push_back("no beta in the grid kept the convergence points within the cap; using beta = " +
                               std::to_string(targets.beta));
    out.points = targets.points;
    out.beta_sep = targets.beta;
    out.net = converge_to_targets(net, xp, labels, targets.points, opt);
    return out;
}

void write_trace(const std::filesystem::path& path, const std::vector<FineTuneTrace>& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trace file '" + path.string() + "'");
    out.precision(17);
    out << "step,t_acc,g_d,p_consequent,fitness\n";
    for (const auto& t : trace)
        out << t.step << ',' << t.t_acc << ',' << t.g_d << ',' << t.p_consequent << ',' << t.fitness << '\n';
}

}  // namespace aefrc
