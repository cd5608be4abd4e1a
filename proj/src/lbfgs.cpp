#include "aefrc/errors.hpp"
#include "aefrc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <optional>

namespace aefrc {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;
constexpr int kMaxLineSearchEvals = 30;

struct Probe {
    double step = 0.0;
    double cost = 0.0;
    double slope = 0.0;  // directional derivative along the search direction
    Vector x;
    Vector grad;
};

class LineSearch {
public:
    LineSearch(const CostGradFn& f, const Vector& x, double cost, const Vector& grad, const Vector& dir)
        : f_(f), x_(x), dir_(dir), cost0_(cost), slope0_(grad.dot(dir)) {}

    int evaluations() const { return evals_; }

    /// Strong-Wolfe step; falls back to the best sufficient-decrease point seen.
    std::optional<Probe> run(double initial_step) {
        Probe prev{0.0, cost0_, slope0_, x_, {}};
        double step = initial_step;
        for (int i = 0; i < kMaxLineSearchEvals; ++i) {
            Probe cur = probe(step);
            if (!std::isfinite(cur.cost)) {
                step = 0.5 * (prev.step + step);
                continue;
            }
            note_armijo(cur);
            if (cur.cost > cost0_ + kArmijo * cur.step * slope0_ || (i > 0 && cur.cost >= prev.cost))
                return zoom(prev, cur);
            if (std::abs(cur.slope) <= -kCurvature * slope0_) return cur;
            if (cur.slope >= 0.0) return zoom(cur, prev);
            prev = std::move(cur);
            step = prev.step * 2.0;
        }
        return fallback_;
    }

private:
    Probe probe(double step) {
        ++evals_;
        Probe p;
        p.step = step;
        p.x = x_ + step * dir_;
        p.grad.resize(x_.size());
        p.cost = f_(p.x, p.grad);
        if (!std::isfinite(p.cost) || !p.grad.allFinite()) {
            p.cost = std::numeric_limits<double>::infinity();
            return p;
        }
        p.slope = p.grad.dot(dir_);
        return p;
    }

    void note_armijo(const Probe& p) {
        if (p.cost <= cost0_ + kArmijo * p.step * slope0_ && p.cost < cost0_ &&
            (!fallback_ || p.cost < fallback_->cost))
            fallback_ = p;
    }

    static double cubic_min(const Probe& a, const Probe& b) {
        const double d1 = a.slope + b.slope - 3.0 * (a.cost - b.cost) / (a.step - b.step);
        const double disc = d1 * d1 - a.slope * b.slope;
        if (disc < 0.0) return 0.5 * (a.step + b.step);
        const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
        return b.step - (b.step - a.step) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    }

    std::optional<Probe> zoom(Probe lo, Probe hi) {
        while (evals_ < kMaxLineSearchEvals) {
            const double left = std::min(lo.step, hi.step);
            const double right = std::max(lo.step, hi.step);
            const double width = right - left;
            if (width < 1e-14 * std::max(1.0, right)) break;
            double step = std::isfinite(hi.cost) ? cubic_min(lo, hi) : 0.5 * (lo.step + hi.step);
            if (!std::isfinite(step) || step < left + 0.1 * width || step > right - 0.1 * width)
                step = 0.5 * (left + right);
            Probe cur = probe(step);
            if (!std::isfinite(cur.cost)) {
                hi = std::move(cur);
                continue;
            }
            note_armijo(cur);
            if (cur.cost > cost0_ + kArmijo * cur.step * slope0_ || cur.cost >= lo.cost) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.slope) <= -kCurvature * slope0_) return cur;
                if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        return fallback_;
    }

    const CostGradFn& f_;
    const Vector& x_;
    const Vector& dir_;
    double cost0_;
    double slope0_;
    int evals_ = 0;
    std::optional<Probe> fallback_;
};

struct CurvaturePair {
    Vector s;
    Vector y;
    double rho;
};

Vector two_loop(const std::deque<CurvaturePair>& pairs, const Vector& grad) {
    Vector q = -grad;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
        alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
        q -= alpha[i] * pairs[i].y;
    }
    const auto& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double beta = pairs[i].rho * pairs[i].y.dot(q);
        q += (alpha[i] - beta) * pairs[i].s;
    }
    return q;
}

}  // namespace

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::gradient_tolerance: return "gradient_tolerance";
        case StopReason::cost_tolerance: return "cost_tolerance";
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::line_search_failure: return "line_search_failure";
    }
    return "unknown";
}

void OptimizerConfig::validate() const {
    if (max_iters < 1) throw UsageError("optimizer max_iters must be >= 1");
    if (!(tol > 0.0)) throw UsageError("optimizer tol must be > 0");
    if (history < 1) throw UsageError("optimizer history must be >= 1");
}

MinimizeResult minimize(const CostGradFn& f, Vector x0, const OptimizerConfig& cfg) {
    cfg.validate();
    MinimizeResult res;
    res.x = std::move(x0);
    Vector grad(res.x.size());
    res.cost = f(res.x, grad);
    res.evaluations = 1;
    if (!std::isfinite(res.cost) || !grad.allFinite()) throw NumericalError("minimize: non-finite cost or gradient at x0");
    res.trace.push_back({0, res.cost, 0.0});

    if (grad.size() == 0 || grad.lpNorm<Eigen::Infinity>() < cfg.tol) {
        res.reason = StopReason::gradient_tolerance;
        return res;
    }

    std::deque<CurvaturePair> pairs;
    res.reason = StopReason::max_iterations;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        Vector dir = pairs.empty() ? Vector(-grad) : two_loop(pairs, grad);
        if (grad.dot(dir) >= 0.0) {
            pairs.clear();
            dir = -grad;
        }
        const double initial_step = pairs.empty() ? std::min(1.0, 1.0 / grad.lpNorm<1>()) : 1.0;

        LineSearch ls(f, res.x, res.cost, grad, dir);
        auto accepted = ls.run(initial_step);
        res.evaluations += ls.evaluations();
        if (!accepted) {
            res.reason = StopReason::line_search_failure;
            break;
        }

        Vector s = accepted->x - res.x;
        Vector y = accepted->grad - grad;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            pairs.push_back({s, y, 1.0 / sy});
            if (static_cast<int>(pairs.size()) > cfg.history) pairs.pop_front();
        }

        const double previous = res.cost;
        res.x = std::move(accepted->x);
        res.cost = accepted->cost;
        grad = std::move(accepted->grad);
        res.iterations = iter;
        res.trace.push_back({iter, res.cost, s.norm()});

        if (grad.lpNorm<Eigen::Infinity>() < cfg.tol) {
            res.reason = StopReason::gradient_tolerance;
            break;
        }
        const double scale = std::max({std::abs(previous), std::abs(res.cost), 1e-300});
        if (std::abs(previous - res.cost) / scale < cfg.tol && std::abs(previous - res.cost) < cfg.tol) {
            res.reason = StopReason::cost_tolerance;
            break;
        }
    }
    return res;
}

void write_trace(const std::filesystem::path& path, const std::vector<IterationTrace>& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trace file '" + path.string() + "'");
    out.precision(17);
    out << "iteration,cost,step_norm\n";
    for (const auto& t : trace) out << t.iteration << ',' << t.cost << ',' << t.step_norm << '\n';
}

}  // namespace aefrc
