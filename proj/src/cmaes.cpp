#include "aefrc/errors.hpp"
#include "aefrc/optim.hpp"
#include "aefrc/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>

namespace aefrc {

void CmaesConfig::validate() const {
    if (population != 0 && population < 4) throw UsageError("CMA-ES population must be >= 4");
    if (!(sigma0 > 0.0)) throw UsageError("CMA-ES sigma0 must be > 0");
    if (max_evals < 1) throw UsageError("CMA-ES max_evals must be >= 1");
}

int CmaesConfig::resolved_population(std::size_t dimension) const {
    if (population > 0) return population;
    const double d = static_cast<double>(std::max<std::size_t>(dimension, 1));
    return 4 + static_cast<int>(std::floor(3.0 * std::log(d)));
}

CmaesResult cmaes(const FitnessFn& f, const Vector& x0, const CmaesConfig& cfg) {
    cfg.validate();
    const auto n = x0.size();
    if (n == 0) throw DataError("cmaes: empty search vector");
    const double dn = static_cast<double>(n);
    const int lambda = cfg.resolved_population(static_cast<std::size_t>(n));
    const int mu = lambda / 2;

    Vector weights(mu);
    for (int i = 0; i < mu; ++i) weights(i) = std::log(mu + 0.5) - std::log(i + 1.0);
    weights /= weights.sum();
    const double mueff = 1.0 / weights.squaredNorm();

    const double cc = (4.0 + mueff / dn) / (dn + 4.0 + 2.0 * mueff / dn);
    const double cs = (mueff + 2.0) / (dn + mueff + 5.0);
    const double c1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + mueff);
    const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((dn + 2.0) * (dn + 2.0) + mueff));
    const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (dn + 1.0)) - 1.0) + cs;
    const double chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));
    const int history_len = 10 + static_cast<int>(std::ceil(30.0 * dn / lambda));

    CmaesResult res;
    res.population = lambda;
    res.initial_fitness = f.fn(x0);
    if (!std::isfinite(res.initial_fitness)) throw NumericalError("cmaes: non-finite fitness at x0");
    res.best_x = x0;
    res.best_fitness = res.initial_fitness;

    Vector mean = x0;
    double sigma = cfg.sigma0;
    Matrix cov = Matrix::Identity(n, n);
    Matrix basis = Matrix::Identity(n, n);
    Vector scales = Vector::Ones(n);
    Vector path_c = Vector::Zero(n);
    Vector path_s = Vector::Zero(n);

    Rng rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::deque<double> best_history;
    int non_finite_streak = 0;

    Matrix z(n, lambda);
    Matrix y(n, lambda);
    Matrix candidates(n, lambda);
    std::vector<double> fitness(static_cast<std::size_t>(lambda));

    while (res.evaluations + lambda <= cfg.max_evals) {
        for (int k = 0; k < lambda; ++k)
            for (Eigen::Index i = 0; i < n; ++i) z(i, k) = normal(rng);
        y = basis * scales.asDiagonal() * z;
        candidates = (sigma * y).colwise() + mean;

#pragma omp parallel for schedule(dynamic) if (f.concurrent_safe)
        for (int k = 0; k < lambda; ++k) {
            const double v = f.fn(candidates.col(k));
            fitness[static_cast<std::size_t>(k)] = std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        }
        res.evaluations += lambda;
        ++res.generations;

        std::vector<int> order(static_cast<std::size_t>(lambda));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return fitness[static_cast<std::size_t>(a)] < fitness[static_cast<std::size_t>(b)];
        });

        const double gen_best = fitness[static_cast<std::size_t>(order.front())];
        const double gen_worst = fitness[static_cast<std::size_t>(order.back())];
        if (!std::isfinite(gen_best)) {
            if (++non_finite_streak >= 3) {
                res.aborted = true;
                break;
            }
            res.trace.push_back({res.generations, res.best_fitness, gen_best, sigma});
            if (cfg.on_generation) cfg.on_generation(res.trace.back(), res.best_x);
            continue;
        }
        non_finite_streak = 0;
        if (gen_best < res.best_fitness) {
            res.best_fitness = gen_best;
            res.best_x = candidates.col(order.front());
        }
        res.trace.push_back({res.generations, res.best_fitness, gen_best, sigma});
        if (cfg.on_generation) cfg.on_generation(res.trace.back(), res.best_x);

        // Recombination over the mu best.
        Vector y_w = Vector::Zero(n);
        for (int i = 0; i < mu; ++i) y_w += weights(i) * y.col(order[static_cast<std::size_t>(i)]);
        mean += sigma * y_w;

        const Vector inv_sqrt_y = basis * scales.cwiseInverse().asDiagonal() * basis.transpose() * y_w;
        path_s = (1.0 - cs) * path_s + std::sqrt(cs * (2.0 - cs) * mueff) * inv_sqrt_y;
        const double ps_norm = path_s.norm();
        const double ps_corr = std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * res.generations));
        const bool hsig = ps_norm / ps_corr / chi_n < 1.4 + 2.0 / (dn + 1.0);
        path_c = (1.0 - cc) * path_c + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * y_w;

        Matrix rank_mu = Matrix::Zero(n, n);
        for (int i = 0; i < mu; ++i) {
            const auto col = y.col(order[static_cast<std::size_t>(i)]);
            rank_mu.noalias() += weights(i) * col * col.transpose();
        }
        const double hsig_fix = hsig ? 0.0 : cc * (2.0 - cc);
        cov = (1.0 - c1 - cmu) * cov + c1 * (path_c * path_c.transpose() + hsig_fix * cov) + cmu * rank_mu;
        cov = 0.5 * (cov + cov.transpose());

        sigma *= std::exp((cs / damps) * (ps_norm / chi_n - 1.0));

        Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
        Vector evals = eig.eigenvalues().cwiseMax(1e-300);
        basis = eig.eigenvectors();
        scales = evals.cwiseSqrt();

        if (res.best_fitness <= cfg.target_fitness) break;

        best_history.push_back(res.best_fitness);
        if (static_cast<int>(best_history.size()) > history_len) best_history.pop_front();
        if (static_cast<int>(best_history.size()) == history_len) {
            const auto [lo, hi] = std::minmax_element(best_history.begin(), best_history.end());
            if (*hi - *lo < cfg.tol_fitness && gen_worst - gen_best < cfg.tol_fitness) break;
        }
        if (sigma * scales.maxCoeff() < 1e-12 * cfg.sigma0) break;
    }
    return res;
}

void write_trace(const std::filesystem::path& path, const std::vector<GenerationTrace>& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trace file '" + path.string() + "'");
    out.precision(17);
    out << "generation,best_fitness,generation_best,sigma\n";
    for (const auto& t : trace) out << t.generation << ',' << t.best_fitness << ',' << t.generation_best << ',' << t.sigma << '\n';
}

}  // namespace aefrc
