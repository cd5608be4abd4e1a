#include "aefrc/errors.hpp"
#include "aefrc/finetune.hpp"
#include "aefrc/random.hpp"
#include "aefrc/serialize.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace aefrc;

namespace {

struct Problem {
    Matrix x;
    std::vector<int> labels;
    int classes = 0;
};

/// Separable-ish blobs in [0,1]^n.
Problem blobs(std::uint64_t seed, std::size_t per_class, int classes, Eigen::Index n, double spread = 0.08) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.2, 0.8);
    std::normal_distribution<double> g(0.0, spread);
    Problem p;
    p.classes = classes;
    Matrix centers(classes, n);
    for (Eigen::Index c = 0; c < classes; ++c)
        for (Eigen::Index j = 0; j < n; ++j) centers(c, j) = u(rng);
    p.x.resize(static_cast<Eigen::Index>(per_class) * classes, n);
    for (Eigen::Index i = 0; i < p.x.rows(); ++i) {
        const auto c = i % classes;
        for (Eigen::Index j = 0; j < n; ++j) p.x(i, j) = std::clamp(centers(c, j) + g(rng), 0.0, 1.0);
        p.labels.push_back(static_cast<int>(c) + 1);
    }
    return p;
}

Network pretrained(const Problem& p, std::size_t hidden, std::uint64_t seed) {
    AEConfig ae;
    ae.rho = 0.3;
    OptimizerConfig opt;
    opt.max_iters = 100;
    return stack(p.x, {hidden}, ae, opt, seed);
}

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
}

}  // namespace

TEST_CASE("class_targets_median: odd, even, mean variant, order invariance") {
    Matrix h(5, 1);
    h << 0.1, 0.2, 0.9, 0.2, 0.4;
    const std::vector<int> labels{1, 1, 1, 2, 2};
    const ConvergencePoints c = class_targets_median(h, labels, 2);
    CHECK(c.c(0, 0) == 0.2);
    CHECK(c.c(1, 0) == doctest::Approx(0.3).epsilon(1e-15));
    const ConvergencePoints mean = class_targets_median(h, labels, 2, true);
    CHECK(mean.c(0, 0) == doctest::Approx(0.4));

    Matrix shuffled(5, 1);
    shuffled << 0.4, 0.9, 0.2, 0.1, 0.2;
    const ConvergencePoints again = class_targets_median(shuffled, {2, 1, 2, 1, 1}, 2);
    CHECK(again.c == c.c);
    CHECK_THROWS_AS(class_targets_median(h, {1, 1, 1, 1, 1}, 2), DataError);
}

TEST_CASE("ft4 cost and gradient match the term-by-term oracle and finite differences") {
    Rng rng(123);
    for (int trial = 0; trial < 30; ++trial) {
        const int classes = 1 + static_cast<int>(uniform_index(rng, 4));
        const auto n = static_cast<Eigen::Index>(1 + uniform_index(rng, 5));
        const auto m = static_cast<Eigen::Index>(classes + static_cast<int>(uniform_index(rng, 12)));
        const Matrix h = random_matrix(rng, m, n, 0.0, 1.0);
        std::vector<int> labels;
        for (Eigen::Index i = 0; i < m; ++i)
            labels.push_back(i < classes ? static_cast<int>(i) + 1 : 1 + static_cast<int>(uniform_index(rng, classes)));
        const Matrix c = random_matrix(rng, classes, n, -1.0, 2.0);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double beta = u(rng), zeta = u(rng);

        Matrix grad(classes, n);
        const double cost = ft4_cost_grad(h, labels, c, beta, zeta, grad);
        CHECK(cost == doctest::Approx(oracle::ft4_cost(h, labels, c, beta, zeta)).epsilon(1e-12));

        Vector x(c.size());
        for (Eigen::Index r = 0; r < classes; ++r)
            for (Eigen::Index k = 0; k < n; ++k) x(r * n + k) = c(r, k);
        const auto f = [&](const Vector& v) {
            Matrix cc(classes, n);
            for (Eigen::Index r = 0; r < classes; ++r)
                for (Eigen::Index k = 0; k < n; ++k) cc(r, k) = v(r * n + k);
            return oracle::ft4_cost(h, labels, cc, beta, zeta);
        };
        Vector analytic(c.size());
        for (Eigen::Index r = 0; r < classes; ++r)
            for (Eigen::Index k = 0; k < n; ++k) analytic(r * n + k) = grad(r, k);
        CHECK(oracle::max_relative_error(analytic, oracle::numeric_gradient(f, x)) < 1e-6);
    }
}

TEST_CASE("ft4_targets: beta, zeta -> 0 gives the class means") {
    const Problem p = blobs(3, 10, 3, 4);
    FtIvConfig cfg;
    cfg.beta_grid.clear();
    cfg.beta_sep = 1e-12;
    cfg.zeta = 0.0;
    const Ft4Targets t = ft4_targets(p.x, p.labels, 3, cfg, {});
    const ConvergencePoints means = class_targets_median(p.x, p.labels, 3, true);
    CHECK((t.points.c - means.c).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("ft4_targets: a single class shrinks the mean and ignores beta") {
    Problem p = blobs(4, 12, 1, 3);
    FtIvConfig cfg;
    const Ft4Targets t = ft4_targets(p.x, p.labels, 1, cfg, {});
    const Vector mean = p.x.colwise().mean();
    // Stationary point of 1/2 ||mean - C||^2 + zeta/2 ||C||^2 (plus the constant spread term).
    const Vector expected = mean / (1.0 + cfg.zeta);
    CHECK((t.points.c.row(0).transpose() - expected).cwiseAbs().maxCoeff() < 1e-6);
    CHECK_FALSE(t.cap_violated);
}

TEST_CASE("ft4_targets: separation never shrinks when zeta = 0") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const Problem p = blobs(seed, 10, 3, 3, 0.15);
        FtIvConfig cfg;
        cfg.zeta = 0.0;
        cfg.beta_grid = {0.2};
        const Ft4Targets t = ft4_targets(p.x, p.labels, 3, cfg, {});
        const ConvergencePoints means = class_targets_median(p.x, p.labels, 3, true);
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                CHECK((t.points.c.row(a) - t.points.c.row(b)).norm() >= (means.c.row(a) - means.c.row(b)).norm() - 1e-9);
    }
}

TEST_CASE("ft4_targets: grid rule picks the largest finite beta inside the cap") {
    const Problem p = blobs(9, 15, 2, 3);
    FtIvConfig cfg;
    const Ft4Targets t = ft4_targets(p.x, p.labels, 2, cfg, {});
    CHECK_FALSE(t.cap_violated);
    CHECK(t.points.c.cwiseAbs().maxCoeff() <= cfg.c_abs_cap);
    CHECK(std::isfinite(t.points.c.sum()));
    // Larger grid values either diverge or leave the cap.
    for (double b : cfg.beta_grid) {
        if (b <= t.beta) continue;
        FtIvConfig single = cfg;
        single.beta_grid = {b};
        const Ft4Targets s = ft4_targets(p.x, p.labels, 2, single, {});
        CHECK(s.cap_violated);
    }
}

TEST_CASE("FitnessReport: identity, bounds, plug-in values") {
    const FitnessReport perfect(1.0, 3, 3, 60, 3);
    CHECK(perfect.fitness() == -1.0 + 3.0 / 60.0 - 1.0);
    const FitnessReport missing(0.9, 4, 2, 40, 3);
    CHECK(missing.fitness() == -0.9 + 4.0 / 40.0 - 2.0 / 3.0);
    CHECK_THROWS(FitnessReport(1.2, 1, 1, 10, 2));
    CHECK_THROWS(FitnessReport(0.5, 1, 3, 10, 2));
    CHECK_THROWS(FitnessReport(0.5, 1, 1, 0, 2));
}

TEST_CASE("frc_fitness on a hand-built 6-sample toy") {
    // Identity encoder on one feature: codes equal the sigmoid of the input.
    Network net = Network::zeros({1, 1});
    net.weights[0](0, 0) = 1.0;
    Matrix x(6, 1);
    x << -3, -2.5, -2, 2, 2.5, 3;
    const std::vector<int> labels{1, 1, 1, 2, 2, 2};
    const FitnessReport r = frc_fitness(net, x, labels, 2);
    // Two tight, well-separated clusters: two rules, both classes, perfect accuracy.
    CHECK(r.t_acc() == 1.0);
    CHECK(r.g_d() == 2);
    CHECK(r.p_consequent() == 2);
    CHECK(r.fitness() == doctest::Approx(-1.0 + 2.0 / 6.0 - 1.0));
}

TEST_CASE("converge_to_targets: met targets stay put, cost never rises, targets approach") {
    const Problem p = blobs(11, 10, 2, 3);
    const Network net = pretrained(p, 2, 5);
    const Matrix h = encode(net, p.x);

    ConvergencePoints exact;
    exact.c = h.topRows(2);
    Problem one{p.x.topRows(2), {1, 2}, 2};
    const Network same = converge_to_targets(net, one.x, one.labels, exact, {});
    CHECK((same.flatten() - net.flatten()).cwiseAbs().maxCoeff() < 1e-8);

    const ConvergencePoints med = class_targets_median(h, p.labels, 2);
    const double before = target_cost(net, p.x, p.labels, med);
    const Network tuned = converge_to_targets(net, p.x, p.labels, med, {});
    CHECK(target_cost(tuned, p.x, p.labels, med) <= before);
    CHECK(tuned.layer_sizes == net.layer_sizes);
    CHECK_THROWS_AS(converge_to_targets(net, p.x, p.labels, ConvergencePoints{Matrix::Zero(2, 5)}, {}), DataError);
}

TEST_CASE("ft1 leaves the architecture alone and is deterministic") {
    const Problem p = blobs(12, 10, 3, 4);
    const Network net = pretrained(p, 3, 6);
    const Network a = ft1(net, p.x, p.labels, 3, {});
    const Network b = ft1(net, p.x, p.labels, 3, {});
    CHECK(a.layer_sizes == net.layer_sizes);
    CHECK(a.flatten() == b.flatten());
}

TEST_CASE("ft2: dimension, best-ever property, determinism") {
    const Problem p = blobs(13, 10, 3, 4, 0.12);
    const Network net = pretrained(p, 4, 7);
    CHECK(net.parameter_count() == 20);
    CmaesConfig cma;
    cma.sigma0 = 0.0;
    cma.max_evals = 300;
    cma.seed = 99;
    const FineTuneResult a = ft2(net, p.x, p.labels, 3, cma);
    REQUIRE(a.initial);
    REQUIRE(a.final);
    CHECK(a.final->fitness() <= a.initial->fitness());
    CHECK(a.initial->fitness() == frc_fitness(net, p.x, p.labels, 3).fitness());
    CHECK(a.final->fitness() == frc_fitness(a.net, p.x, p.labels, 3).fitness());
    CHECK(a.evaluations <= 300);
    CHECK_FALSE(a.trace.empty());
    const FineTuneResult b = ft2(net, p.x, p.labels, 3, cma);
    CHECK(a.net.flatten() == b.net.flatten());
    CHECK(ft2_default_sigma(net) > 0.0);
}

TEST_CASE("ft3: 12-dimensional search on (4,4) x 3 classes, best <= median candidate") {
    const Problem p = blobs(14, 10, 3, 4, 0.12);
    const Network net = pretrained(p, 4, 8);
    CmaesConfig cma;
    cma.sigma0 = 0.1;
    cma.max_evals = 60;
    cma.seed = 5;
    OptimizerConfig inner;
    inner.max_iters = 30;
    const FineTuneResult a = ft3(net, p.x, p.labels, 3, cma, inner);
    REQUIRE(a.points);
    CHECK(a.points->c.rows() == 3);
    CHECK(a.points->c.cols() == 4);
    const ConvergencePoints med = class_targets_median(encode(net, p.x), p.labels, 3);
    const Network at_median = converge_to_targets(net, p.x, p.labels, med, inner);
    REQUIRE(a.final);
    CHECK(a.final->fitness() <= frc_fitness(at_median, p.x, p.labels, 3).fitness());
    const FineTuneResult b = ft3(net, p.x, p.labels, 3, cma, inner);
    CHECK(a.net.flatten() == b.net.flatten());
}

TEST_CASE("ft4: deterministic, keeps layer sizes, reports beta") {
    const Problem p = blobs(15, 10, 2, 4);
    const Network net = pretrained(p, 3, 9);
    const FineTuneResult a = ft4(net, p.x, p.labels, 2, FtIvConfig{}, {});
    REQUIRE(a.beta_sep);
    CHECK(a.net.layer_sizes == net.layer_sizes);
    const FineTuneResult b = ft4(net, p.x, p.labels, 2, FtIvConfig{}, {});
    CHECK(a.net.flatten() == b.net.flatten());
    FtIvConfig bad;
    bad.zeta = -1;
    CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("trace file layout") {
    const auto path = std::filesystem::temp_directory_path() / "aefrc_tests" / "trace.csv";
    write_trace(path, {{1, 0.5, 3, 2, -0.9}, {2, 0.75, 2, 2, -1.2}});
    const std::string text = read_text_file(path);
    CHECK(text.rfind("step,t_acc,g_d,p_consequent,fitness\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
