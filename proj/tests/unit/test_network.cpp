#include "aefrc/errors.hpp"
#include "aefrc/kernels.hpp"
#include "aefrc/network.hpp"
#include "aefrc/optim.hpp"
#include "aefrc/random.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace aefrc;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

Network random_net(std::vector<std::size_t> sizes, Rng& rng) {
    Network net = Network::random(sizes, rng());
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto& b : net.biases)
        for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = u(rng);
    return net;
}

}  // namespace

TEST_CASE("forward: zero network gives 0.5 everywhere") {
    const Network net = Network::zeros({3, 4, 2});
    Rng rng(1);
    const Matrix x = random_matrix(5, 3, rng, -3, 3);
    const auto acts = forward(net, x);
    REQUIRE(acts.size() == 3);
    CHECK(acts[0] == x);
    CHECK((acts[1].array() == 0.5).all());
    CHECK((acts[2].array() == 0.5).all());
}

TEST_CASE("forward: sigmoid(ln 3) = 3/4") {
    Network net = Network::zeros({1, 1});
    net.biases[0](0) = std::log(3.0);
    const auto out = encode(net, Matrix::Constant(1, 1, 2.0));
    CHECK(out(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("forward: shape mismatch is a data error") {
    const Network net = Network::zeros({3, 2});
    CHECK_THROWS_AS(forward(net, Matrix::Zero(2, 4)), DataError);
}

TEST_CASE("ae_cost_grad matches central differences") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + trial % 4;
        const std::size_t h = 1 + trial % 3;
        Network ae = random_net({n, h, n}, rng);
        const Matrix x = random_matrix(4 + trial, static_cast<Eigen::Index>(n), rng);
        const Matrix o = random_matrix(x.rows(), x.cols(), rng);
        AEConfig cfg;
        cfg.rho = 0.05 + 0.09 * trial;
        cfg.beta_sparse = 0.5 * trial;
        cfg.lambda = 1e-3 * trial;
        const auto cg = ae_cost_grad(ae, x, o, cfg);
        CHECK(cg.cost == doctest::Approx(oracle::network_cost(ae, x, o, cfg.lambda, true, cfg.rho, cfg.beta_sparse)).epsilon(1e-12));
        Network probe = ae;
        const auto numeric = oracle::numeric_gradient(
            [&](const Vector& p) {
                probe.unflatten(p);
                return oracle::network_cost(probe, x, o, cfg.lambda, true, cfg.rho, cfg.beta_sparse);
            },
            ae.flatten());
        CHECK(oracle::max_relative_error(cg.grad.flatten(), numeric) < 1e-6);
    }
}

TEST_CASE("network_cost_grad on a deep net matches central differences") {
    Rng rng(77);
    Network net = random_net({4, 3, 3, 2}, rng);
    const Matrix x = random_matrix(7, 4, rng);
    const Matrix t = random_matrix(7, 2, rng);
    for (bool sparse : {false, true}) {
        const auto sp = sparse ? std::optional<SparsityTerm>(SparsityTerm{0.2, 1.5}) : std::nullopt;
        const auto cg = network_cost_grad(net, x, t, 1e-3, sp);
        Network probe = net;
        const auto numeric = oracle::numeric_gradient(
            [&](const Vector& p) {
                probe.unflatten(p);
                return oracle::network_cost(probe, x, t, 1e-3, sparse, 0.2, 1.5);
            },
            net.flatten());
        CHECK(oracle::max_relative_error(cg.grad.flatten(), numeric) < 1e-6);
    }
}

TEST_CASE("ae cost: exact targets and no penalties give zero cost and zero gradient") {
    Rng rng(5);
    const Network ae = random_net({3, 2, 3}, rng);
    const Matrix x = random_matrix(6, 3, rng);
    const Matrix o = forward(ae, x).back();
    AEConfig cfg;
    cfg.beta_sparse = 0.0;
    cfg.lambda = 0.0;
    const auto cg = ae_cost_grad(ae, x, o, cfg);
    CHECK(cg.cost == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(cg.grad.flatten().lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("serial and parallel kernels agree") {
    Rng rng(9);
    for (Eigen::Index m : {1, 17, 256, 257, 700}) {
        Network net = random_net({5, 4, 3, 5}, rng);
        const Matrix x = random_matrix(m, 5, rng);
        const Matrix t = random_matrix(m, 5, rng);
        const auto a = kernels::serial::cost_grad(net, x, t, 1e-4, SparsityTerm{0.1, 3.0});
        const auto b = kernels::parallel::cost_grad(net, x, t, 1e-4, SparsityTerm{0.1, 3.0});
        CHECK(a.cost == doctest::Approx(b.cost).epsilon(1e-12));
        CHECK((a.grad.flatten() - b.grad.flatten()).lpNorm<Eigen::Infinity>() < 1e-12);
        const auto fa = kernels::serial::forward(net, x);
        const auto fb = kernels::parallel::forward(net, x);
        CHECK((fa.back() - fb.back()).lpNorm<Eigen::Infinity>() < 1e-14);
    }
}

TEST_CASE("kl divergence is non-negative and zero only at rho") {
    for (int a = 1; a < 20; ++a) {
        const double rho = a / 20.0;
        CHECK(kl_divergence(rho, rho) == doctest::Approx(0.0).epsilon(1e-15));
        for (int b = 0; b <= 100; ++b) {
            const double r = b / 100.0;
            const double kl = kl_divergence(rho, r);
            CHECK(std::isfinite(kl));
            CHECK(kl >= 0.0);
            if (std::abs(r - rho) > 1e-9) CHECK(kl > 0.0);
        }
    }
}

TEST_CASE("activations lie strictly inside (0,1)") {
    Rng rng(11);
    const Network net = random_net({6, 5, 4}, rng);
    const auto acts = forward(net, random_matrix(50, 6, rng, -10, 10));
    for (std::size_t l = 1; l < acts.size(); ++l) {
        CHECK(acts[l].minCoeff() > 0.0);
        CHECK(acts[l].maxCoeff() < 1.0);
    }
}

TEST_CASE("flatten and unflatten are inverse") {
    Rng rng(3);
    Network net = random_net({4, 3, 2}, rng);
    const Vector p = net.flatten();
    CHECK(static_cast<std::size_t>(p.size()) == net.parameter_count());
    CHECK(p.size() == 4 * 3 + 3 + 3 * 2 + 2);
    Network other = Network::zeros(net.layer_sizes);
    other.unflatten(p);
    CHECK(other.flatten() == p);
    CHECK(other.weights[0](0, 1) == p(1));
    CHECK_THROWS_AS(other.unflatten(Vector::Zero(3)), DataError);
}

TEST_CASE("corrupt: noise level follows the SNR") {
    Matrix x = Matrix::Ones(100000, 1);
    const Matrix y = corrupt(x, 10.0, 42);
    const double var = (y - x).array().square().mean();
    CHECK(var == doctest::Approx(0.1).epsilon(0.1));
    CHECK((corrupt(x, 300.0, 1) - x).lpNorm<Eigen::Infinity>() < 1e-10);
    const Matrix z = Matrix::Zero(10, 3);
    CHECK(corrupt(z, 10.0, 1) == z);
    CHECK(corrupt(x.topRows(50), 10.0, 5) == corrupt(x.topRows(50), 10.0, 5));
}

TEST_CASE("train_ae: descent, compression, sparsity") {
    OptimizerConfig opt;
    AEConfig cfg;
    cfg.denoise_snr_db.reset();

    SUBCASE("one-hot compression through two units") {
        cfg.beta_sparse = 0.0;
        cfg.lambda = 0.0;
        const Matrix x = Matrix::Identity(4, 4);
        const Network ae = train_ae(x, 2, cfg, opt, 3);
        const double mse = (forward(ae, x).back() - x).array().square().mean();
        CHECK(mse < 0.05);
    }
    SUBCASE("sparsity pulls mean activation toward rho") {
        Rng rng(8);
        const Matrix x = random_matrix(40, 6, rng);
        cfg.rho = 0.1;
        cfg.beta_sparse = 3.0;
        Network init = Network::random({6, 4, 6}, derive_seed(17, {1}));
        const double before = ae_cost_grad(init, x, x, cfg).cost;
        const Network ae = train_ae(x, 4, cfg, opt, 17);
        CHECK(ae_cost_grad(ae, x, x, cfg).cost <= before);
        const double mean_act = forward(ae, x)[1].mean();
        CHECK(mean_act >= 0.05);
        CHECK(mean_act <= 0.3);
    }
}

TEST_CASE("stack builds the encoder and is deterministic") {
    Rng rng(4);
    const Matrix x = random_matrix(30, 9, rng);
    OptimizerConfig opt;
    opt.max_iters = 40;
    AEConfig cfg;
    const Network a = stack(x, {5, 3}, cfg, opt, 99);
    CHECK(a.layer_sizes == std::vector<std::size_t>{9, 5, 3});
    const Network b = stack(x, {5, 3}, cfg, opt, 99);
    CHECK(a.flatten() == b.flatten());
    CHECK(stack(x.topRows(1), {4}, cfg, opt, 1).layer_sizes == std::vector<std::size_t>{9, 4});
    const Matrix codes = encode(stack(x.topRows(1), {4}, cfg, opt, 1), x.topRows(1));
    CHECK(codes.minCoeff() > 0.0);
    CHECK(codes.maxCoeff() < 1.0);
    CHECK_THROWS_AS(stack(x, {}, cfg, opt, 1), DataError);
}
