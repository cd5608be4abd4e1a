#include "aefrc/errors.hpp"
#include "aefrc/random.hpp"
#include "aefrc/serialize.hpp"

#include <doctest.h>

using namespace aefrc;

namespace {

RuleBase sample_rulebase() {
    Rng rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix x(25, 3);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = u(rng) / 3.0 + static_cast<double>(i % 3) / 3.0;
        labels.push_back(static_cast<int>(i % 3) + 1);
    }
    return generate_rules(x, labels, fit_mf_bank(x, labels, 3));
}

}  // namespace

TEST_CASE("network JSON round trip is bit exact") {
    Network net = Network::random({13, 5, 3}, 42);
    net.biases[0](2) = 0.1 + 0.2;
    net.weights[1](0, 0) = -1e-310;
    const Network back = network_from_json(Json::parse(to_json(net).dump()));
    CHECK(back.layer_sizes == net.layer_sizes);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        CHECK(back.weights[l] == net.weights[l]);
        CHECK(back.biases[l] == net.biases[l]);
    }
}

TEST_CASE("preprocessing spec round trip keeps every function type") {
    PreprocSpec spec;
    spec.features = {{GaussianMF{5.429, 0.706}, GaussianMF{6.347, 0.882}}, {RampMF{2.0, 4.4}}, {ConstantMF{0.5}}};
    spec.feature_names = {"a", "b", "c"};
    const PreprocSpec back = preproc_from_json(Json::parse(to_json(spec).dump()));
    CHECK(back.feature_names == spec.feature_names);
    REQUIRE(back.output_width() == 4);
    CHECK(std::get<GaussianMF>(back.features[0][1]).sigma == 0.882);
    CHECK(std::get<RampMF>(back.features[1][0]).hi == 4.4);
    CHECK(std::holds_alternative<ConstantMF>(back.features[2][0]));
}

TEST_CASE("rule base round trip reproduces every rule and decision") {
    const RuleBase rb = sample_rulebase();
    const RuleBase back = parse_rulebase(dump_rulebase(rb));
    REQUIRE(back.rules.size() == rb.rules.size());
    for (std::size_t h = 0; h < rb.rules.size(); ++h) {
        CHECK(back.rules[h].antecedent == rb.rules[h].antecedent);
        CHECK(back.rules[h].consequent == rb.rules[h].consequent);
        CHECK(back.rules[h].certainty == rb.rules[h].certainty);
        CHECK(back.rules[h].class_strengths == rb.rules[h].class_strengths);
    }
    for (std::size_t j = 0; j < rb.bank.mfs.size(); ++j)
        for (std::size_t p = 0; p < rb.bank.mfs[j].size(); ++p) {
            CHECK(back.bank.mfs[j][p].mean == rb.bank.mfs[j][p].mean);
            CHECK(back.bank.mfs[j][p].sigma == rb.bank.mfs[j][p].sigma);
        }
    CHECK(back.options.tnorm == rb.options.tnorm);
    Matrix probe = Matrix::Random(50, 3);
    CHECK(classify_all(back, probe) == classify_all(rb, probe));
}

TEST_CASE("model document round trip and consistency checks") {
    StoredModel m;
    m.preproc.features = {{RampMF{0, 1}}, {RampMF{0, 2}}};
    m.preproc.feature_names = {"x", "y"};
    m.encoder = Network::random({2, 3}, 1);
    m.class_names = {"a", "b"};
    const StoredModel back = parse_model(dump_model(m));
    CHECK(back.class_names == m.class_names);
    CHECK(back.encoder.weights[0] == m.encoder.weights[0]);

    Json doc = Json::parse(dump_model(m));
    doc["version"] = 99;
    CHECK_THROWS_WITH_AS(parse_model(doc.dump()), doctest::Contains("version"), DataError);
    doc = Json::parse(dump_model(m));
    doc["format"] = "something-else";
    CHECK_THROWS_AS(parse_model(doc.dump()), DataError);
    doc = Json::parse(dump_model(m));
    doc["encoder"]["layer_sizes"] = {5, 3};
    CHECK_THROWS_AS(parse_model(doc.dump()), DataError);
    CHECK_THROWS_AS(parse_model("{not json"), DataError);
    CHECK_THROWS_AS(parse_model(dump_model(m).substr(0, 40)), DataError);
    CHECK_THROWS_AS(parse_rulebase(dump_model(m)), DataError);
}

TEST_CASE("matrix JSON round trip") {
    Matrix a(2, 3);
    a << 1, 2, 3, 4.5, -6e-9, 1.0 / 3.0;
    CHECK(matrix_from_json(Json::parse(to_json(a).dump())) == a);
    CHECK_THROWS_AS(matrix_from_json(Json{{"rows", 2}, {"cols", 2}, {"data", {{1, 2}}}}), DataError);
}
