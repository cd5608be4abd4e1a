#include "aefrc/errors.hpp"
#include "aefrc/mf.hpp"
#include "aefrc/random.hpp"

#include <doctest.h>

using namespace aefrc;

namespace {

Dataset column(std::vector<double> v) {
    Dataset ds;
    ds.samples.resize(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) ds.samples(static_cast<Eigen::Index>(i), 0) = v[i];
    ds.labels.assign(v.size(), 1);
    ds.class_names = {"a"};
    return ds;
}

}  // namespace

TEST_CASE("gaussian MF: peak, symmetry, range") {
    const GaussianMF g{5.429, 0.706};
    CHECK(g(5.429) == 1.0);
    for (double d : {0.01, 0.5, 3.0, 40.0}) {
        CHECK(g(5.429 + d) == doctest::Approx(g(5.429 - d)).epsilon(1e-14));
        CHECK(g(5.429 + d) <= 1.0);
        CHECK(g(5.429 + d) >= 0.0);
    }
    CHECK(g(5.429 + 0.706) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("ramp MF: endpoints, clamp, linear interior") {
    const RampMF r{2.0, 6.0};
    CHECK(r(2.0) == 0.0);
    CHECK(r(6.0) == 1.0);
    CHECK(r(4.0) == 0.5);
    CHECK(r(-10.0) == 0.0);
    CHECK(r(99.0) == 1.0);
}

TEST_CASE("validate rejects bad parameters") {
    CHECK_THROWS_AS(validate(GaussianMF{0.0, 0.0}), DataError);
    CHECK_THROWS_AS(validate(RampMF{1.0, 1.0}), DataError);
    CHECK_THROWS_AS(validate(ConstantMF{1.5}), DataError);
}

TEST_CASE("fit_ramp_spec: {2,4,6} maps 4 to 0.5, below min clamps to 0") {
    const PreprocSpec spec = fit_ramp_spec(column({2, 4, 6}));
    REQUIRE(spec.output_width() == 1);
    Matrix x(3, 1);
    x << 4, 1, 100;
    const Matrix y = preprocess(x, spec);
    CHECK(y(0, 0) == 0.5);
    CHECK(y(1, 0) == 0.0);
    CHECK(y(2, 0) == 1.0);
}

TEST_CASE("fit_ramp_spec: constant feature maps to 0.5") {
    const PreprocSpec spec = fit_ramp_spec(column({3, 3}));
    Matrix x(2, 1);
    x << 3, -7;
    const Matrix y = preprocess(x, spec);
    CHECK(y(0, 0) == 0.5);
    CHECK(y(1, 0) == 0.5);
}

TEST_CASE("fit_ramp_spec on iris hits 0 and 1 in every column") {
    const Dataset ds = load_csv("data/iris.csv");
    const Dataset xp = preprocess(ds, fit_ramp_spec(ds));
    CHECK(xp.labels == ds.labels);
    for (Eigen::Index j = 0; j < xp.samples.cols(); ++j) {
        CHECK(xp.samples.col(j).minCoeff() == 0.0);
        CHECK(xp.samples.col(j).maxCoeff() == 1.0);
    }
}

TEST_CASE("expert spec: iris expert file loads with 13 columns and the stated parameters") {
    const ExpertKnowledge ek = load_expert_knowledge("data/iris_expert.json");
    CHECK(ek.spec.input_width() == 4);
    CHECK(ek.spec.output_width() == 13);
    const auto& g = std::get<GaussianMF>(ek.spec.features[0][0]);
    CHECK(g.mean == 5.429);
    CHECK(g.sigma == 0.706);
    CHECK(std::get<GaussianMF>(ek.spec.features[3][4]).sigma == 2.588);
    const Dataset ds = load_csv("data/iris.csv");
    const Dataset xp = preprocess(ds, ek.spec);
    CHECK(xp.feature_count() == 13);
    Matrix at_mean(1, 4);
    at_mean << 5.429, 3, 3, 1;
    CHECK(preprocess(at_mean, ek.spec)(0, 0) == 1.0);
}

TEST_CASE("preprocess: spec must cover every feature") {
    const PreprocSpec spec = fit_ramp_spec(column({0, 1}));
    CHECK_THROWS_AS(preprocess(Matrix::Zero(2, 3), spec), DataError);
}

TEST_CASE("property: preprocessed values lie in [0,1] for random specs and inputs") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int trial = 0; trial < 100; ++trial) {
        PreprocSpec spec;
        const auto n = 1 + uniform_index(rng, 4);
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<MembershipFunction> list;
            const auto k = 1 + uniform_index(rng, 4);
            for (std::size_t l = 0; l < k; ++l) {
                switch (uniform_index(rng, 3)) {
                    case 0: list.emplace_back(GaussianMF{u(rng), 0.01 + std::abs(u(rng))}); break;
                    case 1: {
                        const double a = u(rng);
                        list.emplace_back(RampMF{a, a + 0.001 + std::abs(u(rng))});
                        break;
                    }
                    default: list.emplace_back(ConstantMF{0.5}); break;
                }
            }
            spec.features.push_back(std::move(list));
        }
        Matrix x(20, static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = 1e3 * u(rng);
        const Matrix y = preprocess(x, spec);
        CHECK(y.cols() == static_cast<Eigen::Index>(spec.output_width()));
        CHECK(y.minCoeff() >= 0.0);
        CHECK(y.maxCoeff() <= 1.0);
    }
}

TEST_CASE("column layout law: column(j, l) = sum of earlier K + l") {
    const ExpertKnowledge ek = load_expert_knowledge("data/iris_expert.json");
    std::size_t offset = 0;
    for (std::size_t j = 0; j < ek.spec.input_width(); ++j) {
        for (std::size_t l = 0; l < ek.spec.features[j].size(); ++l) CHECK(ek.spec.column(j, l) == offset + l);
        offset += ek.spec.features[j].size();
    }
    CHECK(offset == 13);
}

TEST_CASE("expert samples: rule 1 lights columns 3 and 9, 45 rows in total") {
    const ExpertKnowledge ek = load_expert_knowledge("data/iris_expert.json");
    const std::vector<std::string> classes{"setosa", "versicolor", "virginica"};
    const Dataset xe = make_expert_samples(ek.rules, ek.spec, classes);
    CHECK(xe.sample_count() == 45);
    CHECK(xe.feature_count() == 13);
    const auto row0 = xe.samples.row(0);
    for (Eigen::Index c = 0; c < 13; ++c) CHECK(row0(c) == ((c == 2 || c == 8) ? 1.0 : 0.0));
    CHECK(xe.class_names[static_cast<std::size_t>(xe.labels[0] - 1)] == "versicolor");
    // Expected expert sample rows.
    const int table[5][13] = {{0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0},
                              {0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0},
                              {0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0},
                              {1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0},
                              {0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}};
    const char* labels[5] = {"versicolor", "virginica", "setosa", "virginica", "versicolor"};
    for (int g = 0; g < 5; ++g)
        for (int t = 0; t < 9; ++t) {
            const auto r = static_cast<Eigen::Index>(g * 9 + t);
            for (Eigen::Index c = 0; c < 13; ++c) CHECK(xe.samples(r, c) == table[g][c]);
            CHECK(classes[static_cast<std::size_t>(xe.labels[static_cast<std::size_t>(r)] - 1)] == labels[g]);
        }
}

TEST_CASE("expert samples: one-hot per mentioned feature, tau upsampling, index checks") {
    PreprocSpec spec;
    spec.features = {{GaussianMF{0, 1}, GaussianMF{1, 1}}, {GaussianMF{0, 1}, GaussianMF{1, 1}, GaussianMF{2, 1}}};
    const std::vector<std::string> classes{"a", "b"};
    const Dataset xe = make_expert_samples({{{2, 3}, "b", 3}}, spec, classes);
    CHECK(xe.sample_count() == 3);
    for (Eigen::Index r = 0; r < 3; ++r) {
        CHECK(xe.samples.row(r).sum() == 2.0);
        CHECK(xe.samples(r, 1) == 1.0);
        CHECK(xe.samples(r, 4) == 1.0);
    }
    CHECK_THROWS_AS(make_expert_samples({{{3, 1}, "a", 1}}, spec, classes), DataError);
    CHECK_THROWS_AS(make_expert_samples({{{1, 1}, "a", 0}}, spec, classes), DataError);
    CHECK_THROWS_AS(make_expert_samples({{{1, 1}, "zzz", 1}}, spec, classes), DataError);
}

TEST_CASE("expert samples: don't-care policies") {
    PreprocSpec spec;
    spec.features = {{GaussianMF{0, 1}, GaussianMF{1, 1}}, {GaussianMF{0, 1}, GaussianMF{1, 1}, GaussianMF{2, 1}, GaussianMF{3, 1}}};
    const std::vector<std::string> classes{"a"};
    const Dataset zeros = make_expert_samples({{{1, 0}, "a", 1}}, spec, classes, DontCarePolicy::zeros);
    CHECK(zeros.samples.row(0).sum() == 1.0);
    const Dataset spread = make_expert_samples({{{1, 0}, "a", 1}}, spec, classes, DontCarePolicy::uniform);
    for (Eigen::Index c = 2; c < 6; ++c) CHECK(spread.samples(0, c) == 0.25);
}

TEST_CASE("append_expert: row counts and mismatches") {
    const ExpertKnowledge ek = load_expert_knowledge("data/iris_expert.json");
    Dataset ds = load_csv("data/iris.csv");
    std::vector<std::size_t> rows;
    std::vector<int> seen(4, 0);
    for (std::size_t i = 0; i < ds.sample_count(); ++i)
        if (seen[static_cast<std::size_t>(ds.labels[i])]++ < 15) rows.push_back(i);
    const Dataset xp = preprocess(ds.subset(rows), ek.spec);
    const Dataset xe = make_expert_samples(ek.rules, ek.spec, ds.class_names);
    const Dataset all = append_expert(xp, xe);
    CHECK(all.sample_count() == 90);
    CHECK(all.samples.topRows(45) == xp.samples);

    Dataset empty = xe.subset({});
    CHECK(append_expert(xp, empty).samples == xp.samples);
    CHECK_THROWS_AS(append_expert(preprocess(ds, fit_ramp_spec(ds)), xe), DataError);
}

TEST_CASE("expert knowledge file round trips through its text form") {
    const ExpertKnowledge ek = load_expert_knowledge("data/iris_expert.json");
    const ExpertKnowledge back = parse_expert_knowledge(format_expert_knowledge(ek));
    CHECK(back.spec.output_width() == ek.spec.output_width());
    REQUIRE(back.rules.size() == ek.rules.size());
    for (std::size_t g = 0; g < ek.rules.size(); ++g) {
        CHECK(back.rules[g].mf_choice == ek.rules[g].mf_choice);
        CHECK(back.rules[g].consequent == ek.rules[g].consequent);
        CHECK(back.rules[g].tau == 9);
    }
    CHECK_THROWS_AS(parse_expert_knowledge("{"), DataError);
    CHECK_THROWS_AS(parse_expert_knowledge(R"({"features":[{"name":"a","mfs":[{"type":"gaussian","mean":0,"sigma":1}]}],
        "rules":[{"antecedent":{"b":1},"class":"x"}]})"),
                    DataError);
}
