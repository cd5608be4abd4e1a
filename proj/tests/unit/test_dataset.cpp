#include "aefrc/dataset.hpp"
#include "aefrc/errors.hpp"
#include "aefrc/random.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace aefrc;

namespace {

Dataset synthetic(const std::vector<std::size_t>& per_class, std::uint64_t seed = 3) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::size_t m = 0;
    for (auto c : per_class) m += c;
    Dataset ds;
    ds.samples.resize(static_cast<Eigen::Index>(m), 2);
    std::size_t row = 0;
    for (std::size_t p = 0; p < per_class.size(); ++p) {
        ds.class_names.push_back("c" + std::to_string(p));
        for (std::size_t i = 0; i < per_class[p]; ++i, ++row) {
            ds.samples(static_cast<Eigen::Index>(row), 0) = g(rng) + static_cast<double>(p);
            ds.samples(static_cast<Eigen::Index>(row), 1) = g(rng);
            ds.labels.push_back(static_cast<int>(p) + 1);
        }
    }
    ds.feature_names = {"a", "b"};
    return ds;
}

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "aefrc_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("load_csv: iris shape") {
    const Dataset ds = load_csv("data/iris.csv");
    CHECK(ds.sample_count() == 150);
    CHECK(ds.feature_count() == 4);
    CHECK(ds.class_count() == 3);
    CHECK(ds.class_sizes() == std::vector<std::size_t>{50, 50, 50});
    CHECK(ds.class_names.front() == "setosa");
}

TEST_CASE("load_csv: breast cancer shape") {
    const Dataset ds = load_csv("data/breast_cancer.csv");
    CHECK(ds.sample_count() == 683);
    CHECK(ds.feature_count() == 9);
    CHECK(ds.class_count() == 2);
}

TEST_CASE("parse_csv: minimal one-row input") {
    const Dataset ds = parse_csv("x,y\n1.5,A\n");
    CHECK(ds.sample_count() == 1);
    CHECK(ds.feature_count() == 1);
    CHECK(ds.class_count() == 1);
    CHECK(ds.labels == std::vector<int>{1});
}

TEST_CASE("parse_csv: labels by first appearance, label column by name, semicolons, KEEL metadata") {
    CsvSchema s;
    s.label_name = "cls";
    const Dataset ds = parse_csv("@relation toy\n@attribute a real\ncls;a;b\nz;1;2\ny;3;4\nz;5;6\n", s);
    CHECK(ds.class_names == std::vector<std::string>{"z", "y"});
    CHECK(ds.labels == std::vector<int>{1, 2, 1});
    CHECK(ds.samples(2, 1) == 6.0);
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("parse_csv: headerless, label by index") {
    CsvSchema s;
    s.has_header = false;
    s.label_index = 0;
    const Dataset ds = parse_csv("1,0.5,0.25\n2,1,2\n", s);
    CHECK(ds.feature_count() == 2);
    CHECK(ds.class_names == std::vector<std::string>{"1", "2"});
}

TEST_CASE("parse_csv: errors") {
    CHECK_THROWS_AS(parse_csv(""), DataError);
    CHECK_THROWS_AS(parse_csv("a,b\n"), DataError);
    CHECK_THROWS_WITH_AS(parse_csv("a,b\n1,x\n2,oops,3\n"), doctest::Contains("line 3"), DataError);
    CHECK_THROWS_AS(parse_csv("a,b\nnope,x\n"), DataError);
    CHECK_THROWS_AS(parse_csv("a,b\nnan,x\n"), DataError);
    CHECK_THROWS_AS(parse_csv("a,b\ninf,x\n"), DataError);
    CHECK_THROWS_AS(parse_csv("a,b\n,x\n"), DataError);
    CsvSchema s;
    s.label_name = "missing";
    CHECK_THROWS_AS(parse_csv("a,b\n1,x\n", s), DataError);
    CHECK_THROWS_AS(load_csv("data/does_not_exist.csv"), DataError);
}

TEST_CASE("validate: invariants") {
    Dataset ds = synthetic({3, 3});
    CHECK_NOTHROW(ds.validate());
    ds.labels[0] = 3;
    CHECK_THROWS_AS(ds.validate(), DataError);
    ds.labels[0] = 1;
    ds.samples(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ds.validate(), DataError);
}

TEST_CASE("save_csv / load_csv round trip is exact") {
    Dataset ds = synthetic({7, 4, 5});
    ds.samples(0, 0) = 0.1 + 0.2;
    ds.samples(1, 1) = 1e-300;
    ds.samples(2, 0) = -123456.789012345678;
    const auto path = temp_file("roundtrip.csv");
    save_csv(ds, path);
    const Dataset back = load_csv(path);
    CHECK(back.samples == ds.samples);
    CHECK(back.labels == ds.labels);
    CHECK(back.class_names == ds.class_names);
    CHECK(back.feature_names == ds.feature_names);
}

TEST_CASE("stratified_kfold: iris k=10 gives 5 per class per fold") {
    const Dataset ds = load_csv("data/iris.csv");
    const FoldPlan plan = stratified_kfold(ds, 10, 7);
    for (int f = 0; f < 10; ++f) {
        std::vector<int> per(3, 0);
        for (auto r : plan.test_rows(f)) ++per[static_cast<std::size_t>(ds.labels[r] - 1)];
        CHECK(per == std::vector<int>{5, 5, 5});
    }
    const auto [train, test] = split(ds, plan, 0);
    CHECK(train.sample_count() == 135);
    CHECK(test.sample_count() == 15);
    CHECK(train.class_count() == 3);
}

TEST_CASE("stratified_kfold: property sweep over sizes, k and seeds") {
    Rng rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const int classes = 1 + static_cast<int>(uniform_index(rng, 4));
        const int k = 2 + static_cast<int>(uniform_index(rng, 6));
        std::vector<std::size_t> per;
        for (int p = 0; p < classes; ++p) per.push_back(static_cast<std::size_t>(k) + uniform_index(rng, 20));
        const Dataset ds = synthetic(per, rng());
        const std::uint64_t seed = rng();
        const FoldPlan plan = stratified_kfold(ds, k, seed);
        CHECK(plan.assignments == stratified_kfold(ds, k, seed).assignments);

        std::vector<std::vector<long>> counts(static_cast<std::size_t>(k), std::vector<long>(per.size(), 0));
        std::set<std::size_t> seen;
        std::size_t largest = 0, smallest = ds.sample_count();
        for (int f = 0; f < k; ++f) {
            const auto rows = plan.test_rows(f);
            largest = std::max(largest, rows.size());
            smallest = std::min(smallest, rows.size());
            for (auto r : rows) {
                CHECK(seen.insert(r).second);
                ++counts[static_cast<std::size_t>(f)][static_cast<std::size_t>(ds.labels[r] - 1)];
            }
            const auto train = plan.train_rows(f);
            CHECK(train.size() + rows.size() == ds.sample_count());
        }
        CHECK(seen.size() == ds.sample_count());
        CHECK(largest - smallest <= 1);
        for (std::size_t p = 0; p < per.size(); ++p) {
            long lo = counts[0][p], hi = counts[0][p];
            for (int f = 1; f < k; ++f) {
                lo = std::min(lo, counts[static_cast<std::size_t>(f)][p]);
                hi = std::max(hi, counts[static_cast<std::size_t>(f)][p]);
            }
            CHECK(hi - lo <= 1);
            // Each fold's share of a class stays within one sample of the overall proportion.
            const double expected = static_cast<double>(per[p]) / k;
            CHECK(static_cast<double>(hi) - expected < 1.0);
            CHECK(expected - static_cast<double>(lo) < 1.0);
        }
    }
}

TEST_CASE("stratified_kfold: leave-one-out and bounds") {
    const Dataset ds = synthetic({4, 4});
    const FoldPlan loo = stratified_kfold(ds, 8, 1, true);
    for (int f = 0; f < 8; ++f) CHECK(loo.test_rows(f).size() == 1);
    CHECK_THROWS_AS(stratified_kfold(ds, 1, 1), UsageError);
    CHECK_THROWS(stratified_kfold(ds, 9, 1, true));
    CHECK_THROWS_AS(stratified_kfold(ds, 5, 1), DataError);
    CHECK_NOTHROW(stratified_kfold(ds, 5, 1, true));
}

TEST_CASE("split: balanced 2/2 and out of range fold") {
    const Dataset ds = synthetic({2, 2});
    const FoldPlan plan = stratified_kfold(ds, 2, 5);
    const auto [train, test] = split(ds, plan, 1);
    CHECK(train.sample_count() == 2);
    CHECK(test.sample_count() == 2);
    CHECK_THROWS(split(ds, plan, 2));
    CHECK_THROWS(split(ds, plan, -1));
}

TEST_CASE("fold files round trip and are checked against the dataset") {
    const Dataset ds = synthetic({6, 5});
    const FoldPlan plan = stratified_kfold(ds, 3, 9);
    const auto path = temp_file("folds.txt");
    save_folds(plan, path);
    const FoldPlan back = load_folds(path, ds.sample_count());
    CHECK(back.k == 3);
    CHECK(back.assignments == plan.assignments);
    CHECK_THROWS_AS(load_folds(path, ds.sample_count() + 1), DataError);
}
