#include "aefrc/rules.hpp"

#include "aefrc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

namespace aefrc {

namespace {

void check_labels(const Matrix& x, const std::vector<int>& labels, int class_count) {
    if (labels.size() != static_cast<std::size_t>(x.rows()))
        throw DataError("label count " + std::to_string(labels.size()) + " does not match sample count " +
                        std::to_string(x.rows()));
    for (int y : labels)
        if (y < 1 || y > class_count) throw DataError("label " + std::to_string(y) + " outside [1.." + std::to_string(class_count) + "]");
}

/// Sum in ascending order so the result does not depend on accumulation order.
double ordered_sum(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    return std::accumulate(values.begin(), values.end(), 0.0);
}

}  // namespace

FeatureMFBank fit_mf_bank(const Matrix& x, const std::vector<int>& labels, int class_count) {
    check_labels(x, labels, class_count);
    const auto n = x.cols();
    std::vector<std::size_t> counts(static_cast<std::size_t>(class_count), 0);
    for (int y : labels) ++counts[static_cast<std::size_t>(y - 1)];
    for (int p = 0; p < class_count; ++p)
        if (counts[static_cast<std::size_t>(p)] == 0)
            throw DataError("fit_mf_bank: class " + std::to_string(p + 1) + " has no training samples");

    FeatureMFBank bank;
    bank.mfs.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        const double range = x.col(j).maxCoeff() - x.col(j).minCoeff();
        const double floor = std::max(0.01 * range, 1e-6);
        std::vector<double> sum(static_cast<std::size_t>(class_count), 0.0);
        std::vector<double> sq(static_cast<std::size_t>(class_count), 0.0);
        for (Eigen::Index i = 0; i < x.rows(); ++i) sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)] += x(i, j);
        for (int p = 0; p < class_count; ++p) sum[static_cast<std::size_t>(p)] /= static_cast<double>(counts[static_cast<std::size_t>(p)]);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const auto p = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1);
            const double d = x(i, j) - sum[p];
            sq[p] += d * d;
        }
        auto& row = bank.mfs[static_cast<std::size_t>(j)];
        for (int p = 0; p < class_count; ++p) {
            const auto pi = static_cast<std::size_t>(p);
            const double sd = std::sqrt(sq[pi] / static_cast<double>(counts[pi]));
            row.push_back(GaussianMF{sum[pi], std::max(sd, floor)});
        }
    }
    return bank;
}

FeatureMFBank fit_mf_bank(const Dataset& train) { return fit_mf_bank(train.samples, train.labels, train.class_count()); }

std::vector<int> best_antecedent(const FeatureMFBank& bank, const double* x) {
    std::vector<int> ante(bank.feature_count());
    for (std::size_t j = 0; j < bank.feature_count(); ++j) {
        const auto& mfs = bank.mfs[j];
        int best = 0;
        double best_mv = mfs[0](x[j]);
        for (std::size_t p = 1; p < mfs.size(); ++p) {
            const double mv = mfs[p](x[j]);
            if (mv > best_mv) {
                best_mv = mv;
                best = static_cast<int>(p);
            }
        }
        ante[j] = best;
    }
    return ante;
}

RuleBase generate_rules(const Matrix& x, const std::vector<int>& labels, const FeatureMFBank& bank, FrcOptions options) {
    const int classes = bank.class_count();
    check_labels(x, labels, classes);
    if (static_cast<std::size_t>(x.cols()) != bank.feature_count())
        throw DataError("generate_rules: data has " + std::to_string(x.cols()) + " features, bank has " +
                        std::to_string(bank.feature_count()));

    RuleBase rb;
    rb.bank = bank;
    rb.options = options;

    // antecedent -> per-class list of membership products
    std::map<std::vector<int>, std::vector<std::vector<double>>> groups;
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = x;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double* xi = rows.row(i).data();
        auto ante = best_antecedent(bank, xi);
        double product = 1.0;
        for (std::size_t j = 0; j < ante.size(); ++j) product *= bank.mfs[j][static_cast<std::size_t>(ante[j])](xi[j]);
        if (!(product > 0.0)) {
            ++rb.skipped_samples;
            continue;
        }
        auto& slot = groups[std::move(ante)];
        if (slot.empty()) slot.resize(static_cast<std::size_t>(classes));
        slot[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)].push_back(product);
    }

    for (auto& [ante, per_class] : groups) {
        FuzzyRule rule;
        rule.antecedent = ante;
        rule.class_strengths.resize(static_cast<std::size_t>(classes));
        for (int p = 0; p < classes; ++p)
            rule.class_strengths[static_cast<std::size_t>(p)] = ordered_sum(per_class[static_cast<std::size_t>(p)]);

        int winner = 0;
        int positive = 0;
        double total = 0.0;
        for (int p = 0; p < classes; ++p) {
            const double b = rule.class_strengths[static_cast<std::size_t>(p)];
            if (b > rule.class_strengths[static_cast<std::size_t>(winner)]) winner = p;
            if (b > 0.0) ++positive;
            total += b;
        }
        double others = 0.0;
        if (positive > 1) {
            for (int p = 0; p < classes; ++p)
                if (p != winner) others += rule.class_strengths[static_cast<std::size_t>(p)];
            others /= static_cast<double>(positive - 1);
        }
        rule.consequent = winner + 1;
        rule.certainty = (rule.class_strengths[static_cast<std::size_t>(winner)] - others) / total;
        rb.rules.push_back(std::move(rule));
    }
    return rb;
}

RuleBase generate_rules(const Dataset& train, const FeatureMFBank& bank, FrcOptions options) {
    return generate_rules(train.samples, train.labels, bank, options);
}

Classification classify(const RuleBase& rb, const double* x, std::size_t width) {
    if (width != rb.feature_count())
        throw DataError("classify: input has " + std::to_string(width) + " features, rule base expects " +
                        std::to_string(rb.feature_count()));
    const int classes = rb.class_count();
    Classification out;
    out.class_scores.assign(static_cast<std::size_t>(classes), 0.0);
    std::vector<bool> seen(static_cast<std::size_t>(classes), false);

    for (const auto& rule : rb.rules) {
        double strength = rb.options.tnorm == TNorm::product ? 1.0 : 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            const double mv = rb.bank.mfs[j][static_cast<std::size_t>(rule.antecedent[j])](x[j]);
            if (rb.options.tnorm == TNorm::product)
                strength *= mv;
            else
                strength += mv;
        }
        const double vote = strength * rule.certainty;
        const auto c = static_cast<std::size_t>(rule.consequent - 1);
        if (rb.options.aggregation == RuleAggregation::sum) {
            out.class_scores[c] += vote;
        } else {
            out.class_scores[c] = seen[c] ? std::max(out.class_scores[c], vote) : vote;
        }
        seen[c] = true;
    }

    int best = 0;
    for (int p = 1; p < classes; ++p)
        if (out.class_scores[static_cast<std::size_t>(p)] > out.class_scores[static_cast<std::size_t>(best)]) best = p;
    out.label = best + 1;
    out.score = classes > 0 ? out.class_scores[static_cast<std::size_t>(best)] : 0.0;
    for (int p = 0; p < classes; ++p)
        if (p != best && out.class_scores[static_cast<std::size_t>(p)] == out.score) out.tie = true;
    return out;
}

Classification classify(const RuleBase& rb, const Vector& x) {
    return classify(rb, x.data(), static_cast<std::size_t>(x.size()));
}

std::vector<int> classify_all(const RuleBase& rb, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != rb.feature_count())
        throw DataError("classify: input has " + std::to_string(x.cols()) + " features, rule base expects " +
                        std::to_string(rb.feature_count()));
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = x;
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        out[static_cast<std::size_t>(i)] = classify(rb, rows.row(i).data(), rb.feature_count()).label;
    return out;
}

std::size_t rule_count(const RuleBase& rb) { return rb.rules.size(); }

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size()) throw DataError("accuracy: length mismatch");
    if (truth.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::string format_rule_listing(const RuleBase& rb, const std::vector<std::string>& class_names) {
    std::ostringstream os;
    os << std::fixed;
    for (std::size_t h = 0; h < rb.rules.size(); ++h) {
        const auto& rule = rb.rules[h];
        os << "R" << h + 1 << ": IF";
        for (std::size_t j = 0; j < rule.antecedent.size(); ++j) {
            const auto& mf = rb.bank.mfs[j][static_cast<std::size_t>(rule.antecedent[j])];
            os << (j ? " AND" : "") << " h" << j + 1 << " is MF" << rule.antecedent[j] + 1 << std::setprecision(4)
               << "(mean=" << mf.mean << ", sigma=" << mf.sigma << ")";
        }
        const auto c = static_cast<std::size_t>(rule.consequent - 1);
        os << " THEN class " << (c < class_names.size() ? class_names[c] : std::to_string(rule.consequent))
           << " CF=" << std::setprecision(4) << rule.certainty << (rule.weak() ? " (weak)" : "") << '\n';
    }
    return os.str();
}

}  // namespace aefrc
