#pragma once

#include "aefrc/dataset.hpp"
#include "aefrc/mf.hpp"

#include <string>
#include <vector>

namespace aefrc {

/// One Gaussian per (feature, class), fitted from that class's values.
struct FeatureMFBank {
    /// mfs[j][p]: feature j, class p (0-based).
    std::vector<std::vector<GaussianMF>> mfs;

    std::size_t feature_count() const { return mfs.size(); }
    int class_count() const { return mfs.empty() ? 0 : static_cast<int>(mfs.front().size()); }
};

/// Standard deviations are floored at max(0.01 * training range, 1e-6).
FeatureMFBank fit_mf_bank(const Matrix& x, const std::vector<int>& labels, int class_count);
FeatureMFBank fit_mf_bank(const Dataset& train);

/// How per-feature memberships combine into a rule's firing strength.
enum class TNorm { product, sum };
/// How same-consequent rules combine into a class score.
enum class RuleAggregation { sum, max };

struct FrcOptions {
    TNorm tnorm = TNorm::product;
    RuleAggregation aggregation = RuleAggregation::sum;
};

struct FuzzyRule {
    /// 0-based MF (class) index per feature.
    std::vector<int> antecedent;
    /// 1-based class label.
    int consequent = 0;
    double certainty = 0.0;
    /// Rule strength per class, 0-based.
    std::vector<double> class_strengths;

    /// Non-positive certainty; the rule cannot raise its class score.
    bool weak() const { return certainty <= 0.0; }
};

struct RuleBase {
    /// Ordered by antecedent (lexicographic).
    std::vector<FuzzyRule> rules;
    FeatureMFBank bank;
    FrcOptions options;
    /// Training samples whose membership product was zero.
    std::size_t skipped_samples = 0;

    std::size_t feature_count() const { return bank.feature_count(); }
    int class_count() const { return bank.class_count(); }
};

/// Index of the maximum-membership MF for each feature; ties go to the lowest index.
std::vector<int> best_antecedent(const FeatureMFBank& bank, const double* x);

/// One rule per distinct antecedent. Class strengths accumulate membership
/// products; the consequent is the strongest class and the certainty is
/// (beta_win - mean of the other positive strengths) / sum of strengths.
RuleBase generate_rules(const Matrix& x, const std::vector<int>& labels, const FeatureMFBank& bank,
                        FrcOptions options = {});
RuleBase generate_rules(const Dataset& train, const FeatureMFBank& bank, FrcOptions options = {});

struct Classification {
    int label = 0;
    double score = 0.0;
    std::vector<double> class_scores;
    /// Another class tied the winning score; the lowest class index was taken.
    bool tie = false;
};

Classification classify(const RuleBase& rb, const double* x, std::size_t width);
Classification classify(const RuleBase& rb, const Vector& x);
std::vector<int> classify_all(const RuleBase& rb, const Matrix& x);

std::size_t rule_count(const RuleBase& rb);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// One rule per line: per-feature MF (mean, sigma), consequent, CF to 4 decimals.
std::string format_rule_listing(const RuleBase& rb, const std::vector<std::string>& class_names = {});

}  // namespace aefrc
