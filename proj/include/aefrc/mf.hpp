#pragma once

#include "aefrc/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace aefrc {

struct GaussianMF {
    double mean = 0.0;
    double sigma = 1.0;

    double operator()(double x) const {
        const double z = (x - mean) / sigma;
        return std::exp(-0.5 * z * z);
    }
};

/// Clamped linear ramp: 0 at or below `lo`, 1 at or above `hi`.
struct RampMF {
    double lo = 0.0;
    double hi = 1.0;

    double operator()(double x) const {
        if (x <= lo) return 0.0;
        if (x >= hi) return 1.0;
        return (x - lo) / (hi - lo);
    }
};

/// Stand-in for a ramp over a constant training feature.
struct ConstantMF {
    double value = 0.5;
    double operator()(double) const { return value; }
};

using MembershipFunction = std::variant<GaussianMF, RampMF, ConstantMF>;

double evaluate(const MembershipFunction& mf, double x);

/// Throws DataError for sigma <= 0, lo >= hi, or values outside [0,1].
void validate(const MembershipFunction& mf);

/// Per input feature, the ordered list of functions that expand it.
struct PreprocSpec {
    std::vector<std::vector<MembershipFunction>> features;
    std::vector<std::string> feature_names;

    std::size_t input_width() const { return features.size(); }
    std::size_t output_width() const;
    /// 0-based global column of (feature j, function l): sum of earlier list lengths + l.
    std::size_t column(std::size_t feature, std::size_t mf) const;
    void validate() const;
};

/// Feature-major, function-minor expansion of every row. Labels pass through.
Dataset preprocess(const Dataset& x, const PreprocSpec& spec);
Matrix preprocess(const Matrix& x, const PreprocSpec& spec);

/// One ramp per feature from the training min to max. Constant features map to 0.5.
PreprocSpec fit_ramp_spec(const Dataset& train);

/// How an expert rule that does not mention a feature is encoded.
enum class DontCarePolicy {
    zeros,    ///< leave all of that feature's columns at 0
    uniform,  ///< spread 1/K_j over that feature's columns
};

struct ExpertRule {
    /// Per input feature, 1-based function index, or 0 when the rule does not use the feature.
    std::vector<int> mf_choice;
    std::string consequent;
    int tau = 1;
};

struct ExpertKnowledge {
    PreprocSpec spec;
    std::vector<ExpertRule> rules;
};

/// Sparse binary rows, one per rule replicated tau times, labelled against `class_names`.
Dataset make_expert_samples(const std::vector<ExpertRule>& rules, const PreprocSpec& spec,
                            const std::vector<std::string>& class_names,
                            DontCarePolicy policy = DontCarePolicy::zeros);

/// Row concatenation; class tables must agree.
Dataset append_expert(const Dataset& xp, const Dataset& xe);

ExpertKnowledge load_expert_knowledge(const std::filesystem::path& path);
ExpertKnowledge parse_expert_knowledge(const std::string& json_text);
std::string format_expert_knowledge(const ExpertKnowledge& ek);

}  // namespace aefrc
