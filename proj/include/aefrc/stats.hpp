#pragma once

// Rank-based comparison of classifiers over several datasets.

#include "aefrc/dataset.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace aefrc {

/// Errors are N datasets x l methods, NaN where a method gave no result.
struct RankTable {
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    Matrix errors;
    /// Ascending-error ranks per row, ties averaged, NaN for missing cells.
    Matrix ranks;
    /// Per method, averaged over the rows where it has a result.
    std::vector<double> average_ranks;
    std::vector<double> rank_sums;
    std::vector<std::size_t> present_counts;

    std::size_t method_count() const { return methods.size(); }
    std::size_t dataset_count() const { return datasets.size(); }
};

/// Throws DataError for an empty table or a row with fewer than two results.
RankTable rank(std::vector<std::string> methods, std::vector<std::string> datasets, const Matrix& errors);

/// Header "dataset,<method>,..." then one row per dataset; "NA" marks a missing cell.
RankTable parse_rank_table(const std::string& text, const std::string& origin = "<memory>");
RankTable load_rank_table(const std::filesystem::path& path);

struct FriedmanResult {
    double chi2 = 0.0;
    int df = 0;
    std::size_t n = 0;
    std::size_t l = 0;
};

/// chi2_F = 12N / (l(l+1)) [sum_j R_j^2 - l(l+1)^2 / 4] with N = number of datasets.
/// With `round_decimals`, the average ranks are rounded first, the way
/// published tables usually report them.
FriedmanResult friedman(const RankTable& rt, std::optional<int> round_decimals = std::nullopt);
FriedmanResult friedman(const std::vector<double>& average_ranks, std::size_t n);

/// Two-tailed Bonferroni-Dunn critical values for alpha in {0.05, 0.10}, l = 2..10.
double bonferroni_dunn_q(double alpha, std::size_t l);

/// CD = q * sqrt(l(l+1) / (6N)).
double bonferroni_dunn_cd(std::size_t l, std::size_t n, double q_alpha);

/// Minimum number of wins for a significant sign test at alpha = 0.05
/// (exact table for N <= 25, normal approximation beyond).
std::size_t sign_test_cutoff(std::size_t n);

struct SignTestResult {
    std::size_t wins_a = 0;
    std::size_t wins_b = 0;
    std::size_t ties = 0;
    /// Pairs where both sides have a value.
    std::size_t n = 0;
    std::size_t cutoff = 0;
    /// a wins significantly: wins_a + ties/2 >= cutoff.
    bool significant = false;
};

/// Counts pairwise wins (strictly lower error). NaN pairs are skipped.
SignTestResult wilcoxon_sign(const std::vector<double>& errors_a, const std::vector<double>& errors_b);

/// Human-readable summary: ranks, averages, Friedman, CD, and sign tests of
/// `reference` against every other method. `q_override` replaces the
/// tabulated critical value in the CD line.
std::string format_stats_report(const RankTable& rt, const std::string& reference, double alpha = 0.05,
                                std::optional<double> q_override = std::nullopt);

}  // namespace aefrc
