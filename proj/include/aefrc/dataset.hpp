#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aefrc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Labeled numeric samples. Rows are samples, columns are features.
/// Labels are 1-based class indices into `class_names`.
struct Dataset {
    Matrix samples;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;

    std::size_t sample_count() const { return static_cast<std::size_t>(samples.rows()); }
    std::size_t feature_count() const { return static_cast<std::size_t>(samples.cols()); }
    int class_count() const { return static_cast<int>(class_names.size()); }

    /// Number of samples per class, indexed 0..P-1.
    std::vector<std::size_t> class_sizes() const;

    /// Rows in the given order; labels and names carried over.
    Dataset subset(const std::vector<std::size_t>& rows) const;

    /// Throws DataError when labels, shapes, or values violate the dataset invariants.
    /// `require_all_classes` checks that every class occurs at least once.
    void validate(bool require_all_classes = true) const;
};

struct CsvSchema {
    bool has_header = true;
    /// Label column by header name; takes precedence over `label_index`.
    std::optional<std::string> label_name;
    /// Label column by 0-based index; negative counts from the end (-1 = last).
    int label_index = -1;
    /// 0 = auto-detect between ',' and ';'.
    char delimiter = 0;
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Reads delimited text from memory. `origin` is used in diagnostics.
Dataset parse_csv(const std::string& text, const CsvSchema& schema = {},
                  const std::string& origin = "<memory>");

/// Writes header + rows with 17 significant digits; label column last, as class names.
void save_csv(const Dataset& ds, const std::filesystem::path& path);
std::string format_csv(const Dataset& ds);

struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<int> assignments;

    std::vector<std::size_t> test_rows(int fold) const;
    std::vector<std::size_t> train_rows(int fold) const;
};

/// Per-class shuffle followed by a round-robin deal into k folds. The deal
/// continues across classes so total fold sizes also differ by at most one.
/// Throws when k < 2, k > m, or a class has fewer than k samples and
/// `best_effort` is false.
FoldPlan stratified_kfold(const Dataset& ds, int k, std::uint64_t seed, bool best_effort = false);

std::pair<Dataset, Dataset> split(const Dataset& ds, const FoldPlan& plan, int fold);

/// One integer fold index per line.
void save_folds(const FoldPlan& plan, const std::filesystem::path& path);
FoldPlan load_folds(const std::filesystem::path& path, std::size_t expected_samples);

}  // namespace aefrc
