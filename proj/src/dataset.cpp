#include "aefrc/dataset.hpp"

#include "aefrc/errors.hpp"
#include "aefrc/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace aefrc {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\"'");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\"'");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        out.push_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

char detect_delimiter(const std::vector<std::string>& lines) {
    for (const auto& l : lines) {
        if (l.find(',') != std::string::npos) return ',';
        if (l.find(';') != std::string::npos) return ';';
    }
    return ',';
}

std::string where(const std::string& origin, std::size_t line, std::size_t col) {
    std::ostringstream os;
    os << origin << ": line " << line << ", column " << col + 1;
    return os.str();
}

}  // namespace

std::vector<std::size_t> Dataset::class_sizes() const {
    std::vector<std::size_t> sizes(class_names.size(), 0);
    for (int y : labels) {
        if (y >= 1 && static_cast<std::size_t>(y) <= sizes.size()) ++sizes[static_cast<std::size_t>(y - 1)];
    }
    return sizes;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.class_names = class_names;
    out.feature_names = feature_names;
    out.samples.resize(static_cast<Eigen::Index>(rows.size()), samples.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= sample_count()) throw DataError("subset: row index out of range");
        out.samples.row(static_cast<Eigen::Index>(i)) = samples.row(static_cast<Eigen::Index>(rows[i]));
        out.labels.push_back(labels[rows[i]]);
    }
    return out;
}

void Dataset::validate(bool require_all_classes) const {
    if (labels.size() != sample_count())
        throw DataError("dataset: label count does not match sample count");
    if (!feature_names.empty() && feature_names.size() != feature_count())
        throw DataError("dataset: feature name count does not match feature count");
    const int p = class_count();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 1 || labels[i] > p)
            throw DataError("dataset: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                            " outside [1.." + std::to_string(p) + "]");
    }
    if (!samples.allFinite()) throw DataError("dataset: non-finite feature value");
    if (require_all_classes) {
        const auto sizes = class_sizes();
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            if (sizes[c] == 0) throw DataError("dataset: class '" + class_names[c] + "' has no samples");
        }
    }
}

Dataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& origin) {
    std::vector<std::string> lines;
    std::vector<std::size_t> line_numbers;
    {
        std::istringstream in(text);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            const auto t = trim(line);
            if (t.empty() || t.front() == '@' || t.front() == '#') continue;
            lines.push_back(line);
            line_numbers.push_back(n);
        }
    }
    if (lines.empty()) throw DataError(origin + ": empty file");

    const char delim = schema.delimiter != 0 ? schema.delimiter : detect_delimiter(lines);
    std::size_t first_data = 0;
    std::vector<std::string> header;
    if (schema.has_header) {
        header = split_fields(lines.front(), delim);
        first_data = 1;
    }
    const std::size_t ncols = schema.has_header ? header.size() : split_fields(lines.front(), delim).size();
    if (ncols < 2) throw DataError(origin + ": need at least one feature column and one label column");

    std::size_t label_col;
    if (schema.label_name) {
        if (!schema.has_header) throw DataError(origin + ": label column named but schema has no header");
        const auto it = std::find(header.begin(), header.end(), *schema.label_name);
        if (it == header.end()) throw DataError(origin + ": missing label column '" + *schema.label_name + "'");
        label_col = static_cast<std::size_t>(it - header.begin());
    } else {
        const long idx = schema.label_index < 0 ? static_cast<long>(ncols) + schema.label_index : schema.label_index;
        if (idx < 0 || static_cast<std::size_t>(idx) >= ncols)
            throw DataError(origin + ": missing label column (index " + std::to_string(schema.label_index) + ")");
        label_col = static_cast<std::size_t>(idx);
    }

    Dataset ds;
    for (std::size_t c = 0; c < ncols; ++c) {
        if (c == label_col) continue;
        ds.feature_names.push_back(schema.has_header ? header[c] : "x" + std::to_string(ds.feature_names.size() + 1));
    }

    const std::size_t rows = lines.size() - first_data;
    ds.samples.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ncols - 1));
    ds.labels.reserve(rows);
    std::unordered_map<std::string, int> label_ids;

    for (std::size_t r = 0; r < rows; ++r) {
        const auto& line = lines[first_data + r];
        const auto fields = split_fields(line, delim);
        const auto lineno = line_numbers[first_data + r];
        if (fields.size() != ncols)
            throw DataError(origin + ": line " + std::to_string(lineno) + ": expected " + std::to_string(ncols) +
                            " fields, found " + std::to_string(fields.size()));
        Eigen::Index col = 0;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (c == label_col) continue;
            const auto& f = fields[c];
            double v = 0.0;
            const auto* begin = f.data();
            const auto* end = f.data() + f.size();
            if (!f.empty() && *begin == '+') ++begin;
            const auto [ptr, ec] = std::from_chars(begin, end, v);
            if (f.empty() || ec != std::errc() || ptr != end)
                throw DataError(where(origin, lineno, c) + ": cannot parse '" + f + "' as a number");
            if (!std::isfinite(v)) throw DataError(where(origin, lineno, c) + ": non-finite value '" + f + "'");
            ds.samples(static_cast<Eigen::Index>(r), col++) = v;
        }
        const auto& label = fields[label_col];
        if (label.empty()) throw DataError(where(origin, lineno, label_col) + ": empty label");
        auto [it, inserted] = label_ids.try_emplace(label, static_cast<int>(ds.class_names.size()) + 1);
        if (inserted) ds.class_names.push_back(label);
        ds.labels.push_back(it->second);
    }
    if (rows == 0) throw DataError(origin + ": no data rows");
    ds.validate();
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema, path.string());
}

std::string format_csv(const Dataset& ds) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t j = 0; j < ds.feature_count(); ++j) {
        os << (j < ds.feature_names.size() ? ds.feature_names[j] : "x" + std::to_string(j + 1)) << ',';
    }
    os << "class\n";
    for (std::size_t i = 0; i < ds.sample_count(); ++i) {
        for (std::size_t j = 0; j < ds.feature_count(); ++j)
            os << ds.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << ',';
        os << ds.class_names[static_cast<std::size_t>(ds.labels[i] - 1)] << '\n';
    }
    return os.str();
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << format_csv(ds);
}

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
    if (fold < 0 || fold >= k) throw DataError("fold " + std::to_string(fold) + " out of range [0.." + std::to_string(k - 1) + "]");
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
    if (fold < 0 || fold >= k) throw DataError("fold " + std::to_string(fold) + " out of range [0.." + std::to_string(k - 1) + "]");
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) rows.push_back(i);
    return rows;
}

FoldPlan stratified_kfold(const Dataset& ds, int k, std::uint64_t seed, bool best_effort) {
    const auto m = ds.sample_count();
    if (k < 2) throw UsageError("stratified_kfold: k must be at least 2");
    if (static_cast<std::size_t>(k) > m)
        throw DataError("stratified_kfold: k=" + std::to_string(k) + " exceeds sample count " + std::to_string(m));
    const auto sizes = ds.class_sizes();
    if (!best_effort) {
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            if (sizes[c] < static_cast<std::size_t>(k))
                throw DataError("stratified_kfold: class '" + ds.class_names[c] + "' has " + std::to_string(sizes[c]) +
                                " samples, fewer than k=" + std::to_string(k));
        }
    }

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(m, -1);

    Rng rng(seed);
    std::size_t deal = 0;
    for (int c = 1; c <= ds.class_count(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < m; ++i)
            if (ds.labels[i] == c) members.push_back(i);
        fisher_yates(members, rng);
        for (auto row : members) plan.assignments[row] = static_cast<int>(deal++ % static_cast<std::size_t>(k));
    }
    return plan;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const FoldPlan& plan, int fold) {
    if (plan.assignments.size() != ds.sample_count())
        throw DataError("split: fold plan covers " + std::to_string(plan.assignments.size()) + " samples, dataset has " +
                        std::to_string(ds.sample_count()));
    return {ds.subset(plan.train_rows(fold)), ds.subset(plan.test_rows(fold))};
}

void save_folds(const FoldPlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write fold file '" + path.string() + "'");
    for (int a : plan.assignments) out << a << '\n';
}

FoldPlan load_folds(const std::filesystem::path& path, std::size_t expected_samples) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fold file '" + path.string() + "'");
    FoldPlan plan;
    std::string line;
    std::size_t lineno = 0;
    int max_fold = -1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty()) continue;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size() || v < 0)
            throw DataError(path.string() + ": line " + std::to_string(lineno) + ": invalid fold index '" + t + "'");
        plan.assignments.push_back(v);
        max_fold = std::max(max_fold, v);
    }
    if (plan.assignments.size() != expected_samples)
        throw DataError(path.string() + ": " + std::to_string(plan.assignments.size()) + " fold entries, expected " +
                        std::to_string(expected_samples));
    plan.k = max_fold + 1;
    if (plan.k < 2) throw DataError(path.string() + ": fold file defines fewer than 2 folds");
    std::vector<bool> used(static_cast<std::size_t>(plan.k), false);
    for (int a : plan.assignments) used[static_cast<std::size_t>(a)] = true;
    for (int f = 0; f < plan.k; ++f)
        if (!used[static_cast<std::size_t>(f)]) throw DataError(path.string() + ": fold " + std::to_string(f) + " is empty");
    return plan;
}

}  // namespace aefrc
