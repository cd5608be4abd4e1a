#include "aefrc/stats.hpp"

#include "aefrc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace aefrc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, delim)) out.push_back(trim(cur));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

// Demsar's tables of two-tailed critical values divided by sqrt(2).
constexpr double kQ05[] = {1.960, 2.241, 2.394, 2.498, 2.576, 2.638, 2.690, 2.724, 2.773};
constexpr double kQ10[] = {1.645, 1.960, 2.128, 2.241, 2.326, 2.394, 2.450, 2.498, 2.539};

// Minimum wins at alpha = 0.05 for N = 5..25.
constexpr std::size_t kSignCutoff[] = {5, 6, 7, 7, 8, 9, 9, 10, 10, 11, 12, 12, 13, 13, 14, 15, 15, 16, 17, 18, 18};

}  // namespace

RankTable rank(std::vector<std::string> methods, std::vector<std::string> datasets, const Matrix& errors) {
    const auto n = errors.rows();
    const auto l = errors.cols();
    if (n == 0 || l == 0) throw DataError("rank table is empty");
    if (static_cast<std::size_t>(l) != methods.size() || static_cast<std::size_t>(n) != datasets.size())
        throw DataError("rank table labels do not match the error matrix");

    RankTable rt;
    rt.methods = std::move(methods);
    rt.datasets = std::move(datasets);
    rt.errors = errors;
    rt.ranks = Matrix::Constant(n, l, kNaN);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<Eigen::Index> present;
        for (Eigen::Index j = 0; j < l; ++j)
            if (!std::isnan(errors(i, j))) present.push_back(j);
        if (present.size() < 2)
            throw DataError("rank table row '" + rt.datasets[static_cast<std::size_t>(i)] + "' has fewer than two results");
        std::stable_sort(present.begin(), present.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return errors(i, a) < errors(i, b); });
        for (std::size_t s = 0; s < present.size();) {
            std::size_t e = s;
            while (e + 1 < present.size() && errors(i, present[e + 1]) == errors(i, present[s])) ++e;
            const double avg = 0.5 * static_cast<double>(s + e) + 1.0;
            for (std::size_t t = s; t <= e; ++t) rt.ranks(i, present[t]) = avg;
            s = e + 1;
        }
    }
    for (Eigen::Index j = 0; j < l; ++j) {
        double sum = 0.0;
        std::size_t count = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!std::isnan(rt.ranks(i, j))) {
                sum += rt.ranks(i, j);
                ++count;
            }
        rt.rank_sums.push_back(sum);
        rt.present_counts.push_back(count);
        rt.average_ranks.push_back(count ? sum / static_cast<double>(count) : kNaN);
    }
    return rt;
}

RankTable parse_rank_table(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    char delim = ',';
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (header.empty()) {
            delim = t.find(';') != std::string::npos && t.find(',') == std::string::npos ? ';' : ',';
            header = fields(t, delim);
            if (header.size() < 3) throw DataError(origin + ":" + std::to_string(line_no) + ": need a dataset column and at least two methods");
            continue;
        }
        const auto cells = fields(t, delim);
        if (cells.size() != header.size())
            throw DataError(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " columns, found " + std::to_string(cells.size()));
        names.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto& cell = cells[c];
            if (cell == "NA" || cell == "na" || cell == "NaN" || cell == "-" || cell.empty()) {
                row.push_back(kNaN);
                continue;
            }
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw DataError(origin + ":" + std::to_string(line_no) + ":" + std::to_string(c + 1) +
                                ": cannot parse '" + cell + "' as a number");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (header.empty() || rows.empty()) throw DataError(origin + ": rank table has no data rows");
    Matrix errors(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size() - 1));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            errors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return rank(std::vector<std::string>(header.begin() + 1, header.end()), std::move(names), errors);
}

RankTable load_rank_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open rank table '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_rank_table(os.str(), path.string());
}

FriedmanResult friedman(const std::vector<double>& average_ranks, std::size_t n) {
    const std::size_t l = average_ranks.size();
    if (l < 2 || n < 2) throw DataError("Friedman test needs at least two methods and two datasets");
    const double dl = static_cast<double>(l);
    double sq = 0.0;
    for (double r : average_ranks) {
        if (!std::isfinite(r)) throw DataError("Friedman test: a method has no ranked results");
        sq += r * r;
    }
    FriedmanResult out;
    out.n = n;
    out.l = l;
    out.df = static_cast<int>(l) - 1;
    out.chi2 = 12.0 * static_cast<double>(n) / (dl * (dl + 1.0)) * (sq - dl * (dl + 1.0) * (dl + 1.0) / 4.0);
    return out;
}

FriedmanResult friedman(const RankTable& rt, std::optional<int> round_decimals) {
    std::vector<double> r = rt.average_ranks;
    if (round_decimals) {
        const double scale = std::pow(10.0, *round_decimals);
        for (auto& v : r) v = std::round(v * scale) / scale;
    }
    return friedman(r, rt.dataset_count());
}

double bonferroni_dunn_q(double alpha, std::size_t l) {
    if (l < 2 || l > 10) throw DataError("Bonferroni-Dunn q is tabulated for 2..10 methods, not " + std::to_string(l));
    if (std::abs(alpha - 0.05) < 1e-12) return kQ05[l - 2];
    if (std::abs(alpha - 0.10) < 1e-12) return kQ10[l - 2];
    throw DataError("Bonferroni-Dunn q is tabulated for alpha 0.05 and 0.10 only");
}

double bonferroni_dunn_cd(std::size_t l, std::size_t n, double q_alpha) {
    if (l < 2 || n < 1 || !(q_alpha > 0.0)) throw DataError("critical difference needs l >= 2, N >= 1, q > 0");
    const double dl = static_cast<double>(l);
    return q_alpha * std::sqrt(dl * (dl + 1.0) / (6.0 * static_cast<double>(n)));
}

std::size_t sign_test_cutoff(std::size_t n) {
    if (n < 5) return n + 1;
    if (n <= 25) return kSignCutoff[n - 5];
    const double dn = static_cast<double>(n);
    return static_cast<std::size_t>(std::ceil(dn / 2.0 + 1.96 * std::sqrt(dn) / 2.0));
}

SignTestResult wilcoxon_sign(const std::vector<double>& errors_a, const std::vector<double>& errors_b) {
    if (errors_a.size() != errors_b.size())
        throw DataError("sign test: " + std::to_string(errors_a.size()) + " vs " + std::to_string(errors_b.size()) +
                        " paired values");
    SignTestResult out;
    for (std::size_t i = 0; i < errors_a.size(); ++i) {
        const double a = errors_a[i];
        const double b = errors_b[i];
        if (std::isnan(a) || std::isnan(b)) continue;
        ++out.n;
        if (a < b)
            ++out.wins_a;
        else if (b < a)
            ++out.wins_b;
        else
            ++out.ties;
    }
    out.cutoff = sign_test_cutoff(out.n);
    out.significant = 2 * out.wins_a + out.ties >= 2 * out.cutoff;
    return out;
}

std::string format_stats_report(const RankTable& rt, const std::string& reference, double alpha,
                                std::optional<double> q_override) {
    std::ostringstream os;
    const std::size_t l = rt.method_count();
    const std::size_t n = rt.dataset_count();
    std::size_t width = 8;
    for (const auto& d : rt.datasets) width = std::max(width, d.size() + 2);

    os << std::left << std::setw(static_cast<int>(width)) << "dataset";
    for (const auto& m : rt.methods) os << std::right << std::setw(12) << m;
    os << '\n' << std::fixed;
    for (std::size_t i = 0; i < n; ++i) {
        os << std::left << std::setw(static_cast<int>(width)) << rt.datasets[i] << std::right;
        for (std::size_t j = 0; j < l; ++j) {
            const double r = rt.ranks(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (std::isnan(r))
                os << std::setw(12) << "NA";
            else
                os << std::setw(12) << std::setprecision(1) << r;
        }
        os << '\n';
    }
    os << std::left << std::setw(static_cast<int>(width)) << "rank sum" << std::right;
    for (double s : rt.rank_sums) os << std::setw(12) << std::setprecision(1) << s;
    os << '\n' << std::left << std::setw(static_cast<int>(width)) << "avg rank" << std::right;
    for (double r : rt.average_ranks) os << std::setw(12) << std::setprecision(4) << r;
    os << "\n\n";

    const auto exact = friedman(rt);
    const auto rounded = friedman(rt, 2);
    os << std::setprecision(4) << "Friedman chi2_F = " << exact.chi2 << " (df = " << exact.df << ", N = " << exact.n
       << ")\n";
    os << "Friedman chi2_F from averages rounded to 2 decimals = " << rounded.chi2 << '\n';
    if (l >= 2 && l <= 10) {
        const double q = q_override ? *q_override : bonferroni_dunn_q(alpha, l);
        os << std::setprecision(3) << "Bonferroni-Dunn CD (alpha = " << alpha << ", q = " << q
           << ") = " << bonferroni_dunn_cd(l, n, q) << '\n';
    }

    const auto it = std::find(rt.methods.begin(), rt.methods.end(), reference);
    if (it == rt.methods.end()) return os.str();
    const auto ref = static_cast<Eigen::Index>(it - rt.methods.begin());
    auto column = [&](Eigen::Index j) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = rt.errors(static_cast<Eigen::Index>(i), j);
        return v;
    };
    os << "\nSign test of " << reference << " (alpha = 0.05):\n";
    for (std::size_t j = 0; j < l; ++j) {
        if (static_cast<Eigen::Index>(j) == ref) continue;
        const auto s = wilcoxon_sign(column(ref), column(static_cast<Eigen::Index>(j)));
        os << "  vs " << rt.methods[j] << ": wins " << s.wins_a << ", losses " << s.wins_b << ", ties " << s.ties
           << " over N = " << s.n << ", cutoff " << s.cutoff << (s.significant ? ", significant" : ", not significant")
           << '\n';
    }
    return os.str();
}

}  // namespace aefrc
