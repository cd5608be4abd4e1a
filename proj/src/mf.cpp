#include "aefrc/mf.hpp"

#include "aefrc/errors.hpp"
#include "aefrc/serialize.hpp"

#include <algorithm>
#include <numeric>

namespace aefrc {

double evaluate(const MembershipFunction& mf, double x) {
    return std::visit([x](const auto& f) { return f(x); }, mf);
}

void validate(const MembershipFunction& mf) {
    std::visit(
        [](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, GaussianMF>) {
                if (!(f.sigma > 0.0) || !std::isfinite(f.sigma) || !std::isfinite(f.mean))
                    throw DataError("gaussian membership function needs finite mean and sigma > 0");
            } else if constexpr (std::is_same_v<T, RampMF>) {
                if (!(f.lo < f.hi) || !std::isfinite(f.lo) || !std::isfinite(f.hi))
                    throw DataError("ramp membership function needs finite lo < hi");
            } else {
                if (!(f.value >= 0.0 && f.value <= 1.0))
                    throw DataError("constant membership function value must lie in [0,1]");
            }
        },
        mf);
}

std::size_t PreprocSpec::output_width() const {
    return std::accumulate(features.begin(), features.end(), std::size_t{0},
                           [](std::size_t acc, const auto& list) { return acc + list.size(); });
}

std::size_t PreprocSpec::column(std::size_t feature, std::size_t mf) const {
    if (feature >= features.size() || mf >= features[feature].size())
        throw DataError("preprocessing column (" + std::to_string(feature) + ", " + std::to_string(mf) + ") out of range");
    std::size_t offset = 0;
    for (std::size_t j = 0; j < feature; ++j) offset += features[j].size();
    return offset + mf;
}

void PreprocSpec::validate() const {
    if (features.empty()) throw DataError("preprocessing spec has no features");
    for (std::size_t j = 0; j < features.size(); ++j) {
        if (features[j].empty())
            throw DataError("preprocessing spec: feature " + std::to_string(j + 1) + " has no membership functions");
        for (const auto& mf : features[j]) aefrc::validate(mf);
    }
}

Matrix preprocess(const Matrix& x, const PreprocSpec& spec) {
    if (static_cast<std::size_t>(x.cols()) != spec.input_width())
        throw DataError("preprocess: data has " + std::to_string(x.cols()) + " features, spec covers " +
                        std::to_string(spec.input_width()));
    const auto rows = x.rows();
    Matrix out(rows, static_cast<Eigen::Index>(spec.output_width()));
#pragma omp parallel for schedule(static) if (rows > 4096)
    for (Eigen::Index i = 0; i < rows; ++i) {
        Eigen::Index col = 0;
        for (std::size_t j = 0; j < spec.features.size(); ++j) {
            for (const auto& mf : spec.features[j])
                out(i, col++) = evaluate(mf, x(i, static_cast<Eigen::Index>(j)));
        }
    }
    return out;
}

Dataset preprocess(const Dataset& x, const PreprocSpec& spec) {
    Dataset out;
    out.samples = preprocess(x.samples, spec);
    out.labels = x.labels;
    out.class_names = x.class_names;
    for (std::size_t j = 0; j < spec.features.size(); ++j) {
        const std::string base = j < spec.feature_names.size()   ? spec.feature_names[j]
                                 : j < x.feature_names.size()    ? x.feature_names[j]
                                                                 : "x" + std::to_string(j + 1);
        for (std::size_t l = 0; l < spec.features[j].size(); ++l) out.feature_names.push_back(base + "_mf" + std::to_string(l + 1));
    }
    return out;
}

PreprocSpec fit_ramp_spec(const Dataset& train) {
    PreprocSpec spec;
    spec.feature_names = train.feature_names;
    if (train.sample_count() == 0) throw DataError("fit_ramp_spec: empty training set");
    for (Eigen::Index j = 0; j < train.samples.cols(); ++j) {
        const double lo = train.samples.col(j).minCoeff();
        const double hi = train.samples.col(j).maxCoeff();
        if (lo < hi)
            spec.features.push_back({RampMF{lo, hi}});
        else
            spec.features.push_back({ConstantMF{0.5}});
    }
    return spec;
}

Dataset make_expert_samples(const std::vector<ExpertRule>& rules, const PreprocSpec& spec,
                            const std::vector<std::string>& class_names, DontCarePolicy policy) {
    Dataset out;
    out.class_names = class_names;
    const auto np = spec.output_width();
    std::size_t total = 0;
    for (const auto& r : rules) {
        if (r.tau < 1) throw DataError("expert rule confidence tau must be >= 1");
        total += static_cast<std::size_t>(r.tau);
    }
    out.samples = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(np));
    out.labels.reserve(total);

    Eigen::Index row = 0;
    for (std::size_t g = 0; g < rules.size(); ++g) {
        const auto& rule = rules[g];
        if (rule.mf_choice.size() != spec.input_width())
            throw DataError("expert rule " + std::to_string(g + 1) + " names " + std::to_string(rule.mf_choice.size()) +
                            " features, spec has " + std::to_string(spec.input_width()));
        const auto cls = std::find(class_names.begin(), class_names.end(), rule.consequent);
        if (cls == class_names.end())
            throw DataError("expert rule " + std::to_string(g + 1) + ": unknown class '" + rule.consequent + "'");

        Vector v = Vector::Zero(static_cast<Eigen::Index>(np));
        std::size_t count = 0;
        for (std::size_t j = 0; j < spec.input_width(); ++j) {
            const auto kj = spec.features[j].size();
            const int l = rule.mf_choice[j];
            if (l < 0 || static_cast<std::size_t>(l) > kj)
                throw DataError("expert rule " + std::to_string(g + 1) + ": feature " + std::to_string(j + 1) +
                                " has no membership function " + std::to_string(l));
            if (l > 0) {
                v(static_cast<Eigen::Index>(count + static_cast<std::size_t>(l) - 1)) = 1.0;
            } else if (policy == DontCarePolicy::uniform) {
                for (std::size_t q = 0; q < kj; ++q) v(static_cast<Eigen::Index>(count + q)) = 1.0 / static_cast<double>(kj);
            }
            count += kj;
        }
        const int label = static_cast<int>(cls - class_names.begin()) + 1;
        for (int t = 0; t < rule.tau; ++t) {
            out.samples.row(row++) = v.transpose();
            out.labels.push_back(label);
        }
    }
    return out;
}

Dataset append_expert(const Dataset& xp, const Dataset& xe) {
    if (xe.sample_count() == 0) return xp;
    if (xp.feature_count() != xe.feature_count())
        throw DataError("append_expert: preprocessed data has " + std::to_string(xp.feature_count()) +
                        " features, expert samples have " + std::to_string(xe.feature_count()));
    if (xp.class_names != xe.class_names) throw DataError("append_expert: class tables differ");
    Dataset out = xp;
    out.samples.conservativeResize(xp.samples.rows() + xe.samples.rows(), Eigen::NoChange);
    out.samples.bottomRows(xe.samples.rows()) = xe.samples;
    out.labels.insert(out.labels.end(), xe.labels.begin(), xe.labels.end());
    return out;
}

ExpertKnowledge parse_expert_knowledge(const std::string& json_text) {
    Json doc;
    try {
        doc = Json::parse(json_text);
    } catch (const Json::exception& e) {
        throw DataError(std::string("expert knowledge file: ") + e.what());
    }
    ExpertKnowledge ek;
    try {
        ek.spec = preproc_from_json(doc.at("features"));
        for (const auto& jr : doc.at("rules")) {
            ExpertRule rule;
            rule.mf_choice.assign(ek.spec.input_width(), 0);
            const auto& ante = jr.at("antecedent");
            if (ante.is_array()) {
                rule.mf_choice = ante.get<std::vector<int>>();
            } else {
                for (const auto& [name, idx] : ante.items()) {
                    const auto it = std::find(ek.spec.feature_names.begin(), ek.spec.feature_names.end(), name);
                    if (it == ek.spec.feature_names.end())
                        throw DataError("expert rule references unknown feature '" + name + "'");
                    rule.mf_choice[static_cast<std::size_t>(it - ek.spec.feature_names.begin())] = idx.get<int>();
                }
            }
            rule.consequent = jr.at("class").get<std::string>();
            rule.tau = jr.value("tau", 1);
            ek.rules.push_back(std::move(rule));
        }
    } catch (const Json::exception& e) {
        throw DataError(std::string("expert knowledge file: ") + e.what());
    }
    ek.spec.validate();
    return ek;
}

ExpertKnowledge load_expert_knowledge(const std::filesystem::path& path) {
    return parse_expert_knowledge(read_text_file(path));
}

std::string format_expert_knowledge(const ExpertKnowledge& ek) {
    Json doc;
    doc["format"] = "aefrc-expert";
    doc["version"] = 1;
    doc["features"] = to_json(ek.spec);
    doc["rules"] = Json::array();
    for (const auto& r : ek.rules) {
        Json ante = Json::object();
        for (std::size_t j = 0; j < r.mf_choice.size(); ++j) {
            if (r.mf_choice[j] == 0) continue;
            const auto name = j < ek.spec.feature_names.size() ? ek.spec.feature_names[j] : "x" + std::to_string(j + 1);
            ante[name] = r.mf_choice[j];
        }
        doc["rules"].push_back({{"antecedent", ante}, {"class", r.consequent}, {"tau", r.tau}});
    }
    return doc.dump(2);
}

}  // namespace aefrc
