#include "aefrc/serialize.hpp"

#include "aefrc/errors.hpp"

#include <fstream>
#include <sstream>

namespace aefrc {

namespace {

Json parse_document(const std::string& text, const char* what) {
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw DataError(std::string(what) + ": " + e.what());
    }
}

void check_header(const Json& doc, const char* format, int version) {
    if (!doc.is_object() || doc.value("format", std::string{}) != format)
        throw DataError(std::string("not a ") + format + " document");
    const int found = doc.value("version", -1);
    if (found != version)
        throw DataError(std::string(format) + " version " + std::to_string(found) + " is not supported (expected " +
                        std::to_string(version) + ")");
}

Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

Json to_json(const MembershipFunction& mf) {
    return std::visit(
        [](const auto& f) -> Json {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, GaussianMF>)
                return {{"type", "gaussian"}, {"mean", f.mean}, {"sigma", f.sigma}};
            else if constexpr (std::is_same_v<T, RampMF>)
                return {{"type", "ramp"}, {"lo", f.lo}, {"hi", f.hi}};
            else
                return {{"type", "constant"}, {"value", f.value}};
        },
        mf);
}

MembershipFunction mf_from_json(const Json& j) {
    const auto type = j.at("type").get<std::string>();
    MembershipFunction mf;
    if (type == "gaussian")
        mf = GaussianMF{j.at("mean").get<double>(), j.at("sigma").get<double>()};
    else if (type == "ramp")
        mf = RampMF{j.at("lo").get<double>(), j.at("hi").get<double>()};
    else if (type == "constant")
        mf = ConstantMF{j.at("value").get<double>()};
    else
        throw DataError("unknown membership function type '" + type + "'");
    validate(mf);
    return mf;
}

Json to_json(const PreprocSpec& spec) {
    Json out = Json::array();
    for (std::size_t j = 0; j < spec.features.size(); ++j) {
        Json mfs = Json::array();
        for (const auto& mf : spec.features[j]) mfs.push_back(to_json(mf));
        const auto name = j < spec.feature_names.size() ? spec.feature_names[j] : "x" + std::to_string(j + 1);
        out.push_back({{"name", name}, {"mfs", mfs}});
    }
    return out;
}

PreprocSpec preproc_from_json(const Json& j) {
    if (!j.is_array()) throw DataError("preprocessing spec must be an array of features");
    PreprocSpec spec;
    for (const auto& jf : j) {
        spec.feature_names.push_back(jf.value("name", "x" + std::to_string(spec.features.size() + 1)));
        std::vector<MembershipFunction> list;
        for (const auto& jm : jf.at("mfs")) list.push_back(mf_from_json(jm));
        spec.features.push_back(std::move(list));
    }
    spec.validate();
    return spec;
}

Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows))
        throw DataError("matrix: row count does not match data");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto row = data[static_cast<std::size_t>(i)].get<std::vector<double>>();
        if (row.size() != static_cast<std::size_t>(cols)) throw DataError("matrix: ragged row " + std::to_string(i));
        for (Eigen::Index q = 0; q < cols; ++q) m(i, q) = row[static_cast<std::size_t>(q)];
    }
    return m;
}

Json to_json(const Network& net) {
    Json layers = Json::array();
    for (std::size_t l = 0; l < net.weights.size(); ++l)
        layers.push_back({{"weights", to_json(net.weights[l])}, {"biases", vector_json(net.biases[l])}});
    return {{"layer_sizes", net.layer_sizes}, {"layers", layers}};
}

Network network_from_json(const Json& j) {
    Network net;
    net.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    for (const auto& jl : j.at("layers")) {
        net.weights.push_back(matrix_from_json(jl.at("weights")));
        net.biases.push_back(vector_from_json(jl.at("biases")));
    }
    net.validate();
    return net;
}

Json to_json(const RuleBase& rb) {
    Json bank = Json::array();
    for (const auto& feature : rb.bank.mfs) {
        Json list = Json::array();
        for (const auto& g : feature) list.push_back({{"mean", g.mean}, {"sigma", g.sigma}});
        bank.push_back(list);
    }
    Json rules = Json::array();
    for (const auto& r : rb.rules)
        rules.push_back({{"antecedent", r.antecedent},
                         {"consequent", r.consequent},
                         {"certainty", r.certainty},
                         {"class_strengths", r.class_strengths}});
    return {{"bank", bank},
            {"rules", rules},
            {"tnorm", rb.options.tnorm == TNorm::product ? "product" : "sum"},
            {"aggregation", rb.options.aggregation == RuleAggregation::sum ? "sum" : "max"},
            {"skipped_samples", rb.skipped_samples}};
}

RuleBase rulebase_from_json(const Json& j) {
    RuleBase rb;
    for (const auto& jf : j.at("bank")) {
        std::vector<GaussianMF> list;
        for (const auto& jg : jf) {
            GaussianMF g{jg.at("mean").get<double>(), jg.at("sigma").get<double>()};
            validate(MembershipFunction{g});
            list.push_back(g);
        }
        rb.bank.mfs.push_back(std::move(list));
    }
    const int classes = rb.bank.class_count();
    for (const auto& feature : rb.bank.mfs)
        if (static_cast<int>(feature.size()) != classes) throw DataError("rule base: ragged membership bank");
    for (const auto& jr : j.at("rules")) {
        FuzzyRule r;
        r.antecedent = jr.at("antecedent").get<std::vector<int>>();
        r.consequent = jr.at("consequent").get<int>();
        r.certainty = jr.at("certainty").get<double>();
        r.class_strengths = jr.value("class_strengths", std::vector<double>{});
        if (r.antecedent.size() != rb.bank.feature_count()) throw DataError("rule base: antecedent width mismatch");
        for (int a : r.antecedent)
            if (a < 0 || a >= classes) throw DataError("rule base: antecedent index out of range");
        if (r.consequent < 1 || r.consequent > classes) throw DataError("rule base: consequent out of range");
        rb.rules.push_back(std::move(r));
    }
    const auto tnorm = j.value("tnorm", std::string{"product"});
    const auto agg = j.value("aggregation", std::string{"sum"});
    if (tnorm != "product" && tnorm != "sum") throw DataError("rule base: unknown tnorm '" + tnorm + "'");
    if (agg != "sum" && agg != "max") throw DataError("rule base: unknown aggregation '" + agg + "'");
    rb.options.tnorm = tnorm == "product" ? TNorm::product : TNorm::sum;
    rb.options.aggregation = agg == "sum" ? RuleAggregation::sum : RuleAggregation::max;
    rb.skipped_samples = j.value("skipped_samples", std::size_t{0});
    return rb;
}

std::string dump_model(const StoredModel& model) {
    Json doc;
    doc["format"] = "aefrc-model";
    doc["version"] = kModelFormatVersion;
    doc["preprocessing"] = to_json(model.preproc);
    doc["encoder"] = to_json(model.encoder);
    doc["class_names"] = model.class_names;
    return doc.dump(2);
}

StoredModel parse_model(const std::string& text) {
    const Json doc = parse_document(text, "model file");
    check_header(doc, "aefrc-model", kModelFormatVersion);
    StoredModel model;
    try {
        model.preproc = preproc_from_json(doc.at("preprocessing"));
        model.encoder = network_from_json(doc.at("encoder"));
        model.class_names = doc.at("class_names").get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
    if (model.preproc.output_width() != model.encoder.input_width())
        throw DataError("model file: preprocessing emits " + std::to_string(model.preproc.output_width()) +
                        " columns but the encoder expects " + std::to_string(model.encoder.input_width()));
    return model;
}

std::string dump_rulebase(const RuleBase& rb) {
    Json doc = to_json(rb);
    doc["format"] = "aefrc-rulebase";
    doc["version"] = kRuleBaseFormatVersion;
    return doc.dump(2);
}

RuleBase parse_rulebase(const std::string& text) {
    const Json doc = parse_document(text, "rule base file");
    check_header(doc, "aefrc-rulebase", kRuleBaseFormatVersion);
    try {
        return rulebase_from_json(doc);
    } catch (const Json::exception& e) {
        throw DataError(std::string("rule base file: ") + e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace aefrc
