#pragma once

// JSON conversions for the persisted artifacts. Doubles are written by
// nlohmann/json with shortest round-trip formatting, so a dump/parse
// cycle reproduces every parameter bit-exactly.

#include "aefrc/mf.hpp"
#include "aefrc/network.hpp"
#include "aefrc/rules.hpp"

#include <json.hpp>

namespace aefrc {

using Json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kRuleBaseFormatVersion = 1;

Json to_json(const MembershipFunction& mf);
MembershipFunction mf_from_json(const Json& j);

Json to_json(const PreprocSpec& spec);
PreprocSpec preproc_from_json(const Json& j);

Json to_json(const Network& net);
Network network_from_json(const Json& j);

Json to_json(const RuleBase& rb);
RuleBase rulebase_from_json(const Json& j);

Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

/// Preprocessing + encoder, the "model" half of a stored classifier.
struct StoredModel {
    PreprocSpec preproc;
    Network encoder;
    std::vector<std::string> class_names;
};

std::string dump_model(const StoredModel& model);
StoredModel parse_model(const std::string& text);
std::string dump_rulebase(const RuleBase& rb);
RuleBase parse_rulebase(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace aefrc
