// Copyright 2026 The Tandem Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tandem/common.hpp"
#include "tandem/decision_rule.hpp"
#include "tandem/profiles.hpp"
#include "tandem/schedule.hpp"
#include "tandem/signals.hpp"

namespace tandem::io {

using json = nlohmann::json;

/// I/O failure: unreadable file, malformed JSON.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": " + e.what());
  }
}

inline json load_json(const std::string& path) { return parse_json_text(read_file(path), path); }

/// 17 significant digits (%.17g), enough to read back the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Signal models
// ---------------------------------------------------------------------------

struct ResolvedModel {
  SignalModel model;
  json spec;  // the declaration as given, plus derived fields
};

inline double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ModelError(std::string("model: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::vector<double> vector_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw ModelError(std::string("model: '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ModelError(std::string("model: '") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

/// {"p0": .., "p1": ..} or {"support": [..], "f0": [..], "f1": [..]}; the
/// latter is reduced to a binary model by the likelihood-ratio quantizer.
inline ResolvedModel model_from_json(const json& j) {
  if (!j.is_object()) throw ModelError("model must be a JSON object");
  json spec = j;
  if (j.contains("support")) {
    DiscreteGeneralModel general(vector_field(j, "support"), vector_field(j, "f0"), vector_field(j, "f1"));
    SignalModel m = quantize(general);
    spec["quantized"] = {{"p0", m.p0()}, {"p1", m.p1()}};
    return {m, spec};
  }
  SignalModel m(number_field(j, "p0"), number_field(j, "p1"));
  if (m.relabeled()) spec["relabeled"] = {{"p0", m.p0()}, {"p1", m.p1()}};
  return {m, spec};
}

/// Command-line form: "p0,p1", inline JSON, or "@file.json".
inline json model_spec_json(std::string_view text) {
  if (text.empty()) throw ModelError("empty model spec");
  if (text.front() == '@') return load_json(std::string(text.substr(1)));
  if (text.front() == '{') return parse_json_text(std::string(text), "model");
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) throw ModelError("model spec must look like 'p0,p1'");
  auto number = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ModelError("model spec: cannot read number '" + std::string(s) + "'");
    }
    return v;
  };
  return json{{"p0", number(text.substr(0, comma))}, {"p1", number(text.substr(comma + 1))}};
}

inline ResolvedModel parse_model(std::string_view text) { return model_from_json(model_spec_json(text)); }

/// Command-line form of a profile: inline JSON objects are parsed, anything
/// else stays a name.
inline json profile_spec_json(std::string_view text) {
  if (!text.empty() && text.front() == '{') return parse_json_text(std::string(text), "profile");
  return std::string(text);
}

/// Replaces "@file.json" by the file's contents so the profile entry is self-contained.
inline json inline_profile_spec(const json& spec) {
  if (spec.is_string()) {
    const auto text = spec.get<std::string>();
    if (!text.empty() && text.front() == '@') return load_json(text.substr(1));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

inline std::optional<BaselineKind> baseline_from_string(std::string_view name) {
  for (BaselineKind k : {BaselineKind::Constant0, BaselineKind::Constant1, BaselineKind::Copy,
                         BaselineKind::FollowSignal}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

inline std::optional<RoleKind> role_from_string(std::string_view name) {
  for (RoleKind k : {RoleKind::Preamble, RoleKind::SFirst, RoleKind::SBody, RoleKind::SRTransient, RoleKind::RFirst,
                     RoleKind::RBody, RoleKind::RSTransient}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

inline RuleEntry entry_from_json(const json& j) {
  if (j.is_number()) {
    const double v = j.get<double>();
    require(v >= 0.0 && v <= 1.0, "custom profile: probability outside [0, 1]");
    return {RuleEntry::Kind::Literal, v};
  }
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "1/m") return {RuleEntry::Kind::InverseSegment, 0.0};
    if (s == "1-1/m") return {RuleEntry::Kind::OneMinusInverseSegment, 0.0};
  }
  throw ContractError("custom profile: entry must be a probability, \"1/m\" or \"1-1/m\", got " + j.dump());
}

inline json entry_to_json(const RuleEntry& e) {
  switch (e.kind) {
    case RuleEntry::Kind::InverseSegment: return "1/m";
    case RuleEntry::Kind::OneMinusInverseSegment: return "1-1/m";
    case RuleEntry::Kind::Literal: break;
  }
  return e.value;
}

/// A rule is either a baseline name or an object mapping window strings
/// ("01": oldest decision first) to one entry (both signals) or a pair
/// [P(1 | s=0), P(1 | s=1)]. Windows not listed come from `base`.
inline RuleTemplate rule_from_json(const json& j, int K, const RuleTemplate* base) {
  if (j.is_string()) {
    const auto kind = baseline_from_string(j.get<std::string>());
    require(kind.has_value(), "custom profile: unknown rule name '" + j.get<std::string>() + "'");
    return RuleTemplate::from(baseline_rule(*kind, K));
  }
  require(j.is_object(), "custom profile: rule must be a name or an object keyed by window");
  RuleTemplate t;
  t.K = K;
  t.entries.assign(2 * window_count(K), RuleEntry{});
  std::vector<bool> seen(window_count(K), false);
  for (const auto& [key, value] : j.items()) {
    require(key.size() == static_cast<std::size_t>(K), "custom profile: window '" + key + "' does not have length K");
    const Window u = window_from_string(key);
    if (value.is_array()) {
      require(value.size() == 2, "custom profile: window '" + key + "' needs exactly two entries");
      t.entries[2 * u] = entry_from_json(value[0]);
      t.entries[2 * u + 1] = entry_from_json(value[1]);
    } else {
      t.entries[2 * u] = t.entries[2 * u + 1] = entry_from_json(value);
    }
    seen[u] = true;
  }
  for (Window u = 0; u < window_count(K); ++u) {
    if (seen[u]) continue;
    require(base != nullptr, "custom profile: default rule misses window '" + window_to_string(u, K) + "'");
    t.entries[2 * u] = base->entries[2 * u];
    t.entries[2 * u + 1] = base->entries[2 * u + 1];
  }
  return t;
}

inline json rule_to_json(const RuleTemplate& t) {
  json out = json::object();
  for (Window u = 0; u < window_count(t.K); ++u) {
    out[window_to_string(u, t.K)] = json::array({entry_to_json(t.entries[2 * u]), entry_to_json(t.entries[2 * u + 1])});
  }
  return out;
}

inline json rule_to_json(const DecisionRule& rule) { return rule_to_json(RuleTemplate::from(rule)); }

/// {"K": 2, "default": <rule>, "roles": {"s_first": <rule>, ..},
///  "agents": {"1": <rule>, ..}, "name": ".."}
inline CustomProfileSpec custom_spec_from_json(const json& j) {
  require(j.is_object(), "custom profile must be a JSON object");
  require(j.contains("K") && j.at("K").is_number_integer(), "custom profile: integer 'K' required");
  CustomProfileSpec spec;
  spec.K = j.at("K").get<int>();
  check_window_length(spec.K);
  spec.fallback = rule_from_json(j.value("default", json("constant0")), spec.K, nullptr);
  if (j.contains("roles")) {
    for (const auto& [key, value] : j.at("roles").items()) {
      const auto kind = role_from_string(key);
      require(kind.has_value(), "custom profile: unknown role '" + key + "'");
      spec.roles[*kind] = rule_from_json(value, spec.K, &spec.fallback);
    }
  }
  if (j.contains("agents")) {
    for (const auto& [key, value] : j.at("agents").items()) {
      AgentIndex n = 0;
      const auto res = std::from_chars(key.data(), key.data() + key.size(), n);
      require(res.ec == std::errc() && res.ptr == key.data() + key.size() && n >= 1,
              "custom profile: agent key '" + key + "' is not a positive integer");
      spec.agents[n] = rule_from_json(value, spec.K, &spec.fallback);
    }
  }
  spec.descriptor = j.value("name", std::string("custom"));
  return spec;
}

/// Profile spec: "designed", "myopic[:K]", "constant0[:K]", "constant1[:K]",
/// "copy[:K]", "signal[:K]", "@file.json", or a custom-profile JSON object.
/// `horizon` is how far a myopic profile is built eagerly.
inline Profile make_profile(const json& spec, const SignalModel& model, AgentIndex horizon) {
  if (spec.is_object()) return custom_profile(custom_spec_from_json(spec), model);
  require(spec.is_string(), "profile spec must be a string or an object");
  const auto text = spec.get<std::string>();
  require(!text.empty(), "empty profile spec");
  if (text.front() == '@') return custom_profile(custom_spec_from_json(load_json(text.substr(1))), model);

  std::string name = text;
  std::optional<int> K;
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    name = text.substr(0, colon);
    const std::string_view k = std::string_view(text).substr(colon + 1);
    int v = 0;
    const auto res = std::from_chars(k.data(), k.data() + k.size(), v);
    require(res.ec == std::errc() && res.ptr == k.data() + k.size(), "profile spec: bad window length in '" + text + "'");
    check_window_length(v);
    K = v;
  }
  if (name == "designed") {
    require(K.value_or(designed::kWindowLength) == designed::kWindowLength, "the designed profile has K = 2");
    return designed_profile(model);
  }
  if (name == "myopic") return myopic_profile(model, K.value_or(1), std::max<AgentIndex>(horizon, 1));
  if (const auto kind = baseline_from_string(name)) return baseline_profile(*kind, K.value_or(1));
  throw ContractError("unknown profile '" + text + "'");
}

}  // namespace tandem::io
