#pragma once

// JSON file formats (schema "icek/1") for models, gambles and certificates.
//
// Model:
//   {"schema": "icek/1", "states": ["a", "b"], "initial": [[p_a, p_b], ...],
//    "dynamics": {"type": "stationary", "transitions": {"a": [[...]], "b": [[...]]}}}
//   time-varying: {"type": "time_varying", "operators": [{"a": ..., "b": ...}, ...]}
//   general:      {"type": "general", "default": [[...]], "situations": {"a.b": [[...]]}}
// Every credal set is a list of extreme-point rows. Situation keys are state
// names joined by "."; the initial situation is the empty string.
//
// Gamble:      {"schema": "icek/1", "n": 2, "values": [...]} in lexicographic order.
// Certificate: {"schema": "icek/1", "alpha": a, "horizon": n,
//               "selection": {"n_states": k, "depth": d, "levels": [[...], ...]}}
// where level j of a selection lists the gambles of all length-j situations
// back to back (|X|^(j+1) numbers).
//
// Doubles are written in shortest round-trip form, so write(parse(write(x)))
// reproduces the text exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "icek/chain.hpp"
#include "icek/credal.hpp"
#include "icek/errors.hpp"
#include "icek/tree.hpp"
#include "icek/witness.hpp"

namespace icek::io {

using nlohmann::json;

inline constexpr const char* kSchema = "icek/1";

// Rows may deviate from summing to one by this much; they are renormalized.
inline constexpr double kRowSumTol = 1e-9;

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

namespace detail {

// A JSON value together with its location, for error messages.
class Field {
 public:
  Field(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return value_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError((path_.empty() ? std::string("<root>") : path_) + ": " + what);
  }

  Field operator[](const std::string& key) const {
    if (!value_.is_object()) fail("expected an object");
    auto it = value_.find(key);
    if (it == value_.end()) fail("missing field \"" + key + "\"");
    return Field(*it, path_.empty() ? key : path_ + "." + key);
  }
  Field at(std::size_t i) const { return Field(value_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  bool has(const std::string& key) const { return value_.is_object() && value_.contains(key); }

  std::size_t size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }

  std::size_t count() const {
    if (!value_.is_number_unsigned()) fail("expected a non-negative integer");
    return value_.get<std::size_t>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i).number();
    return out;
  }

 private:
  const json& value_;
  std::string path_;
};

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
}

inline void check_schema(const Field& root) {
  if (root.raw().is_object() && !root.has("schema")) root.fail("missing field \"schema\"");
  if (root["schema"].string() != kSchema) root["schema"].fail("unsupported schema, expected icek/1");
}

inline Pmf parse_row(const Field& f, std::size_t n_states, std::vector<std::string>& warnings) {
  std::vector<double> row = f.numbers();
  if (row.size() != n_states)
    f.fail("size mismatch: row has " + std::to_string(row.size()) + " entries, expected " +
           std::to_string(n_states));
  double total = 0.0;
  for (double v : row) total += v;
  if (!(std::abs(total - 1.0) <= kRowSumTol)) f.fail("row sums to " + std::to_string(total) + ", expected 1");
  if (std::abs(total - 1.0) > kValidationTol) {
    for (double& v : row) v /= total;
    warnings.push_back(f.path() + ": row renormalized (sum was " + std::to_string(total) + ")");
  }
  try {
    return Pmf(std::move(row));
  } catch (const InputError& e) {
    f.fail(e.what());
  }
}

inline CredalSet parse_credal(const Field& f, std::size_t n_states, std::vector<std::string>& warnings) {
  const std::size_t count = f.size();
  if (count == 0) f.fail("credal set needs at least one extreme point");
  std::vector<Pmf> extremes;
  for (std::size_t i = 0; i < count; ++i) extremes.push_back(parse_row(f.at(i), n_states, warnings));
  return CredalSet(std::move(extremes));
}

inline LowerTransitionOperator parse_operator(const Field& f, const std::vector<std::string>& names,
                                              std::vector<std::string>& warnings) {
  if (!f.raw().is_object()) f.fail("expected an object keyed by state name");
  for (const auto& name : names)
    if (!f.raw().contains(name)) f.fail("missing entry for state \"" + name + "\"");
  if (f.raw().size() != names.size()) f.fail("entries for unknown states");
  std::vector<CredalSet> sets;
  for (const auto& name : names) sets.push_back(parse_credal(f[name], names.size(), warnings));
  return LowerTransitionOperator(std::move(sets));
}

inline json credal_json(const CredalSet& k) {
  json out = json::array();
  for (const Pmf& p : k.extremes()) out.push_back(p.probs());
  return out;
}

inline json operator_json(const LowerTransitionOperator& op, const std::vector<std::string>& names) {
  json out = json::object();
  for (std::size_t x = 0; x < names.size(); ++x) out[names[x]] = credal_json(op[x]);
  return out;
}

}  // namespace detail

inline std::string situation_string(const Situation& s, const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < s.length(); ++i) {
    if (i > 0) out += '.';
    out += names.at(s[i]);
  }
  return out;
}

inline Situation parse_situation(std::string_view text, const std::vector<std::string>& names) {
  std::vector<State> states;
  if (text.empty()) return Situation();
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = text.find('.', start);
    const std::string_view part = text.substr(start, dot == std::string_view::npos ? text.npos : dot - start);
    const auto it = std::find(names.begin(), names.end(), part);
    if (it == names.end()) throw ParseError("unknown state \"" + std::string(part) + "\" in situation");
    states.push_back(static_cast<State>(it - names.begin()));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return Situation(std::move(states));
}

inline ChainModel parse_model(std::string_view text, std::vector<std::string>& warnings) {
  const json doc = detail::parse_json(text);
  const detail::Field root(doc, "");
  detail::check_schema(root);

  const detail::Field states = root["states"];
  std::vector<std::string> names;
  for (std::size_t i = 0; i < states.size(); ++i) {
    names.push_back(states.at(i).string());
    if (names.back().empty() || names.back().find('.') != std::string::npos)
      states.at(i).fail("state names must be non-empty and must not contain '.'");
    if (std::find(names.begin(), names.end() - 1, names.back()) != names.end() - 1)
      states.at(i).fail("duplicate state name");
  }
  if (names.empty()) states.fail("at least one state is required");

  CredalSet initial = detail::parse_credal(root["initial"], names.size(), warnings);
  const detail::Field dyn = root["dynamics"];
  const std::string type = dyn["type"].string();
  try {
    if (type == "stationary")
      return ChainModel(names, std::move(initial),
                        StationaryDynamics{detail::parse_operator(dyn["transitions"], names, warnings)});
    if (type == "time_varying") {
      const detail::Field ops = dyn["operators"];
      TimeVaryingDynamics tv;
      for (std::size_t i = 0; i < ops.size(); ++i)
        tv.ops.push_back(detail::parse_operator(ops.at(i), names, warnings));
      if (tv.ops.empty()) ops.fail("at least one operator is required");
      return ChainModel(names, std::move(initial), std::move(tv));
    }
    if (type == "general") {
      GeneralDynamics g{{}, detail::parse_credal(dyn["default"], names.size(), warnings)};
      const detail::Field sits = dyn["situations"];
      if (!sits.raw().is_object()) sits.fail("expected an object keyed by situation");
      for (auto it = sits.raw().begin(); it != sits.raw().end(); ++it) {
        const std::string& key = it.key();
        const detail::Field entry = sits[key];
        Situation s;
        try {
          s = parse_situation(key, names);
        } catch (const ParseError& e) {
          entry.fail(e.what());
        }
        if (s.is_initial()) entry.fail("the initial situation is described by \"initial\"");
        g.local.emplace(std::move(s), detail::parse_credal(entry, names.size(), warnings));
      }
      return ChainModel(names, std::move(initial), std::move(g));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const InputError& e) {
    dyn.fail(e.what());
  }
  dyn["type"].fail("unknown dynamics type \"" + type + "\"");
}

inline ChainModel parse_model(std::string_view text) {
  std::vector<std::string> warnings;
  return parse_model(text, warnings);
}

inline std::string write_model(const ChainModel& m) {
  json doc;
  doc["schema"] = kSchema;
  doc["states"] = m.states();
  doc["initial"] = detail::credal_json(m.initial());
  json dyn;
  if (const auto* st = std::get_if<StationaryDynamics>(&m.dynamics())) {
    dyn["type"] = "stationary";
    dyn["transitions"] = detail::operator_json(st->op, m.states());
  } else if (const auto* tv = std::get_if<TimeVaryingDynamics>(&m.dynamics())) {
    dyn["type"] = "time_varying";
    dyn["operators"] = json::array();
    for (const auto& op : tv->ops) dyn["operators"].push_back(detail::operator_json(op, m.states()));
  } else {
    const auto& g = std::get<GeneralDynamics>(m.dynamics());
    dyn["type"] = "general";
    dyn["default"] = detail::credal_json(g.fallback);
    dyn["situations"] = json::object();
    for (const auto& [s, k] : g.local) dyn["situations"][situation_string(s, m.states())] = detail::credal_json(k);
  }
  doc["dynamics"] = std::move(dyn);
  return doc.dump(2) + "\n";
}

inline NGamble parse_gamble(std::string_view text, const ChainModel& m) {
  const json doc = detail::parse_json(text);
  const detail::Field root(doc, "");
  detail::check_schema(root);
  const std::size_t n = root["n"].count();
  std::vector<double> values = root["values"].numbers();
  const std::size_t expected = checked_power(m.n_states(), n);
  if (values.size() != expected)
    root["values"].fail("size mismatch: got " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(expected) + " = " + std::to_string(m.n_states()) + "^" +
                        std::to_string(n));
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i])) root["values"].at(i).fail("non-finite value");
  return NGamble(m.n_states(), n, std::move(values));
}

inline std::string write_gamble(const NGamble& f) {
  json doc;
  doc["schema"] = kSchema;
  doc["n"] = f.depth();
  doc["values"] = f.values();
  return doc.dump(2) + "\n";
}

inline std::string write_certificate(const Certificate& cert) {
  json doc;
  doc["schema"] = kSchema;
  doc["alpha"] = cert.alpha;
  doc["horizon"] = cert.horizon;
  json sel;
  sel["n_states"] = cert.selection.n_states();
  sel["depth"] = cert.selection.depth();
  sel["levels"] = json::array();
  for (std::size_t k = 0; k < cert.selection.depth(); ++k) sel["levels"].push_back(cert.selection.level(k));
  doc["selection"] = std::move(sel);
  return doc.dump(2) + "\n";
}

inline Certificate parse_certificate(std::string_view text) {
  const json doc = detail::parse_json(text);
  const detail::Field root(doc, "");
  detail::check_schema(root);
  const detail::Field sel = root["selection"];
  const std::size_t ns = sel["n_states"].count();
  const std::size_t depth = sel["depth"].count();
  if (ns == 0) sel["n_states"].fail("must be positive");
  const detail::Field levels = sel["levels"];
  if (levels.size() != depth)
    levels.fail("size mismatch: got " + std::to_string(levels.size()) + " levels, expected " +
                std::to_string(depth));
  Certificate cert{root["alpha"].number(), Selection(ns, depth), root["horizon"].count()};
  for (std::size_t k = 0; k < depth; ++k) {
    std::vector<double> values = levels.at(k).numbers();
    const std::size_t expected = cert.selection.level(k).size();
    if (values.size() != expected)
      levels.at(k).fail("size mismatch: got " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(expected));
    cert.selection.level(k) = std::move(values);
  }
  return cert;
}

struct Verification {
  bool valid = false;
  std::string reason;
  // Set when domination fails: the first violated length-horizon sequence.
  std::optional<Path> violated_sequence;
  std::vector<DesirabilityViolation> desirability;
};

// Re-checks a serialized certificate from its data alone.
inline Verification verify_certificate(const ChainModel& m, const NGamble& f, std::string_view text) {
  const Certificate cert = parse_certificate(text);
  Verification v;
  if (cert.selection.n_states() != m.n_states()) {
    v.reason = "selection state count differs from the model";
    return v;
  }
  if (cert.horizon < f.depth()) {
    v.reason = "certificate horizon is shorter than the gamble depth";
    return v;
  }
  v.desirability = is_almost_desirable(m, cert.selection).violations;
  if (!v.desirability.empty()) {
    v.reason = "selection is not almost-desirable";
    return v;
  }
  v.violated_sequence = find_domination_violation(f, cert.alpha, cert.selection, cert.horizon);
  if (v.violated_sequence) {
    v.reason = "f - alpha does not dominate the capital process";
    return v;
  }
  v.valid = true;
  return v;
}

}  // namespace icek::io
