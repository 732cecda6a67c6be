// icek: command-line front end for the natural-extension library.
//
// Exit codes: 0 success or valid certificate, 1 invalid certificate,
// 2 input error (including usage errors), 3 numerical failure.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "icek/chain.hpp"
#include "icek/errors.hpp"
#include "icek/extension.hpp"
#include "icek/io.hpp"
#include "icek/witness.hpp"

namespace {

using namespace icek;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

// Shortest round-trip decimal, independent of the C and C++ locales.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ChainModel load_model(const std::string& path) {
  std::vector<std::string> warnings;
  try {
    ChainModel m = io::parse_model(read_file(path), warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << path << ": " << w << "\n";
    return m;
  } catch (const io::ParseError& e) {
    throw io::ParseError(path + ": " + e.what());
  }
}

NGamble load_gamble(const std::string& path, const ChainModel& m) {
  try {
    return io::parse_gamble(read_file(path), m);
  } catch (const io::ParseError& e) {
    throw io::ParseError(path + ": " + e.what());
  }
}

// "a,b" -> StateSet by state name. The empty string is the empty set.
StateSet parse_set(const std::string& text, const ChainModel& m) {
  std::vector<State> members;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string name = text.substr(start, comma - start);
    const auto& names = m.states();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError("--set: unknown state \"" + name + "\"");
    members.push_back(static_cast<State>(it - names.begin()));
    start = comma + 1;
  }
  return StateSet(m.n_states(), members);
}

std::string path_string(const Path& w, const ChainModel& m) {
  return io::situation_string(Situation(w), m.states());
}

bool want_json(const std::string& format) { return format == "json"; }

void print_limit(const LimitResult& r, bool as_json) {
  if (as_json) {
    json out;
    out["value"] = r.value;
    out["horizon"] = r.horizon;
    out["trace"] = r.trace;
    out["converged"] = r.converged;
    out["stable_from"] = r.stable_from;
    out["direction"] = to_string(r.direction);
    out["vvs_only"] = r.vvs_only;
    std::cout << out.dump(2) << "\n";
    return;
  }
  std::cout << "horizon\tvalue\tdelta\n";
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    std::cout << k + 1 << "\t" << num(r.trace[k]) << "\t";
    std::cout << (k == 0 ? std::string("-") : num(r.trace[k] - r.trace[k - 1])) << "\n";
  }
  std::cout << "value=" << num(r.value) << "\n"
            << "horizon=" << r.horizon << "\n"
            << "converged=" << (r.converged ? "true" : "false") << "\n"
            << "direction=" << to_string(r.direction) << "\n"
            << "vvs_only=" << (r.vvs_only ? "true" : "false") << "\n";
}

struct Args {
  std::string format = "text";
  std::string model, gamble, cert, output, set, mode = "reach", horizons = "1,2,3,4";
  std::string formulation = "value-process";
  std::size_t horizon = 0, trials = 0, max_horizon = 64, window = 3;
  std::uint64_t seed = 1;
  double tol = 1e-6;
};

int cmd_nmeas(const Args& a) {
  const ChainModel m = load_model(a.model);
  const NGamble f = load_gamble(a.gamble, m);
  const double lower = williams_nmeasurable(m, f);
  const double upper = upper_nmeasurable(m, f);
  if (want_json(a.format)) {
    std::cout << json{{"lower", lower}, {"upper", upper}, {"n", f.depth()}}.dump(2) << "\n";
  } else {
    std::cout << "lower=" << num(lower) << "\nupper=" << num(upper) << "\n";
  }
  return kExitOk;
}

int cmd_limit(const Args& a, bool reach) {
  const ChainModel m = load_model(a.model);
  const StateSet s = parse_set(a.set, m);
  const LimitOptions opt{a.tol, a.max_horizon, a.window};
  print_limit(reach ? reach_limit(m, s, opt) : safety_limit(m, s, opt), want_json(a.format));
  return kExitOk;
}

int cmd_witness_search(const Args& a) {
  const ChainModel m = load_model(a.model);
  const NGamble f = load_gamble(a.gamble, m);
  WitnessOptions opt;
  if (a.formulation == "direct") opt.formulation = WitnessFormulation::Direct;
  const std::size_t horizon = a.horizon == 0 ? f.depth() : a.horizon;
  const Certificate cert = lp_witness_search(m, f, horizon, opt);
  const std::string text = io::write_certificate(cert);
  if (a.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(a.output, std::ios::binary);
    if (!out) throw InputError("cannot write " + a.output);
    out << text;
    std::cerr << "alpha=" << num(cert.alpha) << " horizon=" << cert.horizon << " -> " << a.output << "\n";
  }
  return kExitOk;
}

int cmd_witness_verify(const Args& a) {
  const ChainModel m = load_model(a.model);
  const NGamble f = load_gamble(a.gamble, m);
  io::Verification v;
  try {
    v = io::verify_certificate(m, f, read_file(a.cert));
  } catch (const io::ParseError& e) {
    throw io::ParseError(a.cert + ": " + e.what());
  }
  if (want_json(a.format)) {
    json out{{"valid", v.valid}, {"reason", v.reason}};
    if (v.violated_sequence) out["violated_sequence"] = path_string(*v.violated_sequence, m);
    json bad = json::array();
    for (const auto& d : v.desirability)
      bad.push_back({{"situation", io::situation_string(d.situation, m.states())}, {"lower", d.lower}});
    out["desirability_violations"] = std::move(bad);
    std::cout << out.dump(2) << "\n";
  } else if (v.valid) {
    std::cout << "valid\n";
  } else {
    std::cout << "invalid: " << v.reason << "\n";
    if (v.violated_sequence) std::cout << "violated sequence: " << path_string(*v.violated_sequence, m) << "\n";
    for (const auto& d : v.desirability)
      std::cout << "situation \"" << io::situation_string(d.situation, m.states())
                << "\": lower expectation " << num(d.lower) << "\n";
  }
  return v.valid ? kExitOk : kExitInvalid;
}

int cmd_oracle(const Args& a) {
  const ChainModel m = load_model(a.model);
  const StateSet s = parse_set(a.set, m);
  const PreciseChain pc = as_precise_chain(m);
  const double value = a.mode == "reach" ? precise_reach_probability(pc.transition, pc.initial, s)
                                         : precise_safety_probability(pc.transition, pc.initial, s);
  if (want_json(a.format))
    std::cout << json{{"mode", a.mode}, {"value", value}}.dump(2) << "\n";
  else
    std::cout << a.mode << "=" << num(value) << "\n";
  return kExitOk;
}

std::vector<std::size_t> parse_horizons(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::size_t v = 0;
    const char* first = text.data() + start;
    const char* last = text.data() + comma;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
      throw InputError("--horizons: expected comma-separated integers, got \"" + text + "\"");
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

int cmd_gap_search(const Args& a) {
  const ChainModel tmpl = load_model(a.model);
  const StateSet b = parse_set(a.set, tmpl);
  const auto horizons = parse_horizons(a.horizons);
  // Trial 0 is the template itself; later trials are random precise members.
  std::mt19937_64 rng(a.seed);
  const ModelFamily family = [&](std::size_t t) {
    return t == 0 ? tmpl : sample_precise_member(tmpl, rng);
  };
  const LimitOptions opt{a.tol, a.max_horizon, a.window};
  const GapReport report = williams_gap_search(family, b, horizons, a.trials, opt);

  if (want_json(a.format)) {
    json rows = json::array();
    for (const auto& t : report.trials)
      rows.push_back({{"trial", t.trial},
                      {"vvs", t.vvs.value},
                      {"vvs_converged", t.vvs.converged},
                      {"horizons", t.horizons},
                      {"williams", t.williams},
                      {"williams_best", t.williams_value},
                      {"gap", t.gap}});
    std::cout << json{{"trials", rows}, {"gaps", report.gap_count()}}.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "trial\tE_V\tconverged\tE_W\tgap\n";
  for (const auto& t : report.trials)
    std::cout << t.trial << "\t" << num(t.vvs.value) << "\t" << (t.vvs.converged ? "true" : "false") << "\t"
              << num(t.williams_value) << "\t" << (t.gap ? "yes" : "no") << "\n";
  std::cout << "gaps=" << report.gap_count() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Williams and Ville-Vovk-Shafer natural extensions for imprecise Markov chains"};
  app.require_subcommand(1);
  Args a;
  app.add_option("--format", a.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  auto* nmeas = app.add_subcommand("nmeas", "Lower and upper extension of an n-measurable gamble");
  nmeas->add_option("model", a.model)->required();
  nmeas->add_option("gamble", a.gamble)->required();

  auto limit_opts = [&a](CLI::App* sub) {
    sub->add_option("model", a.model)->required();
    sub->add_option("--set", a.set, "Comma-separated state names")->required();
    sub->add_option("--tol", a.tol)->capture_default_str();
    sub->add_option("--max-horizon", a.max_horizon)->capture_default_str();
    sub->add_option("--window", a.window)->capture_default_str();
  };
  auto* reach = app.add_subcommand("reach", "Lower probability of ever reaching a set");
  limit_opts(reach);
  auto* safety = app.add_subcommand("safety", "Lower probability of staying in a set forever");
  limit_opts(safety);

  auto* witness = app.add_subcommand("witness", "Selection certificates");
  witness->require_subcommand(1);
  auto* search = witness->add_subcommand("search", "Find an optimal certificate by linear programming");
  search->add_option("model", a.model)->required();
  search->add_option("gamble", a.gamble)->required();
  search->add_option("--horizon", a.horizon, "Selection depth (default: gamble depth)");
  search->add_option("-o,--output", a.output, "Write the certificate here instead of stdout");
  search->add_option("--formulation", a.formulation)
      ->check(CLI::IsMember({"value-process", "direct"}))
      ->capture_default_str();
  auto* verify = witness->add_subcommand("verify", "Re-check a certificate file");
  verify->add_option("model", a.model)->required();
  verify->add_option("gamble", a.gamble)->required();
  verify->add_option("cert", a.cert)->required();

  auto* oracle = app.add_subcommand("oracle", "Classical oracles");
  oracle->require_subcommand(1);
  auto* precise = oracle->add_subcommand("precise", "Reach or safety probability of a precise chain");
  precise->add_option("model", a.model)->required();
  precise->add_option("--set", a.set)->required();
  precise->add_option("--mode", a.mode)->check(CLI::IsMember({"reach", "safety"}))->capture_default_str();

  auto* gap = app.add_subcommand("gap-search", "Compare the two extensions on safety events");
  gap->add_option("model", a.model, "Model template")->required();
  gap->add_option("--set", a.set)->required();
  gap->add_option("--trials", a.trials)->required();
  gap->add_option("--seed", a.seed)->capture_default_str();
  gap->add_option("--horizons", a.horizons, "Comma-separated LP horizons")->capture_default_str();
  gap->add_option("--tol", a.tol)->capture_default_str();
  gap->add_option("--max-horizon", a.max_horizon)->capture_default_str();

  for (auto* sub : {nmeas, reach, safety, search, verify, precise, gap})
    sub->add_option("--format", a.format)->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitInput;
  }

  try {
    if (*nmeas) return cmd_nmeas(a);
    if (*reach) return cmd_limit(a, true);
    if (*safety) return cmd_limit(a, false);
    if (*search) return cmd_witness_search(a);
    if (*verify) return cmd_witness_verify(a);
    if (*precise) return cmd_oracle(a);
    if (*gap) return cmd_gap_search(a);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const UnsupportedOperation& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  std::cerr << app.help();
  return kExitInput;
}
