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

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/common.hpp"
#include "tandem/exact_chain.hpp"
#include "tandem/game.hpp"
#include "tandem/montecarlo.hpp"
#include "tandem/profile_io.hpp"
#include "tandem/profiles.hpp"
#include "tandem/schedule.hpp"
#include "tandem/signals.hpp"

namespace tandem::cli {

using json = nlohmann::json;
using io::format_double;

inline constexpr const char* kSeedEnv = "TANDEM_SEED";

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"schedule", "exact", "series", "simulate", "equilibrium", "k1diag"};
  return names;
}

/// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;          // unreadable file, bad JSON
inline constexpr int kExitInvalidModel = 2;   // BLR violation, p0 == p1, ...
inline constexpr int kExitZeroProbability = 3;
inline constexpr int kExitContract = 4;       // any other rejected parameter
inline constexpr int kExitInternal = 5;

/// Everything a run needs. Unset fields take per-command defaults in
/// `resolve`; the resolved form is what gets embedded in outputs.
struct ExperimentConfig {
  std::string command;
  std::optional<json> model;    // {"p0", "p1"} or {"support", "f0", "f1"}
  std::optional<json> profile;  // name string or custom-profile object
  std::optional<AgentIndex> n;
  std::optional<std::uint64_t> m;
  std::optional<std::uint64_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> theta;  // "prior", "0" or "1"
  std::optional<double> delta;
  std::optional<double> eps;
  std::optional<std::uint64_t> horizon;
  std::optional<AgentIndex> first;
  std::optional<AgentIndex> last;
  std::optional<std::vector<std::uint64_t>> checkpoints;
  std::optional<bool> segment_starts;
  std::optional<std::string> window;  // equilibrium: also report U_n(y; window, s) at agent `first`
  std::optional<std::string> out;
  std::optional<unsigned> workers;
};

namespace detail {

template <class T>
void read_field(const json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ContractError(std::string("config: field '") + key + "' has the wrong type");
  }
}

template <class T>
void write_field(json& j, const char* key, const std::optional<T>& field) {
  if (field) j[key] = *field;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  require(j.is_object(), "config must be a JSON object");
  static const std::vector<std::string> known = {"command", "model", "profile", "n", "m", "reps", "seed", "theta",
                                                 "delta", "eps", "horizon", "first", "last", "checkpoints",
                                                 "segment_starts", "window", "out", "workers", "version"};
  for (const auto& [key, value] : j.items()) {
    require(std::find(known.begin(), known.end(), key) != known.end(), "config: unknown field '" + key + "'");
  }
  ExperimentConfig c;
  c.command = j.value("command", std::string());
  if (j.contains("model")) c.model = j.at("model");
  if (j.contains("profile")) c.profile = j.at("profile");
  detail::read_field(j, "n", c.n);
  detail::read_field(j, "m", c.m);
  detail::read_field(j, "reps", c.reps);
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "theta", c.theta);
  detail::read_field(j, "delta", c.delta);
  detail::read_field(j, "eps", c.eps);
  detail::read_field(j, "horizon", c.horizon);
  detail::read_field(j, "first", c.first);
  detail::read_field(j, "last", c.last);
  detail::read_field(j, "checkpoints", c.checkpoints);
  detail::read_field(j, "segment_starts", c.segment_starts);
  detail::read_field(j, "window", c.window);
  detail::read_field(j, "out", c.out);
  detail::read_field(j, "workers", c.workers);
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  json j = json::object();
  j["command"] = c.command;
  detail::write_field(j, "model", c.model);
  detail::write_field(j, "profile", c.profile);
  detail::write_field(j, "n", c.n);
  detail::write_field(j, "m", c.m);
  detail::write_field(j, "reps", c.reps);
  detail::write_field(j, "seed", c.seed);
  detail::write_field(j, "theta", c.theta);
  detail::write_field(j, "delta", c.delta);
  detail::write_field(j, "eps", c.eps);
  detail::write_field(j, "horizon", c.horizon);
  detail::write_field(j, "first", c.first);
  detail::write_field(j, "last", c.last);
  detail::write_field(j, "checkpoints", c.checkpoints);
  detail::write_field(j, "segment_starts", c.segment_starts);
  detail::write_field(j, "window", c.window);
  detail::write_field(j, "out", c.out);
  detail::write_field(j, "workers", c.workers);
  return j;
}

/// Fields of `over` that are set replace those of `base`.
inline ExperimentConfig merge(ExperimentConfig base, const ExperimentConfig& over) {
  if (!over.command.empty()) base.command = over.command;
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  take(base.model, over.model);
  take(base.profile, over.profile);
  take(base.n, over.n);
  take(base.m, over.m);
  take(base.reps, over.reps);
  take(base.seed, over.seed);
  take(base.theta, over.theta);
  take(base.delta, over.delta);
  take(base.eps, over.eps);
  take(base.horizon, over.horizon);
  take(base.first, over.first);
  take(base.last, over.last);
  take(base.checkpoints, over.checkpoints);
  take(base.segment_starts, over.segment_starts);
  take(base.window, over.window);
  take(base.out, over.out);
  take(base.workers, over.workers);
  return base;
}

/// 1, 10, 100, ... up to `last`, plus `last` itself.
inline std::vector<std::uint64_t> decade_checkpoints(std::uint64_t last, std::uint64_t from = 1) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t c = from; c < last; c *= 10) out.push_back(c);
  out.push_back(last);
  return out;
}

/// Smallest T with 2 * delta^{T+1} / (1 - delta) <= eps / 2, so certified
/// violations lose at most half of eps to truncation.
inline std::uint64_t auto_horizon(double delta, double eps) {
  if (delta == 0.0) return 0;
  std::uint64_t T = 0;
  while (2.0 * truncation_tail(delta, T) > 0.5 * eps) {
    ++T;
    require(T < 100000, "auto horizon: delta too close to 1 for this eps");
  }
  return T;
}

inline std::uint64_t seed_from_env() {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return 0;
  std::uint64_t v = 0;
  const std::string_view s(env);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), std::string(kSeedEnv) + " is not an unsigned integer");
  return v;
}

/// Fills every field the command uses and validates it.
inline ExperimentConfig resolve(ExperimentConfig c) {
  const auto& cmds = commands();
  require(std::find(cmds.begin(), cmds.end(), c.command) != cmds.end(), "unknown command '" + c.command + "'");
  if (!c.model) c.model = json{{"p0", 0.3}, {"p1", 0.7}};
  if (!c.workers) c.workers = 0;
  if (c.profile) c.profile = io::inline_profile_spec(*c.profile);
  const std::string& cmd = c.command;

  if (cmd == "schedule") {
    if (!c.m) c.m = 10;
    require(*c.m >= 1, "schedule: m must be >= 1");
    if (!c.out) c.out = "schedule.csv";
  } else if (cmd == "exact") {
    if (!c.profile) c.profile = "designed";
    if (!c.n) c.n = 1000;
    require(*c.n >= 1, "exact: n must be >= 1");
    if (!c.checkpoints) c.checkpoints = decade_checkpoints(*c.n);
    for (auto v : *c.checkpoints) require(v >= 1 && v <= *c.n, "exact: checkpoint outside [1, n]");
    if (!c.segment_starts) c.segment_starts = false;
    if (!c.out) c.out = "exact.csv";
  } else if (cmd == "series") {
    if (!c.m) c.m = 1000000;
    require(*c.m >= 2, "series: m must be >= 2");
    if (!c.checkpoints) c.checkpoints = decade_checkpoints(*c.m, 10);
    for (auto v : *c.checkpoints) require(v >= 2 && v <= *c.m, "series: checkpoint outside [2, m]");
    if (!c.out) c.out = "series.csv";
  } else if (cmd == "simulate") {
    if (!c.profile) c.profile = "designed";
    if (!c.n) c.n = 1000;
    if (!c.reps) c.reps = 1000;
    if (!c.seed) c.seed = seed_from_env();
    if (!c.theta) c.theta = "prior";
    require(*c.n >= 1, "simulate: n must be >= 1");
    require(*c.reps >= 1, "simulate: reps must be >= 1");
    require(*c.theta == "prior" || *c.theta == "0" || *c.theta == "1", "simulate: theta must be prior, 0 or 1");
    if (!c.checkpoints) c.checkpoints = decade_checkpoints(*c.n);
    for (auto v : *c.checkpoints) require(v >= 1 && v <= *c.n, "simulate: checkpoint outside [1, n]");
    if (!c.out) c.out = "simulate.csv";
  } else if (cmd == "equilibrium") {
    if (!c.profile) c.profile = "designed";
    if (!c.delta) c.delta = 0.5;
    if (!c.eps) c.eps = 0.01;
    if (!c.first) c.first = 1;
    if (!c.last) c.last = 100;
    check_discount(*c.delta);
    require(*c.eps > 0.0, "equilibrium: eps must be positive");
    require(*c.first >= 1 && *c.first <= *c.last, "equilibrium: bad agent range");
    if (!c.horizon) c.horizon = auto_horizon(*c.delta, *c.eps);
    require(2.0 * truncation_tail(*c.delta, *c.horizon) < *c.eps,
            "equilibrium: horizon too short, 2 * delta^{T+1} / (1 - delta) must be < eps");
    if (!c.out) c.out = "equilibrium.json";
  } else if (cmd == "k1diag") {
    if (!c.profile) c.profile = "myopic:1";
    if (!c.n) c.n = 100;
    require(*c.n >= 1, "k1diag: n must be >= 1");
    if (!c.out) c.out = "k1diag.csv";
  }
  if (c.checkpoints) {
    std::sort(c.checkpoints->begin(), c.checkpoints->end());
    c.checkpoints->erase(std::unique(c.checkpoints->begin(), c.checkpoints->end()), c.checkpoints->end());
  }
  return c;
}

struct RunResult {
  int status = kExitOk;
  std::string summary;               // one line for stdout
  std::vector<std::string> outputs;  // files written
  json error;                        // set when status != 0
};

namespace detail {

inline std::string replace_extension(const std::string& path, const std::string& ext) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ext;
  return path.substr(0, dot) + ext;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const json& config) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw io::InputError("cannot write '" + path + "'");
    out_ << "# tandem " << kVersion << "\n# config " << config.dump() << "\n";
  }

  CsvWriter& header(std::initializer_list<const char*> cols) {
    bool first = true;
    for (const char* c : cols) {
      out_ << (first ? "" : ",") << c;
      first = false;
    }
    out_ << '\n';
    return *this;
  }

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw io::InputError("failed writing '" + path_ + "'");
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

  std::string path_;
  std::ofstream out_;
};

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io::InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  out.close();
  if (!out) throw io::InputError("failed writing '" + path + "'");
}

inline json census_json(const CensusSummary& c) {
  return {{"min", c.min}, {"q25", c.q25}, {"median", c.median}, {"q75", c.q75}, {"max", c.max}, {"mean", c.mean}};
}

inline json stamp(const json& config) { return {{"tool", "tandem"}, {"version", kVersion}, {"config", config}}; }

inline RunResult run_schedule(const ExperimentConfig& c, const json& cfg, const SignalModel& model) {
  Schedule schedule(model);
  CsvWriter csv(*c.out, cfg);
  csv.header({"m", "k_m", "r_m", "segment_start", "segment_len"});
  for (std::uint64_t m = 1; m <= *c.m; ++m) {
    const Segment seg = schedule.segment(m);
    csv.row(m, seg.sizes.k, seg.sizes.r, seg.start, seg.length());
  }
  csv.close();
  const Segment last = schedule.segment(*c.m);
  return {kExitOk,
          "schedule m=" + std::to_string(*c.m) + " k_m=" + std::to_string(last.sizes.k) +
              " r_m=" + std::to_string(last.sizes.r) + " last_agent=" + std::to_string(last.end() - 1) + " -> " + *c.out,
          {*c.out},
          {}};
}

inline RunResult run_exact(const ExperimentConfig& c, const json& cfg, const SignalModel& model) {
  const Profile profile = io::make_profile(*c.profile, model, *c.n);
  TrajectoryOptions options;
  options.record_segment_starts = *c.segment_starts;
  const Trajectory traj = error_trajectory(profile, model, *c.n, *c.checkpoints, options);
  CsvWriter csv(*c.out, cfg);
  csv.header({"n", "p0_correct", "p1_correct", "p_correct"});
  for (const auto& p : traj.points) csv.row(p.n, p.p0_correct, p.p1_correct, p.p_correct);
  csv.close();
  const TrajectoryPoint& tail = traj.points.back();
  return {kExitOk,
          "exact profile=" + profile.descriptor() + " n=" + std::to_string(tail.n) +
              " p_correct=" + format_double(tail.p_correct) + " -> " + *c.out,
          {*c.out},
          {}};
}

inline RunResult run_series(const ExperimentConfig& c, const json& cfg, const SignalModel& model) {
  const auto rows = series_partial_sums(model, *c.checkpoints);
  CsvWriter csv(*c.out, cfg);
  csv.header({"M", "sum_p1_k", "sum_q1_r", "sum_p0_k", "sum_q0_r", "alpha_p1", "alpha_p0", "beta_q1", "beta_q0"});
  for (const auto& d : rows) {
    csv.row(d.M, d.sum_p1_k, d.sum_q1_r, d.sum_p0_k, d.sum_q0_r, d.alpha_p1, d.alpha_p0, d.beta_q1, d.beta_q0);
  }
  csv.close();
  const auto& d = rows.back();
  return {kExitOk,
          "series M=" + std::to_string(d.M) + " alpha_p1=" + format_double(d.alpha_p1) +
              " alpha_p0=" + format_double(d.alpha_p0) + " -> " + *c.out,
          {*c.out},
          {}};
}

inline RunResult run_simulate(const ExperimentConfig& c, const json& cfg, const SignalModel& model) {
  const SimConfig sim{
      .profile = io::make_profile(*c.profile, model, *c.n),
      .model = model,
      .theta_mode = *c.theta == "prior" ? ThetaMode::Prior : (*c.theta == "0" ? ThetaMode::Zero : ThetaMode::One),
      .agents = *c.n,
      .replications = *c.reps,
      .seed = *c.seed,
      .first_stream = 0,
      .checkpoints = *c.checkpoints,
      .workers = *c.workers,
  };
  const PathStats stats = estimate_error(sim);

  CsvWriter csv(*c.out, cfg);
  csv.header({"n", "mean", "se"});
  for (const auto& e : stats.checkpoints) csv.row(e.n, e.mean, e.se);
  csv.close();

  json summary = stamp(cfg);
  summary["profile"] = sim.profile.descriptor();
  summary["replications"] = stats.replications;
  summary["checkpoints"] = json::array();
  for (const auto& e : stats.checkpoints) {
    summary["checkpoints"].push_back({{"n", e.n},
                                      {"mean", e.mean},
                                      {"se", e.se},
                                      {"switches", census_json(e.switches)},
                                      {"searches", census_json(e.searches)}});
  }
  std::vector<double> last_switch;
  std::uint64_t theta_one = 0;
  for (const auto& p : stats.paths) {
    last_switch.push_back(static_cast<double>(p.last_switch));
    theta_one += static_cast<std::uint64_t>(p.theta);
  }
  summary["theta_one"] = theta_one;
  summary["switches"] = census_json(stats.switches);
  summary["searches"] = census_json(stats.searches);
  summary["last_switch"] = census_json(summarize(last_switch));
  const std::string json_path = replace_extension(*c.out, ".json");
  write_json(json_path, summary);

  const auto& tail = stats.checkpoints.back();
  return {kExitOk,
          "simulate profile=" + sim.profile.descriptor() + " reps=" + std::to_string(stats.replications) +
              " n=" + std::to_string(tail.n) + " mean=" + format_double(tail.mean) + " se=" + format_double(tail.se) +
              " -> " + *c.out + " " + json_path,
          {*c.out, json_path},
          {}};
}

inline RunResult run_equilibrium(const ExperimentConfig& c, const json& cfg, const SignalModel& model) {
  const Profile profile = io::make_profile(*c.profile, model, *c.last + *c.horizon + 1);
  const EquilibriumReport rep = check_equilibrium(profile, model, *c.delta, *c.first, *c.last, *c.eps, *c.horizon,
                                                  resolve_workers(*c.workers));
  json j = stamp(cfg);
  j["profile"] = rep.profile;
  j["first"] = rep.first;
  j["last"] = rep.last;
  j["epsilon"] = rep.epsilon;
  j["discount"] = rep.discount;
  j["horizon"] = rep.horizon;
  j["tail_bound"] = rep.tail_bound;
  j["checked"] = rep.checked;
  j["violations"] = json::array();
  const int K = profile.window_length();
  if (c.window) {
    require(c.window->size() == static_cast<std::size_t>(K), "equilibrium: window length differs from the profile's K");
    json q = {{"agent", *c.first}, {"window", *c.window}, {"signals", json::array()}};
    for (int s = 0; s < 2; ++s) {
      PayoffQuery query{*c.first, window_from_string(*c.window), s, 0, *c.delta, *c.horizon};
      const PayoffResult r0 = payoff(profile, model, query);
      query.action = 1;
      const PayoffResult r1 = payoff(profile, model, query);
      q["signals"].push_back({{"signal", s}, {"posterior", r0.posterior}, {"payoff0", r0.value}, {"payoff1", r1.value}});
    }
    j["query"] = q;
  }
  for (const auto& v : rep.violations) {
    j["violations"].push_back({{"agent", v.agent},
                               {"window", window_to_string(v.window, K)},
                               {"signal", v.signal},
                               {"profile_prob_one", v.profile_prob_one},
                               {"payoff0", v.payoff0},
                               {"payoff1", v.payoff1},
                               {"gain", v.gain}});
  }
  write_json(*c.out, j);
  return {kExitOk,
          "equilibrium profile=" + rep.profile + " agents=" + std::to_string(rep.first) + ".." +
              std::to_string(rep.last) + " checked=" + std::to_string(rep.checked) +
              " violations=" + std::to_string(rep.violations.size()) + " -> " + *c.out,
          {*c.out},
          {}};
}

inline RunResult run_k1diag(const ExperimentConfig& c, json cfg, const SignalModel& model) {
  const Profile profile = io::make_profile(*c.profile, model, *c.n);
  const K1Diagnostics d = k1_diagnostics(profile, model, *c.n);
  cfg["error_floor_reference"] = d.error_floor_reference;
  CsvWriter csv(*c.out, cfg);
  csv.header({"n", "a00", "a01", "a10", "a11", "abar00", "abar01", "abar10", "abar11", "sum_a01", "sum_a10",
              "sum_abar01", "sum_abar10", "coupling_ok"});
  for (const auto& r : d.rows) {
    csv.row(r.n, r.a[0][0], r.a[0][1], r.a[1][0], r.a[1][1], r.abar[0][0], r.abar[0][1], r.abar[1][0], r.abar[1][1],
            r.sum_a01, r.sum_a10, r.sum_abar01, r.sum_abar10, r.coupling_ok);
  }
  csv.close();
  return {kExitOk,
          "k1diag profile=" + profile.descriptor() + " n=" + std::to_string(*c.n) +
              " coupling_failures=" + std::to_string(d.coupling_failures.size()) + " -> " + *c.out,
          {*c.out},
          {}};
}

inline RunResult failure(int status, const char* kind, const std::string& message) {
  RunResult r;
  r.status = status;
  r.error = {{"error", kind}, {"message", message}, {"exit_code", status}};
  r.summary = std::string("error: ") + message;
  return r;
}

}  // namespace detail

/// Resolves, validates and runs one experiment. Never throws: failures come
/// back as a nonzero status with a machine-readable `error` object.
inline RunResult run_experiment(const ExperimentConfig& config) {
  try {
    const ExperimentConfig c = resolve(config);
    const io::ResolvedModel model = io::model_from_json(*c.model);
    json cfg = to_json(c);
    cfg["model"] = model.spec;
    if (c.command == "schedule") return detail::run_schedule(c, cfg, model.model);
    if (c.command == "exact") return detail::run_exact(c, cfg, model.model);
    if (c.command == "series") return detail::run_series(c, cfg, model.model);
    if (c.command == "simulate") return detail::run_simulate(c, cfg, model.model);
    if (c.command == "equilibrium") return detail::run_equilibrium(c, cfg, model.model);
    return detail::run_k1diag(c, cfg, model.model);
  } catch (const ModelError& e) {
    return detail::failure(kExitInvalidModel, "invalid_model", e.what());
  } catch (const ZeroProbabilityError& e) {
    return detail::failure(kExitZeroProbability, "zero_probability", e.what());
  } catch (const ContractError& e) {
    return detail::failure(kExitContract, "contract_violation", e.what());
  } catch (const io::InputError& e) {
    return detail::failure(kExitInput, "input", e.what());
  } catch (const std::exception& e) {
    return detail::failure(kExitInternal, "internal", e.what());
  }
}

}  // namespace tandem::cli
