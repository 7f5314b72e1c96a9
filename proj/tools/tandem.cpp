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

// Command-line front end: flags map onto ExperimentConfig fields, a --config
// JSON file supplies the rest.

#include <charconv>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tandem/experiment.hpp"

namespace {

using tandem::cli::ExperimentConfig;
using json = nlohmann::json;

struct Flags {
  std::string config_path;
  std::string model;
  std::string profile;
  std::string range;
  std::string checkpoints;
  std::string theta;
  std::string window;
  std::string out;
  std::string n, m, reps;
  std::uint64_t seed = 0, horizon = 0;
  double delta = 0.0, eps = 0.0;
  unsigned workers = 0;
  bool segment_starts = false;
};

std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw tandem::ContractError(std::string(what) + ": '" + std::string(s) + "' is not an unsigned integer");
  }
  return v;
}

// Counts may be written in e-notation ("1e6") as long as they are integers.
std::uint64_t parse_count(const std::string& item, const char* what) {
  if (item.find_first_of("eE") == std::string::npos) return parse_u64(item, what);
  double v = 0.0;
  const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
  if (res.ec != std::errc() || res.ptr != item.data() + item.size() || v < 0 || v != std::floor(v) || v > 9e18) {
    throw tandem::ContractError(std::string(what) + ": '" + item + "' is not an unsigned integer");
  }
  return static_cast<std::uint64_t>(v);
}

std::vector<std::uint64_t> parse_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    out.push_back(parse_count(text.substr(pos, comma - pos), "checkpoints"));
    pos = comma + 1;
  }
  return out;
}

ExperimentConfig overrides(const std::string& command, const Flags& f, const CLI::App& sub) {
  ExperimentConfig c;
  c.command = command;
  auto given = [&](const char* name) {
    const CLI::Option* opt = sub.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--model")) c.model = tandem::io::model_spec_json(f.model);
  if (given("--profile")) c.profile = tandem::io::profile_spec_json(f.profile);
  if (given("--n")) c.n = parse_count(f.n, "n");
  if (given("--m")) c.m = parse_count(f.m, "m");
  if (given("--reps")) c.reps = parse_count(f.reps, "reps");
  if (given("--seed")) c.seed = f.seed;
  if (given("--theta")) c.theta = f.theta;
  if (given("--delta")) c.delta = f.delta;
  if (given("--eps")) c.eps = f.eps;
  if (given("--horizon")) c.horizon = f.horizon;
  if (given("--checkpoints")) c.checkpoints = parse_list(f.checkpoints);
  if (given("--segment-starts")) c.segment_starts = f.segment_starts;
  if (given("--window")) c.window = f.window;
  if (given("--out")) c.out = f.out;
  if (given("--workers")) c.workers = f.workers;
  if (given("--range")) {
    const auto dots = f.range.find("..");
    if (dots == std::string::npos) throw tandem::ContractError("range must look like n1..n2");
    c.first = parse_u64(std::string_view(f.range).substr(0, dots), "range");
    c.last = parse_u64(std::string_view(f.range).substr(dots + 2), "range");
  }
  return c;
}

void report_error(const json& error) { std::cerr << error.dump() << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tandem social-learning experiments"};
  app.set_version_flag("--version", std::string("tandem ") + tandem::kVersion);
  app.require_subcommand(1);
  Flags f;

  const std::string seed_help = std::string("Seed (default: $") + tandem::cli::kSeedEnv + " or 0)";
  std::vector<std::pair<std::string, CLI::App*>> subs;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", f.config_path, "JSON experiment config; flags override it");
    sub->add_option("--model", f.model, "Signal model: p0,p1 | JSON object | @file.json");
    sub->add_option("--out", f.out, "Output file");
    subs.emplace_back(name, sub);
    return sub;
  };

  auto* schedule = add("schedule", "Block sizes and segment layout, CSV (m, k_m, r_m, segment_start, segment_len)");
  schedule->add_option("--m", f.m, "Last segment index");

  auto* exact = add("exact", "Exact P(x_n = theta), CSV (n, p0_correct, p1_correct, p_correct)");
  exact->add_option("--profile", f.profile, "designed | myopic[:K] | constant0|constant1|copy|signal[:K] | @file.json");
  exact->add_option("--n", f.n, "Number of agents");
  exact->add_option("--checkpoints", f.checkpoints, "Comma-separated agent indices");
  exact->add_flag("--segment-starts", f.segment_starts, "Also record every segment's first agent");

  auto* series = add("series", "Partial sums of p^{k_m}/m and q^{r_m}/m, CSV");
  series->add_option("--m", f.m, "Largest M");
  series->add_option("--checkpoints", f.checkpoints, "Comma-separated values of M");

  auto* simulate = add("simulate", "Monte Carlo paths, CSV (n, mean, se) plus a JSON summary");
  simulate->add_option("--profile", f.profile, "Profile spec");
  simulate->add_option("--n", f.n, "Number of agents");
  simulate->add_option("--reps", f.reps, "Replications");
  simulate->add_option("--seed", f.seed, seed_help);
  simulate->add_option("--theta", f.theta, "prior | 0 | 1");
  simulate->add_option("--checkpoints", f.checkpoints, "Comma-separated agent indices");
  simulate->add_option("--workers", f.workers, "Worker threads (0 = all cores)");

  auto* equilibrium = add("equilibrium", "Epsilon-equilibrium check, JSON report");
  equilibrium->add_option("--profile", f.profile, "Profile spec");
  equilibrium->add_option("--delta", f.delta, "Discount factor in [0, 1)");
  equilibrium->add_option("--eps", f.eps, "Tolerance epsilon");
  equilibrium->add_option("--range", f.range, "Agents n1..n2");
  equilibrium->add_option("--horizon", f.horizon, "Truncation horizon T (default: smallest T with 4 tail <= eps)");
  equilibrium->add_option("--window", f.window, "Also report both payoffs at agent n1 for this window, e.g. 01");
  equilibrium->add_option("--workers", f.workers, "Worker threads (0 = all cores)");

  auto* k1diag = add("k1diag", "K = 1 transition probabilities and running sums, CSV");
  k1diag->add_option("--profile", f.profile, "K = 1 profile spec");
  k1diag->add_option("--n", f.n, "Number of agents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc != 0) report_error({{"error", "usage"}, {"message", e.what()}, {"exit_code", rc}});
    return rc;
  }

  tandem::cli::RunResult result;
  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      ExperimentConfig base;
      if (!f.config_path.empty()) base = tandem::cli::config_from_json(tandem::io::load_json(f.config_path));
      base.command = name;
      result = tandem::cli::run_experiment(tandem::cli::merge(base, overrides(name, f, *sub)));
    } catch (const tandem::ModelError& e) {
      result = tandem::cli::detail::failure(tandem::cli::kExitInvalidModel, "invalid_model", e.what());
    } catch (const tandem::ContractError& e) {
      result = tandem::cli::detail::failure(tandem::cli::kExitContract, "contract_violation", e.what());
    } catch (const tandem::io::InputError& e) {
      result = tandem::cli::detail::failure(tandem::cli::kExitInput, "input", e.what());
    }
  }
  if (result.status != 0) {
    report_error(result.error);
    return result.status;
  }
  std::cout << result.summary << '\n';
  return 0;
}
