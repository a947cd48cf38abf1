/*
 * Copyright 2026 The statesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// statesim: batch front end for validation runs, counterexample replay,
// scenario campaigns and quick trajectory dumps.
//
// Exit codes: 0 success / validation passed, 2 counterexample (validate) or
// reproduced divergence (replay), 1 any runtime or usage error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "statesim/campaign.hpp"
#include "statesim/error.hpp"
#include "statesim/kernel.hpp"
#include "statesim/model.hpp"
#include "statesim/validator.hpp"

namespace {

using namespace statesim;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCounterexample = 2;

// Writes through a temporary file in the same directory and renames it over
// the target, so readers never observe a half-written report.
void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename report into " + path + ": " + ec.message());
  }
}

void emit(const nlohmann::json& report, const std::string& out_path) {
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    write_atomically(out_path, text);
  }
}

std::pair<double, double> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--b", "expected lo:hi, got " + s);
  try {
    std::size_t used_lo = 0, used_hi = 0;
    const std::string lo_s = s.substr(0, colon), hi_s = s.substr(colon + 1);
    const double lo = std::stod(lo_s, &used_lo);
    const double hi = std::stod(hi_s, &used_hi);
    if (used_lo != lo_s.size() || used_hi != hi_s.size()) throw std::invalid_argument(s);
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("--b", "expected lo:hi, got " + s);
  }
}

std::uint64_t seed_from_env() {
  const char* env = std::getenv("STATESIM_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used, 0);
    if (used == std::string(env).size()) return v;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::kInvalidConfig, std::string("STATESIM_SEED is not an integer: ") + env);
}

// Options shared by every subcommand that builds a model and kernels.
struct ModelOptions {
  std::string model = "bouncing_ball";
  std::string params = "{}";
  double rtol = SolverConfig{}.rtol;
  double atol = SolverConfig{}.atol;
  double h_max = SolverConfig{}.h_max;
  std::string fault = "none";

  void attach(CLI::App& app) {
    app.add_option("--model", model, "Built-in model name")
        ->check(CLI::IsMember(builtin_model_names()))
        ->capture_default_str();
    app.add_option("--params", params, "JSON object of parameter overrides")->capture_default_str();
    app.add_option("--rtol", rtol, "Relative integration tolerance")->capture_default_str();
    app.add_option("--atol", atol, "Absolute integration tolerance")->capture_default_str();
    app.add_option("--h-max", h_max, "Largest integration step in seconds")->capture_default_str();
#ifdef STATESIM_FAULT_INJECTION
    app.add_option("--inject-fault", fault,
                   "Deliberately broken set_state: none, skip-solver-restore, "
                   "skip-discrete-restore, skip-zsigns-restore")
        ->capture_default_str();
#endif
  }

  ModelPtr build_model() const { return make_model(model, params); }

  KernelConfig kernel() const {
    KernelConfig k;
    k.solver.rtol = rtol;
    k.solver.atol = atol;
    k.solver.h_max = h_max;
    k.fault = parse_fault(fault);
    return k;
  }
};

struct ValidationOptions {
  ModelOptions m;
  double epsilon = 0.05;
  double delta = 0.05;
  double tau = 0.25;
  std::string b = "0:5";
  std::size_t n_sequence = 8;
  std::optional<std::uint64_t> seed;
  std::string sampling = "per-step";
  std::string comparator = "bitwise";
  double tol = 0.0;
  int jobs = 1;
  std::string out;

  void attach(CLI::App& app) {
    m.attach(app);
    app.add_option("--epsilon", epsilon, "Divergence probability to rule out")->capture_default_str();
    app.add_option("--delta", delta, "Type-I error bound (confidence 1 - delta)")->capture_default_str();
    app.add_option("--tau", tau, "Step length of the Simulate sequence")->capture_default_str();
    app.add_option("--b", b, "Detour range lo:hi for tau'")->capture_default_str();
    app.add_option("--n-sequence", n_sequence, "Simulate steps per trial")->capture_default_str();
    app.add_option("--seed", seed, "RNG seed (falls back to $STATESIM_SEED, then 0)");
    app.add_option("--sampling", sampling, "Draw tau' per step or once per trial")
        ->check(CLI::IsMember({"per-step", "per-trial"}))
        ->capture_default_str();
    app.add_option("--comparator", comparator, "State equality: bitwise or epsilon")
        ->check(CLI::IsMember({"bitwise", "epsilon"}))
        ->capture_default_str();
    app.add_option("--tol", tol, "Tolerance for --comparator epsilon")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker threads; the verdict does not depend on it")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--out", out, "Write the JSON report here instead of stdout");
  }

  ValidationConfig config() const {
    ValidationConfig c;
    c.epsilon = epsilon;
    c.delta = delta;
    c.tau = tau;
    std::tie(c.b_lo, c.b_hi) = parse_range(b);
    c.n_sequence = n_sequence;
    c.seed = seed ? *seed : seed_from_env();
    c.sampling = sampling == "per-trial" ? Sampling::kPerTrial : Sampling::kPerStep;
    if (comparator == "epsilon") {
      c.comparator.kind = Comparator::Kind::kTolerance;
      c.comparator.tol = tol;
    }
    c.kernel = m.kernel();
    c.jobs = jobs;
    c.validate();
    return c;
  }
};

int cmd_validate(const ValidationOptions& o) {
  const auto model = o.m.build_model();
  const auto cfg = o.config();
  const auto verdict = run_validation(model, cfg);
  emit(to_json(verdict, cfg, model->name()), o.out);
  if (verdict.passed) {
    std::cerr << "passed: " << verdict.trials_run << " agreeing trials (N = " << verdict.required
              << ")\n";
    return kExitOk;
  }
  const auto& cex = *verdict.counterexample;
  std::cerr << "counterexample: trial " << cex.trial << ", step " << cex.step
            << ", tau' = " << std::setprecision(17) << cex.tau_prime << "\n";
  return kExitCounterexample;
}

struct ReplayOptions {
  ValidationOptions v;
  double tau_prime = 0.0;
  std::size_t step = 1;
  std::string verdict_path;
};

int cmd_replay(const ReplayOptions& o) {
  const auto model = o.v.m.build_model();
  const auto cfg = o.v.config();
  double tau_prime = o.tau_prime;
  std::size_t step = o.step;
  if (!o.verdict_path.empty()) {
    std::ifstream in(o.verdict_path);
    if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read " + o.verdict_path);
    const auto j = nlohmann::json::parse(in);
    if (!j.contains("counterexample")) {
      throw Error(ErrorCode::kInvalidConfig, o.verdict_path + " holds no counterexample");
    }
    tau_prime = j["counterexample"].at("tau_prime").get<double>();
    step = j["counterexample"].at("step").get<std::size_t>();
  }
  const auto report = replay_counterexample(model, cfg, tau_prime, step);
  emit(to_json(report), o.v.out);
  std::cerr << (report.diverged ? "divergence reproduced" : "no divergence") << "\n";
  return report.diverged ? kExitCounterexample : kExitOk;
}

struct CampaignCliOptions {
  ModelOptions m;
  std::size_t depth = 3;
  std::size_t branching = 2;
  double segment = 0.5;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool multi_instance = false;
  bool no_timing = false;
  std::string out;
  std::string csv;
};

int cmd_campaign(CampaignCliOptions o) {
  TreeSpec spec;
  spec.model = o.m.model;
  spec.params_json = o.m.params;
  spec.depth = o.depth;
  spec.branching = o.branching;
  spec.segment_s = o.segment;
  spec.seed = o.seed ? *o.seed : seed_from_env();
  const auto tree = generate_tree(spec);

  CampaignOptions opts;
  opts.kernel = o.m.kernel();
  opts.jobs = o.jobs;
  opts.strategy = o.multi_instance ? SnapshotStrategy::kMultiInstance : SnapshotStrategy::kSingleInstance;
  const auto report = run_campaign(tree, opts);

  auto j = to_json(report, !o.no_timing);
  j["spec"] = to_json(spec);
  j["strategy"] = o.multi_instance ? "multi-instance" : "single-instance";
  j["fault"] = to_string(opts.kernel.fault);
  emit(j, o.out);
  if (!o.csv.empty()) {
    std::ostringstream csv;
    write_segments_csv(report, csv);
    write_atomically(o.csv, csv.str());
  }
  std::cerr << "segments: baseline " << report.baseline.segments_simulated << ", snapshot "
            << report.snapshot.segments_simulated << "; leaves "
            << (report.leaves_equal ? "equal" : "DIFFER") << "\n";
  return report.leaves_equal ? kExitOk : kExitCounterexample;
}

struct DemoOptions {
  ModelOptions m;
  double duration = 3.0;
  double dt = 0.05;
  std::string out;
};

// Prints model outputs on a fixed output grid as CSV. Each row is produced by
// Simulate(dt) from the previous row, which by the semigroup property is the
// same trajectory as a single long run.
int cmd_demo(const DemoOptions& o) {
  if (!(o.dt > 0.0) || !(o.duration >= 0.0)) {
    throw Error(ErrorCode::kParameterDomain, "--dt must be > 0 and --duration >= 0");
  }
  const auto model = o.m.build_model();
  Kernel k(model, o.m.kernel());
  k.initialize();
  std::ostringstream csv;
  csv << std::setprecision(17);
  auto row = [&] {
    const auto outs = model->outputs(*k.time(), k.x(), k.d(), k.u());
    csv << *k.time();
    for (const auto& [name, value] : outs) csv << ',' << value;
    csv << ',' << k.solver().n_events << '\n';
  };
  csv << "t";
  for (const auto& [name, value] : model->outputs(*k.time(), k.x(), k.d(), k.u())) csv << ',' << name;
  csv << ",n_events\n";
  row();
  const auto n = static_cast<std::size_t>(o.duration / o.dt + 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    k.simulate(o.dt);
    row();
  }
  if (o.out.empty() || o.out == "-") {
    std::cout << csv.str();
  } else {
    write_atomically(o.out, csv.str());
  }
  std::cerr << "final fingerprint " << k.fingerprint().hex() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statesim: snapshot-correctness validation and scenario campaigns"};
  app.require_subcommand(1);

  ValidationOptions validate_opts;
  auto* validate = app.add_subcommand("validate", "Hypothesis test of get/set correctness");
  validate_opts.attach(*validate);

  ReplayOptions replay_opts;
  auto* replay = app.add_subcommand("replay", "Re-run one counterexample step");
  replay_opts.v.attach(*replay);
  replay->add_option("--tau-prime", replay_opts.tau_prime, "Detour length to replay");
  replay->add_option("--step", replay_opts.step, "1-based step of the Simulate sequence")
      ->capture_default_str();
  replay->add_option("--verdict", replay_opts.verdict_path,
                     "Take tau' and step from a validate report");

  CampaignCliOptions campaign_opts;
  auto* campaign = app.add_subcommand("campaign", "Baseline vs snapshot scenario-tree run");
  campaign_opts.m.model = "van_der_pol";
  campaign_opts.m.attach(*campaign);
  campaign->add_option("--depth", campaign_opts.depth, "Tree depth")->capture_default_str();
  campaign->add_option("--branching", campaign_opts.branching, "Children per node")->capture_default_str();
  campaign->add_option("--segment", campaign_opts.segment, "Segment length in seconds")
      ->capture_default_str();
  campaign->add_option("--seed", campaign_opts.seed, "Input RNG seed (falls back to $STATESIM_SEED)");
  campaign->add_option("--jobs", campaign_opts.jobs, "Worker threads for the baseline")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  campaign->add_flag("--multi-instance", campaign_opts.multi_instance,
                     "Continue siblings on fresh instances instead of backtracking");
  campaign->add_flag("--no-timing", campaign_opts.no_timing, "Leave wall-clock fields out of the report");
  campaign->add_option("--out", campaign_opts.out, "Write the JSON report here instead of stdout");
  campaign->add_option("--csv", campaign_opts.csv, "Write per-segment timings as CSV");

  DemoOptions demo_opts;
  auto* demo = app.add_subcommand("demo", "Print a model trajectory as CSV");
  demo_opts.m.attach(*demo);
  demo->add_option("--duration", demo_opts.duration, "Simulated seconds")->capture_default_str();
  demo->add_option("--dt", demo_opts.dt, "Output interval")->capture_default_str();
  demo->add_option("--out", demo_opts.out, "Write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (validate->parsed()) return cmd_validate(validate_opts);
    if (replay->parsed()) return cmd_replay(replay_opts);
    if (campaign->parsed()) return cmd_campaign(campaign_opts);
    if (demo->parsed()) return cmd_demo(demo_opts);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "statesim: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "statesim: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
