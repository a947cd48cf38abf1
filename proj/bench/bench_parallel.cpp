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

// Serial reference vs OpenMP implementations, plus the baseline-vs-snapshot
// campaign comparison. Every pair is checked for identical results before
// its timing is reported; a mismatch aborts the benchmark.

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "statesim/campaign.hpp"
#include "statesim/model.hpp"
#include "statesim/validator.hpp"

namespace {

using namespace statesim;

// Best of `reps` wall-clock times, in seconds.
double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

bool same_leaves(const RunStats& a, const RunStats& b) {
  if (a.leaves.size() != b.leaves.size()) return false;
  for (std::size_t i = 0; i < a.leaves.size(); ++i) {
    if (a.leaves[i].leaf_id != b.leaves[i].leaf_id || a.leaves[i].fingerprint != b.leaves[i].fingerprint) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statesim benchmark: serial reference vs OpenMP, baseline vs snapshot"};
  int jobs = omp_get_max_threads();
  int reps = 3;
  double eps = 0.01;
  std::size_t depth = 8;
  std::size_t branching = 2;
  std::string model = "van_der_pol";
  app.add_option("--jobs", jobs, "OpenMP threads for the parallel variants")->capture_default_str();
  app.add_option("--reps", reps, "Repetitions; the best time is reported")->capture_default_str();
  app.add_option("--epsilon", eps, "epsilon = delta for the validation workload")->capture_default_str();
  app.add_option("--depth", depth, "Campaign tree depth")->capture_default_str();
  app.add_option("--branching", branching, "Campaign tree branching")->capture_default_str();
  app.add_option("--model", model, "Model for both workloads")
      ->check(CLI::IsMember(builtin_model_names()))
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const auto m = make_model(model);
  nlohmann::json report;
  report["model"] = model;
  report["jobs"] = jobs;
  report["hardware_threads"] = omp_get_num_procs();

  // Validation: trials are independent, so they parallelize across workers.
  ValidationConfig vc;
  vc.epsilon = vc.delta = eps;
  Verdict serial_v, parallel_v;
  const double t_vs = best_of(reps, [&] { serial_v = run_validation_serial(m, vc); });
  const double t_vp = best_of(reps, [&] { parallel_v = run_validation_parallel(m, vc, jobs); });
  if (to_json(serial_v, vc, model) != to_json(parallel_v, vc, model)) {
    std::fprintf(stderr, "validation verdicts differ between serial and parallel runs\n");
    return 1;
  }
  report["validation"] = {{"trials", serial_v.trials_run},
                          {"serial_s", t_vs},
                          {"parallel_s", t_vp},
                          {"parallel_speedup", t_vs / t_vp}};

  // Campaign: baseline leaves in parallel vs serial, then prefix sharing.
  const auto tree = generate_tree(m, depth, branching, 0.5, 7);
  RunStats base_s, base_p, snap;
  const double t_bs = best_of(reps, [&] { base_s = run_baseline_serial(tree); });
  const double t_bp = best_of(reps, [&] { base_p = run_baseline_parallel(tree, {}, jobs); });
  const double t_sn = best_of(reps, [&] { snap = run_with_snapshots(tree); });
  if (!same_leaves(base_s, base_p) || !same_leaves(base_s, snap)) {
    std::fprintf(stderr, "campaign leaf fingerprints differ between runners\n");
    return 1;
  }
  report["campaign"] = {{"depth", depth},
                        {"branching", branching},
                        {"leaves", base_s.leaves.size()},
                        {"baseline_segments", base_s.segments_simulated},
                        {"snapshot_segments", snap.segments_simulated},
                        {"baseline_serial_s", t_bs},
                        {"baseline_parallel_s", t_bp},
                        {"snapshot_s", t_sn},
                        {"parallel_speedup", t_bs / t_bp},
                        {"snapshot_speedup", t_bs / t_sn},
                        {"peak_live_snapshots", snap.peak_live_snapshots},
                        {"peak_snapshot_bytes", snap.peak_snapshot_bytes}};

  std::printf("%s\n", report.dump(2).c_str());
  return 0;
}
