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

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "statesim/digest.hpp"
#include "statesim/kernel.hpp"
#include "statesim/model.hpp"

namespace statesim {

struct ScenarioNode {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  double duration = 0.0;       // segment length in seconds; unused on the root
  std::vector<double> inputs;  // applied at segment start; unused on the root
  std::vector<std::size_t> children;
};

/// nodes[0] is the root: the initialized model at t0. Every other node is one
/// segment; each root-to-leaf path is one scenario.
struct ScenarioTree {
  ModelPtr model;
  double t0 = 0.0;
  std::vector<ScenarioNode> nodes;

  std::vector<std::size_t> leaves() const;
  std::size_t edge_count() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  // Root first, leaf last.
  std::vector<std::size_t> path_to(std::size_t node) const;
  std::size_t depth() const;

  // Throws kParameterDomain on non-positive durations, input arity mismatch,
  // or inconsistent parent/child links.
  void validate() const;
};

struct TreeSpec {
  std::string model = "van_der_pol";
  std::string params_json = "{}";
  std::size_t depth = 3;
  std::size_t branching = 2;
  double segment_s = 0.5;
  std::uint64_t seed = 0;
};

/// Complete `branching`-ary tree of the given depth. Nodes are numbered in
/// breadth-first order; each segment draws its inputs uniformly from the
/// model's admissible input ranges using a stream seeded by `seed`.
ScenarioTree generate_tree(const TreeSpec& spec);
ScenarioTree generate_tree(ModelPtr model, std::size_t depth, std::size_t branching,
                           double segment_s, std::uint64_t seed);

struct SegmentTiming {
  std::size_t node_id = 0;
  std::size_t parent_id = 0;
  double duration_s = 0.0;
  std::int64_t wall_ns = 0;
  std::string mode;
};

struct LeafState {
  std::size_t leaf_id = 0;
  Digest fingerprint;
};

struct RunStats {
  std::size_t segments_simulated = 0;
  double simulated_time_total = 0.0;
  double wall_clock = 0.0;
  // Snapshot runs only.
  std::size_t snapshots_taken = 0;
  std::size_t restores = 0;
  std::size_t peak_snapshot_bytes = 0;
  std::size_t peak_live_snapshots = 0;

  std::vector<LeafState> leaves;  // sorted by leaf id
  std::vector<SegmentTiming> segments;
};

enum class SnapshotStrategy {
  kSingleInstance,  // one instance, set_state on backtrack
  kMultiInstance,   // every sibling after the first continues on a fresh instance
};

struct CampaignOptions {
  KernelConfig kernel;
  int jobs = 1;  // baseline only
  SnapshotStrategy strategy = SnapshotStrategy::kSingleInstance;
};

/// Re-simulates every root-to-leaf path from t0 on its own instance.
RunStats run_baseline(const ScenarioTree& tree, const CampaignOptions& options = {});
RunStats run_baseline_serial(const ScenarioTree& tree, const CampaignOptions& options = {});
/// OpenMP over leaves; same result as the serial run apart from timings.
RunStats run_baseline_parallel(const ScenarioTree& tree, const CampaignOptions& options, int jobs);

/// Depth-first traversal simulating each edge once: get_state at every
/// branching node, set_state before every sibling but the first.
RunStats run_with_snapshots(const ScenarioTree& tree, const CampaignOptions& options = {});

struct CampaignReport {
  std::size_t n_scenarios = 0;
  RunStats baseline;
  RunStats snapshot;
  double speedup = 0.0;
  bool leaves_equal = false;
};

CampaignReport run_campaign(const ScenarioTree& tree, const CampaignOptions& options = {});

/// Wall-clock fields (wall_clock, speedup) are left out when include_wall is
/// false; the remainder is a deterministic function of the tree.
nlohmann::json to_json(const CampaignReport& r, bool include_wall = true);
nlohmann::json to_json(const TreeSpec& spec);
TreeSpec tree_spec_from_json(const nlohmann::json& j);

/// CSV with header node_id,parent_id,duration_s,wall_ns,mode; baseline rows
/// first, then snapshot rows.
void write_segments_csv(const CampaignReport& r, std::ostream& out);

}  // namespace statesim
