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

#include "statesim/campaign.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>

#include "statesim/error.hpp"
#include "statesim/rng.hpp"

namespace statesim {

std::vector<std::size_t> ScenarioTree::leaves() const {
  std::vector<std::size_t> out;
  for (const auto& n : nodes) {
    if (n.children.empty()) out.push_back(n.id);
  }
  return out;
}

std::vector<std::size_t> ScenarioTree::path_to(std::size_t node) const {
  std::vector<std::size_t> path;
  for (std::optional<std::size_t> cur = node; cur; cur = nodes.at(*cur).parent) {
    path.push_back(*cur);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::size_t ScenarioTree::depth() const {
  std::size_t d = 0;
  for (std::size_t leaf : leaves()) d = std::max(d, path_to(leaf).size() - 1);
  return d;
}

void ScenarioTree::validate() const {
  if (!model) throw Error(ErrorCode::kParameterDomain, "scenario tree without model");
  if (nodes.empty()) throw Error(ErrorCode::kParameterDomain, "scenario tree without root");
  if (nodes[0].parent) throw Error(ErrorCode::kParameterDomain, "root must not have a parent");
  std::vector<int> seen(nodes.size(), 0);
  for (const auto& n : nodes) {
    if (n.id >= nodes.size() || &nodes[n.id] != &n) {
      throw Error(ErrorCode::kParameterDomain, "node ids must equal their index");
    }
    for (std::size_t c : n.children) {
      if (c == 0 || c >= nodes.size() || nodes[c].parent != n.id || seen[c]++) {
        throw Error(ErrorCode::kParameterDomain,
                    "inconsistent parent/child link at node " + std::to_string(n.id));
      }
    }
    if (n.id == 0) continue;
    if (!n.parent) throw Error(ErrorCode::kParameterDomain, "node " + std::to_string(n.id) + " has no parent");
    if (!(n.duration > 0.0) || !std::isfinite(n.duration)) {
      throw Error(ErrorCode::kParameterDomain,
                  "segment duration must be > 0 at node " + std::to_string(n.id));
    }
    if (n.inputs.size() != model->spec().n_u()) {
      throw Error(ErrorCode::kParameterDomain, "input arity mismatch at node " + std::to_string(n.id));
    }
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (seen[i] != 1) {
      throw Error(ErrorCode::kParameterDomain, "node " + std::to_string(i) + " unreachable from root");
    }
  }
}

ScenarioTree generate_tree(ModelPtr model, std::size_t depth, std::size_t branching,
                           double segment_s, std::uint64_t seed) {
  if (depth < 1) throw Error(ErrorCode::kParameterDomain, "depth must be >= 1");
  if (branching < 1) throw Error(ErrorCode::kParameterDomain, "branching must be >= 1");
  if (!(segment_s > 0.0) || !std::isfinite(segment_s)) {
    throw Error(ErrorCode::kParameterDomain, "segment length must be > 0");
  }
  ScenarioTree tree;
  tree.model = std::move(model);
  tree.t0 = tree.model->spec().t0;
  tree.nodes.push_back(ScenarioNode{});

  SplitMix64 rng(seed);
  const auto& ranges = tree.model->spec().inputs;
  std::size_t level_begin = 0;
  std::size_t level_end = 1;
  for (std::size_t level = 0; level < depth; ++level) {
    for (std::size_t p = level_begin; p < level_end; ++p) {
      for (std::size_t b = 0; b < branching; ++b) {
        ScenarioNode n;
        n.id = tree.nodes.size();
        n.parent = p;
        n.duration = segment_s;
        for (const auto& r : ranges) n.inputs.push_back(rng.uniform(r.lo, r.hi));
        tree.nodes[p].children.push_back(n.id);
        tree.nodes.push_back(std::move(n));
      }
    }
    level_begin = level_end;
    level_end = tree.nodes.size();
  }
  return tree;
}

ScenarioTree generate_tree(const TreeSpec& spec) {
  return generate_tree(make_model(spec.model, spec.params_json), spec.depth, spec.branching,
                       spec.segment_s, spec.seed);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Applies one segment: inputs switch at its start, then Simulate(duration).
SegmentTiming run_segment(Kernel& k, const ScenarioNode& n, const char* mode) {
  const auto start = Clock::now();
  try {
    k.enter_event_mode();
    k.set_inputs(n.inputs);
    k.enter_continuous_time_mode();
    k.simulate(n.duration);
  } catch (const Error& e) {
    throw Error(e.code(), std::string("node ") + std::to_string(n.id) + ": " + e.what());
  }
  const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
  return SegmentTiming{n.id, n.parent.value_or(0), n.duration, static_cast<std::int64_t>(ns), mode};
}

struct PathResult {
  LeafState leaf;
  std::vector<SegmentTiming> segments;
  double simulated = 0.0;
};

PathResult run_path(const ScenarioTree& tree, const CampaignOptions& options, std::size_t leaf) {
  PathResult r;
  Kernel k(tree.model, options.kernel);
  k.initialize(tree.t0);
  const auto path = tree.path_to(leaf);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto& node = tree.nodes[path[i]];
    r.segments.push_back(run_segment(k, node, "baseline"));
    r.simulated += node.duration;
  }
  r.leaf = LeafState{leaf, k.fingerprint()};
  return r;
}

RunStats collect(std::vector<PathResult>& paths, double wall) {
  RunStats s;
  s.wall_clock = wall;
  for (auto& p : paths) {
    s.segments_simulated += p.segments.size();
    s.simulated_time_total += p.simulated;
    s.leaves.push_back(p.leaf);
    for (auto& seg : p.segments) s.segments.push_back(std::move(seg));
  }
  return s;
}

}  // namespace

RunStats run_baseline_serial(const ScenarioTree& tree, const CampaignOptions& options) {
  tree.validate();
  const auto start = Clock::now();
  const auto leaves = tree.leaves();
  std::vector<PathResult> paths;
  paths.reserve(leaves.size());
  for (std::size_t leaf : leaves) paths.push_back(run_path(tree, options, leaf));
  return collect(paths, seconds_since(start));
}

RunStats run_baseline_parallel(const ScenarioTree& tree, const CampaignOptions& options, int jobs) {
  tree.validate();
  const auto start = Clock::now();
  const auto leaves = tree.leaves();
  std::vector<PathResult> paths(leaves.size());
  std::vector<std::exception_ptr> errors(leaves.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, jobs))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(leaves.size()); ++i) {
    try {
      paths[i] = run_path(tree, options, leaves[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return collect(paths, seconds_since(start));
}

RunStats run_baseline(const ScenarioTree& tree, const CampaignOptions& options) {
  return options.jobs <= 1 ? run_baseline_serial(tree, options)
                           : run_baseline_parallel(tree, options, options.jobs);
}

namespace {

class SnapshotWalker {
 public:
  SnapshotWalker(const ScenarioTree& tree, const CampaignOptions& options, RunStats& stats)
      : tree_(tree), options_(options), stats_(stats) {}

  void visit(Kernel& k, std::size_t id) {
    const auto& node = tree_.nodes[id];
    if (id != 0) {
      stats_.segments.push_back(run_segment(k, node, "snapshot"));
      ++stats_.segments_simulated;
      stats_.simulated_time_total += node.duration;
    }
    if (node.children.empty()) {
      stats_.leaves.push_back(LeafState{id, k.fingerprint()});
      return;
    }
    if (node.children.size() == 1) {
      visit(k, node.children.front());
      return;
    }

    Snapshot saved = k.get_state();
    ++stats_.snapshots_taken;
    live_bytes_ += saved.size();
    ++live_count_;
    stats_.peak_snapshot_bytes = std::max(stats_.peak_snapshot_bytes, live_bytes_);
    stats_.peak_live_snapshots = std::max(stats_.peak_live_snapshots, live_count_);

    for (std::size_t j = 0; j < node.children.size(); ++j) {
      if (j == 0) {
        visit(k, node.children[j]);
        continue;
      }
      ++stats_.restores;
      if (options_.strategy == SnapshotStrategy::kSingleInstance) {
        k.set_state(saved);
        visit(k, node.children[j]);
      } else {
        Kernel fresh(tree_.model, options_.kernel);
        fresh.set_state(saved);
        visit(fresh, node.children[j]);
      }
    }
    live_bytes_ -= saved.size();
    --live_count_;
    free_state(saved);
  }

 private:
  const ScenarioTree& tree_;
  const CampaignOptions& options_;
  RunStats& stats_;
  std::size_t live_bytes_ = 0;
  std::size_t live_count_ = 0;
};

}  // namespace

RunStats run_with_snapshots(const ScenarioTree& tree, const CampaignOptions& options) {
  tree.validate();
  RunStats stats;
  const auto start = Clock::now();
  Kernel k(tree.model, options.kernel);
  k.initialize(tree.t0);
  SnapshotWalker(tree, options, stats).visit(k, 0);
  stats.wall_clock = seconds_since(start);
  std::sort(stats.leaves.begin(), stats.leaves.end(),
            [](const LeafState& a, const LeafState& b) { return a.leaf_id < b.leaf_id; });
  return stats;
}

CampaignReport run_campaign(const ScenarioTree& tree, const CampaignOptions& options) {
  CampaignReport r;
  r.n_scenarios = tree.leaves().size();
  r.baseline = run_baseline(tree, options);
  r.snapshot = run_with_snapshots(tree, options);
  r.speedup = r.snapshot.wall_clock > 0.0 ? r.baseline.wall_clock / r.snapshot.wall_clock : 0.0;
  r.leaves_equal = r.baseline.leaves.size() == r.snapshot.leaves.size() &&
                   std::equal(r.baseline.leaves.begin(), r.baseline.leaves.end(),
                              r.snapshot.leaves.begin(), [](const LeafState& a, const LeafState& b) {
                                return a.leaf_id == b.leaf_id && a.fingerprint == b.fingerprint;
                              });
  return r;
}

// --- JSON / CSV ------------------------------------------------------------------

namespace {

nlohmann::json half_to_json(const RunStats& s, bool snapshot, bool include_wall) {
  nlohmann::json j;
  j["segments_simulated"] = s.segments_simulated;
  j["simulated_time_total"] = s.simulated_time_total;
  if (include_wall) j["wall_clock"] = s.wall_clock;
  if (snapshot) {
    j["snapshots_taken"] = s.snapshots_taken;
    j["restores"] = s.restores;
    j["peak_snapshot_bytes"] = s.peak_snapshot_bytes;
    j["peak_live_snapshots"] = s.peak_live_snapshots;
  }
  nlohmann::json leaves = nlohmann::json::array();
  for (const auto& l : s.leaves) leaves.push_back({{"leaf", l.leaf_id}, {"fingerprint", l.fingerprint.hex()}});
  j["leaves"] = std::move(leaves);
  return j;
}

}  // namespace

nlohmann::json to_json(const CampaignReport& r, bool include_wall) {
  nlohmann::json j;
  j["schema"] = "statesim.campaign/1";
  j["n_scenarios"] = r.n_scenarios;
  j["baseline"] = half_to_json(r.baseline, false, include_wall);
  j["snapshot"] = half_to_json(r.snapshot, true, include_wall);
  j["leaves_equal"] = r.leaves_equal;
  if (include_wall) j["speedup"] = r.speedup;
  return j;
}

nlohmann::json to_json(const TreeSpec& spec) {
  return {{"model", spec.model},
          {"params", nlohmann::json::parse(spec.params_json.empty() ? "{}" : spec.params_json)},
          {"depth", spec.depth},
          {"branching", spec.branching},
          {"segment_s", spec.segment_s},
          {"seed", spec.seed}};
}

TreeSpec tree_spec_from_json(const nlohmann::json& j) {
  TreeSpec s;
  try {
    s.model = j.at("model").get<std::string>();
    if (j.contains("params")) s.params_json = j.at("params").dump();
    s.depth = j.at("depth").get<std::size_t>();
    s.branching = j.at("branching").get<std::size_t>();
    s.segment_s = j.at("segment_s").get<double>();
    s.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParameterDomain, std::string("tree spec: ") + e.what());
  }
  return s;
}

void write_segments_csv(const CampaignReport& r, std::ostream& out) {
  out << "node_id,parent_id,duration_s,wall_ns,mode\n";
  for (const auto* half : {&r.baseline, &r.snapshot}) {
    for (const auto& s : half->segments) {
      out << s.node_id << ',' << s.parent_id << ',' << s.duration_s << ',' << s.wall_ns << ','
          << s.mode << '\n';
    }
  }
}

}  // namespace statesim
