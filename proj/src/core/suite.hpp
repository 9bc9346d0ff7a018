#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "controller.hpp"

namespace kitnet {

/// Meshes named by `objects` (all when empty) from `corpus`: "procedural"
/// for the built-in set, otherwise a directory of mesh files whose names
/// (file stems) are the object ids.
std::vector<std::shared_ptr<const TriMesh>> load_objects(const std::string& corpus,
                                                         const std::vector<std::string>& objects, double scale);

/// One cell of the suite grid.
struct SuiteCell {
  std::string object;
  CavityKind cavity_kind = CavityKind::kPrismatic;
  double init_angle_deg = 0.0;
  Method method = Method::kKitNet;
};

struct SuiteTrial {
  SuiteCell cell;
  int trial = 0;
  std::uint64_t seed = 0;
  TrialReport report;
};

/// The seeded trial for a cell. The goal rotation and perturbation depend
/// on (seed, object, cavity kind, angle, trial) but not on the method, so
/// every method faces the same situations.
KittingTrial make_trial(const RunConfig& config, const std::shared_ptr<const TriMesh>& object, const SuiteCell& cell,
                        int trial_index);

/// Runs every (object, cavity kind, angle, method, trial) combination.
/// Failed trials are recorded, never thrown. Output order is the grid order
/// whatever the worker count. `progress` is called after each trial from
/// the calling thread's team; it may be empty.
std::vector<SuiteTrial> run_suite(const RunConfig& config,
                                  const std::function<void(const SuiteTrial&)>& progress = {});

/// The single trial described by the config's `trial` section.
SuiteTrial run_configured_trial(const RunConfig& config);

/// Deterministic record: everything but wall time.
nlohmann::ordered_json trial_json(const SuiteTrial& t);

struct CellSummary {
  SuiteCell cell;
  int trials = 0;
  int completed = 0;  ///< trials that produced a percent fit
  int successes = 0;
  double mean_fit = 0.0;    ///< over completed trials, NaN when none
  double median_fit = 0.0;  ///< over completed trials, NaN when none
  double mean_steps = 0.0;  ///< applied rotations over completed trials
};

std::vector<CellSummary> summarize(const std::vector<SuiteTrial>& trials);

/// Writes results.jsonl, timings.jsonl, summary.csv and summary.json into
/// `out_dir` (created if needed) and returns the summary document.
nlohmann::ordered_json write_suite_outputs(const std::vector<SuiteTrial>& trials, const RunConfig& config,
                                           const std::filesystem::path& out_dir);

}  // namespace kitnet
