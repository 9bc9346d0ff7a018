#include "suite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <omp.h>

#include "error.hpp"
#include "shapes.hpp"

namespace kitnet {

using nlohmann::ordered_json;

std::vector<std::shared_ptr<const TriMesh>> load_objects(const std::string& corpus,
                                                         const std::vector<std::string>& objects, double scale) {
  std::vector<std::shared_ptr<const TriMesh>> all;
  if (corpus == "procedural") {
    for (TriMesh& m : procedural_corpus()) {
      if (scale == 1.0) {
        all.push_back(std::make_shared<const TriMesh>(std::move(m)));
      } else {
        std::vector<Vec3> v = m.vertices();
        for (Vec3& p : v) p *= scale;
        all.push_back(std::make_shared<const TriMesh>(std::move(v), m.faces(), m.name()));
      }
    }
  } else {
    for (const auto& path : list_corpus(corpus)) {
      all.push_back(std::make_shared<const TriMesh>(load_mesh(path, std::nullopt, scale)));
    }
  }
  if (objects.empty()) return all;
  std::vector<std::shared_ptr<const TriMesh>> picked;
  for (const std::string& name : objects) {
    auto it = std::find_if(all.begin(), all.end(), [&](const auto& m) { return m->name() == name; });
    if (it == all.end()) fail(ErrorCode::kConfig, "object '" + name + "' is not in corpus '" + corpus + "'");
    picked.push_back(*it);
  }
  return picked;
}

namespace {

std::string cell_key(const SuiteCell& c) {
  std::ostringstream ss;
  ss << c.object << '/' << cavity_kind_name(c.cavity_kind) << '/' << c.init_angle_deg;
  return ss.str();
}

ordered_json quat_json(const UnitQuaternion& q) {
  const auto a = q.canonical().wxyz();
  return ordered_json::array({a[0], a[1], a[2], a[3]});
}

// NaN has no JSON spelling; absent values are written as null.
ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

}  // namespace

KittingTrial make_trial(const RunConfig& config, const std::shared_ptr<const TriMesh>& object, const SuiteCell& cell,
                        int trial_index) {
  const SuiteSpec suite = config.suite();
  KittingTrial t;
  t.object = object;
  t.cavity_kind = cell.cavity_kind;
  t.method = cell.method;
  t.estimator = config.estimator();
  t.config = config.controller();
  t.scene = config.scene();
  t.seed = derive_seed(config.seed(), cell_key(cell), static_cast<std::uint64_t>(trial_index));
  t.fit_samples = suite.fit_samples;
  t.success_threshold = suite.success_threshold;
  t.fit_mode = suite.fit_mode;
  Rng goal_rng(derive_seed(t.seed, "goal"));
  t.goal_rotation = sample_uniform(goal_rng);
  Rng pert_rng(derive_seed(t.seed, "perturbation"));
  t.initial_perturbation = sample_perturbation(suite.perturbation, cell.init_angle_deg, pert_rng);
  return t;
}

std::vector<SuiteTrial> run_suite(const RunConfig& config, const std::function<void(const SuiteTrial&)>& progress) {
  config.validate();
  const SuiteSpec suite = config.suite();
  const auto objects = load_objects(suite.corpus, suite.objects, suite.mesh_scale);

  std::vector<SuiteTrial> out;
  std::vector<std::shared_ptr<const TriMesh>> mesh_of;
  for (const auto& obj : objects) {
    for (CavityKind kind : suite.cavity_kinds) {
      for (double angle : suite.init_angles_deg) {
        for (Method method : suite.methods) {
          for (int k = 0; k < suite.trials; ++k) {
            SuiteTrial t;
            t.cell = {obj->name(), kind, angle, method};
            t.trial = k;
            out.push_back(std::move(t));
            mesh_of.push_back(obj);
          }
        }
      }
    }
  }

  const int workers = config.workers() > 0 ? config.workers() : omp_get_num_procs();
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::int64_t i = 0; i < n; ++i) {
    SuiteTrial& t = out[static_cast<std::size_t>(i)];
    try {
      const KittingTrial kt = make_trial(config, mesh_of[static_cast<std::size_t>(i)], t.cell, t.trial);
      t.seed = kt.seed;
      t.report = run_trial(kt);
    } catch (const std::exception& e) {
      t.report.object = t.cell.object;
      t.report.cavity_kind = t.cell.cavity_kind;
      t.report.method = t.cell.method;
      t.report.terminated_by = Termination::kError;
      t.report.error = e.what();
    }
    if (progress) {
#pragma omp critical(kitnet_suite_progress)
      progress(t);
    }
  }
  return out;
}

SuiteTrial run_configured_trial(const RunConfig& config) {
  config.validate();
  const TrialSpec spec = config.trial();
  const SuiteSpec suite = config.suite();
  const auto objects = load_objects(suite.corpus, {spec.object}, suite.mesh_scale);
  SuiteTrial t;
  t.cell = {spec.object, spec.cavity_kind, spec.init_angle_deg, spec.method};
  t.trial = spec.index;
  const KittingTrial kt = make_trial(config, objects.front(), t.cell, t.trial);
  t.seed = kt.seed;
  t.report = run_trial(kt);
  return t;
}

ordered_json trial_json(const SuiteTrial& t) {
  const TrialReport& r = t.report;
  ordered_json j;
  j["object"] = t.cell.object;
  j["cavity_kind"] = cavity_kind_name(t.cell.cavity_kind);
  j["init_angle_deg"] = t.cell.init_angle_deg;
  j["method"] = method_name(t.cell.method);
  j["trial"] = t.trial;
  j["seed"] = t.seed;
  j["estimator"] = r.estimator;
  j["initial_angle_deg"] = r.initial_angle_deg;
  ordered_json steps = ordered_json::array();
  for (const StepRecord& s : r.steps) {
    steps.push_back({{"iteration", s.iteration},
                     {"estimate_wxyz", quat_json(s.estimate)},
                     {"applied_wxyz", quat_json(s.applied)},
                     {"residual_deg", s.residual_true_angle_deg}});
  }
  j["steps"] = std::move(steps);
  j["applied_steps"] = r.applied_steps();
  j["terminated_by"] = termination_name(r.terminated_by);
  j["translation"] = {r.translation_applied.x(), r.translation_applied.y(), r.translation_applied.z()};
  if (r.percent_fit) {
    j["percent_fit"] = r.percent_fit->kappa_hat;
    j["fit_ci95"] = {r.percent_fit->ci95_low, r.percent_fit->ci95_high};
    j["fit_samples"] = r.percent_fit->n_samples;
  } else {
    j["percent_fit"] = nullptr;
    j["fit_ci95"] = nullptr;
    j["fit_samples"] = 0;
  }
  j["fit_mode"] = fit_mode_name(r.fit_mode);
  j["success"] = r.success;
  j["final_residual_deg"] = number_or_null(r.final_residual_deg);
  j["error"] = r.error.empty() ? ordered_json(nullptr) : ordered_json(r.error);
  return j;
}

std::vector<CellSummary> summarize(const std::vector<SuiteTrial>& trials) {
  std::vector<CellSummary> cells;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> fits;
  std::vector<double> steps;
  for (const SuiteTrial& t : trials) {
    const std::string key = cell_key(t.cell) + "/" + method_name(t.cell.method);
    auto [it, fresh] = index.emplace(key, cells.size());
    if (fresh) {
      cells.push_back({t.cell});
      fits.emplace_back();
      steps.push_back(0.0);
    }
    const std::size_t c = it->second;
    ++cells[c].trials;
    if (t.report.percent_fit) {
      ++cells[c].completed;
      fits[c].push_back(t.report.percent_fit->kappa_hat);
      steps[c] += static_cast<double>(t.report.applied_steps());
      cells[c].successes += t.report.success ? 1 : 0;
    }
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double>& f = fits[c];
    if (f.empty()) {
      cells[c].mean_fit = cells[c].median_fit = cells[c].mean_steps = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double v : f) sum += v;
    cells[c].mean_fit = sum / static_cast<double>(f.size());
    std::sort(f.begin(), f.end());
    const std::size_t m = f.size() / 2;
    cells[c].median_fit = f.size() % 2 ? f[m] : 0.5 * (f[m - 1] + f[m]);
    cells[c].mean_steps = steps[c] / static_cast<double>(f.size());
  }
  return cells;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

ordered_json write_suite_outputs(const std::vector<SuiteTrial>& trials, const RunConfig& config,
                                 const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  std::string results, timings;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    ordered_json r = trial_json(trials[i]);
    results += r.dump() + "\n";
    ordered_json tm = {{"index", i},
                       {"object", trials[i].cell.object},
                       {"method", method_name(trials[i].cell.method)},
                       {"trial", trials[i].trial},
                       {"wall_time_s", trials[i].report.wall_time_s}};
    timings += tm.dump() + "\n";
  }
  write_text(out_dir / "results.jsonl", results);
  write_text(out_dir / "timings.jsonl", timings);

  const auto cells = summarize(trials);
  std::string csv = "object,cavity_kind,init_angle_deg,method,trials,successes,mean_fit,median_fit,mean_steps\n";
  ordered_json jcells = ordered_json::array();
  int completed = 0, successes = 0;
  for (const CellSummary& c : cells) {
    std::ostringstream row;
    row << c.cell.object << ',' << cavity_kind_name(c.cell.cavity_kind) << ',' << c.cell.init_angle_deg << ','
        << method_name(c.cell.method) << ',' << c.trials << ',' << c.successes << ',' << csv_number(c.mean_fit) << ','
        << csv_number(c.median_fit) << ',' << csv_number(c.mean_steps) << '\n';
    csv += row.str();
    completed += c.completed;
    successes += c.successes;
    jcells.push_back({{"object", c.cell.object},
                      {"cavity_kind", cavity_kind_name(c.cell.cavity_kind)},
                      {"init_angle_deg", c.cell.init_angle_deg},
                      {"method", method_name(c.cell.method)},
                      {"trials", c.trials},
                      {"completed", c.completed},
                      {"successes", c.successes},
                      {"mean_fit", number_or_null(c.mean_fit)},
                      {"median_fit", number_or_null(c.median_fit)},
                      {"mean_steps", number_or_null(c.mean_steps)}});
  }
  write_text(out_dir / "summary.csv", csv);

  ordered_json summary;
  summary["format"] = "kitnet-suite-summary";
  summary["format_version"] = 1;
  summary["total_trials"] = trials.size();
  summary["completed"] = completed;
  summary["errors"] = static_cast<int>(trials.size()) - completed;
  summary["successes"] = successes;
  summary["cells"] = std::move(jcells);
  ordered_json cfg = config.resolved();
  cfg.erase("output");
  summary["config"] = std::move(cfg);
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace kitnet
