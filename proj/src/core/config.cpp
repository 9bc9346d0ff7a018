#include "config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "error.hpp"

namespace kitnet {

using nlohmann::ordered_json;

const char* perturbation_mode_name(PerturbationMode m) {
  switch (m) {
    case PerturbationMode::kRandomAxis: return "random_axis";
    case PerturbationMode::kOutOfPlane: return "out_of_plane";
    case PerturbationMode::kBounded: return "bounded";
  }
  return "unknown";
}

PerturbationMode parse_perturbation_mode(std::string_view name) {
  for (auto m : {PerturbationMode::kRandomAxis, PerturbationMode::kOutOfPlane, PerturbationMode::kBounded}) {
    if (name == perturbation_mode_name(m)) return m;
  }
  fail(ErrorCode::kConfig, "unknown perturbation mode '" + std::string(name) + "'");
}

UnitQuaternion sample_perturbation(PerturbationMode mode, double angle_deg, Rng& rng) {
  if (!(angle_deg >= 0.0 && angle_deg <= 180.0)) fail(ErrorCode::kConfig, "perturbation angle must be in [0, 180]");
  const double a = deg2rad(angle_deg);
  switch (mode) {
    case PerturbationMode::kRandomAxis: return UnitQuaternion::from_axis_angle(random_unit_vector(rng), a);
    case PerturbationMode::kOutOfPlane: {
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      return UnitQuaternion::from_axis_angle(Vec3(std::cos(phi), std::sin(phi), 0.0), a);
    }
    case PerturbationMode::kBounded: return sample_bounded(rng, a);
  }
  fail(ErrorCode::kInternal, "unhandled perturbation mode");
}

namespace {

ordered_json vec3_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

bool same_kind(const ordered_json& def, const ordered_json& val) {
  if (def.is_null()) return val.is_null() || val.is_number_unsigned() || (val.is_number_integer() && val >= 0);
  if (def.is_number_integer()) {
    if (val.is_number_integer()) return true;
    return val.is_number_float() && std::floor(val.get<double>()) == val.get<double>();
  }
  if (def.is_number()) return val.is_number();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_string()) return val.is_string();
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return false;
}

// Overlays `val` on `def` at `path`, rejecting unknown keys and type changes.
void overlay(ordered_json& def, const ordered_json& val, const std::string& path) {
  if (!same_kind(def, val)) {
    fail(ErrorCode::kConfig, "config key '" + path + "' expects " + std::string(def.is_null() ? "an unsigned integer" : def.type_name()) +
                                 ", got " + val.type_name());
  }
  if (!def.is_object()) {
    // Keep integers integral so the echo matches the type of the default.
    if (def.is_number_integer() && val.is_number_float()) {
      def = static_cast<std::int64_t>(val.get<double>());
    } else {
      def = val;
    }
    return;
  }
  for (auto it = val.begin(); it != val.end(); ++it) {
    const std::string sub = path.empty() ? it.key() : path + "." + it.key();
    if (!def.contains(it.key())) fail(ErrorCode::kConfig, "unknown config key '" + sub + "'");
    overlay(def[it.key()], it.value(), sub);
  }
}

template <class T>
T get(const ordered_json& node, const char* what) {
  try {
    return node.get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::kConfig, std::string("config value for '") + what + "' has the wrong type");
  }
}

Vec3 get_vec3(const ordered_json& node, const char* what) {
  if (!node.is_array() || node.size() != 3) fail(ErrorCode::kConfig, std::string("'") + what + "' must be [x, y, z]");
  return Vec3(get<double>(node[0], what), get<double>(node[1], what), get<double>(node[2], what));
}

}  // namespace

ordered_json RunConfig::defaults() {
  const SceneConfig scene;
  const ControllerConfig ctl;
  const EstimatorSpec est;
  const AugmentationConfig aug;
  const DatasetConfig ds;
  const DatasetSpec dss;
  const SuiteSpec suite;
  const TrialSpec trial;

  ordered_json j;
  j["seed"] = nullptr;
  j["workers"] = 0;
  j["camera"] = {{"width", 128}, {"height", 128}, {"vfov_deg", 45.0}, {"height_m", 0.8}};
  j["scene"] = {{"plane_z", scene.plane_z},
                {"hold_position", vec3_json(scene.hold_position)},
                {"cavity_xy", ordered_json::array({scene.cavity_xy.x(), scene.cavity_xy.y()})},
                {"segment_slack", scene.segment_slack},
                {"conformal_clearance", scene.conformal_clearance}};
  j["controller"] = {{"eta", ctl.eta}, {"delta_deg", ctl.delta_deg}, {"max_iters", ctl.max_iters}};
  j["estimator"] = {{"kind", estimator_kind_name(est.kind)},
                    {"sigma_deg", est.sigma_deg},
                    {"grid_step_deg", est.grid_step_deg},
                    {"max_angle_deg", est.max_angle_deg},
                    {"refine_iters", est.refine_iters},
                    {"min_step_deg", est.min_step_deg},
                    {"max_points", est.max_points},
                    {"covisibility", est.covisibility},
                    {"cost", alignment_cost_name(est.cost)},
                    {"endpoint", est.endpoint},
                    {"timeout_s", est.timeout_s}};
  j["augmentation"] = {{"enabled", aug.enabled},
                       {"pixel_dropout_fraction", aug.pixel_dropout_fraction},
                       {"cut_width_fraction", aug.cut_width_fraction},
                       {"cut_height_min", aug.cut_height_min},
                       {"cut_height_max", aug.cut_height_max},
                       {"cut_count", aug.cut_count},
                       {"translation_range", aug.translation_range},
                       {"crop", aug.crop},
                       {"crop_margin_min", aug.crop_margin_min},
                       {"crop_margin_max", aug.crop_margin_max},
                       {"crop_center_offset", aug.crop_center_offset}};
  j["dataset"] = {{"pairs_per_mesh", dss.pairs_per_mesh},
                  {"variant", variant_name(dss.variant)},
                  {"mesh_scale", dss.mesh_scale},
                  {"object_position", vec3_json(ds.object_position)},
                  {"max_relative_angle_deg", ds.max_relative_angle_deg}};
  ordered_json kinds = ordered_json::array();
  for (CavityKind k : suite.cavity_kinds) kinds.push_back(cavity_kind_name(k));
  ordered_json methods = ordered_json::array();
  for (Method m : suite.methods) methods.push_back(method_name(m));
  j["suite"] = {{"corpus", suite.corpus},
                {"mesh_scale", suite.mesh_scale},
                {"objects", suite.objects},
                {"cavity_kinds", kinds},
                {"init_angles_deg", suite.init_angles_deg},
                {"perturbation", perturbation_mode_name(suite.perturbation)},
                {"methods", methods},
                {"trials", suite.trials},
                {"fit_samples", suite.fit_samples},
                {"success_threshold", suite.success_threshold},
                {"fit_mode", fit_mode_name(suite.fit_mode)}};
  j["trial"] = {{"object", trial.object},
                {"cavity_kind", cavity_kind_name(trial.cavity_kind)},
                {"init_angle_deg", trial.init_angle_deg},
                {"method", method_name(trial.method)},
                {"index", trial.index}};
  j["output"] = {{"dir", "kitnet_out"}};
  return j;
}

RunConfig::RunConfig() : tree_(defaults()) {}

RunConfig RunConfig::from_json(const ordered_json& user) {
  if (!user.is_object()) fail(ErrorCode::kConfig, "config document must be a JSON object");
  RunConfig c;
  overlay(c.tree_, user, "");
  return c;
}

RunConfig RunConfig::from_string(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "config file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key.empty()) fail(ErrorCode::kConfig, "empty config key");
  ordered_json v;
  try {
    v = ordered_json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    v = std::string(value);
  }
  // Build {"a": {"b": v}} from "a.b" and overlay it like a user document.
  ordered_json doc = v;
  std::string k(key);
  for (;;) {
    const auto dot = k.rfind('.');
    const std::string leaf = dot == std::string::npos ? k : k.substr(dot + 1);
    if (leaf.empty()) fail(ErrorCode::kConfig, "malformed config key '" + std::string(key) + "'");
    doc = ordered_json{{leaf, doc}};
    if (dot == std::string::npos) break;
    k.resize(dot);
  }
  overlay(tree_, doc, "");
}

std::uint64_t RunConfig::seed() const {
  const ordered_json& s = tree_.at("seed");
  if (!s.is_null()) return s.get<std::uint64_t>();
  if (const char* env = std::getenv("KITNET_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') fail(ErrorCode::kConfig, "KITNET_SEED must be an unsigned integer");
    return v;
  }
  return 0;
}

ordered_json RunConfig::resolved() const {
  ordered_json j = tree_;
  j["seed"] = seed();
  return j;
}

int RunConfig::workers() const {
  const int w = get<int>(tree_.at("workers"), "workers");
  if (w < 0) fail(ErrorCode::kConfig, "workers must be >= 0");
  return w;
}

SceneConfig RunConfig::scene() const {
  const ordered_json& cam = tree_.at("camera");
  const ordered_json& s = tree_.at("scene");
  SceneConfig out;
  const int w = get<int>(cam.at("width"), "camera.width");
  const int h = get<int>(cam.at("height"), "camera.height");
  const double vfov = get<double>(cam.at("vfov_deg"), "camera.vfov_deg");
  const double hm = get<double>(cam.at("height_m"), "camera.height_m");
  if (w < 1 || h < 1) fail(ErrorCode::kConfig, "camera size must be positive");
  if (!(vfov > 0.0 && vfov < 180.0)) fail(ErrorCode::kConfig, "camera.vfov_deg must be in (0, 180)");
  out.camera = CameraModel::overhead(w, h, vfov, hm);
  out.plane_z = get<double>(s.at("plane_z"), "scene.plane_z");
  out.hold_position = get_vec3(s.at("hold_position"), "scene.hold_position");
  const ordered_json& xy = s.at("cavity_xy");
  if (!xy.is_array() || xy.size() != 2) fail(ErrorCode::kConfig, "'scene.cavity_xy' must be [x, y]");
  out.cavity_xy = Vec2(get<double>(xy[0], "scene.cavity_xy"), get<double>(xy[1], "scene.cavity_xy"));
  out.segment_slack = get<double>(s.at("segment_slack"), "scene.segment_slack");
  out.conformal_clearance = get<double>(s.at("conformal_clearance"), "scene.conformal_clearance");
  out.validate();
  return out;
}

ControllerConfig RunConfig::controller() const {
  const ordered_json& c = tree_.at("controller");
  ControllerConfig out;
  out.eta = get<double>(c.at("eta"), "controller.eta");
  out.delta_deg = get<double>(c.at("delta_deg"), "controller.delta_deg");
  out.max_iters = get<int>(c.at("max_iters"), "controller.max_iters");
  out.validate();
  return out;
}

EstimatorSpec RunConfig::estimator() const {
  const ordered_json& e = tree_.at("estimator");
  EstimatorSpec out;
  out.kind = parse_estimator_kind(get<std::string>(e.at("kind"), "estimator.kind"));
  out.sigma_deg = get<double>(e.at("sigma_deg"), "estimator.sigma_deg");
  out.grid_step_deg = get<double>(e.at("grid_step_deg"), "estimator.grid_step_deg");
  out.max_angle_deg = get<double>(e.at("max_angle_deg"), "estimator.max_angle_deg");
  out.refine_iters = get<int>(e.at("refine_iters"), "estimator.refine_iters");
  out.min_step_deg = get<double>(e.at("min_step_deg"), "estimator.min_step_deg");
  const auto mp = get<std::int64_t>(e.at("max_points"), "estimator.max_points");
  if (mp < 3) fail(ErrorCode::kConfig, "max_points must be >= 3");
  out.max_points = static_cast<std::size_t>(mp);
  out.covisibility = get<bool>(e.at("covisibility"), "estimator.covisibility");
  out.cost = parse_alignment_cost(get<std::string>(e.at("cost"), "estimator.cost"));
  out.endpoint = get<std::string>(e.at("endpoint"), "estimator.endpoint");
  out.timeout_s = get<double>(e.at("timeout_s"), "estimator.timeout_s");
  out.validate();
  return out;
}

AugmentationConfig RunConfig::augmentation() const {
  const ordered_json& a = tree_.at("augmentation");
  AugmentationConfig out;
  out.enabled = get<bool>(a.at("enabled"), "augmentation.enabled");
  out.pixel_dropout_fraction = get<double>(a.at("pixel_dropout_fraction"), "augmentation.pixel_dropout_fraction");
  out.cut_width_fraction = get<double>(a.at("cut_width_fraction"), "augmentation.cut_width_fraction");
  out.cut_height_min = get<double>(a.at("cut_height_min"), "augmentation.cut_height_min");
  out.cut_height_max = get<double>(a.at("cut_height_max"), "augmentation.cut_height_max");
  out.cut_count = get<int>(a.at("cut_count"), "augmentation.cut_count");
  out.translation_range = get<double>(a.at("translation_range"), "augmentation.translation_range");
  out.crop = get<bool>(a.at("crop"), "augmentation.crop");
  out.crop_margin_min = get<double>(a.at("crop_margin_min"), "augmentation.crop_margin_min");
  out.crop_margin_max = get<double>(a.at("crop_margin_max"), "augmentation.crop_margin_max");
  out.crop_center_offset = get<double>(a.at("crop_center_offset"), "augmentation.crop_center_offset");
  out.validate();
  return out;
}

DatasetConfig RunConfig::dataset_config() const {
  const ordered_json& d = tree_.at("dataset");
  DatasetConfig out;
  out.camera = scene().camera;
  out.object_position = get_vec3(d.at("object_position"), "dataset.object_position");
  out.max_relative_angle_deg = get<double>(d.at("max_relative_angle_deg"), "dataset.max_relative_angle_deg");
  if (!(out.max_relative_angle_deg > 0.0 && out.max_relative_angle_deg <= 180.0)) {
    fail(ErrorCode::kConfig, "dataset.max_relative_angle_deg must be in (0, 180]");
  }
  out.aug = augmentation();
  return out;
}

DatasetSpec RunConfig::dataset() const {
  const ordered_json& d = tree_.at("dataset");
  DatasetSpec out;
  const auto n = get<std::int64_t>(d.at("pairs_per_mesh"), "dataset.pairs_per_mesh");
  if (n < 1) fail(ErrorCode::kConfig, "dataset.pairs_per_mesh must be >= 1");
  out.pairs_per_mesh = static_cast<std::size_t>(n);
  out.variant = parse_variant(get<std::string>(d.at("variant"), "dataset.variant"));
  out.mesh_scale = get<double>(d.at("mesh_scale"), "dataset.mesh_scale");
  if (!(out.mesh_scale > 0.0)) fail(ErrorCode::kConfig, "dataset.mesh_scale must be > 0");
  return out;
}

SuiteSpec RunConfig::suite() const {
  const ordered_json& s = tree_.at("suite");
  SuiteSpec out;
  out.corpus = get<std::string>(s.at("corpus"), "suite.corpus");
  out.mesh_scale = get<double>(s.at("mesh_scale"), "suite.mesh_scale");
  if (!(out.mesh_scale > 0.0)) fail(ErrorCode::kConfig, "suite.mesh_scale must be > 0");
  out.objects = get<std::vector<std::string>>(s.at("objects"), "suite.objects");
  out.cavity_kinds.clear();
  for (const auto& k : get<std::vector<std::string>>(s.at("cavity_kinds"), "suite.cavity_kinds")) {
    out.cavity_kinds.push_back(parse_cavity_kind(k));
  }
  out.init_angles_deg = get<std::vector<double>>(s.at("init_angles_deg"), "suite.init_angles_deg");
  for (double a : out.init_angles_deg) {
    if (!(a >= 0.0 && a <= 180.0)) fail(ErrorCode::kConfig, "suite.init_angles_deg entries must be in [0, 180]");
  }
  out.perturbation = parse_perturbation_mode(get<std::string>(s.at("perturbation"), "suite.perturbation"));
  out.methods.clear();
  for (const auto& m : get<std::vector<std::string>>(s.at("methods"), "suite.methods")) {
    out.methods.push_back(parse_method(m));
  }
  if (out.cavity_kinds.empty() || out.init_angles_deg.empty() || out.methods.empty()) {
    fail(ErrorCode::kConfig, "suite grid has an empty axis");
  }
  out.trials = get<int>(s.at("trials"), "suite.trials");
  if (out.trials < 1) fail(ErrorCode::kConfig, "suite.trials must be >= 1");
  const auto n = get<std::int64_t>(s.at("fit_samples"), "suite.fit_samples");
  if (n < 1) fail(ErrorCode::kConfig, "suite.fit_samples must be >= 1");
  out.fit_samples = static_cast<std::size_t>(n);
  out.success_threshold = get<double>(s.at("success_threshold"), "suite.success_threshold");
  if (!(out.success_threshold >= 0.0 && out.success_threshold <= 1.0)) {
    fail(ErrorCode::kConfig, "suite.success_threshold must be in [0, 1]");
  }
  out.fit_mode = parse_fit_mode(get<std::string>(s.at("fit_mode"), "suite.fit_mode"));
  return out;
}

TrialSpec RunConfig::trial() const {
  const ordered_json& t = tree_.at("trial");
  TrialSpec out;
  out.object = get<std::string>(t.at("object"), "trial.object");
  out.cavity_kind = parse_cavity_kind(get<std::string>(t.at("cavity_kind"), "trial.cavity_kind"));
  out.init_angle_deg = get<double>(t.at("init_angle_deg"), "trial.init_angle_deg");
  if (!(out.init_angle_deg >= 0.0 && out.init_angle_deg <= 180.0)) {
    fail(ErrorCode::kConfig, "trial.init_angle_deg must be in [0, 180]");
  }
  out.method = parse_method(get<std::string>(t.at("method"), "trial.method"));
  out.index = get<int>(t.at("index"), "trial.index");
  if (out.index < 0) fail(ErrorCode::kConfig, "trial.index must be >= 0");
  return out;
}

std::string RunConfig::output_dir() const { return get<std::string>(tree_.at("output").at("dir"), "output.dir"); }

void RunConfig::validate() const {
  (void)seed();
  (void)workers();
  (void)scene();
  (void)controller();
  (void)estimator();
  (void)dataset_config();
  (void)dataset();
  (void)suite();
  (void)trial();
  (void)output_dir();
}

}  // namespace kitnet
