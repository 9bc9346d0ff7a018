#define KITNET_BUILDING 1

#include "kitnet/kitnet.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "config.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "render.hpp"
#include "shapes.hpp"
#include "suite.hpp"
#include "wire.hpp"

struct kitnet_config {
  kitnet::RunConfig cfg;
};
struct kitnet_mesh {
  kitnet::TriMesh mesh;
};
struct kitnet_image {
  kitnet::DepthImage image;
};

namespace {

thread_local std::string g_last_error;

kitnet_status set_error(kitnet_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs f, mapping exceptions to status codes and the thread's last error.
template <class F>
kitnet_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return KITNET_OK;
  } catch (const kitnet::Error& e) {
    return set_error(static_cast<kitnet_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(KITNET_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(KITNET_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(KITNET_E_INTERNAL, "unknown exception");
  }
}

void need(const void* p, const char* what) {
  if (!p) kitnet::fail(kitnet::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

kitnet::Pose pose_from(const double p[7]) {
  return kitnet::Pose::from_array({p[0], p[1], p[2], p[3], p[4], p[5], p[6]});
}

}  // namespace

extern "C" {

KITNET_API const char* kitnet_version(void) { return "1.0.0"; }

KITNET_API const char* kitnet_status_name(kitnet_status status) {
  if (status == KITNET_OK) return "OK";
  return kitnet::error_code_name(static_cast<kitnet::ErrorCode>(status));
}

KITNET_API const char* kitnet_last_error(void) { return g_last_error.c_str(); }

KITNET_API void kitnet_string_free(char* s) { std::free(s); }

KITNET_API kitnet_status kitnet_config_create(const char* json, kitnet_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<kitnet_config>();
    if (json) c->cfg = kitnet::RunConfig::from_string(json);
    *out = c.release();
  });
}

KITNET_API kitnet_status kitnet_config_load(const char* path, kitnet_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<kitnet_config>();
    c->cfg = kitnet::RunConfig::from_file(path);
    *out = c.release();
  });
}

KITNET_API kitnet_status kitnet_config_set(kitnet_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    // Apply to a copy so a rejected override leaves the config untouched.
    kitnet::RunConfig next = config->cfg;
    next.set(key, value);
    config->cfg = std::move(next);
  });
}

KITNET_API kitnet_status kitnet_config_to_json(const kitnet_config* config, char** out_json) {
  return guarded([&] {
    need(config, "config");
    need(out_json, "out_json");
    *out_json = dup_string(config->cfg.resolved().dump(2));
  });
}

KITNET_API void kitnet_config_free(kitnet_config* config) { delete config; }

KITNET_API kitnet_status kitnet_mesh_load(const char* path, double scale, kitnet_mesh** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    if (!(scale > 0.0)) kitnet::fail(kitnet::ErrorCode::kInvalidArgument, "scale must be > 0");
    *out = new kitnet_mesh{kitnet::load_mesh(path, std::nullopt, scale)};
  });
}

KITNET_API kitnet_status kitnet_mesh_procedural(const char* name, kitnet_mesh** out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    *out = nullptr;
    for (kitnet::TriMesh& m : kitnet::procedural_corpus()) {
      if (m.name() == name) {
        *out = new kitnet_mesh{std::move(m)};
        return;
      }
    }
    kitnet::fail(kitnet::ErrorCode::kNotFound, std::string("no procedural shape named '") + name + "'");
  });
}

KITNET_API kitnet_status kitnet_procedural_names(char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    nlohmann::json names = nlohmann::json::array();
    for (const kitnet::TriMesh& m : kitnet::procedural_corpus()) names.push_back(m.name());
    *out_json = dup_string(names.dump());
  });
}

KITNET_API kitnet_status kitnet_write_procedural_corpus(const char* dir) {
  return guarded([&] {
    need(dir, "dir");
    kitnet::write_procedural_corpus(dir);
  });
}

KITNET_API kitnet_status kitnet_mesh_info(const kitnet_mesh* mesh, char** out_json) {
  return guarded([&] {
    need(mesh, "mesh");
    need(out_json, "out_json");
    const kitnet::TriMesh& m = mesh->mesh;
    nlohmann::ordered_json j;
    j["name"] = m.name();
    j["vertices"] = m.vertices().size();
    j["triangles"] = m.faces().size();
    j["watertight"] = m.watertight();
    j["volume"] = m.volume();
    j["centroid"] = {m.centroid().x(), m.centroid().y(), m.centroid().z()};
    const auto& h = m.obb().half_extents;
    j["obb_half_extents"] = {h[0], h[1], h[2]};
    j["eccentricity"] = kitnet::eccentricity(m);
    *out_json = dup_string(j.dump());
  });
}

KITNET_API kitnet_status kitnet_mesh_contains(const kitnet_mesh* mesh, const double point[3], int* out_inside) {
  return guarded([&] {
    need(mesh, "mesh");
    need(point, "point");
    need(out_inside, "out_inside");
    *out_inside = kitnet::contains(mesh->mesh, kitnet::Vec3(point[0], point[1], point[2])) ? 1 : 0;
  });
}

KITNET_API kitnet_status kitnet_mesh_eccentricity(const kitnet_mesh* mesh, double* out) {
  return guarded([&] {
    need(mesh, "mesh");
    need(out, "out");
    *out = kitnet::eccentricity(mesh->mesh);
  });
}

KITNET_API void kitnet_mesh_free(kitnet_mesh* mesh) { delete mesh; }

KITNET_API kitnet_status kitnet_render(const kitnet_config* config, const kitnet_mesh* mesh, const double quat_wxyz[4],
                                       const double position[3], kitnet_image** out, int64_t* out_hits) {
  return guarded([&] {
    need(config, "config");
    need(mesh, "mesh");
    need(quat_wxyz, "quat_wxyz");
    need(position, "position");
    need(out, "out");
    *out = nullptr;
    const auto q = kitnet::UnitQuaternion::from_wxyz(quat_wxyz[0], quat_wxyz[1], quat_wxyz[2], quat_wxyz[3]);
    const kitnet::Pose pose =
        kitnet::centroid_pose(mesh->mesh, q, kitnet::Vec3(position[0], position[1], position[2]));
    kitnet::RenderStats stats;
    kitnet::DepthImage img = kitnet::render_depth(mesh->mesh, pose, config->cfg.scene().camera, &stats);
    if (out_hits) *out_hits = static_cast<int64_t>(stats.hit_pixels);
    *out = new kitnet_image{std::move(img)};
  });
}

KITNET_API kitnet_status kitnet_image_read(const char* path, kitnet_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new kitnet_image{kitnet::read_kndi(path)};
  });
}

KITNET_API kitnet_status kitnet_image_write(const kitnet_image* image, const char* path) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    kitnet::write_kndi(image->image, path);
  });
}

KITNET_API kitnet_status kitnet_image_write_png(const kitnet_image* image, const char* path) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    kitnet::write_png16(image->image, path);
  });
}

KITNET_API kitnet_status kitnet_image_size(const kitnet_image* image, int* width, int* height) {
  return guarded([&] {
    need(image, "image");
    if (width) *width = image->image.width();
    if (height) *height = image->image.height();
  });
}

KITNET_API kitnet_status kitnet_image_data(const kitnet_image* image, const float** out) {
  return guarded([&] {
    need(image, "image");
    need(out, "out");
    *out = image->image.data().data();
  });
}

KITNET_API kitnet_status kitnet_image_stats(const kitnet_image* image, char** out_json) {
  return guarded([&] {
    need(image, "image");
    need(out_json, "out_json");
    const kitnet::DepthImage& im = image->image;
    std::size_t n = 0;
    double lo = 0.0, hi = 0.0, sum = 0.0;
    for (float d : im.data()) {
      if (d <= 0.0f) continue;
      lo = n == 0 ? d : std::min<double>(lo, d);
      hi = n == 0 ? d : std::max<double>(hi, d);
      sum += d;
      ++n;
    }
    nlohmann::ordered_json j;
    j["width"] = im.width();
    j["height"] = im.height();
    j["foreground"] = n;
    j["min_depth"] = n ? nlohmann::ordered_json(lo) : nlohmann::ordered_json(nullptr);
    j["max_depth"] = n ? nlohmann::ordered_json(hi) : nlohmann::ordered_json(nullptr);
    j["mean_depth"] = n ? nlohmann::ordered_json(sum / static_cast<double>(n)) : nlohmann::ordered_json(nullptr);
    *out_json = dup_string(j.dump());
  });
}

KITNET_API void kitnet_image_free(kitnet_image* image) { delete image; }

KITNET_API kitnet_status kitnet_percent_fit(const kitnet_mesh* object, const double object_pose[7],
                                            const kitnet_mesh* cavity, const double cavity_pose[7], uint64_t samples,
                                            uint64_t seed, double* out_fit, double* out_ci_low, double* out_ci_high) {
  return guarded([&] {
    need(object, "object");
    need(object_pose, "object_pose");
    need(cavity, "cavity");
    need(cavity_pose, "cavity_pose");
    need(out_fit, "out_fit");
    kitnet::Rng rng(seed);
    const kitnet::FitResult r = kitnet::percent_fit(object->mesh, pose_from(object_pose), cavity->mesh,
                                                    pose_from(cavity_pose), static_cast<std::size_t>(samples), rng);
    *out_fit = r.kappa_hat;
    if (out_ci_low) *out_ci_low = r.ci95_low;
    if (out_ci_high) *out_ci_high = r.ci95_high;
  });
}

KITNET_API kitnet_status kitnet_run_trial(const kitnet_config* config, char** out_report_json) {
  return guarded([&] {
    need(config, "config");
    need(out_report_json, "out_report_json");
    const kitnet::SuiteTrial t = kitnet::run_configured_trial(config->cfg);
    nlohmann::ordered_json j = kitnet::trial_json(t);
    j["wall_time_s"] = t.report.wall_time_s;
    *out_report_json = dup_string(j.dump());
  });
}

KITNET_API kitnet_status kitnet_run_suite(const kitnet_config* config, const char* out_dir, char** out_summary_json) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    const auto trials = kitnet::run_suite(config->cfg);
    const auto summary = kitnet::write_suite_outputs(trials, config->cfg, out_dir);
    if (out_summary_json) *out_summary_json = dup_string(summary.dump());
  });
}

KITNET_API kitnet_status kitnet_generate_dataset(const kitnet_config* config, const char* corpus_dir,
                                                 const char* out_dir, char** out_manifest_json) {
  return guarded([&] {
    need(config, "config");
    need(corpus_dir, "corpus_dir");
    need(out_dir, "out_dir");
    const kitnet::RunConfig& c = config->cfg;
    c.validate();
    const kitnet::DatasetSpec spec = c.dataset();
    nlohmann::ordered_json echo = c.resolved();
    echo.erase("output");
    const auto manifest = kitnet::generate_dataset(corpus_dir, spec.pairs_per_mesh, spec.variant, c.dataset_config(),
                                                   out_dir, c.seed(), echo, spec.mesh_scale);
    if (out_manifest_json) *out_manifest_json = dup_string(manifest.dump());
  });
}

KITNET_API kitnet_status kitnet_estimator_handshake(const char* endpoint, double timeout_s, char** out_json) {
  return guarded([&] {
    need(endpoint, "endpoint");
    need(out_json, "out_json");
    const kitnet::Handshake h = kitnet::external_handshake(endpoint, timeout_s);
    nlohmann::ordered_json j;
    j["v"] = h.version;
    j["raster"] = {h.raster_width, h.raster_height};
    *out_json = dup_string(j.dump());
  });
}

}  // extern "C"
