/* kitnet C API.
 *
 * All functions return a kitnet_status. On failure a message is available
 * from kitnet_last_error() on the calling thread until the next call.
 * Strings returned through char** are owned by the caller and released
 * with kitnet_string_free. Handles are opaque and released with their
 * matching _free function; passing NULL to a _free function is a no-op.
 *
 * Units are meters and radians unless a name says otherwise. Quaternions
 * are (w, x, y, z). A pose is 7 doubles: quaternion then translation.
 */
#ifndef KITNET_KITNET_H
#define KITNET_KITNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(KITNET_BUILDING)
#    define KITNET_API __declspec(dllexport)
#  else
#    define KITNET_API __declspec(dllimport)
#  endif
#else
#  define KITNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kitnet_status {
  KITNET_OK = 0,
  KITNET_E_INVALID_ARGUMENT = 1,
  KITNET_E_PARSE = 2,
  KITNET_E_IO = 3,
  KITNET_E_NOT_WATERTIGHT = 4,
  KITNET_E_DEGENERATE = 5,
  KITNET_E_EMPTY_FOREGROUND = 6,
  KITNET_E_SAMPLING = 7,
  KITNET_E_PROTOCOL = 8,
  KITNET_E_TRANSPORT = 9,
  KITNET_E_CONFIG = 10,
  KITNET_E_SIZE_MISMATCH = 11,
  KITNET_E_NOT_FOUND = 12,
  KITNET_E_INTERNAL = 99
} kitnet_status;

typedef struct kitnet_config kitnet_config;
typedef struct kitnet_mesh kitnet_mesh;
typedef struct kitnet_image kitnet_image;

KITNET_API const char* kitnet_version(void);
KITNET_API const char* kitnet_status_name(kitnet_status status);
/* Message of the last failed call on this thread, "" if none. */
KITNET_API const char* kitnet_last_error(void);
KITNET_API void kitnet_string_free(char* s);

/* ---- configuration ---- */

/* json may be NULL for the defaults. Unknown keys are rejected. */
KITNET_API kitnet_status kitnet_config_create(const char* json, kitnet_config** out);
KITNET_API kitnet_status kitnet_config_load(const char* path, kitnet_config** out);
/* Dotted key, value parsed as JSON or else taken as a string. */
KITNET_API kitnet_status kitnet_config_set(kitnet_config* config, const char* key, const char* value);
/* Fully resolved document, defaults and seed included. */
KITNET_API kitnet_status kitnet_config_to_json(const kitnet_config* config, char** out_json);
KITNET_API void kitnet_config_free(kitnet_config* config);

/* ---- meshes ---- */

KITNET_API kitnet_status kitnet_mesh_load(const char* path, double scale, kitnet_mesh** out);
/* One of the built-in procedural shapes, by name. */
KITNET_API kitnet_status kitnet_mesh_procedural(const char* name, kitnet_mesh** out);
/* Names of the built-in shapes as a JSON array. */
KITNET_API kitnet_status kitnet_procedural_names(char** out_json);
/* Writes the built-in shapes as OBJ files into dir. */
KITNET_API kitnet_status kitnet_write_procedural_corpus(const char* dir);
/* {"name", "vertices", "triangles", "watertight", "volume", "centroid",
 *  "obb_half_extents", "eccentricity"} */
KITNET_API kitnet_status kitnet_mesh_info(const kitnet_mesh* mesh, char** out_json);
KITNET_API kitnet_status kitnet_mesh_contains(const kitnet_mesh* mesh, const double point[3], int* out_inside);
KITNET_API kitnet_status kitnet_mesh_eccentricity(const kitnet_mesh* mesh, double* out);
KITNET_API void kitnet_mesh_free(kitnet_mesh* mesh);

/* ---- depth images ---- */

/* Renders the mesh with its centroid at `position`, rotated by
 * `quat_wxyz` about the centroid, using the config's camera. The number of
 * foreground pixels goes to out_hits (may be NULL). */
KITNET_API kitnet_status kitnet_render(const kitnet_config* config, const kitnet_mesh* mesh, const double quat_wxyz[4],
                                       const double position[3], kitnet_image** out, int64_t* out_hits);
KITNET_API kitnet_status kitnet_image_read(const char* path, kitnet_image** out);
KITNET_API kitnet_status kitnet_image_write(const kitnet_image* image, const char* path);
/* 16-bit grayscale PNG of depth in millimeters. */
KITNET_API kitnet_status kitnet_image_write_png(const kitnet_image* image, const char* path);
KITNET_API kitnet_status kitnet_image_size(const kitnet_image* image, int* width, int* height);
/* Row-major float32 depth; valid while the image lives. */
KITNET_API kitnet_status kitnet_image_data(const kitnet_image* image, const float** out);
/* {"width", "height", "foreground", "min_depth", "max_depth", "mean_depth"} */
KITNET_API kitnet_status kitnet_image_stats(const kitnet_image* image, char** out_json);
KITNET_API void kitnet_image_free(kitnet_image* image);

/* ---- evaluation ---- */

KITNET_API kitnet_status kitnet_percent_fit(const kitnet_mesh* object, const double object_pose[7],
                                            const kitnet_mesh* cavity, const double cavity_pose[7], uint64_t samples,
                                            uint64_t seed, double* out_fit, double* out_ci_low, double* out_ci_high);

/* ---- commands ---- */

/* The trial of the config's "trial" section; report JSON out. */
KITNET_API kitnet_status kitnet_run_trial(const kitnet_config* config, char** out_report_json);
/* Runs the suite grid and writes results.jsonl, timings.jsonl, summary.csv
 * and summary.json into out_dir. Trial failures are data, not errors. */
KITNET_API kitnet_status kitnet_run_suite(const kitnet_config* config, const char* out_dir, char** out_summary_json);
KITNET_API kitnet_status kitnet_generate_dataset(const kitnet_config* config, const char* corpus_dir,
                                                 const char* out_dir, char** out_manifest_json);
/* {"v": 1, "raster": [w, h]} from an external estimator endpoint. */
KITNET_API kitnet_status kitnet_estimator_handshake(const char* endpoint, double timeout_s, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
