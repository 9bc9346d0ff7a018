/* Exercises the C API from C. Argument: a scratch directory. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

#include <kitnet/kitnet.h>

static int failures = 0;

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: CHECK(%s) failed\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

#define OK(call)                                                                                 \
  do {                                                                                           \
    kitnet_status s_ = (call);                                                                   \
    if (s_ != KITNET_OK) {                                                                       \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call, kitnet_status_name(s_), \
              kitnet_last_error());                                                              \
      ++failures;                                                                                \
    }                                                                                            \
  } while (0)

static void join(char* buf, size_t n, const char* dir, const char* name) { snprintf(buf, n, "%s/%s", dir, name); }

static void test_config(void) {
  kitnet_config* c = NULL;
  char* json = NULL;
  OK(kitnet_config_create(NULL, &c));
  OK(kitnet_config_set(c, "controller.eta", "0.5"));
  OK(kitnet_config_set(c, "estimator.kind", "perfect"));
  OK(kitnet_config_to_json(c, &json));
  CHECK(json && strstr(json, "\"eta\": 0.5"));
  CHECK(json && strstr(json, "\"perfect\""));
  kitnet_string_free(json);

  CHECK(kitnet_config_set(c, "controller.gain", "1") == KITNET_E_CONFIG);
  CHECK(strlen(kitnet_last_error()) > 0);
  CHECK(kitnet_config_set(NULL, "a", "1") == KITNET_E_INVALID_ARGUMENT);
  kitnet_config_free(c);
  kitnet_config_free(NULL);

  c = NULL;
  CHECK(kitnet_config_create("{\"camera\": {\"fov\": 1}}", &c) == KITNET_E_CONFIG);
  CHECK(c == NULL);
  CHECK(kitnet_config_load("/nonexistent/kitnet.json", &c) == KITNET_E_NOT_FOUND);

  CHECK(strcmp(kitnet_status_name(KITNET_E_TRANSPORT), "TRANSPORT_ERROR") == 0);
  CHECK(strcmp(kitnet_status_name(KITNET_OK), "OK") == 0);
  CHECK(strlen(kitnet_version()) > 0);
}

static void test_mesh(const char* scratch) {
  kitnet_mesh* m = NULL;
  char* json = NULL;
  double ecc = 0.0;
  int inside = -1;
  const double origin[3] = {0.0, 0.0, 0.0};
  const double far[3] = {1.0, 0.0, 0.0};
  char path[1024];

  OK(kitnet_procedural_names(&json));
  CHECK(json && strstr(json, "\"lbracket_equal\""));
  kitnet_string_free(json);

  CHECK(kitnet_mesh_procedural("teapot", &m) != KITNET_OK);
  OK(kitnet_mesh_procedural("box_brick", &m));
  OK(kitnet_mesh_info(m, &json));
  CHECK(json && strstr(json, "\"watertight\":true"));
  kitnet_string_free(json);
  OK(kitnet_mesh_eccentricity(m, &ecc));
  CHECK(ecc > 0.0);
  /* procedural meshes are centred on their centroid */
  OK(kitnet_mesh_contains(m, origin, &inside));
  CHECK(inside == 1);
  OK(kitnet_mesh_contains(m, far, &inside));
  CHECK(inside == 0);
  kitnet_mesh_free(m);

  join(path, sizeof path, scratch, "corpus");
  OK(kitnet_write_procedural_corpus(path));
  join(path, sizeof path, scratch, "corpus/tee.obj");
  m = NULL;
  OK(kitnet_mesh_load(path, 1.0, &m));
  CHECK(m != NULL);
  kitnet_mesh_free(m);
  CHECK(kitnet_mesh_load("/nonexistent/x.obj", 1.0, &m) == KITNET_E_IO);
}

static void test_images(const char* scratch) {
  kitnet_config* c = NULL;
  kitnet_mesh* m = NULL;
  kitnet_image* img = NULL;
  kitnet_image* back = NULL;
  const float* data = NULL;
  const float* data2 = NULL;
  int w = 0, h = 0;
  int64_t hits = -1;
  char* json = NULL;
  const double q[4] = {1.0, 0.0, 0.0, 0.0};
  const double at[3] = {0.0, 0.0, 0.35};
  const double away[3] = {5.0, 0.0, 0.35};
  char path[1024];

  OK(kitnet_config_create(NULL, &c));
  OK(kitnet_mesh_procedural("lbracket_equal", &m));
  OK(kitnet_render(c, m, q, at, &img, &hits));
  CHECK(hits > 0);
  OK(kitnet_image_size(img, &w, &h));
  CHECK(w == 128 && h == 128);
  OK(kitnet_image_data(img, &data));
  CHECK(data != NULL);
  OK(kitnet_image_stats(img, &json));
  CHECK(json && strstr(json, "\"foreground\""));
  kitnet_string_free(json);

  join(path, sizeof path, scratch, "a.kndi");
  OK(kitnet_image_write(img, path));
  OK(kitnet_image_read(path, &back));
  OK(kitnet_image_data(back, &data2));
  CHECK(data2 && memcmp(data, data2, sizeof(float) * 128 * 128) == 0);
  join(path, sizeof path, scratch, "a.png");
  OK(kitnet_image_write_png(img, path));
  CHECK(kitnet_image_read("/nonexistent/a.kndi", &back) == KITNET_E_IO);
  kitnet_image_free(back);
  kitnet_image_free(img);

  /* out of the frustum: an empty raster, not an error */
  img = NULL;
  OK(kitnet_render(c, m, q, away, &img, &hits));
  CHECK(hits == 0);
  kitnet_image_free(img);

  kitnet_mesh_free(m);
  kitnet_config_free(c);
}

static void test_fit_and_trial(void) {
  kitnet_mesh* m = NULL;
  kitnet_config* c = NULL;
  char* json = NULL;
  double fit = 0.0, lo = 0.0, hi = 0.0;
  const double id[7] = {1, 0, 0, 0, 0, 0, 0};
  const double moved[7] = {1, 0, 0, 0, 1, 0, 0};

  OK(kitnet_mesh_procedural("tee", &m));
  OK(kitnet_percent_fit(m, id, m, id, 2000, 7, &fit, &lo, &hi));
  CHECK(fit == 1.0 && lo == 1.0 && hi == 1.0);
  OK(kitnet_percent_fit(m, moved, m, id, 2000, 7, &fit, &lo, &hi));
  CHECK(fit == 0.0);
  CHECK(kitnet_percent_fit(m, id, m, id, 0, 7, &fit, &lo, &hi) != KITNET_OK);
  kitnet_mesh_free(m);

  OK(kitnet_config_create("{\"seed\": 3, \"estimator\": {\"kind\": \"perfect\"}, \"suite\": {\"fit_samples\": 2000}}",
                          &c));
  OK(kitnet_run_trial(c, &json));
  CHECK(json && strstr(json, "\"terminated_by\""));
  CHECK(json && strstr(json, "\"percent_fit\""));
  kitnet_string_free(json);
  kitnet_config_free(c);

  CHECK(kitnet_estimator_handshake("tcp://127.0.0.1:1", 0.5, &json) == KITNET_E_TRANSPORT);
  CHECK(kitnet_estimator_handshake("ftp://x", 0.5, &json) == KITNET_E_INVALID_ARGUMENT);
}

int main(int argc, char** argv) {
  const char* scratch = argc > 1 ? argv[1] : "capi_scratch";
  mkdir(scratch, 0755);
  test_config();
  test_mesh(scratch);
  test_images(scratch);
  test_fit_and_trial();
  CHECK(strlen(kitnet_last_error()) > 0);
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
