// kitnet command line. Everything goes through the C API.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kitnet/kitnet.h"

namespace {

// 0 success, 1 runtime failure, 2 usage or config error.
int exit_code(kitnet_status s) {
  switch (s) {
    case KITNET_OK: return 0;
    case KITNET_E_CONFIG:
    case KITNET_E_INVALID_ARGUMENT:
    case KITNET_E_NOT_FOUND: return 2;
    default: return 1;
  }
}

struct Failure {
  kitnet_status status;
};

void check(kitnet_status s) {
  if (s != KITNET_OK) {
    std::cerr << "kitnet: " << kitnet_status_name(s) << ": " << kitnet_last_error() << "\n";
    throw Failure{s};
  }
}

struct Text {
  char* p = nullptr;
  ~Text() { kitnet_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

using ConfigPtr = std::unique_ptr<kitnet_config, decltype(&kitnet_config_free)>;
using MeshPtr = std::unique_ptr<kitnet_mesh, decltype(&kitnet_mesh_free)>;
using ImagePtr = std::unique_ptr<kitnet_image, decltype(&kitnet_image_free)>;

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", file, "JSON config file");
    cmd->add_option("--set", sets, "override, key=value (repeatable)");
  }

  ConfigPtr build(const std::vector<std::pair<std::string, std::string>>& extra = {}) const {
    kitnet_config* c = nullptr;
    check(file.empty() ? kitnet_config_create(nullptr, &c) : kitnet_config_load(file.c_str(), &c));
    ConfigPtr cfg(c, &kitnet_config_free);
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::cerr << "kitnet: --set expects key=value, got '" << s << "'\n";
        throw Failure{KITNET_E_CONFIG};
      }
      check(kitnet_config_set(cfg.get(), s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()));
    }
    for (const auto& [k, v] : extra) check(kitnet_config_set(cfg.get(), k.c_str(), v.c_str()));
    return cfg;
  }
};

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

void print_pretty(const std::string& json) { std::cout << nlohmann::ordered_json::parse(json).dump(2) << "\n"; }

MeshPtr load_mesh_arg(const std::string& arg, double scale) {
  kitnet_mesh* m = nullptr;
  const std::string prefix = "procedural:";
  if (arg.rfind(prefix, 0) == 0) {
    check(kitnet_mesh_procedural(arg.substr(prefix.size()).c_str(), &m));
  } else {
    check(kitnet_mesh_load(arg.c_str(), scale, &m));
  }
  return MeshPtr(m, &kitnet_mesh_free);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kitnet: depth-image kitting pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kitnet_version()));

  // gen-dataset
  ConfigArgs gd_cfg;
  std::string gd_corpus, gd_out;
  std::optional<std::uint64_t> gd_seed;
  std::optional<int> gd_pairs;
  std::string gd_variant;
  auto* gd = app.add_subcommand("gen-dataset", "render labeled depth-image pairs from a mesh corpus");
  gd_cfg.add_to(gd);
  gd->add_option("--corpus", gd_corpus, "directory of .obj/.stl/.off meshes")->required();
  gd->add_option("--out", gd_out, "output directory")->required();
  gd->add_option("--seed", gd_seed, "seed (overrides config and KITNET_SEED)");
  gd->add_option("--pairs", gd_pairs, "pairs per mesh");
  gd->add_option("--variant", gd_variant, "conformal or prismatic");

  // run-suite
  ConfigArgs rs_cfg;
  std::string rs_out;
  std::optional<std::uint64_t> rs_seed;
  std::optional<int> rs_workers;
  auto* rs = app.add_subcommand("run-suite", "run the trial grid and write results and summaries");
  rs_cfg.add_to(rs);
  rs->add_option("--out", rs_out, "output directory (default: output.dir)");
  rs->add_option("--seed", rs_seed, "seed (overrides config and KITNET_SEED)");
  rs->add_option("--workers", rs_workers, "worker threads, 0 = all cores");

  // run-trial
  ConfigArgs rt_cfg;
  std::string rt_out;
  std::optional<std::uint64_t> rt_seed;
  auto* rt = app.add_subcommand("run-trial", "run the single trial of the config's trial section");
  rt_cfg.add_to(rt);
  rt->add_option("--out", rt_out, "also write the report to this file");
  rt->add_option("--seed", rt_seed, "seed (overrides config and KITNET_SEED)");

  // render
  ConfigArgs rd_cfg;
  std::string rd_mesh, rd_out;
  std::vector<double> rd_quat{1.0, 0.0, 0.0, 0.0};
  std::vector<double> rd_pos{0.0, 0.0, 0.35};
  double rd_scale = 1.0;
  bool rd_png = false;
  auto* rd = app.add_subcommand("render", "render a mesh to a KNDI depth raster");
  rd_cfg.add_to(rd);
  rd->add_option("mesh", rd_mesh, "mesh file, or procedural:<name>")->required();
  rd->add_option("--out", rd_out, "output .kndi path")->required();
  rd->add_option("--quat", rd_quat, "rotation about the centroid, w x y z")->expected(4);
  rd->add_option("--position", rd_pos, "centroid position, x y z")->expected(3);
  rd->add_option("--scale", rd_scale, "mesh scale factor");
  rd->add_flag("--png", rd_png, "also write a 16-bit PNG (millimeters) next to the raster");

  // inspect
  std::string in_path;
  auto* in = app.add_subcommand("inspect", "print a KNDI header and depth statistics");
  in->add_option("file", in_path, "KNDI raster")->required();

  // corpus
  std::string co_out;
  bool co_list = false;
  auto* co = app.add_subcommand("corpus", "write the built-in procedural meshes as OBJ files");
  co->add_option("dir", co_out, "output directory");
  co->add_flag("--list", co_list, "only list the names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gd) {
      std::vector<std::pair<std::string, std::string>> extra;
      if (gd_seed) extra.emplace_back("seed", std::to_string(*gd_seed));
      if (gd_pairs) extra.emplace_back("dataset.pairs_per_mesh", std::to_string(*gd_pairs));
      if (!gd_variant.empty()) extra.emplace_back("dataset.variant", json_string(gd_variant));
      ConfigPtr cfg = gd_cfg.build(extra);
      Text manifest;
      check(kitnet_generate_dataset(cfg.get(), gd_corpus.c_str(), gd_out.c_str(), &manifest.p));
      print_pretty(manifest.str());
    } else if (*rs) {
      std::vector<std::pair<std::string, std::string>> extra;
      if (rs_seed) extra.emplace_back("seed", std::to_string(*rs_seed));
      if (rs_workers) extra.emplace_back("workers", std::to_string(*rs_workers));
      if (!rs_out.empty()) extra.emplace_back("output.dir", json_string(rs_out));
      ConfigPtr cfg = rs_cfg.build(extra);
      Text resolved;
      check(kitnet_config_to_json(cfg.get(), &resolved.p));
      const std::string out_dir = nlohmann::json::parse(resolved.str())["output"]["dir"].get<std::string>();
      Text summary;
      check(kitnet_run_suite(cfg.get(), out_dir.c_str(), &summary.p));
      const auto s = nlohmann::ordered_json::parse(summary.str());
      std::cout << "trials " << s["total_trials"] << ", completed " << s["completed"] << ", successes "
                << s["successes"] << "\n";
      std::cout << "wrote " << out_dir << "/{results.jsonl,timings.jsonl,summary.csv,summary.json}\n";
    } else if (*rt) {
      std::vector<std::pair<std::string, std::string>> extra;
      if (rt_seed) extra.emplace_back("seed", std::to_string(*rt_seed));
      ConfigPtr cfg = rt_cfg.build(extra);
      Text report;
      check(kitnet_run_trial(cfg.get(), &report.p));
      Text resolved;
      check(kitnet_config_to_json(cfg.get(), &resolved.p));
      nlohmann::ordered_json doc;
      doc["report"] = nlohmann::ordered_json::parse(report.str());
      doc["config"] = nlohmann::ordered_json::parse(resolved.str());
      const std::string text = doc.dump(2) + "\n";
      std::cout << text;
      if (!rt_out.empty()) {
        FILE* f = std::fopen(rt_out.c_str(), "wb");
        if (!f || std::fwrite(text.data(), 1, text.size(), f) != text.size()) {
          if (f) std::fclose(f);
          std::cerr << "kitnet: cannot write " << rt_out << "\n";
          return 1;
        }
        std::fclose(f);
      }
    } else if (*rd) {
      ConfigPtr cfg = rd_cfg.build();
      MeshPtr mesh = load_mesh_arg(rd_mesh, rd_scale);
      kitnet_image* im = nullptr;
      std::int64_t hits = 0;
      check(kitnet_render(cfg.get(), mesh.get(), rd_quat.data(), rd_pos.data(), &im, &hits));
      ImagePtr image(im, &kitnet_image_free);
      if (hits == 0) std::cerr << "kitnet: warning: mesh is outside the camera frustum, raster is all zero\n";
      check(kitnet_image_write(image.get(), rd_out.c_str()));
      std::cout << "wrote " << rd_out << " (" << hits << " foreground pixels)\n";
      if (rd_png) {
        std::string png = rd_out;
        const auto dot = png.rfind('.');
        const auto slash = png.rfind('/');
        if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) png.resize(dot);
        png += ".png";
        check(kitnet_image_write_png(image.get(), png.c_str()));
        std::cout << "wrote " << png << "\n";
      }
    } else if (*in) {
      kitnet_image* im = nullptr;
      check(kitnet_image_read(in_path.c_str(), &im));
      ImagePtr image(im, &kitnet_image_free);
      Text stats;
      check(kitnet_image_stats(image.get(), &stats.p));
      const auto s = nlohmann::ordered_json::parse(stats.str());
      nlohmann::ordered_json doc;
      doc["file"] = in_path;
      doc["magic"] = "KNDI";
      doc["width"] = s["width"];
      doc["height"] = s["height"];
      doc["payload_bytes"] = s["width"].get<std::int64_t>() * s["height"].get<std::int64_t>() * 4;
      doc["foreground"] = s["foreground"];
      doc["min_depth"] = s["min_depth"];
      doc["max_depth"] = s["max_depth"];
      doc["mean_depth"] = s["mean_depth"];
      std::cout << doc.dump(2) << "\n";
    } else if (*co) {
      if (co_list) {
        Text names;
        check(kitnet_procedural_names(&names.p));
        for (const auto& n : nlohmann::json::parse(names.str())) std::cout << n.get<std::string>() << "\n";
      } else {
        if (co_out.empty()) {
          std::cerr << "kitnet: corpus needs an output directory\n";
          return 2;
        }
        check(kitnet_write_procedural_corpus(co_out.c_str()));
        std::cout << "wrote procedural corpus to " << co_out << "\n";
      }
    }
  } catch (const Failure& f) {
    return exit_code(f.status);
  }
  return 0;
}
