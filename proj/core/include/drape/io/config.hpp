#pragma once

#include "drape/collider.hpp"
#include "drape/encoding_bench.hpp"
#include "drape/rest_atlas.hpp"
#include "drape/trainer.hpp"

#include <istream>
#include <optional>
#include <string>

namespace drape {

struct GarmentSpec {
  /// OBJ with texture coordinates; empty selects the built-in square cloth.
  std::string obj;
  int resolution = 64;
  double size = 1.0;
  double height = 1.0;
};

enum class ColliderKind { none, obj, icosphere, torus, prism };

std::string to_string(ColliderKind k);
ColliderKind parse_collider_kind(const std::string& s);

struct ColliderSpec {
  ColliderKind kind = ColliderKind::none;
  std::string obj;
  Vec3 center = Vec3(0.5, 0.5, 0.5);
  double radius = 0.25;
  int subdivisions = 5;
  double major_radius = 0.3;
  double minor_radius = 0.1;
  int major_segments = 96;
  int minor_segments = 32;
  double length = 1.2;
  double width = 0.3;
  double height = 0.3;
  int tessellation = 64;
};

struct EvalSpec {
  int resolution = 64;
  std::uint64_t seed = 7;
};

enum class ExportMode { vertices, grid };

std::string to_string(ExportMode m);
ExportMode parse_export_mode(const std::string& s);

struct ExportSpec {
  ExportMode mode = ExportMode::vertices;
  int resolution = 128;
};

/// Everything a CLI run needs. Loaded from a sectioned key = value file:
///
///   [section]
///   ; comment lines start with a semicolon
///   key = value
///
/// Sections: garment, collider, model, train, weights, physics, sampler,
/// convergence, eval, export, bench, output. Unknown sections or keys are
/// errors. Lists are space separated. Relative paths resolve against the
/// config file's directory.
struct RunConfig {
  GarmentSpec garment;
  ColliderSpec collider;
  TrainConfig train;
  EvalSpec eval;
  ExportSpec exporter;
  BenchConfig bench;
  int pdf_dump_every = 0;

  /// Every violated field, empty when the config is usable.
  std::vector<std::string> problems() const;
  /// Throws ConfigError listing every violated field.
  void validate() const;
};

RunConfig parse_run_config(std::istream& is, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

/// Normalized form with every key; parses back to an equal RunConfig.
std::string to_ini(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

GarmentRestMesh make_garment(const GarmentSpec& spec);
std::optional<ColliderMesh> make_collider(const ColliderSpec& spec);

}  // namespace drape
