#include "drape/io/config.hpp"

#include "drape/error.hpp"
#include "drape/io/obj.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace drape {

std::string to_string(ColliderKind k) {
  switch (k) {
    case ColliderKind::none: return "none";
    case ColliderKind::obj: return "obj";
    case ColliderKind::icosphere: return "icosphere";
    case ColliderKind::torus: return "torus";
    case ColliderKind::prism: return "prism";
  }
  return "none";
}

ColliderKind parse_collider_kind(const std::string& s) {
  for (ColliderKind k : {ColliderKind::none, ColliderKind::obj, ColliderKind::icosphere, ColliderKind::torus,
                         ColliderKind::prism})
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::ParseError, "unknown collider type '" + s + "'");
}

std::string to_string(ExportMode m) { return m == ExportMode::vertices ? "vertices" : "grid"; }

ExportMode parse_export_mode(const std::string& s) {
  if (s == "vertices") return ExportMode::vertices;
  if (s == "grid") return ExportMode::grid;
  throw Error(ErrorCode::ParseError, "unknown export mode '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const std::string t = trim(s);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) throw Error(ErrorCode::ParseError, "'" + s + "' is not a number");
  return v;
}

template <class Int>
Int parse_integer(const std::string& s) {
  Int v = 0;
  const std::string t = trim(s);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) throw Error(ErrorCode::ParseError, "'" + s + "' is not an integer");
  return v;
}

bool parse_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw Error(ErrorCode::ParseError, "'" + s + "' is not a boolean");
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream is(s);
  for (std::string tok; is >> tok;) out.push_back(parse_integer<int>(tok));
  return out;
}

Vec3 parse_vec3(const std::string& s) {
  std::string t = s;
  for (char& c : t)
    if (c == ',') c = ' ';
  std::istringstream is(t);
  Vec3 v;
  std::string a, b, c, extra;
  if (!(is >> a >> b >> c) || (is >> extra)) throw Error(ErrorCode::ParseError, "'" + s + "' is not a 3-vector");
  v << parse_double(a), parse_double(b), parse_double(c);
  return v;
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string fmt(const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

std::string fmt(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + std::to_string(xs[i]);
  return out;
}

std::string fmt(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <class T, class Parse, class Format>
Field field(const char* section, const char* key, T& ref, Parse parse, Format format) {
  return {section, key, [&ref, parse](const std::string& s) { ref = parse(s); }, [&ref, format] { return format(ref); }};
}

Field dbl(const char* section, const char* key, double& ref) {
  return field(section, key, ref, parse_double, [](double v) { return fmt(v); });
}
Field integer(const char* section, const char* key, int& ref) {
  return field(section, key, ref, parse_integer<int>, [](int v) { return std::to_string(v); });
}
Field u64(const char* section, const char* key, std::uint64_t& ref) {
  return field(section, key, ref, parse_integer<std::uint64_t>, [](std::uint64_t v) { return std::to_string(v); });
}
Field boolean(const char* section, const char* key, bool& ref) {
  return field(section, key, ref, parse_bool, [](bool v) { return fmt(v); });
}
Field text(const char* section, const char* key, std::string& ref) {
  return field(section, key, ref, trim, [](const std::string& v) { return v; });
}
Field vec3(const char* section, const char* key, Vec3& ref) {
  return field(section, key, ref, parse_vec3, [](const Vec3& v) { return fmt(v); });
}
Field ints(const char* section, const char* key, std::vector<int>& ref) {
  return field(section, key, ref, parse_int_list, [](const std::vector<int>& v) { return fmt(v); });
}
template <class E, class Parse>
Field enumeration(const char* section, const char* key, E& ref, Parse parse) {
  return field(section, key, ref, [parse](const std::string& s) { return parse(trim(s)); },
               [](E v) { return to_string(v); });
}

std::vector<Field> fields(RunConfig& c) {
  TrainConfig& t = c.train;
  return {
      text("garment", "obj", c.garment.obj),
      integer("garment", "resolution", c.garment.resolution),
      dbl("garment", "size", c.garment.size),
      dbl("garment", "height", c.garment.height),

      enumeration("collider", "type", c.collider.kind, parse_collider_kind),
      text("collider", "obj", c.collider.obj),
      vec3("collider", "center", c.collider.center),
      dbl("collider", "radius", c.collider.radius),
      integer("collider", "subdivisions", c.collider.subdivisions),
      dbl("collider", "major_radius", c.collider.major_radius),
      dbl("collider", "minor_radius", c.collider.minor_radius),
      integer("collider", "major_segments", c.collider.major_segments),
      integer("collider", "minor_segments", c.collider.minor_segments),
      dbl("collider", "length", c.collider.length),
      dbl("collider", "width", c.collider.width),
      dbl("collider", "height", c.collider.height),
      integer("collider", "tessellation", c.collider.tessellation),

      enumeration("model", "encoding", t.model.encoder.kind, parse_input_encoding),
      ints("model", "grid_resolutions", t.model.encoder.layer_resolutions),
      integer("model", "feature_dim", t.model.encoder.feature_dim),
      integer("model", "num_frequencies", t.model.encoder.num_frequencies),
      ints("model", "mlp_dims", t.model.mlp.dims),
      enumeration("model", "activation", t.model.mlp.activation, parse_activation),

      integer("train", "epochs", t.epochs),
      dbl("train", "learning_rate", t.optimizer.learning_rate),
      enumeration("train", "optimizer", t.optimizer.kind, parse_optimizer),
      dbl("train", "adam_beta1", t.optimizer.beta1),
      dbl("train", "adam_beta2", t.optimizer.beta2),
      dbl("train", "adam_epsilon", t.optimizer.epsilon),
      dbl("train", "gradient_clip", t.optimizer.clip_factor),
      dbl("train", "lr_decay", t.optimizer.decay),
      u64("train", "lr_decay_start", t.optimizer.decay_start),
      u64("train", "seed", t.seed),
      enumeration("train", "sampling_mode", t.sampling_mode, parse_sampling_mode),
      dbl("train", "structure_side", t.loss.side),
      enumeration("train", "strain_edges", t.loss.edges, parse_strain_edges),
      enumeration("train", "strain_form", t.loss.strain_form, parse_strain_form),
      enumeration("train", "reduction", t.batch.reduction, parse_reduction),
      integer("train", "chunk_size", t.batch.chunk_size),
      integer("train", "threads", t.batch.threads),
      integer("train", "max_resample", t.max_resample),
      integer("train", "checkpoint_every", t.checkpoint_every),

      dbl("weights", "strain", t.loss.weights.strain),
      dbl("weights", "bend", t.loss.weights.bend),
      dbl("weights", "gravity", t.loss.weights.gravity),
      dbl("weights", "collision", t.loss.weights.collision),

      dbl("physics", "mass", t.loss.consts.mass),
      dbl("physics", "gravity", t.loss.consts.gravity),
      vec3("physics", "gravity_axis", t.loss.consts.gravity_axis),
      dbl("physics", "collision_epsilon", t.loss.consts.collision_epsilon),

      dbl("sampler", "mu", t.sampler.mu),
      dbl("sampler", "gamma", t.sampler.gamma),
      integer("sampler", "pdf_rows", t.sampler.pdf_rows),
      integer("sampler", "pdf_cols", t.sampler.pdf_cols),
      integer("sampler", "n_points", t.sampler.n_points),
      integer("sampler", "lloyd_iterations", t.sampler.lloyd_iterations),
      dbl("sampler", "min_spacing", t.sampler.min_spacing),
      u64("sampler", "seed", t.sampler.seed),
      boolean("sampler", "include_strain", t.sampler.mask.strain),
      boolean("sampler", "include_bend", t.sampler.mask.bend),
      boolean("sampler", "include_gravity", t.sampler.mask.gravity),
      boolean("sampler", "include_collision", t.sampler.mask.collision),
      integer("sampler", "pdf_dump_every", c.pdf_dump_every),

      integer("convergence", "window", t.convergence.window),
      dbl("convergence", "tolerance", t.convergence.tolerance),
      boolean("convergence", "stop_early", t.convergence.stop_early),

      integer("eval", "resolution", c.eval.resolution),
      u64("eval", "seed", c.eval.seed),

      enumeration("export", "mode", c.exporter.mode, parse_export_mode),
      integer("export", "resolution", c.exporter.resolution),

      dbl("bench", "low_amplitude", c.bench.target.low_amplitude),
      dbl("bench", "low_frequency", c.bench.target.low_frequency),
      dbl("bench", "high_amplitude", c.bench.target.high_amplitude),
      dbl("bench", "high_frequency", c.bench.target.high_frequency),
      dbl("bench", "learning_rate", c.bench.optimizer.learning_rate),
      enumeration("bench", "optimizer", c.bench.optimizer.kind, parse_optimizer),
      integer("bench", "batch_size", c.bench.batch_size),
      integer("bench", "max_epochs", c.bench.max_epochs),
      integer("bench", "eval_every", c.bench.eval_every),
      integer("bench", "eval_resolution", c.bench.eval_resolution),
      dbl("bench", "threshold", c.bench.threshold),
      u64("bench", "seed", c.bench.seed),

      text("output", "dir", t.output_dir),
  };
}

std::string resolve_path(const std::string& p, const std::string& base) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (std::filesystem::path(base) / path).lexically_normal().string();
}

}  // namespace

std::vector<std::string> RunConfig::problems() const {
  std::vector<std::string> problems = train.problems();
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  if (garment.obj.empty()) {
    check(garment.resolution >= 2, "garment.resolution must be >= 2");
    check(garment.size > 0.0, "garment.size must be > 0");
  } else {
    check(std::filesystem::exists(garment.obj), "garment.obj: file not found: " + garment.obj);
  }
  switch (collider.kind) {
    case ColliderKind::none: break;
    case ColliderKind::obj:
      check(std::filesystem::exists(collider.obj), "collider.obj: file not found: " + collider.obj);
      break;
    case ColliderKind::icosphere:
      check(collider.radius > 0.0, "collider.radius must be > 0");
      check(collider.subdivisions >= 0 && collider.subdivisions <= 8, "collider.subdivisions must lie in [0,8]");
      break;
    case ColliderKind::torus:
      check(collider.major_radius > 0.0 && collider.minor_radius > 0.0, "collider torus radii must be > 0");
      check(collider.major_segments >= 3 && collider.minor_segments >= 3, "collider torus segments must be >= 3");
      break;
    case ColliderKind::prism:
      check(collider.length > 0.0 && collider.width > 0.0 && collider.height > 0.0,
            "collider prism dimensions must be > 0");
      check(collider.tessellation >= 1, "collider.tessellation must be >= 1");
      break;
  }
  check(eval.resolution >= 2, "eval.resolution must be >= 2");
  check(exporter.resolution >= 2, "export.resolution must be >= 2");
  check(bench.batch_size >= 1, "bench.batch_size must be >= 1");
  check(bench.max_epochs >= 0, "bench.max_epochs must be >= 0");
  check(bench.eval_every >= 1, "bench.eval_every must be >= 1");
  check(bench.eval_resolution >= 2, "bench.eval_resolution must be >= 2");
  check(bench.threshold > 0.0, "bench.threshold must be > 0");
  check(bench.optimizer.learning_rate > 0.0, "bench.learning_rate must be > 0");
  check(pdf_dump_every >= 0, "sampler.pdf_dump_every must be >= 0");
  return problems;
}

void RunConfig::validate() const {
  const std::vector<std::string> problems = this->problems();
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw Error(ErrorCode::ConfigError, msg);
}

RunConfig parse_run_config(std::istream& is, const std::string& base_dir) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config syntax: ") + e.message() + " at line " +
                                            std::to_string(e.line()));
  }
  RunConfig config;
  std::map<std::pair<std::string, std::string>, Field*> index;
  std::vector<Field> all = fields(config);
  for (Field& f : all) index[{f.section, f.key}] = &f;

  std::vector<std::string> problems;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      problems.push_back("key '" + section + "' must live inside a section");
      continue;
    }
    for (const auto& [key, value] : body) {
      auto it = index.find({section, key});
      if (it == index.end()) {
        problems.push_back("unknown key '" + section + "." + key + "'");
        continue;
      }
      try {
        it->second->set(value.data());
      } catch (const Error& e) {
        problems.push_back(section + "." + key + ": " + e.what());
      }
    }
  }
  config.garment.obj = resolve_path(config.garment.obj, base_dir);
  config.collider.obj = resolve_path(config.collider.obj, base_dir);
  config.train.output_dir = resolve_path(config.train.output_dir, base_dir);
  if (!problems.empty()) {
    for (auto& p : config.problems()) problems.push_back(std::move(p));
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorCode::ConfigError, msg);
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  const auto dir = std::filesystem::absolute(path).parent_path().string();
  RunConfig c = parse_run_config(is, dir);
  c.validate();
  return c;
}

std::string to_ini(const RunConfig& config) {
  RunConfig copy = config;
  std::ostringstream os;
  std::string section;
  for (const Field& f : fields(copy)) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get() << '\n';
  }
  return os.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_ini(a) == to_ini(b); }

GarmentRestMesh make_garment(const GarmentSpec& spec) {
  if (!spec.obj.empty()) return read_garment_obj(spec.obj);
  return make_square_cloth(spec.resolution, spec.size, spec.height);
}

std::optional<ColliderMesh> make_collider(const ColliderSpec& spec) {
  switch (spec.kind) {
    case ColliderKind::none: return std::nullopt;
    case ColliderKind::obj: return read_collider_obj(spec.obj);
    case ColliderKind::icosphere: return make_icosphere(spec.center, spec.radius, spec.subdivisions);
    case ColliderKind::torus:
      return make_torus(spec.center, spec.major_radius, spec.minor_radius, spec.major_segments, spec.minor_segments);
    case ColliderKind::prism: return make_prism(spec.center, spec.length, spec.width, spec.height, spec.tessellation);
  }
  return std::nullopt;
}

}  // namespace drape
