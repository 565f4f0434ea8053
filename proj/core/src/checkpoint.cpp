#include "drape/error.hpp"
#include "drape/neural_surface.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace drape {

namespace {

constexpr const char* kMagic = "NDRAPE-CHECKPOINT";

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

std::string join(const std::vector<int>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? " " : "") << xs[i];
  return os.str();
}

std::vector<int> parse_ints(std::istringstream& is) {
  std::vector<int> out;
  int v;
  while (is >> v) out.push_back(v);
  return out;
}

}  // namespace

template <class Real>
void save_checkpoint(const SurfaceModel<Real>& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  const auto& cfg = model.config();
  os << kMagic << "\n"
     << "version " << kCheckpointVersion << "\n"
     << "encoding " << to_string(cfg.encoder.kind) << "\n"
     << "grid_resolutions " << (cfg.encoder.kind == InputEncoding::grid ? join(cfg.encoder.layer_resolutions) : "")
     << "\n"
     << "feature_dim " << cfg.encoder.feature_dim << "\n"
     << "num_frequencies " << cfg.encoder.num_frequencies << "\n"
     << "mlp_dims " << join(cfg.mlp.dims) << "\n"
     << "activation " << to_string(cfg.mlp.activation) << "\n"
     << "seed " << model.seed() << "\n"
     << "payload_floats " << model.size() << "\n"
     << "end\n";
  std::vector<float> payload(model.size());
  const auto params = model.parameters();
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<float>(params[i]);
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!os) throw Error(ErrorCode::IoFailure, "failed writing " + path);
}

SurfaceModel<float> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path);

  std::string line;
  if (!std::getline(is, line) || line != kMagic)
    throw Error(ErrorCode::FormatVersionMismatch, path + " is not a checkpoint");

  ModelConfig cfg;
  cfg.encoder.layer_resolutions.clear();
  std::uint64_t seed = 0;
  long long payload_floats = -1;
  bool saw_version = false, saw_end = false;
  while (std::getline(is, line)) {
    if (line == "end") {
      saw_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "version") {
      std::uint32_t v = 0;
      ls >> v;
      if (v != kCheckpointVersion)
        throw Error(ErrorCode::FormatVersionMismatch, "checkpoint version " + std::to_string(v));
      saw_version = true;
    } else if (key == "encoding") {
      std::string s;
      ls >> s;
      cfg.encoder.kind = parse_input_encoding(s);
    } else if (key == "grid_resolutions") {
      cfg.encoder.layer_resolutions = parse_ints(ls);
    } else if (key == "feature_dim") {
      ls >> cfg.encoder.feature_dim;
    } else if (key == "num_frequencies") {
      ls >> cfg.encoder.num_frequencies;
    } else if (key == "mlp_dims") {
      cfg.mlp.dims = parse_ints(ls);
    } else if (key == "activation") {
      std::string s;
      ls >> s;
      cfg.mlp.activation = parse_activation(s);
    } else if (key == "seed") {
      ls >> seed;
    } else if (key == "payload_floats") {
      ls >> payload_floats;
    } else {
      throw Error(ErrorCode::FormatVersionMismatch, "unknown checkpoint header key '" + key + "'");
    }
  }
  if (!saw_version || !saw_end) throw Error(ErrorCode::FormatVersionMismatch, "checkpoint header incomplete");

  SurfaceModel<float> model = [&] {
    try {
      return SurfaceModel<float>(cfg);
    } catch (const Error& e) {
      throw Error(ErrorCode::ShapeMismatch, std::string("checkpoint shapes invalid: ") + e.what());
    }
  }();
  if (payload_floats < 0 || static_cast<std::size_t>(payload_floats) != model.size())
    throw Error(ErrorCode::ShapeMismatch, "header declares " + std::to_string(payload_floats) +
                                              " floats but shapes need " + std::to_string(model.size()));

  std::vector<float> payload(model.size());
  is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (static_cast<std::size_t>(is.gcount()) != payload.size() * sizeof(float))
    throw Error(ErrorCode::IoFailure, "checkpoint payload truncated");
  if (is.peek() != std::char_traits<char>::eof())
    throw Error(ErrorCode::ShapeMismatch, "checkpoint has trailing bytes after the declared payload");

  std::memcpy(model.parameters().data(), payload.data(), payload.size() * sizeof(float));
  model.set_seed(seed);
  return model;
}

template void save_checkpoint<float>(const SurfaceModel<float>&, const std::string&);
template void save_checkpoint<double>(const SurfaceModel<double>&, const std::string&);

}  // namespace drape
