#include "mlet/model/checkpoint.hpp"

#include <fstream>

#include "mlet/embedding/table_io.hpp"
#include "mlet/error.hpp"

namespace mlet {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const ModelConfig& c) {
  j = json{{"num_dense", c.num_dense},
           {"cat_cardinalities", c.cat_cardinalities},
           {"d", c.d},
           {"k", c.k ? json(*c.k) : json(nullptr)},
           {"embedding_depth", c.embedding_depth},
           {"bottom_layers", c.bottom_layers},
           {"top_layers", c.top_layers},
           {"concat_dense", c.concat_dense},
           {"embedding_init_std", c.embedding_init_std},
           {"seed", c.seed}};
}

void from_json(const json& j, ModelConfig& c) {
  try {
    if (!j.is_object()) throw Error(ErrorKind::kFormat, "model config must be an object");
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("num_dense", c.num_dense);
    get("cat_cardinalities", c.cat_cardinalities);
    get("d", c.d);
    if (j.contains("k")) {
      if (j.at("k").is_null()) {
        c.k.reset();
      } else {
        c.k = j.at("k").get<std::size_t>();
      }
    }
    get("embedding_depth", c.embedding_depth);
    get("bottom_layers", c.bottom_layers);
    get("top_layers", c.top_layers);
    get("concat_dense", c.concat_dense);
    get("embedding_init_std", c.embedding_init_std);
    get("seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("model config: ") + e.what());
  }
}

void save_checkpoint(const CtrModel& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  json tensors = json::array();
  for (const auto& [name, m] : named_parameters(model)) {
    const std::string file = name + ".mlet";
    write_tensor(dir / file, *m);
    tensors.push_back({{"name", name}, {"file", file}, {"rows", m->rows()}, {"cols", m->cols()}});
  }
  const json manifest{{"format", "mlet-checkpoint"},
                      {"version", kCheckpointVersion},
                      {"config", model.config},
                      {"tensors", tensors}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + (dir / "manifest.json").string());
}

CtrModel load_checkpoint(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, manifest_path.string() + ": " + e.what());
  }
  if (!manifest.is_object() || manifest.value("format", "") != "mlet-checkpoint") {
    throw Error(ErrorKind::kFormat, manifest_path.string() + ": not a checkpoint manifest");
  }
  if (manifest.value("version", 0) != kCheckpointVersion) {
    throw Error(ErrorKind::kFormat, manifest_path.string() + ": unsupported checkpoint version");
  }
  if (!manifest.contains("config") || !manifest.contains("tensors") || !manifest["tensors"].is_array()) {
    throw Error(ErrorKind::kFormat, manifest_path.string() + ": missing config or tensor list");
  }
  ModelConfig config;
  from_json(manifest["config"], config);
  // init_model fixes the tensor layout; its random contents are overwritten.
  CtrModel model = init_model(config);
  auto params = named_parameters(model);
  const json& tensors = manifest["tensors"];
  if (tensors.size() != params.size()) {
    throw Error(ErrorKind::kFormat, manifest_path.string() + ": " + std::to_string(tensors.size()) +
                                        " tensors listed, config implies " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& entry = tensors[i];
    std::string name, file;
    try {
      name = entry.at("name").get<std::string>();
      file = entry.at("file").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kFormat, manifest_path.string() + ": tensor entry " + std::to_string(i) + ": " + e.what());
    }
    if (name != params[i].first) {
      throw Error(ErrorKind::kFormat, "checkpoint tensor " + std::to_string(i) + " is '" + name + "', expected '" +
                                          params[i].first + "'");
    }
    if (fs::path(file).has_parent_path()) throw Error(ErrorKind::kFormat, "tensor file outside checkpoint: " + file);
    Mat m = read_tensor(dir / file);
    if (!m.same_shape(*params[i].second)) {
      throw Error(ErrorKind::kFormat, "tensor " + name + " has shape " + m.shape_string() + ", expected " +
                                          params[i].second->shape_string());
    }
    *params[i].second = std::move(m);
  }
  return model;
}

}  // namespace mlet
