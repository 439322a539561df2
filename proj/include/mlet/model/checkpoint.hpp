#pragma once

// Checkpoint directory layout:
//
//   manifest.json          {"format": "mlet-checkpoint", "version": 1,
//                           "config": {...}, "tensors": [{"name", "file", "rows", "cols"}, ...]}
//   <name>.mlet            one tensor per parameter in the table export format
//
// Tensor names follow named_parameters(), so factorized tables appear as
// "table.<f>.factor.<i>" and single-layer tables as "table.<f>.weight".

#include <filesystem>

#include <json.hpp>

#include "mlet/model/ctr_model.hpp"

namespace mlet {

inline constexpr int kCheckpointVersion = 1;

void to_json(nlohmann::json& j, const ModelConfig& c);
// Missing keys keep their ModelConfig defaults; wrong types throw ErrorKind::kFormat.
void from_json(const nlohmann::json& j, ModelConfig& c);

void save_checkpoint(const CtrModel& model, const std::filesystem::path& dir);
// Throws ErrorKind::kIo for missing files and ErrorKind::kFormat for a
// corrupt manifest or tensors whose shapes disagree with the config.
CtrModel load_checkpoint(const std::filesystem::path& dir);

}  // namespace mlet
