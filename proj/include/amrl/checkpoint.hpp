#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "amrl/params.hpp"

namespace amrl {

// Checkpoints are a JSON manifest (name/shape/dtype/byte_offset per tensor)
// next to a single flat little-endian binary blob holding every tensor in
// manifest order. Adam moments are appended with the same scheme under
// "adam.m.<name>" / "adam.v.<name>" when present. `path` names the manifest;
// the blob is `<path>.bin`.
struct Checkpoint {
    NetworkParams params;
    std::optional<AdamState> adam;
    nlohmann::json meta;  // architecture/domain/config carried by the writer
};

void save_checkpoint(const std::string& path, const NetworkParams& params, const AdamState* adam = nullptr,
                     const nlohmann::json& meta = nlohmann::json::object());

Checkpoint load_checkpoint(const std::string& path);

}  // namespace amrl
