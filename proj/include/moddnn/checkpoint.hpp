#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moddnn/moddnn.hpp"

namespace moddnn {

constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_model(const ModDnnModel& model);
// Throws IoError on a bad magic, version or truncated payload.
ModDnnModel deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const std::string& path, const ModDnnModel& model);
ModDnnModel load_model(const std::string& path);

}  // namespace moddnn
