#pragma once

#include "rmesn/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rmesn {

/// Binary model container: magic "RMESNMDL", u32 version, then tagged
/// sections (4-byte tag, u64 byte length, payload). Integers are u64 and
/// reals IEEE-754 doubles, all little-endian. Sections: CONF (config text),
/// HEAD (dims and class names), NORM, RESV, PROJ, RDOT.
std::vector<std::uint8_t> serialize_model(const FittedModel& model);
/// Throws InvalidInput on a malformed or truncated container.
FittedModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace rmesn
