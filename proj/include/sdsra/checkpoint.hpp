#pragma once

#include <filesystem>
#include <iosfwd>

#include "sdsra/nn.hpp"

namespace sdsra {

inline constexpr const char* kCheckpointMagic = "SDSRA-CKPT v1";

// Layout on disk:
//   SDSRA-CKPT v1
//   <name> <dim> <dim> ...        one line per array, in layout order
//   payload <value count>
//   <value count little-endian IEEE-754 doubles>

void save_params(const ParamVector& params, std::ostream& out);

/// Reads a checkpoint into `params`, whose layout must match the stored one.
/// Throws CheckpointError and leaves `params` untouched on any mismatch.
void load_params(ParamVector& params, std::istream& in);

void save_params_file(const ParamVector& params, const std::filesystem::path& path);
void load_params_file(ParamVector& params, const std::filesystem::path& path);

}  // namespace sdsra
