#pragma once

#include <filesystem>
#include <iosfwd>

#include "vpl/state.hpp"

namespace vpl {

/// Checkpoint container, format version 1:
///
///   8 bytes   magic "VPLCKPT\0"
///   u32       format version
///   u64       header length H
///   H bytes   JSON header: grid metadata, time, step, array names and sizes
///   f64       time again, bit-exact
///   doubles   f_plus, f_minus, phi (native little-endian IEEE-754), in
///             the order listed in the header
///
/// Nodal values are stored, so a save/load round trip is bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const SystemState& state, std::ostream& out);
SystemState load_checkpoint(std::istream& in);

void save_checkpoint(const SystemState& state, const std::filesystem::path& path);
SystemState load_checkpoint(const std::filesystem::path& path);

}  // namespace vpl
