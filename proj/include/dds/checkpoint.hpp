#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "dds/network.hpp"

namespace dds {

/// Everything needed to rebuild a network and resume or evaluate: the
/// architecture configuration, the training-iteration counter and the seed
/// the run started from. Tensor payloads are raw little-endian doubles, so
/// save/load round-trips are bit-exact.
struct CheckpointMeta {
  NetConfig net;
  int iteration = 0;
  std::uint64_t seed = 0;
  int width = 512;
  int height = 256;
};

void save_checkpoint(const std::filesystem::path& path, const DdsNet& net,
                     const CheckpointMeta& meta);

CheckpointMeta peek_checkpoint(const std::filesystem::path& path);

/// Rebuilds the network described by the checkpoint and fills its
/// parameters. Returns the network plus the stored metadata.
std::pair<std::unique_ptr<DdsNet>, CheckpointMeta> load_checkpoint(
    const std::filesystem::path& path);

}  // namespace dds
