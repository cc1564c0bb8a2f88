#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "contraseg/network.hpp"

namespace contraseg::model {

// Binary checkpoint: magic + JSON header (config, stage tag, seed, epoch,
// initialization lineage) followed by the named parameter buffers.
struct CheckpointHeader {
  NetworkConfig config;
  StageTag stage_tag = StageTag::fresh;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string init_hash;  // content hash of the checkpoint this run started from
};

void save_checkpoint(const Network& net, const std::filesystem::path& path,
                     int epoch, const std::string& init_hash);

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

// Restores every parameter bit-exactly. Fails loudly when the stored config
// does not match the network's.
CheckpointHeader load_checkpoint(Network& net,
                                 const std::filesystem::path& path);

// FNV-1a over the file bytes; used for lineage audit of fine-tuned models.
std::string checkpoint_content_hash(const std::filesystem::path& path);

}  // namespace contraseg::model
