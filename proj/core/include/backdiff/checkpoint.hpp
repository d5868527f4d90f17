#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "backdiff/config.hpp"
#include "backdiff/denoiser.hpp"
#include "backdiff/diffusion.hpp"
#include "backdiff/sampling.hpp"

namespace backdiff {

// Everything sampling needs without the training corpus.
struct Checkpoint {
  ExperimentConfig config;
  DiffusionSetup setup;
  SizeDistribution sizes;
  DenoiserModel model;
};

// Binary layout, little-endian: "DGDMB1", u32 format version, config text,
// schedule (f64), limit vectors (f64), trigger, size histogram, model dims,
// named f32 tensors with shapes, then an FNV-1a 64 checksum of all
// preceding bytes.
std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Checksum stored in a serialized checkpoint.
std::uint64_t checkpoint_checksum(std::string_view bytes);

}  // namespace backdiff
