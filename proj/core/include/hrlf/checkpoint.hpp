#pragma once

// Parameter checkpoints in the dataset's raw-array-plus-manifest scheme:
// one little-endian float64 file per tensor and a manifest.json listing
// names, shapes and CRC32s.

#include "hrlf/hal.hpp"
#include "hrlf/hmi.hpp"
#include "hrlf/network.hpp"
#include "hrlf/nn.hpp"

#include <filesystem>
#include <string>

namespace hrlf::checkpoint {

void save_params(const nn::ParamList& params, const std::filesystem::path& dir);

/// Loads into existing parameters. Names, order and shapes must match the
/// manifest exactly; checksums are verified.
void load_params(const nn::ParamList& params, const std::filesystem::path& dir);

std::string model_config_json(const ModelConfig& config);
ModelConfig parse_model_config(const std::string& text);

/// `dir/model.json` (config and role) plus the parameter files.
void save_network(const Network& network, const std::filesystem::path& dir);
Network load_network(const std::filesystem::path& dir);

/// A trained student with its auxiliary networks, laid out as
/// `root/student/`, `root/stats/` and `root/discs/`.
struct StudentBundle {
  Network student;
  hmi::StatisticsNets stats;
  hal::ScaleDiscriminators discs;
};

void save_student(const Network& student, const hmi::StatisticsNets& stats,
                  const hal::ScaleDiscriminators& discs, const std::filesystem::path& root);
StudentBundle load_student(const std::filesystem::path& root);

}  // namespace hrlf::checkpoint
