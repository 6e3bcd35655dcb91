#pragma once

// Multimodal sample model, synthetic generator, and the on-disk dataset
// format:
//
//   <dir>/manifest.json             task, shapes, splits, seed, CRC32 per file
//   <dir>/<split>_<modality>.f32    little-endian float32, n x T x d row-major
//   <dir>/<split>_labels.f32|.i32   regression scores | class indices

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hrlf::data {

enum class Modality : std::uint8_t { language = 0, audio = 1, visual = 2 };

inline constexpr std::size_t kNumModalities = 3;
inline constexpr std::array<Modality, kNumModalities> kModalities{
    Modality::language, Modality::audio, Modality::visual};

std::string_view modality_name(Modality m);
Modality parse_modality(std::string_view name);
constexpr std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }

enum class TaskKind { regression, classification };

std::string_view task_name(TaskKind task);
TaskKind parse_task(std::string_view name);

struct ModalityShape {
  std::size_t seq_len = 0;
  std::size_t dim = 0;
  bool operator==(const ModalityShape&) const = default;
};

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Class index for classification, score in [-range, range] for regression.
struct Label {
  float score = 0.0F;
  std::int32_t class_index = 0;
  bool operator==(const Label&) const = default;
};

struct MultimodalSample {
  std::array<FeatureMatrix, kNumModalities> features;  // T_m x d_m each
  Label label;

  [[nodiscard]] const FeatureMatrix& operator[](Modality m) const { return features[index_of(m)]; }
  [[nodiscard]] FeatureMatrix& operator[](Modality m) { return features[index_of(m)]; }
};

struct Split {
  std::string name;
  std::vector<MultimodalSample> samples;
};

struct SplitSize {
  std::string name;
  std::size_t size = 0;
  bool operator==(const SplitSize&) const = default;
};

struct DatasetManifest {
  TaskKind task = TaskKind::classification;
  int num_classes = 2;  // 1 for regression
  std::array<ModalityShape, kNumModalities> shapes{};
  std::vector<SplitSize> splits;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::uint32_t> checksums;  // file name -> CRC32

  bool operator==(const DatasetManifest&) const = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Split> splits;

  [[nodiscard]] const Split& split(std::string_view name) const;
};

struct SyntheticConfig {
  std::vector<SplitSize> splits{{"train", 512}, {"test", 256}};
  std::array<ModalityShape, kNumModalities> shapes{{{20, 16}, {20, 12}, {20, 8}}};
  TaskKind task = TaskKind::classification;
  int num_classes = 2;
  float score_range = 3.0F;
  double noise_scale = 1.0;
  /// Dimension of each modality's private nuisance factor.
  std::size_t nuisance_dim = 2;
  std::uint64_t seed = 0;
  /// Overrides the stream for the nuisance factors only; labels and the
  /// sentiment factor are unaffected.
  std::optional<std::uint64_t> nuisance_seed;
};

/// Ground-truth factors behind a synthetic dataset.
struct SyntheticLatents {
  /// Per split, per sample.
  std::vector<std::vector<double>> sentiment;
  /// Per split, per sample, per modality: nuisance vector.
  std::vector<std::vector<std::array<Eigen::VectorXd, kNumModalities>>> nuisance;
  /// Per modality: loading of the sentiment factor, T x d.
  std::array<Eigen::MatrixXd, kNumModalities> sentiment_loading;
  /// Per modality: nuisance loading, (T*d) x nuisance_dim.
  std::array<Eigen::MatrixXd, kNumModalities> nuisance_loading;
  /// Per modality: constant offset, T x d.
  std::array<Eigen::MatrixXd, kNumModalities> offset;
};

struct SyntheticDataset {
  Dataset dataset;
  SyntheticLatents latents;
};

/// Each modality sequence is an affine map of a shared sentiment factor s
/// and a private nuisance n_m plus Gaussian noise; the label depends on s only.
SyntheticDataset generate_synthetic_with_latents(const SyntheticConfig& config);
Dataset generate_synthetic(const SyntheticConfig& config);

/// Deterministic label from the sentiment factor.
Label label_from_sentiment(double s, TaskKind task, int num_classes, float score_range);

/// Validates shapes and finiteness of every sample against the manifest.
void validate(const Dataset& dataset);

std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

std::uint32_t crc32(std::span<const std::byte> bytes);

// Raw little-endian array files.
void write_f32(const std::filesystem::path& path, std::span<const float> values);
void write_i32(const std::filesystem::path& path, std::span<const std::int32_t> values);
void write_f64(const std::filesystem::path& path, std::span<const double> values);
std::vector<std::byte> read_bytes(const std::filesystem::path& path);
std::vector<float> decode_f32(std::span<const std::byte> bytes);
std::vector<std::int32_t> decode_i32(std::span<const std::byte> bytes);
std::vector<double> decode_f64(std::span<const std::byte> bytes);

}  // namespace hrlf::data
