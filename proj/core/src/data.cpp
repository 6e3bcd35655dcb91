#include "hrlf/data.hpp"

#include "hrlf/errors.hpp"
#include "hrlf/rng.hpp"

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hrlf::data {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

std::string feature_file(std::string_view split, Modality m) {
  return std::string(split) + "_" + std::string(modality_name(m)) + ".f32";
}

std::string label_file(std::string_view split, TaskKind task) {
  return std::string(split) + (task == TaskKind::regression ? "_labels.f32" : "_labels.i32");
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double standard_normal_quantile(double p) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (standard_normal_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

template <typename T>
void write_le(const fs::path& path, std::span<const T> values) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  std::vector<std::byte> bytes(values.size() * sizeof(T));
  std::memcpy(bytes.data(), values.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < bytes.size(); i += sizeof(T)) {
      std::reverse(bytes.begin() + static_cast<std::ptrdiff_t>(i),
                   bytes.begin() + static_cast<std::ptrdiff_t>(i + sizeof(T)));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

template <typename T>
std::vector<T> decode_le(std::span<const std::byte> bytes) {
  if (bytes.size() % sizeof(T) != 0) throw ShapeError("byte count is not a multiple of element size");
  std::vector<std::byte> copy(bytes.begin(), bytes.end());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < copy.size(); i += sizeof(T)) {
      std::reverse(copy.begin() + static_cast<std::ptrdiff_t>(i),
                   copy.begin() + static_cast<std::ptrdiff_t>(i + sizeof(T)));
    }
  }
  std::vector<T> out(copy.size() / sizeof(T));
  std::memcpy(out.data(), copy.data(), copy.size());
  return out;
}

std::uint32_t file_crc(const fs::path& path) { return crc32(read_bytes(path)); }

}  // namespace

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::language: return "language";
    case Modality::audio: return "audio";
    case Modality::visual: return "visual";
  }
  return "?";
}

Modality parse_modality(std::string_view name) {
  for (auto m : kModalities) {
    if (modality_name(m) == name) return m;
  }
  throw ConfigError("unknown modality: " + std::string(name));
}

std::string_view task_name(TaskKind task) {
  return task == TaskKind::regression ? "regression" : "classification";
}

TaskKind parse_task(std::string_view name) {
  if (name == "regression") return TaskKind::regression;
  if (name == "classification") return TaskKind::classification;
  throw ConfigError("unknown task kind: " + std::string(name));
}

const Split& Dataset::split(std::string_view name) const {
  for (const auto& s : splits) {
    if (s.name == name) return s;
  }
  throw ConfigError("dataset has no split named '" + std::string(name) + "'");
}

Label label_from_sentiment(double s, TaskKind task, int num_classes, float score_range) {
  Label label;
  if (task == TaskKind::regression) {
    label.score = static_cast<float>(score_range * std::tanh(s));
    return label;
  }
  // equiprobable classes under s ~ N(0, 1)
  int cls = 0;
  for (int k = 1; k < num_classes; ++k) {
    if (s > standard_normal_quantile(static_cast<double>(k) / num_classes)) cls = k;
  }
  label.class_index = cls;
  label.score = static_cast<float>(cls);
  return label;
}

SyntheticDataset generate_synthetic_with_latents(const SyntheticConfig& config) {
  if (config.splits.empty()) throw ConfigError("no splits requested");
  for (const auto& s : config.splits) {
    if (s.size == 0) throw ConfigError("split '" + s.name + "' requests zero samples");
    if (s.name.empty()) throw ConfigError("split names must be non-empty");
  }
  for (const auto& shape : config.shapes) {
    if (shape.seq_len < 1 || shape.dim < 1) throw ConfigError("sequence length and dim must be >= 1");
  }
  if (config.task == TaskKind::classification && config.num_classes < 2) {
    throw ConfigError("classification needs num_classes >= 2");
  }
  if (!(config.noise_scale >= 0.0) || !std::isfinite(config.noise_scale)) {
    throw ConfigError("noise_scale must be finite and >= 0");
  }
  if (config.nuisance_dim < 1) throw ConfigError("nuisance_dim must be >= 1");

  Rng projection_rng(derive_seed(config.seed, 1));
  Rng sentiment_rng(derive_seed(config.seed, 2));
  Rng nuisance_rng(derive_seed(config.nuisance_seed.value_or(config.seed), 3));
  Rng noise_rng(derive_seed(config.seed, 4));

  SyntheticDataset out;
  auto& latents = out.latents;
  const auto k = static_cast<Eigen::Index>(config.nuisance_dim);
  for (std::size_t mi = 0; mi < kNumModalities; ++mi) {
    const auto t = static_cast<Eigen::Index>(config.shapes[mi].seq_len);
    const auto d = static_cast<Eigen::Index>(config.shapes[mi].dim);
    Eigen::MatrixXd a(t, d);
    Eigen::MatrixXd b(t * d, k);
    Eigen::MatrixXd c(t, d);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = projection_rng.normal();
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = projection_rng.normal();
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = 0.1 * projection_rng.normal();
    latents.sentiment_loading[mi] = std::move(a);
    latents.nuisance_loading[mi] = std::move(b);
    latents.offset[mi] = std::move(c);
  }

  auto& ds = out.dataset;
  ds.manifest.task = config.task;
  ds.manifest.num_classes = config.task == TaskKind::regression ? 1 : config.num_classes;
  ds.manifest.shapes = config.shapes;
  ds.manifest.splits = config.splits;
  ds.manifest.seed = config.seed;

  for (const auto& split_size : config.splits) {
    Split split{split_size.name, {}};
    split.samples.reserve(split_size.size);
    std::vector<double> s_values;
    std::vector<std::array<Eigen::VectorXd, kNumModalities>> n_values;
    for (std::size_t i = 0; i < split_size.size; ++i) {
      const double s = sentiment_rng.normal();
      MultimodalSample sample;
      std::array<Eigen::VectorXd, kNumModalities> nuisance;
      for (std::size_t mi = 0; mi < kNumModalities; ++mi) {
        Eigen::VectorXd n(k);
        for (Eigen::Index j = 0; j < k; ++j) n(j) = nuisance_rng.normal();
        const auto t = static_cast<Eigen::Index>(config.shapes[mi].seq_len);
        const auto d = static_cast<Eigen::Index>(config.shapes[mi].dim);
        const Eigen::VectorXd private_part = latents.nuisance_loading[mi] * n;
        FeatureMatrix x(t, d);
        for (Eigen::Index r = 0; r < t; ++r) {
          for (Eigen::Index col = 0; col < d; ++col) {
            const double value = s * latents.sentiment_loading[mi](r, col) + private_part(r * d + col) +
                                 latents.offset[mi](r, col) + config.noise_scale * noise_rng.normal();
            x(r, col) = static_cast<float>(value);
          }
        }
        sample.features[mi] = std::move(x);
        nuisance[mi] = std::move(n);
      }
      sample.label = label_from_sentiment(s, config.task, config.num_classes, config.score_range);
      split.samples.push_back(std::move(sample));
      s_values.push_back(s);
      n_values.push_back(std::move(nuisance));
    }
    ds.splits.push_back(std::move(split));
    latents.sentiment.push_back(std::move(s_values));
    latents.nuisance.push_back(std::move(n_values));
  }
  return out;
}

Dataset generate_synthetic(const SyntheticConfig& config) {
  return generate_synthetic_with_latents(config).dataset;
}

void validate(const Dataset& dataset) {
  const auto& m = dataset.manifest;
  if (m.splits.size() != dataset.splits.size()) throw ShapeError("split count differs from manifest");
  for (std::size_t si = 0; si < m.splits.size(); ++si) {
    const auto& split = dataset.splits[si];
    if (split.name != m.splits[si].name) throw ShapeError("split order differs from manifest");
    if (split.samples.size() != m.splits[si].size || split.samples.empty()) {
      throw ShapeError("split '" + split.name + "' size differs from manifest");
    }
    for (const auto& sample : split.samples) {
      for (std::size_t mi = 0; mi < kNumModalities; ++mi) {
        const auto& x = sample.features[mi];
        if (static_cast<std::size_t>(x.rows()) != m.shapes[mi].seq_len ||
            static_cast<std::size_t>(x.cols()) != m.shapes[mi].dim) {
          throw ShapeError("sample shape differs from manifest for " +
                           std::string(modality_name(kModalities[mi])));
        }
        if (!x.allFinite()) throw ShapeError("non-finite feature value in split '" + split.name + "'");
      }
      if (!std::isfinite(sample.label.score)) throw ShapeError("non-finite label");
      if (m.task == TaskKind::classification &&
          (sample.label.class_index < 0 || sample.label.class_index >= m.num_classes)) {
        throw ShapeError("class index out of range");
      }
    }
  }
}

std::uint32_t crc32(std::span<const std::byte> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1U << 30));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + offset), chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_f32(const fs::path& path, std::span<const float> values) { write_le(path, values); }
void write_i32(const fs::path& path, std::span<const std::int32_t> values) { write_le(path, values); }
void write_f64(const fs::path& path, std::span<const double> values) { write_le(path, values); }

std::vector<std::byte> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing file: " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failed: " + path.string());
  return bytes;
}

std::vector<float> decode_f32(std::span<const std::byte> bytes) { return decode_le<float>(bytes); }
std::vector<std::int32_t> decode_i32(std::span<const std::byte> bytes) {
  return decode_le<std::int32_t>(bytes);
}
std::vector<double> decode_f64(std::span<const std::byte> bytes) { return decode_le<double>(bytes); }

fs::path save_dataset(const Dataset& dataset, const fs::path& dir) {
  validate(dataset);
  fs::create_directories(dir);
  const auto& m = dataset.manifest;
  std::map<std::string, std::uint32_t> checksums;

  for (const auto& split : dataset.splits) {
    for (auto modality : kModalities) {
      const auto& shape = m.shapes[index_of(modality)];
      std::vector<float> flat;
      flat.reserve(split.samples.size() * shape.seq_len * shape.dim);
      for (const auto& sample : split.samples) {
        const auto& x = sample[modality];
        flat.insert(flat.end(), x.data(), x.data() + x.size());
      }
      const auto name = feature_file(split.name, modality);
      write_f32(dir / name, flat);
      checksums[name] = file_crc(dir / name);
    }
    const auto name = label_file(split.name, m.task);
    if (m.task == TaskKind::regression) {
      std::vector<float> labels;
      for (const auto& s : split.samples) labels.push_back(s.label.score);
      write_f32(dir / name, labels);
    } else {
      std::vector<std::int32_t> labels;
      for (const auto& s : split.samples) labels.push_back(s.label.class_index);
      write_i32(dir / name, labels);
    }
    checksums[name] = file_crc(dir / name);
  }

  json doc;
  doc["format"] = "hrlf-dataset";
  doc["version"] = kFormatVersion;
  doc["task"] = std::string(task_name(m.task));
  doc["num_classes"] = m.num_classes;
  json shapes = json::object();
  for (auto modality : kModalities) {
    const auto& shape = m.shapes[index_of(modality)];
    shapes[std::string(modality_name(modality))] = {{"seq_len", shape.seq_len}, {"dim", shape.dim}};
  }
  doc["modalities"] = shapes;
  json splits = json::array();
  for (const auto& s : m.splits) splits.push_back({{"name", s.name}, {"size", s.size}});
  doc["splits"] = splits;
  if (m.seed) {
    doc["seed"] = *m.seed;
  } else {
    doc["seed"] = nullptr;
  }
  json files = json::object();
  for (const auto& [name, crc] : checksums) files[name] = {{"crc32", crc}};
  doc["files"] = files;

  const auto manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << doc.dump(2) << '\n';
  return manifest_path;
}

Dataset load_dataset(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("missing file: " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  auto& m = ds.manifest;
  try {
    if (doc.at("format").get<std::string>() != "hrlf-dataset") throw IoError("not a dataset manifest");
    if (doc.at("version").get<int>() != kFormatVersion) throw IoError("unsupported manifest version");
    m.task = parse_task(doc.at("task").get<std::string>());
    m.num_classes = doc.at("num_classes").get<int>();
    for (auto modality : kModalities) {
      const auto& entry = doc.at("modalities").at(std::string(modality_name(modality)));
      m.shapes[index_of(modality)] = {entry.at("seq_len").get<std::size_t>(),
                                      entry.at("dim").get<std::size_t>()};
    }
    for (const auto& s : doc.at("splits")) {
      m.splits.push_back({s.at("name").get<std::string>(), s.at("size").get<std::size_t>()});
    }
    if (!doc.at("seed").is_null()) m.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [name, entry] : doc.at("files").items()) {
      m.checksums[name] = entry.at("crc32").get<std::uint32_t>();
    }
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  for (const auto& s : m.splits) {
    if (s.size < 1) throw ShapeError("split '" + s.name + "' has size 0");
  }
  for (const auto& shape : m.shapes) {
    if (shape.seq_len < 1 || shape.dim < 1) throw ShapeError("manifest dims must be >= 1");
  }

  auto checked_bytes = [&](const std::string& name, std::size_t expected_bytes) {
    auto bytes = read_bytes(dir / name);
    if (bytes.size() != expected_bytes) {
      throw ShapeError(name + ": holds " + std::to_string(bytes.size()) + " bytes, manifest implies " +
                       std::to_string(expected_bytes));
    }
    const auto it = m.checksums.find(name);
    if (it == m.checksums.end()) throw IoError(name + ": no checksum recorded in manifest");
    if (crc32(bytes) != it->second) throw ChecksumError(name + ": CRC32 mismatch");
    return bytes;
  };

  for (const auto& split_size : m.splits) {
    Split split{split_size.name, std::vector<MultimodalSample>(split_size.size)};
    for (auto modality : kModalities) {
      const auto& shape = m.shapes[index_of(modality)];
      const std::size_t per_sample = shape.seq_len * shape.dim;
      const auto name = feature_file(split.name, modality);
      const auto values = decode_f32(checked_bytes(name, split_size.size * per_sample * sizeof(float)));
      for (std::size_t i = 0; i < split_size.size; ++i) {
        FeatureMatrix x(static_cast<Eigen::Index>(shape.seq_len), static_cast<Eigen::Index>(shape.dim));
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(i * per_sample), per_sample, x.data());
        if (!x.allFinite()) throw ShapeError(name + ": non-finite value");
        split.samples[i][modality] = std::move(x);
      }
    }
    const auto name = label_file(split.name, m.task);
    if (m.task == TaskKind::regression) {
      const auto labels = decode_f32(checked_bytes(name, split_size.size * sizeof(float)));
      for (std::size_t i = 0; i < split_size.size; ++i) {
        if (!std::isfinite(labels[i])) throw ShapeError(name + ": non-finite label");
        split.samples[i].label.score = labels[i];
      }
    } else {
      const auto labels = decode_i32(checked_bytes(name, split_size.size * sizeof(std::int32_t)));
      for (std::size_t i = 0; i < split_size.size; ++i) {
        split.samples[i].label.class_index = labels[i];
        split.samples[i].label.score = static_cast<float>(labels[i]);
      }
    }
    ds.splits.push_back(std::move(split));
  }
  validate(ds);
  return ds;
}

}  // namespace hrlf::data
