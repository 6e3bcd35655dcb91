#include "hrlf/checkpoint.hpp"

#include "hrlf/data.hpp"
#include "hrlf/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace hrlf::checkpoint {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void save_params(const nn::ParamList& params, const fs::path& dir) {
  fs::create_directories(dir);
  json entries = json::array();
  for (const auto& p : params) {
    const auto& v = p.var.value();
    const std::string file = p.name + ".f64";
    data::write_f64(dir / file, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
    entries.push_back({{"name", p.name},
                       {"rows", v.rows()},
                       {"cols", v.cols()},
                       {"file", file},
                       {"crc32", data::crc32(data::read_bytes(dir / file))}});
  }
  json doc;
  doc["format"] = "hrlf-params";
  doc["version"] = 1;
  doc["params"] = entries;
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << doc.dump(2) << '\n';
}

void load_params(const nn::ParamList& params, const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("missing checkpoint manifest in " + dir.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (doc.value("format", "") != "hrlf-params") throw IoError("not a parameter manifest: " + dir.string());
  const auto& entries = doc.at("params");
  if (entries.size() != params.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(entries.size()) + " tensors, model has " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = entries[i];
    auto var = params[i].var;
    if (e.at("name").get<std::string>() != params[i].name) {
      throw ShapeError("checkpoint tensor " + std::to_string(i) + " is '" + e.at("name").get<std::string>() +
                       "', model expects '" + params[i].name + "'");
    }
    if (e.at("rows").get<ag::Index>() != var.rows() || e.at("cols").get<ag::Index>() != var.cols()) {
      throw ShapeError("checkpoint shape mismatch for " + params[i].name);
    }
    const auto bytes = data::read_bytes(dir / e.at("file").get<std::string>());
    if (data::crc32(bytes) != e.at("crc32").get<std::uint32_t>()) {
      throw ChecksumError("checkpoint tensor " + params[i].name + ": CRC32 mismatch");
    }
    const auto values = data::decode_f64(bytes);
    if (static_cast<ag::Index>(values.size()) != var.rows() * var.cols()) {
      throw ShapeError("checkpoint tensor " + params[i].name + " has wrong element count");
    }
    std::copy(values.begin(), values.end(), var.mutable_value().data());
  }
}

namespace {

nn::ParamList collected(const auto& module, std::string_view prefix) {
  nn::ParamList out;
  module.collect(out, prefix);
  return out;
}

}  // namespace

std::string model_config_json(const ModelConfig& c) {
  json j;
  j["input_dims"] = c.input_dims;
  j["embed_dim"] = c.encoder.embed_dim;
  j["kernel_size"] = c.encoder.kernel_size;
  j["layers"] = c.encoder.layers;
  j["heads"] = c.encoder.heads;
  j["ff_dim"] = c.encoder.ff_dim;
  j["dropout"] = c.encoder.dropout;
  j["task"] = data::task_name(c.task);
  j["num_outputs"] = c.num_outputs;
  j["combine"] = fusion::combine_name(c.combine);
  j["stats_hidden"] = c.stats_hidden;
  return j.dump(2);
}

ModelConfig parse_model_config(const std::string& text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    c.input_dims = j.at("input_dims").get<std::array<Index, data::kNumModalities>>();
    c.encoder.embed_dim = j.at("embed_dim").get<Index>();
    c.encoder.kernel_size = j.at("kernel_size").get<Index>();
    c.encoder.layers = j.at("layers").get<Index>();
    c.encoder.heads = j.at("heads").get<Index>();
    c.encoder.ff_dim = j.at("ff_dim").get<Index>();
    c.encoder.dropout = j.at("dropout").get<double>();
    c.task = data::parse_task(j.at("task").get<std::string>());
    c.num_outputs = j.at("num_outputs").get<Index>();
    c.combine = fusion::parse_combine(j.at("combine").get<std::string>());
    c.stats_hidden = j.at("stats_hidden").get<Index>();
  } catch (const json::exception& e) {
    throw IoError("malformed model config: " + std::string(e.what()));
  }
  c.validate();
  return c;
}

void save_network(const Network& network, const fs::path& dir) {
  fs::create_directories(dir);
  json doc;
  doc["role"] = role_name(network.role());
  doc["model"] = json::parse(model_config_json(network.config()));
  std::ofstream out(dir / "model.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "model.json").string());
  out << doc.dump(2) << '\n';
  out.close();
  save_params(network.parameters(), dir);
}

Network load_network(const fs::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw IoError("missing model.json in " + dir.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed model.json: " + std::string(e.what()));
  }
  const auto role_text = doc.value("role", "");
  if (role_text != "teacher" && role_text != "student") throw IoError("unknown role in " + dir.string());
  const Role role = role_text == "teacher" ? Role::teacher : Role::student;
  Network network(parse_model_config(doc.at("model").dump()), role, 0);
  load_params(network.parameters(), dir);
  return network;
}

void save_student(const Network& student, const hmi::StatisticsNets& stats,
                  const hal::ScaleDiscriminators& discs, const fs::path& root) {
  save_network(student, root / "student");
  save_params(collected(stats, "stats"), root / "stats");
  save_params(collected(discs, "discs"), root / "discs");
}

StudentBundle load_student(const fs::path& root) {
  StudentBundle bundle;
  bundle.student = load_network(root / "student");
  const auto& config = bundle.student.config();
  Rng rng(0);
  bundle.stats = hmi::StatisticsNets(config.dim(), config.statistics_width(), rng);
  bundle.discs = hal::ScaleDiscriminators(config.dim(), rng);
  load_params(collected(bundle.stats, "stats"), root / "stats");
  load_params(collected(bundle.discs, "discs"), root / "discs");
  return bundle;
}

}  // namespace hrlf::checkpoint
