#include "hrlf_cli/config.hpp"

#include "hrlf/errors.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hrlf::cli {

namespace {

using nlohmann::json;

constexpr const char* kSchema = R"json({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "hrlf run configuration",
  "type": "object",
  "additionalProperties": false,
  "properties": {
    "seed": {"type": "integer", "minimum": 0},
    "data": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "path": {"type": "string"},
        "synthetic": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "train_size": {"type": "integer", "minimum": 2},
            "test_size": {"type": "integer", "minimum": 1},
            "seq_len": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "integer", "minimum": 1}},
            "dims": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "integer", "minimum": 1}},
            "task": {"enum": ["classification", "regression"]},
            "num_classes": {"type": "integer", "minimum": 2},
            "score_range": {"type": "number", "exclusiveMinimum": 0},
            "noise_scale": {"type": "number", "minimum": 0},
            "nuisance_dim": {"type": "integer", "minimum": 1}
          }
        }
      }
    },
    "model": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "embed_dim": {"type": "integer", "minimum": 1},
        "kernel_size": {"type": "integer", "minimum": 1},
        "layers": {"type": "integer", "minimum": 0},
        "heads": {"type": "integer", "minimum": 1},
        "ff_dim": {"type": "integer", "minimum": 1},
        "dropout": {"type": "number", "minimum": 0, "maximum": 0.99},
        "combine": {"enum": ["mean", "sum", "first"]},
        "stats_hidden": {"type": "integer", "minimum": 0}
      }
    },
    "train": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "batch_size": {"type": "integer", "minimum": 2},
        "teacher_epochs": {"type": "integer", "minimum": 0},
        "student_epochs": {"type": "integer", "minimum": 0},
        "teacher_lr": {"type": "number", "exclusiveMinimum": 0},
        "student_lr": {"type": "number", "exclusiveMinimum": 0},
        "disc_lr": {"type": "number", "exclusiveMinimum": 0},
        "clip_norm": {"type": "number", "minimum": 0},
        "disc_steps": {"type": "integer", "minimum": 1},
        "kl_temperature": {"type": "number", "exclusiveMinimum": 0},
        "weights": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "task": {"type": "number", "minimum": 0},
            "frf": {"type": "number", "minimum": 0},
            "hmi": {"type": "number", "minimum": 0},
            "hal": {"type": "number", "minimum": 0},
            "kl": {"type": "number", "minimum": 0}
          }
        },
        "ablate": {"type": "array", "items": {"enum": ["frf", "hmi", "hal"]}},
        "msm": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "ratios": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0, "maximum": 1}},
            "conditions": {"type": "array", "minItems": 1, "items": {"enum": ["l", "a", "v", "la", "lv", "av", "lav"]}}
          }
        },
        "frf": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "squared_norm": {"type": "boolean"},
            "detach_targets": {"type": "boolean"}
          }
        }
      }
    },
    "eval": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "metric": {"enum": ["auto", "f1", "f1_macro", "mae"]},
        "split": {"type": "string"},
        "sweep_conditions": {"type": "array", "minItems": 1, "items": {"enum": ["l", "a", "v", "la", "lv", "av", "lav"]}}
      }
    }
  }
})json";

bool has_type(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "boolean") return value.is_boolean();
  if (type == "integer") return value.is_number_integer();
  if (type == "number") return value.is_number();
  if (type == "null") return value.is_null();
  return false;
}

std::string where(const std::string& pointer) { return pointer.empty() ? "/" : pointer; }

void check(const json& value, const json& schema, const std::string& pointer, std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    const auto type = schema["type"].get<std::string>();
    if (!has_type(value, type)) {
      errors.push_back(where(pointer) + ": expected " + type);
      return;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& option : schema["enum"]) found = found || option == value;
    if (!found) errors.push_back(where(pointer) + ": value " + value.dump() + " not in " + schema["enum"].dump());
  }
  if (value.is_number()) {
    const double v = value.get<double>();
    if (schema.contains("minimum") && v < schema["minimum"].get<double>()) {
      errors.push_back(where(pointer) + ": must be >= " + schema["minimum"].dump());
    }
    if (schema.contains("maximum") && v > schema["maximum"].get<double>()) {
      errors.push_back(where(pointer) + ": must be <= " + schema["maximum"].dump());
    }
    if (schema.contains("exclusiveMinimum") && !(v > schema["exclusiveMinimum"].get<double>())) {
      errors.push_back(where(pointer) + ": must be > " + schema["exclusiveMinimum"].dump());
    }
  }
  if (value.is_object()) {
    const json empty = json::object();
    const json& properties = schema.contains("properties") ? schema["properties"] : empty;
    const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
    for (const auto& [key, child] : value.items()) {
      if (properties.contains(key)) {
        check(child, properties[key], pointer + "/" + key, errors);
      } else if (closed) {
        errors.push_back(where(pointer) + ": unknown key '" + key + "'");
      }
    }
  }
  if (value.is_array()) {
    if (schema.contains("minItems") && value.size() < schema["minItems"].get<std::size_t>()) {
      errors.push_back(where(pointer) + ": needs at least " + schema["minItems"].dump() + " items");
    }
    if (schema.contains("maxItems") && value.size() > schema["maxItems"].get<std::size_t>()) {
      errors.push_back(where(pointer) + ": allows at most " + schema["maxItems"].dump() + " items");
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        check(value[i], schema["items"], pointer + "/" + std::to_string(i), errors);
      }
    }
  }
}

template <typename T>
void read(const json& object, const char* key, T& target) {
  if (object.contains(key)) target = object[key].get<T>();
}

std::vector<msm::TestingCondition> conditions_from(const json& array) {
  std::vector<msm::TestingCondition> out;
  for (const auto& c : array) out.push_back(msm::parse_condition(c.get<std::string>()));
  return out;
}

json conditions_to(const std::vector<msm::TestingCondition>& conditions) {
  json out = json::array();
  for (auto c : conditions) out.push_back(std::string(msm::condition_name(c)));
  return out;
}

}  // namespace

const std::string& run_config_schema() {
  static const std::string schema = json::parse(kSchema).dump(2);
  return schema;
}

std::vector<std::string> validate_against_schema(const std::string& instance, const std::string& schema) {
  json value;
  try {
    value = json::parse(instance);
  } catch (const json::exception& e) {
    return {std::string("not valid JSON: ") + e.what()};
  }
  std::vector<std::string> errors;
  check(value, json::parse(schema), "", errors);
  return errors;
}

RunConfig parse_run_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  const auto errors = validate_against_schema(text, run_config_schema());
  if (!errors.empty()) {
    std::ostringstream os;
    os << "invalid config:";
    for (const auto& e : errors) os << "\n  " << e;
    throw ConfigError(os.str());
  }
  const json doc = json::parse(text);
  RunConfig c;
  read(doc, "seed", c.seed);
  if (seed_override) c.seed = *seed_override;

  if (doc.contains("data")) {
    const auto& d = doc["data"];
    read(d, "path", c.data_path);
    if (d.contains("synthetic")) {
      const auto& s = d["synthetic"];
      std::size_t train_size = 512;
      std::size_t test_size = 256;
      read(s, "train_size", train_size);
      read(s, "test_size", test_size);
      c.synthetic.splits = {{"train", train_size}, {"test", test_size}};
      if (s.contains("seq_len")) {
        for (std::size_t m = 0; m < data::kNumModalities; ++m) c.synthetic.shapes[m].seq_len = s["seq_len"][m].get<std::size_t>();
      }
      if (s.contains("dims")) {
        for (std::size_t m = 0; m < data::kNumModalities; ++m) c.synthetic.shapes[m].dim = s["dims"][m].get<std::size_t>();
      }
      if (s.contains("task")) c.synthetic.task = data::parse_task(s["task"].get<std::string>());
      read(s, "num_classes", c.synthetic.num_classes);
      read(s, "score_range", c.synthetic.score_range);
      read(s, "noise_scale", c.synthetic.noise_scale);
      read(s, "nuisance_dim", c.synthetic.nuisance_dim);
    }
  }
  c.synthetic.seed = c.seed;

  if (doc.contains("model")) {
    const auto& m = doc["model"];
    read(m, "embed_dim", c.encoder.embed_dim);
    read(m, "kernel_size", c.encoder.kernel_size);
    read(m, "layers", c.encoder.layers);
    read(m, "heads", c.encoder.heads);
    read(m, "ff_dim", c.encoder.ff_dim);
    read(m, "dropout", c.encoder.dropout);
    if (m.contains("combine")) c.combine = fusion::parse_combine(m["combine"].get<std::string>());
    read(m, "stats_hidden", c.stats_hidden);
  }
  c.encoder.validate();

  auto& t = c.train;
  if (doc.contains("train")) {
    const auto& j = doc["train"];
    read(j, "batch_size", t.batch_size);
    read(j, "teacher_epochs", t.teacher_epochs);
    read(j, "student_epochs", t.student_epochs);
    read(j, "teacher_lr", t.teacher_lr);
    read(j, "student_lr", t.student_lr);
    read(j, "disc_lr", t.disc_lr);
    read(j, "clip_norm", t.clip_norm);
    read(j, "disc_steps", t.disc_steps);
    read(j, "kl_temperature", t.kl_temperature);
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      read(w, "task", t.weights.task);
      read(w, "frf", t.weights.frf);
      read(w, "hmi", t.weights.hmi);
      read(w, "hal", t.weights.hal);
      read(w, "kl", t.weights.kl);
    }
    if (j.contains("ablate")) {
      for (const auto& a : j["ablate"]) {
        const auto name = a.get<std::string>();
        if (name == "frf") t.ablation.use_frf = false;
        if (name == "hmi") t.ablation.use_hmi = false;
        if (name == "hal") t.ablation.use_hal = false;
      }
    }
    if (j.contains("msm")) {
      read(j["msm"], "ratios", t.msm.ratios);
      if (j["msm"].contains("conditions")) t.msm.conditions = conditions_from(j["msm"]["conditions"]);
    }
    if (j.contains("frf")) {
      read(j["frf"], "squared_norm", t.frf.squared_norm);
      read(j["frf"], "detach_targets", t.frf.detach_targets);
    }
  }
  t.seed = c.seed;
  t.validate();

  if (doc.contains("eval")) {
    const auto& e = doc["eval"];
    if (e.contains("metric") && e["metric"] != "auto") c.eval.metric = eval::parse_metric(e["metric"].get<std::string>());
    read(e, "split", c.eval.split);
    if (e.contains("sweep_conditions")) c.eval.sweep_conditions = conditions_from(e["sweep_conditions"]);
  }
  return c;
}

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("HRLF_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string text(raw);
  if (text.find_first_not_of("0123456789") != std::string::npos || text.size() > 20) {
    throw ConfigError("HRLF_SEED must be a non-negative integer, got '" + text + "'");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw ConfigError("HRLF_SEED out of range: '" + text + "'");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text = "{}";
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    text = os.str();
  }
  return parse_run_config(text, seed_from_env());
}

std::string to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  const auto& s = c.synthetic;
  std::array<std::size_t, data::kNumModalities> seq{};
  std::array<std::size_t, data::kNumModalities> dims{};
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    seq[m] = s.shapes[m].seq_len;
    dims[m] = s.shapes[m].dim;
  }
  json synthetic = {{"seq_len", seq},
                    {"dims", dims},
                    {"task", data::task_name(s.task)},
                    {"num_classes", s.num_classes},
                    {"score_range", s.score_range},
                    {"noise_scale", s.noise_scale},
                    {"nuisance_dim", s.nuisance_dim}};
  for (const auto& split : s.splits) {
    if (split.name == "train") synthetic["train_size"] = split.size;
    if (split.name == "test") synthetic["test_size"] = split.size;
  }
  j["data"] = {{"path", c.data_path}, {"synthetic", synthetic}};
  j["model"] = {{"embed_dim", c.encoder.embed_dim}, {"kernel_size", c.encoder.kernel_size},
                {"layers", c.encoder.layers},       {"heads", c.encoder.heads},
                {"ff_dim", c.encoder.ff_dim},       {"dropout", c.encoder.dropout},
                {"combine", fusion::combine_name(c.combine)}, {"stats_hidden", c.stats_hidden}};
  const auto& t = c.train;
  json ablate = json::array();
  if (!t.ablation.use_frf) ablate.push_back("frf");
  if (!t.ablation.use_hmi) ablate.push_back("hmi");
  if (!t.ablation.use_hal) ablate.push_back("hal");
  j["train"] = {{"batch_size", t.batch_size},
                {"teacher_epochs", t.teacher_epochs},
                {"student_epochs", t.student_epochs},
                {"teacher_lr", t.teacher_lr},
                {"student_lr", t.student_lr},
                {"disc_lr", t.disc_lr},
                {"clip_norm", t.clip_norm},
                {"disc_steps", t.disc_steps},
                {"kl_temperature", t.kl_temperature},
                {"weights", {{"task", t.weights.task}, {"frf", t.weights.frf}, {"hmi", t.weights.hmi},
                             {"hal", t.weights.hal}, {"kl", t.weights.kl}}},
                {"ablate", ablate},
                {"msm", {{"ratios", t.msm.ratios}, {"conditions", conditions_to(t.msm.conditions)}}},
                {"frf", {{"squared_norm", t.frf.squared_norm}, {"detach_targets", t.frf.detach_targets}}}};
  j["eval"] = {{"metric", c.eval.metric ? std::string(eval::metric_name(*c.eval.metric)) : std::string("auto")},
               {"split", c.eval.split},
               {"sweep_conditions", conditions_to(c.eval.sweep_conditions)}};
  return j.dump(2);
}

}  // namespace hrlf::cli
