#include "hrlf_cli/commands.hpp"

#include "hrlf/checkpoint.hpp"
#include "hrlf/errors.hpp"
#include "hrlf/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>

namespace hrlf::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

fs::path under(const fs::path& out, const fs::path& relative) {
  if (relative.is_absolute()) throw ConfigError("paths must be relative to --out: " + relative.string());
  return out / relative;
}

data::Dataset load_run_dataset(const RunConfig& config, const fs::path& out) {
  const auto dir = under(out, config.data_path);
  if (!fs::exists(dir / "manifest.json")) {
    throw IoError("no dataset at " + dir.string() + "; run gen-data first");
  }
  return data::load_dataset(dir);
}

ModelConfig model_for(const RunConfig& config, const data::DatasetManifest& manifest) {
  auto model = ModelConfig::for_dataset(manifest, config.encoder);
  model.combine = config.combine;
  model.stats_hidden = config.stats_hidden;
  model.validate();
  return model;
}

void check_compatible(const ModelConfig& model, const data::DatasetManifest& manifest) {
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    if (model.input_dims[m] != static_cast<Index>(manifest.shapes[m].dim)) {
      throw ShapeError("checkpoint/manifest mismatch: modality " +
                       std::string(data::modality_name(data::kModalities[m])) + " has dim " +
                       std::to_string(manifest.shapes[m].dim) + ", model expects " +
                       std::to_string(model.input_dims[m]));
    }
  }
  if (model.task != manifest.task || model.num_outputs != manifest.num_classes) {
    throw ShapeError("checkpoint/manifest mismatch: task or output count differs");
  }
}

void log_epochs(const train::TrainHistory& history, std::string_view phase, std::ostream& log) {
  for (const auto& record : history) {
    const auto& l = record.loss;
    log << phase << " epoch " << record.epoch + 1 << " total=" << l.total << " task=" << l.task
        << " frf=" << l.frf_total << " hmi=" << l.hmi << " hal_gen=" << l.hal_gen << " kl=" << l.kl << '\n';
  }
}

void write_run_record(const fs::path& dir, const RunConfig& config, std::string_view role,
                      const data::DatasetManifest& manifest, const std::string& teacher) {
  ordered_json j;
  j["role"] = role;
  j["config"] = ordered_json::parse(to_json(config));
  j["dataset"] = {{"path", config.data_path}, {"checksums", manifest.checksums}};
  if (!teacher.empty()) j["teacher"] = teacher;
  report::write_text(dir / "run.json", j.dump(2) + "\n");
}

std::string default_run_name(const TrainOptions& options, const train::AblationFlags& ablation) {
  std::string name(role_name(options.role));
  if (!ablation.use_frf) name += "-wo-frf";
  if (!ablation.use_hmi) name += "-wo-hmi";
  if (!ablation.use_hal) name += "-wo-hal";
  return name;
}

std::string report_kind(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read report " + path.string());
  std::string line;
  std::getline(in, line);
  try {
    return ordered_json::parse(line).at("kind").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("malformed report " + path.string());
  }
}

}  // namespace

fs::path cmd_gen_data(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto dataset = data::generate_synthetic(config.synthetic);
  const auto dir = under(out, config.data_path);
  data::save_dataset(dataset, dir);
  for (const auto& split : dataset.splits) log << "wrote " << split.samples.size() << " " << split.name << " samples\n";
  log << "dataset: " << dir.string() << '\n';
  return dir;
}

fs::path cmd_train(const RunConfig& config, const fs::path& out, const TrainOptions& options, std::ostream& log) {
  auto train_config = config.train;
  for (const auto& a : options.ablate) {
    if (a == "frf") train_config.ablation.use_frf = false;
    else if (a == "hmi") train_config.ablation.use_hmi = false;
    else if (a == "hal") train_config.ablation.use_hal = false;
    else throw ConfigError("unknown ablation '" + a + "' (expected frf, hmi or hal)");
  }
  RunConfig effective = config;
  effective.train = train_config;
  const auto dataset = load_run_dataset(config, out);
  const auto& train_split = dataset.split("train");
  const auto dir = under(out, options.name.value_or(default_run_name(options, train_config.ablation)));

  if (options.role == Role::teacher) {
    const auto result = train::train_teacher(train_split, model_for(config, dataset.manifest), train_config);
    log_epochs(result.history, "teacher", log);
    checkpoint::save_network(result.teacher, dir / "teacher");
    train::write_history(result.history, dir / "history.jsonl");
    write_run_record(dir, effective, "teacher", dataset.manifest, "");
  } else {
    if (!options.teacher_ckpt) throw ConfigError("--role student requires --teacher-ckpt");
    const auto teacher_dir = under(out, *options.teacher_ckpt) / "teacher";
    if (!fs::exists(teacher_dir / "model.json")) throw IoError("no teacher checkpoint at " + teacher_dir.string());
    const auto teacher = checkpoint::load_network(teacher_dir);
    check_compatible(teacher.config(), dataset.manifest);
    const auto result = train::train_student(train_split, teacher, train_config);
    log_epochs(result.history, "student", log);
    checkpoint::save_network(teacher, dir / "teacher");
    checkpoint::save_student(result.student, result.stats, result.discs, dir);
    train::write_history(result.history, dir / "history.jsonl");
    write_run_record(dir, effective, "student", dataset.manifest, options.teacher_ckpt->generic_string());
  }
  log << "checkpoint: " << dir.string() << '\n';
  return dir;
}

std::vector<fs::path> cmd_eval(const RunConfig& config, const fs::path& out, const EvalOptions& options,
                               std::ostream& log) {
  if (!options.grid && !options.sweep) throw ConfigError("eval needs --grid and/or --sweep");
  const auto run = under(out, options.ckpt);
  const auto dataset = load_run_dataset(config, out);
  Network network;
  if (fs::exists(run / "student" / "model.json")) {
    network = checkpoint::load_student(run).student;
  } else if (fs::exists(run / "teacher" / "model.json")) {
    network = checkpoint::load_network(run / "teacher");
  } else {
    throw IoError("no checkpoint at " + run.string());
  }
  check_compatible(network.config(), dataset.manifest);

  const auto& samples = dataset.split(config.eval.split).samples;
  const auto metric = config.eval.metric.value_or(eval::default_metric(dataset.manifest.task, dataset.manifest.num_classes));
  const auto predictor = eval::network_predictor(network);
  const std::string label = options.label.value_or(options.ckpt.filename().string());
  std::vector<fs::path> written;
  if (options.grid) {
    const auto report = eval::run_condition_grid(predictor, samples, metric);
    const auto stem = out / "reports" / (label + "_grid");
    report::write_grid(report, label, stem);
    log << report::grid_table(report, label);
    written.push_back(report::with_suffix(stem, ".jsonl"));
  }
  if (options.sweep) {
    const auto report = eval::run_ratio_sweep(predictor, samples, metric, config.eval.sweep_conditions, config.seed);
    const auto stem = out / "reports" / (label + "_sweep");
    report::write_sweep(report, label, stem);
    log << report::sweep_table(report, label);
    written.push_back(report::with_suffix(stem, ".jsonl"));
  }
  return written;
}

fs::path cmd_plot(const fs::path& out, const std::vector<fs::path>& reports, const std::string& name,
                  std::ostream& log) {
  if (reports.empty()) throw ConfigError("plot needs at least one report");
  std::vector<fs::path> paths;
  for (const auto& r : reports) paths.push_back(under(out, r));
  const auto kind = report_kind(paths.front());
  std::string svg;
  if (kind == "sweep") {
    std::vector<report::SweepSeries> series;
    for (const auto& p : paths) series.push_back(report::read_sweep(p));
    svg = report::sweep_svg(series);
  } else if (kind == "grid") {
    std::vector<report::GridSeries> series;
    for (const auto& p : paths) series.push_back(report::read_grid(p));
    svg = report::grid_svg(series);
  } else {
    throw ConfigError("unknown report kind '" + kind + "'");
  }
  const auto target = out / "plots" / (name + ".svg");
  report::write_text(target, svg);
  log << "plot: " << target.string() << '\n';
  return target;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Missing-modality multimodal sentiment training toolkit"};
  app.require_subcommand(1);
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "Print the config JSON schema and exit");

  std::string config_path;
  std::string out_dir;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration (defaults when omitted)");
    sub->add_option("--out", out_dir, "Output root; every other path is relative to it")->required();
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  common(gen);

  auto* trn = app.add_subcommand("train", "Train a teacher or a student");
  common(trn);
  std::string role = "teacher";
  std::string teacher_ckpt;
  std::vector<std::string> ablate;
  std::string run_name;
  trn->add_option("--role", role, "teacher or student")->check(CLI::IsMember({"teacher", "student"}));
  trn->add_option("--teacher-ckpt", teacher_ckpt, "Teacher run directory (student role)");
  trn->add_option("--ablate", ablate, "Disable frf, hmi or hal (repeatable)")
      ->check(CLI::IsMember({"frf", "hmi", "hal"}));
  trn->add_option("--name", run_name, "Run directory name");

  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint");
  common(evl);
  std::string ckpt;
  bool grid = false;
  bool sweep = false;
  std::string label;
  evl->add_option("--ckpt", ckpt, "Run directory to evaluate")->required();
  evl->add_flag("--grid", grid, "Seven-condition grid report");
  evl->add_flag("--sweep", sweep, "Missing-ratio sweep report");
  evl->add_option("--label", label, "Series label");

  auto* plt = app.add_subcommand("plot", "Render reports as SVG");
  std::vector<std::string> reports;
  std::string plot_name = "plot";
  plt->add_option("--out", out_dir, "Output root")->required();
  plt->add_option("--reports", reports, "JSONL report files")->required();
  plt->add_option("--name", plot_name, "Output file stem");

  if (argc >= 2 && std::string(argv[1]) == "--print-schema") {
    out << run_config_schema() << '\n';
    return 0;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const fs::path root(out_dir);
    if (plt->parsed()) {
      std::vector<fs::path> paths(reports.begin(), reports.end());
      cmd_plot(root, paths, plot_name, out);
      return 0;
    }
    const auto config = load_run_config(config_path);
    fs::create_directories(root);
    if (gen->parsed()) {
      cmd_gen_data(config, root, out);
    } else if (trn->parsed()) {
      TrainOptions options;
      options.role = role == "student" ? Role::student : Role::teacher;
      if (!teacher_ckpt.empty()) options.teacher_ckpt = teacher_ckpt;
      options.ablate = ablate;
      if (!run_name.empty()) options.name = run_name;
      cmd_train(config, root, options, out);
    } else if (evl->parsed()) {
      EvalOptions options{ckpt, grid, sweep, std::nullopt};
      if (!label.empty()) options.label = label;
      cmd_eval(config, root, options, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace hrlf::cli
