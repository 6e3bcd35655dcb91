#include "hrlf/errors.hpp"
#include "hrlf_cli/commands.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

using namespace hrlf;
using namespace hrlf::cli;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "seed": 4,
  "data": {"synthetic": {"train_size": 24, "test_size": 12, "seq_len": [4, 4, 3], "dims": [3, 2, 2]}},
  "model": {"embed_dim": 4, "layers": 1, "heads": 2, "ff_dim": 8},
  "train": {"batch_size": 8, "teacher_epochs": 2, "student_epochs": 2},
  "eval": {"sweep_conditions": ["lav", "la"]}
})";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "hrlf");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& text, const std::string& name = "config.json") {
  std::ofstream(dir / name) << text;
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string patched(const std::function<void(nlohmann::json&)>& edit) {
  auto j = nlohmann::json::parse(kTinyConfig);
  edit(j);
  return j.dump();
}

}  // namespace

TEST_CASE("schema rejects unknown keys and bad values") {
  CHECK_THROWS_AS(parse_run_config(R"({"sed": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"embed_dim": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"eval": {"metric": "accuracy"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"data": {"synthetic": {"dims": [3, 2]}}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1, 2]"), ConfigError);
  const auto c = parse_run_config(kTinyConfig);
  CHECK(c.seed == 4);
  CHECK(c.synthetic.seed == 4);
  CHECK(c.train.seed == 4);
  CHECK(c.encoder.embed_dim == 4);
  CHECK(c.eval.sweep_conditions.size() == 2);
  CHECK(parse_run_config(kTinyConfig, 9).train.seed == 9);
  const auto schema = nlohmann::json::parse(run_config_schema());
  CHECK(schema.at("additionalProperties") == false);
}

TEST_CASE("HRLF_SEED overrides the config seed") {
  const auto dir = test::scratch_dir("cli-env");
  const auto path = write_config(dir, kTinyConfig);
  ::setenv("HRLF_SEED", "77", 1);
  const auto c = load_run_config(path);
  ::setenv("HRLF_SEED", "seven", 1);
  CHECK_THROWS_AS(load_run_config(path), ConfigError);
  ::unsetenv("HRLF_SEED");
  CHECK(c.seed == 77);
  CHECK(c.synthetic.seed == 77);
  CHECK(load_run_config(path).seed == 4);
}

TEST_CASE("gen-data is reproducible byte for byte and rejects invalid dims") {
  const auto dir = test::scratch_dir("cli-gen");
  const auto cfg = write_config(dir, kTinyConfig).string();
  REQUIRE(run({"gen-data", "--config", cfg, "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run({"gen-data", "--config", cfg, "--out", (dir / "b").string()}).code == 0);
  for (const auto& entry : fs::directory_iterator(dir / "a" / "data")) {
    CHECK(slurp(entry.path()) == slurp(dir / "b" / "data" / entry.path().filename()));
  }
  const auto bad = write_config(dir, patched([](auto& j) { j["data"]["synthetic"]["dims"] = {3, 0, 2}; }), "bad.json");
  const auto r = run({"gen-data", "--config", bad.string(), "--out", (dir / "c").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("dims") != std::string::npos);
}

TEST_CASE("train, eval and plot end to end") {
  const auto dir = test::scratch_dir("cli-e2e");
  const auto cfg = write_config(dir, kTinyConfig).string();
  const auto out = (dir / "out").string();
  REQUIRE(run({"gen-data", "--config", cfg, "--out", out}).code == 0);
  REQUIRE(run({"train", "--config", cfg, "--out", out, "--role", "teacher"}).code == 0);
  CHECK(fs::exists(dir / "out" / "teacher" / "teacher" / "model.json"));
  CHECK(fs::exists(dir / "out" / "teacher" / "history.jsonl"));

  const auto missing = run({"train", "--config", cfg, "--out", out, "--role", "student"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("--teacher-ckpt") != std::string::npos);

  REQUIRE(run({"train", "--config", cfg, "--out", out, "--role", "student", "--teacher-ckpt", "teacher"}).code == 0);
  REQUIRE(run({"train", "--config", cfg, "--out", out, "--role", "student", "--teacher-ckpt", "teacher", "--ablate",
               "frf"})
              .code == 0);
  CHECK(fs::exists(dir / "out" / "student" / "discs" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "student-wo-frf" / "student" / "model.json"));
  const auto run_record = nlohmann::json::parse(slurp(dir / "out" / "student-wo-frf" / "run.json"));
  CHECK(run_record.at("config").at("train").at("ablate") == nlohmann::json::array({"frf"}));

  REQUIRE(run({"eval", "--config", cfg, "--out", out, "--ckpt", "student", "--grid", "--sweep"}).code == 0);
  const auto reports = dir / "out" / "reports";
  const auto grid = slurp(reports / "student_grid.jsonl");
  const auto sweep = slurp(reports / "student_sweep.jsonl");
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 8);
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 11);
  REQUIRE(run({"eval", "--config", cfg, "--out", out, "--ckpt", "student", "--grid", "--sweep"}).code == 0);
  CHECK(slurp(reports / "student_grid.jsonl") == grid);
  CHECK(slurp(reports / "student_sweep.jsonl") == sweep);
  CHECK(slurp(reports / "student_grid.txt").find("Avg") != std::string::npos);

  REQUIRE(run({"eval", "--config", cfg, "--out", out, "--ckpt", "student-wo-frf", "--sweep"}).code == 0);
  const auto plot = run({"plot", "--out", out, "--reports", "reports/student_sweep.jsonl",
                         "reports/student-wo-frf_sweep.jsonl", "--name", "sweep"});
  REQUIRE(plot.code == 0);
  const auto svg = slurp(dir / "out" / "plots" / "sweep.svg");
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 10);
  CHECK(svg.find("student-wo-frf") != std::string::npos);

  const auto absent = run({"plot", "--out", out, "--reports", "reports/nothing.jsonl"});
  CHECK(absent.code != 0);
  const auto absolute = run({"plot", "--out", out, "--reports", (reports / "student_sweep.jsonl").string()});
  CHECK(absolute.code == 2);

  // a dataset whose dims disagree with the checkpoint
  const auto other = write_config(dir, patched([](auto& j) {
                                    j["data"]["synthetic"]["dims"] = {5, 2, 2};
                                    j["data"]["path"] = "other";
                                  }),
                                  "other.json");
  REQUIRE(run({"gen-data", "--config", other.string(), "--out", out}).code == 0);
  const auto mismatch = run({"eval", "--config", other.string(), "--out", out, "--ckpt", "student", "--grid"});
  CHECK(mismatch.code == 3);
  CHECK(mismatch.err.find("mismatch") != std::string::npos);
}

TEST_CASE("divergence exits nonzero with diagnostics") {
  const auto dir = test::scratch_dir("cli-nan");
  const auto cfg = write_config(dir, patched([](auto& j) {
                                  j["train"]["teacher_lr"] = 1e300;
                                  j["train"]["clip_norm"] = 0;
                                }))
                       .string();
  const auto out = (dir / "out").string();
  REQUIRE(run({"gen-data", "--config", cfg, "--out", out}).code == 0);
  const auto r = run({"train", "--config", cfg, "--out", out});
  CHECK(r.code == 4);
  CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("print-schema and usage errors") {
  const auto r = run({"--print-schema"});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).contains("properties"));
  CHECK(run({}).code != 0);
  CHECK(run({"train", "--out", "x", "--role", "coach"}).code != 0);
}
