// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Criterion 6 trains the full desk-scale pipeline on three seeds and takes a
// few minutes; criteria 7 and 8 reuse its models.

#include "hrlf/eval.hpp"
#include "hrlf/hal.hpp"
#include "hrlf/hmi.hpp"
#include "hrlf/msm.hpp"
#include "hrlf/ops.hpp"
#include "hrlf/trainer.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace hrlf;
using hrlf::test::random_matrix;

namespace {

const double kLog2 = std::log(2.0);
constexpr std::uint64_t kSeeds[] = {0, 1, 2};

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Runner {
 public:
  void run(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream detail;
    detail << o.detail;
    if (budget_s > 0.0) {
      detail << (o.detail.empty() ? "" : "; ") << "time " << secs << "s (budget " << budget_s << "s)";
      if (secs > budget_s) o.pass = false;
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << detail.str() << std::endl;
    failed_ += o.pass ? 0 : 1;
  }

  [[nodiscard]] int failed() const { return failed_; }

 private:
  int failed_ = 0;
};

fusion::ScaleStack random_stack(Index batch, Index d, Rng& rng, bool trainable = false) {
  fusion::ScaleStack s;
  s.e1 = Var(random_matrix(batch, 3 * d, rng), trainable);
  s.e2 = Var(random_matrix(batch, 2 * d, rng), trainable);
  s.e3 = Var(random_matrix(batch, d, rng), trainable);
  return s;
}

void zero_layers(nn::Mlp& mlp) {
  for (auto& layer : mlp.layers()) {
    layer.weight().mutable_value().setZero();
    layer.bias().mutable_value().setZero();
  }
}

Outcome analytic_constants() {
  Rng rng(1);
  hmi::StatisticsNets stats(4, 8, rng);
  for (auto& n : stats.nets) zero_layers(n.net);
  const double l_hmi = hmi::loss_hmi(random_stack(6, 4, rng), random_stack(6, 4, rng), stats, 3).item();

  hal::ScaleDiscriminators discs(4, rng);
  for (auto& d : discs.discs) zero_layers(d.net);
  const double l_disc =
      hal::loss_hal_discriminator(random_stack(5, 4, rng), random_stack(5, 4, rng), discs).item();

  std::vector<data::Label> labels{{0.0F, 0}, {3.0F, 3}, {1.0F, 1}, {2.0F, 2}};
  const double ce = loss_task(Var(Matrix::Zero(4, 4)), labels, data::TaskKind::classification).item();

  const double e1 = std::abs(l_hmi - 6.0 * kLog2);
  const double e2 = std::abs(l_disc + 6.0 * kLog2);
  const double e3 = std::abs(ce - std::log(4.0));
  std::ostringstream s;
  s << "L_HMI=" << l_hmi << " L_disc=" << l_disc << " CE=" << ce;
  return {e1 < 1e-6 && e2 < 1e-6 && e3 < 1e-6, s.str()};
}

Outcome gradient_integrity() {
  constexpr Index kD = 4;
  constexpr Index kB = 4;
  std::vector<std::pair<std::string, double>> errors;

  {
    Rng rng(5);
    const frf::FrfParams params(kD, rng);
    frf::ModalityVars z;
    for (auto& v : z) v = Var::parameter(random_matrix(kB, kD, rng));
    nn::ParamList list;
    params.collect(list, "frf");
    auto vars = nn::vars_of(list);
    for (auto& v : z) vars.push_back(v);
    // full objective: the stop-gradient default has no derivative to compare against
    const frf::FrfOptions options{true, false};
    errors.emplace_back("FRF",
                        test::check_gradients([&] { return frf::loss_frf(z, params, options).total; }, vars).max_error);
  }
  {
    Rng rng(6);
    const hmi::StatisticsNets nets(kD, 6, rng);
    const auto t = random_stack(kB, kD, rng);
    const auto s = random_stack(kB, kD, rng, true);
    nn::ParamList list;
    nets.collect(list, "stats");
    auto vars = nn::vars_of(list);
    for (std::size_t i = 0; i < 3; ++i) vars.push_back(s.scale(i));
    errors.emplace_back("HMI", test::check_gradients([&] { return hmi::loss_hmi(t, s, nets, 5); }, vars).max_error);
  }
  {
    Rng rng(7);
    const hal::ScaleDiscriminators discs(kD, rng);
    const auto s = random_stack(kB, kD, rng, true);
    std::vector<Var> vars{s.e1, s.e2, s.e3};
    errors.emplace_back("HAL_gen",
                        test::check_gradients([&] { return hal::loss_hal_generator(s, discs); }, vars).max_error);
  }
  {
    Rng rng(8);
    const Var t(random_matrix(kB, 2, rng));
    Var s = Var::parameter(random_matrix(kB, 2, rng));
    std::vector<data::Label> labels{{1.0F, 1}, {-1.0F, 0}, {2.0F, 1}, {-0.5F, 0}};
    std::array<Var, 1> only_s{s};
    errors.emplace_back(
        "KL", test::check_gradients([&] { return loss_kl(t, s, data::TaskKind::classification); }, only_s).max_error);
    errors.emplace_back(
        "task",
        test::check_gradients([&] { return loss_task(s, labels, data::TaskKind::classification); }, only_s).max_error);
  }
  {
    data::SyntheticConfig sc;
    sc.splits = {{"train", kB}};
    sc.shapes = {{{4, 3}, {4, 2}, {3, 2}}};
    const auto ds = data::generate_synthetic(sc);
    encoder::EncoderConfig e;
    e.embed_dim = kD;
    e.layers = 1;
    e.heads = 2;
    e.ff_dim = 8;
    e.dropout = 0.0;
    const auto model = ModelConfig::for_dataset(ds.manifest, e);
    const Network teacher(model, Role::teacher, 1);
    // seed keeps every ReLU input clear of the finite-difference step
    const Network student(model, Role::student, 3);
    Rng rng(5);
    const hmi::StatisticsNets stats(kD, 6, rng);
    const hal::ScaleDiscriminators discs(kD, rng);
    const auto batch = make_batch(std::span<const data::MultimodalSample>(ds.splits[0].samples));
    train::TrainConfig cfg;
    cfg.frf.detach_targets = false;
    const auto t = teacher.forward(batch, nullptr);
    nn::ParamList list = student.parameters();
    stats.collect(list, "stats");
    auto vars = nn::vars_of(list);
    errors.emplace_back("L_total", test::check_gradients(
                                       [&] {
                                         const auto s = student.forward(batch, nullptr);
                                         return train::student_objective(student, s, t, batch.labels, stats, discs,
                                                                         cfg, 9)
                                             .total;
                                       },
                                       vars)
                                       .max_error);
  }

  bool pass = true;
  std::ostringstream s;
  s << "max rel err";
  for (const auto& [name, err] : errors) {
    s << ' ' << name << '=' << err;
    pass = pass && err < 1e-6;
  }
  return {pass, s.str()};
}

Outcome loss_oracles() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (bool squared : {false, true}) {
      Rng rng(seed);
      const Index d = 4 + static_cast<Index>(seed % 3);
      const frf::FrfParams params(d, rng);
      std::array<Matrix, data::kNumModalities> z;
      frf::ModalityVars vars;
      for (std::size_t m = 0; m < data::kNumModalities; ++m) {
        z[m] = random_matrix(5, d, rng);
        vars[m] = Var(z[m]);
      }
      frf::FrfOptions options;
      options.squared_norm = squared;
      const auto got = frf::loss_frf(vars, params, options);
      const auto want = test::frf_oracle(z, params, squared);
      worst = std::max({worst, std::abs(got.self.item() - want.self), std::abs(got.cross.item() - want.cross),
                        std::abs(got.reconstruction.item() - want.recon)});
    }
  }
  std::ostringstream s;
  s << "20 seeds x 2 norms, max abs diff " << worst;
  return {worst < 1e-6, s.str()};
}

Outcome mi_toy() {
  const auto toy = test::discrete_mi_toy(7);
  const double lift = toy.trained - toy.baseline;
  const double gap = std::abs(toy.trained - toy.optimum);
  std::ostringstream s;
  s << "trained " << toy.trained << ", baseline " << toy.baseline << " (lift " << lift << "), oracle optimum "
    << toy.optimum << " (gap " << gap << ")";
  return {lift >= 0.2 && gap <= 0.05, s.str()};
}

std::size_t zero_frames(const data::FeatureMatrix& x) {
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) n += x.row(r).isZero(0.0) ? 1 : 0;
  return n;
}

Outcome msm_exactness() {
  const std::array<data::ModalityShape, 3> shapes{{{20, 4}, {13, 3}, {7, 2}}};
  Rng rng(11);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto sample = test::random_sample(shapes, rng);
    const double p = static_cast<double>(rng.index(11)) / 10.0;
    const auto condition = msm::kTestingConditions[rng.index(7)];
    const auto keep = msm::retained_modalities(condition);
    const auto masked = msm::apply_msm(sample, msm::MissingSpec::uniform(p, keep, rng.next_u64()));
    const auto inter = msm::condition_mask(sample, condition);
    for (auto m : data::kModalities) {
      const std::size_t t = shapes[data::index_of(m)].seq_len;
      const auto expected = keep.contains(m) ? static_cast<std::size_t>(std::floor(p * static_cast<double>(t) + 0.5)) : t;
      if (zero_frames(masked.sample[m]) != expected) ++failures;
      if (keep.contains(m) ? inter[m] != sample[m] : !inter[m].isZero(0.0)) ++failures;
    }
  }
  return {failures == 0, "1000 trials, " + std::to_string(failures) + " mismatches"};
}

// Everything criteria 6-8 need from one seed.
struct SeedRun {
  std::uint64_t seed = 0;
  double teacher_train_acc = 0.0;
  double sweep_p0 = 0.0;
  double sweep_p1 = 0.0;
  double avg_hrlf = 0.0;
  double avg_wo_frf = 0.0;
  bool teacher_frozen = false;
  double cos_within = 0.0;
  double cos_across = 0.0;
  double raw_within = 0.0;
  double raw_across = 0.0;
};

std::vector<Matrix> snapshot(const Network& net) {
  std::vector<Matrix> out;
  for (const auto& p : net.parameters()) out.push_back(p.var.value());
  return out;
}

double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  return (na < 1e-12 || nb < 1e-12) ? 0.0 : a.dot(b) / (na * nb);
}

// Mean cosine between Q of two different modalities of the same sample, and
// over every pair of distinct samples.
std::pair<double, double> q_cosines(const std::array<Matrix, data::kNumModalities>& q) {
  const Index n = q[0].rows();
  double within = 0.0;
  double across = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < data::kNumModalities; ++a) {
    for (std::size_t b = a + 1; b < data::kNumModalities; ++b) {
      ++pairs;
      for (Index i = 0; i < n; ++i) {
        within += cosine(q[a].row(i), q[b].row(i));
        for (Index j = 0; j < n; ++j) {
          if (j != i) across += cosine(q[a].row(i), q[b].row(j));
        }
      }
    }
  }
  const auto dn = static_cast<double>(n);
  return {within / (static_cast<double>(pairs) * dn), across / (static_cast<double>(pairs) * dn * (dn - 1.0))};
}

void factor_signal(const Network& student, const std::vector<data::MultimodalSample>& test, SeedRun& run) {
  const ag::NoGradGuard guard;
  const auto out = student.forward(make_batch(std::span<const data::MultimodalSample>(test)), nullptr);
  std::array<Matrix, data::kNumModalities> raw;
  std::array<Matrix, data::kNumModalities> centred;
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    raw[m] = out.factors[m].sentiment.value();
    centred[m] = raw[m].rowwise() - raw[m].colwise().mean();
  }
  std::tie(run.raw_within, run.raw_across) = q_cosines(raw);
  std::tie(run.cos_within, run.cos_across) = q_cosines(centred);
}

SeedRun run_seed(std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  data::SyntheticConfig sc;
  sc.seed = seed;
  const auto ds = data::generate_synthetic(sc);
  const auto& train_split = ds.split("train");
  const auto& test = ds.split("test").samples;
  train::TrainConfig cfg;
  cfg.seed = seed;

  const auto teacher = train::train_teacher(train_split, ModelConfig::for_dataset(ds.manifest), cfg);
  run.teacher_train_acc = train::accuracy(train::predict(teacher.teacher, train_split.samples), train_split.samples);
  const auto before = snapshot(teacher.teacher);

  const auto metric = eval::default_metric(ds.manifest.task, ds.manifest.num_classes);
  const auto hrlf = train::train_student(train_split, teacher.teacher, cfg);
  const auto predictor = eval::network_predictor(hrlf.student);
  const std::array<msm::TestingCondition, 1> complete{msm::TestingCondition::lav};
  const auto sweep = eval::run_ratio_sweep(predictor, test, metric, complete, seed);
  run.sweep_p0 = sweep.values.front();
  run.sweep_p1 = sweep.values.back();
  run.avg_hrlf = eval::run_condition_grid(predictor, test, metric).average;
  factor_signal(hrlf.student, test, run);

  cfg.ablation.use_frf = false;
  const auto ablated = train::train_student(train_split, teacher.teacher, cfg);
  run.avg_wo_frf = eval::run_condition_grid(eval::network_predictor(ablated.student), test, metric).average;
  run.teacher_frozen = snapshot(teacher.teacher) == before;
  return run;
}

Outcome end_to_end(std::vector<SeedRun>& runs) {
  std::ostringstream s;
  bool teacher_ok = true;
  bool sweep_ok = true;
  int frf_wins = 0;
  for (auto seed : kSeeds) {
    runs.push_back(run_seed(seed));
    const auto& r = runs.back();
    teacher_ok = teacher_ok && r.teacher_train_acc >= 0.95;
    sweep_ok = sweep_ok && r.sweep_p0 >= r.sweep_p1;
    frf_wins += r.avg_hrlf >= r.avg_wo_frf ? 1 : 0;
    s << "seed " << r.seed << ": teacher acc " << r.teacher_train_acc << ", sweep p0 " << r.sweep_p0 << " p1 "
      << r.sweep_p1 << ", Avg F1 HRLF " << r.avg_hrlf << " w/o FRF " << r.avg_wo_frf << "; ";
    std::cerr << "  " << s.str().substr(s.str().rfind("seed ")) << std::endl;
  }
  s << "(a) " << (teacher_ok ? "ok" : "no") << " (b) " << (sweep_ok ? "ok" : "no") << " (c) " << frf_wins << "/3";
  return {teacher_ok && sweep_ok && frf_wins >= 2, s.str()};
}

Outcome determinism(const std::vector<SeedRun>& runs) {
  data::SyntheticConfig sc;
  const auto ds = data::generate_synthetic(sc);
  const auto& split = ds.split("train");
  train::TrainConfig cfg;
  cfg.teacher_epochs = 3;
  cfg.student_epochs = 3;
  const auto model = ModelConfig::for_dataset(ds.manifest);
  const auto t1 = train::train_teacher(split, model, cfg);
  const auto t2 = train::train_teacher(split, model, cfg);
  const auto s1 = train::train_student(split, t1.teacher, cfg);
  const auto s2 = train::train_student(split, t1.teacher, cfg);
  double worst = 0.0;
  auto compare = [&](const train::TrainHistory& a, const train::TrainHistory& b) {
    if (a.size() != b.size()) worst = INFINITY;
    for (std::size_t e = 0; e < std::min(a.size(), b.size()); ++e) {
      worst = std::max({worst, std::abs(a[e].loss.total - b[e].loss.total),
                        std::abs(a[e].loss.hal_disc - b[e].loss.hal_disc)});
    }
  };
  compare(t1.history, t2.history);
  compare(s1.history, s2.history);
  bool frozen = !runs.empty();
  for (const auto& r : runs) frozen = frozen && r.teacher_frozen;
  std::ostringstream s;
  s << "max trajectory diff " << worst << " over 3+3 epochs; teacher bit-identical after 2 students on "
    << runs.size() << " seeds: " << (frozen ? "yes" : "no");
  return {worst <= 1e-6 && frozen, s.str()};
}

Outcome factorization_signal(const std::vector<SeedRun>& runs) {
  int hits = 0;
  std::ostringstream s;
  for (const auto& r : runs) {
    const double margin = r.raw_within - r.raw_across;
    hits += margin >= 0.05 ? 1 : 0;
    s << "seed " << r.seed << ": within " << r.raw_within << " across " << r.raw_across << " margin " << margin
      << " (mean-centred margin " << r.cos_within - r.cos_across << "); ";
  }
  s << hits << "/" << runs.size() << " seeds with margin >= 0.05";
  return {hits >= 2, s.str()};
}

}  // namespace

int main() {
  Runner runner;
  runner.run(1, "analytic constants", 1.0, analytic_constants);
  runner.run(2, "gradient integrity", 30.0, gradient_integrity);
  runner.run(3, "brute-force loss oracles", 5.0, loss_oracles);
  runner.run(4, "MI estimator sanity", 60.0, mi_toy);
  runner.run(5, "MSM exactness", 5.0, msm_exactness);
  std::vector<SeedRun> runs;
  runner.run(6, "end-to-end desk-scale behaviour", 900.0, [&] { return end_to_end(runs); });
  runner.run(7, "determinism and freezing", 0.0, [&] { return determinism(runs); });
  runner.run(8, "factorization signal", 0.0, [&] { return factorization_signal(runs); });
  std::cout << (runner.failed() == 0 ? "all criteria passed" : std::to_string(runner.failed()) + " criteria failed")
            << std::endl;
  return runner.failed() == 0 ? 0 : 1;
}
