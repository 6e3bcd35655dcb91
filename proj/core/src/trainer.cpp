#include "hrlf/trainer.hpp"

#include "hrlf/errors.hpp"
#include "hrlf/ops.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hrlf::train {

namespace {

// Independent RNG streams derived from the run seed.
enum Stream : std::uint64_t {
  kTeacherInit = 11,
  kStudentInit = 12,
  kStatsInit = 13,
  kDiscInit = 14,
  kTeacherShuffle = 15,
  kStudentShuffle = 16,
  kMsm = 17,
  kTeacherDropout = 18,
  kStudentDropout = 19,
  kHmiShuffle = 20,
};

constexpr std::size_t kPredictChunk = 128;

double value_or_zero(const Var& v) { return v.defined() ? v.item() : 0.0; }

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    // the in-batch MI shuffle needs two samples; fold a lone tail into the previous batch
    if (end - start < 2 && !batches.empty()) {
      batches.back().insert(batches.back().end(), order.begin() + static_cast<std::ptrdiff_t>(start),
                            order.begin() + static_cast<std::ptrdiff_t>(end));
      continue;
    }
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::string describe(const LossBreakdown& b) {
  std::ostringstream os;
  os << "task=" << b.task << " frf=" << b.frf_total << " hmi=" << b.hmi << " hal_gen=" << b.hal_gen
     << " hal_disc=" << b.hal_disc << " kl=" << b.kl << " total=" << b.total;
  return os.str();
}

void check_finite(const LossBreakdown& b) {
  if (!b.all_finite()) throw DivergenceError("non-finite loss: " + describe(b));
}

// Runs one optimisation step, tagging any divergence with where it happened.
template <typename Step>
void guarded_step(std::string_view phase, std::size_t epoch, std::size_t step, Step&& body) {
  try {
    body();
  } catch (const DivergenceError& e) {
    std::ostringstream os;
    os << phase << " training diverged at epoch " << epoch << " step " << step << ": " << e.what();
    throw DivergenceError(os.str());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(teacher_lr > 0.0) || !(student_lr > 0.0) || !(disc_lr > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
  if (disc_steps < 1) throw ConfigError("disc_steps must be >= 1");
  if (!(kl_temperature > 0.0)) throw ConfigError("kl_temperature must be positive");
  for (double w : {weights.task, weights.frf, weights.hmi, weights.hal, weights.kl}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
  }
  msm.validate();
}

bool LossBreakdown::all_finite() const {
  for (double v : {task, frf_self, frf_cross, frf_recon, frf_total, hmi, hal_gen, hal_disc, kl, total}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  task += o.task;
  frf_self += o.frf_self;
  frf_cross += o.frf_cross;
  frf_recon += o.frf_recon;
  frf_total += o.frf_total;
  hmi += o.hmi;
  hal_gen += o.hal_gen;
  hal_disc += o.hal_disc;
  kl += o.kl;
  total += o.total;
  return *this;
}

LossBreakdown& LossBreakdown::operator/=(double d) {
  task /= d;
  frf_self /= d;
  frf_cross /= d;
  frf_recon /= d;
  frf_total /= d;
  hmi /= d;
  hal_gen /= d;
  hal_disc /= d;
  kl /= d;
  total /= d;
  return *this;
}

LossBreakdown TeacherObjective::breakdown() const {
  LossBreakdown b;
  b.task = task.item();
  b.frf_self = value_or_zero(frf.self);
  b.frf_cross = value_or_zero(frf.cross);
  b.frf_recon = value_or_zero(frf.reconstruction);
  b.frf_total = value_or_zero(frf.total);
  b.total = total.item();
  return b;
}

LossBreakdown StudentObjective::breakdown() const {
  LossBreakdown b;
  b.task = task.item();
  b.frf_self = value_or_zero(frf.self);
  b.frf_cross = value_or_zero(frf.cross);
  b.frf_recon = value_or_zero(frf.reconstruction);
  b.frf_total = value_or_zero(frf.total);
  b.hmi = value_or_zero(hmi);
  b.hal_gen = value_or_zero(hal_gen);
  b.kl = kl.item();
  b.total = total.item();
  return b;
}

TeacherObjective teacher_objective(const Network& teacher, const NetworkOutput& out,
                                   std::span<const data::Label> labels, const TrainConfig& config) {
  TeacherObjective obj;
  const auto task = teacher.config().task;
  obj.task = loss_task(out.logits, labels, task);
  obj.total = ag::scale(obj.task, config.weights.task);
  if (config.ablation.use_frf) {
    obj.frf = frf::loss_frf(out.summaries(), teacher.frf, config.frf);
    obj.total = ag::add(obj.total, ag::scale(obj.frf.total, config.weights.frf));
  }
  return obj;
}

StudentObjective student_objective(const Network& student, const NetworkOutput& student_out,
                                   const NetworkOutput& teacher_out,
                                   std::span<const data::Label> labels,
                                   const hmi::StatisticsNets& stats,
                                   const hal::ScaleDiscriminators& discs, const TrainConfig& config,
                                   std::uint64_t shuffle_seed) {
  StudentObjective obj;
  const auto task = student.config().task;
  const auto& w = config.weights;
  obj.task = loss_task(student_out.logits, labels, task);
  obj.kl = loss_kl(teacher_out.logits, student_out.logits, task, config.kl_temperature);
  obj.total = ag::add(ag::scale(obj.task, w.task), ag::scale(obj.kl, w.kl));
  if (config.ablation.use_frf) {
    obj.frf = frf::loss_frf(student_out.summaries(), student.frf, config.frf);
    obj.total = ag::add(obj.total, ag::scale(obj.frf.total, w.frf));
  }
  if (config.ablation.use_hmi) {
    obj.hmi = hmi::loss_hmi(teacher_out.stack, student_out.stack, stats, shuffle_seed);
    obj.total = ag::add(obj.total, ag::scale(obj.hmi, w.hmi));
  }
  if (config.ablation.use_hal) {
    obj.hal_gen = hal::loss_hal_generator(student_out.stack, discs);
    obj.total = ag::add(obj.total, ag::scale(obj.hal_gen, w.hal));
  }
  return obj;
}

TeacherResult train_teacher(const data::Split& train, const ModelConfig& model, const TrainConfig& config) {
  config.validate();
  if (train.samples.size() < 2) throw ConfigError("training split needs at least two samples");
  TeacherResult result{Network(model, Role::teacher, derive_seed(config.seed, kTeacherInit)), {}};
  auto& teacher = result.teacher;
  nn::Adam optimizer(nn::vars_of(teacher.parameters()),
                     {.learning_rate = config.teacher_lr, .clip_norm = config.clip_norm});
  Rng shuffle_rng(derive_seed(config.seed, kTeacherShuffle));
  Rng dropout_rng(derive_seed(config.seed, kTeacherDropout));

  for (std::size_t epoch = 0; epoch < config.teacher_epochs; ++epoch) {
    LossBreakdown sum;
    const auto batches = epoch_batches(train.samples.size(), config.batch_size, shuffle_rng);
    for (std::size_t step = 0; step < batches.size(); ++step) {
      std::vector<const data::MultimodalSample*> members;
      for (auto i : batches[step]) members.push_back(&train.samples[i]);
      const Batch batch = make_batch(members);
      guarded_step("teacher", epoch, step, [&] {
        const auto out = teacher.forward(batch, &dropout_rng);
        const auto obj = teacher_objective(teacher, out, batch.labels, config);
        const auto breakdown = obj.breakdown();
        check_finite(breakdown);
        optimizer.zero_grad();
        obj.total.backward();
        optimizer.step();
        sum += breakdown;
      });
    }
    sum /= static_cast<double>(batches.size());
    result.history.push_back({epoch, sum});
  }
  optimizer.zero_grad();
  return result;
}

StudentResult train_student(const data::Split& train, const Network& teacher, const TrainConfig& config) {
  config.validate();
  if (train.samples.size() < 2) throw ConfigError("training split needs at least two samples");
  const auto& model = teacher.config();
  const Index dim = model.dim();
  Rng stats_rng(derive_seed(config.seed, kStatsInit));
  Rng disc_rng(derive_seed(config.seed, kDiscInit));
  StudentResult result{Network(model, Role::student, derive_seed(config.seed, kStudentInit)),
                       hmi::StatisticsNets(dim, model.statistics_width(), stats_rng),
                       hal::ScaleDiscriminators(dim, disc_rng),
                       {}};
  auto& student = result.student;
  if (!same_structure(teacher, student)) throw ShapeError("teacher/student structure mismatch");

  auto student_params = nn::vars_of(student.parameters());
  {
    nn::ParamList stat_params;
    result.stats.collect(stat_params, "stats");
    for (auto& v : nn::vars_of(stat_params)) student_params.push_back(v);
  }
  nn::Adam student_opt(student_params, {.learning_rate = config.student_lr, .clip_norm = config.clip_norm});
  nn::Adam disc_opt(result.discs.parameters(), {.learning_rate = config.disc_lr, .clip_norm = config.clip_norm});

  Rng shuffle_rng(derive_seed(config.seed, kStudentShuffle));
  Rng msm_rng(derive_seed(config.seed, kMsm));
  Rng dropout_rng(derive_seed(config.seed, kStudentDropout));
  const std::uint64_t hmi_base = derive_seed(config.seed, kHmiShuffle);
  std::uint64_t global_step = 0;

  for (std::size_t epoch = 0; epoch < config.student_epochs; ++epoch) {
    LossBreakdown sum;
    const auto batches = epoch_batches(train.samples.size(), config.batch_size, shuffle_rng);
    for (std::size_t step = 0; step < batches.size(); ++step, ++global_step) {
      std::vector<const data::MultimodalSample*> complete;
      std::vector<data::MultimodalSample> masked;
      for (auto i : batches[step]) {
        complete.push_back(&train.samples[i]);
        masked.push_back(msm::apply_msm(train.samples[i], config.msm.sample(msm_rng)).sample);
      }
      const Batch teacher_batch = make_batch(complete);
      const Batch student_batch = make_batch(masked);

      guarded_step("student", epoch, step, [&] {
        NetworkOutput teacher_out;
        {
          const ag::NoGradGuard no_grad;
          teacher_out = teacher.forward(teacher_batch, nullptr);
        }
        const auto student_out = student.forward(student_batch, &dropout_rng);

        double disc_objective = 0.0;
        if (config.ablation.use_hal) {
          for (std::size_t k = 0; k < config.disc_steps; ++k) {
            const Var objective = hal::loss_hal_discriminator(teacher_out.stack, student_out.stack, result.discs);
            disc_objective = objective.item();
            disc_opt.zero_grad();
            ag::neg(objective).backward();
            disc_opt.step();
          }
        }

        const auto obj = student_objective(student, student_out, teacher_out, student_batch.labels,
                                           result.stats, result.discs, config,
                                           derive_seed(hmi_base, global_step));
        auto breakdown = obj.breakdown();
        breakdown.hal_disc = disc_objective;
        check_finite(breakdown);
        student_opt.zero_grad();
        obj.total.backward();
        student_opt.step();
        sum += breakdown;
      });
    }
    sum /= static_cast<double>(batches.size());
    result.history.push_back({epoch, sum});
  }
  student_opt.zero_grad();
  disc_opt.zero_grad();
  return result;
}

Matrix predict(const Network& network, std::span<const data::MultimodalSample> samples) {
  const ag::NoGradGuard no_grad;
  Matrix logits(static_cast<Index>(samples.size()), network.config().num_outputs);
  for (std::size_t start = 0; start < samples.size(); start += kPredictChunk) {
    const std::size_t count = std::min(kPredictChunk, samples.size() - start);
    const Batch batch = make_batch(samples.subspan(start, count));
    logits.middleRows(static_cast<Index>(start), static_cast<Index>(count)) =
        network.forward(batch, nullptr).logits.value();
  }
  return logits;
}

Matrix predict(const Network& network, std::span<const data::MultimodalSample> samples,
               msm::TestingCondition condition) {
  std::vector<data::MultimodalSample> masked;
  masked.reserve(samples.size());
  for (const auto& s : samples) masked.push_back(msm::condition_mask(s, condition));
  return predict(network, masked);
}

Matrix predict(const Network& network, std::span<const data::MultimodalSample> samples,
               const msm::MissingSpec& spec) {
  std::vector<data::MultimodalSample> masked;
  masked.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto per_sample = spec;
    per_sample.seed = derive_seed(spec.seed, i);
    masked.push_back(msm::apply_msm(samples[i], per_sample).sample);
  }
  return predict(network, masked);
}

double accuracy(const Matrix& logits, std::span<const data::MultimodalSample> samples) {
  if (samples.empty()) throw ConfigError("accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Index best = 0;
    logits.row(static_cast<Index>(i)).maxCoeff(&best);
    if (best == samples[i].label.class_index) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

void write_history(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& record : history) {
    const auto& l = record.loss;
    nlohmann::ordered_json j;
    j["epoch"] = record.epoch;
    j["task"] = l.task;
    j["frf_self"] = l.frf_self;
    j["frf_cross"] = l.frf_cross;
    j["frf_recon"] = l.frf_recon;
    j["frf_total"] = l.frf_total;
    j["hmi"] = l.hmi;
    j["hal_gen"] = l.hal_gen;
    j["hal_disc"] = l.hal_disc;
    j["kl"] = l.kl;
    j["total"] = l.total;
    out << j.dump() << '\n';
  }
}

}  // namespace hrlf::train
