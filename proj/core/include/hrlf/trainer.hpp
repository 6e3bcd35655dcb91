#pragma once

// Teacher pretraining on complete modalities and student distillation on
// MSM-masked inputs with the combined objective
//
//   L_total = L_task + L_FRF + L_HMI + L_HAL(gen) + L_KL
//
// alternating with discriminator ascent on the adversarial objective.

#include "hrlf/hal.hpp"
#include "hrlf/hmi.hpp"
#include "hrlf/msm.hpp"
#include "hrlf/network.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hrlf::train {

struct AblationFlags {
  bool use_frf = true;
  bool use_hmi = true;
  bool use_hal = true;
};

struct LossWeights {
  double task = 1.0;
  double frf = 1.0;
  double hmi = 1.0;
  double hal = 1.0;
  double kl = 1.0;
};

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t teacher_epochs = 30;
  std::size_t student_epochs = 30;
  double teacher_lr = 3e-3;
  double student_lr = 3e-3;
  double disc_lr = 1e-3;
  double clip_norm = 5.0;
  /// Discriminator updates per student update.
  std::size_t disc_steps = 1;
  double kl_temperature = 1.0;
  std::uint64_t seed = 0;
  AblationFlags ablation;
  LossWeights weights;
  msm::MsmPolicy msm;
  frf::FrfOptions frf;

  void validate() const;
};

/// Per-term loss values. `total` is the weighted sum of the student-phase
/// terms; `hal_disc` is the discriminator objective, tracked separately.
struct LossBreakdown {
  double task = 0.0;
  double frf_self = 0.0;
  double frf_cross = 0.0;
  double frf_recon = 0.0;
  double frf_total = 0.0;
  double hmi = 0.0;
  double hal_gen = 0.0;
  double hal_disc = 0.0;
  double kl = 0.0;
  double total = 0.0;

  [[nodiscard]] bool all_finite() const;
  LossBreakdown& operator+=(const LossBreakdown& other);
  LossBreakdown& operator/=(double divisor);
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;
};

using TrainHistory = std::vector<EpochRecord>;

struct TeacherObjective {
  Var task;
  frf::FrfLoss frf;
  Var total;

  [[nodiscard]] LossBreakdown breakdown() const;
};

struct StudentObjective {
  Var task;
  frf::FrfLoss frf;  // undefined members when FRF is ablated
  Var hmi;
  Var hal_gen;
  Var kl;
  Var total;

  [[nodiscard]] LossBreakdown breakdown() const;
};

TeacherObjective teacher_objective(const Network& teacher, const NetworkOutput& out,
                                   std::span<const data::Label> labels, const TrainConfig& config);

/// Student-phase objective given both forward passes. The teacher output
/// must already be constant.
StudentObjective student_objective(const Network& student, const NetworkOutput& student_out,
                                   const NetworkOutput& teacher_out,
                                   std::span<const data::Label> labels,
                                   const hmi::StatisticsNets& stats,
                                   const hal::ScaleDiscriminators& discs, const TrainConfig& config,
                                   std::uint64_t shuffle_seed);

struct TeacherResult {
  Network teacher;
  TrainHistory history;
};

struct StudentResult {
  Network student;
  hmi::StatisticsNets stats;
  hal::ScaleDiscriminators discs;
  TrainHistory history;
};

/// Minimises L_task + L_FRF on complete-modality samples.
TeacherResult train_teacher(const data::Split& train, const ModelConfig& model, const TrainConfig& config);

/// Distils a fresh student from a frozen teacher; the teacher is never
/// modified.
StudentResult train_student(const data::Split& train, const Network& teacher, const TrainConfig& config);

/// Eval-mode logits, one row per sample.
Matrix predict(const Network& network, std::span<const data::MultimodalSample> samples);
Matrix predict(const Network& network, std::span<const data::MultimodalSample> samples,
               msm::TestingCondition condition);
/// Sample i is masked with `spec` reseeded by derive_seed(spec.seed, i).
Matrix predict(const Network& network, std::span<const data::MultimodalSample> samples,
               const msm::MissingSpec& spec);

/// Fraction of argmax predictions equal to the class label.
double accuracy(const Matrix& logits, std::span<const data::MultimodalSample> samples);

/// One JSON object per epoch.
void write_history(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace hrlf::train
