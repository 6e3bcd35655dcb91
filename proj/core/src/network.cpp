#include "hrlf/network.hpp"

#include "hrlf/errors.hpp"
#include "hrlf/ops.hpp"

#include <cmath>

namespace hrlf {

void ModelConfig::validate() const {
  encoder.validate();
  for (auto d : input_dims) {
    if (d < 1) throw ConfigError("input dims must be >= 1");
  }
  if (task == data::TaskKind::classification && num_outputs < 2) {
    throw ConfigError("classification needs at least 2 outputs");
  }
  if (task == data::TaskKind::regression && num_outputs != 1) {
    throw ConfigError("regression has exactly one output");
  }
  if (stats_hidden < 0) throw ConfigError("stats_hidden must be >= 0");
}

ModelConfig ModelConfig::for_dataset(const data::DatasetManifest& manifest,
                                     const encoder::EncoderConfig& encoder) {
  ModelConfig config;
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    config.input_dims[m] = static_cast<Index>(manifest.shapes[m].dim);
  }
  config.encoder = encoder;
  config.task = manifest.task;
  config.num_outputs = manifest.task == data::TaskKind::regression ? 1 : manifest.num_classes;
  return config;
}

std::string_view role_name(Role role) { return role == Role::teacher ? "teacher" : "student"; }

namespace {

template <typename Get>
Batch stack_samples(std::size_t count, Get&& get) {
  if (count == 0) throw ShapeError("empty batch");
  Batch batch;
  batch.size = static_cast<Index>(count);
  const auto& first = get(0);
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    const auto rows = first.features[m].rows();
    const auto cols = first.features[m].cols();
    batch.seq_len[m] = rows;
    batch.inputs[m].resize(batch.size * rows, cols);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& x = get(i).features[m];
      if (x.rows() != rows || x.cols() != cols) throw ShapeError("samples in a batch differ in shape");
      batch.inputs[m].middleRows(static_cast<Index>(i) * rows, rows) = x.template cast<ag::Scalar>();
    }
  }
  batch.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) batch.labels.push_back(get(i).label);
  return batch;
}

}  // namespace

Batch make_batch(std::span<const data::MultimodalSample> samples) {
  return stack_samples(samples.size(), [&](std::size_t i) -> const data::MultimodalSample& {
    return samples[i];
  });
}

Batch make_batch(std::span<const data::MultimodalSample* const> samples) {
  return stack_samples(samples.size(), [&](std::size_t i) -> const data::MultimodalSample& {
    return *samples[i];
  });
}

frf::ModalityVars NetworkOutput::summaries() const {
  frf::ModalityVars z;
  for (std::size_t m = 0; m < data::kNumModalities; ++m) z[m] = encoded[m].summary;
  return z;
}

Network::Network(const ModelConfig& config, Role role, std::uint64_t seed)
    : config_(config), role_(role) {
  config.validate();
  Rng rng(seed);
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    encoders[m] = encoder::ModalityEncoder(config.input_dims[m], config.encoder, rng);
  }
  frf = frf::FrfParams(config.dim(), rng);
  fusion = fusion::FusionParams(config.dim(), config.combine, rng);
  head = nn::Linear(3 * config.dim(), config.num_outputs, rng);
}

NetworkOutput Network::forward(const Batch& batch, Rng* dropout_rng) const {
  NetworkOutput out;
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    if (batch.inputs[m].cols() != config_.input_dims[m]) {
      throw ShapeError("batch width for " + std::string(data::modality_name(data::kModalities[m])) +
                       " is " + std::to_string(batch.inputs[m].cols()) + ", network expects " +
                       std::to_string(config_.input_dims[m]));
    }
    out.encoded[m] = encoders[m](Var(batch.inputs[m]), batch.size, batch.seq_len[m], dropout_rng);
    out.factors[m] = frf::factorize(out.encoded[m].summary, data::kModalities[m], frf);
  }
  const auto fused = fusion::fuse_modalities(out.factors, fusion);
  out.stack = fusion::refine(fused.joint, fusion);
  out.stack.fused = fused.fused;
  out.logits = classify(out.stack.refined, head);
  return out;
}

nn::ParamList Network::parameters() const {
  nn::ParamList params;
  for (auto m : data::kModalities) {
    encoders[data::index_of(m)].collect(params, "encoder." + std::string(data::modality_name(m)));
  }
  frf.collect(params, "frf");
  fusion.collect(params, "fusion");
  head.collect(params, "head");
  return params;
}

void Network::copy_values_from(const Network& other) {
  if (!same_structure(*this, other)) throw ShapeError("cannot copy between different network structures");
  auto mine = parameters();
  const auto theirs = other.parameters();
  for (std::size_t i = 0; i < mine.size(); ++i) mine[i].var.mutable_value() = theirs[i].var.value();
}

Network Network::clone() const {
  Network copy(config_, role_, 0);
  copy.copy_values_from(*this);
  return copy;
}

bool same_structure(const Network& a, const Network& b) {
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name || pa[i].var.rows() != pb[i].var.rows() ||
        pa[i].var.cols() != pb[i].var.cols()) {
      return false;
    }
  }
  return true;
}

bool parameter_disjoint(const Network& a, const Network& b) {
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (const auto& x : pa) {
    for (const auto& y : pb) {
      if (x.var.node() == y.var.node()) return false;
    }
  }
  return true;
}

Var classify(const Var& refined, const nn::Linear& head) {
  if (refined.cols() != head.in_dim()) throw ShapeError("classifier input width mismatch");
  return head(refined);
}

Var loss_task(const Var& logits, std::span<const data::Label> labels, data::TaskKind task) {
  if (static_cast<Index>(labels.size()) != logits.rows()) throw ShapeError("labels/logits batch mismatch");
  if (task == data::TaskKind::regression) {
    if (logits.cols() != 1) throw ShapeError("regression expects a single output");
    Matrix target(logits.rows(), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) target(static_cast<Index>(i), 0) = labels[i].score;
    return ag::mean(ag::square(ag::sub(logits, Var(target))));
  }
  Matrix one_hot = Matrix::Zero(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto cls = labels[i].class_index;
    if (cls < 0 || cls >= logits.cols()) {
      throw ShapeError("label " + std::to_string(cls) + " out of range for " +
                       std::to_string(logits.cols()) + " classes");
    }
    one_hot(static_cast<Index>(i), cls) = 1.0;
  }
  const Var picked = ag::row_sum(ag::mul(ag::log_softmax(logits), Var(one_hot)));
  return ag::neg(ag::mean(picked));
}

Var loss_kl(const Var& teacher_logits, const Var& student_logits, data::TaskKind task,
            double temperature) {
  if (teacher_logits.rows() != student_logits.rows() || teacher_logits.cols() != student_logits.cols()) {
    throw ShapeError("teacher/student logits differ in shape");
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  const Var teacher = teacher_logits.detach();
  if (task == data::TaskKind::regression) {
    return ag::mean(ag::square(ag::sub(teacher, student_logits)));
  }
  const Var log_p = ag::log_softmax(ag::scale(teacher, 1.0 / temperature));
  const Var log_q = ag::log_softmax(ag::scale(student_logits, 1.0 / temperature));
  const Var p = Var(log_p.value().array().exp().matrix());
  const Var per_row = ag::row_sum(ag::mul(p, ag::sub(log_p, log_q)));
  return ag::mean(per_row);
}

}  // namespace hrlf
