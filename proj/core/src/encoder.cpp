#include "hrlf/encoder.hpp"

#include "hrlf/errors.hpp"
#include "hrlf/ops.hpp"

#include <cmath>
#include <numeric>

namespace hrlf::encoder {

void EncoderConfig::validate() const {
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (heads < 1 || embed_dim % heads != 0) throw ConfigError("embed_dim must be divisible by heads");
  if (kernel_size < 1 || kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd");
  if (layers < 0) throw ConfigError("layers must be >= 0");
  if (ff_dim < 1) throw ConfigError("ff_dim must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

Matrix positional_embedding(Index seq_len, Index dim) {
  Matrix pe(seq_len, dim);
  for (Index pos = 0; pos < seq_len; ++pos) {
    for (Index col = 0; col < dim; ++col) {
      const Index pair = col / 2;
      const Scalar angle = static_cast<Scalar>(pos) /
                           std::pow(10000.0, 2.0 * static_cast<Scalar>(pair) / static_cast<Scalar>(dim));
      pe(pos, col) = (col % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

TransformerLayer::TransformerLayer(const EncoderConfig& config, Rng& rng)
    : query(config.embed_dim, config.embed_dim, rng),
      key(config.embed_dim, config.embed_dim, rng),
      value(config.embed_dim, config.embed_dim, rng),
      output(config.embed_dim, config.embed_dim, rng),
      ff_in(config.embed_dim, config.ff_dim, rng),
      ff_out(config.ff_dim, config.embed_dim, rng),
      attn_norm(config.embed_dim),
      ff_norm(config.embed_dim),
      heads_(config.heads),
      dropout_(config.dropout) {}

Var TransformerLayer::operator()(const Var& x, Index batch, Index seq, Rng* dropout_rng) const {
  const Var h = attn_norm(x);
  Var attended = ag::multi_head_attention(query(h), key(h), value(h), batch, seq, heads_);
  Var y = ag::add(x, ag::dropout(output(attended), dropout_, dropout_rng));
  const Var g = ff_norm(y);
  Var ff = ff_out(ag::dropout(ag::relu(ff_in(g)), dropout_, dropout_rng));
  return ag::add(y, ag::dropout(ff, dropout_, dropout_rng));
}

void TransformerLayer::collect(nn::ParamList& out, std::string_view prefix) const {
  attn_norm.collect(out, nn::join_name(prefix, "attn_norm"));
  query.collect(out, nn::join_name(prefix, "query"));
  key.collect(out, nn::join_name(prefix, "key"));
  value.collect(out, nn::join_name(prefix, "value"));
  output.collect(out, nn::join_name(prefix, "output"));
  ff_norm.collect(out, nn::join_name(prefix, "ff_norm"));
  ff_in.collect(out, nn::join_name(prefix, "ff_in"));
  ff_out.collect(out, nn::join_name(prefix, "ff_out"));
}

ModalityEncoder::ModalityEncoder(Index input_dim, const EncoderConfig& config, Rng& rng)
    : input_dim_(input_dim), config_(config) {
  config.validate();
  if (input_dim < 1) throw ConfigError("encoder input_dim must be >= 1");
  conv = nn::Linear(config.kernel_size * input_dim, config.embed_dim, rng);
  for (Index i = 0; i < config.layers; ++i) layers.emplace_back(config, rng);
  final_norm = nn::LayerNorm(config.embed_dim);
}

Var ModalityEncoder::embed(const Var& x, Index batch, Index seq) const {
  if (x.cols() != input_dim_) {
    throw ShapeError("encoder expects " + std::to_string(input_dim_) + " input channels, got " +
                     std::to_string(x.cols()));
  }
  if (x.rows() != batch * seq) throw ShapeError("encoder input rows != batch*seq");
  const Var conv_out = conv(ag::temporal_unfold(x, batch, seq, config_.kernel_size));
  const Matrix pe = positional_embedding(seq, config_.embed_dim).replicate(batch, 1);
  return ag::add(conv_out, Var(pe));
}

Var ModalityEncoder::encode(const Var& embedded, Index batch, Index seq, Rng* dropout_rng) const {
  if (!embedded.value().allFinite()) throw DivergenceError("non-finite encoder input");
  Var h = embedded;
  for (const auto& layer : layers) h = layer(h, batch, seq, dropout_rng);
  std::vector<Index> last(static_cast<std::size_t>(batch));
  for (Index b = 0; b < batch; ++b) last[static_cast<std::size_t>(b)] = b * seq + seq - 1;
  // only the final frame is needed after the last block
  return final_norm(ag::gather_rows(h, last));
}

EncoderOutput ModalityEncoder::operator()(const Var& x, Index batch, Index seq, Rng* dropout_rng) const {
  Var r = embed(x, batch, seq);
  Var z = encode(r, batch, seq, dropout_rng);
  return {std::move(r), std::move(z)};
}

void ModalityEncoder::collect(nn::ParamList& out, std::string_view prefix) const {
  conv.collect(out, nn::join_name(prefix, "conv"));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].collect(out, nn::join_name(prefix, "layer" + std::to_string(i)));
  }
  final_norm.collect(out, nn::join_name(prefix, "final_norm"));
}

}  // namespace hrlf::encoder
