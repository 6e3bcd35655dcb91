#include "hrlf/fusion.hpp"

#include "hrlf/errors.hpp"
#include "hrlf/ops.hpp"

namespace hrlf::fusion {

namespace {

Var combine(const Var& a, const Var& b, ScaleCombine how) {
  switch (how) {
    case ScaleCombine::mean: return ag::scale(ag::add(a, b), 0.5);
    case ScaleCombine::sum: return ag::add(a, b);
    case ScaleCombine::first: return a;
  }
  return a;
}

}  // namespace

std::string_view combine_name(ScaleCombine c) {
  switch (c) {
    case ScaleCombine::mean: return "mean";
    case ScaleCombine::sum: return "sum";
    case ScaleCombine::first: return "first";
  }
  return "?";
}

ScaleCombine parse_combine(std::string_view name) {
  if (name == "mean") return ScaleCombine::mean;
  if (name == "sum") return ScaleCombine::sum;
  if (name == "first") return ScaleCombine::first;
  throw ConfigError("unknown scale_combine: " + std::string(name));
}

const Var& ScaleStack::scale(std::size_t i) const {
  switch (i) {
    case 0: return e1;
    case 1: return e2;
    case 2: return e3;
    default: throw std::out_of_range("scale index must be 0, 1 or 2");
  }
}

Index scale_dim(std::size_t scale, Index dim) {
  switch (scale) {
    case 0: return 3 * dim;
    case 1: return 2 * dim;
    case 2: return dim;
    default: throw std::out_of_range("scale index must be 0, 1 or 2");
  }
}

FusionParams::FusionParams(Index dim, ScaleCombine combine, Rng& rng)
    : projection(2 * dim, dim, rng),
      stack{nn::Linear(3 * dim, 2 * dim, rng), nn::Linear(2 * dim, dim, rng),
            nn::Linear(dim, 2 * dim, rng), nn::Linear(2 * dim, 3 * dim, rng)},
      dim_(dim),
      combine_(combine) {}

void FusionParams::collect(nn::ParamList& out, std::string_view prefix) const {
  projection.collect(out, nn::join_name(prefix, "projection"));
  for (std::size_t i = 0; i < stack.size(); ++i) {
    stack[i].collect(out, nn::join_name(prefix, "fc" + std::to_string(i + 1)));
  }
}

FusedModalities fuse_modalities(const std::array<FactorizedPair, data::kNumModalities>& pairs,
                                const FusionParams& params) {
  FusedModalities out;
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    if (!pairs[m].sentiment.defined() || !pairs[m].specific.defined()) {
      throw ShapeError("fusion needs a factorized pair for every modality");
    }
    const std::array<Var, 2> parts{pairs[m].sentiment, pairs[m].specific};
    out.fused[m] = params.projection(ag::concat_cols(parts));
  }
  out.joint = ag::concat_cols(out.fused);
  return out;
}

ScaleStack refine(const Var& joint, const FusionParams& params) {
  if (joint.cols() != 3 * params.dim()) throw ShapeError("joint representation must be 3d wide");
  ScaleStack s;
  s.joint = joint;
  s.i1 = params.stack[0](joint);
  s.i2 = params.stack[1](ag::relu(s.i1));
  s.i3 = params.stack[2](ag::relu(s.i2));
  s.refined = params.stack[3](ag::relu(s.i3));
  s.e1 = combine(s.joint, s.refined, params.combine());
  s.e2 = combine(s.i1, s.i3, params.combine());
  s.e3 = s.i2;
  return s;
}

}  // namespace hrlf::fusion
