#include "hrlf/hal.hpp"

#include "hrlf/errors.hpp"
#include "hrlf/ops.hpp"

namespace hrlf::hal {

Discriminator::Discriminator(Index input_dim, Rng& rng)
    : net({input_dim, 2 * input_dim, 1}, false, rng) {}

Var Discriminator::operator()(const Var& x) const {
  return ag::clamp(ag::sigmoid(net(x)), kProbEpsilon, 1.0 - kProbEpsilon);
}

void Discriminator::collect(nn::ParamList& out, std::string_view prefix) const {
  net.collect(out, prefix);
}

ScaleDiscriminators::ScaleDiscriminators(Index dim, Rng& rng)
    : discs{Discriminator(fusion::scale_dim(0, dim), rng),
            Discriminator(fusion::scale_dim(1, dim), rng),
            Discriminator(fusion::scale_dim(2, dim), rng)} {}

void ScaleDiscriminators::collect(nn::ParamList& out, std::string_view prefix) const {
  for (std::size_t i = 0; i < discs.size(); ++i) {
    discs[i].collect(out, nn::join_name(prefix, "scale" + std::to_string(i + 1)));
  }
}

std::vector<Var> ScaleDiscriminators::parameters() const {
  nn::ParamList params;
  collect(params, "");
  return nn::vars_of(params);
}

Var loss_hal_discriminator(const fusion::ScaleStack& teacher, const fusion::ScaleStack& student,
                           const ScaleDiscriminators& discs) {
  Var total = Var::scalar(0.0);
  for (std::size_t i = 0; i < fusion::kNumScales; ++i) {
    const Var t = teacher.scale(i).detach();
    const Var s = student.scale(i).detach();
    if (t.cols() != s.cols()) throw ShapeError("teacher/student scale widths differ");
    const Var fake_term = ag::mean(ag::log(ag::add_scalar(ag::neg(discs.discs[i](s)), 1.0)));
    const Var real_term = ag::mean(ag::log(discs.discs[i](t)));
    total = ag::add(total, ag::add(fake_term, real_term));
  }
  return total;
}

Var loss_hal_generator(const fusion::ScaleStack& student, const ScaleDiscriminators& discs) {
  const auto params = discs.parameters();
  const ag::FreezeGuard freeze(params);
  Var total = Var::scalar(0.0);
  for (std::size_t i = 0; i < fusion::kNumScales; ++i) {
    total = ag::add(total, ag::neg(ag::mean(ag::log(discs.discs[i](student.scale(i))))));
  }
  return total;
}

}  // namespace hrlf::hal
