#include "hrlf/hmi.hpp"

#include "hrlf/errors.hpp"
#include "hrlf/ops.hpp"

namespace hrlf::hmi {

StatisticsNet::StatisticsNet(Index input_dim, Index hidden, Rng& rng)
    : net({2 * input_dim, hidden, 1}, false, rng), input_dim_(input_dim) {}

Var StatisticsNet::operator()(const Var& x, const Var& y) const {
  if (x.cols() != input_dim_ || y.cols() != input_dim_ || x.rows() != y.rows()) {
    throw ShapeError("statistics network expects two batch x " + std::to_string(input_dim_) +
                     " inputs");
  }
  const std::array<Var, 2> parts{x, y};
  return net(ag::concat_cols(parts));
}

void StatisticsNet::collect(nn::ParamList& out, std::string_view prefix) const {
  net.collect(out, prefix);
}

StatisticsNets::StatisticsNets(Index dim, Index hidden, Rng& rng)
    : nets{StatisticsNet(fusion::scale_dim(0, dim), hidden, rng),
           StatisticsNet(fusion::scale_dim(1, dim), hidden, rng),
           StatisticsNet(fusion::scale_dim(2, dim), hidden, rng)} {}

void StatisticsNets::collect(nn::ParamList& out, std::string_view prefix) const {
  for (std::size_t i = 0; i < nets.size(); ++i) {
    nets[i].collect(out, nn::join_name(prefix, "scale" + std::to_string(i + 1)));
  }
}

Var jsd_bound(const Var& joint_scores, const Var& marginal_scores) {
  const Var joint_term = ag::neg(ag::mean(ag::softplus(ag::neg(joint_scores))));
  const Var marginal_term = ag::neg(ag::mean(ag::softplus(marginal_scores)));
  return ag::add(joint_term, marginal_term);
}

Var mi_lower_bound(const Var& x, const Var& y, const StatisticsNet& net,
                   std::span<const std::size_t> shuffle) {
  if (x.rows() < 2) throw ShapeError("mutual information bound needs a batch of at least 2");
  if (x.rows() != y.rows()) throw ShapeError("x and y batches differ in size");
  if (static_cast<Index>(shuffle.size()) != y.rows()) throw ShapeError("shuffle length != batch");
  std::vector<Index> idx(shuffle.begin(), shuffle.end());
  const Var y_marginal = ag::gather_rows(y, idx);
  return jsd_bound(net(x, y), net(x, y_marginal));
}

Var mi_lower_bound(const Var& x, const Var& y, const StatisticsNet& net, Rng& rng) {
  if (x.rows() < 2) throw ShapeError("mutual information bound needs a batch of at least 2");
  const auto perm = rng.derangement(static_cast<std::size_t>(x.rows()));
  return mi_lower_bound(x, y, net, perm);
}

Var loss_hmi(const fusion::ScaleStack& teacher, const fusion::ScaleStack& student,
             const StatisticsNets& nets, std::uint64_t shuffle_seed) {
  Rng rng(shuffle_seed);
  Var total = Var::scalar(0.0);
  for (std::size_t i = 0; i < fusion::kNumScales; ++i) {
    const Var& t = teacher.scale(i);
    const Var& s = student.scale(i);
    if (t.cols() != s.cols()) throw ShapeError("teacher/student scale widths differ");
    total = ag::add(total, mi_lower_bound(t.detach(), s, nets.nets[i], rng));
  }
  return ag::neg(total);
}

}  // namespace hrlf::hmi
