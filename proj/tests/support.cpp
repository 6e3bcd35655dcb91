#include "support.hpp"

#include "hrlf/hmi.hpp"
#include "hrlf/ops.hpp"

#include <algorithm>
#include <cmath>

namespace hrlf::test {

Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

GradCheck check_gradients(const std::function<Var()>& f, std::span<Var> params, double step) {
  for (auto& p : params) p.zero_grad();
  f().backward();
  std::vector<Matrix> analytic;
  for (auto& p : params) analytic.push_back(p.has_grad() ? p.grad() : Matrix::Zero(p.rows(), p.cols()));

  GradCheck result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k].mutable_value();
    for (Index i = 0; i < value.size(); ++i) {
      const double original = value.data()[i];
      auto at = [&](double offset) {
        value.data()[i] = original + offset;
        return f().item();
      };
      // five-point stencil, truncation error O(step^4)
      const double numeric = (-at(2 * step) + 8 * at(step) - 8 * at(-step) + at(-2 * step)) / (12.0 * step);
      value.data()[i] = original;
      const double a = analytic[k].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
      result.max_error = std::max(result.max_error, std::abs(a - numeric) / denom);
      ++result.checked;
    }
  }
  for (auto& p : params) p.zero_grad();
  return result;
}

data::MultimodalSample random_sample(const std::array<data::ModalityShape, data::kNumModalities>& shapes, Rng& rng) {
  data::MultimodalSample s;
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    s.features[m].resize(static_cast<Index>(shapes[m].seq_len), static_cast<Index>(shapes[m].dim));
    for (Index i = 0; i < s.features[m].size(); ++i) s.features[m].data()[i] = static_cast<float>(rng.normal());
  }
  s.label.class_index = static_cast<std::int32_t>(rng.index(2));
  s.label.score = static_cast<float>(rng.uniform(-3.0, 3.0));
  return s;
}

Matrix mlp_oracle(const nn::Mlp& mlp, const Matrix& x, bool activate_output) {
  Matrix h = x;
  const auto& layers = mlp.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Matrix& w = layers[l].weight().value();
    const Matrix& b = layers[l].bias().value();
    Matrix next(h.rows(), w.cols());
    for (Index i = 0; i < h.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) {
        double acc = b(0, j);
        for (Index k = 0; k < w.rows(); ++k) acc += h(i, k) * w(k, j);
        const bool last = l + 1 == layers.size();
        next(i, j) = (!last || activate_output) ? std::max(acc, 0.0) : acc;
      }
    }
    h = std::move(next);
  }
  return h;
}

namespace {

double distance(const Matrix& a, const Matrix& b, Index row, bool squared) {
  double s = 0.0;
  for (Index c = 0; c < a.cols(); ++c) s += (a(row, c) - b(row, c)) * (a(row, c) - b(row, c));
  return squared ? s : std::sqrt(s);
}

double softplus(double w) { return w > 0 ? w + std::log1p(std::exp(-w)) : std::log1p(std::exp(w)); }

}  // namespace

FrfOracle frf_oracle(const std::array<Matrix, data::kNumModalities>& z, const frf::FrfParams& p, bool squared) {
  constexpr double n = data::kNumModalities;
  std::array<Matrix, data::kNumModalities> q;
  std::array<Matrix, data::kNumModalities> u;
  for (std::size_t m = 0; m < data::kNumModalities; ++m) {
    q[m] = mlp_oracle(p.sentiment_encoders[m], z[m], true);
    u[m] = mlp_oracle(p.modality_encoders[m], z[m], true);
  }
  const Index batch = z[0].rows();
  const Index d = z[0].cols();
  FrfOracle out;
  for (std::size_t a = 0; a < data::kNumModalities; ++a) {
    for (std::size_t b = 0; b < data::kNumModalities; ++b) {
      Matrix input(batch, 2 * d);
      input << q[a], u[b];
      const Matrix t = mlp_oracle(p.decoder, input, false);
      double trans = 0.0;
      for (Index r = 0; r < batch; ++r) trans += distance(t, z[b], r, squared);
      trans /= static_cast<double>(batch);
      if (a == b) {
        out.self += trans / n;
      } else {
        out.cross += trans / (n * n - n);
      }
      // D(Q_a, U_b) re-encoded by E^S_b against Q_b
      const Matrix q_bar = mlp_oracle(p.sentiment_encoders[b], t, true);
      double recon = 0.0;
      for (Index r = 0; r < batch; ++r) recon += distance(q_bar, q[b], r, squared);
      out.recon += recon / static_cast<double>(batch) / (n * n);
    }
  }
  return out;
}

MiToy discrete_mi_toy(std::uint64_t seed) {
  MiToy result;
  result.baseline = -2.0 * std::log(2.0);
  // T takes t_same on x == y and t_diff otherwise; marginal pairs agree half the time
  auto bound = [](double t_same, double t_diff) {
    return -softplus(-t_same) - 0.5 * softplus(t_same) - 0.5 * softplus(t_diff);
  };
  result.optimum = -1e9;
  for (int i = -400; i <= 400; ++i) {
    for (int j = -400; j <= 0; j += 8) result.optimum = std::max(result.optimum, bound(i * 0.01, j * 0.05));
  }

  Rng rng(seed);
  hmi::StatisticsNet net(1, 16, rng);
  nn::ParamList list;
  net.collect(list, "t");
  nn::Adam opt(nn::vars_of(list), nn::AdamOptions{1e-2, 0.9, 0.999, 1e-8, 0.0});
  auto draw = [&](Index n) {
    Matrix x(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = static_cast<double>(rng.index(2));
    return x;
  };
  for (int step = 0; step < 2000; ++step) {
    const Matrix x = draw(64);
    opt.zero_grad();
    ag::neg(hmi::mi_lower_bound(Var(x), Var(x), net, rng)).backward();
    opt.step();
  }
  const Matrix x = draw(4000);
  result.trained = hmi::mi_lower_bound(Var(x), Var(x), net, rng).item();
  return result;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hrlf-tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace hrlf::test
