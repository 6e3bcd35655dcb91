#pragma once

#include "hrlf/autograd.hpp"
#include "hrlf/data.hpp"
#include "hrlf/frf.hpp"
#include "hrlf/nn.hpp"
#include "hrlf/rng.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <string>

namespace hrlf::test {

using ag::Index;
using ag::Matrix;
using ag::Var;

Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0);

struct GradCheck {
  double max_error = 0.0;  // relative, see check_gradients
  Index checked = 0;
};

/// Compares the analytic gradient of the scalar `f()` with five-point
/// central differences for every entry of every parameter. The error of one entry
/// is |a - n| / max(|a|, |n|, 1e-3). `f` must rebuild its graph per call.
GradCheck check_gradients(const std::function<Var()>& f, std::span<Var> params, double step = 1e-4);

data::MultimodalSample random_sample(const std::array<data::ModalityShape, data::kNumModalities>& shapes, Rng& rng);

/// Plain-loop evaluation of an Mlp, independent of the autograd ops.
Matrix mlp_oracle(const nn::Mlp& mlp, const Matrix& x, bool activate_output);

struct FrfOracle {
  double self = 0.0;
  double cross = 0.0;
  double recon = 0.0;
};

/// Translation (self, cross) and reconstruction losses by nested loops over
/// modality pairs and batch rows.
FrfOracle frf_oracle(const std::array<Matrix, data::kNumModalities>& z, const frf::FrfParams& params,
                     bool squared);

struct MiToy {
  double trained = 0.0;  // bound of the trained statistics network
  double optimum = 0.0;  // best bound found by grid search
  double baseline = 0.0; // -2 log 2, the value for independent pairs
};

/// Trains a width-16 statistics network on Y = X, X uniform on {0, 1}, for
/// 2000 Adam steps and compares with a grid-search optimum of the bound.
MiToy discrete_mi_toy(std::uint64_t seed);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace hrlf::test
