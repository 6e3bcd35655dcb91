#pragma once

#include "hrlf/autograd.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hrlf {
class Rng;
}

namespace hrlf::ag {

// Elementwise arithmetic. Shapes must match except where noted.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, Scalar factor);
Var add_scalar(const Var& a, Scalar offset);
/// a (m x n) + row (1 x n), broadcast over rows.
Var add_row(const Var& a, const Var& row);
/// a (m x n) * row (1 x n), broadcast over rows.
Var mul_row(const Var& a, const Var& row);
/// a (m x n) * col (m x 1), broadcast over columns.
Var mul_col(const Var& a, const Var& col);

Var matmul(const Var& a, const Var& b);

Var relu(const Var& a);
Var sigmoid(const Var& a);
/// log(1 + e^x), overflow-safe.
Var softplus(const Var& a);
Var log(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
/// Values outside [lo, hi] are pinned and pass no gradient.
Var clamp(const Var& a, Scalar lo, Scalar hi);

// Reductions.
Var sum(const Var& a);
Var mean(const Var& a);
Var row_sum(const Var& a);
/// Euclidean norm of each row (m x 1). Gradient at a zero row is zero.
Var row_norm(const Var& a);
Var row_sq_norm(const Var& a);

// Structural.
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& a, Index start, Index count);
/// Output row i is input row indices[i].
Var gather_rows(const Var& a, std::span<const Index> indices);

// Normalisation and probabilities, row-wise.
Var layer_norm(const Var& a, Scalar eps = 1e-5);
Var log_softmax(const Var& a);
Var softmax(const Var& a);

/// Inverted dropout. Identity when `rng` is null or rate is zero.
Var dropout(const Var& a, Scalar rate, Rng* rng);

/// Same-padded temporal im2col. Input is (batch*seq) x channels with each
/// sample's frames contiguous; output is (batch*seq) x (kernel*channels),
/// column block j holding frame t + j - kernel/2 (zero outside the sequence).
Var temporal_unfold(const Var& a, Index batch, Index seq, Index kernel);

/// Scaled dot-product attention over `heads` heads. q, k, v are
/// (batch*seq) x model_dim; heads split the columns evenly.
Var multi_head_attention(const Var& q, const Var& k, const Var& v, Index batch, Index seq,
                         Index heads);

/// Numerically stable scalar softplus.
Scalar softplus(Scalar x);

}  // namespace hrlf::ag
