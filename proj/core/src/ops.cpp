#include "hrlf/ops.hpp"

#include "hrlf/errors.hpp"
#include "hrlf/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hrlf::ag {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

Scalar stable_sigmoid(Scalar x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Scalar softplus(Scalar x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make_node(a.value() + b.value(), {a, b}, [](Node& n) {
    n.send(0, n.grad);
    n.send(1, n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make_node(a.value() - b.value(), {a, b}, [](Node& n) {
    n.send(0, n.grad);
    if (n.needs(1)) n.send(1, -n.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return make_node(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    if (n.needs(0)) n.send(0, n.grad.cwiseProduct(n.input(1)));
    if (n.needs(1)) n.send(1, n.grad.cwiseProduct(n.input(0)));
  });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, Scalar factor) {
  return make_node(a.value() * factor, {a}, [factor](Node& n) { n.send(0, n.grad * factor); });
}

Var add_scalar(const Var& a, Scalar offset) {
  Matrix out = a.value().array() + offset;
  return make_node(std::move(out), {a}, [](Node& n) { n.send(0, n.grad); });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_row: expected 1x" + std::to_string(a.cols()) + " row");
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_node(std::move(out), {a, row}, [](Node& n) {
    n.send(0, n.grad);
    if (n.needs(1)) n.send(1, n.grad.colwise().sum());
  });
}

Var mul_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("mul_row: expected 1x" + std::to_string(a.cols()) + " row");
  }
  Matrix out = a.value().array().rowwise() * row.value().row(0).array();
  return make_node(std::move(out), {a, row}, [](Node& n) {
    if (n.needs(0)) {
      Matrix g = n.grad.array().rowwise() * n.input(1).row(0).array();
      n.send(0, g);
    }
    if (n.needs(1)) n.send(1, n.grad.cwiseProduct(n.input(0)).colwise().sum());
  });
}

Var mul_col(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw std::invalid_argument("mul_col: expected " + std::to_string(a.rows()) + "x1 column");
  }
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return make_node(std::move(out), {a, col}, [](Node& n) {
    if (n.needs(0)) {
      Matrix g = n.grad.array().colwise() * n.input(1).col(0).array();
      n.send(0, g);
    }
    if (n.needs(1)) n.send(1, n.grad.cwiseProduct(n.input(0)).rowwise().sum());
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + ")");
  }
  return make_node(a.value() * b.value(), {a, b}, [](Node& n) {
    if (n.needs(0)) n.send(0, n.grad * n.input(1).transpose());
    if (n.needs(1)) n.send(1, n.input(0).transpose() * n.grad);
  });
}

Var relu(const Var& a) {
  return make_node(a.value().cwiseMax(0.0), {a}, [](Node& n) {
    Matrix g = (n.input(0).array() > 0.0).select(n.grad, 0.0);
    n.send(0, g);
  });
}

Var sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr([](Scalar x) { return stable_sigmoid(x); });
  return make_node(out, {a}, [out](Node& n) {
    Matrix g = n.grad.array() * out.array() * (1.0 - out.array());
    n.send(0, g);
  });
}

Var softplus(const Var& a) {
  Matrix out = a.value().unaryExpr([](Scalar x) { return softplus(x); });
  return make_node(std::move(out), {a}, [](Node& n) {
    Matrix g = n.grad.array() * n.input(0).unaryExpr([](Scalar x) { return stable_sigmoid(x); }).array();
    n.send(0, g);
  });
}

Var log(const Var& a) {
  return make_node(a.value().array().log().matrix(), {a}, [](Node& n) {
    n.send(0, (n.grad.array() / n.input(0).array()).matrix());
  });
}

Var exp(const Var& a) {
  Matrix out = a.value().array().exp().matrix();
  return make_node(out, {a}, [out](Node& n) { n.send(0, n.grad.cwiseProduct(out)); });
}

Var square(const Var& a) {
  return make_node(a.value().array().square().matrix(), {a}, [](Node& n) {
    n.send(0, 2.0 * n.grad.cwiseProduct(n.input(0)));
  });
}

Var clamp(const Var& a, Scalar lo, Scalar hi) {
  return make_node(a.value().cwiseMax(lo).cwiseMin(hi), {a}, [lo, hi](Node& n) {
    const auto& x = n.input(0).array();
    Matrix g = ((x >= lo) && (x <= hi)).select(n.grad, 0.0);
    n.send(0, g);
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make_node(std::move(out), {a}, [](Node& n) {
    const auto& x = n.input(0);
    n.send(0, Matrix::Constant(x.rows(), x.cols(), n.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  if (a.value().size() == 0) throw std::invalid_argument("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<Scalar>(a.value().size()));
}

Var row_sum(const Var& a) {
  return make_node(a.value().rowwise().sum(), {a}, [](Node& n) {
    const auto& x = n.input(0);
    Matrix g = n.grad.col(0).replicate(1, x.cols());
    n.send(0, g);
  });
}

Var row_norm(const Var& a) {
  Matrix norms = a.value().rowwise().norm();
  return make_node(norms, {a}, [norms](Node& n) {
    const auto& x = n.input(0);
    Matrix g(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
      const Scalar nr = norms(r, 0);
      if (nr > 0.0) {
        g.row(r) = x.row(r) * (n.grad(r, 0) / nr);
      } else {
        g.row(r).setZero();
      }
    }
    n.send(0, g);
  });
}

Var row_sq_norm(const Var& a) { return row_sum(square(a)); }

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Index> offsets;
  offsets.reserve(parts.size());
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offsets.push_back(offset);
    offset += p.cols();
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return make_node(std::move(out), std::move(parents), [offsets](Node& n) {
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      if (n.needs(i)) n.send(i, n.grad.middleCols(offsets[i], n.input(i).cols()));
    }
  });
}

Var slice_cols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::invalid_argument("slice_cols: range out of bounds");
  }
  return make_node(a.value().middleCols(start, count), {a}, [start, count](Node& n) {
    const auto& x = n.input(0);
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    g.middleCols(start, count) = n.grad;
    n.send(0, g);
  });
}

Var gather_rows(const Var& a, std::span<const Index> indices) {
  Matrix out(static_cast<Index>(indices.size()), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= a.rows()) throw std::out_of_range("gather_rows: bad index");
    out.row(static_cast<Index>(i)) = a.value().row(indices[i]);
  }
  std::vector<Index> idx(indices.begin(), indices.end());
  return make_node(std::move(out), {a}, [idx](Node& n) {
    const auto& x = n.input(0);
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += n.grad.row(static_cast<Index>(i));
    n.send(0, g);
  });
}

Var layer_norm(const Var& a, Scalar eps) {
  const auto& x = a.value();
  const Index cols = x.cols();
  Matrix y(x.rows(), cols);
  Matrix inv_std(x.rows(), 1);
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar mu = x.row(r).mean();
    const Scalar var = (x.row(r).array() - mu).square().mean();
    inv_std(r, 0) = 1.0 / std::sqrt(var + eps);
    y.row(r) = (x.row(r).array() - mu) * inv_std(r, 0);
  }
  return make_node(y, {a}, [y, inv_std](Node& n) {
    Matrix g(y.rows(), y.cols());
    for (Index r = 0; r < y.rows(); ++r) {
      const auto gr = n.grad.row(r).array();
      const Scalar mean_g = gr.mean();
      const Scalar mean_gy = (gr * y.row(r).array()).mean();
      g.row(r) = inv_std(r, 0) * (gr - mean_g - y.row(r).array() * mean_gy);
    }
    n.send(0, g);
  });
}

Var log_softmax(const Var& a) {
  const auto& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    const Scalar lse = m + std::log((x.row(r).array() - m).exp().sum());
    out.row(r) = x.row(r).array() - lse;
  }
  return make_node(out, {a}, [out](Node& n) {
    Matrix p = out.array().exp().matrix();
    Matrix g = n.grad - (p.array().colwise() * n.grad.rowwise().sum().array()).matrix();
    n.send(0, g);
  });
}

Var softmax(const Var& a) { return exp(log_softmax(a)); }

Var dropout(const Var& a, Scalar rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  const Scalar keep_scale = 1.0 / (1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng->uniform() < rate ? 0.0 : keep_scale;
  return make_node(a.value().cwiseProduct(mask), {a}, [mask](Node& n) {
    n.send(0, n.grad.cwiseProduct(mask));
  });
}

Var temporal_unfold(const Var& a, Index batch, Index seq, Index kernel) {
  if (a.rows() != batch * seq) throw std::invalid_argument("temporal_unfold: rows != batch*seq");
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("temporal_unfold: kernel must be odd");
  const Index ch = a.cols();
  const Index half = kernel / 2;
  Matrix out = Matrix::Zero(batch * seq, kernel * ch);
  const auto& x = a.value();
  for (Index b = 0; b < batch; ++b) {
    for (Index t = 0; t < seq; ++t) {
      for (Index j = 0; j < kernel; ++j) {
        const Index src = t + j - half;
        if (src < 0 || src >= seq) continue;
        out.block(b * seq + t, j * ch, 1, ch) = x.row(b * seq + src);
      }
    }
  }
  return make_node(std::move(out), {a}, [batch, seq, kernel, ch, half](Node& n) {
    Matrix g = Matrix::Zero(batch * seq, ch);
    for (Index b = 0; b < batch; ++b) {
      for (Index t = 0; t < seq; ++t) {
        for (Index j = 0; j < kernel; ++j) {
          const Index src = t + j - half;
          if (src < 0 || src >= seq) continue;
          g.row(b * seq + src) += n.grad.block(b * seq + t, j * ch, 1, ch);
        }
      }
    }
    n.send(0, g);
  });
}

Var multi_head_attention(const Var& q, const Var& k, const Var& v, Index batch, Index seq,
                         Index heads) {
  require_same_shape(q, k, "attention");
  require_same_shape(q, v, "attention");
  if (q.rows() != batch * seq) throw std::invalid_argument("attention: rows != batch*seq");
  const Index dim = q.cols();
  if (heads < 1 || dim % heads != 0) throw std::invalid_argument("attention: dim not divisible by heads");
  const Index dh = dim / heads;
  const Scalar inv_sqrt = 1.0 / std::sqrt(static_cast<Scalar>(dh));

  Matrix out(batch * seq, dim);
  // Attention weights per (sample, head), kept for the backward pass.
  std::vector<Matrix> probs(static_cast<std::size_t>(batch * heads));
  for (Index b = 0; b < batch; ++b) {
    for (Index h = 0; h < heads; ++h) {
      const auto qb = q.value().block(b * seq, h * dh, seq, dh);
      const auto kb = k.value().block(b * seq, h * dh, seq, dh);
      const auto vb = v.value().block(b * seq, h * dh, seq, dh);
      Matrix s = (qb * kb.transpose()) * inv_sqrt;
      for (Index r = 0; r < seq; ++r) {
        const Scalar m = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - m).exp();
        s.row(r) /= s.row(r).sum();
      }
      out.block(b * seq, h * dh, seq, dh) = s * vb;
      probs[static_cast<std::size_t>(b * heads + h)] = std::move(s);
    }
  }
  if (!out.allFinite()) throw DivergenceError("attention produced non-finite values");

  return make_node(std::move(out), {q, k, v},
                   [probs = std::move(probs), batch, seq, heads, dh, dim, inv_sqrt](Node& n) {
    Matrix gq = Matrix::Zero(batch * seq, dim);
    Matrix gk = Matrix::Zero(batch * seq, dim);
    Matrix gv = Matrix::Zero(batch * seq, dim);
    const auto& qv = n.input(0);
    const auto& kv = n.input(1);
    const auto& vv = n.input(2);
    for (Index b = 0; b < batch; ++b) {
      for (Index h = 0; h < heads; ++h) {
        const Matrix& p = probs[static_cast<std::size_t>(b * heads + h)];
        const auto go = n.grad.block(b * seq, h * dh, seq, dh);
        const auto qb = qv.block(b * seq, h * dh, seq, dh);
        const auto kb = kv.block(b * seq, h * dh, seq, dh);
        const auto vb = vv.block(b * seq, h * dh, seq, dh);
        gv.block(b * seq, h * dh, seq, dh) = p.transpose() * go;
        Matrix gp = go * vb.transpose();
        Matrix row_dot = (gp.cwiseProduct(p)).rowwise().sum();
        Matrix gs = p.array() * (gp.array().colwise() - row_dot.col(0).array());
        gs *= inv_sqrt;
        gq.block(b * seq, h * dh, seq, dh) = gs * kb;
        gk.block(b * seq, h * dh, seq, dh) = gs.transpose() * qb;
      }
    }
    n.send(0, gq);
    n.send(1, gk);
    n.send(2, gv);
  });
}

}  // namespace hrlf::ag
