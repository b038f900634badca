#include "sgmm/numkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sgmm/error.hpp"
#include "sgmm/numkit/random.hpp"

namespace sgmm::numkit {
namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

// Builds a result node; history is kept only when some input needs grads.
Tensor make_result(Shape shape, std::vector<double> data, std::vector<NodePtr> parents,
                   std::function<void(Node&)> fn) {
  auto out = std::make_shared<Node>();
  out->shape = std::move(shape);
  out->data = std::move(data);
  const bool track = std::any_of(parents.begin(), parents.end(),
                                 [](const NodePtr& p) { return p->requires_grad; });
  if (track) {
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backward = std::move(fn);
  }
  return Tensor::wrap(std::move(out));
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  require_defined(t, op);
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(t.shape()));
  }
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

enum class BinaryKind { kAdd, kMul };

// `big` carries the output shape; `small` repeats every small.numel() values.
Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  const Tensor* big = &a;
  const Tensor* small = &b;
  auto fits = [](const Tensor& s, const Tensor& l) {
    return s.numel() == 1 || is_suffix(s.shape(), l.shape());
  };
  if (!fits(b, a)) {
    if (!fits(a, b)) {
      throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                       " and " + shape_str(b.shape()));
    }
    std::swap(big, small);
  }
  const auto n = big->numel();
  const auto inner = small->numel();
  const auto bd = big->data();
  const auto sd = small->data();
  std::vector<double> out(n);
  if (kind == BinaryKind::kAdd) {
    for (std::size_t i = 0; i < n; ++i) out[i] = bd[i] + sd[i % inner];
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = bd[i] * sd[i % inner];
  }
  return make_result(big->shape(), std::move(out), {big->node(), small->node()},
                     [kind, inner](Node& self) {
                       auto& bg = *self.parents[0];
                       auto& sm = *self.parents[1];
                       const auto g = std::span<const double>(self.grad);
                       const auto n = g.size();
                       if (bg.requires_grad) {
                         auto gb = bg.grad_buffer();
                         if (kind == BinaryKind::kAdd) {
                           for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
                         } else {
                           for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * sm.data[i % inner];
                         }
                       }
                       if (sm.requires_grad) {
                         auto gs = sm.grad_buffer();
                         if (kind == BinaryKind::kAdd) {
                           for (std::size_t i = 0; i < n; ++i) gs[i % inner] += g[i];
                         } else {
                           for (std::size_t i = 0; i < n; ++i) gs[i % inner] += g[i] * bg.data[i];
                         }
                       }
                     });
}

// (outer, length, inner) decomposition around one axis.
struct AxisSplit {
  std::size_t outer = 1, length = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      if (av == 0.0) continue;
      const double* brow = bd.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    const auto& A = *self.parents[0];
    const auto& B = *self.parents[1];
    const double* g = self.grad.data();
    if (A.requires_grad) {
      // dA = dC * B^T
      auto ga = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = B.data.data() + p * n;
          const double* grow = g + i * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (B.requires_grad) {
      // dB = A^T * dC
      auto gb = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A.data[i * k + p];
          if (av == 0.0) continue;
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const auto r = a.dim(0), c = a.dim(1);
  const auto ad = a.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = ad[i * c + j];
  return make_result({c, r}, std::move(out), {a.node()}, [r, c](Node& self) {
    auto ga = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kAdd, "add"); }

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kMul, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  require_defined(a, "scale");
  const auto ad = a.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < ad.size(); ++i) out[i] = ad[i] * factor;
  return make_result(a.shape(), std::move(out), {a.node()}, [factor](Node& self) {
    auto ga = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * factor;
  });
}

Tensor relu(const Tensor& x) {
  require_defined(x, "relu");
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = xd[i] > 0.0 ? xd[i] : 0.0;
  return make_result(x.shape(), std::move(out), {x.node()}, [](Node& self) {
    const auto& in = self.parents[0]->data;
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (in[i] > 0.0) gx[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  require_defined(x, "sigmoid");
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const double v = xd[i];
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return make_result(x.shape(), std::move(out), {x.node()}, [](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double s = self.data[i];
      gx[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor dropout(const Tensor& x, double p, const DropoutKey& key, bool training) {
  require_defined(x, "dropout");
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  const std::uint64_t base = hash_key({key.seed, key.layer, key.step, key.sample});
  const auto xd = x.data();
  std::vector<double> mask(xd.size());
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const double u = to_unit(splitmix64(base ^ splitmix64(i)));
    mask[i] = u >= p ? keep_scale : 0.0;
    out[i] = xd[i] * mask[i];
  }
  return make_result(x.shape(), std::move(out), {x.node()},
                     [mask = std::move(mask)](Node& self) {
                       auto gx = self.parents[0]->grad_buffer();
                       for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * mask[i];
                     });
}

Tensor layer_norm(const Tensor& x, double eps) { return layer_norm(x, Tensor{}, Tensor{}, eps); }

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_defined(x, "layer_norm");
  if (x.rank() == 0) throw ShapeError("layer_norm: needs at least one axis");
  const std::size_t d = x.shape().back();
  if (d == 0) throw EmptyInputError("layer_norm: empty last axis");
  const bool affine = gamma.defined();
  if (affine != beta.defined()) throw ShapeError("layer_norm: gamma and beta must be given together");
  if (affine && (gamma.numel() != d || beta.numel() != d)) {
    throw ShapeError("layer_norm: affine parameters must have length " + std::to_string(d));
  }
  const std::size_t rows = x.numel() / d;
  const auto xd = x.data();
  std::vector<double> xhat(xd.size());
  std::vector<double> inv_std(rows);
  std::vector<double> out(xd.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * inv;
      xhat[r * d + j] = h;
      out[r * d + j] = affine ? h * gamma.data()[j] + beta.data()[j] : h;
    }
  }
  std::vector<NodePtr> parents{x.node()};
  if (affine) {
    parents.push_back(gamma.node());
    parents.push_back(beta.node());
  }
  return make_result(
      x.shape(), std::move(out), std::move(parents),
      [d, rows, affine, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const double* g = self.grad.data();
        const double* gam = affine ? self.parents[1]->data.data() : nullptr;
        if (affine && self.parents[1]->requires_grad) {
          auto gg = self.parents[1]->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * xhat[r * d + j];
        }
        if (affine && self.parents[2]->requires_grad) {
          auto gb = self.parents[2]->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
        }
        if (!self.parents[0]->requires_grad) return;
        auto gx = self.parents[0]->grad_buffer();
        std::vector<double> dh(d);
        const double dd = static_cast<double>(d);
        for (std::size_t r = 0; r < rows; ++r) {
          double s1 = 0.0, s2 = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dh[j] = g[r * d + j] * (affine ? gam[j] : 1.0);
            s1 += dh[j];
            s2 += dh[j] * xhat[r * d + j];
          }
          for (std::size_t j = 0; j < d; ++j) {
            gx[r * d + j] += inv_std[r] / dd * (dd * dh[j] - s1 - xhat[r * d + j] * s2);
          }
        }
      });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  require_defined(x, "softmax");
  if (axis >= x.rank()) throw RankError("softmax: axis out of range for " + shape_str(x.shape()));
  const auto s = split_axis(x.shape(), axis);
  const auto xd = x.data();
  for (double v : xd) {
    if (std::isnan(v)) throw NumericError("softmax: NaN input");
  }
  std::vector<double> out(xd.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.length * s.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < s.length; ++l) mx = std::max(mx, xd[base + l * s.inner]);
      double total = 0.0;
      for (std::size_t l = 0; l < s.length; ++l) {
        const double e = std::exp(xd[base + l * s.inner] - mx);
        out[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.length; ++l) out[base + l * s.inner] /= total;
    }
  }
  return make_result(x.shape(), std::move(out), {x.node()}, [s](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.length * s.inner + in;
        double dot = 0.0;
        for (std::size_t l = 0; l < s.length; ++l) {
          const auto idx = base + l * s.inner;
          dot += self.grad[idx] * self.data[idx];
        }
        for (std::size_t l = 0; l < s.length; ++l) {
          const auto idx = base + l * s.inner;
          gx[idx] += self.data[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

Tensor mean_pool(const Tensor& x, std::size_t axis) {
  require_defined(x, "mean_pool");
  if (axis >= x.rank()) throw RankError("mean_pool: axis out of range for " + shape_str(x.shape()));
  const auto s = split_axis(x.shape(), axis);
  if (s.length == 0) throw EmptyInputError("mean_pool: cannot average zero rows");
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const auto xd = x.data();
  const double inv_n = 1.0 / static_cast<double>(s.length);
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t l = 0; l < s.length; ++l)
      for (std::size_t in = 0; in < s.inner; ++in)
        out[o * s.inner + in] += xd[(o * s.length + l) * s.inner + in];
  for (auto& v : out) v *= inv_n;
  return make_result(std::move(out_shape), std::move(out), {x.node()}, [s, inv_n](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t l = 0; l < s.length; ++l)
        for (std::size_t in = 0; in < s.inner; ++in)
          gx[(o * s.length + l) * s.inner + in] += self.grad[o * s.inner + in] * inv_n;
  });
}

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_result({}, {total}, {x.node()}, [](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (auto& g : gx) g += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  require_defined(x, "mean");
  if (x.numel() == 0) throw EmptyInputError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor reshape(const Tensor& x, Shape shape) {
  require_defined(x, "reshape");
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(std::move(shape), std::move(out), {x.node()}, [](Node& self) {
    auto gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank(table, 2, "gather_rows");
  const auto rows = table.dim(0), d = table.dim(1);
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  std::vector<double> out(idx.size() * d);
  const auto td = table.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows) {
      throw ShapeError("gather_rows: row " + std::to_string(idx[i]) + " out of range for " +
                       shape_str(table.shape()));
    }
    std::copy_n(td.begin() + static_cast<std::ptrdiff_t>(idx[i] * d), d,
                out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  const std::size_t n = idx.size();
  return make_result({n, d}, std::move(out), {table.node()},
                     [d, idx = std::move(idx)](Node& self) {
                       auto gt = self.parents[0]->grad_buffer();
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         for (std::size_t j = 0; j < d; ++j) gt[idx[i] * d + j] += self.grad[i * d + j];
                     });
}

Tensor select_row(const Tensor& x, std::size_t r) {
  require_rank(x, 2, "select_row");
  if (r >= x.dim(0)) {
    throw ShapeError("select_row: row " + std::to_string(r) + " out of range for " +
                     shape_str(x.shape()));
  }
  const std::size_t ids[] = {r};
  return reshape(gather_rows(x, ids), {x.dim(1)});
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  const auto rows = x.dim(0), cols = x.dim(1);
  if (begin + count > cols) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + shape_str(x.shape()));
  }
  const auto xd = x.data();
  std::vector<double> out(rows * count);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < count; ++c) out[r * count + c] = xd[r * cols + begin + c];
  return make_result({rows, count}, std::move(out), {x.node()},
                     [rows, cols, begin, count](Node& self) {
                       auto gx = self.parents[0]->grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < count; ++c)
                           gx[r * cols + begin + c] += self.grad[r * count + c];
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw EmptyInputError("concat_rows: no inputs");
  std::size_t cols = 0, rows = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    require_rank(parts[i], 2, "concat_rows");
    if (i == 0) cols = parts[i].dim(1);
    if (parts[i].dim(1) != cols) throw ShapeError("concat_rows: column counts differ");
    rows += parts[i].dim(0);
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  std::vector<NodePtr> parents;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
    parents.push_back(p.node());
  }
  return make_result({rows, cols}, std::move(out), std::move(parents),
                     [offsets = std::move(offsets)](Node& self) {
                       for (std::size_t i = 0; i < self.parents.size(); ++i) {
                         auto& p = *self.parents[i];
                         if (!p.requires_grad) continue;
                         auto gp = p.grad_buffer();
                         for (std::size_t j = 0; j < gp.size(); ++j) gp[j] += self.grad[offsets[i] + j];
                       }
                     });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw EmptyInputError("concat_cols: no inputs");
  std::size_t rows = 0, cols = 0;
  std::vector<std::size_t> widths;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    require_rank(parts[i], 2, "concat_cols");
    if (i == 0) rows = parts[i].dim(0);
    if (parts[i].dim(0) != rows) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(parts[i].dim(1));
    cols += parts[i].dim(1);
  }
  std::vector<double> out(rows * cols);
  std::vector<NodePtr> parents;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto pd = parts[i].data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < widths[i]; ++c) out[r * cols + offset + c] = pd[r * widths[i] + c];
    offset += widths[i];
    parents.push_back(parts[i].node());
  }
  return make_result({rows, cols}, std::move(out), std::move(parents),
                     [rows, cols, widths = std::move(widths)](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t i = 0; i < self.parents.size(); ++i) {
                         auto& p = *self.parents[i];
                         if (p.requires_grad) {
                           auto gp = p.grad_buffer();
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < widths[i]; ++c)
                               gp[r * widths[i] + c] += self.grad[r * cols + off + c];
                         }
                         off += widths[i];
                       }
                     });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw EmptyInputError("concat: no inputs");
  std::vector<double> out;
  std::vector<NodePtr> parents;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    require_rank(p, 1, "concat");
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
    parents.push_back(p.node());
  }
  const std::size_t n = out.size();
  return make_result({n}, std::move(out), std::move(parents),
                     [offsets = std::move(offsets)](Node& self) {
                       for (std::size_t i = 0; i < self.parents.size(); ++i) {
                         auto& p = *self.parents[i];
                         if (!p.requires_grad) continue;
                         auto gp = p.grad_buffer();
                         for (std::size_t j = 0; j < gp.size(); ++j) gp[j] += self.grad[offsets[i] + j];
                       }
                     });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_defined(x, "linear");
  Tensor y;
  if (x.rank() == 1) {
    y = reshape(matmul(reshape(x, {1, x.dim(0)}), w), {w.dim(1)});
  } else {
    y = matmul(x, w);
  }
  return b.defined() ? add(y, b) : y;
}

Tensor bce_loss(const Tensor& p, double label) {
  require_defined(p, "bce_loss");
  if (label != 0.0 && label != 1.0) {
    throw LabelError("bce_loss: label must be 0 or 1, got " + std::to_string(label));
  }
  if (p.numel() != 1) throw RankError("bce_loss: expects a single probability");
  const double raw = p.data()[0];
  if (std::isnan(raw)) throw NumericError("bce_loss: NaN probability");
  const double pc = std::clamp(raw, kBceClamp, 1.0 - kBceClamp);
  const double loss = -(label * std::log(pc) + (1.0 - label) * std::log(1.0 - pc));
  const bool inside = raw == pc;
  return make_result({}, {loss}, {p.node()}, [label, pc, inside](Node& self) {
    if (!inside) return;
    auto gp = self.parents[0]->grad_buffer();
    gp[0] += self.grad[0] * (-label / pc + (1.0 - label) / (1.0 - pc));
  });
}

}  // namespace sgmm::numkit
