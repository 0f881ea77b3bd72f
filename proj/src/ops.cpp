// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mcm/errors.hpp"
#include "mcm/kernels.hpp"

namespace mcm::ops {

namespace {

void check_finite(const char* op, const Tensor& t) {
  for (double v : t.data())
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input value");
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

std::vector<double>& acc(Tensor& t) { return t.grad(); }

Tensor attach(Tensor out, const char* op, std::vector<Tensor> parents,
              std::function<void(const Tensor&)> backward) {
  bool any = false;
  for (const auto& p : parents) any = any || taping(p);
  if (any) {
    out.set_requires_grad(true);
    auto node = std::make_shared<detail::Node>();
    node->op = op;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
    out.set_node(std::move(node));
  }
  return out;
}

// Leading x trailing element counts around one axis.
std::pair<std::int64_t, std::int64_t> split_at(const std::vector<std::int64_t>& shape, int axis) {
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[static_cast<std::size_t>(i)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < shape.size(); ++i)
    inner *= shape[i];
  return {outer, inner};
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
          "matmul: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
  check_finite("matmul", a);
  check_finite("matmul", b);
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul_nn(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  return attach(std::move(out), "matmul", {a, b}, [m, k, n](const Tensor& o) {
    Tensor pa = o.node()->parents[0], pb = o.node()->parents[1];
    if (pa.requires_grad())
      kernels::matmul_nt(o.grad().data(), pb.data().data(), acc(pa).data(), m, n, k, true);
    if (pb.requires_grad())
      kernels::matmul_tn(pa.data().data(), o.grad().data(), acc(pb).data(), k, m, n, true);
  });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  require(a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0) && a.dim(2) == b.dim(1),
          "bmm: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
  check_finite("bmm", a);
  check_finite("bmm", b);
  const std::int64_t bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  Tensor out = Tensor::zeros({bs, m, n});
  for (std::int64_t i = 0; i < bs; ++i)
    kernels::matmul_nn(a.data().data() + i * m * k, b.data().data() + i * k * n,
                       out.data().data() + i * m * n, m, k, n);
  return attach(std::move(out), "bmm", {a, b}, [bs, m, k, n](const Tensor& o) {
    Tensor pa = o.node()->parents[0], pb = o.node()->parents[1];
    for (std::int64_t i = 0; i < bs; ++i) {
      const double* g = o.grad().data() + i * m * n;
      if (pa.requires_grad())
        kernels::matmul_nt(g, pb.data().data() + i * k * n, acc(pa).data() + i * m * k, m, n, k,
                           true);
      if (pb.requires_grad())
        kernels::matmul_tn(pa.data().data() + i * m * k, g, acc(pb).data() + i * k * n, k, m, n,
                           true);
    }
  });
}

namespace {
void transpose_copy(const double* x, double* y, std::int64_t batch, std::int64_t m,
                    std::int64_t n) {
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* xb = x + b * m * n;
    double* yb = y + b * m * n;
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < n; ++j) yb[j * m + i] = xb[i * n + j];
  }
}
}  // namespace

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2 || a.rank() == 3, "transpose: rank must be 2 or 3, got " + a.shape_str());
  check_finite("transpose", a);
  const bool batched = a.rank() == 3;
  const std::int64_t bs = batched ? a.dim(0) : 1;
  const std::int64_t m = a.dim(batched ? 1 : 0), n = a.dim(batched ? 2 : 1);
  Tensor out = batched ? Tensor::zeros({bs, n, m}) : Tensor::zeros({n, m});
  transpose_copy(a.data().data(), out.data().data(), bs, m, n);
  return attach(std::move(out), "transpose", {a}, [bs, m, n](const Tensor& o) {
    Tensor pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    std::vector<double> tmp(o.grad().size());
    transpose_copy(o.grad().data(), tmp.data(), bs, n, m);
    auto& g = acc(pa);
    for (std::size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
  });
}

namespace {
Tensor binary_op(const char* name, kernels::BinOp op, const Tensor& a, const Tensor& b,
                 double db_sign) {
  require(a.shape() == b.shape(), std::string(name) + ": shape mismatch " + a.shape_str() +
                                      " vs " + b.shape_str());
  check_finite(name, a);
  check_finite(name, b);
  Tensor out = Tensor::zeros(a.shape());
  kernels::binary(op, a.data().data(), b.data().data(), out.data().data(), a.numel());
  const bool is_mul = op == kernels::BinOp::kMul;
  return attach(std::move(out), name, {a, b}, [db_sign, is_mul](const Tensor& o) {
    Tensor pa = o.node()->parents[0], pb = o.node()->parents[1];
    const auto& g = o.grad();
    if (pa.requires_grad()) {
      auto& ga = acc(pa);
      if (is_mul) {
        const auto& bd = pb.data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bd[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
    }
    if (pb.requires_grad()) {
      auto& gb = acc(pb);
      if (is_mul) {
        const auto& ad = pa.data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ad[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += db_sign * g[i];
      }
    }
  });
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op("add", kernels::BinOp::kAdd, a, b, 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op("sub", kernels::BinOp::kSub, a, b, -1.0); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op("mul", kernels::BinOp::kMul, a, b, 1.0); }

Tensor scale(const Tensor& a, double s) {
  check_finite("scale", a);
  if (!std::isfinite(s)) throw NumericError("scale: non-finite scalar factor");
  Tensor out = Tensor::zeros(a.shape());
  const auto& ad = a.data();
  auto& od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * s;
  return attach(std::move(out), "scale", {a}, [s](const Tensor& o) {
    Tensor pa = o.node()->parents[0];
    if (!pa.requires_grad()) return;
    auto& g = acc(pa);
    const auto& og = o.grad();
    for (std::size_t i = 0; i < og.size(); ++i) g[i] += og[i] * s;
  });
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  const auto& xs = x.shape();
  const auto& bs = b.shape();
  bool suffix = bs.size() <= xs.size() &&
                std::equal(bs.rbegin(), bs.rend(), xs.rbegin());
  require(suffix, "add_bias: bias " + b.shape_str() + " is not a suffix of " + x.shape_str());
  check_finite("add_bias", x);
  check_finite("add_bias", b);
  const std::int64_t bn = b.numel();
  Tensor out = Tensor::zeros(x.shape());
  const auto& xd = x.data();
  const auto& bd = b.data();
  auto& od = out.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) od[i] = xd[i] + bd[i % bn];
  return attach(std::move(out), "add_bias", {x, b}, [bn](const Tensor& o) {
    Tensor px = o.node()->parents[0], pb = o.node()->parents[1];
    const auto& g = o.grad();
    if (px.requires_grad()) {
      auto& gx = acc(px);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (pb.requires_grad()) {
      auto& gb = acc(pb);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % bn] += g[i];
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  require(!parts.empty(), "concat: no inputs");
  const auto& s0 = parts[0].shape();
  require(axis >= 0 && axis < static_cast<int>(s0.size()), "concat: axis out of range");
  std::int64_t axis_total = 0;
  for (const auto& p : parts) {
    require(p.rank() == static_cast<int>(s0.size()), "concat: rank mismatch");
    for (int i = 0; i < p.rank(); ++i)
      require(i == axis || p.dim(i) == s0[static_cast<std::size_t>(i)],
              "concat: shape mismatch " + p.shape_str() + " vs " + parts[0].shape_str());
    check_finite("concat", p);
    axis_total += p.dim(axis);
  }
  std::vector<std::int64_t> shape = s0;
  shape[static_cast<std::size_t>(axis)] = axis_total;
  Tensor out = Tensor::zeros(shape);
  auto [outer, inner] = split_at(shape, axis);
  std::vector<std::int64_t> offsets;
  std::int64_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::int64_t len = p.dim(axis);
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(p.data().data() + o * len * inner, len * inner,
                  out.data().data() + (o * axis_total + off) * inner);
    off += len;
  }
  return attach(std::move(out), "concat", parts,
                [outer, inner, axis_total, offsets, axis](const Tensor& o) {
                  const auto& g = o.grad();
                  for (std::size_t pi = 0; pi < o.node()->parents.size(); ++pi) {
                    Tensor p = o.node()->parents[pi];
                    if (!p.requires_grad()) continue;
                    auto& gp = acc(p);
                    const std::int64_t len = p.dim(axis);
                    for (std::int64_t ou = 0; ou < outer; ++ou) {
                      const double* src = g.data() + (ou * axis_total + offsets[pi]) * inner;
                      double* dst = gp.data() + ou * len * inner;
                      for (std::int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
                    }
                  }
                });
}

Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t len) {
  require(axis >= 0 && axis < x.rank(), "slice: axis out of range for " + x.shape_str());
  const std::int64_t d = x.dim(axis);
  require(start >= 0 && len >= 1 && start + len <= d,
          "slice: window [" + std::to_string(start) + "," + std::to_string(start + len) +
              ") out of range for axis size " + std::to_string(d));
  check_finite("slice", x);
  std::vector<std::int64_t> shape = x.shape();
  shape[static_cast<std::size_t>(axis)] = len;
  Tensor out = Tensor::zeros(shape);
  auto [outer, inner] = split_at(x.shape(), axis);
  for (std::int64_t o = 0; o < outer; ++o)
    std::copy_n(x.data().data() + (o * d + start) * inner, len * inner,
                out.data().data() + o * len * inner);
  return attach(std::move(out), "slice", {x}, [outer, inner, d, start, len](const Tensor& o) {
    Tensor px = o.node()->parents[0];
    if (!px.requires_grad()) return;
    auto& gx = acc(px);
    const auto& g = o.grad();
    for (std::int64_t ou = 0; ou < outer; ++ou) {
      const double* src = g.data() + ou * len * inner;
      double* dst = gx.data() + (ou * d + start) * inner;
      for (std::int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
    }
  });
}

Tensor reshape(const Tensor& x, std::vector<std::int64_t> shape) {
  require(shape_numel(shape) == x.numel(),
          "reshape: element count mismatch " + x.shape_str() + " -> " + shape_to_string(shape));
  check_finite("reshape", x);
  Tensor out = Tensor::from_data(std::move(shape), x.data());
  return attach(std::move(out), "reshape", {x}, [](const Tensor& o) {
    Tensor px = o.node()->parents[0];
    if (!px.requires_grad()) return;
    auto& gx = acc(px);
    const auto& g = o.grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Tensor softmax(const Tensor& x) {
  require(x.rank() >= 1, "softmax: rank must be >= 1");
  check_finite("softmax", x);
  const std::int64_t cols = x.dim(x.rank() - 1);
  const std::int64_t rows = x.numel() / cols;
  Tensor out = Tensor::zeros(x.shape());
  kernels::softmax_rows(x.data().data(), out.data().data(), rows, cols);
  return attach(std::move(out), "softmax", {x}, [rows, cols](const Tensor& o) {
    Tensor px = o.node()->parents[0];
    if (!px.requires_grad()) return;
    auto& gx = acc(px);
    const auto& g = o.grad();
    const auto& y = o.data();
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* gr = g.data() + r * cols;
      const double* yr = y.data() + r * cols;
      double dot = 0.0;
      for (std::int64_t j = 0; j < cols; ++j) dot += gr[j] * yr[j];
      double* gxr = gx.data() + r * cols;
      for (std::int64_t j = 0; j < cols; ++j) gxr[j] += (gr[j] - dot) * yr[j];
    }
  });
}

Tensor layernorm(const Tensor& x, double eps) {
  require(x.rank() >= 1, "layernorm: rank must be >= 1");
  check_finite("layernorm", x);
  const std::int64_t cols = x.dim(x.rank() - 1);
  const std::int64_t rows = x.numel() / cols;
  Tensor out = Tensor::zeros(x.shape());
  std::vector<double> mean(static_cast<std::size_t>(rows)), rstd(static_cast<std::size_t>(rows));
  kernels::layernorm_rows(x.data().data(), out.data().data(), mean.data(), rstd.data(), rows,
                          cols, eps);
  return attach(std::move(out), "layernorm", {x},
                [rows, cols, rstd = std::move(rstd)](const Tensor& o) {
                  Tensor px = o.node()->parents[0];
                  if (!px.requires_grad()) return;
                  auto& gx = acc(px);
                  const auto& g = o.grad();
                  const auto& y = o.data();
                  for (std::int64_t r = 0; r < rows; ++r) {
                    const double* gr = g.data() + r * cols;
                    const double* yr = y.data() + r * cols;
                    double gmean = 0.0, gymean = 0.0;
                    for (std::int64_t j = 0; j < cols; ++j) {
                      gmean += gr[j];
                      gymean += gr[j] * yr[j];
                    }
                    gmean /= static_cast<double>(cols);
                    gymean /= static_cast<double>(cols);
                    double* gxr = gx.data() + r * cols;
                    for (std::int64_t j = 0; j < cols; ++j)
                      gxr[j] += rstd[static_cast<std::size_t>(r)] * (gr[j] - gmean - yr[j] * gymean);
                  }
                });
}

Tensor scale_shift(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  const std::int64_t cols = x.dim(x.rank() - 1);
  require(gamma.rank() == 1 && beta.rank() == 1 && gamma.dim(0) == cols && beta.dim(0) == cols,
          "scale_shift: gamma/beta " + gamma.shape_str() + "/" + beta.shape_str() +
              " must have length " + std::to_string(cols));
  check_finite("scale_shift", x);
  check_finite("scale_shift", gamma);
  check_finite("scale_shift", beta);
  const std::int64_t rows = x.numel() / cols;
  Tensor out = Tensor::zeros(x.shape());
  const auto& xd = x.data();
  const auto& gd = gamma.data();
  const auto& bd = beta.data();
  auto& od = out.data();
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t j = 0; j < cols; ++j) od[r * cols + j] = xd[r * cols + j] * gd[j] + bd[j];
  return attach(std::move(out), "scale_shift", {x, gamma, beta}, [rows, cols](const Tensor& o) {
    Tensor px = o.node()->parents[0], pg = o.node()->parents[1], pb = o.node()->parents[2];
    const auto& g = o.grad();
    if (px.requires_grad()) {
      auto& gx = acc(px);
      const auto& gd = pg.data();
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < cols; ++j) gx[r * cols + j] += g[r * cols + j] * gd[j];
    }
    if (pg.requires_grad()) {
      auto& gg = acc(pg);
      const auto& xd = px.data();
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < cols; ++j) gg[j] += g[r * cols + j] * xd[r * cols + j];
    }
    if (pb.requires_grad()) {
      auto& gb = acc(pb);
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < cols; ++j) gb[j] += g[r * cols + j];
    }
  });
}

Tensor gelu(const Tensor& x) {
  check_finite("gelu", x);
  Tensor out = Tensor::zeros(x.shape());
  kernels::map(kernels::MapOp::kGelu, x.data().data(), out.data().data(), x.numel());
  return attach(std::move(out), "gelu", {x}, [](const Tensor& o) {
    Tensor px = o.node()->parents[0];
    if (!px.requires_grad()) return;
    auto& gx = acc(px);
    const auto& g = o.grad();
    const auto& xd = px.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xd[i];
      const double u = kGeluC * (v + 0.044715 * v * v * v);
      const double t = std::tanh(u);
      const double du = kGeluC * (1.0 + 3.0 * 0.044715 * v * v);
      gx[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  check_finite("sigmoid", x);
  Tensor out = Tensor::zeros(x.shape());
  kernels::map(kernels::MapOp::kSigmoid, x.data().data(), out.data().data(), x.numel());
  return attach(std::move(out), "sigmoid", {x}, [](const Tensor& o) {
    Tensor px = o.node()->parents[0];
    if (!px.requires_grad()) return;
    auto& gx = acc(px);
    const auto& g = o.grad();
    const auto& y = o.data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor sum_all(const Tensor& x) {
  check_finite("sum_all", x);
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::scalar(s);
  return attach(std::move(out), "sum_all", {x}, [](const Tensor& o) {
    Tensor px = o.node()->parents[0];
    if (!px.requires_grad()) return;
    auto& gx = acc(px);
    const double g = o.grad()[0];
    for (auto& v : gx) v += g;
  });
}

Tensor mean_all(const Tensor& x) {
  check_finite("mean_all", x);
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  Tensor out = Tensor::scalar(s / n);
  return attach(std::move(out), "mean_all", {x}, [n](const Tensor& o) {
    Tensor px = o.node()->parents[0];
    if (!px.requires_grad()) return;
    auto& gx = acc(px);
    const double g = o.grad()[0] / n;
    for (auto& v : gx) v += g;
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(),
          "mse: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  check_finite("mse", a);
  check_finite("mse", b);
  const auto& ad = a.data();
  const auto& bd = b.data();
  double s = 0.0;
  for (std::size_t i = 0; i < ad.size(); ++i) {
    const double d = ad[i] - bd[i];
    s += d * d;
  }
  const double n = static_cast<double>(a.numel());
  Tensor out = Tensor::scalar(s / n);
  return attach(std::move(out), "mse", {a, b}, [n](const Tensor& o) {
    Tensor pa = o.node()->parents[0], pb = o.node()->parents[1];
    const double g = o.grad()[0] * 2.0 / n;
    const auto& ad = pa.data();
    const auto& bd = pb.data();
    if (pa.requires_grad()) {
      auto& ga = acc(pa);
      for (std::size_t i = 0; i < ad.size(); ++i) ga[i] += g * (ad[i] - bd[i]);
    }
    if (pb.requires_grad()) {
      auto& gb = acc(pb);
      for (std::size_t i = 0; i < ad.size(); ++i) gb[i] -= g * (ad[i] - bd[i]);
    }
  });
}

Tensor bce(const Tensor& p, const Tensor& t) {
  require(p.rank() == 2 && p.shape() == t.shape(),
          "bce: need matching rank-2 shapes, got " + p.shape_str() + " vs " + t.shape_str());
  if (taping(t)) throw NumericError("bce: the target side must not require gradients");
  check_finite("bce", p);
  check_finite("bce", t);
  for (double v : t.data())
    if (v < 0.0 || v > 1.0) throw NumericError("bce: target outside [0,1]");
  const std::int64_t batch = p.dim(0), cols = p.dim(1);
  const auto& pd = p.data();
  const auto& td = t.data();
  double s = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const double c = std::clamp(pd[i], kBceClamp, 1.0 - kBceClamp);
    s -= td[i] * std::log(c) + (1.0 - td[i]) * std::log(1.0 - c);
  }
  Tensor out = Tensor::scalar(s / static_cast<double>(batch));
  return attach(std::move(out), "bce", {p, t}, [batch, cols](const Tensor& o) {
    Tensor pp = o.node()->parents[0];
    const Tensor& pt = o.node()->parents[1];
    if (!pp.requires_grad()) return;
    auto& gp = acc(pp);
    const auto& pd = pp.data();
    const auto& td = pt.data();
    const double g = o.grad()[0] / static_cast<double>(batch);
    (void)cols;
    for (std::size_t i = 0; i < pd.size(); ++i) {
      if (pd[i] <= kBceClamp || pd[i] >= 1.0 - kBceClamp) continue;  // clamp plateau
      gp[i] += g * (pd[i] - td[i]) / (pd[i] * (1.0 - pd[i]));
    }
  });
}

Tensor embedding(const Tensor& table, const std::vector<std::vector<std::int64_t>>& ids) {
  require(table.rank() == 2, "embedding: table must be rank 2, got " + table.shape_str());
  check_finite("embedding", table);
  const std::int64_t vocab = table.dim(0), d = table.dim(1);
  require(!ids.empty() && !ids[0].empty(), "embedding: empty id batch");
  const std::int64_t bsz = static_cast<std::int64_t>(ids.size());
  const std::int64_t n = static_cast<std::int64_t>(ids[0].size());
  for (const auto& row : ids) {
    require(static_cast<std::int64_t>(row.size()) == n, "embedding: ragged id rows");
    for (std::int64_t id : row)
      if (id < 0 || id >= vocab)
        throw ShapeError("embedding: id " + std::to_string(id) + " out of range [0," +
                         std::to_string(vocab) + ")");
  }
  Tensor out = Tensor::zeros({bsz, n, d});
  for (std::int64_t b = 0; b < bsz; ++b)
    for (std::int64_t i = 0; i < n; ++i)
      std::copy_n(table.data().data() + ids[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)] * d,
                  d, out.data().data() + (b * n + i) * d);
  return attach(std::move(out), "embedding", {table}, [ids, bsz, n, d](const Tensor& o) {
    Tensor pt = o.node()->parents[0];
    if (!pt.requires_grad()) return;
    auto& gt = acc(pt);
    const auto& g = o.grad();
    for (std::int64_t b = 0; b < bsz; ++b)
      for (std::int64_t i = 0; i < n; ++i) {
        const double* src = g.data() + (b * n + i) * d;
        double* dst = gt.data() + ids[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)] * d;
        for (std::int64_t j = 0; j < d; ++j) dst[j] += src[j];
      }
  });
}

}  // namespace mcm::ops
