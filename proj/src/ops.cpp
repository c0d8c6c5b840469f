// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace detsep::ad {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::runtime_error(std::string(op) + ": shape mismatch " +
                             shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
}

void accumulate(const std::shared_ptr<Node>& p, const std::vector<double>& g) {
  if (!p->requires_grad) return;
  p->ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
}

// Elementwise binary op with per-element partials.
template <typename F, typename DA, typename DB>
Tensor ewise2(const char* op, const Tensor& a, const Tensor& b, F f, DA da,
              DB db) {
  require_same_shape(op, a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
  return make_op(op, a.shape(), std::move(out), {a, b},
                 [da, db](Node& n) {
                   const auto& pa = n.parents[0];
                   const auto& pb = n.parents[1];
                   if (pa->requires_grad) {
                     pa->ensure_grad();
                     for (std::size_t i = 0; i < n.grad.size(); ++i)
                       pa->grad[i] += n.grad[i] * da(pa->value[i], pb->value[i]);
                   }
                   if (pb->requires_grad) {
                     pb->ensure_grad();
                     for (std::size_t i = 0; i < n.grad.size(); ++i)
                       pb->grad[i] += n.grad[i] * db(pa->value[i], pb->value[i]);
                   }
                 });
}

// Elementwise unary op; partial receives (input, output).
template <typename F, typename D>
Tensor ewise1(const char* op, const Tensor& a, F f, D d) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return make_op(op, a.shape(), std::move(out), {a}, [d](Node& n) {
    const auto& p = n.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      p->grad[i] += n.grad[i] * d(p->value[i], n.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return ewise2(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return ewise2(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return ewise2(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return ewise2(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, double s) {
  return ewise1(
      "scale", a, [s](double x) { return s * x; },
      [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return ewise1(
      "add_scalar", a, [s](double x) { return x + s; },
      [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as.size() == 2 && bs.size() == 2 && as[1] == bs[0]) {
    const int64_t r = as[0], k = as[1], c = bs[1];
    std::vector<double> out(static_cast<std::size_t>(r * c), 0.0);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int64_t i = 0; i < r; ++i)
      for (int64_t kk = 0; kk < k; ++kk) {
        const double aik = av[i * k + kk];
        if (aik == 0.0) continue;
        const double* brow = bv.data() + kk * c;
        double* orow = out.data() + i * c;
        for (int64_t j = 0; j < c; ++j) orow[j] += aik * brow[j];
      }
    return make_op("matmul", {r, c}, std::move(out), {a, b},
                   [r, k, c](Node& n) {
                     const auto& pa = n.parents[0];
                     const auto& pb = n.parents[1];
                     if (pa->requires_grad) {
                       pa->ensure_grad();
                       for (int64_t i = 0; i < r; ++i)
                         for (int64_t j = 0; j < c; ++j) {
                           const double g = n.grad[i * c + j];
                           if (g == 0.0) continue;
                           for (int64_t kk = 0; kk < k; ++kk)
                             pa->grad[i * k + kk] += g * pb->value[kk * c + j];
                         }
                     }
                     if (pb->requires_grad) {
                       pb->ensure_grad();
                       for (int64_t i = 0; i < r; ++i)
                         for (int64_t kk = 0; kk < k; ++kk) {
                           const double av_ik = pa->value[i * k + kk];
                           if (av_ik == 0.0) continue;
                           for (int64_t j = 0; j < c; ++j)
                             pb->grad[kk * c + j] += av_ik * n.grad[i * c + j];
                         }
                     }
                   });
  }
  if (as.size() == 2 && bs.size() == 1 && as[1] == bs[0]) {
    const int64_t r = as[0], k = as[1];
    std::vector<double> out(static_cast<std::size_t>(r), 0.0);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int64_t i = 0; i < r; ++i) {
      double acc = 0.0;
      for (int64_t kk = 0; kk < k; ++kk) acc += av[i * k + kk] * bv[kk];
      out[i] = acc;
    }
    return make_op("matmul", {r}, std::move(out), {a, b},
                   [r, k](Node& n) {
                     const auto& pa = n.parents[0];
                     const auto& pb = n.parents[1];
                     if (pa->requires_grad) {
                       pa->ensure_grad();
                       for (int64_t i = 0; i < r; ++i)
                         for (int64_t kk = 0; kk < k; ++kk)
                           pa->grad[i * k + kk] += n.grad[i] * pb->value[kk];
                     }
                     if (pb->requires_grad) {
                       pb->ensure_grad();
                       for (int64_t i = 0; i < r; ++i)
                         for (int64_t kk = 0; kk < k; ++kk)
                           pb->grad[kk] += n.grad[i] * pa->value[i * k + kk];
                     }
                   });
  }
  throw std::runtime_error("matmul: incompatible shapes " + shape_str(as) +
                           " x " + shape_str(bs));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 1 || b.shape().size() != 1)
    throw std::runtime_error("dot: expects vectors, got " +
                             shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
  require_same_shape("dot", a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    acc += a.values()[i] * b.values()[i];
  return make_op("dot", {}, {acc}, {a, b}, [](Node& n) {
    const auto& pa = n.parents[0];
    const auto& pb = n.parents[1];
    const double g = n.grad[0];
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < pa->value.size(); ++i)
        pa->grad[i] += g * pb->value[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < pb->value.size(); ++i)
        pb->grad[i] += g * pa->value[i];
    }
  });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return make_op("sum", {}, {acc}, {a}, [](Node& n) {
    const auto& p = n.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double g = n.grad[0];
    for (auto& gv : p->grad) gv += g;
  });
}

Tensor mean(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.size());
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return make_op("mean", {}, {acc * inv}, {a}, [inv](Node& n) {
    const auto& p = n.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double g = n.grad[0] * inv;
    for (auto& gv : p->grad) gv += g;
  });
}

Tensor relu(const Tensor& a) {
  return ewise1(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return ewise1(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_t(const Tensor& a) {
  return ewise1(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor exp_t(const Tensor& a) {
  return ewise1(
      "exp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor ln_t(const Tensor& a) {
  for (double v : a.values())
    if (v <= 0.0)
      throw std::runtime_error("ln: input must be strictly positive");
  return ewise1(
      "ln", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor log10_t(const Tensor& a) {
  for (double v : a.values())
    if (v <= 0.0)
      throw std::runtime_error("log10: input must be strictly positive");
  constexpr double kInvLn10 = 0.43429448190325176;
  return ewise1(
      "log10", a, [](double x) { return std::log10(x); },
      [](double x, double) { return kInvLn10 / x; });
}

Tensor softmax(const Tensor& a) {
  const auto& s = a.shape();
  int64_t rows = 1, cols = 0;
  if (s.size() == 1) {
    cols = s[0];
  } else if (s.size() == 2) {
    rows = s[0];
    cols = s[1];
  } else {
    throw std::runtime_error("softmax: expects vector or matrix, got " +
                             shape_str(s));
  }
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double* in = av.data() + r * cols;
    double* o = out.data() + r * cols;
    double mx = in[0];
    for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (int64_t j = 0; j < cols; ++j) o[j] /= z;
  }
  return make_op("softmax", s, std::move(out), {a}, [rows, cols](Node& n) {
    const auto& p = n.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = n.value.data() + r * cols;
      const double* g = n.grad.data() + r * cols;
      double gy = 0.0;
      for (int64_t j = 0; j < cols; ++j) gy += g[j] * y[j];
      for (int64_t j = 0; j < cols; ++j)
        p->grad[r * cols + j] += y[j] * (g[j] - gy);
    }
  });
}

Tensor concat(int axis, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::runtime_error("concat: empty part list");
  const auto& s0 = parts[0].shape();
  if (axis == 0 && s0.size() <= 2) {
    // Stack rows (or append vector segments).
    int64_t total_rows = 0;
    for (const auto& p : parts) {
      const auto& s = p.shape();
      if (s.size() != s0.size() || (s.size() == 2 && s[1] != s0[1]))
        throw std::runtime_error("concat: incompatible part shapes " +
                                 shape_str(s0) + " vs " + shape_str(s));
      total_rows += s[0];
    }
    const int64_t width = s0.size() == 2 ? s0[1] : 1;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total_rows * width));
    for (const auto& p : parts)
      out.insert(out.end(), p.values().begin(), p.values().end());
    Shape shape = s0.size() == 2 ? Shape{total_rows, s0[1]} : Shape{total_rows};
    return make_op("concat", std::move(shape), std::move(out), parts,
                   [](Node& n) {
                     std::size_t off = 0;
                     for (auto& p : n.parents) {
                       const std::size_t len = p->value.size();
                       if (p->requires_grad) {
                         p->ensure_grad();
                         for (std::size_t i = 0; i < len; ++i)
                           p->grad[i] += n.grad[off + i];
                       }
                       off += len;
                     }
                   });
  }
  if (axis == 1 && s0.size() == 2) {
    const int64_t rows = s0[0];
    int64_t total_cols = 0;
    for (const auto& p : parts) {
      const auto& s = p.shape();
      if (s.size() != 2 || s[0] != rows)
        throw std::runtime_error("concat: incompatible part shapes " +
                                 shape_str(s0) + " vs " + shape_str(s));
      total_cols += s[1];
    }
    std::vector<double> out(static_cast<std::size_t>(rows * total_cols));
    int64_t coff = 0;
    std::vector<int64_t> widths;
    for (const auto& p : parts) {
      const int64_t w = p.shape()[1];
      widths.push_back(w);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < w; ++j)
          out[r * total_cols + coff + j] = p.values()[r * w + j];
      coff += w;
    }
    return make_op("concat", {rows, total_cols}, std::move(out), parts,
                   [rows, total_cols, widths](Node& n) {
                     int64_t off = 0;
                     for (std::size_t pi = 0; pi < n.parents.size(); ++pi) {
                       auto& p = n.parents[pi];
                       const int64_t w = widths[pi];
                       if (p->requires_grad) {
                         p->ensure_grad();
                         for (int64_t r = 0; r < rows; ++r)
                           for (int64_t j = 0; j < w; ++j)
                             p->grad[r * w + j] +=
                                 n.grad[r * total_cols + off + j];
                       }
                       off += w;
                     }
                   });
  }
  throw std::runtime_error("concat: unsupported axis " + std::to_string(axis) +
                           " for shape " + shape_str(s0));
}

Tensor slice(const Tensor& a, int axis, int64_t start, int64_t stop) {
  const auto& s = a.shape();
  if (s.empty())
    throw std::runtime_error("slice: cannot slice a scalar");
  const int64_t dim = s[static_cast<std::size_t>(axis)];
  if (axis < 0 || axis >= static_cast<int>(s.size()) || start < 0 ||
      stop > dim || start >= stop)
    throw std::runtime_error("slice: invalid range [" + std::to_string(start) +
                             "," + std::to_string(stop) + ") on axis " +
                             std::to_string(axis) + " of " + shape_str(s));
  const auto& av = a.values();
  if (s.size() == 1 || (s.size() == 2 && axis == 0)) {
    const int64_t width = s.size() == 2 ? s[1] : 1;
    std::vector<double> out(av.begin() + start * width,
                            av.begin() + stop * width);
    Shape shape = s.size() == 2 ? Shape{stop - start, s[1]} : Shape{stop - start};
    return make_op("slice", std::move(shape), std::move(out), {a},
                   [start, width](Node& n) {
                     const auto& p = n.parents[0];
                     if (!p->requires_grad) return;
                     p->ensure_grad();
                     for (std::size_t i = 0; i < n.grad.size(); ++i)
                       p->grad[static_cast<std::size_t>(start * width) + i] +=
                           n.grad[i];
                   });
  }
  // axis == 1 on a matrix
  const int64_t rows = s[0], cols = s[1], w = stop - start;
  std::vector<double> out(static_cast<std::size_t>(rows * w));
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t j = 0; j < w; ++j)
      out[r * w + j] = av[r * cols + start + j];
  return make_op("slice", {rows, w}, std::move(out), {a},
                 [rows, cols, w, start](Node& n) {
                   const auto& p = n.parents[0];
                   if (!p->requires_grad) return;
                   p->ensure_grad();
                   for (int64_t r = 0; r < rows; ++r)
                     for (int64_t j = 0; j < w; ++j)
                       p->grad[r * cols + start + j] += n.grad[r * w + j];
                 });
}

Tensor transpose(const Tensor& a) {
  const auto& s = a.shape();
  if (s.size() != 2)
    throw std::runtime_error("transpose: expects a matrix, got " +
                             shape_str(s));
  const int64_t r = s[0], c = s[1];
  std::vector<double> out(static_cast<std::size_t>(r * c));
  const auto& av = a.values();
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return make_op("transpose", {c, r}, std::move(out), {a}, [r, c](Node& n) {
    const auto& p = n.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < c; ++j) p->grad[i * c + j] += n.grad[j * r + i];
  });
}

Tensor broadcast_to(const Tensor& a, Shape shape) {
  const auto& s = a.shape();
  if (s == shape) return a;
  const int64_t out_n = numel(shape);
  if (s.empty()) {
    std::vector<double> out(static_cast<std::size_t>(out_n), a.values()[0]);
    return make_op("broadcast", std::move(shape), std::move(out), {a},
                   [](Node& n) {
                     const auto& p = n.parents[0];
                     if (!p->requires_grad) return;
                     p->ensure_grad();
                     double acc = 0.0;
                     for (double g : n.grad) acc += g;
                     p->grad[0] += acc;
                   });
  }
  if (s.size() == 1 && shape.size() == 2 && shape[1] == s[0]) {
    const int64_t rows = shape[0], cols = shape[1];
    std::vector<double> out(static_cast<std::size_t>(rows * cols));
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t j = 0; j < cols; ++j) out[r * cols + j] = a.values()[j];
    return make_op("broadcast", std::move(shape), std::move(out), {a},
                   [rows, cols](Node& n) {
                     const auto& p = n.parents[0];
                     if (!p->requires_grad) return;
                     p->ensure_grad();
                     for (int64_t r = 0; r < rows; ++r)
                       for (int64_t j = 0; j < cols; ++j)
                         p->grad[j] += n.grad[r * cols + j];
                   });
  }
  throw std::runtime_error("broadcast: cannot broadcast " + shape_str(s) +
                           " to " + shape_str(shape));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size())
    throw std::runtime_error("reshape: element count mismatch " +
                             shape_str(a.shape()) + " to " + shape_str(shape));
  return make_op("reshape", std::move(shape), a.values(), {a}, [](Node& n) {
    const auto& p = n.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad[i] += n.grad[i];
  });
}

Tensor row_max(const Tensor& a) {
  const auto& s = a.shape();
  int64_t rows = 1, cols = 0;
  Shape out_shape;
  if (s.size() == 1) {
    cols = s[0];
    out_shape = {};
  } else if (s.size() == 2) {
    rows = s[0];
    cols = s[1];
    out_shape = {rows};
  } else {
    throw std::runtime_error("row_max: expects vector or matrix, got " +
                             shape_str(s));
  }
  if (cols == 0) throw std::runtime_error("row_max: empty rows");
  const auto& av = a.values();
  std::vector<double> out(static_cast<std::size_t>(rows));
  std::vector<int64_t> argmax(static_cast<std::size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    int64_t best = 0;
    for (int64_t j = 1; j < cols; ++j)
      if (av[r * cols + j] > av[r * cols + best]) best = j;
    argmax[r] = best;
    out[r] = av[r * cols + best];
  }
  return make_op("row_max", std::move(out_shape), std::move(out), {a},
                 [rows, cols, argmax](Node& n) {
                   const auto& p = n.parents[0];
                   if (!p->requires_grad) return;
                   p->ensure_grad();
                   for (int64_t r = 0; r < rows; ++r)
                     p->grad[r * cols + argmax[r]] += n.grad[r];
                 });
}

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& point, double h) {
  Tensor x = Tensor::param(point.shape(), point.values());
  Tensor loss = f(x);
  if (loss.size() != 1)
    throw std::runtime_error("grad_check: function must be scalar-valued");
  backward(loss);
  std::vector<double> analytic = x.has_grad()
                                     ? x.grad()
                                     : std::vector<double>(point.values().size(),
                                                           0.0);

  double worst = 0.0;
  std::vector<double> vals = point.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double orig = vals[i];
    vals[i] = orig + h;
    const double up = f(Tensor::constant(point.shape(), vals)).item();
    vals[i] = orig - h;
    const double dn = f(Tensor::constant(point.shape(), vals)).item();
    vals[i] = orig;
    const double numeric = (up - dn) / (2.0 * h);
    const double denom =
        std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric)});
    worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace detsep::ad
