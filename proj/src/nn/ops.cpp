#include "tilebench/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Core>

#include "tilebench/core/errors.hpp"

namespace tilebench::nn::ops {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

using Index = std::int64_t;

[[noreturn]] void mismatch(const std::string& op, const Shape& a, const Shape& b) {
  throw ShapeMismatch(op + ": " + shape_string(a) + " vs " + shape_string(b));
}

template <typename T>
bool wants_grad(const Tensor<T>& t) {
  return t.defined() && t.requires_grad();
}

// ---------------------------------------------------------------- broadcasting

struct Broadcast {
  Shape out;
  std::vector<Index> stride_a;  // per output axis, 0 where broadcast
  std::vector<Index> stride_b;
};

std::vector<Index> contiguous_strides(const Shape& shape) {
  std::vector<Index> s(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * shape[i + 1];
  return s;
}

Broadcast plan_broadcast(const std::string& op, const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Broadcast plan;
  plan.out.assign(r, 1);
  plan.stride_a.assign(r, 0);
  plan.stride_b.assign(r, 0);
  const auto sa = contiguous_strides(a);
  const auto sb = contiguous_strides(b);
  for (std::size_t i = 0; i < r; ++i) {
    const std::int64_t ia = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(r - a.size());
    const std::int64_t ib = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(r - b.size());
    const Index da = ia >= 0 ? a[ia] : 1;
    const Index db = ib >= 0 ? b[ib] : 1;
    if (da != db && da != 1 && db != 1) mismatch(op, a, b);
    plan.out[i] = std::max(da, db);
    if (ia >= 0 && da != 1) plan.stride_a[i] = sa[ia];
    if (ib >= 0 && db != 1) plan.stride_b[i] = sb[ib];
  }
  return plan;
}

// Calls fn(out_offset, a_offset, b_offset) over the broadcast output in row-major order.
template <typename Fn>
void for_each_broadcast(const Broadcast& plan, Fn&& fn) {
  const std::size_t r = plan.out.size();
  if (r == 0) {
    fn(0, 0, 0);
    return;
  }
  const Index inner = plan.out[r - 1];
  const Index ia = plan.stride_a[r - 1];
  const Index ib = plan.stride_b[r - 1];
  const Index total = numel(plan.out);
  if (total == 0) return;
  std::vector<Index> counter(r - 1, 0);
  Index oa = 0;
  Index ob = 0;
  for (Index o = 0; o < total; o += inner) {
    for (Index k = 0; k < inner; ++k) fn(o + k, oa + k * ia, ob + k * ib);
    for (int d = static_cast<int>(r) - 2; d >= 0; --d) {
      oa += plan.stride_a[d];
      ob += plan.stride_b[d];
      if (++counter[d] < plan.out[d]) break;
      oa -= plan.stride_a[d] * plan.out[d];
      ob -= plan.stride_b[d] * plan.out[d];
      counter[d] = 0;
    }
  }
}

enum class BinaryKind { Add, Sub, Mul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, BinaryKind kind, const char* name) {
  const auto& av = a.values();
  const auto& bv = b.values();
  if (a.shape() == b.shape()) {
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = kind == BinaryKind::Add ? av[i] + bv[i] : kind == BinaryKind::Sub ? av[i] - bv[i] : av[i] * bv[i];
    }
    return make_result<T>(a.shape(), std::move(out), {a, b}, [a, b, kind](Node<T>& self) {
      const auto& g = self.grad;
      if (wants_grad(a)) {
        auto& ga = a.node()->ensure_grad();
        const auto& bv = b.values();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += kind == BinaryKind::Mul ? g[i] * bv[i] : g[i];
      }
      if (wants_grad(b)) {
        auto& gb = b.node()->ensure_grad();
        const auto& av = a.values();
        for (std::size_t i = 0; i < g.size(); ++i) {
          gb[i] += kind == BinaryKind::Mul ? g[i] * av[i] : kind == BinaryKind::Sub ? -g[i] : g[i];
        }
      }
    });
  }
  auto plan = plan_broadcast(name, a.shape(), b.shape());
  std::vector<T> out(static_cast<std::size_t>(numel(plan.out)));
  for_each_broadcast(plan, [&](Index o, Index ia, Index ib) {
    out[o] = kind == BinaryKind::Add ? av[ia] + bv[ib] : kind == BinaryKind::Sub ? av[ia] - bv[ib] : av[ia] * bv[ib];
  });
  Shape out_shape = plan.out;
  return make_result<T>(std::move(out_shape), std::move(out), {a, b}, [a, b, kind, plan](Node<T>& self) {
    const auto& g = self.grad;
    const auto& av = a.values();
    const auto& bv = b.values();
    T* ga = wants_grad(a) ? a.node()->ensure_grad().data() : nullptr;
    T* gb = wants_grad(b) ? b.node()->ensure_grad().data() : nullptr;
    for_each_broadcast(plan, [&](Index o, Index ia, Index ib) {
      if (ga) ga[ia] += kind == BinaryKind::Mul ? g[o] * bv[ib] : g[o];
      if (gb) gb[ib] += kind == BinaryKind::Mul ? g[o] * av[ia] : kind == BinaryKind::Sub ? -g[o] : g[o];
    });
  });
}

// y = f(x); dy/dx = df(x, y).
template <typename T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& x, F f, DF df) {
  const auto& xv = x.values();
  std::vector<T> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return make_result<T>(x.shape(), std::move(out), {x}, [x, df](Node<T>& self) {
    auto& gx = x.node()->ensure_grad();
    const auto& xv = x.values();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * df(xv[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::Add, "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::Sub, "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::Mul, "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary(a, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> relu6(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return std::clamp(v, T(0), T(6)); },
      [](T v, T) { return v > T(0) && v < T(6) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  constexpr T inv_sqrt2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
  return unary(
      x, [](T v) { return T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2)); },
      [](T v, T) { return T(0.5) * (T(1) + std::erf(v * inv_sqrt2)) + v * inv_sqrt2pi * std::exp(-T(0.5) * v * v); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> silu(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return v / (T(1) + std::exp(-v)); },
      [](T v, T) {
        const T s = T(1) / (T(1) + std::exp(-v));
        return s * (T(1) + v * (T(1) - s));
      });
}

// ---------------------------------------------------------------- matmul

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b) {
  if (a.rank() < 2 || b.rank() < 2) mismatch("matmul", a.shape(), b.shape());
  const Index m = a.dim(-2);
  const Index k = a.dim(-1);
  const Index kb = transpose_b ? b.dim(-1) : b.dim(-2);
  const Index n = transpose_b ? b.dim(-2) : b.dim(-1);
  if (k != kb) mismatch("matmul", a.shape(), b.shape());

  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(n);

  if (b.rank() == 2) {
    // Shared weight: fold the batch into rows.
    const Index rows = static_cast<Index>(a.size()) / k;
    std::vector<T> out(static_cast<std::size_t>(rows * n));
    CMapRM<T> A(a.values().data(), rows, k);
    MapRM<T> C(out.data(), rows, n);
    if (transpose_b) {
      C.noalias() = A * CMapRM<T>(b.values().data(), n, k).transpose();
    } else {
      C.noalias() = A * CMapRM<T>(b.values().data(), k, n);
    }
    return make_result<T>(std::move(out_shape), std::move(out), {a, b}, [a, b, rows, k, n, transpose_b](Node<T>& self) {
      CMapRM<T> G(self.grad.data(), rows, n);
      CMapRM<T> A(a.values().data(), rows, k);
      if (wants_grad(a)) {
        MapRM<T> GA(a.node()->ensure_grad().data(), rows, k);
        if (transpose_b) {
          GA.noalias() += G * CMapRM<T>(b.values().data(), n, k);
        } else {
          GA.noalias() += G * CMapRM<T>(b.values().data(), k, n).transpose();
        }
      }
      if (wants_grad(b)) {
        if (transpose_b) {
          MapRM<T> GB(b.node()->ensure_grad().data(), n, k);
          GB.noalias() += G.transpose() * A;
        } else {
          MapRM<T> GB(b.node()->ensure_grad().data(), k, n);
          GB.noalias() += A.transpose() * G;
        }
      }
    });
  }

  if (a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin(), b.shape().end() - 2)) {
    mismatch("matmul", a.shape(), b.shape());
  }
  const Index batch = static_cast<Index>(a.size()) / (m * k);
  std::vector<T> out(static_cast<std::size_t>(batch * m * n));
  for (Index i = 0; i < batch; ++i) {
    CMapRM<T> A(a.values().data() + i * m * k, m, k);
    MapRM<T> C(out.data() + i * m * n, m, n);
    if (transpose_b) {
      C.noalias() = A * CMapRM<T>(b.values().data() + i * n * k, n, k).transpose();
    } else {
      C.noalias() = A * CMapRM<T>(b.values().data() + i * k * n, k, n);
    }
  }
  return make_result<T>(std::move(out_shape), std::move(out), {a, b},
                        [a, b, batch, m, k, n, transpose_b](Node<T>& self) {
                          T* ga = wants_grad(a) ? a.node()->ensure_grad().data() : nullptr;
                          T* gb = wants_grad(b) ? b.node()->ensure_grad().data() : nullptr;
                          for (Index i = 0; i < batch; ++i) {
                            CMapRM<T> G(self.grad.data() + i * m * n, m, n);
                            CMapRM<T> A(a.values().data() + i * m * k, m, k);
                            if (transpose_b) {
                              CMapRM<T> B(b.values().data() + i * n * k, n, k);
                              if (ga) MapRM<T>(ga + i * m * k, m, k).noalias() += G * B;
                              if (gb) MapRM<T>(gb + i * n * k, n, k).noalias() += G.transpose() * A;
                            } else {
                              CMapRM<T> B(b.values().data() + i * k * n, k, n);
                              if (ga) MapRM<T>(ga + i * m * k, m, k).noalias() += G * B.transpose();
                              if (gb) MapRM<T>(gb + i * k * n, k, n).noalias() += A.transpose() * G;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
  Tensor<T> y = matmul(x, w, true);
  return bias.defined() ? add(y, bias) : y;
}

// ---------------------------------------------------------------- convolution

namespace {

struct ConvGeometry {
  Index n, c, h, w, o, kh, kw, ho, wo, stride, pad, groups, cg, og;
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  // col: (cg * kh * kw, ho * wo)
  const Index plane = g.ho * g.wo;
  for (Index ci = 0; ci < g.cg; ++ci) {
    for (Index ky = 0; ky < g.kh; ++ky) {
      for (Index kx = 0; kx < g.kw; ++kx) {
        T* dst = col + ((ci * g.kh + ky) * g.kw + kx) * plane;
        const T* src = x + ci * g.h * g.w;
        for (Index oy = 0; oy < g.ho; ++oy) {
          const Index iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst + oy * g.wo, dst + (oy + 1) * g.wo, T(0));
            continue;
          }
          for (Index ox = 0; ox < g.wo; ++ox) {
            const Index ix = ox * g.stride - g.pad + kx;
            dst[oy * g.wo + ox] = (ix >= 0 && ix < g.w) ? src[iy * g.w + ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* x) {
  const Index plane = g.ho * g.wo;
  for (Index ci = 0; ci < g.cg; ++ci) {
    for (Index ky = 0; ky < g.kh; ++ky) {
      for (Index kx = 0; kx < g.kw; ++kx) {
        const T* src = col + ((ci * g.kh + ky) * g.kw + kx) * plane;
        T* dst = x + ci * g.h * g.w;
        for (Index oy = 0; oy < g.ho; ++oy) {
          const Index iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (Index ox = 0; ox < g.wo; ++ox) {
            const Index ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[iy * g.w + ix] += src[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) { return g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad == 0; }
bool is_depthwise(const ConvGeometry& g) { return g.groups == g.c && g.cg == 1 && g.og == 1; }

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, Conv2dOptions opt) {
  if (x.rank() != 4 || w.rank() != 4) mismatch("conv2d", x.shape(), w.shape());
  ConvGeometry g{};
  g.n = x.dim(0);
  g.c = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.o = w.dim(0);
  g.kh = w.dim(2);
  g.kw = w.dim(3);
  g.stride = opt.stride;
  g.pad = opt.padding;
  g.groups = opt.groups;
  if (g.groups <= 0 || g.c % g.groups != 0 || g.o % g.groups != 0 || w.dim(1) != g.c / g.groups) {
    mismatch("conv2d", x.shape(), w.shape());
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.o)) mismatch("conv2d bias", bias.shape(), w.shape());
  g.cg = g.c / g.groups;
  g.og = g.o / g.groups;
  g.ho = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.wo = (g.w + 2 * g.pad - g.kw) / g.stride + 1;
  if (g.ho <= 0 || g.wo <= 0) mismatch("conv2d (kernel larger than input)", x.shape(), w.shape());

  const Index plane_in = g.h * g.w;
  const Index plane_out = g.ho * g.wo;
  const Index kk = g.cg * g.kh * g.kw;
  std::vector<T> out(static_cast<std::size_t>(g.n * g.o * plane_out), T(0));
  const T* xv = x.values().data();
  const T* wv = w.values().data();

  if (is_depthwise(g)) {
    for (Index n = 0; n < g.n; ++n) {
      for (Index c = 0; c < g.c; ++c) {
        const T* src = xv + (n * g.c + c) * plane_in;
        T* dst = out.data() + (n * g.o + c) * plane_out;
        const T* ker = wv + c * g.kh * g.kw;
        for (Index oy = 0; oy < g.ho; ++oy) {
          for (Index ox = 0; ox < g.wo; ++ox) {
            T acc = 0;
            for (Index ky = 0; ky < g.kh; ++ky) {
              const Index iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= g.h) continue;
              for (Index kx = 0; kx < g.kw; ++kx) {
                const Index ix = ox * g.stride - g.pad + kx;
                if (ix >= 0 && ix < g.w) acc += ker[ky * g.kw + kx] * src[iy * g.w + ix];
              }
            }
            dst[oy * g.wo + ox] = acc;
          }
        }
      }
    }
  } else {
    std::vector<T> col(is_pointwise(g) ? 0 : static_cast<std::size_t>(kk * plane_out));
    for (Index n = 0; n < g.n; ++n) {
      for (Index grp = 0; grp < g.groups; ++grp) {
        const T* src = xv + (n * g.c + grp * g.cg) * plane_in;
        const T* cols = src;
        if (!is_pointwise(g)) {
          im2col(src, g, col.data());
          cols = col.data();
        }
        MapRM<T> Y(out.data() + (n * g.o + grp * g.og) * plane_out, g.og, plane_out);
        Y.noalias() = CMapRM<T>(wv + grp * g.og * kk, g.og, kk) * CMapRM<T>(cols, kk, plane_out);
      }
    }
  }
  if (bias.defined()) {
    const T* bv = bias.values().data();
    for (Index n = 0; n < g.n; ++n) {
      for (Index o = 0; o < g.o; ++o) {
        T* dst = out.data() + (n * g.o + o) * plane_out;
        for (Index i = 0; i < plane_out; ++i) dst[i] += bv[o];
      }
    }
  }

  Shape out_shape{g.n, g.o, g.ho, g.wo};
  return make_result<T>(std::move(out_shape), std::move(out), {x, w, bias}, [x, w, bias, g](Node<T>& self) {
    const Index plane_in = g.h * g.w;
    const Index plane_out = g.ho * g.wo;
    const Index kk = g.cg * g.kh * g.kw;
    const T* gy = self.grad.data();
    const T* xv = x.values().data();
    const T* wv = w.values().data();
    T* gx = wants_grad(x) ? x.node()->ensure_grad().data() : nullptr;
    T* gw = wants_grad(w) ? w.node()->ensure_grad().data() : nullptr;
    if (wants_grad(bias)) {
      auto& gb = bias.node()->ensure_grad();
      for (Index n = 0; n < g.n; ++n) {
        for (Index o = 0; o < g.o; ++o) {
          const T* src = gy + (n * g.o + o) * plane_out;
          T acc = 0;
          for (Index i = 0; i < plane_out; ++i) acc += src[i];
          gb[o] += acc;
        }
      }
    }
    if (is_depthwise(g)) {
      for (Index n = 0; n < g.n; ++n) {
        for (Index c = 0; c < g.c; ++c) {
          const T* src = xv + (n * g.c + c) * plane_in;
          const T* dy = gy + (n * g.o + c) * plane_out;
          const T* ker = wv + c * g.kh * g.kw;
          T* dsrc = gx ? gx + (n * g.c + c) * plane_in : nullptr;
          T* dker = gw ? gw + c * g.kh * g.kw : nullptr;
          for (Index oy = 0; oy < g.ho; ++oy) {
            for (Index ox = 0; ox < g.wo; ++ox) {
              const T d = dy[oy * g.wo + ox];
              for (Index ky = 0; ky < g.kh; ++ky) {
                const Index iy = oy * g.stride - g.pad + ky;
                if (iy < 0 || iy >= g.h) continue;
                for (Index kx = 0; kx < g.kw; ++kx) {
                  const Index ix = ox * g.stride - g.pad + kx;
                  if (ix < 0 || ix >= g.w) continue;
                  if (dker) dker[ky * g.kw + kx] += d * src[iy * g.w + ix];
                  if (dsrc) dsrc[iy * g.w + ix] += d * ker[ky * g.kw + kx];
                }
              }
            }
          }
        }
      }
      return;
    }
    const bool pointwise = is_pointwise(g);
    std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(kk * plane_out));
    std::vector<T> dcol(pointwise ? 0 : static_cast<std::size_t>(kk * plane_out));
    for (Index n = 0; n < g.n; ++n) {
      for (Index grp = 0; grp < g.groups; ++grp) {
        const T* src = xv + (n * g.c + grp * g.cg) * plane_in;
        CMapRM<T> G(gy + (n * g.o + grp * g.og) * plane_out, g.og, plane_out);
        if (gw) {
          const T* cols = src;
          if (!pointwise) {
            im2col(src, g, col.data());
            cols = col.data();
          }
          MapRM<T>(gw + grp * g.og * kk, g.og, kk).noalias() += G * CMapRM<T>(cols, kk, plane_out).transpose();
        }
        if (gx) {
          T* dsrc = gx + (n * g.c + grp * g.cg) * plane_in;
          CMapRM<T> W(wv + grp * g.og * kk, g.og, kk);
          if (pointwise) {
            MapRM<T>(dsrc, kk, plane_out).noalias() += W.transpose() * G;
          } else {
            MapRM<T>(dcol.data(), kk, plane_out).noalias() = W.transpose() * G;
            col2im(dcol.data(), g, dsrc);
          }
        }
      }
    }
  });
}

// ---------------------------------------------------------------- normalization

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T>& running_mean,
                     Tensor<T>& running_var, bool training, T momentum, T eps) {
  if (x.rank() < 2) mismatch("batch_norm", x.shape(), gamma.shape());
  const Index n = x.dim(0);
  const Index c = x.dim(1);
  if (gamma.size() != static_cast<std::size_t>(c) || beta.size() != static_cast<std::size_t>(c)) {
    mismatch("batch_norm", x.shape(), gamma.shape());
  }
  const Index inner = static_cast<Index>(x.size()) / (n * c);
  const Index count = n * inner;
  const T* xv = x.values().data();

  std::vector<T> mean(static_cast<std::size_t>(c));
  std::vector<T> invstd(static_cast<std::size_t>(c));
  if (training) {
    auto& rm = running_mean.values();
    auto& rv = running_var.values();
    for (Index ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (Index b = 0; b < n; ++b) {
        const T* p = xv + (b * c + ch) * inner;
        for (Index i = 0; i < inner; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (Index b = 0; b < n; ++b) {
        const T* p = xv + (b * c + ch) * inner;
        for (Index i = 0; i < inner; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / static_cast<double>(count);
      mean[ch] = static_cast<T>(mu);
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(var + eps));
      const double unbiased = count > 1 ? ss / static_cast<double>(count - 1) : var;
      rm[ch] = static_cast<T>((1.0 - momentum) * rm[ch] + momentum * mu);
      rv[ch] = static_cast<T>((1.0 - momentum) * rv[ch] + momentum * unbiased);
    }
  } else {
    for (Index ch = 0; ch < c; ++ch) {
      mean[ch] = running_mean.values()[ch];
      invstd[ch] = T(1) / std::sqrt(running_var.values()[ch] + eps);
    }
  }
  const T* gv = gamma.values().data();
  const T* bv = beta.values().data();
  std::vector<T> out(x.size());
  for (Index b = 0; b < n; ++b) {
    for (Index ch = 0; ch < c; ++ch) {
      const Index off = (b * c + ch) * inner;
      const T a = gv[ch] * invstd[ch];
      const T s = bv[ch] - mean[ch] * a;
      for (Index i = 0; i < inner; ++i) out[off + i] = xv[off + i] * a + s;
    }
  }
  return make_result<T>(x.shape(), std::move(out), {x, gamma, beta},
                        [x, gamma, beta, mean, invstd, training, n, c, inner, count](Node<T>& self) {
                          const T* gy = self.grad.data();
                          const T* xv = x.values().data();
                          const T* gv = gamma.values().data();
                          T* gx = wants_grad(x) ? x.node()->ensure_grad().data() : nullptr;
                          T* gg = wants_grad(gamma) ? gamma.node()->ensure_grad().data() : nullptr;
                          T* gbeta = wants_grad(beta) ? beta.node()->ensure_grad().data() : nullptr;
                          for (Index ch = 0; ch < c; ++ch) {
                            double sum_dy = 0.0;
                            double sum_dy_xhat = 0.0;
                            for (Index b = 0; b < n; ++b) {
                              const Index off = (b * c + ch) * inner;
                              for (Index i = 0; i < inner; ++i) {
                                const double xhat = (xv[off + i] - mean[ch]) * invstd[ch];
                                sum_dy += gy[off + i];
                                sum_dy_xhat += gy[off + i] * xhat;
                              }
                            }
                            if (gg) gg[ch] += static_cast<T>(sum_dy_xhat);
                            if (gbeta) gbeta[ch] += static_cast<T>(sum_dy);
                            if (!gx) continue;
                            const double k = gv[ch] * invstd[ch];
                            for (Index b = 0; b < n; ++b) {
                              const Index off = (b * c + ch) * inner;
                              for (Index i = 0; i < inner; ++i) {
                                if (training) {
                                  const double xhat = (xv[off + i] - mean[ch]) * invstd[ch];
                                  gx[off + i] += static_cast<T>(
                                      k * (gy[off + i] - sum_dy / count - xhat * sum_dy_xhat / count));
                                } else {
                                  gx[off + i] += static_cast<T>(k * gy[off + i]);
                                }
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const Index d = x.dim(-1);
  if (gamma.size() != static_cast<std::size_t>(d) || beta.size() != static_cast<std::size_t>(d)) {
    mismatch("layer_norm", x.shape(), gamma.shape());
  }
  const Index rows = static_cast<Index>(x.size()) / d;
  const T* xv = x.values().data();
  const T* gv = gamma.values().data();
  const T* bv = beta.values().data();
  std::vector<T> out(x.size());
  std::vector<T> xhat(x.size());
  std::vector<T> invstd(static_cast<std::size_t>(rows));
  for (Index r = 0; r < rows; ++r) {
    const T* p = xv + r * d;
    double s = 0.0;
    for (Index i = 0; i < d; ++i) s += p[i];
    const double mu = s / d;
    double ss = 0.0;
    for (Index i = 0; i < d; ++i) ss += (p[i] - mu) * (p[i] - mu);
    const double is = 1.0 / std::sqrt(ss / d + eps);
    invstd[r] = static_cast<T>(is);
    for (Index i = 0; i < d; ++i) {
      xhat[r * d + i] = static_cast<T>((p[i] - mu) * is);
      out[r * d + i] = xhat[r * d + i] * gv[i] + bv[i];
    }
  }
  return make_result<T>(x.shape(), std::move(out), {x, gamma, beta},
                        [x, gamma, beta, xhat = std::move(xhat), invstd = std::move(invstd), rows, d](Node<T>& self) {
                          const T* gy = self.grad.data();
                          const T* gv = gamma.values().data();
                          T* gx = wants_grad(x) ? x.node()->ensure_grad().data() : nullptr;
                          T* gg = wants_grad(gamma) ? gamma.node()->ensure_grad().data() : nullptr;
                          T* gb = wants_grad(beta) ? beta.node()->ensure_grad().data() : nullptr;
                          for (Index r = 0; r < rows; ++r) {
                            const T* dy = gy + r * d;
                            const T* xh = xhat.data() + r * d;
                            double sum_g = 0.0;
                            double sum_g_xhat = 0.0;
                            for (Index i = 0; i < d; ++i) {
                              const double gi = dy[i] * gv[i];
                              sum_g += gi;
                              sum_g_xhat += gi * xh[i];
                              if (gg) gg[i] += dy[i] * xh[i];
                              if (gb) gb[i] += dy[i];
                            }
                            if (!gx) continue;
                            for (Index i = 0; i < d; ++i) {
                              const double gi = dy[i] * gv[i];
                              gx[r * d + i] +=
                                  static_cast<T>(invstd[r] * (gi - sum_g / d - xh[i] * sum_g_xhat / d));
                            }
                          }
                        });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  const Index d = x.dim(-1);
  const Index rows = static_cast<Index>(x.size()) / d;
  const T* xv = x.values().data();
  std::vector<T> out(x.size());
  for (Index r = 0; r < rows; ++r) {
    const T* p = xv + r * d;
    T* q = out.data() + r * d;
    const T top = *std::max_element(p, p + d);
    T s = 0;
    for (Index i = 0; i < d; ++i) s += q[i] = std::exp(p[i] - top);
    for (Index i = 0; i < d; ++i) q[i] /= s;
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [x, rows, d](Node<T>& self) {
    T* gx = x.node()->ensure_grad().data();
    for (Index r = 0; r < rows; ++r) {
      const T* y = self.value.data() + r * d;
      const T* gy = self.grad.data() + r * d;
      T dot = 0;
      for (Index i = 0; i < d; ++i) dot += gy[i] * y[i];
      for (Index i = 0; i < d; ++i) gx[r * d + i] += y[i] * (gy[i] - dot);
    }
  });
}

// ---------------------------------------------------------------- pooling

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, int kernel, int stride, int padding) {
  if (x.rank() != 4) mismatch("max_pool2d", x.shape(), {});
  const Index n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const Index ho = (h + 2 * padding - kernel) / stride + 1;
  const Index wo = (w + 2 * padding - kernel) / stride + 1;
  std::vector<T> out(static_cast<std::size_t>(n * c * ho * wo));
  std::vector<Index> arg(out.size());
  const T* xv = x.values().data();
  for (Index p = 0; p < n * c; ++p) {
    for (Index oy = 0; oy < ho; ++oy) {
      for (Index ox = 0; ox < wo; ++ox) {
        T best = -std::numeric_limits<T>::infinity();
        Index where = -1;
        for (Index ky = 0; ky < kernel; ++ky) {
          const Index iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= h) continue;
          for (Index kx = 0; kx < kernel; ++kx) {
            const Index ix = ox * stride - padding + kx;
            if (ix < 0 || ix >= w) continue;
            const Index src = p * h * w + iy * w + ix;
            if (where < 0 || xv[src] > best) {
              best = xv[src];
              where = src;
            }
          }
        }
        const Index o = (p * ho + oy) * wo + ox;
        out[o] = best;
        arg[o] = where;
      }
    }
  }
  return make_result<T>({n, c, ho, wo}, std::move(out), {x}, [x, arg = std::move(arg)](Node<T>& self) {
    auto& gx = x.node()->ensure_grad();
    for (std::size_t o = 0; o < arg.size(); ++o) gx[arg[o]] += self.grad[o];
  });
}

template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int kernel, int stride) {
  if (x.rank() != 4) mismatch("avg_pool2d", x.shape(), {});
  const Index n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const Index ho = (h - kernel) / stride + 1;
  const Index wo = (w - kernel) / stride + 1;
  const T inv = T(1) / static_cast<T>(kernel * kernel);
  std::vector<T> out(static_cast<std::size_t>(n * c * ho * wo), T(0));
  const T* xv = x.values().data();
  for (Index p = 0; p < n * c; ++p) {
    for (Index oy = 0; oy < ho; ++oy) {
      for (Index ox = 0; ox < wo; ++ox) {
        T acc = 0;
        for (Index ky = 0; ky < kernel; ++ky) {
          for (Index kx = 0; kx < kernel; ++kx) acc += xv[p * h * w + (oy * stride + ky) * w + ox * stride + kx];
        }
        out[(p * ho + oy) * wo + ox] = acc * inv;
      }
    }
  }
  return make_result<T>({n, c, ho, wo}, std::move(out), {x}, [x, n, c, h, w, ho, wo, kernel, stride, inv](Node<T>& self) {
    auto& gx = x.node()->ensure_grad();
    for (Index p = 0; p < n * c; ++p) {
      for (Index oy = 0; oy < ho; ++oy) {
        for (Index ox = 0; ox < wo; ++ox) {
          const T g = self.grad[(p * ho + oy) * wo + ox] * inv;
          for (Index ky = 0; ky < kernel; ++ky) {
            for (Index kx = 0; kx < kernel; ++kx) gx[p * h * w + (oy * stride + ky) * w + ox * stride + kx] += g;
          }
        }
      }
    }
  });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  if (x.rank() != 4) mismatch("global_avg_pool", x.shape(), {});
  const Index n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  std::vector<T> out(static_cast<std::size_t>(n * c));
  const T* xv = x.values().data();
  for (Index p = 0; p < n * c; ++p) {
    T acc = 0;
    for (Index i = 0; i < plane; ++i) acc += xv[p * plane + i];
    out[p] = acc / static_cast<T>(plane);
  }
  return make_result<T>({n, c}, std::move(out), {x}, [x, n, c, plane](Node<T>& self) {
    auto& gx = x.node()->ensure_grad();
    for (Index p = 0; p < n * c; ++p) {
      const T g = self.grad[p] / static_cast<T>(plane);
      for (Index i = 0; i < plane; ++i) gx[p * plane + i] += g;
    }
  });
}

// ---------------------------------------------------------------- reductions

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.values()) acc += v;
  return make_result<T>({}, {acc}, {x}, [x](Node<T>& self) {
    auto& gx = x.node()->ensure_grad();
    for (auto& g : gx) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
Tensor<T> mean_dim(const Tensor<T>& x, int axis) {
  if (axis < 0) axis += x.rank();
  const Index len = x.dim(axis);
  Index outer = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  const Index inner = static_cast<Index>(x.size()) / (outer * len);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + axis);
  std::vector<T> out(static_cast<std::size_t>(outer * inner), T(0));
  const T* xv = x.values().data();
  for (Index o = 0; o < outer; ++o) {
    for (Index l = 0; l < len; ++l) {
      for (Index i = 0; i < inner; ++i) out[o * inner + i] += xv[(o * len + l) * inner + i];
    }
  }
  for (auto& v : out) v /= static_cast<T>(len);
  return make_result<T>(std::move(out_shape), std::move(out), {x}, [x, outer, len, inner](Node<T>& self) {
    auto& gx = x.node()->ensure_grad();
    for (Index o = 0; o < outer; ++o) {
      for (Index l = 0; l < len; ++l) {
        for (Index i = 0; i < inner; ++i) gx[(o * len + l) * inner + i] += self.grad[o * inner + i] / static_cast<T>(len);
      }
    }
  });
}

// ---------------------------------------------------------------- shape ops

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  Index known = 1;
  int infer = -1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0) mismatch("reshape", x.shape(), shape);
      infer = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0 && known > 0) shape[infer] = static_cast<Index>(x.size()) / known;
  if (numel(shape) != static_cast<Index>(x.size())) mismatch("reshape", x.shape(), shape);
  return make_result<T>(std::move(shape), x.values(), {x}, [x](Node<T>& self) {
    auto& gx = x.node()->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> gather(const Tensor<T>& x, Shape out_shape, std::vector<std::int64_t> index) {
  if (numel(out_shape) != static_cast<Index>(index.size())) mismatch("gather", out_shape, {});
  const auto& xv = x.values();
  std::vector<T> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= static_cast<Index>(xv.size())) mismatch("gather index", x.shape(), out_shape);
    out[i] = xv[index[i]];
  }
  return make_result<T>(std::move(out_shape), std::move(out), {x}, [x, index = std::move(index)](Node<T>& self) {
    auto& gx = x.node()->ensure_grad();
    for (std::size_t i = 0; i < index.size(); ++i) gx[index[i]] += self.grad[i];
  });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& axes) {
  const int r = x.rank();
  if (static_cast<int>(axes.size()) != r) mismatch("permute", x.shape(), {});
  std::vector<bool> used(r, false);
  for (int a : axes) {
    if (a < 0 || a >= r || used[a]) mismatch("permute", x.shape(), {});
    used[a] = true;
  }
  const auto in_strides = contiguous_strides(x.shape());
  Shape out_shape(r);
  std::vector<Index> strides(r);
  for (int i = 0; i < r; ++i) {
    out_shape[i] = x.shape()[axes[i]];
    strides[i] = in_strides[axes[i]];
  }
  std::vector<Index> index(x.size());
  std::vector<Index> counter(r, 0);
  Index src = 0;
  for (std::size_t o = 0; o < index.size(); ++o) {
    index[o] = src;
    for (int d = r - 1; d >= 0; --d) {
      src += strides[d];
      if (++counter[d] < out_shape[d]) break;
      src -= strides[d] * out_shape[d];
      counter[d] = 0;
    }
  }
  return gather(x, std::move(out_shape), std::move(index));
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, std::int64_t start, std::int64_t length) {
  if (axis < 0) axis += x.rank();
  const Index len = x.dim(axis);
  if (start < 0 || length < 0 || start + length > len) mismatch("slice", x.shape(), {start, length});
  Index outer = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  const Index inner = static_cast<Index>(x.size()) / (outer * len);
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  std::vector<T> out(static_cast<std::size_t>(outer * length * inner));
  const T* xv = x.values().data();
  for (Index o = 0; o < outer; ++o) {
    std::copy(xv + (o * len + start) * inner, xv + (o * len + start + length) * inner, out.data() + o * length * inner);
  }
  return make_result<T>(std::move(out_shape), std::move(out), {x}, [x, outer, len, inner, start, length](Node<T>& self) {
    auto& gx = x.node()->ensure_grad();
    for (Index o = 0; o < outer; ++o) {
      const T* src = self.grad.data() + o * length * inner;
      T* dst = gx.data() + (o * len + start) * inner;
      for (Index i = 0; i < length * inner; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw ShapeMismatch("concat of nothing");
  const int r = parts[0].rank();
  if (axis < 0) axis += r;
  Shape out_shape = parts[0].shape();
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.rank() != r) mismatch("concat", parts[0].shape(), p.shape());
    for (int i = 0; i < r; ++i) {
      if (i != axis && p.shape()[i] != parts[0].shape()[i]) mismatch("concat", parts[0].shape(), p.shape());
    }
    out_shape[axis] += p.shape()[axis];
  }
  Index outer = 1;
  for (int i = 0; i < axis; ++i) outer *= out_shape[i];
  Index inner = 1;
  for (int i = axis + 1; i < r; ++i) inner *= out_shape[i];
  const Index total = out_shape[axis];
  std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
  Index offset = 0;
  for (const auto& p : parts) {
    const Index len = p.shape()[axis];
    const T* src = p.values().data();
    for (Index o = 0; o < outer; ++o) {
      std::copy(src + o * len * inner, src + (o + 1) * len * inner, out.data() + (o * total + offset) * inner);
    }
    offset += len;
  }
  return make_result<T>(std::move(out_shape), std::move(out), parts, [parts, axis, outer, inner, total](Node<T>& self) {
    Index offset = 0;
    for (const auto& p : parts) {
      const Index len = p.shape()[axis];
      if (wants_grad(p)) {
        auto& gp = p.node()->ensure_grad();
        for (Index o = 0; o < outer; ++o) {
          const T* src = self.grad.data() + (o * total + offset) * inner;
          T* dst = gp.data() + o * len * inner;
          for (Index i = 0; i < len * inner; ++i) dst[i] += src[i];
        }
      }
      offset += len;
    }
  });
}

// ---------------------------------------------------------------- recurrent

template <typename T>
Tensor<T> lstm(const Tensor<T>& x, const Tensor<T>& w_ih, const Tensor<T>& w_hh, const Tensor<T>& b_ih,
               const Tensor<T>& b_hh, bool reverse) {
  if (x.rank() != 3 || w_ih.rank() != 2 || w_hh.rank() != 2) mismatch("lstm", x.shape(), w_ih.shape());
  const Index s = x.dim(0);
  const Index len = x.dim(1);
  const Index in = x.dim(2);
  const Index hid = w_hh.dim(1);
  if (w_ih.dim(0) != 4 * hid || w_ih.dim(1) != in || w_hh.dim(0) != 4 * hid ||
      b_ih.size() != static_cast<std::size_t>(4 * hid) || b_hh.size() != static_cast<std::size_t>(4 * hid)) {
    mismatch("lstm", x.shape(), w_ih.shape());
  }
  const Index g4 = 4 * hid;
  // Input projection for all steps at once: (S*L, 4H).
  MatRM<T> xw = CMapRM<T>(x.values().data(), s * len, in) * CMapRM<T>(w_ih.values().data(), g4, in).transpose();
  for (Index r = 0; r < s * len; ++r) {
    for (Index k = 0; k < g4; ++k) xw(r, k) += b_ih.values()[k] + b_hh.values()[k];
  }
  // Per step (in processing order): activated gates (S, 4H), cell (S, H), tanh(cell) (S, H).
  std::vector<T> acts(static_cast<std::size_t>(len * s * g4));
  std::vector<T> cells(static_cast<std::size_t>(len * s * hid));
  std::vector<T> tcells(static_cast<std::size_t>(len * s * hid));
  std::vector<T> out(static_cast<std::size_t>(s * len * hid));
  CMapRM<T> whh(w_hh.values().data(), g4, hid);
  MatRM<T> h = MatRM<T>::Zero(s, hid);
  MatRM<T> gates(s, g4);
  for (Index k = 0; k < len; ++k) {
    const Index t = reverse ? len - 1 - k : k;
    gates.noalias() = h * whh.transpose();
    T* a = acts.data() + k * s * g4;
    T* c = cells.data() + k * s * hid;
    T* tc = tcells.data() + k * s * hid;
    const T* cprev = k > 0 ? cells.data() + (k - 1) * s * hid : nullptr;
    for (Index r = 0; r < s; ++r) {
      for (Index j = 0; j < g4; ++j) {
        const T z = gates(r, j) + xw(r * len + t, j);
        a[r * g4 + j] = (j >= 2 * hid && j < 3 * hid) ? std::tanh(z) : T(1) / (T(1) + std::exp(-z));
      }
      for (Index j = 0; j < hid; ++j) {
        const T* ar = a + r * g4;
        const T cp = cprev ? cprev[r * hid + j] : T(0);
        c[r * hid + j] = ar[hid + j] * cp + ar[j] * ar[2 * hid + j];
        tc[r * hid + j] = std::tanh(c[r * hid + j]);
        h(r, j) = ar[3 * hid + j] * tc[r * hid + j];
        out[(r * len + t) * hid + j] = h(r, j);
      }
    }
  }
  return make_result<T>(
      {s, len, hid}, std::move(out), {x, w_ih, w_hh, b_ih, b_hh},
      [=, acts = std::move(acts), cells = std::move(cells), tcells = std::move(tcells)](Node<T>& self) {
        const T* gy = self.grad.data();
        const T* y = self.value.data();
        MatRM<T> dxw(s * len, g4);
        MatRM<T> dh = MatRM<T>::Zero(s, hid);
        MatRM<T> dc = MatRM<T>::Zero(s, hid);
        MatRM<T> dgates(s, g4);
        MatRM<T> hprev(s, hid);
        MatRM<T> dwhh = MatRM<T>::Zero(g4, hid);
        CMapRM<T> whh(w_hh.values().data(), g4, hid);
        for (Index k = len - 1; k >= 0; --k) {
          const Index t = reverse ? len - 1 - k : k;
          const Index tp = reverse ? t + 1 : t - 1;
          const T* a = acts.data() + k * s * g4;
          const T* tc = tcells.data() + k * s * hid;
          const T* cprev = k > 0 ? cells.data() + (k - 1) * s * hid : nullptr;
          for (Index r = 0; r < s; ++r) {
            const T* ar = a + r * g4;
            for (Index j = 0; j < hid; ++j) {
              const T i = ar[j], f = ar[hid + j], g = ar[2 * hid + j], o = ar[3 * hid + j];
              const T dhj = dh(r, j) + gy[(r * len + t) * hid + j];
              const T tcj = tc[r * hid + j];
              const T dcj = dc(r, j) + dhj * o * (T(1) - tcj * tcj);
              const T cp = cprev ? cprev[r * hid + j] : T(0);
              dgates(r, j) = dcj * g * i * (T(1) - i);
              dgates(r, hid + j) = dcj * cp * f * (T(1) - f);
              dgates(r, 2 * hid + j) = dcj * i * (T(1) - g * g);
              dgates(r, 3 * hid + j) = dhj * tcj * o * (T(1) - o);
              dc(r, j) = dcj * f;
              hprev(r, j) = k > 0 ? y[(r * len + tp) * hid + j] : T(0);
            }
            dxw.row(r * len + t) = dgates.row(r);
          }
          dwhh.noalias() += dgates.transpose() * hprev;
          dh.noalias() = dgates * whh;
        }
        if (wants_grad(w_hh)) {
          MapRM<T>(w_hh.node()->ensure_grad().data(), g4, hid) += dwhh;
        }
        if (wants_grad(w_ih)) {
          MapRM<T>(w_ih.node()->ensure_grad().data(), g4, in).noalias() +=
              dxw.transpose() * CMapRM<T>(x.values().data(), s * len, in);
        }
        for (const Tensor<T>* b : {&b_ih, &b_hh}) {
          if (!wants_grad(*b)) continue;
          auto& gb = b->node()->ensure_grad();
          for (Index r = 0; r < s * len; ++r) {
            for (Index j = 0; j < g4; ++j) gb[j] += dxw(r, j);
          }
        }
        if (wants_grad(x)) {
          MapRM<T>(x.node()->ensure_grad().data(), s * len, in).noalias() +=
              dxw * CMapRM<T>(w_ih.values().data(), g4, in);
        }
      });
}

// ---------------------------------------------------------------- loss

template <typename T>
Tensor<T> weighted_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                                 const std::vector<T>& weights) {
  if (logits.rank() != 2 || static_cast<std::size_t>(logits.dim(0)) != labels.size()) {
    mismatch("weighted_cross_entropy", logits.shape(), {static_cast<Index>(labels.size())});
  }
  const Index b = logits.dim(0);
  const Index c = logits.dim(1);
  if (static_cast<Index>(weights.size()) != c) mismatch("weighted_cross_entropy weights", logits.shape(), {});
  const T* lv = logits.values().data();
  std::vector<T> probs(logits.size());
  T loss = 0;
  for (Index i = 0; i < b; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= c) throw ShapeMismatch("label " + std::to_string(y) + " out of range");
    const T* row = lv + i * c;
    const T top = *std::max_element(row, row + c);
    T s = 0;
    for (Index k = 0; k < c; ++k) s += probs[i * c + k] = std::exp(row[k] - top);
    for (Index k = 0; k < c; ++k) probs[i * c + k] /= s;
    const T log_p = row[y] - top - std::log(s);
    loss += -weights[y] * log_p;
  }
  loss /= static_cast<T>(b);
  return make_result<T>({}, {loss}, {logits}, [logits, labels, weights, probs = std::move(probs), b, c](Node<T>& self) {
    auto& g = logits.node()->ensure_grad();
    const T scale = self.grad[0] / static_cast<T>(b);
    for (Index i = 0; i < b; ++i) {
      const T w = weights[labels[i]];
      for (Index k = 0; k < c; ++k) {
        g[i * c + k] += scale * w * (probs[i * c + k] - (k == labels[i] ? T(1) : T(0)));
      }
    }
  });
}

#define TILEBENCH_INSTANTIATE_OPS(T)                                                                          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                 \
  template Tensor<T> scale(const Tensor<T>&, T);                                                              \
  template Tensor<T> relu(const Tensor<T>&);                                                                  \
  template Tensor<T> relu6(const Tensor<T>&);                                                                 \
  template Tensor<T> gelu(const Tensor<T>&);                                                                  \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                               \
  template Tensor<T> tanh(const Tensor<T>&);                                                                  \
  template Tensor<T> silu(const Tensor<T>&);                                                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool);                                        \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Conv2dOptions);             \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&, Tensor<T>&, \
                                bool, T, T);                                                                  \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                     \
  template Tensor<T> softmax(const Tensor<T>&);                                                               \
  template Tensor<T> max_pool2d(const Tensor<T>&, int, int, int);                                             \
  template Tensor<T> avg_pool2d(const Tensor<T>&, int, int);                                                  \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                                       \
  template Tensor<T> sum(const Tensor<T>&);                                                                   \
  template Tensor<T> mean(const Tensor<T>&);                                                                  \
  template Tensor<T> mean_dim(const Tensor<T>&, int);                                                         \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                        \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<int>&);                                      \
  template Tensor<T> slice(const Tensor<T>&, int, std::int64_t, std::int64_t);                                \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, int);                                              \
  template Tensor<T> gather(const Tensor<T>&, Shape, std::vector<std::int64_t>);                              \
  template Tensor<T> lstm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                          bool);                                                                              \
  template Tensor<T> weighted_cross_entropy(const Tensor<T>&, const std::vector<int>&, const std::vector<T>&);

TILEBENCH_INSTANTIATE_OPS(float)
TILEBENCH_INSTANTIATE_OPS(double)

#undef TILEBENCH_INSTANTIATE_OPS

}  // namespace tilebench::nn::ops
