#pragma once

#include <array>
#include <utility>

#include "atg/ops.hpp"
#include "atg/tensor.hpp"

namespace atg {

template <typename T>
struct Conv2dParamsT {
  TensorT<T> weights;  // (kH, kW, C_in, C_out)
  TensorT<T> bias;     // (C_out)
  int stride = 1;
  int padding = 0;

  int kh() const { return weights.dim(0); }
  int kw() const { return weights.dim(1); }
  int in_channels() const { return weights.dim(2); }
  int out_channels() const { return weights.dim(3); }
};

template <typename T>
struct GroupNormParamsT {
  int num_groups = 1;
  TensorT<T> gamma;  // (C)
  TensorT<T> beta;   // (C)
  T epsilon = T(1e-5);
};

// Three stages joined by dense (concatenative) connections:
//   s1 = GN(ReLU(Conv3x3(x)))            -> growth channels
//   s2 = GN(ReLU(Conv3x3([x, s1])))      -> growth channels
//   out = Conv1x1([x, s1, s2])           -> block output channels
// relu_before_norm flips each stage to ReLU(GN(Conv(.))).
template <typename T>
struct DenseBlockParamsT {
  Conv2dParamsT<T> conv1;
  GroupNormParamsT<T> norm1;
  Conv2dParamsT<T> conv2;
  GroupNormParamsT<T> norm2;
  Conv2dParamsT<T> conv3;
  int growth = 0;
  bool relu_before_norm = true;
};

template <typename T>
struct AttentionGateParamsT {
  Conv2dParamsT<T> theta_x;  // 1x1, C_x -> C_mid
  Conv2dParamsT<T> theta_g;  // 1x1, C_g -> C_mid
  Conv2dParamsT<T> psi;      // 1x1, C_mid -> 1
};

namespace detail {

template <typename T>
void check_conv_input(const TensorT<T>& x, const Conv2dParamsT<T>& p,
                      const char* who) {
  if (x.ndim() != 3)
    throw ShapeError(std::string(who) + " expects (H,W,C) input, got " +
                     shape_str(x.shape()));
  if (p.weights.ndim() != 4)
    throw ShapeError(std::string(who) + ": weights must be (kH,kW,Cin,Cout)");
  if (x.dim(2) != p.in_channels())
    throw ShapeError(std::string(who) + ": input has " +
                     std::to_string(x.dim(2)) + " channels, weights expect " +
                     std::to_string(p.in_channels()));
  if (p.bias.size() != static_cast<std::size_t>(p.out_channels()))
    throw ShapeError(std::string(who) + ": bias length mismatch");
}

}  // namespace detail

// Cross-correlation with symmetric zero padding, channel-last layout.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const Conv2dParamsT<T>& p) {
  detail::check_conv_input(x, p, "conv2d");
  const int h = x.dim(0), w = x.dim(1), ci = p.in_channels();
  const int kh = p.kh(), kw = p.kw(), co = p.out_channels();
  const int stride = p.stride, pad = p.padding;
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  if (oh < 1 || ow < 1)
    throw ShapeError("conv2d: kernel larger than padded input");

  const T* xd = x.data().data();
  const T* wd = p.weights.data().data();
  const T* bd = p.bias.data().data();
  std::vector<T> out(static_cast<std::size_t>(oh) * ow * co);

  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      T* acc = out.data() + (static_cast<std::size_t>(i) * ow + j) * co;
      for (int c = 0; c < co; ++c) acc[c] = bd[c];
      const int ib = i * stride - pad;
      const int jb = j * stride - pad;
      for (int u = 0; u < kh; ++u) {
        const int ii = ib + u;
        if (ii < 0 || ii >= h) continue;
        for (int v = 0; v < kw; ++v) {
          const int jj = jb + v;
          if (jj < 0 || jj >= w) continue;
          const T* xp = xd + (static_cast<std::size_t>(ii) * w + jj) * ci;
          const T* wp = wd + (static_cast<std::size_t>(u) * kw + v) * ci * co;
          for (int c = 0; c < ci; ++c) {
            const T xv = xp[c];
            const T* wr = wp + static_cast<std::size_t>(c) * co;
            for (int o = 0; o < co; ++o) acc[o] += xv * wr[o];
          }
        }
      }
    }
  }

  auto xn = x.node();
  auto wn = p.weights.node();
  auto bn = p.bias.node();
  return detail::make_op(
      Shape{oh, ow, co}, std::move(out), {x, p.weights, p.bias},
      [xn, wn, bn, h, w, ci, kh, kw, co, stride, pad, oh,
       ow](typename TensorT<T>::Node& node) {
        const T* dy = node.grad.data();
        const T* xd = xn->data.data();
        const T* wd = wn->data.data();
        T* dx = xn->requires_grad ? xn->ensure_grad().data() : nullptr;
        T* dw = wn->requires_grad ? wn->ensure_grad().data() : nullptr;
        if (bn->requires_grad) {
          T* db = bn->ensure_grad().data();
          for (int px = 0; px < oh * ow; ++px) {
            const T* g = dy + static_cast<std::size_t>(px) * co;
            for (int o = 0; o < co; ++o) db[o] += g[o];
          }
        }
        if (!dx && !dw) return;
        for (int i = 0; i < oh; ++i) {
          for (int j = 0; j < ow; ++j) {
            const T* g = dy + (static_cast<std::size_t>(i) * ow + j) * co;
            const int ib = i * stride - pad;
            const int jb = j * stride - pad;
            for (int u = 0; u < kh; ++u) {
              const int ii = ib + u;
              if (ii < 0 || ii >= h) continue;
              for (int v = 0; v < kw; ++v) {
                const int jj = jb + v;
                if (jj < 0 || jj >= w) continue;
                const std::size_t xoff =
                    (static_cast<std::size_t>(ii) * w + jj) * ci;
                const std::size_t woff =
                    (static_cast<std::size_t>(u) * kw + v) * ci * co;
                for (int c = 0; c < ci; ++c) {
                  const T* wr = wd + woff + static_cast<std::size_t>(c) * co;
                  if (dx) {
                    T acc = T(0);
                    for (int o = 0; o < co; ++o) acc += wr[o] * g[o];
                    dx[xoff + static_cast<std::size_t>(c)] += acc;
                  }
                  if (dw) {
                    const T xv = xd[xoff + static_cast<std::size_t>(c)];
                    T* dwr = dw + woff + static_cast<std::size_t>(c) * co;
                    for (int o = 0; o < co; ++o) dwr[o] += xv * g[o];
                  }
                }
              }
            }
          }
        }
      });
}

// Reference implementation: direct nested summation in double precision,
// no autograd, no performance goals. Used as the oracle for conv2d.
template <typename T>
TensorT<T> conv2d_naive(const TensorT<T>& x, const Conv2dParamsT<T>& p) {
  detail::check_conv_input(x, p, "conv2d_naive");
  const int h = x.dim(0), w = x.dim(1), ci = p.in_channels();
  const int kh = p.kh(), kw = p.kw(), co = p.out_channels();
  const int oh = (h + 2 * p.padding - kh) / p.stride + 1;
  const int ow = (w + 2 * p.padding - kw) / p.stride + 1;
  std::vector<T> out(static_cast<std::size_t>(oh) * ow * co);
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j)
      for (int o = 0; o < co; ++o) {
        double acc = static_cast<double>(p.bias.data()[o]);
        for (int u = 0; u < kh; ++u)
          for (int v = 0; v < kw; ++v) {
            const int ii = i * p.stride - p.padding + u;
            const int jj = j * p.stride - p.padding + v;
            if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
            for (int c = 0; c < ci; ++c) {
              const double xv =
                  x.data()[(static_cast<std::size_t>(ii) * w + jj) * ci + c];
              const double wv =
                  p.weights.data()[((static_cast<std::size_t>(u) * kw + v) *
                                        ci +
                                    c) *
                                       co +
                                   o];
              acc += xv * wv;
            }
          }
        out[(static_cast<std::size_t>(i) * ow + j) * co + o] =
            static_cast<T>(acc);
      }
  return TensorT<T>::from_data(Shape{oh, ow, co}, std::move(out));
}

// 2x2-kernel, stride-2 transposed convolution: the adjoint of a stride-2
// convolution w.r.t. its input. Output spatial extents exactly double.
template <typename T>
TensorT<T> conv_transpose2d(const TensorT<T>& x, const Conv2dParamsT<T>& p) {
  detail::check_conv_input(x, p, "conv_transpose2d");
  if (p.kh() != 2 || p.kw() != 2 || p.stride != 2 || p.padding != 0)
    throw ValueError("conv_transpose2d supports kernel 2x2, stride 2 only");
  const int h = x.dim(0), w = x.dim(1), ci = p.in_channels();
  const int co = p.out_channels();
  const int oh = 2 * h, ow = 2 * w;

  const T* xd = x.data().data();
  const T* wd = p.weights.data().data();
  const T* bd = p.bias.data().data();
  std::vector<T> out(static_cast<std::size_t>(oh) * ow * co);
  for (std::size_t px = 0; px < static_cast<std::size_t>(oh) * ow; ++px)
    for (int o = 0; o < co; ++o) out[px * co + o] = bd[o];

  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const T* xp = xd + (static_cast<std::size_t>(i) * w + j) * ci;
      for (int u = 0; u < 2; ++u)
        for (int v = 0; v < 2; ++v) {
          T* op = out.data() +
                  (static_cast<std::size_t>(2 * i + u) * ow + (2 * j + v)) * co;
          const T* wp = wd + (static_cast<std::size_t>(u) * 2 + v) * ci * co;
          for (int c = 0; c < ci; ++c) {
            const T xv = xp[c];
            const T* wr = wp + static_cast<std::size_t>(c) * co;
            for (int o = 0; o < co; ++o) op[o] += xv * wr[o];
          }
        }
    }

  auto xn = x.node();
  auto wn = p.weights.node();
  auto bn = p.bias.node();
  return detail::make_op(
      Shape{oh, ow, co}, std::move(out), {x, p.weights, p.bias},
      [xn, wn, bn, h, w, ci, co, ow](typename TensorT<T>::Node& node) {
        const T* dy = node.grad.data();
        const T* xd = xn->data.data();
        const T* wd = wn->data.data();
        T* dx = xn->requires_grad ? xn->ensure_grad().data() : nullptr;
        T* dw = wn->requires_grad ? wn->ensure_grad().data() : nullptr;
        if (bn->requires_grad) {
          T* db = bn->ensure_grad().data();
          const std::size_t npx = static_cast<std::size_t>(2 * h) * ow;
          for (std::size_t px = 0; px < npx; ++px)
            for (int o = 0; o < co; ++o) db[o] += dy[px * co + o];
        }
        if (!dx && !dw) return;
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) {
            const std::size_t xoff = (static_cast<std::size_t>(i) * w + j) * ci;
            for (int u = 0; u < 2; ++u)
              for (int v = 0; v < 2; ++v) {
                const T* g =
                    dy + (static_cast<std::size_t>(2 * i + u) * ow +
                          (2 * j + v)) *
                             co;
                const std::size_t woff =
                    (static_cast<std::size_t>(u) * 2 + v) * ci * co;
                for (int c = 0; c < ci; ++c) {
                  const T* wr = wd + woff + static_cast<std::size_t>(c) * co;
                  if (dx) {
                    T acc = T(0);
                    for (int o = 0; o < co; ++o) acc += wr[o] * g[o];
                    dx[xoff + static_cast<std::size_t>(c)] += acc;
                  }
                  if (dw) {
                    const T xv = xd[xoff + static_cast<std::size_t>(c)];
                    T* dwr = dw + woff + static_cast<std::size_t>(c) * co;
                    for (int o = 0; o < co; ++o) dwr[o] += xv * g[o];
                  }
                }
              }
          }
      });
}

template <typename T>
TensorT<T> avg_pool2d(const TensorT<T>& x) {
  if (x.ndim() != 3) throw ShapeError("avg_pool2d expects (H,W,C)");
  const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw ShapeError("avg_pool2d: odd spatial extent " + shape_str(x.shape()));
  const int oh = h / 2, ow = w / 2;
  const T* xd = x.data().data();
  std::vector<T> out(static_cast<std::size_t>(oh) * ow * c);
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j) {
      T* op = out.data() + (static_cast<std::size_t>(i) * ow + j) * c;
      const T* r0 = xd + (static_cast<std::size_t>(2 * i) * w + 2 * j) * c;
      const T* r1 = xd + (static_cast<std::size_t>(2 * i + 1) * w + 2 * j) * c;
      for (int k = 0; k < c; ++k)
        op[k] = (r0[k] + r0[c + k] + r1[k] + r1[c + k]) * T(0.25);
    }
  auto xn = x.node();
  return detail::make_op(
      Shape{oh, ow, c}, std::move(out), {x},
      [xn, w, c, oh, ow](typename TensorT<T>::Node& node) {
        if (!xn->requires_grad) return;
        T* dx = xn->ensure_grad().data();
        const T* dy = node.grad.data();
        for (int i = 0; i < oh; ++i)
          for (int j = 0; j < ow; ++j) {
            const T* g = dy + (static_cast<std::size_t>(i) * ow + j) * c;
            T* r0 = dx + (static_cast<std::size_t>(2 * i) * w + 2 * j) * c;
            T* r1 = dx + (static_cast<std::size_t>(2 * i + 1) * w + 2 * j) * c;
            for (int k = 0; k < c; ++k) {
              const T q = g[k] * T(0.25);
              r0[k] += q;
              r0[c + k] += q;
              r1[k] += q;
              r1[c + k] += q;
            }
          }
      });
}

// Single-example group normalization: statistics over (H, W, channels in
// group). Reductions accumulate in double.
template <typename T>
TensorT<T> group_norm(const TensorT<T>& x, const GroupNormParamsT<T>& p) {
  if (x.ndim() != 3) throw ShapeError("group_norm expects (H,W,C)");
  const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const int groups = p.num_groups;
  if (groups < 1 || c % groups != 0)
    throw ValueError("group_norm: C=" + std::to_string(c) +
                     " not divisible by num_groups=" + std::to_string(groups));
  if (p.gamma.size() != static_cast<std::size_t>(c) ||
      p.beta.size() != static_cast<std::size_t>(c))
    throw ShapeError("group_norm: gamma/beta length mismatch");

  const int gc = c / groups;
  const std::size_t npx = static_cast<std::size_t>(h) * w;
  const T* xd = x.data().data();
  const T* gam = p.gamma.data().data();
  const T* bet = p.beta.data().data();

  std::vector<double> mean(static_cast<std::size_t>(groups));
  std::vector<double> inv_std(static_cast<std::size_t>(groups));
  for (int g = 0; g < groups; ++g) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t px = 0; px < npx; ++px)
      for (int k = 0; k < gc; ++k) {
        const double v = xd[px * c + static_cast<std::size_t>(g * gc + k)];
        s += v;
        s2 += v * v;
      }
    const double m = static_cast<double>(npx) * gc;
    const double mu = s / m;
    const double var = s2 / m - mu * mu;
    mean[static_cast<std::size_t>(g)] = mu;
    inv_std[static_cast<std::size_t>(g)] =
        1.0 / std::sqrt(var + static_cast<double>(p.epsilon));
  }

  std::vector<T> out(x.size());
  for (std::size_t px = 0; px < npx; ++px)
    for (int ch = 0; ch < c; ++ch) {
      const int g = ch / gc;
      const double xhat =
          (static_cast<double>(xd[px * c + static_cast<std::size_t>(ch)]) -
           mean[static_cast<std::size_t>(g)]) *
          inv_std[static_cast<std::size_t>(g)];
      out[px * c + static_cast<std::size_t>(ch)] = static_cast<T>(
          static_cast<double>(gam[ch]) * xhat + static_cast<double>(bet[ch]));
    }

  auto xn = x.node();
  auto gn = p.gamma.node();
  auto bn = p.beta.node();
  return detail::make_op(
      x.shape(), std::move(out), {x, p.gamma, p.beta},
      [xn, gn, bn, npx, c, gc, groups, mean,
       inv_std](typename TensorT<T>::Node& node) {
        const T* dy = node.grad.data();
        const T* xd = xn->data.data();
        const T* gam = gn->data.data();
        if (gn->requires_grad || bn->requires_grad) {
          std::vector<double> dgam(static_cast<std::size_t>(c), 0.0);
          std::vector<double> dbet(static_cast<std::size_t>(c), 0.0);
          for (std::size_t px = 0; px < npx; ++px)
            for (int ch = 0; ch < c; ++ch) {
              const int g = ch / gc;
              const double xhat =
                  (static_cast<double>(
                       xd[px * c + static_cast<std::size_t>(ch)]) -
                   mean[static_cast<std::size_t>(g)]) *
                  inv_std[static_cast<std::size_t>(g)];
              const double gy = dy[px * c + static_cast<std::size_t>(ch)];
              dgam[static_cast<std::size_t>(ch)] += gy * xhat;
              dbet[static_cast<std::size_t>(ch)] += gy;
            }
          if (gn->requires_grad) {
            T* d = gn->ensure_grad().data();
            for (int ch = 0; ch < c; ++ch)
              d[ch] += static_cast<T>(dgam[static_cast<std::size_t>(ch)]);
          }
          if (bn->requires_grad) {
            T* d = bn->ensure_grad().data();
            for (int ch = 0; ch < c; ++ch)
              d[ch] += static_cast<T>(dbet[static_cast<std::size_t>(ch)]);
          }
        }
        if (!xn->requires_grad) return;
        T* dx = xn->ensure_grad().data();
        const double m = static_cast<double>(npx) * gc;
        for (int g = 0; g < groups; ++g) {
          // dxhat = dy * gamma; dx = istd*(dxhat - mean(dxhat)
          //                                - xhat*mean(dxhat*xhat))
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (std::size_t px = 0; px < npx; ++px)
            for (int k = 0; k < gc; ++k) {
              const std::size_t idx =
                  px * c + static_cast<std::size_t>(g * gc + k);
              const double xhat = (static_cast<double>(xd[idx]) -
                                   mean[static_cast<std::size_t>(g)]) *
                                  inv_std[static_cast<std::size_t>(g)];
              const double dxhat = static_cast<double>(dy[idx]) *
                                   static_cast<double>(gam[g * gc + k]);
              sum_dxhat += dxhat;
              sum_dxhat_xhat += dxhat * xhat;
            }
          const double mean_dxhat = sum_dxhat / m;
          const double mean_dxhat_xhat = sum_dxhat_xhat / m;
          for (std::size_t px = 0; px < npx; ++px)
            for (int k = 0; k < gc; ++k) {
              const std::size_t idx =
                  px * c + static_cast<std::size_t>(g * gc + k);
              const double xhat = (static_cast<double>(xd[idx]) -
                                   mean[static_cast<std::size_t>(g)]) *
                                  inv_std[static_cast<std::size_t>(g)];
              const double dxhat = static_cast<double>(dy[idx]) *
                                   static_cast<double>(gam[g * gc + k]);
              dx[idx] += static_cast<T>(
                  inv_std[static_cast<std::size_t>(g)] *
                  (dxhat - mean_dxhat - xhat * mean_dxhat_xhat));
            }
        }
      });
}

namespace detail {

template <typename T>
TensorT<T> dense_stage(const TensorT<T>& x, const Conv2dParamsT<T>& conv,
                       const GroupNormParamsT<T>& norm,
                       bool relu_before_norm) {
  auto c = conv2d(x, conv);
  if (relu_before_norm) return group_norm(relu(c), norm);
  return relu(group_norm(c, norm));
}

}  // namespace detail

template <typename T>
TensorT<T> dense_block(const TensorT<T>& x, const DenseBlockParamsT<T>& p) {
  auto s1 = detail::dense_stage(x, p.conv1, p.norm1, p.relu_before_norm);
  auto s2 = detail::dense_stage(concat_channels<T>({x, s1}), p.conv2, p.norm2,
                                p.relu_before_norm);
  return conv2d(concat_channels<T>({x, s1, s2}), p.conv3);
}

// alpha = sigmoid(psi(relu(theta_x(x) + theta_g(g)))), gated = x * alpha.
template <typename T>
std::pair<TensorT<T>, TensorT<T>> attention_gate(
    const TensorT<T>& x, const TensorT<T>& g,
    const AttentionGateParamsT<T>& p) {
  if (x.dim(0) != g.dim(0) || x.dim(1) != g.dim(1))
    throw ShapeError("attention_gate: spatial mismatch " +
                     shape_str(x.shape()) + " vs " + shape_str(g.shape()));
  auto pre = relu(add(conv2d(x, p.theta_x), conv2d(g, p.theta_g)));
  auto alpha = sigmoid(conv2d(pre, p.psi));
  auto gated = mul(x, alpha);
  return {gated, alpha};
}

// ---- parameter construction -------------------------------------------------

// Conv weights uniform in +-sqrt(1/(kH*kW*C_in)), biases zero.
template <typename T>
Conv2dParamsT<T> make_conv2d(int kh, int kw, int c_in, int c_out, int stride,
                             int padding, Rng& rng) {
  if (kh < 1 || kw < 1 || c_in < 1 || c_out < 1 || stride < 1 || padding < 0)
    throw ValueError("make_conv2d: bad hyperparameters");
  Conv2dParamsT<T> p;
  const double bound = std::sqrt(1.0 / (static_cast<double>(kh) * kw * c_in));
  p.weights = TensorT<T>::zeros({kh, kw, c_in, c_out}, true);
  for (T& v : p.weights.data())
    v = static_cast<T>(rng.uniform(-bound, bound));
  p.bias = TensorT<T>::zeros({c_out}, true);
  p.stride = stride;
  p.padding = padding;
  return p;
}

inline int default_num_groups(int channels) {
  return (channels < 4 || channels % 4 != 0) ? 1 : 4;
}

template <typename T>
GroupNormParamsT<T> make_group_norm(int channels, int num_groups = 0) {
  GroupNormParamsT<T> p;
  p.num_groups = num_groups > 0 ? num_groups : default_num_groups(channels);
  p.gamma = TensorT<T>::full({channels}, T(1), true);
  p.beta = TensorT<T>::zeros({channels}, true);
  return p;
}

template <typename T>
DenseBlockParamsT<T> make_dense_block(int c_in, int growth, int c_out,
                                      Rng& rng) {
  DenseBlockParamsT<T> p;
  p.growth = growth;
  p.conv1 = make_conv2d<T>(3, 3, c_in, growth, 1, 1, rng);
  p.norm1 = make_group_norm<T>(growth);
  p.conv2 = make_conv2d<T>(3, 3, c_in + growth, growth, 1, 1, rng);
  p.norm2 = make_group_norm<T>(growth);
  p.conv3 = make_conv2d<T>(1, 1, c_in + 2 * growth, c_out, 1, 0, rng);
  return p;
}

// C_mid = max(C_x/2, 1)
template <typename T>
AttentionGateParamsT<T> make_attention_gate(int c_x, int c_g, Rng& rng) {
  const int c_mid = std::max(c_x / 2, 1);
  AttentionGateParamsT<T> p;
  p.theta_x = make_conv2d<T>(1, 1, c_x, c_mid, 1, 0, rng);
  p.theta_g = make_conv2d<T>(1, 1, c_g, c_mid, 1, 0, rng);
  p.psi = make_conv2d<T>(1, 1, c_mid, 1, 1, 0, rng);
  // gates start open (alpha ~ 0.73) rather than at the sigmoid midpoint:
  // the fresh model keeps most of the skip signal, while the sigmoid stays
  // far from saturation so psi still receives a usable gradient
  p.psi.bias.data()[0] = T(1);
  return p;
}

// ---- precision casts (for the double-precision gradient oracle) -------------

template <typename To, typename From>
Conv2dParamsT<To> cast_params(const Conv2dParamsT<From>& p) {
  Conv2dParamsT<To> q;
  q.weights = cast<To>(p.weights);
  q.bias = cast<To>(p.bias);
  q.stride = p.stride;
  q.padding = p.padding;
  return q;
}

template <typename To, typename From>
GroupNormParamsT<To> cast_params(const GroupNormParamsT<From>& p) {
  GroupNormParamsT<To> q;
  q.num_groups = p.num_groups;
  q.gamma = cast<To>(p.gamma);
  q.beta = cast<To>(p.beta);
  q.epsilon = static_cast<To>(p.epsilon);
  return q;
}

template <typename To, typename From>
DenseBlockParamsT<To> cast_params(const DenseBlockParamsT<From>& p) {
  DenseBlockParamsT<To> q;
  q.conv1 = cast_params<To>(p.conv1);
  q.norm1 = cast_params<To>(p.norm1);
  q.conv2 = cast_params<To>(p.conv2);
  q.norm2 = cast_params<To>(p.norm2);
  q.conv3 = cast_params<To>(p.conv3);
  q.growth = p.growth;
  q.relu_before_norm = p.relu_before_norm;
  return q;
}

template <typename To, typename From>
AttentionGateParamsT<To> cast_params(const AttentionGateParamsT<From>& p) {
  AttentionGateParamsT<To> q;
  q.theta_x = cast_params<To>(p.theta_x);
  q.theta_g = cast_params<To>(p.theta_g);
  q.psi = cast_params<To>(p.psi);
  return q;
}

using Conv2dParams = Conv2dParamsT<float>;
using GroupNormParams = GroupNormParamsT<float>;
using DenseBlockParams = DenseBlockParamsT<float>;
using AttentionGateParams = AttentionGateParamsT<float>;

}  // namespace atg
