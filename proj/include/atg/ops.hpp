#pragma once

#include <algorithm>
#include <cmath>

#include "atg/tensor.hpp"

namespace atg {

namespace detail {

// Broadcasting is restricted to a trailing singleton channel on the second
// operand: (H,W,C) op (H,W,1). Anything else is a shape mismatch.
template <typename T>
bool trailing_broadcast(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape() == b.shape()) return false;
  if (a.ndim() != b.ndim() || a.ndim() < 1)
    throw ShapeError("shape mismatch: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  int last = a.ndim() - 1;
  for (int i = 0; i < last; ++i)
    if (a.dim(i) != b.dim(i))
      throw ShapeError("shape mismatch: " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
  if (b.dim(last) != 1)
    throw ShapeError("shape mismatch: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  return true;
}

}  // namespace detail

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  const bool bcast = detail::trailing_broadcast(a, b);
  const int c = a.dim(a.ndim() - 1);
  std::vector<T> out(a.size());
  if (!bcast) {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = a.data()[i] + b.data()[i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = a.data()[i] + b.data()[i / static_cast<std::size_t>(c)];
  }
  auto an = a.node();
  auto bn = b.node();
  return detail::make_op(
      a.shape(), std::move(out), {a, b},
      [an, bn, bcast, c](typename TensorT<T>::Node& node) {
        const auto& dy = node.grad;
        if (an->requires_grad) {
          auto& da = an->ensure_grad();
          for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
        }
        if (bn->requires_grad) {
          auto& db = bn->ensure_grad();
          if (!bcast) {
            for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
          } else {
            for (std::size_t i = 0; i < dy.size(); ++i)
              db[i / static_cast<std::size_t>(c)] += dy[i];
          }
        }
      });
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  const bool bcast = detail::trailing_broadcast(a, b);
  const int c = a.dim(a.ndim() - 1);
  std::vector<T> out(a.size());
  if (!bcast) {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = a.data()[i] * b.data()[i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = a.data()[i] * b.data()[i / static_cast<std::size_t>(c)];
  }
  auto an = a.node();
  auto bn = b.node();
  return detail::make_op(
      a.shape(), std::move(out), {a, b},
      [an, bn, bcast, c](typename TensorT<T>::Node& node) {
        const auto& dy = node.grad;
        if (an->requires_grad) {
          auto& da = an->ensure_grad();
          if (!bcast) {
            for (std::size_t i = 0; i < dy.size(); ++i)
              da[i] += dy[i] * bn->data[i];
          } else {
            for (std::size_t i = 0; i < dy.size(); ++i)
              da[i] += dy[i] * bn->data[i / static_cast<std::size_t>(c)];
          }
        }
        if (bn->requires_grad) {
          auto& db = bn->ensure_grad();
          if (!bcast) {
            for (std::size_t i = 0; i < dy.size(); ++i)
              db[i] += dy[i] * an->data[i];
          } else {
            for (std::size_t i = 0; i < dy.size(); ++i)
              db[i / static_cast<std::size_t>(c)] += dy[i] * an->data[i];
          }
        }
      });
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, T s) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
  auto an = a.node();
  return detail::make_op(a.shape(), std::move(out), {a},
                         [an, s](typename TensorT<T>::Node& node) {
                           if (!an->requires_grad) return;
                           auto& da = an->ensure_grad();
                           for (std::size_t i = 0; i < node.grad.size(); ++i)
                             da[i] += node.grad[i] * s;
                         });
}

template <typename T>
TensorT<T> concat_channels(const std::vector<TensorT<T>>& parts) {
  if (parts.empty()) throw ValueError("concat_channels: no parts");
  const int h = parts[0].dim(0);
  const int w = parts[0].dim(1);
  int c_total = 0;
  std::vector<int> offsets;
  for (const auto& p : parts) {
    if (p.ndim() != 3)
      throw ShapeError("concat_channels expects (H,W,C) tensors");
    if (p.dim(0) != h || p.dim(1) != w)
      throw ShapeError("concat_channels: spatial mismatch " +
                       shape_str(p.shape()));
    offsets.push_back(c_total);
    c_total += p.dim(2);
  }
  std::vector<T> out(static_cast<std::size_t>(h) * w * c_total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& src = parts[k].data();
    const int c = parts[k].dim(2);
    for (int px = 0; px < h * w; ++px)
      std::copy_n(src.begin() + static_cast<std::size_t>(px) * c, c,
                  out.begin() + static_cast<std::size_t>(px) * c_total +
                      offsets[static_cast<std::size_t>(k)]);
  }
  std::vector<std::shared_ptr<typename TensorT<T>::Node>> nodes;
  std::vector<int> widths;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    widths.push_back(p.dim(2));
  }
  return detail::make_op(
      Shape{h, w, c_total}, std::move(out), parts,
      [nodes, offsets, widths, h, w,
       c_total](typename TensorT<T>::Node& node) {
        const auto& dy = node.grad;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
          if (!nodes[k]->requires_grad) continue;
          auto& dp = nodes[k]->ensure_grad();
          const int c = widths[k];
          for (int px = 0; px < h * w; ++px) {
            const T* src = dy.data() +
                           static_cast<std::size_t>(px) * c_total + offsets[k];
            T* dst = dp.data() + static_cast<std::size_t>(px) * c;
            for (int i = 0; i < c; ++i) dst[i] += src[i];
          }
        }
      });
}

template <typename T>
TensorT<T> slice_channels(const TensorT<T>& x, int c_begin, int c_end) {
  if (x.ndim() != 3) throw ShapeError("slice_channels expects (H,W,C)");
  const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (c_begin < 0 || c_end > c || c_begin >= c_end)
    throw ValueError("slice_channels: bad range [" + std::to_string(c_begin) +
                     "," + std::to_string(c_end) + ") for C=" +
                     std::to_string(c));
  const int cs = c_end - c_begin;
  std::vector<T> out(static_cast<std::size_t>(h) * w * cs);
  for (int px = 0; px < h * w; ++px)
    std::copy_n(x.data().begin() + static_cast<std::size_t>(px) * c + c_begin,
                cs, out.begin() + static_cast<std::size_t>(px) * cs);
  auto xn = x.node();
  return detail::make_op(
      Shape{h, w, cs}, std::move(out), {x},
      [xn, h, w, c, c_begin, cs](typename TensorT<T>::Node& node) {
        if (!xn->requires_grad) return;
        auto& dx = xn->ensure_grad();
        for (int px = 0; px < h * w; ++px) {
          const T* src = node.grad.data() + static_cast<std::size_t>(px) * cs;
          T* dst = dx.data() + static_cast<std::size_t>(px) * c + c_begin;
          for (int i = 0; i < cs; ++i) dst[i] += src[i];
        }
      });
}

template <typename T>
TensorT<T> pad2d(const TensorT<T>& x, int top, int bottom, int left,
                 int right) {
  if (x.ndim() != 3) throw ShapeError("pad2d expects (H,W,C)");
  if (top < 0 || bottom < 0 || left < 0 || right < 0)
    throw ValueError("pad2d: negative margin");
  const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const int oh = h + top + bottom, ow = w + left + right;
  std::vector<T> out(static_cast<std::size_t>(oh) * ow * c, T(0));
  for (int i = 0; i < h; ++i)
    std::copy_n(x.data().begin() + static_cast<std::size_t>(i) * w * c,
                static_cast<std::size_t>(w) * c,
                out.begin() +
                    (static_cast<std::size_t>(i + top) * ow + left) * c);
  auto xn = x.node();
  return detail::make_op(
      Shape{oh, ow, c}, std::move(out), {x},
      [xn, h, w, c, top, left, ow](typename TensorT<T>::Node& node) {
        if (!xn->requires_grad) return;
        auto& dx = xn->ensure_grad();
        for (int i = 0; i < h; ++i) {
          const T* src = node.grad.data() +
                         (static_cast<std::size_t>(i + top) * ow + left) * c;
          T* dst = dx.data() + static_cast<std::size_t>(i) * w * c;
          for (int j = 0; j < w * c; ++j) dst[j] += src[j];
        }
      });
}

template <typename T>
TensorT<T> crop2d(const TensorT<T>& x, int top, int bottom, int left,
                  int right) {
  if (x.ndim() != 3) throw ShapeError("crop2d expects (H,W,C)");
  if (top < 0 || bottom < 0 || left < 0 || right < 0)
    throw ValueError("crop2d: negative margin");
  const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const int oh = h - top - bottom, ow = w - left - right;
  if (oh < 1 || ow < 1)
    throw ValueError("crop2d: margins exceed tensor " + shape_str(x.shape()));
  std::vector<T> out(static_cast<std::size_t>(oh) * ow * c);
  for (int i = 0; i < oh; ++i)
    std::copy_n(x.data().begin() +
                    (static_cast<std::size_t>(i + top) * w + left) * c,
                static_cast<std::size_t>(ow) * c,
                out.begin() + static_cast<std::size_t>(i) * ow * c);
  auto xn = x.node();
  return detail::make_op(
      Shape{oh, ow, c}, std::move(out), {x},
      [xn, w, c, top, left, oh, ow](typename TensorT<T>::Node& node) {
        if (!xn->requires_grad) return;
        auto& dx = xn->ensure_grad();
        for (int i = 0; i < oh; ++i) {
          const T* src = node.grad.data() + static_cast<std::size_t>(i) * ow * c;
          T* dst = dx.data() +
                   (static_cast<std::size_t>(i + top) * w + left) * c;
          for (int j = 0; j < ow * c; ++j) dst[j] += src[j];
        }
      });
}

template <typename T>
TensorT<T> mean_all(const TensorT<T>& x) {
  const std::size_t n = x.size();
  double acc = 0.0;
  for (T v : x.data()) acc += static_cast<double>(v);
  std::vector<T> out{static_cast<T>(acc / static_cast<double>(n))};
  auto xn = x.node();
  return detail::make_op(Shape{1}, std::move(out), {x},
                         [xn, n](typename TensorT<T>::Node& node) {
                           if (!xn->requires_grad) return;
                           auto& dx = xn->ensure_grad();
                           const T g = node.grad[0] / static_cast<T>(n);
                           for (std::size_t i = 0; i < dx.size(); ++i)
                             dx[i] += g;
                         });
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = x.data()[i] > T(0) ? x.data()[i] : T(0);
  auto xn = x.node();
  return detail::make_op(x.shape(), std::move(out), {x},
                         [xn](typename TensorT<T>::Node& node) {
                           if (!xn->requires_grad) return;
                           auto& dx = xn->ensure_grad();
                           // subgradient at 0 is 0
                           for (std::size_t i = 0; i < dx.size(); ++i)
                             if (xn->data[i] > T(0)) dx[i] += node.grad[i];
                         });
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x.data()[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  auto xn = x.node();
  // backward reads y = sigmoid(x) from the output node itself
  return detail::make_op(x.shape(), std::move(out), {x},
                         [xn](typename TensorT<T>::Node& node) {
                           if (!xn->requires_grad) return;
                           auto& dx = xn->ensure_grad();
                           for (std::size_t i = 0; i < dx.size(); ++i) {
                             const T y = node.data[i];
                             dx[i] += node.grad[i] * y * (T(1) - y);
                           }
                         });
}

}  // namespace atg
