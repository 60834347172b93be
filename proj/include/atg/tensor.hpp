#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace atg {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : IoError {
  using IoError::IoError;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

inline void check_valid_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("empty shape");
  for (int d : shape) {
    if (d < 1) throw ShapeError("invalid extent in shape " + shape_str(shape));
  }
}

// Thread-local switch controlling whether ops record the backward tape.
class GradMode {
 public:
  static bool enabled() { return flag(); }
  static void set_enabled(bool on) { flag() = on; }

 private:
  static bool& flag() {
    thread_local bool f = true;
    return f;
  }
};

struct NoGradGuard {
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Deterministic pseudo-normal generator (Box-Muller over mt19937 uniforms),
// identical across platforms for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {
    // splitmix64 warm-up so nearby seeds diverge
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in (0,1)
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

template <typename T>
class TensorT {
 public:
  using value_type = T;

  struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    std::vector<T>& ensure_grad() {
      if (grad.empty()) grad.assign(data.size(), T(0));
      return grad;
    }
  };

  TensorT() = default;
  explicit TensorT(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static TensorT zeros(Shape shape, bool requires_grad = false) {
    check_valid_shape(shape);
    auto n = std::make_shared<Node>();
    n->data.assign(numel(shape), T(0));
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return TensorT(std::move(n));
  }

  static TensorT full(Shape shape, T value, bool requires_grad = false) {
    TensorT t = zeros(std::move(shape), requires_grad);
    for (T& v : t.node_->data) v = value;
    return t;
  }

  static TensorT from_data(Shape shape, std::vector<T> data,
                           bool requires_grad = false) {
    check_valid_shape(shape);
    if (numel(shape) != data.size())
      throw ShapeError("data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return TensorT(std::move(n));
  }

  static TensorT randn(Shape shape, std::uint64_t seed, T stddev = T(1),
                       bool requires_grad = false) {
    TensorT t = zeros(std::move(shape), requires_grad);
    Rng rng(seed);
    for (T& v : t.node_->data) v = static_cast<T>(rng.normal() * stddev);
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return node_->data.size(); }

  std::vector<T>& data() { return node_->data; }
  const std::vector<T>& data() const { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::vector<T>& grad() { return node_->ensure_grad(); }
  const std::vector<T>& grad() const {
    return const_cast<Node&>(*node_).ensure_grad();
  }

  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.assign(node_->data.size(), T(0));
  }

  T item() const {
    if (size() != 1) throw ValueError("item() on non-scalar tensor");
    return node_->data[0];
  }

  // Drops the autograd history, keeping the same storage.
  TensorT detach() const {
    auto n = std::make_shared<Node>();
    n->shape = node_->shape;
    n->data = node_->data;
    return TensorT(std::move(n));
  }

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using Tensor = TensorT<float>;
using DTensor = TensorT<double>;

namespace detail {

// Builds the result node of an op; the tape entry is recorded only when grad
// mode is on and some input needs gradients.
template <typename T, typename BackFn>
TensorT<T> make_op(Shape shape, std::vector<T> data,
                   std::vector<TensorT<T>> parents, BackFn&& backward) {
  auto out = TensorT<T>::from_data(std::move(shape), std::move(data));
  bool track = false;
  if (GradMode::enabled()) {
    for (const auto& p : parents)
      if (p.requires_grad()) track = true;
  }
  if (track) {
    out.set_requires_grad(true);
    auto n = out.node();
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::forward<BackFn>(backward);
  }
  return out;
}

}  // namespace detail

template <typename T>
void backward(const TensorT<T>& loss) {
  if (loss.size() != 1) throw ValueError("backward() requires a scalar loss");
  using Node = typename TensorT<T>::Node;

  // iterative post-order DFS -> topological order
  std::vector<Node*> topo;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      topo.push_back(node);
      stack.pop_back();
    }
  }

  auto& seed = loss.node()->ensure_grad();
  seed[0] += T(1);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

template <typename To, typename From>
TensorT<To> cast(const TensorT<From>& x) {
  std::vector<To> data(x.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<To>(x.data()[i]);
  return TensorT<To>::from_data(x.shape(), std::move(data));
}

}  // namespace atg
