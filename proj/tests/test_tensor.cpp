#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "atg/gradcheck.hpp"
#include "atg/ops.hpp"
#include "atg/tensor.hpp"

using namespace atg;

TEST_CASE("zeros and invalid shapes") {
  Tensor z = Tensor::zeros({2, 2});
  CHECK(z.size() == 4);
  for (float v : z.data()) CHECK(v == 0.0f);
  CHECK_THROWS_AS(Tensor::zeros({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor::zeros({-1}), ShapeError);
  CHECK_THROWS_AS(Tensor::zeros({}), ShapeError);
}

TEST_CASE("randn is deterministic for a fixed seed") {
  Tensor a = Tensor::randn({4}, 7);
  Tensor b = Tensor::randn({4}, 7);
  CHECK(a.data() == b.data());
  Tensor c = Tensor::randn({4}, 8);
  CHECK(a.data() != c.data());
}

TEST_CASE("randn sample mean obeys the law of large numbers") {
  Tensor x = Tensor::randn({10000}, 1);
  double mean = 0.0;
  for (float v : x.data()) mean += v;
  mean /= static_cast<double>(x.size());
  CHECK(mean > -0.05);
  CHECK(mean < 0.05);

  double var = 0.0;
  for (float v : x.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("add and mul basics") {
  Tensor a = Tensor::from_data({2}, {1, 2});
  Tensor b = Tensor::from_data({2}, {3, 4});
  Tensor s = add(a, b);
  CHECK(s.data() == std::vector<float>{4, 6});

  Tensor x = Tensor::randn({3, 2, 4}, 3);
  Tensor ones = Tensor::full({3, 2, 4}, 1.0f);
  CHECK(mul(x, ones).data() == x.data());

  Tensor bad = Tensor::zeros({3});
  CHECK_THROWS_AS(add(a, bad), ShapeError);
  CHECK_THROWS_AS(mul(a, bad), ShapeError);
}

TEST_CASE("trailing-channel broadcast matches an explicit loop") {
  const int h = 5, w = 4, c = 3;
  Tensor x = Tensor::randn({h, w, c}, 11);
  Tensor mask = Tensor::randn({h, w, 1}, 12);
  Tensor y = mul(x, mask);
  for (int px = 0; px < h * w; ++px)
    for (int k = 0; k < c; ++k)
      CHECK(y.data()[px * c + k] ==
            doctest::Approx(x.data()[px * c + k] * mask.data()[px]));
  // broadcast the other way round is not allowed
  CHECK_THROWS_AS(mul(mask, x), ShapeError);
}

TEST_CASE("scale") {
  Tensor a = Tensor::from_data({3}, {1, -2, 0.5f});
  Tensor y = scale(a, 2.0f);
  CHECK(y.data() == std::vector<float>{2, -4, 1});
}

TEST_CASE("concat_channels shape arithmetic") {
  std::vector<Tensor> parts(12, Tensor::zeros({4, 5, 9}));
  CHECK(concat_channels(parts).shape() == Shape{4, 5, 108});

  std::vector<Tensor> mixed{Tensor::zeros({4, 5, 108}), Tensor::zeros({4, 5, 7}),
                            Tensor::zeros({4, 5, 7}), Tensor::zeros({4, 5, 2})};
  CHECK(concat_channels(mixed).shape() == Shape{4, 5, 124});

  Tensor one = Tensor::randn({4, 5, 3}, 2);
  CHECK(concat_channels<float>({one}).data() == one.data());

  CHECK_THROWS_AS(concat_channels<float>({Tensor::zeros({4, 5, 1}),
                                          Tensor::zeros({4, 6, 1})}),
                  ShapeError);
}

TEST_CASE("concat then slice recovers each part bitwise") {
  Tensor a = Tensor::randn({3, 4, 2}, 21);
  Tensor b = Tensor::randn({3, 4, 5}, 22);
  Tensor c = Tensor::randn({3, 4, 1}, 23);
  Tensor cat = concat_channels<float>({a, b, c});
  CHECK(slice_channels(cat, 0, 2).data() == a.data());
  CHECK(slice_channels(cat, 2, 7).data() == b.data());
  CHECK(slice_channels(cat, 7, 8).data() == c.data());
}

TEST_CASE("pad2d and crop2d") {
  Tensor x = Tensor::randn({495, 436, 2}, 5);
  Tensor padded = pad2d(x, 0, 1, 0, 12);
  CHECK(padded.shape() == Shape{496, 448, 2});
  // pad region is exactly zero
  for (int j = 436; j < 448; ++j)
    for (int k = 0; k < 2; ++k) CHECK(padded.data()[(0 * 448 + j) * 2 + k] == 0.0f);
  CHECK(crop2d(padded, 0, 1, 0, 12).data() == x.data());

  Tensor small = Tensor::randn({6, 7, 3}, 6);
  CHECK(pad2d(small, 0, 0, 0, 0).data() == small.data());
  for (int m : {1, 2}) {
    Tensor rt = crop2d(pad2d(small, m, m, m, m), m, m, m, m);
    CHECK(rt.data() == small.data());
  }
  CHECK_THROWS_AS(crop2d(small, 4, 4, 0, 0), ValueError);
  CHECK_THROWS_AS(pad2d(small, -1, 0, 0, 0), ValueError);
}

TEST_CASE("mean_all values and gradient") {
  CHECK(mean_all(Tensor::from_data({1, 2}, {1, 3})).item() == 2.0f);
  CHECK(mean_all(Tensor::zeros({7})).item() == 0.0f);

  Tensor x = Tensor::randn({4}, 9, 1.0f, true);
  backward(mean_all(x));
  for (float g : x.grad()) CHECK(g == 0.25f);
}

TEST_CASE("backward through mean of squares") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  backward(mean_all(mul(x, x)));
  CHECK(x.grad()[0] == doctest::Approx(1.0));  // 2x/N
  CHECK(x.grad()[1] == doctest::Approx(2.0));

  Tensor y = Tensor::randn({5}, 4, 1.0f, true);
  backward(mean_all(y));
  for (float g : y.grad()) CHECK(g == doctest::Approx(0.2));

  CHECK_THROWS_AS(backward(Tensor::zeros({3})), ValueError);
}

TEST_CASE("repeated backward accumulates, zero_grad resets") {
  Tensor x = Tensor::randn({3}, 17, 1.0f, true);
  backward(mean_all(x));
  backward(mean_all(x));
  for (float g : x.grad()) CHECK(g == doctest::Approx(2.0 / 3.0));
  x.zero_grad();
  for (float g : x.grad()) CHECK(g == 0.0f);
}

TEST_CASE("backward is linear in the loss") {
  Tensor x0 = Tensor::randn({6}, 31);
  auto grad_of = [&](float a, float b) {
    Tensor x = x0.detach();
    x.set_requires_grad(true);
    Tensor f = mean_all(mul(x, x));
    Tensor g = mean_all(relu(x));
    backward(add(scale(f, a), scale(g, b)));
    return x.grad();
  };
  auto g_f = grad_of(1, 0);
  auto g_g = grad_of(0, 1);
  auto g_mix = grad_of(2.0f, -3.0f);
  for (std::size_t i = 0; i < g_mix.size(); ++i)
    CHECK(g_mix[i] ==
          doctest::Approx(2.0f * g_f[i] - 3.0f * g_g[i]).epsilon(1e-5));
}

TEST_CASE("no-grad mode records no tape") {
  Tensor x = Tensor::randn({3}, 2, 1.0f, true);
  NoGradGuard guard;
  Tensor y = mean_all(mul(x, x));
  CHECK_FALSE(y.requires_grad());
  CHECK(y.node()->parents.empty());
}

TEST_CASE("finite differences validate elementwise gradients") {
  Tensor x = Tensor::randn({6}, 42);
  auto mean_sq = [](const auto& t) { return mean_all(mul(t, t)); };
  CHECK(finite_diff_check(mean_sq, x, 1e-3) < 1e-4);

  // exact for a linear function
  auto linear = [](const auto& t) {
    using S = typename std::decay_t<decltype(t)>::value_type;
    return mean_all(scale(t, S(3)));
  };
  CHECK(finite_diff_check(linear, x, 1e-3) < 1e-6);

  auto composite = [](const auto& t) {
    return mean_all(mul(sigmoid(t), relu(t)));
  };
  CHECK(finite_diff_check(composite, x, 1e-3) < 1e-3);

  Tensor img = Tensor::randn({4, 4, 3}, 43);
  auto structural = [](const auto& t) {
    auto p = pad2d(t, 1, 1, 2, 0);
    auto c = crop2d(p, 0, 2, 1, 0);
    return mean_all(mul(c, c));
  };
  CHECK(finite_diff_check(structural, img, 1e-3) < 1e-3);

  Tensor mask = Tensor::randn({4, 4, 1}, 44);
  auto bcast = [&](const auto& t) {
    using S = typename std::decay_t<decltype(t)>::value_type;
    auto m = cast<S>(mask);
    return mean_all(mul(t, m));
  };
  CHECK(finite_diff_check(bcast, img, 1e-3) < 1e-3);
}

TEST_CASE("operations are deterministic") {
  Tensor a = Tensor::randn({5, 5, 3}, 77);
  Tensor b = Tensor::randn({5, 5, 3}, 78);
  Tensor first = add(mul(a, b), scale(a, 0.5f));
  Tensor second = add(mul(a, b), scale(a, 0.5f));
  CHECK(first.data() == second.data());
}
