#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "leafrust/adam.hpp"
#include "leafrust/error.hpp"
#include "leafrust/layers.hpp"

using namespace leafrust;
using TensorD = Tensor<double>;

TEST_CASE("conv examples") {
  const TensorD zeros({1, 1, 3, 3});
  const TensorD w({2, 1, 3, 3}, 0.5);
  const TensorD b({2}, std::vector<double>{1.5, -2.0});
  const auto out = nn::conv2d_forward(zeros, w, b);
  CHECK(out.shape() == Shape{1, 2, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(out[i] == 1.5);
    CHECK(out[9 + i] == -2.0);
  }

  SplitMix64 rng(1);
  const auto x = gradcheck::random_tensor({2, 1, 4, 5}, rng);
  const auto identity = nn::conv2d_forward(x, TensorD({1, 1, 1, 1}, 1.0), TensorD({1}));
  CHECK(identity == x);
}

TEST_CASE("conv is cross-correlation") {
  TensorD x({1, 1, 3, 3});
  x.at(0, 0, 1, 2) = 1.0;  // single impulse right of centre
  TensorD w({1, 1, 3, 3});
  w.at(0, 0, 1, 2) = 7.0;
  const auto out = nn::conv2d_forward(x, w, TensorD({1}));
  CHECK(out.at(0, 0, 1, 1) == 7.0);
}

TEST_CASE("conv shape errors") {
  const TensorD x({1, 2, 4, 4});
  CHECK_THROWS_WITH_AS(nn::conv2d_forward(x, TensorD({1, 3, 3, 3}), TensorD({1})),
                       doctest::Contains("channel"), ValidationError);
  CHECK_THROWS_AS(nn::conv2d_forward(x, TensorD({1, 2, 3, 3}), TensorD({2})), ValidationError);
  CHECK_THROWS_AS(nn::conv2d_forward(x, TensorD({1, 2, 2, 2}), TensorD({1})), ValidationError);
  CHECK_THROWS_AS(nn::conv2d_forward(TensorD({2, 4, 4}), TensorD({1, 2, 3, 3}), TensorD({1})),
                  ValidationError);
}

TEST_CASE("conv backward without input gradient") {
  SplitMix64 rng(2);
  const auto x = gradcheck::random_tensor({2, 3, 6, 5}, rng);
  const auto w = gradcheck::random_tensor({4, 3, 3, 3}, rng);
  const auto up = gradcheck::random_tensor({2, 4, 6, 5}, rng);
  const auto full = nn::conv2d_backward(x, w, up, true);
  const auto partial = nn::conv2d_backward(x, w, up, false);
  CHECK(partial.input.empty());
  CHECK(partial.weights == full.weights);
  CHECK(partial.bias == full.bias);
}

TEST_CASE("maxpool examples and tie rule") {
  const TensorD x({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const auto r = nn::maxpool_forward(x);
  CHECK(r.output.shape() == Shape{1, 1, 1, 1});
  CHECK(r.output[0] == 4.0);

  const TensorD flat({1, 2, 4, 5}, 3.0);
  const auto p = nn::maxpool_forward(flat);
  CHECK(p.output.shape() == Shape{1, 2, 2, 2});
  for (double v : p.output.values()) CHECK(v == 3.0);
  const auto g = nn::maxpool_backward(flat.shape(), p.argmax, TensorD(p.output.shape(), 1.0));
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x2 = 0; x2 < 5; ++x2) {
        const bool first = y % 2 == 0 && x2 % 2 == 0 && x2 < 4;
        CHECK(g.at(0, c, y, x2) == (first ? 1.0 : 0.0));
      }
  CHECK_THROWS_AS(nn::maxpool_forward(TensorD({1, 1, 1, 4})), ValidationError);
}

TEST_CASE("batchnorm examples") {
  const TensorD x({2, 1}, std::vector<double>{1.0, 3.0});
  TensorD rm({1}, 0.0), rv({1}, 1.0);
  const auto out = nn::batchnorm_forward_train(x, TensorD({1}, 1.0), TensorD({1}, 0.0), rm, rv);
  CHECK(out.output[0] == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(out.output[1] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(rm[0] == doctest::Approx(0.2));
  CHECK(rv[0] == doctest::Approx(0.9 + 0.1 * 1.0));

  TensorD one({1, 2, 3, 3});
  TensorD m({2}), v({2}, 1.0);
  CHECK_THROWS_AS(nn::batchnorm_forward_train(one, TensorD({2}, 1.0), TensorD({2}), m, v), ValidationError);
}

TEST_CASE("batchnorm train output is standardized per channel") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SplitMix64 rng(seed);
    const std::size_t c = 3;
    const auto x = gradcheck::random_tensor({5, c, 4, 3}, rng, -4.0, 9.0);
    TensorD rm({c}), rv({c}, 1.0);
    const auto out = nn::batchnorm_forward_train(x, TensorD({c}, 1.0), TensorD({c}), rm, rv).output;
    for (std::size_t ch = 0; ch < c; ++ch) {
      double sum = 0.0, sq = 0.0;
      std::size_t count = 0;
      for (std::size_t n = 0; n < 5; ++n)
        for (std::size_t y = 0; y < 4; ++y)
          for (std::size_t x2 = 0; x2 < 3; ++x2) {
            const double v = out.at(n, ch, y, x2);
            sum += v;
            sq += v * v;
            ++count;
          }
      const double mean = sum / count;
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(sq / count - mean * mean - 1.0) < 1e-4);
    }
  }
}

TEST_CASE("batchnorm infer uses running statistics") {
  const TensorD x({1, 2}, std::vector<double>{4.0, -1.0});
  const TensorD gamma({2}, std::vector<double>{2.0, 1.0});
  const TensorD beta({2}, std::vector<double>{0.5, 0.0});
  const TensorD rm({2}, std::vector<double>{2.0, 1.0});
  const TensorD rv({2}, std::vector<double>{4.0, 1.0});
  const auto out = nn::batchnorm_forward_infer(x, gamma, beta, rm, rv);
  CHECK(out[0] == doctest::Approx(2.0 * 2.0 / std::sqrt(4.0 + 1e-5) + 0.5));
  CHECK(out[1] == doctest::Approx(-2.0 / std::sqrt(1.0 + 1e-5)));
}

TEST_CASE("dense examples") {
  SplitMix64 rng(4);
  const auto x = gradcheck::random_tensor({3, 4}, rng);
  TensorD eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
  CHECK(nn::dense_forward(x, eye, TensorD({4}), nn::Activation::None) == x);

  TensorD neg_eye = eye;
  for (auto& v : neg_eye.values()) v = -v;
  for (const auto* w : {&eye, &neg_eye}) {
    const auto out = nn::dense_forward(x, *w, TensorD({4}), nn::Activation::Relu);
    for (double v : out.values()) CHECK(v >= 0.0);
  }

  CHECK_THROWS_AS(nn::dense_forward(x, TensorD({5, 2}), TensorD({2}), nn::Activation::None), ValidationError);
  CHECK_THROWS_AS(nn::dense_forward(x, TensorD({4, 2}), TensorD({3}), nn::Activation::None), ValidationError);
}

TEST_CASE("softmax cross-entropy examples") {
  const std::vector<std::size_t> labels{0, 1};
  const TensorD equal({2, 2}, 0.25);
  CHECK(nn::softmax_cross_entropy(equal, labels).loss == doctest::Approx(std::log(2.0)));

  double previous = 1e9;
  for (double margin : {0.0, 1.0, 5.0, 20.0, 200.0}) {
    const TensorD logits({1, 2}, std::vector<double>{margin, 0.0});
    const double loss = nn::softmax_cross_entropy(logits, std::vector<std::size_t>{0}).loss;
    CHECK(loss >= 0.0);
    CHECK(loss < previous);
    CHECK(std::isfinite(loss));
    previous = loss;
  }
  CHECK(previous < 1e-10);

  const TensorD huge({1, 3}, std::vector<double>{1000.0, -1000.0, 999.0});
  const auto p = nn::softmax(huge);
  CHECK(p.all_finite());
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));

  CHECK_THROWS_AS(nn::softmax_cross_entropy(equal, std::vector<std::size_t>{0, 2}), ValidationError);
  CHECK_THROWS_AS(nn::softmax_cross_entropy(equal, std::vector<std::size_t>{0}), ValidationError);
}

TEST_CASE("adam first step and invariances") {
  nn::AdamConfig cfg;
  std::vector<double> params{0.0, 1.0, 1.0};
  const std::vector<double> grads{2.0, -0.5, -0.5};
  nn::AdamState<double> state(3);
  nn::adam_step<double>(params, grads, state, 1, cfg);
  CHECK(params[0] == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(params[1] == doctest::Approx(1.001).epsilon(1e-6));
  CHECK(params[1] == params[2]);

  std::vector<double> still{0.3, -0.7};
  const auto before = still;
  nn::AdamState<double> s2(2);
  const std::vector<double> zero{0.0, 0.0};
  for (std::uint64_t t = 1; t <= 50; ++t) nn::adam_step<double>(still, zero, s2, t, cfg);
  CHECK(still == before);
}

// ---------------------------------------------------------------------------
// Gradient checks: 64-bit, central differences with step 1e-4.

TEST_CASE("gradient check conv") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto r = gradcheck::conv(seed);
    INFO(r.shape);
    CHECK(r.max_rel_error < 1e-4);
  }
  // 2x1x5x5 input, 3 filters of 3x3
  SplitMix64 rng(77);
  auto x = gradcheck::random_tensor({2, 1, 5, 5}, rng);
  auto w = gradcheck::random_tensor({3, 1, 3, 3}, rng);
  auto b = gradcheck::random_tensor({3}, rng);
  const auto up = gradcheck::random_tensor({2, 3, 5, 5}, rng);
  const auto g = nn::conv2d_backward(x, w, up);
  gradcheck::Result res;
  auto loss = [&] { return gradcheck::dot(nn::conv2d_forward(x, w, b), up); };
  gradcheck::compare(x, g.input, loss, res);
  gradcheck::compare(w, g.weights, loss, res);
  gradcheck::compare(b, g.bias, loss, res);
  CHECK(res.checked == 50 + 27 + 3);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("gradient check maxpool") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto r = gradcheck::maxpool(seed);
    INFO(r.shape);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("gradient check batchnorm") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto r = gradcheck::batchnorm(seed);
    INFO(r.shape);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("gradient check dense") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto r = gradcheck::dense(seed);
    INFO(r.shape);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("gradient check softmax cross-entropy") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto r = gradcheck::softmax_xent(seed);
    INFO(r.shape);
    CHECK(r.max_rel_error < 1e-5);
  }
}

TEST_CASE("float and double kernels agree") {
  SplitMix64 rng(9);
  const auto x = gradcheck::random_tensor({2, 2, 6, 6}, rng);
  const auto w = gradcheck::random_tensor({3, 2, 3, 3}, rng);
  const auto b = gradcheck::random_tensor({3}, rng);
  const auto d = nn::conv2d_forward(x, w, b);
  const auto f = nn::conv2d_forward(tensor_cast<float>(x), tensor_cast<float>(w), tensor_cast<float>(b));
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(double(f[i]) - d[i]) < 1e-5);
}
