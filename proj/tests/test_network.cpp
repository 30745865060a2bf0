#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "dsgan/core/error.hpp"
#include "dsgan/models/network.hpp"
#include "test_support.hpp"

using namespace dsgan;
using dsgan::testing::random_tensor;

namespace {

// 2 deconv + 2 dilated layers with few filters, every BN flag on.
NetworkSpec small_generator(bool batch_norm) {
  GeneratorOptions o;
  o.deconv_filters = {4, 3};
  o.deconv_kernel = 5;
  o.dilated_filters = {3};
  o.dilations = {1, 2};
  NetworkSpec s = make_generator_spec(2, 1, o);
  for (auto& l : s.layers) l.batch_norm = batch_norm;
  return s;
}

double weighted_sum(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.values()[i] * w.values()[i];
  return s;
}

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Compares backprop against central differences of L = sum(w * net(x)) for
// every parameter entry and every input entry.
void check_gradients(Network& net, const Tensor& x, std::uint64_t seed) {
  Tensor y = net.forward_train(x);
  const Tensor w = random_tensor(y.shape(), seed);
  net.zero_grad();
  const Tensor gx = net.backward(w);
  const double h = 1e-6;
  const auto loss = [&] { return weighted_sum(net.forward_train(x), w); };
  for (auto& p : net.parameters()) {
    if (!p.trainable) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      double& v = p.value.values()[i];
      const double orig = v;
      v = orig + h;
      const double lp = loss();
      v = orig - h;
      const double lm = loss();
      v = orig;
      const double fd = (lp - lm) / (2 * h);
      EXPECT_LT(rel_error(fd, p.grad.values()[i]), 1e-3) << p.name << "[" << i << "]";
    }
  }
  Tensor xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = xp.values()[i];
    xp.values()[i] = orig + h;
    const double lp = weighted_sum(net.forward_train(xp), w);
    xp.values()[i] = orig - h;
    const double lm = weighted_sum(net.forward_train(xp), w);
    xp.values()[i] = orig;
    EXPECT_LT(rel_error((lp - lm) / (2 * h), gx.values()[i]), 1e-3) << "input[" << i << "]";
  }
}

// With the default 0.02 init, deep activations are so small that a finite
// difference step moves many of them across the ReLU kink.
void scale_kernels(Network& net, double factor) {
  for (auto& p : net.parameters())
    if (p.regularized)
      for (double& v : p.value.values()) v *= factor;
}

}  // namespace

TEST(Architecture, DefaultGeneratorLayout) {
  const NetworkSpec g = default_generator_spec(1, 1);
  ASSERT_EQ(g.layers.size(), 10u);
  const std::size_t filters[] = {256, 128, 64, 64, 64, 64, 64, 64, 64, 1};
  const bool bn[] = {false, true, true, true, false, true, true, true, true, false};
  for (std::size_t i = 0; i < 10; ++i) {
    const LayerSpec& l = g.layers[i];
    EXPECT_EQ(l.filters, filters[i]) << i;
    EXPECT_EQ(l.batch_norm, bn[i]) << i;
    if (i < 5) {
      EXPECT_EQ(l.kind, LayerKind::deconv);
      EXPECT_EQ(l.kernel_h, 5u);
      EXPECT_EQ(l.stride, 2u);
    } else {
      EXPECT_EQ(l.kind, LayerKind::dilated_conv);
      EXPECT_EQ(l.kernel_h, 3u);
      EXPECT_EQ(l.dilation, i - 4);
    }
    EXPECT_EQ(l.activation, i == 9 ? Activation::tanh : Activation::relu);
  }
  EXPECT_EQ(g.upscale(), 32u);
}

TEST(Architecture, DefaultDiscriminatorLayout) {
  const NetworkSpec d = default_discriminator_spec(1);
  ASSERT_EQ(d.layers.size(), 5u);
  const std::size_t filters[] = {32, 64, 128, 256, 1};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(d.layers[i].filters, filters[i]);
    EXPECT_EQ(d.layers[i].kernel_h, 9u);
    EXPECT_EQ(d.layers[i].stride, 2u);
    EXPECT_EQ(d.layers[i].activation, i == 4 ? Activation::sigmoid : Activation::leaky_relu);
  }
  EXPECT_EQ(d.downscale(), 32u);
}

TEST(Architecture, ShapeContract) {
  const Network g(default_generator_spec(1, 1));
  EXPECT_EQ(g.output_shape({2, 1, 12, 12}), (Shape4{2, 1, 384, 384}));
  EXPECT_EQ(g.output_shape({1, 1, 8, 10}), (Shape4{1, 1, 256, 320}));
  const Network d(default_discriminator_spec(1));
  EXPECT_EQ(d.output_shape({3, 1, 384, 384}), (Shape4{3, 1, 12, 12}));
  EXPECT_THROW(d.output_shape({1, 1, 100, 384}), ValidationError);
  EXPECT_THROW(g.output_shape({1, 2, 12, 12}), ValidationError);
}

TEST(Architecture, OutputRanges) {
  const Network g = make_network(small_generator(true), 3);
  const Tensor y = g.forward(random_tensor({2, 2, 5, 6}, 1));
  EXPECT_EQ(y.shape(), (Shape4{2, 1, 20, 24}));
  for (double v : y.values()) EXPECT_TRUE(v >= -1.0 && v <= 1.0);
  const Network d = make_network(dsgan::testing::tiny_discriminator(), 4);
  const Tensor p = d.forward(random_tensor({2, 1, 8, 12}, 2));
  EXPECT_EQ(p.shape(), (Shape4{2, 1, 2, 3}));
  for (double v : p.values()) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
}

TEST(ReceptiveField, DefaultGeneratorBound) {
  EXPECT_EQ(receptive_field_bound(default_generator_spec(1, 1)), (Extent2{155, 155}));
}

TEST(ReceptiveField, DefaultDiscriminatorField) {
  // 1 + 8 * (1 + 2 + 4 + 8 + 16)
  EXPECT_EQ(receptive_field_bound(default_discriminator_spec(1)), (Extent2{249, 249}));
}

TEST(ReceptiveField, DefaultGeneratorWindow) {
  // Each 5x5 stride-2 deconv maps [lo,hi] to [2lo-1, 2hi+3]; dilated layers
  // widen by their dilation on both sides (1+2+3+4+5 = 15).
  const Window w = dependency_window(default_generator_spec(1, 1), 12, 12, 3, 5);
  EXPECT_EQ(w.row_lo, 32 * 3 - 46);
  EXPECT_EQ(w.row_hi, 32 * 3 + 108);
  EXPECT_EQ(w.col_lo, 32 * 5 - 46);
  EXPECT_EQ(w.col_hi, 32 * 5 + 108);
}

TEST(ReceptiveField, OutputsOutsideWindowIgnoreSite) {
  const NetworkSpec spec = small_generator(false);
  const Network g = make_network(spec, 11);
  const Tensor z = random_tensor({1, 2, 9, 9}, 5);
  const Tensor base = g.forward(z);
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{0, 0}, {4, 4}, {8, 3}}) {
    Tensor z2 = z;
    z2.at(0, 1, r, c) += 0.75;
    const Tensor y = g.forward(z2);
    const Window win = dependency_window(spec, 9, 9, r, c);
    std::size_t changed_inside = 0;
    for (std::size_t i = 0; i < y.h(); ++i)
      for (std::size_t j = 0; j < y.w(); ++j) {
        const bool same = y.at(0, 0, i, j) == base.at(0, 0, i, j);
        if (!win.contains(static_cast<long>(i), static_cast<long>(j)))
          EXPECT_TRUE(same) << "pixel " << i << "," << j << " site " << r << "," << c;
        else if (!same)
          ++changed_inside;
      }
    EXPECT_GT(changed_inside, 0u);
  }
}

TEST(ReceptiveField, WindowIsNoLargerThanBound) {
  const NetworkSpec spec = default_generator_spec(1, 1);
  const Extent2 bound = receptive_field_bound(spec);
  const Window w = dependency_window(spec, 12, 12, 6, 6);
  EXPECT_LE(static_cast<std::size_t>(w.row_hi - w.row_lo + 1), bound.h);
  EXPECT_LE(static_cast<std::size_t>(w.col_hi - w.col_lo + 1), bound.w);
}

TEST(TranslationCovariance, ShiftedNoiseShiftsInterior) {
  const NetworkSpec spec = small_generator(true);
  const Network g = make_network(spec, 21);
  const std::size_t n = 16, up = spec.upscale();
  const Tensor z = random_tensor({1, 2, n + 1, n}, 8);
  Tensor a(Shape4{1, 2, n, n}), b(Shape4{1, 2, n, n});
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        a.at(0, c, i, j) = z.at(0, c, i, j);
        b.at(0, c, i, j) = z.at(0, c, i + 1, j);
      }
  const Tensor ya = g.forward(a), yb = g.forward(b);
  const std::size_t margin = receptive_field_bound(spec).h;
  ASSERT_LT(2 * margin + up, n * up);
  std::size_t compared = 0;
  for (std::size_t i = margin; i + margin + up < n * up; ++i)
    for (std::size_t j = margin; j + margin < n * up; ++j) {
      ASSERT_EQ(ya.at(0, 0, i + up, j), yb.at(0, 0, i, j)) << i << "," << j;
      ++compared;
    }
  EXPECT_GT(compared, 0u);
}

TEST(Gradients, GeneratorWithoutBatchNorm) {
  Network g = make_network(small_generator(false), 31);
  scale_kernels(g, 10.0);
  check_gradients(g, random_tensor({2, 2, 2, 3}, 9), 90);
}

TEST(Gradients, GeneratorWithBatchNorm) {
  Network g = make_network(small_generator(true), 32);
  scale_kernels(g, 10.0);
  check_gradients(g, random_tensor({2, 2, 2, 3}, 10), 91);
}

TEST(Gradients, Discriminator) {
  DiscriminatorOptions o;
  o.filters = {3, 2};
  o.kernel = 3;
  o.batch_norm = true;
  Network d = make_network(make_discriminator_spec(1, o), 33);
  check_gradients(d, random_tensor({2, 1, 8, 8}, 11), 92);
}

TEST(Gradients, AccumulateFlagAndInputGradFlag) {
  Network g = make_network(dsgan::testing::tiny_generator(false), 40);
  const Tensor x = random_tensor({1, 1, 3, 3}, 12);
  const Tensor y = g.forward_train(x);
  const Tensor w = random_tensor(y.shape(), 13);
  g.zero_grad();
  g.backward(w);
  const Tensor once = g.parameters()[0].grad;
  g.backward(w);
  for (std::size_t i = 0; i < once.size(); ++i)
    EXPECT_NEAR(g.parameters()[0].grad.values()[i], 2 * once.values()[i], 1e-12);
  const Tensor before = g.parameters()[0].grad;
  const Tensor gx = g.backward(w, false, false);
  EXPECT_TRUE(gx.empty());
  EXPECT_EQ(g.parameters()[0].grad, before);
}

TEST(Initialization, KernelStatistics) {
  const Network d = make_network(default_discriminator_spec(1), 7);
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& p : d.parameters()) {
    if (p.regularized) {
      for (double v : p.value.values()) {
        sum += v;
        sq += v * v;
        ++count;
      }
    } else if (p.trainable) {
      for (double v : p.value.values()) EXPECT_EQ(v, 0.0) << p.name;
    }
  }
  const double mean = sum / count, sd = std::sqrt(sq / count - mean * mean);
  EXPECT_NEAR(mean, 0.0, 5.0 * 0.02 / std::sqrt(double(count)));
  EXPECT_NEAR(sd, 0.02, 0.02 * 0.01);
}

TEST(Initialization, DeterministicPerSeed) {
  const NetworkSpec spec = small_generator(true);
  const Network a = make_network(spec, 5), b = make_network(spec, 5), c = make_network(spec, 6);
  EXPECT_EQ(a.parameters()[0].value, b.parameters()[0].value);
  EXPECT_NE(a.parameters()[0].value, c.parameters()[0].value);
}

TEST(BatchNorm, RunningStatisticsUpdate) {
  Network g = make_network(dsgan::testing::tiny_generator(true), 50);
  const Tensor x = random_tensor({3, 1, 4, 4}, 14);
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= x.size();
  double ss = 0.0;
  for (double v : x.values()) ss += (v - mean) * (v - mean);
  const double unbiased = ss / (x.size() - 1);
  g.forward_train(x);
  EXPECT_NEAR(g.parameter("layer0.bn_mean").value.values()[0], 0.01 * mean, 1e-14);
  EXPECT_NEAR(g.parameter("layer0.bn_var").value.values()[0], 0.99 + 0.01 * unbiased, 1e-14);
  EXPECT_FALSE(g.parameter("layer0.bn_mean").trainable);
}

TEST(BatchNorm, InferenceIsConstAndUsesStoredStatistics) {
  Network g = make_network(dsgan::testing::tiny_generator(true), 51);
  const Tensor x = random_tensor({2, 1, 3, 3}, 15);
  const Tensor a = g.forward(x);
  EXPECT_EQ(g.forward(x), a);
  g.forward_train(x);
  EXPECT_NE(g.forward(x), a);
}

TEST(Spec, TextRoundTrip) {
  for (const NetworkSpec& s : {default_generator_spec(3, 1), default_discriminator_spec(1),
                               small_generator(true)}) {
    KeyValueText kv;
    s.to_text(kv, "net");
    EXPECT_EQ(NetworkSpec::from_text(KeyValueText::parse(kv.format()), "net"), s);
  }
}

TEST(Spec, ValidationRejections) {
  NetworkSpec g = default_generator_spec(1, 1);
  g.layers.back().activation = Activation::relu;
  EXPECT_THROW(g.validate(), ValidationError);
  NetworkSpec d = default_discriminator_spec(1);
  d.layers.back().filters = 2;
  EXPECT_THROW(d.validate(), ValidationError);
  d = default_discriminator_spec(1);
  d.layers[0].kind = LayerKind::deconv;
  EXPECT_THROW(d.validate(), ValidationError);
  g = default_generator_spec(1, 1);
  g.layers[0].dilation = 2;
  EXPECT_THROW(g.validate(), ValidationError);
  EXPECT_THROW(Network(NetworkSpec{NetworkRole::generator, 1, {}}), ValidationError);
}
