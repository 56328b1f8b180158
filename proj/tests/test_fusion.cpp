#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "srprom/fusion.hpp"
#include "srprom/io.hpp"
#include "test_util.hpp"

using namespace srprom;
using namespace srprom::fusion;

namespace {

Heatmap tagged(Heatmap h, const std::string& provider) {
  h.set_provider(provider);
  return h;
}

FeatureStack random_stack(std::mt19937_64& rng, int w, int h) {
  return stack_features(tagged(testutil::random_heatmap(rng, w, h), "dists"),
                        tagged(testutil::random_heatmap(rng, w, h), "ssm_jup"),
                        tagged(testutil::random_heatmap(rng, w, h), "bd_jup"));
}

oracle::Mlp to_oracle(const FusionModel& m) {
  oracle::Mlp o;
  for (const auto& l : m.layers()) {
    std::vector<std::vector<double>> W(l.outputs, std::vector<double>(l.inputs));
    for (int r = 0; r < l.outputs; ++r)
      for (int c = 0; c < l.inputs; ++c) W[r][c] = l.weights[static_cast<std::size_t>(r) * l.inputs + c];
    o.W.push_back(W);
    o.b.push_back(l.bias);
  }
  return o;
}

double oracle_output(const FusionModel& m, const double* x) {
  const auto& s = m.standardizer();
  std::vector<double> z(3);
  for (int c = 0; c < 3; ++c) z[c] = (x[c] - s.mean[c]) / s.scale[c];
  return to_oracle(m).forward(z);
}

// Naive loss: accumulate oracle outputs per region.
double oracle_loss(const FusionModel& m, const TrainingExample& ex) {
  double si = 0, so = 0;
  int ni = 0, no = 0;
  for (std::size_t i = 0; i < ex.features.pixels(); ++i) {
    const double y = oracle_output(m, ex.features.pixel(i));
    if (ex.mask.bits()[i]) {
      si += y;
      ++ni;
    } else {
      so += y;
      ++no;
    }
  }
  return (si / ni - ex.prominence) * (si / ni - ex.prominence) + (so / no) * (so / no);
}

FusionModel toy_model() {
  DenseLayer l1{3, 2, {1, -1, 0.5, 0, 2, -1}, {0.1, -0.2}};
  DenseLayer l2{2, 1, {1.5, -2}, {0.3}};
  return FusionModel({l1, l2}, Standardizer{});
}

TrainingExample random_example(std::mt19937_64& rng, int w, int h) {
  TrainingExample ex;
  ex.features = random_stack(rng, w, h);
  ex.mask = testutil::rect_mask(w, h, w / 4, h / 4, w / 2, h / 2);
  ex.prominence = std::uniform_real_distribution<double>(0, 1)(rng);
  return ex;
}

}  // namespace

// --- stacking and standardization ----------------------------------------------

TEST(Stack, ChannelsAndShapes) {
  std::mt19937_64 rng(1);
  const auto a = testutil::random_heatmap(rng, 5, 4);
  const auto s = stack_features(a, a, a);
  EXPECT_EQ(s.pixels(), 20u);
  EXPECT_EQ(s.values.size(), 60u);
  EXPECT_EQ(s.pixel(7)[1], a.values()[7]);
  EXPECT_THROW(stack_features(a, a, testutil::random_heatmap(rng, 5, 5)), ValidationError);
}

TEST(Stack, ChannelPermutationRejected) {
  std::mt19937_64 rng(2);
  const auto d = tagged(testutil::random_heatmap(rng, 6, 6), "dists");
  const auto s = tagged(testutil::random_heatmap(rng, 6, 6), "ssm_jup");
  const auto b = tagged(testutil::random_heatmap(rng, 6, 6), "bd_jup");
  EXPECT_NO_THROW(stack_features(d, s, b));
  EXPECT_THROW(stack_features(s, d, b), ValidationError);
  EXPECT_THROW(stack_features(d, b, s), ValidationError);
}

TEST(Standardizer, InversionAndZeroInput) {
  std::mt19937_64 rng(3);
  std::vector<TrainingExample> exs = {random_example(rng, 12, 10), random_example(rng, 9, 14)};
  const auto st = fit_standardizer(exs);
  for (const auto& ex : exs)
    for (std::size_t i = 0; i < ex.features.pixels(); ++i) {
      const auto z = st.apply(ex.features.pixel(i));
      const auto x = st.invert(z.data());
      for (int c = 0; c < 3; ++c) ASSERT_NEAR(x[c], ex.features.pixel(i)[c], 1e-9);
    }
  const double zero[3] = {0, 0, 0};
  const auto z = st.apply(zero);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(z[c], -st.mean[c] / st.scale[c]);

  // Constant channel keeps scale 1.
  TrainingExample flat;
  flat.features = stack_features(Heatmap(4, 4, Polarity::DistortionHigh, 0.5), Heatmap(4, 4, Polarity::DistortionHigh, 0.5),
                                 Heatmap(4, 4, Polarity::DistortionHigh, 0.5));
  flat.mask = testutil::rect_mask(4, 4, 0, 0, 1, 1);
  const auto fs = fit_standardizer({flat});
  EXPECT_EQ(fs.scale[0], 1.0);
  EXPECT_EQ(fs.mean[2], 0.5);
}

// --- forward ------------------------------------------------------------------

TEST(Forward, ToyNetworkByHand) {
  const auto m = toy_model();
  const double x1[3] = {1, 2, 3};
  // h = relu(0.6, 0.8); out = 1.5 * 0.6 - 2 * 0.8 + 0.3
  EXPECT_NEAR(m.forward_pixel(x1), -0.4, 1e-15);
  const double x2[3] = {2, 0, 1};
  // h = relu(2.6, -1.2) = (2.6, 0); out = 3.9 + 0.3
  EXPECT_NEAR(m.forward_pixel(x2), 4.2, 1e-15);
}

TEST(Forward, ZeroWeightsGiveBias) {
  auto m = FusionModel::initialize({3, 8, 8, 1}, 4);
  auto p = m.parameters();
  std::fill(p.begin(), p.end(), 0.0);
  m.set_parameters(p);
  m.layers().back().bias[0] = 0.42;
  std::mt19937_64 rng(5);
  const auto s = random_stack(rng, 7, 6);
  for (double v : forward_raw(m, s)) EXPECT_EQ(v, 0.42);
  const auto h = forward(m, s);
  EXPECT_EQ(h.provider(), "baseline");
  EXPECT_EQ(h.polarity(), Polarity::DistortionHigh);
  m.layers().back().bias[0] = 7.0;
  const auto clamped = forward(m, s);
  for (double v : clamped.values()) EXPECT_EQ(v, 1.0);
}

TEST(Forward, MatchesOracleAndIsPixelwise) {
  std::mt19937_64 rng(6);
  auto m = FusionModel::initialize({3, 16, 16, 1}, 7);
  m.set_standardizer(Standardizer{{0.1, 0.2, 0.3}, {0.5, 2.0, 1.5}});
  const auto s = random_stack(rng, 9, 8);
  const auto out = forward_raw(m, s);
  for (std::size_t i = 0; i < s.pixels(); ++i) ASSERT_NEAR(out[i], oracle_output(m, s.pixel(i)), 1e-12);

  std::vector<std::size_t> perm(s.pixels());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  FeatureStack p = s;
  for (std::size_t i = 0; i < perm.size(); ++i)
    std::copy(s.pixel(perm[i]), s.pixel(perm[i]) + 3, p.values.begin() + static_cast<std::ptrdiff_t>(i * 3));
  const auto pout = forward_raw(m, p);
  for (std::size_t i = 0; i < perm.size(); ++i) ASSERT_EQ(pout[i], out[perm[i]]);
}

TEST(Forward, NonFiniteOutputIsCorruption) {
  auto m = toy_model();
  m.layers().back().bias[0] = std::nan("");
  std::mt19937_64 rng(8);
  EXPECT_FALSE(m.finite());
  EXPECT_THROW(forward_raw(m, random_stack(rng, 3, 3)), ValidationError);
}

// --- loss and gradients ----------------------------------------------------------

TEST(Loss, ClosedFormForConstantOutput) {
  auto m = FusionModel::initialize({3, 4, 1}, 9);
  auto p = m.parameters();
  std::fill(p.begin(), p.end(), 0.0);
  m.set_parameters(p);
  m.layers().back().bias[0] = 0.3;
  std::mt19937_64 rng(10);
  auto ex = random_example(rng, 10, 10);
  ex.prominence = 0.8;
  EXPECT_NEAR(*loss(m, ex), (0.3 - 0.8) * (0.3 - 0.8) + 0.09, 1e-15);
  ex.prominence = 0.3;
  m.layers().back().bias[0] = 0.0;
  EXPECT_NEAR(*loss(m, ex), 0.09, 1e-15);
}

TEST(Loss, PerfectOutputIsZero) {
  // Output = prominence * (feature 0) with feature 0 the mask indicator.
  DenseLayer l1{3, 1, {1, 0, 0}, {0}};
  DenseLayer l2{1, 1, {0.6}, {0}};
  const FusionModel m({l1, l2}, Standardizer{});
  TrainingExample ex;
  ex.mask = testutil::rect_mask(8, 8, 2, 2, 5, 5);
  Heatmap ind(8, 8, Polarity::DistortionHigh);
  for (std::size_t i = 0; i < 64; ++i) ind.values()[i] = ex.mask.bits()[i];
  ex.features = stack_features(ind, ind, ind);
  ex.prominence = 0.6;
  EXPECT_NEAR(*loss(m, ex), 0.0, 1e-30);
}

TEST(Loss, MatchesNaiveAccumulation) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    auto m = FusionModel::initialize({3, 12, 12, 1}, 100 + rep);
    const auto ex = random_example(rng, 11, 13);
    m.set_standardizer(fit_standardizer({ex}));
    EXPECT_NEAR(*loss(m, ex), oracle_loss(m, ex), 1e-9);
  }
}

TEST(Loss, DegenerateMaskSkipped) {
  std::mt19937_64 rng(12);
  auto ex = random_example(rng, 6, 6);
  const auto m = FusionModel::initialize({3, 4, 1}, 1);
  ex.mask = BinaryMask(6, 6);
  EXPECT_FALSE(loss(m, ex).has_value());
  ex.mask = BinaryMask(6, 6, true);
  EXPECT_FALSE(loss(m, ex).has_value());
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(13);
  const double h = 1e-5;
  for (int draw = 0; draw < 10; ++draw) {
    auto m = FusionModel::initialize({3, 8, 8, 1}, 200 + draw);
    const auto ex = random_example(rng, 6, 5);
    m.set_standardizer(fit_standardizer({ex}));
    std::vector<double> grad;
    ASSERT_TRUE(loss_and_gradient(m, ex, grad).has_value());
    auto p = m.parameters();
    ASSERT_EQ(grad.size(), p.size());
    double diff = 0, norm_a = 0, norm_n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + h;
      m.set_parameters(p);
      const double up = *loss(m, ex);
      p[i] = keep - h;
      m.set_parameters(p);
      const double down = *loss(m, ex);
      p[i] = keep;
      const double fd = (up - down) / (2 * h);
      diff += (fd - grad[i]) * (fd - grad[i]);
      norm_a += grad[i] * grad[i];
      norm_n += fd * fd;
    }
    m.set_parameters(p);
    EXPECT_LT(std::sqrt(diff) / std::max({std::sqrt(norm_a), std::sqrt(norm_n), 1e-12}), 1e-4) << "draw " << draw;
  }
}

// --- training -------------------------------------------------------------------

TEST(Train, SeparableFixtureConverges) {
  const auto exs = fixtures::separable_fusion_set(21);
  TrainOptions opt;
  opt.seed = 5;
  const auto r = train(exs, opt);
  ASSERT_EQ(r.log.epoch_loss.size(), 15u);
  EXPECT_LT(fixtures::mean_loss(r.model, exs), 1e-3);
  EXPECT_LT(r.log.epoch_loss.back(), r.log.epoch_loss.front());
  EXPECT_EQ(r.model.epochs, 15);
  EXPECT_EQ(r.model.widths(), (std::vector<int>{3, 128, 128, 1}));
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  std::mt19937_64 rng(14);
  const auto ex = random_example(rng, 10, 10);
  TrainOptions opt;
  opt.epochs = 0;
  opt.seed = 77;
  opt.hidden = {16, 16};
  const auto r = train({ex}, opt);
  const auto init = FusionModel::initialize({3, 16, 16, 1}, 77);
  EXPECT_EQ(r.model.layers(), init.layers());
  EXPECT_TRUE(r.log.epoch_loss.empty());
}

TEST(Train, SameSeedIsBitIdentical) {
  std::mt19937_64 rng(15);
  std::vector<TrainingExample> exs;
  for (int i = 0; i < 3; ++i) exs.push_back(random_example(rng, 12, 12));
  TrainOptions opt;
  opt.epochs = 3;
  opt.seed = 99;
  opt.hidden = {32, 32};
  opt.pixel_sample = 20;
  const auto a = train(exs, opt);
  const auto b = train(exs, opt);
  EXPECT_EQ(encode_model(a.model), encode_model(b.model));
  EXPECT_EQ(a.log.epoch_loss, b.log.epoch_loss);
  opt.seed = 100;
  EXPECT_NE(encode_model(train(exs, opt).model), encode_model(a.model));
}

TEST(Train, DegenerateExamplesCountedAsSkipped) {
  std::mt19937_64 rng(16);
  auto good = random_example(rng, 8, 8);
  auto bad = random_example(rng, 8, 8);
  bad.mask = BinaryMask(8, 8);
  TrainOptions opt;
  opt.epochs = 2;
  opt.hidden = {8};
  const auto r = train({good, bad}, opt);
  EXPECT_EQ(r.log.skipped_examples, 1u);
  EXPECT_THROW(train({}, opt), ValidationError);
}

TEST(Train, DivergenceAborts) {
  std::mt19937_64 rng(17);
  auto ex = random_example(rng, 8, 8);
  ex.prominence = 1e300;
  TrainOptions opt;
  opt.epochs = 2;
  opt.hidden = {8};
  EXPECT_THROW(train({ex}, opt), ValidationError);
}

// --- model files ------------------------------------------------------------------

TEST(ModelFile, RoundTripIsBitExact) {
  auto m = FusionModel::initialize({3, 128, 128, 1}, 31);
  m.set_standardizer(Standardizer{{0.25, -1.5, 3.0}, {0.125, 2.0, 0.75}});
  m.seed = 31;
  m.epochs = 12;
  const auto bytes = encode_model(m);
  EXPECT_EQ(bytes.substr(0, 5), "SRPM\n");
  const auto back = decode_model(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(encode_model(back), bytes);

  testutil::TempDir dir("model");
  write_model(dir / "m.srpm", m);
  EXPECT_EQ(read_model(dir / "m.srpm"), m);
  EXPECT_THROW(read_model(dir / "missing.srpm"), IoError);
}

TEST(ModelFile, CorruptInputsRejected) {
  const auto m = FusionModel::initialize({3, 4, 1}, 1);
  const auto bytes = encode_model(m);
  EXPECT_THROW(decode_model("XXXX\n{}"), ValidationError);
  EXPECT_THROW(decode_model(bytes.substr(0, bytes.size() - 3)), ValidationError);
  EXPECT_THROW(decode_model(bytes + "abcd"), ValidationError);
}
