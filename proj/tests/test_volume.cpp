#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "symvs/errors.hpp"
#include "symvs/solver.hpp"
#include "symvs/volume.hpp"

using namespace symvs;

namespace {

CostVolume manual_volume(int depth, int rows, int cols, const DepthHypotheses& hyp) {
  CostVolume v;
  v.hypotheses = hyp;
  for (int k = 0; k < depth; ++k) {
    v.cost.push_back(Plane::Zero(rows, cols));
    v.support.push_back(CountGrid::Constant(rows, cols, 2));
    v.valid.push_back(Mask::Constant(rows, cols, true));
  }
  return v;
}

std::vector<FeatureMap> features_of(const std::vector<CameraView>& views, FeatureMode mode) {
  std::vector<FeatureMap> f;
  for (const CameraView& v : views) f.push_back(extract_features(v.image, mode));
  return f;
}

}  // namespace

TEST(DepthHypotheses, EndpointsExact) {
  const DepthHypotheses h = DepthHypotheses::uniform(425.0, 935.0, 192);
  ASSERT_EQ(h.samples.size(), 192u);
  EXPECT_EQ(h.samples.front(), 425.0);
  EXPECT_EQ(h.samples.back(), 935.0);
  for (size_t k = 1; k < h.samples.size(); ++k) EXPECT_GT(h.samples[k], h.samples[k - 1]);
  EXPECT_THROW(DepthHypotheses::uniform(0.0, 10.0, 4), InvalidArgument);
  EXPECT_THROW(DepthHypotheses::uniform(10.0, 5.0, 4), InvalidArgument);
  EXPECT_THROW(DepthHypotheses::uniform(1.0, 5.0, 1), InvalidArgument);
}

TEST(ExtractFeatures, ConstantImageGrad3) {
  Image img(6, 7, 3);
  for (auto& ch : img.channels) ch.setConstant(0.4);
  const FeatureMap f = extract_features(img, "grad3");
  ASSERT_EQ(f.num_channels(), 3);
  EXPECT_TRUE((f.channels[0] - 0.4).abs().maxCoeff() < 1e-15);
  EXPECT_TRUE((f.channels[1] == 0.0).all());
  EXPECT_TRUE((f.channels[2] == 0.0).all());
}

TEST(ExtractFeatures, RampHasConstantXGradient) {
  const int W = 16;
  Image img(5, W, 1);
  for (int c = 0; c < W; ++c) img.channels[0].col(c).setConstant(double(c) / W);
  const FeatureMap f = extract_features(img, FeatureMode::kGrad3);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < W - 1; ++c) EXPECT_NEAR(f(r, c, 1), 1.0 / W, 1e-15);
  EXPECT_TRUE((f.channels[2] == 0.0).all());
}

TEST(ExtractFeatures, IntensityIsChannelMean) {
  const Image& img = symvs::testing::plane_render().views[0].image;
  const FeatureMap f = extract_features(img, FeatureMode::kIntensity);
  ASSERT_EQ(f.num_channels(), 1);
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c)
      EXPECT_NEAR(f(r, c, 0), (img(r, c, 0) + img(r, c, 1) + img(r, c, 2)) / 3.0, 1e-15);
}

TEST(ExtractFeatures, UnknownModeThrows) {
  EXPECT_THROW(extract_features(Image(2, 2, 1), "sift"), UnknownMode);
  EXPECT_EQ(parse_feature_mode("intensity"), FeatureMode::kIntensity);
  EXPECT_EQ(to_string(FeatureMode::kGrad3), "grad3");
}

TEST(BuildCostVolume, IdenticalViewsGiveZeroCost) {
  const CameraView v0 = symvs::testing::plane_render().views[0];
  const std::vector<CameraView> views(3, v0);
  const auto feats = features_of(views, FeatureMode::kGrad3);
  const CostVolume vol = build_cost_volume(views, feats, 1, DepthHypotheses::uniform(400, 800, 5));
  ASSERT_EQ(vol.depth(), 5);
  for (int k = 0; k < 5; ++k) {
    EXPECT_TRUE((vol.cost[k] == 0.0).all());
    EXPECT_TRUE((vol.support[k] == 3).all());
    EXPECT_TRUE(vol.valid[k].all());
  }
}

TEST(BuildCostVolume, ArgminFindsPlaneDepth) {
  const auto& sc = symvs::testing::plane_render();
  const DepthHypotheses hyp = symvs::testing::plane_spec().depth_range.hypotheses();
  const int truth = 30;
  ASSERT_EQ(hyp.samples[truth], 600.0);
  for (FeatureMode mode : {FeatureMode::kIntensity, FeatureMode::kGrad3}) {
    const auto feats = features_of(sc.views, mode);
    for (int ref = 0; ref < 3; ++ref) {
      const CountGrid idx = argmin_hypothesis(build_cost_volume(sc.views, feats, ref, hyp));
      int total = 0, hits = 0;
      for (int r = 1; r < idx.rows() - 1; ++r)
        for (int c = 1; c < idx.cols() - 1; ++c) {
          bool covisible = true;
          for (int j = 0; j < 3; ++j)
            if (j != ref) covisible = covisible && sc.in_frame.at({ref, j})(r, c + 1) &&
                                      sc.in_frame.at({ref, j})(r, c - 1);
          if (!covisible) continue;
          ++total;
          hits += idx(r, c) == truth;
        }
      ASSERT_GT(total, 500);
      EXPECT_GE(hits, 0.98 * total) << "ref " << ref << " mode " << to_string(mode);
    }
  }
}

TEST(BuildCostVolume, OutOfBoundsHypothesisIsFlagged) {
  const auto& sc = symvs::testing::plane_render();
  const std::vector<CameraView> views{sc.views[0], sc.views[2]};
  const auto feats = features_of(views, FeatureMode::kIntensity);
  // At depth 10 the 100-unit baseline shifts by 600 px.
  const CostVolume vol = build_cost_volume(views, feats, 0, DepthHypotheses::uniform(10.0, 600.0, 3));
  EXPECT_TRUE((vol.support[0] == 1).all());
  EXPECT_FALSE(vol.valid[0].any());
  EXPECT_TRUE((vol.cost[0] == 0.0).all());
  EXPECT_TRUE(vol.valid[2].any());
  EXPECT_TRUE(argmin_hypothesis(vol).maxCoeff() == 2);
}

TEST(BuildCostVolume, RejectsSingleView) {
  const auto& sc = symvs::testing::plane_render();
  const std::vector<CameraView> one{sc.views[0]};
  const auto feats = features_of(one, FeatureMode::kIntensity);
  EXPECT_THROW(build_cost_volume(one, feats, 0, DepthHypotheses::uniform(400, 800, 3)), TooFewViews);
}

TEST(BuildCostVolume, PermutationInvariantInSourceViews) {
  const auto& sc = symvs::testing::tilted_render();
  const DepthHypotheses hyp = DepthHypotheses::uniform(450.0, 750.0, 16);
  const std::vector<CameraView> a{sc.views[0], sc.views[1], sc.views[2]};
  const std::vector<CameraView> b{sc.views[2], sc.views[0], sc.views[1]};
  const CostVolume va = build_cost_volume(a, features_of(a, FeatureMode::kGrad3), 0, hyp);
  const CostVolume vb = build_cost_volume(b, features_of(b, FeatureMode::kGrad3), 1, hyp);
  for (int k = 0; k < hyp.count; ++k) {
    EXPECT_TRUE((va.valid[k] == vb.valid[k]).all());
    EXPECT_TRUE((va.support[k] == vb.support[k]).all());
    EXPECT_LT((va.cost[k] - vb.cost[k]).abs().maxCoeff(), 1e-12);
  }
}

TEST(SmoothCostVolume, ZeroRadiusIsIdentity) {
  const auto& sc = symvs::testing::plane_render();
  const auto feats = features_of(sc.views, FeatureMode::kIntensity);
  const CostVolume vol = build_cost_volume(sc.views, feats, 0, DepthHypotheses::uniform(450, 750, 8));
  const CostVolume out = smooth_cost_volume(vol, {0, 0, 0});
  for (int k = 0; k < 8; ++k) {
    EXPECT_TRUE((out.cost[k] == vol.cost[k]).all());
    EXPECT_TRUE((out.support[k] == vol.support[k]).all());
  }
}

TEST(SmoothCostVolume, ConstantVolumeUnchanged) {
  CostVolume vol = manual_volume(6, 7, 9, DepthHypotheses::uniform(1, 6, 6));
  for (auto& p : vol.cost) p.setConstant(0.375);
  const CostVolume out = smooth_cost_volume(vol, {2, 1, 3});
  for (const Plane& p : out.cost) EXPECT_LT((p - 0.375).abs().maxCoeff(), 1e-15);
}

TEST(SmoothCostVolume, ImpulseSpreadsOverNeighborhood) {
  CostVolume vol = manual_volume(5, 5, 5, DepthHypotheses::uniform(1, 5, 5));
  vol.cost[2](2, 2) = 1.0;
  const CostVolume out = smooth_cost_volume(vol, {1, 1, 1});
  for (int k = 0; k < 5; ++k)
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) {
        const bool inside = std::abs(k - 2) <= 1 && std::abs(r - 2) <= 1 && std::abs(c - 2) <= 1;
        EXPECT_NEAR(out.cost[k](r, c), inside ? 1.0 / 27.0 : 0.0, 1e-15);
      }
}

TEST(SmoothCostVolume, InvalidEntriesAreExcluded) {
  CostVolume vol = manual_volume(1, 1, 3, DepthHypotheses::uniform(1, 2, 2));
  vol.cost[0] << 1.0, 100.0, 3.0;
  vol.valid[0] << true, false, true;
  const CostVolume out = smooth_cost_volume(vol, {0, 0, 1});
  EXPECT_DOUBLE_EQ(out.cost[0](0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out.cost[0](0, 2), 3.0);
  EXPECT_FALSE(out.valid[0](0, 1));
}

TEST(RegressDepth, UniformCostGivesMidpoint) {
  const DepthHypotheses hyp = DepthHypotheses::uniform(425.0, 935.0, 192);
  CostVolume vol = manual_volume(192, 3, 4, hyp);
  for (auto& p : vol.cost) p.setConstant(0.2);
  const DepthRegression r = regress_depth(vol, 1.0);
  EXPECT_TRUE(r.depth.valid.all());
  EXPECT_LT((r.depth.values - 680.0).abs().maxCoeff(), 1e-9);
}

TEST(RegressDepth, OneHotLimit) {
  const DepthHypotheses hyp = DepthHypotheses::uniform(100.0, 200.0, 11);
  CostVolume vol = manual_volume(11, 2, 2, hyp);
  for (auto& p : vol.cost) p.setConstant(1e6);
  vol.cost[7].setZero();
  const DepthRegression r = regress_depth(vol, 1.0);
  EXPECT_TRUE((r.depth.values == hyp.samples[7]).all());
}

TEST(RegressDepth, SymmetricDistribution) {
  CostVolume vol = manual_volume(3, 1, 1, DepthHypotheses::uniform(1.0, 3.0, 3));
  vol.cost[0](0, 0) = std::log(4.0);
  vol.cost[1](0, 0) = std::log(2.0);
  vol.cost[2](0, 0) = std::log(4.0);
  const DepthRegression r = regress_depth(vol, 1.0);
  EXPECT_NEAR(r.probability.prob[0](0, 0), 0.25, 1e-15);
  EXPECT_NEAR(r.probability.prob[1](0, 0), 0.5, 1e-15);
  EXPECT_NEAR(r.depth.values(0, 0), 2.0, 1e-15);
}

TEST(RegressDepth, NoValidHypothesisIsInvalid) {
  CostVolume vol = manual_volume(4, 2, 2, DepthHypotheses::uniform(1.0, 4.0, 4));
  for (auto& m : vol.valid) m(1, 0) = false;
  vol.valid[2](0, 0) = false;
  vol.cost[2](0, 0) = -1e9;  // never consumed
  const DepthRegression r = regress_depth(vol, 0.5);
  EXPECT_FALSE(r.depth.valid(1, 0));
  EXPECT_TRUE(r.depth.valid(0, 0));
  EXPECT_EQ(r.probability.prob[2](0, 0), 0.0);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(r.probability.prob[k](1, 0), 0.0);
}

TEST(RegressDepth, RandomVolumeProperties) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0), shift(-50.0, 50.0);
  const DepthHypotheses hyp = DepthHypotheses::uniform(300.0, 700.0, 24);
  CostVolume vol = manual_volume(24, 9, 11, hyp);
  for (auto& p : vol.cost)
    for (int i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  CostVolume shifted = vol;
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 11; ++c) {
      const double s = shift(rng);
      for (auto& p : shifted.cost) p(r, c) += s;
    }
  for (double T : {0.01, 0.3, 5.0}) {
    const DepthRegression a = regress_depth(vol, T), b = regress_depth(shifted, T);
    Plane sum = Plane::Zero(9, 11);
    for (const Plane& p : a.probability.prob) {
      EXPECT_GE(p.minCoeff(), 0.0);
      EXPECT_LE(p.maxCoeff(), 1.0);
      sum += p;
    }
    EXPECT_LT((sum - 1.0).abs().maxCoeff(), 1e-6);
    EXPECT_GE(a.depth.values.minCoeff(), 300.0);
    EXPECT_LE(a.depth.values.maxCoeff(), 700.0);
    EXPECT_LT((a.depth.values - b.depth.values).abs().maxCoeff(), 1e-9);
  }
}

TEST(RegressDepth, SmoothedPlaneDepthWithinOneSpacing) {
  const auto& sc = symvs::testing::plane_render();
  const DepthHypotheses hyp = symvs::testing::plane_spec().depth_range.hypotheses();
  const SolverConfig cfg;
  const auto feats = features_of(sc.views, cfg.feature_mode);
  for (int ref = 0; ref < 3; ++ref) {
    const CostVolume vol = smooth_cost_volume(build_cost_volume(sc.views, feats, ref, hyp), cfg.smooth_radius);
    const DepthRegression r = regress_depth(vol, cfg.temperature);
    Mask region = r.depth.valid;
    for (int j = 0; j < 3; ++j)
      if (j != ref) region = region && sc.in_frame.at({ref, j});
    EXPECT_LT(symvs::testing::median_abs_error(r.depth, sc.gt_depths[ref], region), hyp.spacing());
  }
}
