#include <gtest/gtest.h>

#include <random>

#include "fcdlif/error.hpp"
#include "fcdlif/model.hpp"
#include "fcdlif/robustness.hpp"
#include "gradient_checks.hpp"

using namespace fcdlif;

TEST(ShiftTest, InteriorPredictionsAreUnchanged) {
  const FcDlifModel model(oracle::toy_config(), 3);
  for (std::size_t frames : {5u, 8u, 12u, 20u}) {
    std::mt19937_64 rng(frames);
    const auto img = oracle::toy_image(frames, rng);
    const auto r = shift_test(model, img);
    ASSERT_FALSE(r.error);
    EXPECT_EQ(r.modified.size(), frames + 1);
    EXPECT_EQ(r.deviation.size(), frames);
    EXPECT_EQ(r.interior_first, 2u);
    EXPECT_EQ(r.interior_count, frames - 4);
    EXPECT_EQ(r.interior_max_deviation, 0.0);
  }
}

TEST(ShiftTest, DeviationCanOnlyAppearNearTheEdges) {
  const FcDlifModel model(oracle::toy_config(), 4);
  std::mt19937_64 rng(1);
  const auto r = shift_test(model, oracle::toy_image(16, rng));
  for (std::size_t i = 0; i < r.deviation.size(); ++i) {
    if (i >= r.interior_first && i < r.interior_first + r.interior_count) EXPECT_EQ(r.deviation[i], 0.0) << i;
  }
  EXPECT_GE(r.overall_max_deviation, r.interior_max_deviation);
}

TEST(ShiftTest, ScoresAlignedFramesAgainstTruth) {
  const FcDlifModel model(oracle::toy_config(), 5);
  std::mt19937_64 rng(2);
  const auto img = oracle::toy_image(10, rng);
  InputFunction truth = predict(model, img);
  const auto r = shift_test(model, img, truth);
  ASSERT_TRUE(r.wmse_vs_truth);
  // Only the edge frames can differ, so the score stays tiny but non-negative.
  EXPECT_GE(*r.wmse_vs_truth, 0.0);
  std::vector<double> aligned(r.modified.begin() + 1, r.modified.end());
  double manual = 0.0;
  const auto w = LossWeights::for_length(10).per_frame();
  for (std::size_t t = 0; t < 10; ++t) manual += w[t] * (aligned[t] - truth.values[t]) * (aligned[t] - truth.values[t]);
  EXPECT_NEAR(*r.wmse_vs_truth, manual / 10.0, 1e-12);
}

TEST(TruncationTest, InteriorPredictionsAreUnchanged) {
  const FcDlifModel model(oracle::toy_config(), 6);
  std::mt19937_64 rng(3);
  const auto img = oracle::toy_image(20, rng);
  const auto r = truncation_test(model, img);
  ASSERT_FALSE(r.error);
  EXPECT_EQ(r.modified.size(), 10u);
  EXPECT_EQ(r.reference_offset, 4u);
  EXPECT_EQ(r.interior_first, 2u);
  EXPECT_EQ(r.interior_count, 6u);
  EXPECT_EQ(r.interior_max_deviation, 0.0);
}

TEST(TruncationTest, TooShortImageIsConfigError) {
  const FcDlifModel model(oracle::toy_config(), 6);
  std::mt19937_64 rng(3);
  EXPECT_THROW(truncation_test(model, oracle::toy_image(10, rng)), ConfigError);
}

TEST(Robustness, BaselineReportsFixedLengthFailure) {
  const auto model = build_baseline(1);
  DynamicPetImage img(FrameSchedule::standard(), {24, 16, 16});
  std::mt19937_64 rng(0);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : img.voxels) v = u(rng);
  const auto s = shift_test(*model, img);
  ASSERT_TRUE(s.error);
  EXPECT_NE(s.error->find("42"), std::string::npos);
  EXPECT_EQ(s.reference.size(), 42u);
  const auto t = truncation_test(*model, img);
  ASSERT_TRUE(t.error);
}
