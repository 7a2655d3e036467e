#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "gmwae/error.hpp"
#include "gmwae/generation.hpp"

namespace gmwae {
namespace {

ModelConfig small_config(std::size_t classes = 3) {
  ModelConfig c;
  c.vocab_size = 15;
  c.embed_dim = 4;
  c.hidden_dim = 6;
  c.latent_dim = 4;
  c.num_classes = classes;
  c.max_len = 7;
  return c;
}

std::size_t param_hash(const Seq2SeqModel<float>& m) {
  std::size_t h = 0;
  for (const auto& [name, t] : m.named_parameters()) {
    for (float v : t.values()) h = h * 1000003u ^ std::hash<float>{}(v);
  }
  return h;
}

TEST(SampleMode, Parse) {
  EXPECT_EQ(parse_sample_mode("average"), SampleMode::kAverage);
  EXPECT_EQ(parse_sample_mode("mixture"), SampleMode::kMixture);
  EXPECT_THROW(parse_sample_mode("blend"), ContractError);
}

TEST(Generate, OneHotMatchesConditioned) {
  Seq2SeqModel<float> model(small_config(), 5);
  for (std::size_t k = 0; k < 3; ++k) {
    Rng a(11), b(11);
    EXPECT_EQ(generate_interpolated(model, StyleWeights::one_hot(3, k), 6, 1.0, a),
              generate_conditioned(model, k, 6, 1.0, b));
  }
}

TEST(Generate, CountAndLengthRespected) {
  Seq2SeqModel<float> model(small_config(), 6);
  GenerationRequest req{StyleWeights({0.2, 0.3, 0.5}), 17, 1.5, 2};
  const auto out = generate(model, req);
  ASSERT_EQ(out.size(), 17u);
  for (const auto& s : out) {
    EXPECT_LE(s.size(), 7u);
    for (int id : s) {
      EXPECT_GE(id, 0);
      EXPECT_LT(id, 15);
    }
  }
}

TEST(Generate, SeededDeterminism) {
  Seq2SeqModel<float> model(small_config(), 7);
  GenerationRequest req{StyleWeights({0.6, 0.4, 0.0}), 10, 1.0, 42};
  EXPECT_EQ(generate(model, req), generate(model, req));
  GenerationRequest other = req;
  other.seed = 43;
  EXPECT_NE(generate(model, req), generate(model, other));
}

TEST(Generate, LeavesParametersUntouched) {
  Seq2SeqModel<float> model(small_config(), 8);
  const auto before = param_hash(model);
  generate(model, GenerationRequest{StyleWeights({0.5, 0.5, 0.0}), 20, 1.0, 1});
  generate(model, GenerationRequest{StyleWeights({0.0, 0.0, 1.0}), 20, 0.0, 1, SampleMode::kMixture});
  EXPECT_EQ(param_hash(model), before);
}

TEST(Generate, InvalidRequestsRejected) {
  Seq2SeqModel<float> model(small_config(), 9);
  Rng rng(1);
  EXPECT_THROW(generate_interpolated(model, StyleWeights({0.5, 0.5}), 1, 0.0, rng), ContractError);
  EXPECT_THROW(generate_interpolated(model, StyleWeights::one_hot(3, 0), 0, 0.0, rng), ContractError);
  EXPECT_THROW(generate_interpolated(model, StyleWeights::one_hot(3, 0), 1, -1.0, rng), ContractError);
}

TEST(InterpolatedLatent, CollapsesToSharedMean) {
  Rng init(3);
  PriorBank<double> bank(3, 4, false, init);
  const std::vector<double> mu{0.5, -1.0, 2.0, 0.25};
  for (std::size_t k = 0; k < 3; ++k) {
    std::copy(mu.begin(), mu.end(), bank[k].mu.mutable_values().begin());
    for (auto& v : bank[k].log_sigma.mutable_values()) v = -40.0;
  }
  Rng rng(5);
  for (const auto& w : {StyleWeights({1.0, 0.0, 0.0}), StyleWeights({0.3, 0.3, 0.4}),
                        StyleWeights({0.0, 0.5, 0.5})}) {
    const auto h = draw_latent(bank, w, rng);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(h[j], mu[j], 1e-12);
  }
}

TEST(InterpolatedLatent, MatchesWeightedComponentDraws) {
  Rng init(4);
  PriorBank<double> bank(2, 3, false, init);
  const std::vector<std::vector<double>> noise{{0.1, -0.2, 0.3}, {1.0, 0.0, -1.0}};
  const StyleWeights w({0.25, 0.75});
  const auto h = interpolated_latent(bank, w, noise);
  for (std::size_t j = 0; j < 3; ++j) {
    double expect = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      expect += w[k] * (bank[k].mu.values()[j] + std::exp(bank[k].log_sigma.values()[j]) * noise[k][j]);
    }
    EXPECT_NEAR(h[j], expect, 1e-12);
  }
}

TEST(InterpolatedLatent, ContinuousInWeights) {
  Rng init(6);
  PriorBank<double> bank(2, 5, false, init);
  std::vector<std::vector<double>> noise(2, std::vector<double>(5));
  Rng rng(8);
  for (auto& row : noise) {
    for (auto& v : row) v = standard_normal(rng);
  }
  double max_step = 0.0;
  auto prev = interpolated_latent(bank, StyleWeights({1.0, 0.0}), noise);
  for (int i = 1; i <= 100; ++i) {
    const double a = 1.0 - i / 100.0;
    const auto cur = interpolated_latent(bank, StyleWeights({a, 1.0 - a}), noise);
    double step = 0.0;
    for (std::size_t j = 0; j < 5; ++j) step += (cur[j] - prev[j]) * (cur[j] - prev[j]);
    max_step = std::max(max_step, std::sqrt(step));
    prev = cur;
  }
  // Each 0.01 step in the weights moves h by 0.01 * |h_1 - h_0|.
  const auto h0 = interpolated_latent(bank, StyleWeights({1.0, 0.0}), noise);
  double span = 0.0;
  for (std::size_t j = 0; j < 5; ++j) span += (prev[j] - h0[j]) * (prev[j] - h0[j]);
  EXPECT_NEAR(max_step, 0.01 * std::sqrt(span), 1e-9);
}

TEST(DrawLatent, MixtureModePicksComponentsByWeight) {
  Rng init(2);
  PriorBank<double> bank(3, 2, false, init);
  const std::vector<std::vector<double>> centers{{-50, 0}, {0, 50}, {50, 0}};
  for (std::size_t k = 0; k < 3; ++k) {
    std::copy(centers[k].begin(), centers[k].end(), bank[k].mu.mutable_values().begin());
  }
  Rng rng(12);
  std::vector<int> hits(3, 0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto h = draw_latent(bank, StyleWeights({0.2, 0.0, 0.8}), rng, SampleMode::kMixture);
    const std::size_t k = h[1] > 25 ? 1 : (h[0] < 0 ? 0 : 2);
    ++hits[k];
  }
  EXPECT_EQ(hits[1], 0);
  EXPECT_NEAR(hits[0] / double(n), 0.2, 0.015);
  EXPECT_NEAR(hits[2] / double(n), 0.8, 0.015);
}

TEST(DrawLatent, AverageModeMoments) {
  Rng init(2);
  PriorBank<double> bank(2, 1, false, init);
  bank[0].mu.mutable_values()[0] = -2.0;
  bank[1].mu.mutable_values()[0] = 4.0;
  Rng rng(3);
  const int n = 40000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double h = draw_latent(bank, StyleWeights({0.5, 0.5}), rng)[0];
    sum += h;
    sq += h * h;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  EXPECT_NEAR(mean, 1.0, 0.02);
  // Var = 0.25 + 0.25 for two independent unit draws.
  EXPECT_NEAR(var, 0.5, 0.02);
}

}  // namespace
}  // namespace gmwae
