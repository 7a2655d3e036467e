#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gmwae/error.hpp"
#include "gmwae/latent.hpp"

namespace gmwae {
namespace {

using TD = Tensor<double>;

// Brute-force references, written independently of the library.
double ref_kernel(const std::vector<double>& x, const std::vector<double>& y, double c) {
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  return c / (c + d2);
}

std::vector<std::vector<double>> rows_of(const TD& t) {
  std::vector<std::vector<double>> out(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) out[r][c] = t.at(r, c);
  return out;
}

double ref_mmd(const TD& post, const TD& prior, double c, bool paper) {
  auto x = rows_of(post), y = rows_of(prior);
  const double n = static_cast<double>(x.size());
  double xx = 0, yy = 0, xy_off = 0, xy_all = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      xy_all += ref_kernel(x[i], y[j], c);
      if (i == j) continue;
      xx += ref_kernel(x[i], x[j], c);
      yy += ref_kernel(y[i], y[j], c);
      xy_off += ref_kernel(x[i], y[j], c);
    }
  }
  const double within = (xx + yy) / (n * (n - 1));
  return paper ? within - xy_all / (n * n) : within - 2.0 * xy_off / (n * (n - 1));
}

TD random_samples(std::size_t n, std::size_t d, std::mt19937_64& gen, double shift = 0.0,
                  bool grad = false) {
  std::normal_distribution<double> nd(shift, 1.0);
  std::vector<double> v(n * d);
  for (auto& x : v) x = nd(gen);
  return TD::from({n, d}, std::move(v), grad);
}

TEST(ImqKernel, Examples) {
  const std::vector<double> a{0.3, -2.0}, b{1.0, 0.0}, c{0.0, 1.0};
  EXPECT_EQ(imq_kernel(a, a, 3.7), 1.0);
  const std::vector<double> p{0.0, 0.0}, q{1.0, 1.0};
  EXPECT_DOUBLE_EQ(imq_kernel(p, q, 2.0), 0.5);
  EXPECT_NEAR(imq_kernel(b, c, 4.0), 4.0 / 6.0, 1e-15);
}

TEST(ImqKernel, SymmetricAndBounded) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(3), y(3);
    for (auto& v : x) v = nd(gen);
    for (auto& v : y) v = nd(gen);
    const double k = imq_kernel(x, y, 6.0);
    EXPECT_EQ(k, imq_kernel(y, x, 6.0));
    EXPECT_GT(k, 0.0);
    EXPECT_LE(k, 1.0);
  }
}

TEST(ImqKernel, Errors) {
  const std::vector<double> a{1.0}, b{1.0, 2.0};
  EXPECT_THROW(imq_kernel(a, b, 1.0), ContractError);
  EXPECT_THROW(imq_kernel(a, a, 0.0), ContractError);
}

TEST(MmdHat, HandExample) {
  auto post = TD::from({2, 1}, {0, 0});
  auto prior = TD::from({2, 1}, {2, 2});
  EXPECT_NEAR(mmd_hat(post, prior, 2.0).item(), 4.0 / 3.0, 1e-12);
}

TEST(MmdHat, IdenticalSetsGiveZero) {
  std::mt19937_64 gen(9);
  for (std::size_t n : {2u, 5u, 16u}) {
    auto x = random_samples(n, 4, gen);
    EXPECT_NEAR(mmd_hat(x, x, 8.0).item(), 0.0, 1e-12);
  }
}

TEST(MmdHat, MatchesBruteForceOnRandomInputs) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<std::size_t> nd(2, 32), dd(1, 16);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = nd(gen), d = dd(gen);
    auto x = random_samples(n, d, gen);
    auto y = random_samples(n, d, gen, 0.5);
    const double c = default_kernel_constant(d);
    EXPECT_NEAR(mmd_hat(x, y, c).item(), ref_mmd(x, y, c, false), 1e-10);
    EXPECT_NEAR(mmd_hat(x, y, c, MmdCrossCoeff::kPaper).item(), ref_mmd(x, y, c, true), 1e-10);
  }
}

TEST(MmdHat, Symmetric) {
  std::mt19937_64 gen(4);
  auto x = random_samples(8, 3, gen);
  auto y = random_samples(8, 3, gen, 1.0);
  EXPECT_NEAR(mmd_hat(x, y, 6.0).item(), mmd_hat(y, x, 6.0).item(), 1e-14);
}

TEST(MmdHat, Errors) {
  EXPECT_THROW(mmd_hat(TD::zeros({1, 2}), TD::zeros({1, 2}), 1.0), ContractError);
  EXPECT_THROW(mmd_hat(TD::zeros({3, 2}), TD::zeros({2, 2}), 1.0), DimensionError);
}

TEST(MmdHat, UnbiasedUnderTheNull) {
  std::mt19937_64 gen(77);
  const int trials = 200;
  double sum = 0, sum2 = 0;
  for (int t = 0; t < trials; ++t) {
    auto x = random_samples(8, 3, gen);
    auto y = random_samples(8, 3, gen);
    const double v = mmd_hat(x, y, 6.0).item();
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sum2 / trials - mean * mean) / trials);
  EXPECT_LT(std::abs(mean), 3.0 * se);
}

TEST(MmdHat, PosteriorGradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(12);
  auto x = random_samples(6, 3, gen, 0.0, true);
  auto y = random_samples(6, 3, gen, 0.7);
  std::vector<TD> in{x};
  EXPECT_LT(grad_check<double>([&] { return mmd_hat(in[0], y, 6.0); }, in), 1e-6);
}

TEST(MmdHat, PaperCoefficientParses) {
  EXPECT_EQ(parse_mmd_cross_coeff("paper"), MmdCrossCoeff::kPaper);
  EXPECT_EQ(parse_mmd_cross_coeff("standard"), MmdCrossCoeff::kStandard);
  EXPECT_THROW(parse_mmd_cross_coeff("other"), ContractError);
}

TEST(KlUnitVariance, Examples) {
  EXPECT_EQ(kl_unit_variance(TD::zeros({3, 4}), TD::zeros({3, 4})).item(), 0.0);
  auto ls = TD::from({1, 1}, {std::log(2.0)});
  EXPECT_NEAR(kl_unit_variance(TD::zeros({1, 1}), ls).item(), 0.5 * (4.0 - std::log(4.0) - 1.0),
              1e-12);
}

TEST(KlUnitVariance, ClosedFormOnRandomInputs) {
  std::mt19937_64 gen(31);
  for (int t = 0; t < 20; ++t) {
    auto mu = random_samples(5, 4, gen);
    auto ls = random_samples(5, 4, gen);
    double ref = 0;
    for (double l : ls.values()) ref += 0.5 * (std::exp(2 * l) - 2 * l - 1);
    ref /= 5.0;
    const double got = kl_unit_variance(mu, ls).item();
    EXPECT_NEAR(got, ref, 1e-8 * std::max(1.0, ref));
    EXPECT_GE(got, 0.0);
  }
}

TEST(KlUnitVariance, IndependentOfMu) {
  std::mt19937_64 gen(32);
  auto mu = random_samples(4, 3, gen);
  auto ls = random_samples(4, 3, gen);
  auto mu2 = random_samples(4, 3, gen, 5.0);
  EXPECT_EQ(kl_unit_variance(mu, ls).item(), kl_unit_variance(mu2, ls).item());
}

TEST(PriorBank, InitAndIndexing) {
  Rng rng(1);
  PriorBank<double> bank(3, 5, true, rng);
  EXPECT_EQ(bank.size(), 3u);
  EXPECT_EQ(bank.dim(), 5u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(bank[k].mu.shape(), (Shape{1, 5}));
    for (double v : bank[k].log_sigma.values()) EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(bank[k].mu.requires_grad());
  }
  EXPECT_THROW(bank[3], IndexError);
  Rng rng2(1);
  PriorBank<double> again(3, 5, true, rng2);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(bank[2].mu.values()[j], again[2].mu.values()[j]);
}

TEST(PriorBank, StandardNormal) {
  auto bank = PriorBank<double>::standard_normal(4);
  EXPECT_EQ(bank.size(), 1u);
  EXPECT_FALSE(bank.trainable());
  for (double v : bank[0].mu.values()) EXPECT_EQ(v, 0.0);
}

TEST(SampleComponent, ShapeDeterminismAndMoments) {
  Rng init(3);
  PriorBank<double> bank(2, 4, false, init);
  bank[1].log_sigma.mutable_values()[2] = std::log(0.5);
  Rng a(10), b(10);
  auto s1 = sample_component(bank, 1, 7, a);
  auto s2 = sample_component(bank, 1, 7, b);
  EXPECT_EQ(s1.shape(), (Shape{7, 4}));
  for (std::size_t i = 0; i < s1.size(); ++i) EXPECT_EQ(s1.values()[i], s2.values()[i]);

  const std::size_t n = 10000;
  Rng rng(11);
  auto big = sample_component(bank, 1, n, rng);
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0;
    for (std::size_t r = 0; r < n; ++r) mean += big.at(r, j);
    mean /= n;
    const double sigma = std::exp(bank[1].log_sigma.values()[j]);
    EXPECT_LT(std::abs(mean - bank[1].mu.values()[j]), 4.0 * sigma / std::sqrt(double(n)));
  }
  EXPECT_THROW(sample_component(bank, 2, 3, rng), IndexError);
}

TEST(StyleWeights, Validation) {
  EXPECT_NO_THROW(StyleWeights({0.25, 0.75}));
  EXPECT_NO_THROW(StyleWeights({0.5, 0.5 + 5e-7}));
  EXPECT_THROW(StyleWeights({0.6, 0.5}), ContractError);
  EXPECT_THROW(StyleWeights({-0.1, 1.1}), ContractError);
  EXPECT_THROW(StyleWeights(std::vector<double>{}), ContractError);
  EXPECT_THROW(StyleWeights::one_hot(2, 2), IndexError);
  EXPECT_THROW(StyleWeights::pair(3, 1, 1), ContractError);
  auto p = StyleWeights::pair(4, 0, 3);
  EXPECT_EQ(p.values(), (std::vector<double>{0.5, 0, 0, 0.5}));
}

TEST(MixLatent, Examples) {
  const std::vector<std::vector<double>> rows{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(mix_latent(rows, StyleWeights::one_hot(2, 1)), rows[1]);
  EXPECT_EQ(mix_latent({{1, 0}, {0, 1}}, StyleWeights({0.5, 0.5})), (std::vector<double>{0.5, 0.5}));
  auto h = mix_latent({{4, 0}, {0, 4}}, StyleWeights({0.25, 0.75}));
  EXPECT_DOUBLE_EQ(h[0], 1.0);
  EXPECT_DOUBLE_EQ(h[1], 3.0);
  EXPECT_THROW(mix_latent({{1, 0}}, StyleWeights({0.5, 0.5})), ContractError);
}

TEST(MixLatent, LinearAndPermutationEquivariant) {
  const std::vector<std::vector<double>> rows{{1, -2}, {0.5, 3}, {-4, 1}};
  const StyleWeights w1({0.2, 0.3, 0.5}), w2({0.6, 0.4, 0.0});
  const StyleWeights mid({0.4, 0.35, 0.25});
  auto a = mix_latent(rows, w1), b = mix_latent(rows, w2), m = mix_latent(rows, mid);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(m[j], 0.5 * a[j] + 0.5 * b[j], 1e-12);

  const std::vector<std::vector<double>> perm{rows[2], rows[0], rows[1]};
  auto p = mix_latent(perm, StyleWeights({0.5, 0.2, 0.3}));
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(p[j], a[j], 1e-12);
}

TEST(GmmLogDensity, SingleComponentIsDiagonalGaussian) {
  Rng rng(2);
  PriorBank<double> bank(1, 2, false, rng);
  bank[0].log_sigma.mutable_values()[1] = std::log(2.0);
  const std::vector<double> z{0.3, -1.0};
  double ref = 0;
  for (std::size_t j = 0; j < 2; ++j) {
    const double mu = bank[0].mu.values()[j];
    const double s = std::exp(bank[0].log_sigma.values()[j]);
    ref += -0.5 * std::log(2 * std::numbers::pi * s * s) - (z[j] - mu) * (z[j] - mu) / (2 * s * s);
  }
  EXPECT_NEAR(gmm_log_density(bank, StyleWeights({1.0}), z), ref, 1e-12);
}

PriorBank<double> two_unit_components() {
  Rng rng(0);
  PriorBank<double> bank(2, 1, false, rng);
  bank[0].mu.mutable_values()[0] = 1.0;
  bank[1].mu.mutable_values()[0] = -1.0;
  return bank;
}

TEST(GmmLogDensity, SymmetricPairAtOrigin) {
  auto bank = two_unit_components();
  const std::vector<double> z{0.0};
  EXPECT_NEAR(gmm_log_density(bank, StyleWeights({0.5, 0.5}), z), -1.4189385, 1e-6);
}

TEST(GmmLogDensity, IntegratesToOne) {
  auto bank = two_unit_components();
  bank[1].log_sigma.mutable_values()[0] = std::log(0.5);
  const StyleWeights w({0.3, 0.7});
  const double lo = -12, hi = 12, h = 1e-3;
  double total = 0;
  for (double x = lo; x < hi; x += h) {
    const std::vector<double> z{x + h / 2};
    total += std::exp(gmm_log_density(bank, w, z)) * h;
  }
  EXPECT_NEAR(total, 1.0, 1e-3);
}

TEST(GmmLogDensity, FarPointStaysFinite) {
  auto bank = two_unit_components();
  const std::vector<double> z{1e3};
  EXPECT_TRUE(std::isfinite(gmm_log_density(bank, StyleWeights({0.5, 0.5}), z)));
}

}  // namespace
}  // namespace gmwae
