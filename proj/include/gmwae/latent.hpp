#pragma once

// Gaussian-mixture prior, inverse multi-quadratic kernel, the MMD penalty,
// the unit-variance KL regularizer, and latent mixing of per-style samples.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gmwae/rng.hpp"
#include "gmwae/tensor.hpp"

namespace gmwae {

/// How the cross term of the MMD estimator is normalized.
enum class MmdCrossCoeff {
  // Unbiased U-statistic: 2/(N(N-1)) over n != m. Exactly zero for identical sets.
  kStandard,
  // 1/N^2 over all (n, m), as printed in the original formulation.
  kPaper,
};

MmdCrossCoeff parse_mmd_cross_coeff(const std::string& name);
const char* to_string(MmdCrossCoeff coeff);

/// One mixture component; sigma = exp(log_sigma) is positive by construction.
template <typename T>
struct GaussianComponent {
  Tensor<T> mu;         // [1 x d]
  Tensor<T> log_sigma;  // [1 x d]
};

template <typename T>
class PriorBank {
 public:
  /// `num_components` components of dimension `dim`; mu ~ init_scale * N(0, I), log_sigma = 0.
  PriorBank(std::size_t num_components, std::size_t dim, bool trainable, Rng& rng,
            double init_scale = 2.0);
  /// Single standard-normal component (the one-prior ablation).
  static PriorBank standard_normal(std::size_t dim, bool trainable = false);

  std::size_t size() const { return components_.size(); }
  std::size_t dim() const { return dim_; }
  bool trainable() const { return trainable_; }
  void set_trainable(bool on);

  const GaussianComponent<T>& operator[](std::size_t k) const;
  GaussianComponent<T>& operator[](std::size_t k);

  /// Differentiable draws mu_k + sigma_k * eps for noise `eps` of shape [n x d].
  Tensor<T> reparameterized(std::size_t k, const Tensor<T>& eps) const;

 private:
  PriorBank() = default;
  std::size_t dim_ = 0;
  bool trainable_ = false;
  std::vector<GaussianComponent<T>> components_;
};

/// Mixture weights over the M components: nonnegative, summing to 1 within 1e-6.
class StyleWeights {
 public:
  explicit StyleWeights(std::vector<double> w);
  static StyleWeights one_hot(std::size_t num_classes, std::size_t k);
  /// Equal weight on two distinct classes.
  static StyleWeights pair(std::size_t num_classes, std::size_t k1, std::size_t k2);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& values() const { return w_; }

 private:
  std::vector<double> w_;
};

/// k(x, y) = c / (c + |x - y|^2).
double imq_kernel(std::span<const double> x, std::span<const double> y, double c);

/// Kernel constant 2 * d * sigma_prior^2 with sigma_prior = 1.
inline double default_kernel_constant(std::size_t dim) { return 2.0 * static_cast<double>(dim); }

/// Empirical MMD between posterior and prior samples, both [N x d] with N >= 2.
template <typename T>
Tensor<T> mmd_hat(const Tensor<T>& posterior, const Tensor<T>& prior, T c,
                  MmdCrossCoeff coeff = MmdCrossCoeff::kStandard);

/// Batch mean of 0.5 * sum_d (sigma^2 - ln sigma^2 - 1) = KL(N(mu, sigma^2) || N(mu, I)).
template <typename T>
Tensor<T> kl_unit_variance(const Tensor<T>& mu_post, const Tensor<T>& log_sigma_post);

/// n independent draws from component k, shape [n x d], without history.
template <typename T>
Tensor<T> sample_component(const PriorBank<T>& bank, std::size_t k, std::size_t n, Rng& rng);

/// h = sum_i w_i * samples[i], for one sample row per component.
std::vector<double> mix_latent(const std::vector<std::vector<double>>& samples,
                               const StyleWeights& weights);

/// log sum_i w_i N(z; mu_i, diag(sigma_i^2)), via log-sum-exp.
template <typename T>
double gmm_log_density(const PriorBank<T>& bank, const StyleWeights& weights,
                       std::span<const double> z);

}  // namespace gmwae
