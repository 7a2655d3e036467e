#include "gmwae/latent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace gmwae {

MmdCrossCoeff parse_mmd_cross_coeff(const std::string& name) {
  if (name == "standard") return MmdCrossCoeff::kStandard;
  if (name == "paper") return MmdCrossCoeff::kPaper;
  throw ContractError("unknown MMD cross-term coefficient '" + name + "' (standard|paper)");
}

const char* to_string(MmdCrossCoeff coeff) {
  return coeff == MmdCrossCoeff::kPaper ? "paper" : "standard";
}

// ---- PriorBank ------------------------------------------------------------

template <typename T>
PriorBank<T>::PriorBank(std::size_t num_components, std::size_t dim, bool trainable, Rng& rng,
                        double init_scale)
    : dim_(dim), trainable_(trainable) {
  if (num_components == 0) throw ContractError("PriorBank: need at least one component");
  if (dim == 0) throw ContractError("PriorBank: latent dimension must be positive");
  components_.reserve(num_components);
  for (std::size_t k = 0; k < num_components; ++k) {
    std::vector<T> mu(dim);
    for (auto& v : mu) v = static_cast<T>(init_scale * gmwae::standard_normal(rng));
    components_.push_back({Tensor<T>::from({1, dim}, std::move(mu), trainable),
                           Tensor<T>::zeros({1, dim}, trainable)});
  }
}

template <typename T>
PriorBank<T> PriorBank<T>::standard_normal(std::size_t dim, bool trainable) {
  if (dim == 0) throw ContractError("PriorBank: latent dimension must be positive");
  PriorBank bank;
  bank.dim_ = dim;
  bank.trainable_ = trainable;
  bank.components_.push_back(
      {Tensor<T>::zeros({1, dim}, trainable), Tensor<T>::zeros({1, dim}, trainable)});
  return bank;
}

template <typename T>
void PriorBank<T>::set_trainable(bool on) {
  trainable_ = on;
  for (auto& c : components_) {
    c.mu.set_requires_grad(on);
    c.log_sigma.set_requires_grad(on);
  }
}

template <typename T>
const GaussianComponent<T>& PriorBank<T>::operator[](std::size_t k) const {
  if (k >= components_.size()) {
    throw IndexError("prior component " + std::to_string(k) + " out of range for " +
                     std::to_string(components_.size()) + " components");
  }
  return components_[k];
}

template <typename T>
GaussianComponent<T>& PriorBank<T>::operator[](std::size_t k) {
  return const_cast<GaussianComponent<T>&>(std::as_const(*this)[k]);
}

template <typename T>
Tensor<T> PriorBank<T>::reparameterized(std::size_t k, const Tensor<T>& eps) const {
  const auto& comp = (*this)[k];
  if (eps.shape().size() != 2 || eps.shape()[1] != dim_) {
    throw DimensionError("prior noise " + shape_str(eps.shape()) + " does not match latent dim " +
                         std::to_string(dim_));
  }
  return add(mul(eps, exp(comp.log_sigma)), comp.mu);
}

// ---- StyleWeights ---------------------------------------------------------

StyleWeights::StyleWeights(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw ContractError("style weights: empty weight vector");
  double total = 0.0;
  for (double v : w_) {
    if (!std::isfinite(v) || v < 0.0) throw ContractError("style weights: entries must be >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ContractError("style weights: entries sum to " + std::to_string(total) + ", not 1");
  }
}

StyleWeights StyleWeights::one_hot(std::size_t num_classes, std::size_t k) {
  if (k >= num_classes) {
    throw IndexError("class " + std::to_string(k) + " out of range for " +
                     std::to_string(num_classes) + " classes");
  }
  std::vector<double> w(num_classes, 0.0);
  w[k] = 1.0;
  return StyleWeights(std::move(w));
}

StyleWeights StyleWeights::pair(std::size_t num_classes, std::size_t k1, std::size_t k2) {
  if (k1 >= num_classes || k2 >= num_classes) throw IndexError("style pair out of range");
  if (k1 == k2) throw ContractError("style pair needs two distinct classes");
  std::vector<double> w(num_classes, 0.0);
  w[k1] = 0.5;
  w[k2] = 0.5;
  return StyleWeights(std::move(w));
}

// ---- kernels and penalties ------------------------------------------------

double imq_kernel(std::span<const double> x, std::span<const double> y, double c) {
  if (x.size() != y.size()) {
    throw DimensionError("imq_kernel: dimensions " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()) + " differ");
  }
  if (!(c > 0.0)) throw ContractError("imq_kernel: c must be positive");
  double dist = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dist += (x[i] - y[i]) * (x[i] - y[i]);
  return c / (c + dist);
}

template <typename T>
Tensor<T> mmd_hat(const Tensor<T>& posterior, const Tensor<T>& prior, T c, MmdCrossCoeff coeff) {
  if (posterior.shape().size() != 2 || posterior.shape() != prior.shape()) {
    throw DimensionError("mmd_hat: sample sets " + shape_str(posterior.shape()) + " and " +
                         shape_str(prior.shape()) + " must be equal-size matrices");
  }
  const std::size_t n = posterior.shape()[0];
  if (n < 2) throw ContractError("mmd_hat: need at least 2 samples per side");
  const T nn = static_cast<T>(n);
  const T within_scale = T(1) / (nn * (nn - T(1)));
  Tensor<T> within = add(sum_off_diagonal(imq_gram(posterior, posterior, c)),
                         sum_off_diagonal(imq_gram(prior, prior, c)));
  Tensor<T> cross_gram = imq_gram(posterior, prior, c);
  Tensor<T> cross = coeff == MmdCrossCoeff::kStandard
                        ? scale(sum_off_diagonal(cross_gram), T(2) * within_scale)
                        : scale(sum(cross_gram), T(1) / (nn * nn));
  return sub(scale(within, within_scale), cross);
}

template <typename T>
Tensor<T> kl_unit_variance(const Tensor<T>& mu_post, const Tensor<T>& log_sigma_post) {
  if (mu_post.shape() != log_sigma_post.shape() || log_sigma_post.shape().size() != 2) {
    throw DimensionError("kl_unit_variance: shapes " + shape_str(mu_post.shape()) + " and " +
                         shape_str(log_sigma_post.shape()) + " differ");
  }
  const std::size_t batch = log_sigma_post.shape()[0];
  // sigma^2 - ln sigma^2 - 1 with ln sigma^2 = 2 log_sigma
  Tensor<T> two_log = scale(log_sigma_post, T(2));
  Tensor<T> terms = add_scalar(sub(exp(two_log), two_log), T(-1));
  return scale(sum(terms), T(0.5) / static_cast<T>(batch));
}

template <typename T>
Tensor<T> sample_component(const PriorBank<T>& bank, std::size_t k, std::size_t n, Rng& rng) {
  const auto& comp = bank[k];
  if (n == 0) throw ContractError("sample_component: count must be positive");
  const std::size_t d = bank.dim();
  std::vector<T> out(n * d);
  const auto mu = comp.mu.values();
  const auto ls = comp.log_sigma.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out[i * d + j] = static_cast<T>(mu[j] + std::exp(ls[j]) * standard_normal(rng));
    }
  }
  return Tensor<T>::from({n, d}, std::move(out));
}

std::vector<double> mix_latent(const std::vector<std::vector<double>>& samples,
                               const StyleWeights& weights) {
  if (samples.size() != weights.size()) {
    throw ContractError("mix_latent: " + std::to_string(samples.size()) + " sample rows for " +
                        std::to_string(weights.size()) + " weights");
  }
  const std::size_t d = samples.front().size();
  std::vector<double> h(d, 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != d) throw DimensionError("mix_latent: ragged sample rows");
    if (weights[i] == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) h[j] += weights[i] * samples[i][j];
  }
  return h;
}

template <typename T>
double gmm_log_density(const PriorBank<T>& bank, const StyleWeights& weights,
                       std::span<const double> z) {
  if (weights.size() != bank.size()) throw ContractError("gmm_log_density: weight count mismatch");
  if (z.size() != bank.dim()) throw DimensionError("gmm_log_density: point dimension mismatch");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  std::vector<double> terms;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const auto mu = bank[i].mu.values();
    const auto ls = bank[i].log_sigma.values();
    double lp = std::log(weights[i]);
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double sigma = std::exp(static_cast<double>(ls[j]));
      const double u = (z[j] - static_cast<double>(mu[j])) / sigma;
      lp += -0.5 * (log_2pi + u * u) - std::log(sigma);
    }
    terms.push_back(lp);
  }
  const double peak = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc);
}

#define GMWAE_INSTANTIATE_LATENT(T)                                                           \
  template class PriorBank<T>;                                                                 \
  template Tensor<T> mmd_hat(const Tensor<T>&, const Tensor<T>&, T, MmdCrossCoeff);            \
  template Tensor<T> kl_unit_variance(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> sample_component(const PriorBank<T>&, std::size_t, std::size_t, Rng&);    \
  template double gmm_log_density(const PriorBank<T>&, const StyleWeights&,                    \
                                  std::span<const double>);

GMWAE_INSTANTIATE_LATENT(float)
GMWAE_INSTANTIATE_LATENT(double)

}  // namespace gmwae
