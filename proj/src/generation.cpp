#include "gmwae/generation.hpp"

#include <cmath>

namespace gmwae {

SampleMode parse_sample_mode(const std::string& name) {
  if (name == "average") return SampleMode::kAverage;
  if (name == "mixture") return SampleMode::kMixture;
  throw ContractError("unknown sample mode '" + name + "' (average|mixture)");
}

namespace {

void check_weights(std::size_t bank_size, const StyleWeights& weights) {
  if (weights.size() != bank_size) {
    throw ContractError("style weights have " + std::to_string(weights.size()) +
                        " entries for " + std::to_string(bank_size) + " components");
  }
}

template <typename T>
std::vector<double> component_draw(const PriorBank<T>& bank, std::size_t k,
                                   std::span<const double> noise) {
  const auto mu = bank[k].mu.values();
  const auto ls = bank[k].log_sigma.values();
  std::vector<double> h(bank.dim());
  for (std::size_t j = 0; j < h.size(); ++j) {
    h[j] = static_cast<double>(mu[j]) + std::exp(static_cast<double>(ls[j])) * noise[j];
  }
  return h;
}

}  // namespace

template <typename T>
std::vector<double> interpolated_latent(const PriorBank<T>& bank, const StyleWeights& weights,
                                        const std::vector<std::vector<double>>& noise) {
  check_weights(bank.size(), weights);
  if (noise.size() != bank.size()) throw ContractError("interpolated_latent: one noise row per component");
  std::vector<std::vector<double>> rows(bank.size(), std::vector<double>(bank.dim(), 0.0));
  for (std::size_t k = 0; k < bank.size(); ++k) {
    if (weights[k] == 0.0) continue;
    if (noise[k].size() != bank.dim()) throw DimensionError("interpolated_latent: noise dimension mismatch");
    rows[k] = component_draw(bank, k, noise[k]);
  }
  return mix_latent(rows, weights);
}

template <typename T>
std::vector<double> draw_latent(const PriorBank<T>& bank, const StyleWeights& weights, Rng& rng,
                                SampleMode mode) {
  check_weights(bank.size(), weights);
  const std::size_t d = bank.dim();
  if (mode == SampleMode::kMixture) {
    double u = uniform01(rng);
    std::size_t pick = bank.size();
    for (std::size_t k = 0; k < bank.size(); ++k) {
      if (weights[k] == 0.0) continue;
      pick = k;
      u -= weights[k];
      if (u < 0.0) break;
    }
    std::vector<double> noise(d);
    for (auto& e : noise) e = standard_normal(rng);
    return component_draw(bank, pick, noise);
  }
  std::vector<std::vector<double>> noise(bank.size());
  for (std::size_t k = 0; k < bank.size(); ++k) {
    if (weights[k] == 0.0) continue;
    noise[k].resize(d);
    for (auto& e : noise[k]) e = standard_normal(rng);
  }
  return interpolated_latent(bank, weights, noise);
}

template <typename T>
std::vector<std::vector<int>> generate_interpolated(const Seq2SeqModel<T>& model,
                                                    const StyleWeights& weights, std::size_t count,
                                                    double temperature, Rng& rng, SampleMode mode) {
  if (count == 0) throw ContractError("generate: count must be >= 1");
  if (!(temperature >= 0.0)) throw ContractError("generate: temperature must be >= 0");
  std::vector<std::vector<int>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto h = draw_latent(model.priors(), weights, rng, mode);
    out.push_back(model.decode_sample(h, temperature, rng));
  }
  return out;
}

template <typename T>
std::vector<std::vector<int>> generate_conditioned(const Seq2SeqModel<T>& model, std::size_t k,
                                                   std::size_t count, double temperature, Rng& rng) {
  return generate_interpolated(model, StyleWeights::one_hot(model.priors().size(), k), count,
                               temperature, rng);
}

template <typename T>
std::vector<std::vector<int>> generate(const Seq2SeqModel<T>& model, const GenerationRequest& request) {
  Rng rng(request.seed);
  return generate_interpolated(model, request.weights, request.count, request.temperature, rng,
                               request.mode);
}

#define GMWAE_INSTANTIATE_GEN(T)                                                                  \
  template std::vector<double> interpolated_latent(const PriorBank<T>&, const StyleWeights&,     \
                                                   const std::vector<std::vector<double>>&);      \
  template std::vector<double> draw_latent(const PriorBank<T>&, const StyleWeights&, Rng&,       \
                                           SampleMode);                                           \
  template std::vector<std::vector<int>> generate_interpolated(                                   \
      const Seq2SeqModel<T>&, const StyleWeights&, std::size_t, double, Rng&, SampleMode);        \
  template std::vector<std::vector<int>> generate_conditioned(const Seq2SeqModel<T>&,            \
                                                              std::size_t, std::size_t, double,  \
                                                              Rng&);                              \
  template std::vector<std::vector<int>> generate(const Seq2SeqModel<T>&, const GenerationRequest&);

GMWAE_INSTANTIATE_GEN(float)
GMWAE_INSTANTIATE_GEN(double)

}  // namespace gmwae
