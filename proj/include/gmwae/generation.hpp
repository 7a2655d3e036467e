#pragma once

// Style-conditioned and style-interpolated sampling.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gmwae/latent.hpp"
#include "gmwae/rng.hpp"
#include "gmwae/seq_model.hpp"

namespace gmwae {

enum class SampleMode {
  // h = sum_i w_i h_i with one draw h_i per weighted component.
  kAverage,
  // Pick one component with probability w_i, then draw from it.
  kMixture,
};

SampleMode parse_sample_mode(const std::string& name);

struct GenerationRequest {
  StyleWeights weights;
  std::size_t count = 1;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  SampleMode mode = SampleMode::kAverage;
};

/// Mixed latent for fixed per-component noise: sum_i w_i (mu_i + sigma_i * noise[i]).
/// `noise` has one d-vector per component (entries for zero weights are ignored).
template <typename T>
std::vector<double> interpolated_latent(const PriorBank<T>& bank, const StyleWeights& weights,
                                        const std::vector<std::vector<double>>& noise);

/// One latent draw for the given weights.
template <typename T>
std::vector<double> draw_latent(const PriorBank<T>& bank, const StyleWeights& weights, Rng& rng,
                                SampleMode mode = SampleMode::kAverage);

template <typename T>
std::vector<std::vector<int>> generate_interpolated(const Seq2SeqModel<T>& model,
                                                    const StyleWeights& weights, std::size_t count,
                                                    double temperature, Rng& rng,
                                                    SampleMode mode = SampleMode::kAverage);

template <typename T>
std::vector<std::vector<int>> generate_conditioned(const Seq2SeqModel<T>& model, std::size_t k,
                                                   std::size_t count, double temperature, Rng& rng);

/// Runs a request with its own seeded stream.
template <typename T>
std::vector<std::vector<int>> generate(const Seq2SeqModel<T>& model, const GenerationRequest& request);

}  // namespace gmwae
