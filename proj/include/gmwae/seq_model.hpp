#pragma once

// GRU sequence-to-sequence autoencoder with a stochastic latent bottleneck.
//
// The encoder reads the words of a sentence and projects its final state to
// the posterior mean and log standard deviation. The decoder starts from an
// affine image of the latent vector and sees that vector concatenated to the
// token embedding at every step.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmwae/data.hpp"
#include "gmwae/latent.hpp"
#include "gmwae/rng.hpp"
#include "gmwae/tensor.hpp"

namespace gmwae {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t latent_dim = 100;
  std::size_t num_classes = 1;
  std::size_t max_len = 30;  // words, excluding BOS/EOS
  double prior_init_scale = 2.0;  // prior means start at scale * N(0, I)

  void validate() const;
};

template <typename T>
struct GruCell {
  Tensor<T> w_update, w_reset, w_candidate;  // [(in + hidden) x hidden]
  Tensor<T> b_update, b_reset, b_candidate;  // [1 x hidden]

  std::size_t input_dim() const { return w_update.shape()[0] - hidden_dim(); }
  std::size_t hidden_dim() const { return w_update.shape()[1]; }
};

/// z = s(W_z[x,h]+b_z), r = s(W_r[x,h]+b_r), c = tanh(W_c[x, r*h]+b_c), h' = (1-z)h + z c.
/// Rows of `x` and `h` are independent batch entries.
template <typename T>
Tensor<T> gru_step(const GruCell<T>& cell, const Tensor<T>& x, const Tensor<T>& h);

template <typename T>
struct Posterior {
  Tensor<T> mu;         // [batch x d]
  Tensor<T> log_sigma;  // [batch x d]
};

/// mu + exp(log_sigma) * eps; `eps` has the posterior's shape.
template <typename T>
Tensor<T> reparameterize(const Posterior<T>& post, const Tensor<T>& eps);
/// Same with eps ~ N(0, I) drawn from `rng`.
template <typename T>
Tensor<T> reparameterize(const Posterior<T>& post, Rng& rng);

/// Token choice from logits: argmax (lowest id on ties) at temperature 0,
/// otherwise a draw from softmax(logits / temperature).
int select_token(std::span<const double> logits, double temperature, Rng& rng);

template <typename T>
class Seq2SeqModel {
 public:
  Seq2SeqModel(ModelConfig config, std::uint64_t seed, bool trainable_priors = true);

  const ModelConfig& config() const { return config_; }
  PriorBank<T>& priors() { return priors_; }
  const PriorBank<T>& priors() const { return priors_; }
  /// Swaps in a different prior bank of matching dimension and size.
  void set_priors(PriorBank<T> bank);

  /// Every trainable tensor, network first then priors, with stable names.
  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const;
  Tensor<T> parameter(const std::string& name) const;

  /// Posterior for every row of the batch.
  Posterior<T> encode(const Batch& batch) const;
  /// Posterior of one word sequence, shapes [1 x d].
  Posterior<T> encode(std::span<const int> words) const;

  /// Teacher-forced token NLL averaged over the predicted (non-padding)
  /// positions of the batch; `h` is [rows x d].
  Tensor<T> reconstruction_loss(const Tensor<T>& h, const Batch& batch) const;
  /// One sequence that starts with BOS and ends with EOS; `h` is [1 x d] or [d].
  Tensor<T> decode_teacher_forced(const Tensor<T>& h, std::span<const int> tokens) const;

  /// Autoregressive generation from BOS; stops at EOS or after `max_len` words.
  /// Returned ids exclude BOS/EOS.
  std::vector<int> decode_sample(std::span<const double> h, double temperature, Rng& rng,
                                 std::size_t max_len) const;
  std::vector<int> decode_sample(std::span<const double> h, double temperature, Rng& rng) const {
    return decode_sample(h, temperature, rng, config_.max_len);
  }

 private:
  Tensor<T> decoder_initial_state(const Tensor<T>& h) const;
  Tensor<T> output_logits(const Tensor<T>& state) const;

  ModelConfig config_;
  Tensor<T> embedding_;
  GruCell<T> encoder_;
  Tensor<T> mu_w_, mu_b_, log_sigma_w_, log_sigma_b_;
  Tensor<T> bridge_w_, bridge_b_;
  GruCell<T> decoder_;
  Tensor<T> out_w_, out_b_;
  PriorBank<T> priors_;
};

}  // namespace gmwae
