#include "gmwae/seq_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gmwae {

void ModelConfig::validate() const {
  if (vocab_size <= kNumSpecial) throw ContractError("model config: vocab_size must exceed the 4 reserved ids");
  if (embed_dim == 0 || hidden_dim == 0 || latent_dim == 0 || num_classes == 0) {
    throw ContractError("model config: all extents must be positive");
  }
  if (max_len < 2) throw ContractError("model config: max_len must be >= 2");
  if (!(prior_init_scale >= 0.0) || !std::isfinite(prior_init_scale)) {
    throw ContractError("model config: prior_init_scale must be finite and >= 0");
  }
}

namespace {

template <typename T>
Tensor<T> uniform_param(Shape shape, double bound, Rng& rng) {
  std::vector<T> values(shape_size(shape));
  for (auto& v : values) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
  return Tensor<T>::from(std::move(shape), std::move(values), true);
}

template <typename T>
GruCell<T> make_gru(std::size_t input, std::size_t hidden, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  const std::size_t fan = input + hidden;
  return {uniform_param<T>({fan, hidden}, bound, rng), uniform_param<T>({fan, hidden}, bound, rng),
          uniform_param<T>({fan, hidden}, bound, rng), Tensor<T>::zeros({1, hidden}, true),
          Tensor<T>::zeros({1, hidden}, true), Tensor<T>::zeros({1, hidden}, true)};
}

Rng prior_stream(std::uint64_t seed) { return Rng(seed ^ 0x9e3779b97f4a7c15ULL); }

template <typename T>
Tensor<T> row_mask(const Batch& batch, std::size_t t, std::size_t width) {
  std::vector<T> mask(batch.rows() * width, T(0));
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    if (t < batch.num_words(r)) std::fill_n(mask.begin() + r * width, width, T(1));
  }
  return Tensor<T>::from({batch.rows(), width}, std::move(mask));
}

}  // namespace

template <typename T>
Tensor<T> gru_step(const GruCell<T>& cell, const Tensor<T>& x, const Tensor<T>& h) {
  if (x.shape().size() != 2 || h.shape().size() != 2 || x.shape()[0] != h.shape()[0] ||
      x.shape()[1] != cell.input_dim() || h.shape()[1] != cell.hidden_dim()) {
    throw DimensionError("gru_step: input " + shape_str(x.shape()) + " and state " +
                         shape_str(h.shape()) + " do not fit a cell with input " +
                         std::to_string(cell.input_dim()) + " and hidden " +
                         std::to_string(cell.hidden_dim()));
  }
  Tensor<T> xh = concat_cols(x, h);
  Tensor<T> z = sigmoid(add(matmul(xh, cell.w_update), cell.b_update));
  Tensor<T> r = sigmoid(add(matmul(xh, cell.w_reset), cell.b_reset));
  Tensor<T> candidate = tanh(add(matmul(concat_cols(x, mul(r, h)), cell.w_candidate), cell.b_candidate));
  return add(h, mul(z, sub(candidate, h)));
}

template <typename T>
Tensor<T> reparameterize(const Posterior<T>& post, const Tensor<T>& eps) {
  if (eps.shape() != post.mu.shape() || post.mu.shape() != post.log_sigma.shape()) {
    throw DimensionError("reparameterize: noise " + shape_str(eps.shape()) + " vs posterior " +
                         shape_str(post.mu.shape()));
  }
  return add(post.mu, mul(exp(post.log_sigma), eps));
}

template <typename T>
Tensor<T> reparameterize(const Posterior<T>& post, Rng& rng) {
  std::vector<T> eps(post.mu.size());
  for (auto& e : eps) e = static_cast<T>(standard_normal(rng));
  return reparameterize(post, Tensor<T>::from(post.mu.shape(), std::move(eps)));
}

int select_token(std::span<const double> logits, double temperature, Rng& rng) {
  if (logits.empty()) throw ContractError("select_token: no logits");
  if (!(temperature >= 0.0)) throw ContractError("select_token: temperature must be >= 0");
  if (temperature == 0.0) {
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp((logits[i] - peak) / temperature);
    total += probs[i];
  }
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    u -= probs[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  // Rounding left a sliver of mass; take the last token with nonzero probability.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

// ---- Seq2SeqModel ---------------------------------------------------------

template <typename T>
Seq2SeqModel<T>::Seq2SeqModel(ModelConfig config, std::uint64_t seed, bool trainable_priors)
    : config_((config.validate(), config)),
      priors_([&] {
        Rng rng = prior_stream(seed);
        return PriorBank<T>(config.num_classes, config.latent_dim, trainable_priors, rng,
                            config.prior_init_scale);
      }()) {
  Rng rng(seed);
  const std::size_t v = config_.vocab_size, e = config_.embed_dim, hd = config_.hidden_dim,
                    d = config_.latent_dim;
  embedding_ = uniform_param<T>({v, e}, 0.1, rng);
  encoder_ = make_gru<T>(e, hd, rng);
  const double from_hidden = 1.0 / std::sqrt(static_cast<double>(hd));
  const double from_latent = 1.0 / std::sqrt(static_cast<double>(d));
  mu_w_ = uniform_param<T>({hd, d}, from_hidden, rng);
  mu_b_ = Tensor<T>::zeros({1, d}, true);
  log_sigma_w_ = uniform_param<T>({hd, d}, from_hidden, rng);
  log_sigma_b_ = Tensor<T>::zeros({1, d}, true);
  bridge_w_ = uniform_param<T>({d, hd}, from_latent, rng);
  bridge_b_ = Tensor<T>::zeros({1, hd}, true);
  decoder_ = make_gru<T>(e + d, hd, rng);
  out_w_ = uniform_param<T>({hd, v}, from_hidden, rng);
  out_b_ = Tensor<T>::zeros({1, v}, true);
}

template <typename T>
void Seq2SeqModel<T>::set_priors(PriorBank<T> bank) {
  if (bank.dim() != config_.latent_dim || bank.size() != config_.num_classes) {
    throw ContractError("set_priors: bank shape does not match model config");
  }
  priors_ = std::move(bank);
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> Seq2SeqModel<T>::named_parameters() const {
  std::vector<std::pair<std::string, Tensor<T>>> out = {
      {"embedding", embedding_},
      {"encoder.w_update", encoder_.w_update},
      {"encoder.w_reset", encoder_.w_reset},
      {"encoder.w_candidate", encoder_.w_candidate},
      {"encoder.b_update", encoder_.b_update},
      {"encoder.b_reset", encoder_.b_reset},
      {"encoder.b_candidate", encoder_.b_candidate},
      {"posterior.mu_w", mu_w_},
      {"posterior.mu_b", mu_b_},
      {"posterior.log_sigma_w", log_sigma_w_},
      {"posterior.log_sigma_b", log_sigma_b_},
      {"bridge.w", bridge_w_},
      {"bridge.b", bridge_b_},
      {"decoder.w_update", decoder_.w_update},
      {"decoder.w_reset", decoder_.w_reset},
      {"decoder.w_candidate", decoder_.w_candidate},
      {"decoder.b_update", decoder_.b_update},
      {"decoder.b_reset", decoder_.b_reset},
      {"decoder.b_candidate", decoder_.b_candidate},
      {"output.w", out_w_},
      {"output.b", out_b_},
  };
  for (std::size_t k = 0; k < priors_.size(); ++k) {
    out.emplace_back("prior." + std::to_string(k) + ".mu", priors_[k].mu);
    out.emplace_back("prior." + std::to_string(k) + ".log_sigma", priors_[k].log_sigma);
  }
  return out;
}

template <typename T>
Tensor<T> Seq2SeqModel<T>::parameter(const std::string& name) const {
  for (auto& [n, t] : named_parameters()) {
    if (n == name) return t;
  }
  throw ContractError("no parameter named '" + name + "'");
}

template <typename T>
Posterior<T> Seq2SeqModel<T>::encode(const Batch& batch) const {
  const std::size_t rows = batch.rows();
  std::size_t longest = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t n = batch.num_words(r);
    if (n == 0) throw ContractError("encode: empty sentence");
    if (n > config_.max_len) throw ContractError("encode: sentence longer than max_len");
    longest = std::max(longest, n);
  }
  for (int id : batch.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw VocabError("encode: token id " + std::to_string(id) + " outside vocab of " +
                       std::to_string(config_.vocab_size));
    }
  }
  const std::size_t hd = config_.hidden_dim;
  Tensor<T> state = Tensor<T>::zeros({rows, hd});
  std::vector<int> step_ids(rows);
  for (std::size_t t = 0; t < longest; ++t) {
    bool partial = false;
    for (std::size_t r = 0; r < rows; ++r) {
      const bool live = t < batch.num_words(r);
      partial = partial || !live;
      step_ids[r] = live ? batch.at(r, t + 1) : kPad;
    }
    Tensor<T> next = gru_step(encoder_, gather_rows(embedding_, step_ids), state);
    // Finished rows keep their final state.
    state = partial ? add(state, mul(row_mask<T>(batch, t, hd), sub(next, state))) : next;
  }
  return {add(matmul(state, mu_w_), mu_b_), add(matmul(state, log_sigma_w_), log_sigma_b_)};
}

template <typename T>
Posterior<T> Seq2SeqModel<T>::encode(std::span<const int> words) const {
  if (words.empty()) throw ContractError("encode: empty sentence");
  std::vector<std::vector<int>> one{std::vector<int>(words.begin(), words.end())};
  return encode(make_batch(0, one));
}

template <typename T>
Tensor<T> Seq2SeqModel<T>::decoder_initial_state(const Tensor<T>& h) const {
  return add(matmul(h, bridge_w_), bridge_b_);
}

template <typename T>
Tensor<T> Seq2SeqModel<T>::output_logits(const Tensor<T>& state) const {
  return add(matmul(state, out_w_), out_b_);
}

template <typename T>
Tensor<T> Seq2SeqModel<T>::reconstruction_loss(const Tensor<T>& h, const Batch& batch) const {
  const std::size_t rows = batch.rows();
  if (h.shape() != Shape{rows, config_.latent_dim}) {
    throw DimensionError("reconstruction_loss: latent " + shape_str(h.shape()) + " for " +
                         std::to_string(rows) + " rows of dimension " +
                         std::to_string(config_.latent_dim));
  }
  if (batch.width > config_.max_len + 2) {
    throw ContractError("reconstruction_loss: sequence longer than max_len");
  }
  std::size_t predicted = 0;
  for (std::size_t len : batch.lengths) predicted += len - 1;
  const T inv = T(1) / static_cast<T>(predicted);

  Tensor<T> state = decoder_initial_state(h);
  Tensor<T> total;
  std::vector<int> inputs(rows), targets(rows);
  std::vector<T> weights(rows);
  for (std::size_t t = 0; t + 1 < batch.width; ++t) {
    for (std::size_t r = 0; r < rows; ++r) {
      const bool live = t + 1 < batch.lengths[r];
      inputs[r] = batch.at(r, t);
      targets[r] = live ? batch.at(r, t + 1) : kPad;
      weights[r] = live ? inv : T(0);
    }
    Tensor<T> x = concat_cols(gather_rows(embedding_, inputs), h);
    state = gru_step(decoder_, x, state);
    Tensor<T> step_loss = softmax_cross_entropy(output_logits(state), std::span<const int>(targets),
                                                     std::span<const T>(weights));
    total = total.defined() ? add(total, step_loss) : step_loss;
  }
  return total;
}

template <typename T>
Tensor<T> Seq2SeqModel<T>::decode_teacher_forced(const Tensor<T>& h,
                                                 std::span<const int> tokens) const {
  if (tokens.size() < 2 || tokens.front() != kBos || tokens.back() != kEos) {
    throw ContractError("decode_teacher_forced: tokens must start with BOS and end with EOS");
  }
  if (tokens.size() > config_.max_len + 2) {
    throw ContractError("decode_teacher_forced: sequence longer than max_len");
  }
  if (h.size() != config_.latent_dim) throw DimensionError("decode_teacher_forced: latent dimension mismatch");
  Batch batch;
  batch.labels = {0};
  batch.lengths = {tokens.size()};
  batch.width = tokens.size();
  batch.ids.assign(tokens.begin(), tokens.end());
  if (h.shape().size() == 2) return reconstruction_loss(h, batch);
  // A bare [d] vector is taken as a constant row.
  std::vector<T> row(h.values().begin(), h.values().end());
  return reconstruction_loss(Tensor<T>::from({1, h.size()}, std::move(row)), batch);
}

template <typename T>
std::vector<int> Seq2SeqModel<T>::decode_sample(std::span<const double> h, double temperature,
                                                Rng& rng, std::size_t max_len) const {
  if (h.size() != config_.latent_dim) throw DimensionError("decode_sample: latent dimension mismatch");
  if (!(temperature >= 0.0)) throw ContractError("decode_sample: temperature must be >= 0");
  NoGradGuard no_grad;
  std::vector<T> hv(h.begin(), h.end());
  const Tensor<T> latent = Tensor<T>::from({1, h.size()}, std::move(hv));
  Tensor<T> state = decoder_initial_state(latent);
  std::vector<int> out;
  std::vector<double> logits(config_.vocab_size);
  int prev = kBos;
  while (out.size() < max_len) {
    const int ids[1] = {prev};
    state = gru_step(decoder_, concat_cols(gather_rows(embedding_, ids), latent), state);
    const Tensor<T> step_logits = output_logits(state);
    std::copy(step_logits.values().begin(), step_logits.values().end(), logits.begin());
    const int next = select_token(logits, temperature, rng);
    if (next == kEos) break;
    out.push_back(next);
    prev = next;
  }
  return out;
}

#define GMWAE_INSTANTIATE_SEQ(T)                                                    \
  template Tensor<T> gru_step(const GruCell<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> reparameterize(const Posterior<T>&, const Tensor<T>&);          \
  template Tensor<T> reparameterize(const Posterior<T>&, Rng&);                      \
  template class Seq2SeqModel<T>;

GMWAE_INSTANTIATE_SEQ(float)
GMWAE_INSTANTIATE_SEQ(double)

}  // namespace gmwae
