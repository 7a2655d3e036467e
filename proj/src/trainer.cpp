#include "gmwae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace gmwae {

void TrainConfig::validate() const {
  if (!(lambda_kl >= 0.0) || !(lambda_mmd >= 0.0)) throw ContractError("train config: lambdas must be >= 0");
  if (!(learning_rate > 0.0)) throw ContractError("train config: learning rate must be positive");
  if (batch_size < 2) throw ContractError("train config: batch size must be >= 2");
}

void write_history_csv(std::ostream& out, const std::vector<LossBreakdown>& history) {
  out << "step,class,recon,kl,mmd,total\n";
  out.precision(9);
  for (const auto& h : history) {
    out << h.step << ',' << h.cls << ',' << h.recon << ',' << h.kl << ',' << h.mmd << ',' << h.total
        << '\n';
  }
}

namespace {

template <typename T>
Tensor<T> normal_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<T> v(rows * cols);
  for (auto& x : v) x = static_cast<T>(standard_normal(rng));
  return Tensor<T>::from({rows, cols}, std::move(v));
}

}  // namespace

template <typename T>
LossTerms<T> wae_loss(const Seq2SeqModel<T>& model, const Batch& batch, const Tensor<T>& eps_post,
                      const Tensor<T>& eps_prior, const TrainConfig& config) {
  for (std::size_t label : batch.labels) {
    if (label != batch.cls) throw ContractError("wae_loss: batch mixes classes");
  }
  if (batch.rows() < 2) throw ContractError("wae_loss: batch needs at least 2 rows");
  const Posterior<T> post = model.encode(batch);
  const Tensor<T> h = reparameterize(post, eps_post);
  LossTerms<T> terms;
  terms.recon = model.reconstruction_loss(h, batch);
  terms.kl = kl_unit_variance(post.mu, post.log_sigma);
  const Tensor<T> prior_samples = model.priors().reparameterized(batch.cls, eps_prior);
  const T c = static_cast<T>(default_kernel_constant(model.config().latent_dim));
  terms.mmd = mmd_hat(h, prior_samples, c, config.mmd_cross_coeff);
  terms.total = add(add(terms.recon, scale(terms.kl, static_cast<T>(config.lambda_kl))),
                    scale(terms.mmd, static_cast<T>(config.lambda_mmd)));
  return terms;
}

// ---- Adam -----------------------------------------------------------------

template <typename T>
AdamOptimizer<T>::AdamOptimizer(std::vector<std::pair<std::string, Tensor<T>>> params,
                                double learning_rate)
    : lr_(learning_rate) {
  if (!(learning_rate > 0.0)) throw ContractError("adam: learning rate must be positive");
  for (auto& [name, t] : params) {
    slots_.push_back({name, t, std::vector<T>(t.size(), T(0)), std::vector<T>(t.size(), T(0)), 0});
  }
}

template <typename T>
void AdamOptimizer<T>::zero_grad() {
  for (auto& s : slots_) s.param.clear_grad();
}

template <typename T>
void AdamOptimizer<T>::step() {
  for (auto& s : slots_) {
    if (!s.param.has_grad() || !s.param.requires_grad()) continue;
    ++s.steps;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(s.steps));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(s.steps));
    const auto g = s.param.grad();
    auto p = s.param.mutable_values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      s.m[i] = static_cast<T>(kBeta1 * s.m[i] + (1.0 - kBeta1) * g[i]);
      s.v[i] = static_cast<T>(kBeta2 * s.v[i] + (1.0 - kBeta2) * g[i] * g[i]);
      const double m_hat = s.m[i] / bc1;
      const double v_hat = s.v[i] / bc2;
      p[i] = static_cast<T>(p[i] - lr_ * m_hat / (std::sqrt(v_hat) + kEpsilon));
    }
  }
}

// ---- Trainer --------------------------------------------------------------

template <typename T>
Trainer<T>::Trainer(Seq2SeqModel<T>& model, TrainConfig config)
    : model_(model),
      config_((config.validate(), config)),
      optimizer_((model.priors().set_trainable(!config.freeze_priors), model.named_parameters()),
                 config.learning_rate),
      rng_(config.seed ^ 0x5bd1e9955bd1e995ULL) {}

template <typename T>
LossBreakdown Trainer<T>::train_step(const Batch& batch) {
  if (batch.cls >= model_.priors().size()) {
    throw IndexError("train_step: batch class " + std::to_string(batch.cls) + " has no prior");
  }
  const std::size_t rows = batch.rows(), d = model_.config().latent_dim;
  const Tensor<T> eps_post = normal_noise<T>(rows, d, rng_);
  const Tensor<T> eps_prior = normal_noise<T>(rows, d, rng_);

  optimizer_.zero_grad();
  Tape<T>::current().clear();
  LossTerms<T> terms = wae_loss(model_, batch, eps_post, eps_prior, config_);
  try {
    backward(terms.total);
  } catch (const NumericError& e) {
    std::ostringstream msg;
    msg << e.what() << " (step " << step_ << ", class " << batch.cls << ", recon "
        << terms.recon.item() << ", kl " << terms.kl.item() << ", mmd " << terms.mmd.item() << ")";
    throw NumericError(msg.str());
  }
  optimizer_.step();
  for (const auto& s : optimizer_.slots()) {
    for (T v : s.param.values()) {
      if (!std::isfinite(v)) {
        throw NumericError("train_step: parameter '" + s.name + "' became non-finite at step " +
                           std::to_string(step_));
      }
    }
  }
  LossBreakdown out{step_,
                    epoch_,
                    batch.cls,
                    static_cast<double>(terms.recon.item()),
                    static_cast<double>(terms.kl.item()),
                    static_cast<double>(terms.mmd.item()),
                    static_cast<double>(terms.total.item())};
  ++step_;
  history_.push_back(out);
  return out;
}

template <typename T>
std::vector<LossBreakdown> Trainer<T>::fit(const LabeledCorpus& corpus) {
  if (corpus.num_classes() != model_.priors().size()) {
    throw ContractError("fit: corpus has " + std::to_string(corpus.num_classes()) +
                        " classes but the prior bank has " + std::to_string(model_.priors().size()));
  }
  const std::size_t first = history_.size();
  for (std::size_t e = 0; e < config_.epochs; ++e) {
    for (const Batch& batch : class_batches(corpus, config_.batch_size, rng_)) train_step(batch);
    ++epoch_;
  }
  return {history_.begin() + static_cast<std::ptrdiff_t>(first), history_.end()};
}

template <typename T>
void Trainer<T>::restore_progress(std::size_t steps, std::size_t epochs, const std::string& rng_state) {
  step_ = steps;
  epoch_ = epochs;
  if (!rng_state.empty()) {
    std::istringstream in(rng_state);
    in >> rng_;
    if (!in) throw FormatError("trainer: unreadable random state");
  }
}

template <typename T>
std::string Trainer<T>::rng_state() const {
  std::ostringstream out;
  out << rng_;
  return out.str();
}

std::vector<double> epoch_class_mmd(const std::vector<LossBreakdown>& history, std::size_t epoch,
                                    std::size_t num_classes) {
  std::vector<double> sum(num_classes, 0.0);
  std::vector<std::size_t> count(num_classes, 0);
  for (const auto& h : history) {
    if (h.epoch != epoch || h.cls >= num_classes) continue;
    sum[h.cls] += h.mmd;
    ++count[h.cls];
  }
  std::vector<double> out(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    out[k] = count[k] ? sum[k] / static_cast<double>(count[k]) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

#define GMWAE_INSTANTIATE_TRAINER(T)                                                           \
  template LossTerms<T> wae_loss(const Seq2SeqModel<T>&, const Batch&, const Tensor<T>&,        \
                                 const Tensor<T>&, const TrainConfig&);                         \
  template class AdamOptimizer<T>;                                                              \
  template class Trainer<T>;

GMWAE_INSTANTIATE_TRAINER(float)
GMWAE_INSTANTIATE_TRAINER(double)

}  // namespace gmwae
