#pragma once

// Composite WAE objective, single-class training steps, and the Adam optimizer.
//
// A step on a batch of class j draws prior samples only from component j, so
// the MMD term (and therefore every gradient into the prior bank) touches that
// component alone.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "gmwae/data.hpp"
#include "gmwae/latent.hpp"
#include "gmwae/rng.hpp"
#include "gmwae/seq_model.hpp"
#include "gmwae/tensor.hpp"

namespace gmwae {

struct TrainConfig {
  double lambda_kl = 0.1;
  double lambda_mmd = 10.0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  MmdCrossCoeff mmd_cross_coeff = MmdCrossCoeff::kStandard;
  bool freeze_priors = false;

  void validate() const;
};

struct LossBreakdown {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::size_t cls = 0;
  double recon = 0, kl = 0, mmd = 0, total = 0;
};

/// `step,class,recon,kl,mmd,total` with a header row.
void write_history_csv(std::ostream& out, const std::vector<LossBreakdown>& history);

template <typename T>
struct LossTerms {
  Tensor<T> recon, kl, mmd, total;
};

/// recon + lambda_kl * kl + lambda_mmd * mmd_j for a class-j batch, with the
/// posterior noise and prior noise supplied explicitly (both [rows x d]).
template <typename T>
LossTerms<T> wae_loss(const Seq2SeqModel<T>& model, const Batch& batch, const Tensor<T>& eps_post,
                      const Tensor<T>& eps_prior, const TrainConfig& config);

/// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and per-tensor step counts.
/// Tensors that received no gradient in a step are left untouched, moments included.
template <typename T>
class AdamOptimizer {
 public:
  struct Slot {
    std::string name;
    Tensor<T> param;
    std::vector<T> m, v;
    std::uint64_t steps = 0;
  };

  AdamOptimizer(std::vector<std::pair<std::string, Tensor<T>>> params, double learning_rate);

  void zero_grad();
  void step();

  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }
  double learning_rate() const { return lr_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

 private:
  std::vector<Slot> slots_;
  double lr_;
};

template <typename T>
class Trainer {
 public:
  Trainer(Seq2SeqModel<T>& model, TrainConfig config);

  /// One optimizer update on a single-class batch.
  LossBreakdown train_step(const Batch& batch);
  /// `config.epochs` passes of class_batches over the corpus; returns this call's history.
  std::vector<LossBreakdown> fit(const LabeledCorpus& corpus);

  const std::vector<LossBreakdown>& history() const { return history_; }
  const TrainConfig& config() const { return config_; }
  Seq2SeqModel<T>& model() { return model_; }
  AdamOptimizer<T>& optimizer() { return optimizer_; }
  const AdamOptimizer<T>& optimizer() const { return optimizer_; }
  Rng& rng() { return rng_; }
  std::size_t steps_taken() const { return step_; }
  std::size_t epochs_taken() const { return epoch_; }

  /// Restores counters after loading a checkpoint.
  void restore_progress(std::size_t steps, std::size_t epochs, const std::string& rng_state);
  std::string rng_state() const;

 private:
  Seq2SeqModel<T>& model_;
  TrainConfig config_;
  AdamOptimizer<T> optimizer_;
  Rng rng_;
  std::size_t step_ = 0;
  std::size_t epoch_ = 0;
  std::vector<LossBreakdown> history_;
};

/// Mean MMD of each class over the steps of one epoch (NaN for a class with no steps).
std::vector<double> epoch_class_mmd(const std::vector<LossBreakdown>& history, std::size_t epoch,
                                    std::size_t num_classes);

}  // namespace gmwae
