#pragma once

// Binary checkpoint format (all integers little-endian):
//
//   "GMWA"                      magic
//   u32 version                 currently 1
//   u32 n, n bytes              UTF-8 JSON: model/train config, class names, counters
//   u32 n, n bytes              UTF-8 vocab, one token per line in id order
//   u32 count                   tensor table entries, each:
//     u32 n, n bytes            name
//     u32 rank, u32[rank]       shape
//     f32[prod(shape)]          raw IEEE-754 values
//
// Tensor names are "param/<name>", "adam.m/<name>" and "adam.v/<name>".

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gmwae/data.hpp"
#include "gmwae/seq_model.hpp"
#include "gmwae/trainer.hpp"

namespace gmwae {

struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  ModelConfig model_config;
  TrainConfig train_config;
  std::vector<std::string> class_names;
  Vocab vocab;
  std::uint64_t model_seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t epochs = 0;
  std::string rng_state;
  std::map<std::string, std::uint64_t> adam_steps;
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& name) const;
};

Checkpoint make_checkpoint(const Seq2SeqModel<float>& model, const Vocab& vocab,
                           std::vector<std::string> class_names, std::uint64_t model_seed = 0);
/// Model parameters plus optimizer moments, counters, and the trainer's random state.
Checkpoint make_checkpoint(const Trainer<float>& trainer, const Seq2SeqModel<float>& model,
                           const Vocab& vocab, std::vector<std::string> class_names,
                           std::uint64_t model_seed = 0);

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on bad magic/version/content and IoError on truncation.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

/// Model with every parameter overwritten from the checkpoint.
Seq2SeqModel<float> model_from_checkpoint(const Checkpoint& ckpt);
/// Optimizer moments, per-tensor step counts, counters and random state.
void restore_trainer(const Checkpoint& ckpt, Trainer<float>& trainer);

/// Writes `{model.bin, vocab.tsv, history.csv}` into `dir`, creating it if needed.
void save_run_dir(const std::filesystem::path& dir, const Checkpoint& ckpt,
                  const std::vector<LossBreakdown>& history);
/// Accepts either a run directory or a model.bin path.
Checkpoint load_run(const std::filesystem::path& path);

}  // namespace gmwae
