#pragma once

// Corpus ingestion, tokenization, vocabulary, and single-class batching.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gmwae/rng.hpp"

namespace gmwae {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr std::size_t kNumSpecial = 4;

/// Lowercased whitespace tokenization.
std::vector<std::string> tokenize(std::string_view text);

struct LabeledLine {
  std::string label;
  std::vector<std::string> tokens;
};

/// Reads `<class_name>\t<sentence>` lines. Blank lines are skipped.
std::vector<LabeledLine> read_labeled_tsv(std::istream& in);
std::vector<LabeledLine> read_labeled_tsv(const std::filesystem::path& path);

class Vocab {
 public:
  Vocab();
  /// Frequency-ranked; ties broken lexicographically; at most `max_size` ids including specials.
  static Vocab build(std::span<const LabeledLine> lines, std::size_t max_size = 30000);
  /// Rebuilds from an id-ordered token list whose first four entries are the specials.
  static Vocab from_tokens(std::vector<std::string> id_to_token);

  std::size_t size() const { return id_to_token_.size(); }
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  /// Drops PAD/BOS/EOS.
  std::vector<std::string> decode(std::span<const int> ids) const;

  /// `<id>\t<token>` per line.
  void write_tsv(std::ostream& out) const;
  static Vocab read_tsv(std::istream& in);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

struct Sentence {
  std::size_t cls = 0;
  std::vector<int> ids;  // word ids only, no BOS/EOS
};

class LabeledCorpus {
 public:
  /// Class indices follow `class_names` when given, else first appearance in `lines`.
  static LabeledCorpus build(std::span<const LabeledLine> lines, const Vocab& vocab,
                             std::size_t max_len, std::vector<std::string> class_names = {});

  const std::vector<Sentence>& sentences() const { return sentences_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t num_classes() const { return class_names_.size(); }
  std::size_t size() const { return sentences_.size(); }
  std::vector<std::size_t> class_sizes() const;

  /// Same sentences, every label collapsed to class 0.
  LabeledCorpus single_class(const std::string& name = "all") const;

 private:
  std::vector<Sentence> sentences_;
  std::vector<std::string> class_names_;
};

/// Padded id matrix; each row is BOS, words, EOS, then PAD.
struct Batch {
  std::size_t cls = 0;
  std::vector<std::size_t> labels;   // per row
  std::vector<std::size_t> lengths;  // per row, including BOS and EOS
  std::size_t width = 0;
  std::vector<int> ids;              // rows x width, row-major

  std::size_t rows() const { return lengths.size(); }
  int at(std::size_t r, std::size_t t) const { return ids[r * width + t]; }
  std::size_t num_words(std::size_t r) const { return lengths[r] - 2; }
};

/// Batch of word sequences; `labels` defaults to `cls` for every row.
Batch make_batch(std::size_t cls, std::span<const std::vector<int>> sequences,
                 std::vector<std::size_t> labels = {});

/// One epoch of single-class batches: shuffles within each class, drops each class's
/// partial final batch (kept only when it is the class's sole batch and has >= 2 rows),
/// and interleaves classes round-robin over a shuffled order.
std::vector<Batch> class_batches(const LabeledCorpus& corpus, std::size_t batch_size, Rng& rng);

}  // namespace gmwae
