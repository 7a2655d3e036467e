#pragma once

// Generation quality metrics: distinct-n, unigram entropy, Kneser-Ney trigram
// perplexity, a bag-of-n-gram style classifier, Jensen-Shannon divergence, and
// per-style confusion reports.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gmwae/data.hpp"
#include "gmwae/generation.hpp"
#include "gmwae/latent.hpp"
#include "gmwae/rng.hpp"
#include "gmwae/seq_model.hpp"

namespace gmwae {

using TokenSentence = std::vector<std::string>;

/// Unique n-grams / total n-gram tokens over all sentences.
double distinct_n(std::span<const TokenSentence> sentences, std::size_t n);

/// Shannon entropy in bits of the unigram distribution, ignoring <pad>, <s>, </s>.
double unigram_entropy(std::span<const TokenSentence> sentences);

/// Jensen-Shannon divergence with base-2 logs, in [0, 1].
double jsd(std::span<const double> p, std::span<const double> q);

/// Interpolated Kneser-Ney trigram model. Sentences are padded with two <s>
/// and one </s>; out-of-vocabulary words score as <unk>, and the unigram level
/// interpolates with a uniform distribution over the vocabulary.
class TrigramKN {
 public:
  static constexpr double kDefaultDiscount = 0.75;

  TrigramKN() = default;
  static TrigramKN fit(std::span<const TokenSentence> corpus, double discount = kDefaultDiscount);

  bool fitted() const { return fitted_; }
  /// p(w | u v).
  double prob(const std::string& u, const std::string& v, const std::string& w) const;
  /// Natural-log probability of a sentence, </s> included.
  double log_prob(const TokenSentence& sentence) const;
  /// exp(-(1/T) sum log p) over all T predicted tokens.
  double perplexity(std::span<const TokenSentence> sentences) const;

  /// Every token the model can predict (words, </s>, <unk>).
  std::vector<std::string> vocabulary() const;
  /// Every (u, v) context observed in training.
  std::vector<std::pair<std::string, std::string>> contexts() const;

 private:
  int index(const std::string& token) const;
  double prob_ids(int u, int v, int w) const;
  double unigram(int w) const;
  double bigram(int v, int w) const;

  bool fitted_ = false;
  double discount_ = kDefaultDiscount;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  std::size_t predictable_ = 0;  // |V| for the uniform floor

  std::unordered_map<std::uint64_t, double> tri_count_;       // c(u v w)
  std::unordered_map<std::uint64_t, double> tri_context_;     // c(u v .)
  std::unordered_map<std::uint64_t, double> tri_types_;       // N1+(u v .)
  std::unordered_map<std::uint64_t, double> bi_cont_;         // N1+(. v w)
  std::unordered_map<std::uint64_t, double> bi_cont_context_; // N1+(. v .)
  std::unordered_map<std::uint64_t, double> bi_types_;        // |{w : N1+(. v w) > 0}|
  std::vector<double> uni_cont_;                              // N1+(. w)
  double uni_total_ = 0.0;
  double uni_types_ = 0.0;
};

struct ClassifierConfig {
  bool use_bigrams = true;
  std::size_t max_epochs = 200;
  double grad_tolerance = 1e-4;
  double learning_rate = 0.1;
  double l2 = 1e-4;
};

/// Multinomial logistic regression on bag-of-{1,2}-gram counts.
class StyleClassifier {
 public:
  StyleClassifier() = default;
  static StyleClassifier fit(std::span<const TokenSentence> sentences,
                             std::span<const std::size_t> labels, std::size_t num_classes,
                             ClassifierConfig config = {});

  bool trained() const { return trained_; }
  std::size_t num_classes() const { return num_classes_; }
  /// Class posterior.
  std::vector<double> predict(const TokenSentence& sentence) const;
  std::size_t predict_class(const TokenSentence& sentence) const;
  double accuracy(std::span<const TokenSentence> sentences, std::span<const std::size_t> labels) const;
  std::size_t epochs_run() const { return epochs_run_; }
  double final_grad_norm() const { return final_grad_norm_; }

 private:
  std::vector<std::pair<std::size_t, double>> features(const TokenSentence& sentence) const;

  bool trained_ = false;
  ClassifierConfig config_;
  std::size_t num_classes_ = 0;
  std::unordered_map<std::string, std::size_t> feature_index_;
  std::vector<double> weights_;  // features x classes
  std::vector<double> bias_;
  std::size_t epochs_run_ = 0;
  double final_grad_norm_ = 0.0;
};

struct ReportRow {
  std::string label;
  std::vector<double> weights;
  std::vector<double> percent;    // averaged classifier posterior, in percent
  double jsd = 0.0;               // jsd(weights, averaged posterior)
  double top1_in_support = 0.0;   // fraction of samples whose top class has nonzero weight
};

struct MetricReport {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::string> class_names;
  std::vector<ReportRow> rows;
  double distinct1 = kUnset, distinct2 = kUnset, entropy = kUnset, perplexity = kUnset,
         accuracy = kUnset;

  /// `row,<weight per class>,<percent per class>,jsd,top1_in_support`.
  void write_csv(std::ostream& out) const;
  /// `metric,value` for the corpus-level numbers that were computed.
  void write_metrics_csv(std::ostream& out) const;
  /// Aligned table: row label, per-class %, JSD; then the corpus-level metrics.
  void write_table(std::ostream& out) const;
};

/// M single-style rows followed by every unordered pair at (0.5, 0.5).
std::vector<StyleWeights> standard_report_rows(std::size_t num_classes);
std::string row_label(const StyleWeights& weights, const std::vector<std::string>& class_names);

/// For each row: generate `samples_per_row` sentences, average the classifier
/// posteriors, and compare with the row's weights. `accuracy` covers the
/// one-hot rows. Generated sentences per row go to `samples_out` when given.
template <typename T>
MetricReport style_report(const Seq2SeqModel<T>& model, const Vocab& vocab,
                          const StyleClassifier& clf, std::span<const StyleWeights> rows,
                          const std::vector<std::string>& class_names, std::size_t samples_per_row,
                          double temperature, Rng& rng,
                          std::vector<std::vector<TokenSentence>>* samples_out = nullptr);

}  // namespace gmwae
