#include "gmwae/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace gmwae {

namespace {

const std::string kBosTok = "<s>";
const std::string kEosTok = "</s>";
const std::string kUnkTok = "<unk>";
const std::string kPadTok = "<pad>";

std::string join_ngram(const TokenSentence& s, std::size_t start, std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) key += '\x1f';
    key += s[start + i];
  }
  return key;
}

constexpr std::uint64_t kIdBits = 21;

std::uint64_t key2(int a, int b) {
  return (static_cast<std::uint64_t>(a) << kIdBits) | static_cast<std::uint64_t>(b);
}
std::uint64_t key3(int a, int b, int c) {
  return (static_cast<std::uint64_t>(a) << (2 * kIdBits)) | key2(b, c);
}

double lookup(const std::unordered_map<std::uint64_t, double>& m, std::uint64_t k) {
  auto it = m.find(k);
  return it == m.end() ? 0.0 : it->second;
}

void check_simplex(std::span<const double> p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw ContractError(std::string("jsd: negative entry in ") + name);
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ContractError(std::string("jsd: ") + name + " does not sum to 1");
}

}  // namespace

double distinct_n(std::span<const TokenSentence> sentences, std::size_t n) {
  if (n == 0) throw ContractError("distinct_n: n must be positive");
  std::unordered_set<std::string> unique;
  std::size_t total = 0;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      unique.insert(join_ngram(s, i, n));
      ++total;
    }
  }
  if (total == 0) throw UndefinedMetricError("distinct_n: no " + std::to_string(n) + "-grams");
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double unigram_entropy(std::span<const TokenSentence> sentences) {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : sentences) {
    for (const auto& tok : s) {
      if (tok == kPadTok || tok == kBosTok || tok == kEosTok) continue;
      ++counts[tok];
      ++total;
    }
  }
  if (total == 0) throw UndefinedMetricError("unigram_entropy: no tokens");
  double h = 0.0;
  for (const auto& [tok, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw ContractError("jsd: vectors must have equal nonzero length");
  check_simplex(p, "p");
  check_simplex(q, "q");
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) out += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) out += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::clamp(out, 0.0, 1.0);
}

// ---- TrigramKN ------------------------------------------------------------

TrigramKN TrigramKN::fit(std::span<const TokenSentence> corpus, double discount) {
  if (corpus.empty()) throw ContractError("kn_fit: empty corpus");
  if (!(discount > 0.0 && discount < 1.0)) throw ContractError("kn_fit: discount must be in (0, 1)");
  TrigramKN lm;
  lm.discount_ = discount;
  auto intern = [&lm](const std::string& tok) {
    auto [it, added] = lm.ids_.emplace(tok, static_cast<int>(lm.tokens_.size()));
    if (added) lm.tokens_.push_back(tok);
    return it->second;
  };
  const int bos = intern(kBosTok);
  intern(kEosTok);
  intern(kUnkTok);

  std::unordered_map<std::uint64_t, double> tri;
  for (const auto& s : corpus) {
    std::vector<int> ids = {bos, bos};
    for (const auto& tok : s) ids.push_back(intern(tok));
    ids.push_back(lm.ids_.at(kEosTok));
    for (std::size_t i = 2; i < ids.size(); ++i) tri[key3(ids[i - 2], ids[i - 1], ids[i])] += 1.0;
  }
  if (lm.tokens_.size() >= (1u << kIdBits)) throw ContractError("kn_fit: vocabulary too large");

  const std::uint64_t mask = (1ull << kIdBits) - 1;
  for (const auto& [k, c] : tri) {
    const int u = static_cast<int>(k >> (2 * kIdBits));
    const int v = static_cast<int>((k >> kIdBits) & mask);
    const int w = static_cast<int>(k & mask);
    lm.tri_count_[k] = c;
    lm.tri_context_[key2(u, v)] += c;
    lm.tri_types_[key2(u, v)] += 1.0;
    lm.bi_cont_[key2(v, w)] += 1.0;
  }
  lm.uni_cont_.assign(lm.tokens_.size(), 0.0);
  for (const auto& [k, c] : lm.bi_cont_) {
    const int v = static_cast<int>(k >> kIdBits);
    const int w = static_cast<int>(k & mask);
    lm.bi_cont_context_[static_cast<std::uint64_t>(v)] += c;
    lm.bi_types_[static_cast<std::uint64_t>(v)] += 1.0;
    lm.uni_cont_[w] += 1.0;
  }
  for (double c : lm.uni_cont_) {
    lm.uni_total_ += c;
    if (c > 0.0) lm.uni_types_ += 1.0;
  }
  lm.predictable_ = lm.tokens_.size() - 1;  // everything but <s>
  lm.fitted_ = true;
  return lm;
}

int TrigramKN::index(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? ids_.at(kUnkTok) : it->second;
}

double TrigramKN::unigram(int w) const {
  const double floor = 1.0 / static_cast<double>(predictable_);
  return std::max(uni_cont_[w] - discount_, 0.0) / uni_total_ +
         discount_ * uni_types_ / uni_total_ * floor;
}

double TrigramKN::bigram(int v, int w) const {
  const double ctx = lookup(bi_cont_context_, static_cast<std::uint64_t>(v));
  if (ctx == 0.0) return unigram(w);
  const double c = lookup(bi_cont_, key2(v, w));
  const double types = lookup(bi_types_, static_cast<std::uint64_t>(v));
  return std::max(c - discount_, 0.0) / ctx + discount_ * types / ctx * unigram(w);
}

double TrigramKN::prob_ids(int u, int v, int w) const {
  const double ctx = lookup(tri_context_, key2(u, v));
  if (ctx == 0.0) return bigram(v, w);
  const double c = lookup(tri_count_, key3(u, v, w));
  const double types = lookup(tri_types_, key2(u, v));
  return std::max(c - discount_, 0.0) / ctx + discount_ * types / ctx * bigram(v, w);
}

double TrigramKN::prob(const std::string& u, const std::string& v, const std::string& w) const {
  if (!fitted_) throw StateError("kn: model queried before fit");
  return prob_ids(index(u), index(v), index(w));
}

double TrigramKN::log_prob(const TokenSentence& sentence) const {
  if (!fitted_) throw StateError("kn: model queried before fit");
  const int bos = ids_.at(kBosTok);
  int u = bos, v = bos;
  double lp = 0.0;
  for (const auto& tok : sentence) {
    const int w = index(tok);
    lp += std::log(prob_ids(u, v, w));
    u = v;
    v = w;
  }
  return lp + std::log(prob_ids(u, v, ids_.at(kEosTok)));
}

double TrigramKN::perplexity(std::span<const TokenSentence> sentences) const {
  if (!fitted_) throw StateError("kn: model queried before fit");
  if (sentences.empty()) throw ContractError("kn_perplexity: no sentences");
  double lp = 0.0;
  std::size_t tokens = 0;
  for (const auto& s : sentences) {
    lp += log_prob(s);
    tokens += s.size() + 1;
  }
  return std::exp(-lp / static_cast<double>(tokens));
}

std::vector<std::string> TrigramKN::vocabulary() const {
  std::vector<std::string> out;
  for (const auto& t : tokens_) {
    if (t != kBosTok) out.push_back(t);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> TrigramKN::contexts() const {
  const std::uint64_t mask = (1ull << kIdBits) - 1;
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, c] : tri_context_) {
    out.emplace_back(tokens_[k >> kIdBits], tokens_[k & mask]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- StyleClassifier ------------------------------------------------------

std::vector<std::pair<std::size_t, double>> StyleClassifier::features(const TokenSentence& s) const {
  std::map<std::size_t, double> counts;
  auto add = [&](const std::string& key) {
    auto it = feature_index_.find(key);
    if (it != feature_index_.end()) counts[it->second] += 1.0;
  };
  for (const auto& tok : s) add(tok);
  if (config_.use_bigrams) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) add(join_ngram(s, i, 2));
  }
  return {counts.begin(), counts.end()};
}

StyleClassifier StyleClassifier::fit(std::span<const TokenSentence> sentences,
                                     std::span<const std::size_t> labels, std::size_t num_classes,
                                     ClassifierConfig config) {
  if (sentences.size() != labels.size() || sentences.empty()) {
    throw ContractError("classifier_fit: need one label per sentence");
  }
  std::vector<std::size_t> per_class(num_classes, 0);
  for (std::size_t y : labels) {
    if (y >= num_classes) throw IndexError("classifier_fit: label out of range");
    ++per_class[y];
  }
  const auto populated = std::count_if(per_class.begin(), per_class.end(),
                                       [](std::size_t c) { return c > 0; });
  if (num_classes < 2 || populated < 2) throw ContractError("classifier_fit: need at least two classes");

  StyleClassifier clf;
  clf.config_ = config;
  clf.num_classes_ = num_classes;
  std::set<std::string> keys;
  for (const auto& s : sentences) {
    for (const auto& tok : s) keys.insert(tok);
    if (config.use_bigrams) {
      for (std::size_t i = 0; i + 1 < s.size(); ++i) keys.insert(join_ngram(s, i, 2));
    }
  }
  for (const auto& k : keys) clf.feature_index_.emplace(k, clf.feature_index_.size());

  std::vector<std::vector<std::pair<std::size_t, double>>> x;
  x.reserve(sentences.size());
  for (const auto& s : sentences) x.push_back(clf.features(s));

  const std::size_t nf = clf.feature_index_.size(), m = num_classes;
  clf.weights_.assign(nf * m, 0.0);
  clf.bias_.assign(m, 0.0);
  // Full-batch Adam on mean cross-entropy + (l2 / 2) |W|^2.
  std::vector<double> gw(nf * m), gb(m), mw(nf * m, 0.0), vw(nf * m, 0.0), mb(m, 0.0), vb(m, 0.0);
  std::vector<double> logits(m);
  const double inv_n = 1.0 / static_cast<double>(sentences.size());
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < nf * m; ++i) gw[i] = config.l2 * clf.weights_[i];
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
      for (std::size_t c = 0; c < m; ++c) logits[c] = clf.bias_[c];
      for (const auto& [f, v] : x[n])
        for (std::size_t c = 0; c < m; ++c) logits[c] += v * clf.weights_[f * m + c];
      const double peak = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (auto& l : logits) z += (l = std::exp(l - peak));
      for (std::size_t c = 0; c < m; ++c) {
        const double err = (logits[c] / z - (c == labels[n] ? 1.0 : 0.0)) * inv_n;
        gb[c] += err;
        for (const auto& [f, v] : x[n]) gw[f * m + c] += err * v;
      }
    }
    double norm2 = 0.0;
    for (double g : gw) norm2 += g * g;
    for (double g : gb) norm2 += g * g;
    clf.final_grad_norm_ = std::sqrt(norm2);
    clf.epochs_run_ = epoch;
    if (clf.final_grad_norm_ < config.grad_tolerance) break;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(epoch));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(epoch));
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& mm,
                      std::vector<double>& vv) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        mm[i] = b1 * mm[i] + (1 - b1) * g[i];
        vv[i] = b2 * vv[i] + (1 - b2) * g[i] * g[i];
        p[i] -= config.learning_rate * (mm[i] / bc1) / (std::sqrt(vv[i] / bc2) + eps);
      }
    };
    update(clf.weights_, gw, mw, vw);
    update(clf.bias_, gb, mb, vb);
  }
  clf.trained_ = true;
  return clf;
}

std::vector<double> StyleClassifier::predict(const TokenSentence& sentence) const {
  if (!trained_) throw StateError("classifier: predict before fit");
  const std::size_t m = num_classes_;
  std::vector<double> logits(bias_);
  for (const auto& [f, v] : features(sentence))
    for (std::size_t c = 0; c < m; ++c) logits[c] += v * weights_[f * m + c];
  const double peak = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto& l : logits) z += (l = std::exp(l - peak));
  for (auto& l : logits) l /= z;
  return logits;
}

std::size_t StyleClassifier::predict_class(const TokenSentence& sentence) const {
  const auto p = predict(sentence);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

double StyleClassifier::accuracy(std::span<const TokenSentence> sentences,
                                 std::span<const std::size_t> labels) const {
  if (sentences.size() != labels.size() || sentences.empty()) {
    throw ContractError("classifier accuracy: need one label per sentence");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) hits += predict_class(sentences[i]) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(sentences.size());
}

// ---- reports --------------------------------------------------------------

std::vector<StyleWeights> standard_report_rows(std::size_t num_classes) {
  std::vector<StyleWeights> rows;
  for (std::size_t k = 0; k < num_classes; ++k) rows.push_back(StyleWeights::one_hot(num_classes, k));
  for (std::size_t a = 0; a < num_classes; ++a)
    for (std::size_t b = a + 1; b < num_classes; ++b) rows.push_back(StyleWeights::pair(num_classes, a, b));
  return rows;
}

std::string row_label(const StyleWeights& weights, const std::vector<std::string>& class_names) {
  std::string out;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] == 0.0) continue;
    if (!out.empty()) out += '+';
    out += k < class_names.size() ? class_names[k] : std::to_string(k);
  }
  return out;
}

template <typename T>
MetricReport style_report(const Seq2SeqModel<T>& model, const Vocab& vocab,
                          const StyleClassifier& clf, std::span<const StyleWeights> rows,
                          const std::vector<std::string>& class_names, std::size_t samples_per_row,
                          double temperature, Rng& rng,
                          std::vector<std::vector<TokenSentence>>* samples_out) {
  const std::size_t m = model.priors().size();
  if (clf.num_classes() != m) throw ContractError("style_report: classifier and model disagree on class count");
  if (vocab.size() != model.config().vocab_size) throw ContractError("style_report: vocab does not match model");
  if (samples_per_row == 0) throw ContractError("style_report: samples_per_row must be positive");
  MetricReport report;
  report.class_names = class_names;
  std::size_t hits = 0, conditioned = 0;
  if (samples_out) samples_out->clear();
  for (const auto& w : rows) {
    ReportRow row;
    row.label = row_label(w, class_names);
    row.weights = w.values();
    std::vector<double> avg(m, 0.0);
    std::size_t in_support = 0;
    const bool one_hot = std::count(w.values().begin(), w.values().end(), 1.0) == 1;
    std::vector<TokenSentence> texts;
    for (const auto& ids : generate_interpolated(model, w, samples_per_row, temperature, rng)) {
      TokenSentence text = vocab.decode(ids);
      const auto p = clf.predict(text);
      for (std::size_t c = 0; c < m; ++c) avg[c] += p[c];
      const std::size_t top = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      in_support += w[top] > 0.0;
      texts.push_back(std::move(text));
    }
    for (auto& a : avg) a /= static_cast<double>(samples_per_row);
    row.jsd = jsd(w.values(), avg);
    for (double a : avg) row.percent.push_back(100.0 * a);
    row.top1_in_support = static_cast<double>(in_support) / static_cast<double>(samples_per_row);
    if (one_hot) {
      hits += in_support;
      conditioned += samples_per_row;
    }
    if (samples_out) samples_out->push_back(std::move(texts));
    report.rows.push_back(std::move(row));
  }
  if (conditioned) report.accuracy = static_cast<double>(hits) / static_cast<double>(conditioned);
  return report;
}

void MetricReport::write_csv(std::ostream& out) const {
  out << "row";
  for (const auto& c : class_names) out << ",w_" << c;
  for (const auto& c : class_names) out << ",pct_" << c;
  out << ",jsd,top1_in_support\n";
  out << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.label;
    for (double w : r.weights) out << ',' << w;
    for (double p : r.percent) out << ',' << p;
    out << ',' << r.jsd << ',' << r.top1_in_support << '\n';
  }
}

void MetricReport::write_metrics_csv(std::ostream& out) const {
  out << "metric,value\n" << std::setprecision(6);
  const std::pair<const char*, double> items[] = {{"distinct1", distinct1},   {"distinct2", distinct2},
                                                  {"entropy", entropy},       {"perplexity", perplexity},
                                                  {"accuracy", accuracy}};
  for (const auto& [name, v] : items) {
    if (!std::isnan(v)) out << name << ',' << v << '\n';
  }
}

void MetricReport::write_table(std::ostream& out) const {
  std::size_t label_width = 4;
  for (const auto& r : rows) label_width = std::max(label_width, r.label.size());
  std::size_t col = 8;
  for (const auto& c : class_names) col = std::max(col, c.size() + 2);
  out << std::fixed;
  if (!rows.empty()) {
    out << std::left << std::setw(static_cast<int>(label_width + 2)) << "";
    for (const auto& c : class_names) out << std::right << std::setw(static_cast<int>(col)) << c;
    out << std::setw(8) << "JSD" << '\n';
  }
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(label_width + 2)) << r.label << std::right;
    for (double p : r.percent) out << std::setw(static_cast<int>(col)) << std::setprecision(2) << p;
    out << std::setw(8) << std::setprecision(3) << r.jsd << '\n';
  }
  const std::pair<const char*, double> items[] = {{"distinct-1", distinct1}, {"distinct-2", distinct2},
                                                  {"entropy", entropy},      {"perplexity", perplexity},
                                                  {"accuracy", accuracy}};
  bool header = false;
  for (const auto& [name, v] : items) {
    if (std::isnan(v)) continue;
    if (!header && !rows.empty()) out << '\n';
    header = true;
    out << std::left << std::setw(12) << name << std::setprecision(4) << v << '\n';
  }
  out << std::defaultfloat;
}

template MetricReport style_report(const Seq2SeqModel<float>&, const Vocab&, const StyleClassifier&,
                                   std::span<const StyleWeights>, const std::vector<std::string>&,
                                   std::size_t, double, Rng&, std::vector<std::vector<TokenSentence>>*);
template MetricReport style_report(const Seq2SeqModel<double>&, const Vocab&, const StyleClassifier&,
                                   std::span<const StyleWeights>, const std::vector<std::string>&,
                                   std::size_t, double, Rng&, std::vector<std::vector<TokenSentence>>*);

}  // namespace gmwae
