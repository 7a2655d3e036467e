#include "gmwae/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "gmwae/error.hpp"

namespace gmwae {

namespace {

const std::vector<std::string> kSpecialTokens = {"<pad>", "<s>", "</s>", "<unk>"};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<LabeledLine> read_labeled_tsv(std::istream& in) {
  std::vector<LabeledLine> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw IngestionError("corpus line " + std::to_string(lineno) +
                           ": expected <class>\\t<sentence>");
    }
    LabeledLine parsed{line.substr(0, tab), tokenize(std::string_view(line).substr(tab + 1))};
    if (parsed.tokens.empty()) continue;
    lines.push_back(std::move(parsed));
  }
  return lines;
}

std::vector<LabeledLine> read_labeled_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return read_labeled_tsv(in);
}

// ---- Vocab ----------------------------------------------------------------

Vocab::Vocab() : id_to_token_(kSpecialTokens) {
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) token_to_id_[id_to_token_[i]] = static_cast<int>(i);
}

Vocab Vocab::build(std::span<const LabeledLine> lines, std::size_t max_size) {
  if (lines.empty()) throw IngestionError("build_vocab: empty corpus");
  if (max_size < kNumSpecial) throw ContractError("build_vocab: max_size must be >= 4");
  std::map<std::string, std::size_t> counts;
  for (const auto& line : lines)
    for (const auto& tok : line.tokens) ++counts[tok];
  for (const auto& special : kSpecialTokens) counts.erase(special);

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = kSpecialTokens;
  for (const auto& [tok, n] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> id_to_token) {
  if (id_to_token.size() < kNumSpecial ||
      !std::equal(kSpecialTokens.begin(), kSpecialTokens.end(), id_to_token.begin())) {
    throw FormatError("vocab: first ids must be <pad> <s> </s> <unk>");
  }
  Vocab v;
  v.token_to_id_.clear();
  v.token_to_id_.reserve(id_to_token.size());
  for (std::size_t i = 0; i < id_to_token.size(); ++i) {
    if (!v.token_to_id_.emplace(id_to_token[i], static_cast<int>(i)).second) {
      throw FormatError("vocab: duplicate token '" + id_to_token[i] + "'");
    }
  }
  v.id_to_token_ = std::move(id_to_token);
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw VocabError("token id " + std::to_string(id) + " outside vocab of " +
                     std::to_string(id_to_token_.size()));
  }
  return id_to_token_[id];
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocab::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    out.push_back(token(id));
  }
  return out;
}

void Vocab::write_tsv(std::ostream& out) const {
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) out << i << '\t' << id_to_token_[i] << '\n';
}

Vocab Vocab::read_tsv(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("vocab.tsv: missing tab");
    if (std::stoul(line.substr(0, tab)) != tokens.size()) throw FormatError("vocab.tsv: ids out of order");
    tokens.push_back(line.substr(tab + 1));
  }
  return from_tokens(std::move(tokens));
}

// ---- LabeledCorpus --------------------------------------------------------

LabeledCorpus LabeledCorpus::build(std::span<const LabeledLine> lines, const Vocab& vocab,
                                   std::size_t max_len, std::vector<std::string> class_names) {
  if (lines.empty()) throw IngestionError("corpus: no sentences");
  if (max_len == 0) throw ContractError("corpus: max_len must be positive");
  const bool fixed_classes = !class_names.empty();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < class_names.size(); ++i) index[class_names[i]] = i;

  LabeledCorpus corpus;
  for (const auto& line : lines) {
    auto it = index.find(line.label);
    if (it == index.end()) {
      if (fixed_classes) throw IngestionError("corpus: unknown class '" + line.label + "'");
      it = index.emplace(line.label, class_names.size()).first;
      class_names.push_back(line.label);
    }
    Sentence s{it->second, vocab.encode(line.tokens)};
    if (s.ids.size() > max_len) s.ids.resize(max_len);
    corpus.sentences_.push_back(std::move(s));
  }
  corpus.class_names_ = std::move(class_names);
  const auto sizes = corpus.class_sizes();
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0) throw IngestionError("corpus: class '" + corpus.class_names_[k] + "' is empty");
  }
  return corpus;
}

std::vector<std::size_t> LabeledCorpus::class_sizes() const {
  std::vector<std::size_t> sizes(class_names_.size(), 0);
  for (const auto& s : sentences_) ++sizes[s.cls];
  return sizes;
}

LabeledCorpus LabeledCorpus::single_class(const std::string& name) const {
  LabeledCorpus out = *this;
  for (auto& s : out.sentences_) s.cls = 0;
  out.class_names_ = {name};
  return out;
}

// ---- batching -------------------------------------------------------------

Batch make_batch(std::size_t cls, std::span<const std::vector<int>> sequences,
                 std::vector<std::size_t> labels) {
  if (sequences.empty()) throw ContractError("make_batch: no sequences");
  if (labels.empty()) labels.assign(sequences.size(), cls);
  if (labels.size() != sequences.size()) throw ContractError("make_batch: label count mismatch");
  Batch b;
  b.cls = cls;
  b.labels = std::move(labels);
  for (const auto& seq : sequences) {
    if (seq.empty()) throw ContractError("make_batch: empty sequence");
    b.lengths.push_back(seq.size() + 2);
    b.width = std::max(b.width, seq.size() + 2);
  }
  b.ids.assign(sequences.size() * b.width, kPad);
  for (std::size_t r = 0; r < sequences.size(); ++r) {
    int* row = b.ids.data() + r * b.width;
    row[0] = kBos;
    std::copy(sequences[r].begin(), sequences[r].end(), row + 1);
    row[sequences[r].size() + 1] = kEos;
  }
  return b;
}

std::vector<Batch> class_batches(const LabeledCorpus& corpus, std::size_t batch_size, Rng& rng) {
  if (batch_size < 2) throw ContractError("class_batches: batch_size must be >= 2");
  const std::size_t m = corpus.num_classes();
  std::vector<std::vector<std::size_t>> members(m);
  for (std::size_t i = 0; i < corpus.size(); ++i) members[corpus.sentences()[i].cls].push_back(i);

  std::vector<std::vector<Batch>> per_class(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::shuffle(members[k].begin(), members[k].end(), rng);
    for (std::size_t start = 0; start < members[k].size(); start += batch_size) {
      const std::size_t end = std::min(start + batch_size, members[k].size());
      const std::size_t n = end - start;
      if (n < 2 || (n < batch_size && start > 0)) break;
      std::vector<std::vector<int>> seqs;
      for (std::size_t i = start; i < end; ++i) seqs.push_back(corpus.sentences()[members[k][i]].ids);
      per_class[k].push_back(make_batch(k, seqs));
    }
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> out;
  for (std::size_t round = 0;; ++round) {
    bool any = false;
    for (std::size_t k : order) {
      if (round < per_class[k].size()) {
        out.push_back(std::move(per_class[k][round]));
        any = true;
      }
    }
    if (!any) break;
  }
  return out;
}

}  // namespace gmwae
