#include "gmwae/synth.hpp"

#include <ostream>

#include "gmwae/error.hpp"
#include "gmwae/rng.hpp"

namespace gmwae {

namespace {

// Slots: {N} noun, {V} verb, {A} adjective, {M} discourse marker.
struct Lexicon {
  std::string name;
  std::vector<std::string> nouns, verbs, adjectives, markers;
  std::vector<std::string> templates;
};

std::vector<Lexicon> themed_lexicons() {
  return {
      {"government",
       {"agency", "department", "committee", "budget", "regulation", "official", "program",
        "policy", "report", "audit", "statute", "grant", "taxpayer", "senator"},
       {"approved", "reviewed", "funded", "audited", "enacted", "proposed", "implemented",
        "evaluated", "revised", "authorized"},
       {"federal", "fiscal", "administrative", "regulatory", "public", "statutory", "annual",
        "legislative"},
       {},
       {"the {A} {N} {V} the {N} .", "the {N} {V} a {A} {N} for the {N} .",
        "under the {A} {N} , the {N} {V} the {N} .",
        "the {N} and the {N} {V} {A} {N} in the {A} {N} ."}},
      {"fiction",
       {"stranger", "sword", "castle", "witch", "lantern", "shadow", "knight", "letter", "dragon",
        "cottage", "heart", "forest"},
       {"whispered", "stared", "vanished", "trembled", "screamed", "wandered", "laughed", "fled",
        "waited", "burned"},
       {"dark", "silent", "ancient", "pale", "cold", "strange", "wicked", "lonely"},
       {},
       {"the {A} {N} {V} in the {N} .", "she {V} at the {A} {N} and the {N} {V} .",
        "he {V} , and the {N} {V} into the {A} {N} .", "a {A} {N} {V} by the {N} of the {N} ."}},
      {"travel",
       {"harbor", "museum", "beach", "temple", "island", "village", "cathedral", "market", "ferry",
        "hotel", "valley", "coast"},
       {"visit", "explore", "stroll", "admire", "reach", "hike", "sail", "tour", "enjoy",
        "discover"},
       {"scenic", "colonial", "bustling", "sandy", "historic", "medieval", "tropical", "charming"},
       {},
       {"you can {V} the {A} {N} from the {N} .", "{V} the {A} {N} and the {N} in the {N} .",
        "the {N} is a {A} {N} to {V} .", "from the {A} {N} , {V} the {N} on the {A} {N} ."}},
      {"telephone",
       {"kids", "weekend", "stuff", "garage", "neighbors", "dog", "car", "team", "church", "yard",
        "job", "cousin"},
       {"guess", "mean", "think", "know", "suppose", "figure", "reckon", "bet", "remember",
        "wonder"},
       {"pretty", "really", "kind", "sort", "awful", "neat", "real", "funny"},
       {"uh", "um", "yeah", "oh", "well"},
       {"{M} i {V} it was {A} good you know .", "{M} {M} we had the {N} over for the {N} .",
        "i {V} the {N} is {A} {A} nice {M} .", "{M} you {V} my {N} and the {N} were there ?"}},
  };
}

Lexicon generic_lexicon(std::size_t k) {
  const std::string p = "s" + std::to_string(k);
  Lexicon lex;
  lex.name = "style" + std::to_string(k);
  for (int i = 0; i < 12; ++i) lex.nouns.push_back(p + "n" + std::to_string(i));
  for (int i = 0; i < 10; ++i) lex.verbs.push_back(p + "v" + std::to_string(i));
  for (int i = 0; i < 8; ++i) lex.adjectives.push_back(p + "a" + std::to_string(i));
  lex.templates = {"the {A} {N} {V} the {N} .", "a {N} {V} the {A} {N} in the {N} .",
                   "the {N} of the {N} {V} a {A} {N} .", "and the {A} {A} {N} {V} ."};
  return lex;
}

std::vector<Lexicon> lexicons(std::size_t num_styles) {
  if (num_styles == 0 || num_styles > kMaxSynthStyles) {
    throw ContractError("synth: styles must be in [1, " + std::to_string(kMaxSynthStyles) + "]");
  }
  auto out = themed_lexicons();
  for (std::size_t k = out.size(); k < num_styles; ++k) out.push_back(generic_lexicon(k));
  out.resize(num_styles);
  return out;
}

const std::string& pick(const std::vector<std::string>& items, Rng& rng) {
  return items[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(items.size()))];
}

std::vector<std::string> expand(const Lexicon& lex, Rng& rng) {
  std::vector<std::string> out;
  for (const auto& slot : tokenize(pick(lex.templates, rng))) {
    if (slot == "{n}") out.push_back(pick(lex.nouns, rng));
    else if (slot == "{v}") out.push_back(pick(lex.verbs, rng));
    else if (slot == "{a}") out.push_back(pick(lex.adjectives, rng));
    else if (slot == "{m}") out.push_back(pick(lex.markers, rng));
    else out.push_back(slot);
  }
  return out;
}

}  // namespace

std::vector<std::string> synth_style_names(std::size_t num_styles) {
  std::vector<std::string> names;
  for (const auto& lex : lexicons(num_styles)) names.push_back(lex.name);
  return names;
}

std::vector<LabeledLine> synthesize_corpus(std::size_t num_styles, std::size_t per_class,
                                           std::uint64_t seed) {
  if (per_class == 0) throw ContractError("synth: per_class must be positive");
  const auto lex = lexicons(num_styles);
  Rng rng(seed);
  std::vector<LabeledLine> lines;
  lines.reserve(num_styles * per_class);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (const auto& l : lex) lines.push_back({l.name, expand(l, rng)});
  }
  return lines;
}

void write_labeled_tsv(std::ostream& out, const std::vector<LabeledLine>& lines) {
  for (const auto& line : lines) {
    out << line.label << '\t';
    for (std::size_t i = 0; i < line.tokens.size(); ++i) out << (i ? " " : "") << line.tokens[i];
    out << '\n';
  }
}

}  // namespace gmwae
