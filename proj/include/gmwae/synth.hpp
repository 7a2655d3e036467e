#pragma once

// Template-grammar corpus with one vocabulary core per style plus a shared set
// of function words, so the style of a sentence is recoverable from its words.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gmwae/data.hpp"

namespace gmwae {

inline constexpr std::size_t kMaxSynthStyles = 8;

/// `per_class` sentences for each of `num_styles` styles, in class-interleaved order.
std::vector<LabeledLine> synthesize_corpus(std::size_t num_styles, std::size_t per_class,
                                           std::uint64_t seed);

/// Style names used by synthesize_corpus, in class order.
std::vector<std::string> synth_style_names(std::size_t num_styles);

/// `<class>\t<sentence>` lines.
void write_labeled_tsv(std::ostream& out, const std::vector<LabeledLine>& lines);

}  // namespace gmwae
