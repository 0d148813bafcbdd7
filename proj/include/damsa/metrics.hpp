#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "damsa/errors.hpp"

namespace damsa::metrics {

// chrF++ parameterization. Defaults mirror the canonical public scorer:
// character orders 1..6, word orders 1..2, beta = 2, whitespace removed
// before character n-gram extraction.
struct ChrfParams {
  int char_order = 6;
  int word_order = 2;
  double beta = 2.0;
  bool remove_whitespace_for_char_ngrams = true;

  void validate() const;
  std::string signature() const;  // e.g. "chrF++|c6|w2|b2|ws-"
};

enum class BleuTokenizer { PunctSplit13a, Whitespace };
enum class BleuSmoothing { Exponential, None, AddK };

struct BleuParams {
  int max_order = 4;
  BleuTokenizer tokenizer = BleuTokenizer::PunctSplit13a;
  BleuSmoothing smoothing = BleuSmoothing::Exponential;
  double smooth_k = 1.0;  // AddK only
  bool lowercase = false;

  void validate() const;
  std::string signature() const;  // e.g. "BLEU|o4|tok:13a-style|smooth:exp|lc-"
};

enum class MetricId { CHRFPP, BLEU };

std::string to_string(MetricId id);

struct MetricScore {
  MetricId metric_id = MetricId::CHRFPP;
  double corpus_value = 0.0;               // in [0, 100]
  std::vector<double> segment_values;      // in [0, 100]
  std::string params_signature;
};

// --- shared n-gram kernel ---

enum class NgramMode { Char, Word };

struct NgramOptions {
  // Char mode: drop every Unicode whitespace codepoint first.
  bool remove_whitespace = true;
  // Word mode: split one leading/trailing ASCII punctuation character off
  // each whitespace-delimited token (the chrF++ word segmentation).
  bool split_edge_punctuation = true;
};

// Exact n-gram multiset of `text`. Char-mode keys are UTF-8 substrings of n
// codepoints; word-mode keys are n tokens joined with a single space.
std::map<std::string, long> ngram_profile(std::string_view text, int n,
                                          NgramMode mode,
                                          const NgramOptions& opts = {});

// BLEU-style tokenization. PunctSplit13a reproduces the mteval-v13a rules
// (ASCII punctuation ranges, digit-aware period/comma/dash handling) and
// additionally isolates the Arabic punctuation marks ، ؛ ؟ as tokens.
std::vector<std::string> tokenize(std::string_view text, BleuTokenizer mode);

// chrF++-style word segmentation: whitespace split plus edge punctuation.
std::vector<std::string> chrf_word_tokens(std::string_view text);

// --- chrF++ ---

double chrf_pp_sentence(std::string_view hyp, std::string_view ref,
                        const ChrfParams& params = {});

MetricScore chrf_pp_corpus(const std::vector<std::string>& hyps,
                           const std::vector<std::string>& refs,
                           const ChrfParams& params = {});

// --- BLEU ---

// Sentence BLEU: same statistics as the corpus formula on one pair, with
// smoothing forced on and the order capped at the orders the pair has.
double bleu_sentence(std::string_view hyp, std::string_view ref,
                     const BleuParams& params = {});

MetricScore bleu_corpus(const std::vector<std::string>& hyps,
                        const std::vector<std::string>& refs,
                        const BleuParams& params = {});

}  // namespace damsa::metrics
