#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "damsa/errors.hpp"

namespace damsa::corpus {

enum class Dialect { LEV, GLF, EGY, MSA, OTHER };

enum class Provenance { Curated, SocialMedia, Synthetic, Other };

std::string to_string(Dialect d);
std::string to_string(Provenance p);
Dialect dialect_from_string(std::string_view s);
// Accepts common source-corpus aliases ("madar" -> curated,
// "dial2msa" -> social_media); anything unrecognized maps to Other.
Provenance provenance_from_string(std::string_view s);

struct ParallelSegment {
  std::string id;
  Dialect dialect = Dialect::OTHER;
  std::string source_text;     // dialectal side
  std::string reference_text;  // MSA side
  Provenance provenance = Provenance::Other;
  std::string domain_tag;
};

struct DatasetSplit {
  std::string name;
  std::vector<ParallelSegment> segments;
  std::map<Dialect, std::size_t> composition;
  std::uint64_t seed = 0;
  std::string prng;  // algorithm id used for sampling/shuffling

  void recount();  // recompute composition from segments
};

// Maps canonical record fields to the key names used in a JSONL file.
struct FieldMap {
  std::string id = "id";
  std::string dialect = "dialect";
  std::string source = "source";
  std::string reference = "reference";
  std::string provenance = "provenance";
  std::string domain = "domain";
};

// One line per record; text is NFC-normalized and trimmed; ids default to
// "<filestem>:<lineno>". Malformed lines and empty source/reference raise
// DataError carrying the line number.
std::vector<ParallelSegment> ingest_jsonl(const std::string& path,
                                          const FieldMap& fields = {});

struct TsvColumns {
  std::size_t source_col = 0;
  std::size_t reference_col = 1;
};

std::vector<ParallelSegment> ingest_tsv(const std::string& path,
                                        TsvColumns columns, Dialect dialect,
                                        bool skip_header = false);

struct SplitSpec {
  std::string name;
  std::map<Dialect, std::size_t> counts;
  // Per-provenance mix ratios, applied uniformly to every dialect. Empty
  // means dialect cells are drawn from the whole pool regardless of
  // provenance. Ratios must sum to 1 (within 1e-9).
  std::map<Provenance, double> mix;
  std::uint64_t seed = 0;
};

// Sampling without replacement, deterministic in (pool contents, spec, seed).
// Per-dialect counts are exact; provenance quotas follow the mix ratios via
// largest-remainder apportionment (within one segment of exact). The output
// order is shuffled with the same seed.
DatasetSplit build_test_split(const std::vector<ParallelSegment>& pool,
                              const SplitSpec& spec);

// Instruction-format export for supervised fine-tuning.
std::vector<std::string> export_instruction_format(const DatasetSplit& split);
void write_instruction_file(const DatasetSplit& split, const std::string& path);
// Inverse of the export: recovers (source, reference) pairs from a file
// produced by write_instruction_file.
std::vector<std::pair<std::string, std::string>> parse_instruction_file(
    const std::string& path);

struct OverlapPair {
  std::string id_a;
  std::string id_b;
  std::string source;  // the shared normalized source text
};

struct OverlapReport {
  std::size_t count = 0;
  std::vector<OverlapPair> pairs;
};

// A pair overlaps when the NFC-normalized, whitespace-trimmed source texts
// compare equal. No diacritic stripping.
OverlapReport detect_overlap(const DatasetSplit& a, const DatasetSplit& b);

// |distinct dialect-side tokens ∩ distinct MSA-side tokens| /
// |distinct dialect-side tokens|, over the split's segments of the given
// dialect, with plain whitespace tokenization.
double vocabulary_overlap(const DatasetSplit& split, Dialect dialect);

// Split (de)serialization: a single JSON document with the split metadata
// and its segments in the canonical record schema.
void save_split(const DatasetSplit& split, const std::string& path);
DatasetSplit load_split(const std::string& path);

// Canonical JSONL for segment lists (the `ingest` subcommand output).
void write_segments_jsonl(const std::vector<ParallelSegment>& segments,
                          const std::string& path);

// Stable content hash of a split (metadata + segments), for run manifests.
std::string split_hash(const DatasetSplit& split);

}  // namespace damsa::corpus
