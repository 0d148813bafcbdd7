#include "damsa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "damsa/util/hash.hpp"
#include "damsa/util/rng.hpp"
#include "damsa/util/text.hpp"
#include "damsa/util/utf8.hpp"

namespace damsa::corpus {

using nlohmann::json;

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

constexpr const char* kInstructionHeader =
    "Translate the below text from Dialectal Arabic to Modern Standard "
    "Arabic:";
constexpr const char* kDaPrefix = "### DA text: ";
constexpr const char* kMsaPrefix = "### MSA translation: ";

std::string file_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

std::string to_string(Dialect d) {
  switch (d) {
    case Dialect::LEV: return "LEV";
    case Dialect::GLF: return "GLF";
    case Dialect::EGY: return "EGY";
    case Dialect::MSA: return "MSA";
    case Dialect::OTHER: return "OTHER";
  }
  return "OTHER";
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Curated: return "curated";
    case Provenance::SocialMedia: return "social_media";
    case Provenance::Synthetic: return "synthetic";
    case Provenance::Other: return "other";
  }
  return "other";
}

Dialect dialect_from_string(std::string_view s) {
  std::string v = lower_ascii(s);
  if (v == "lev" || v == "levantine") return Dialect::LEV;
  if (v == "glf" || v == "gulf") return Dialect::GLF;
  if (v == "egy" || v == "egyptian") return Dialect::EGY;
  if (v == "msa") return Dialect::MSA;
  if (v == "other") return Dialect::OTHER;
  throw DataError("unknown dialect '" + std::string(s) +
                  "' (expected LEV, GLF, EGY, MSA or OTHER)");
}

Provenance provenance_from_string(std::string_view s) {
  std::string v = lower_ascii(s);
  std::erase_if(v, [](char c) { return c == '-' || c == '_' || c == ' '; });
  if (v == "curated" || v == "madar" || v == "madarlike" || v == "travel")
    return Provenance::Curated;
  if (v == "socialmedia" || v == "social" || v == "dial2msa" ||
      v == "dial2msaverified" || v == "socialmedialike")
    return Provenance::SocialMedia;
  if (v == "synthetic") return Provenance::Synthetic;
  return Provenance::Other;
}

void DatasetSplit::recount() {
  composition.clear();
  for (const auto& seg : segments) ++composition[seg.dialect];
}

std::vector<ParallelSegment> ingest_jsonl(const std::string& path,
                                          const FieldMap& fields) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  const std::string stem = file_stem(path);

  std::vector<ParallelSegment> segments;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (util::trim(line).empty()) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed JSON record (" + e.what() + ")");
    }
    auto require_string = [&](const std::string& key) -> std::string {
      if (!rec.contains(key) || !rec[key].is_string()) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": missing or non-string field '" + key + "'");
      }
      return rec[key].get<std::string>();
    };

    ParallelSegment seg;
    try {
      seg.dialect = dialect_from_string(require_string(fields.dialect));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    seg.source_text = util::canonical_text(require_string(fields.source));
    seg.reference_text = util::canonical_text(require_string(fields.reference));
    if (seg.source_text.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": empty source text after normalization");
    }
    if (seg.reference_text.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": empty reference text after normalization");
    }
    if (rec.contains(fields.id) && rec[fields.id].is_string() &&
        !rec[fields.id].get<std::string>().empty()) {
      seg.id = rec[fields.id].get<std::string>();
    } else {
      seg.id = stem + ":" + std::to_string(lineno);
    }
    if (rec.contains(fields.provenance) && rec[fields.provenance].is_string()) {
      seg.provenance =
          provenance_from_string(rec[fields.provenance].get<std::string>());
    }
    if (rec.contains(fields.domain) && rec[fields.domain].is_string()) {
      seg.domain_tag = rec[fields.domain].get<std::string>();
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<ParallelSegment> ingest_tsv(const std::string& path,
                                        TsvColumns columns, Dialect dialect,
                                        bool skip_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  const std::string stem = file_stem(path);
  const std::size_t needed =
      std::max(columns.source_col, columns.reference_col) + 1;

  std::vector<ParallelSegment> segments;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skip_header && lineno == 1) continue;
    if (line.empty()) continue;

    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (cells.size() < needed) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected >= " +
                      std::to_string(needed) + " columns, got " +
                      std::to_string(cells.size()));
    }

    ParallelSegment seg;
    seg.id = stem + ":" + std::to_string(lineno);
    seg.dialect = dialect;
    seg.source_text = util::canonical_text(cells[columns.source_col]);
    seg.reference_text = util::canonical_text(cells[columns.reference_col]);
    if (seg.source_text.empty() || seg.reference_text.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": empty cell after normalization");
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

DatasetSplit build_test_split(const std::vector<ParallelSegment>& pool,
                              const SplitSpec& spec) {
  if (!spec.mix.empty()) {
    double total = 0;
    for (const auto& [prov, ratio] : spec.mix) {
      if (ratio < 0) throw DataError("negative mix ratio");
      total += ratio;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw DataError("provenance mix ratios must sum to 1");
  }

  // Pool indices per (dialect, provenance) cell, in pool order.
  std::map<Dialect, std::map<Provenance, std::vector<std::size_t>>> by_cell;
  std::map<Dialect, std::vector<std::size_t>> by_dialect;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    by_cell[pool[i].dialect][pool[i].provenance].push_back(i);
    by_dialect[pool[i].dialect].push_back(i);
  }

  // Quotas per cell. With a mix, largest-remainder apportionment keeps every
  // cell within one segment of the exact proportional share.
  struct Cell {
    Dialect dialect;
    std::optional<Provenance> provenance;
    std::size_t quota;
  };
  std::vector<Cell> cells;
  for (const auto& [dialect, count] : spec.counts) {
    if (spec.mix.empty()) {
      cells.push_back({dialect, std::nullopt, count});
      continue;
    }
    std::vector<std::pair<Provenance, double>> shares;
    for (const auto& [prov, ratio] : spec.mix) {
      if (ratio > 0) shares.emplace_back(prov, ratio * double(count));
    }
    std::size_t assigned = 0;
    std::vector<std::size_t> quotas(shares.size());
    for (std::size_t i = 0; i < shares.size(); ++i) {
      quotas[i] = static_cast<std::size_t>(std::floor(shares[i].second));
      assigned += quotas[i];
    }
    std::vector<std::size_t> order(shares.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double ra = shares[a].second - std::floor(shares[a].second);
      double rb = shares[b].second - std::floor(shares[b].second);
      return ra > rb;
    });
    for (std::size_t i = 0; assigned < count; ++i) {
      ++quotas[order[i % order.size()]];
      ++assigned;
    }
    for (std::size_t i = 0; i < shares.size(); ++i) {
      cells.push_back({dialect, shares[i].first, quotas[i]});
    }
  }

  // Sufficiency check, reporting every deficient cell at once.
  std::string deficits;
  for (const auto& cell : cells) {
    std::size_t available = 0;
    if (cell.provenance) {
      auto dit = by_cell.find(cell.dialect);
      if (dit != by_cell.end()) {
        auto pit = dit->second.find(*cell.provenance);
        if (pit != dit->second.end()) available = pit->second.size();
      }
    } else {
      auto dit = by_dialect.find(cell.dialect);
      if (dit != by_dialect.end()) available = dit->second.size();
    }
    if (available < cell.quota) {
      deficits += "  " + to_string(cell.dialect);
      if (cell.provenance) deficits += "/" + to_string(*cell.provenance);
      deficits += ": need " + std::to_string(cell.quota) + ", have " +
                  std::to_string(available) + "\n";
    }
  }
  if (!deficits.empty())
    throw DataError("insufficient pool for split:\n" + deficits);

  util::DeterministicRng rng(spec.seed);
  std::vector<std::size_t> selected;
  for (const auto& cell : cells) {
    std::vector<std::size_t> candidates =
        cell.provenance ? by_cell[cell.dialect][*cell.provenance]
                        : by_dialect[cell.dialect];
    rng.shuffle(candidates);
    selected.insert(selected.end(), candidates.begin(),
                    candidates.begin() + static_cast<long>(cell.quota));
  }
  rng.shuffle(selected);

  DatasetSplit split;
  split.name = spec.name;
  split.seed = spec.seed;
  split.prng = util::DeterministicRng::kAlgorithm;
  split.segments.reserve(selected.size());
  std::unordered_set<std::string> seen_ids;
  for (std::size_t idx : selected) {
    if (!seen_ids.insert(pool[idx].id).second) {
      throw DataError("duplicate segment id in split: " + pool[idx].id);
    }
    split.segments.push_back(pool[idx]);
  }
  split.recount();
  return split;
}

std::vector<std::string> export_instruction_format(const DatasetSplit& split) {
  if (split.segments.empty())
    throw DataError("cannot export an empty split");
  std::vector<std::string> records;
  records.reserve(split.segments.size());
  for (const auto& seg : split.segments) {
    std::string rec = kInstructionHeader;
    rec += "\n\n";
    rec += kDaPrefix;
    rec += seg.source_text;
    rec += "\n\n";
    rec += kMsaPrefix;
    rec += seg.reference_text;
    records.push_back(std::move(rec));
  }
  return records;
}

void write_instruction_file(const DatasetSplit& split,
                            const std::string& path) {
  auto records = export_instruction_format(split);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) out << "\n";
    out << records[i] << "\n";
  }
}

std::vector<std::pair<std::string, std::string>> parse_instruction_file(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string content = buf.str();

  const std::string opener = std::string(kInstructionHeader) + "\n\n" + kDaPrefix;
  const std::string divider = std::string("\n\n") + kMsaPrefix;

  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t pos = content.find(opener);
  while (pos != std::string::npos) {
    std::size_t body = pos + opener.size();
    std::size_t next = content.find(opener, body);
    std::string block = content.substr(
        body, next == std::string::npos ? std::string::npos : next - body);
    std::size_t div = block.find(divider);
    if (div == std::string::npos)
      throw DataError("malformed instruction record in " + path);
    std::string source = block.substr(0, div);
    std::string reference = block.substr(div + divider.size());
    while (!reference.empty() && reference.back() == '\n') reference.pop_back();
    pairs.emplace_back(std::move(source), std::move(reference));
    pos = next;
  }
  return pairs;
}

OverlapReport detect_overlap(const DatasetSplit& a, const DatasetSplit& b) {
  std::unordered_map<std::string, std::vector<const ParallelSegment*>> index;
  for (const auto& seg : a.segments) {
    index[util::canonical_text(seg.source_text)].push_back(&seg);
  }
  OverlapReport report;
  for (const auto& seg : b.segments) {
    auto it = index.find(util::canonical_text(seg.source_text));
    if (it == index.end()) continue;
    for (const ParallelSegment* sa : it->second) {
      report.pairs.push_back({sa->id, seg.id, it->first});
    }
  }
  report.count = report.pairs.size();
  return report;
}

double vocabulary_overlap(const DatasetSplit& split, Dialect dialect) {
  std::set<std::string> source_types;
  std::set<std::string> reference_types;
  for (const auto& seg : split.segments) {
    if (seg.dialect != dialect) continue;
    for (auto& tok : util::split_ws(seg.source_text))
      source_types.insert(std::move(tok));
    for (auto& tok : util::split_ws(seg.reference_text))
      reference_types.insert(std::move(tok));
  }
  if (source_types.empty()) {
    throw DataError("no dialect-side tokens for " + to_string(dialect));
  }
  std::size_t shared = 0;
  for (const auto& tok : source_types) {
    if (reference_types.count(tok)) ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(source_types.size());
}

namespace {

json segment_to_json(const ParallelSegment& seg) {
  json j;
  j["id"] = seg.id;
  j["dialect"] = to_string(seg.dialect);
  j["source"] = seg.source_text;
  j["reference"] = seg.reference_text;
  j["provenance"] = to_string(seg.provenance);
  if (!seg.domain_tag.empty()) j["domain"] = seg.domain_tag;
  return j;
}

ParallelSegment segment_from_json(const json& j) {
  ParallelSegment seg;
  seg.id = j.at("id").get<std::string>();
  seg.dialect = dialect_from_string(j.at("dialect").get<std::string>());
  seg.source_text = j.at("source").get<std::string>();
  seg.reference_text = j.at("reference").get<std::string>();
  if (j.contains("provenance"))
    seg.provenance = provenance_from_string(j["provenance"].get<std::string>());
  if (j.contains("domain")) seg.domain_tag = j["domain"].get<std::string>();
  return seg;
}

json split_to_json(const DatasetSplit& split) {
  json j;
  j["name"] = split.name;
  j["seed"] = split.seed;
  j["prng"] = split.prng;
  json comp;
  for (const auto& [dialect, n] : split.composition)
    comp[to_string(dialect)] = n;
  j["composition"] = comp;
  json segs = json::array();
  for (const auto& seg : split.segments) segs.push_back(segment_to_json(seg));
  j["segments"] = segs;
  return j;
}

}  // namespace

void save_split(const DatasetSplit& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << split_to_json(split).dump(2) << "\n";
}

DatasetSplit load_split(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed split file " + path + ": " + e.what());
  }
  DatasetSplit split;
  split.name = j.at("name").get<std::string>();
  split.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("prng")) split.prng = j["prng"].get<std::string>();
  for (const auto& sj : j.at("segments")) {
    split.segments.push_back(segment_from_json(sj));
  }
  split.recount();
  return split;
}

void write_segments_jsonl(const std::vector<ParallelSegment>& segments,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& seg : segments) out << segment_to_json(seg).dump() << "\n";
}

std::string split_hash(const DatasetSplit& split) {
  return util::sha256_hex(split_to_json(split).dump());
}

}  // namespace damsa::corpus
