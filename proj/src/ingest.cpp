#include "trigraph/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "trigraph/error.hpp"
#include "trigraph/random.hpp"

namespace trigraph {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool skippable(const std::string& line) {
  return line.empty() || line.front() == '#';
}

std::vector<AuthorRef> collapse(const std::vector<std::string>& keys) {
  std::vector<AuthorRef> out;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& k : keys) {
    auto [it, fresh] = seen.emplace(k, out.size());
    if (fresh) {
      out.push_back({k, 1});
    } else {
      ++out[it->second].count;
    }
  }
  return out;
}

}  // namespace

void RecordSet::add(Record record) {
  if (record.authors.empty()) {
    throw ContractViolation("record '" + record.doc_key + "' has no authors");
  }
  if (index_.count(record.doc_key)) {
    throw DuplicateKeyError("duplicate doc key '" + record.doc_key + "'");
  }
  index_.emplace(record.doc_key, records_.size());
  records_.push_back(std::move(record));
}

void RecordSet::set_truth(TruthMap truth) {
  if (truth.size() != records_.size()) {
    throw ConfigError("truth covers " + std::to_string(truth.size()) + " docs, records have " +
                      std::to_string(records_.size()));
  }
  for (const auto& [doc, entity] : truth) {
    if (!index_.count(doc)) throw ConfigError("truth names unknown doc '" + doc + "'");
  }
  truth_ = std::move(truth);
}

bool RecordSet::contains(const std::string& doc_key) const { return index_.count(doc_key) > 0; }

RecordSet parse_records(std::istream& in) {
  RecordSet rs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (skippable(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw ParseError(lineno, "expected 2 tab-separated fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError(lineno, "empty doc key");
    const auto authors = split(fields[1], ',');
    for (const auto& a : authors) {
      if (a.empty()) throw ParseError(lineno, "empty author key");
    }
    try {
      rs.add(Record{fields[0], collapse(authors)});
    } catch (const DuplicateKeyError& e) {
      throw DuplicateKeyError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rs;
}

RecordSet parse_records_string(const std::string& text) {
  std::istringstream in(text);
  return parse_records(in);
}

TruthMap parse_truth(std::istream& in) {
  TruthMap truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (skippable(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(lineno, "expected `doc_key<TAB>entity_key`");
    }
    if (!truth.emplace(fields[0], fields[1]).second) {
      throw DuplicateKeyError("line " + std::to_string(lineno) + ": duplicate doc key '" +
                              fields[0] + "'");
    }
  }
  return truth;
}

void serialize_records(const RecordSet& rs, std::ostream& out) {
  for (const auto& r : rs.records()) {
    out << r.doc_key << '\t';
    bool first = true;
    for (const auto& a : r.authors) {
      for (std::uint32_t c = 0; c < a.count; ++c) {
        if (!first) out << ',';
        out << a.key;
        first = false;
      }
    }
    out << '\n';
  }
}

void serialize_truth(const TruthMap& truth, const RecordSet& order, std::ostream& out) {
  for (const auto& r : order.records()) {
    out << r.doc_key << '\t' << truth.at(r.doc_key) << '\n';
  }
}

std::string to_record_text(const RecordSet& rs) {
  std::ostringstream out;
  serialize_records(rs, out);
  return out.str();
}

Anonymized anonymize(const RecordSet& rs, std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 0xa11));
  Anonymized result;
  std::set<std::string> used;
  auto token_for = [&](const std::string& key) -> const std::string& {
    auto it = result.key_map.find(key);
    if (it != result.key_map.end()) return it->second;
    std::string token;
    do {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng.next()));
      token = buf;
    } while (!used.insert(token).second);
    return result.key_map.emplace(key, std::move(token)).first->second;
  };

  for (const auto& r : rs.records()) {
    Record out{token_for(r.doc_key), {}};
    for (const auto& a : r.authors) out.authors.push_back({token_for(a.key), a.count});
    result.records.add(std::move(out));
  }
  if (rs.truth()) {
    TruthMap truth;
    // Entity keys are tokenized in record order for determinism.
    for (const auto& r : rs.records()) {
      const std::string& entity = rs.truth()->at(r.doc_key);
      truth.emplace(result.key_map.at(r.doc_key), token_for(entity));
    }
    result.records.set_truth(std::move(truth));
  }
  return result;
}

Instance select_instance(const RecordSet& rs, const std::string& name_ref) {
  Instance inst;
  inst.name_ref = name_ref;
  std::unordered_map<std::string, std::uint32_t> person_index;
  std::map<std::string, std::uint32_t> class_index;
  std::vector<std::uint32_t> labels;

  for (const auto& r : rs.records()) {
    auto ref = std::find_if(r.authors.begin(), r.authors.end(),
                            [&](const AuthorRef& a) { return a.key == name_ref; });
    if (ref == r.authors.end()) continue;
    inst.docs.push_back(r.doc_key);
    inst.ref_position.push_back(static_cast<std::uint32_t>(ref - r.authors.begin()));
    auto& entries = inst.doc_authors.emplace_back();
    for (const auto& a : r.authors) {
      if (a.key == name_ref) continue;
      auto [it, fresh] =
          person_index.emplace(a.key, static_cast<std::uint32_t>(inst.collaborators.size()));
      if (fresh) inst.collaborators.push_back(a.key);
      entries.push_back({it->second, a.count});
    }
    if (rs.truth()) {
      const std::string& entity = rs.truth()->at(r.doc_key);
      auto [it, fresh] = class_index.emplace(entity, static_cast<std::uint32_t>(inst.class_keys.size()));
      if (fresh) inst.class_keys.push_back(entity);
      labels.push_back(it->second);
    }
  }
  if (inst.docs.empty()) throw NotFoundError("name reference '" + name_ref + "' not found");
  if (rs.truth()) inst.truth = std::move(labels);
  return inst;
}

std::vector<Record> expand_instance(const Instance& inst) {
  std::vector<Record> out;
  out.reserve(inst.n_docs());
  for (std::size_t d = 0; d < inst.n_docs(); ++d) {
    Record r{inst.docs[d], {}};
    for (const auto& e : inst.doc_authors[d]) r.authors.push_back({inst.collaborators[e.person], e.count});
    r.authors.insert(r.authors.begin() + inst.ref_position[d], AuthorRef{inst.name_ref, 1});
    out.push_back(std::move(r));
  }
  return out;
}

RecordSet generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n_entities < 1) throw ConfigError("n_entities must be >= 1");
  if (!(cfg.alpha > 1.0)) throw ConfigError("alpha must be > 1");
  if (cfg.docs_min < 1 || cfg.docs_max < cfg.docs_min) throw ConfigError("need 1 <= docs_min <= docs_max");
  if (cfg.pool < cfg.n_entities) throw ConfigError("pool must be >= n_entities");
  if (!(cfg.within_collab >= 0.0 && cfg.within_collab <= 1.0)) {
    throw ConfigError("within_collab must lie in [0, 1]");
  }
  if (cfg.coauthors_min < 1 || cfg.coauthors_max < cfg.coauthors_min) {
    throw ConfigError("need 1 <= coauthors_min <= coauthors_max");
  }
  if (cfg.name_ref.empty()) throw ConfigError("name_ref must be non-empty");

  Rng rng(Rng::derive(cfg.seed, 0x5e7));
  const double tail = -1.0 / (cfg.alpha - 1.0);

  // Document counts: inverse-CDF draws from the continuous power law,
  // floored, redrawn above docs_max.
  std::vector<std::uint32_t> counts(cfg.n_entities);
  for (auto& c : counts) {
    double x;
    do {
      x = std::floor(cfg.docs_min * std::pow(1.0 - rng.uniform(), tail));
    } while (x > cfg.docs_max);
    c = static_cast<std::uint32_t>(x);
  }

  // Contiguous private sub-pools: entity e owns [begin[e], begin[e+1]).
  std::vector<std::uint32_t> begin(cfg.n_entities + 1);
  for (std::uint32_t e = 0; e <= cfg.n_entities; ++e) {
    begin[e] = static_cast<std::uint32_t>(std::uint64_t{e} * cfg.pool / cfg.n_entities);
  }

  std::vector<std::uint32_t> owners;
  for (std::uint32_t e = 0; e < cfg.n_entities; ++e) owners.insert(owners.end(), counts[e], e);
  for (std::size_t i = owners.size(); i > 1; --i) std::swap(owners[i - 1], owners[rng.below(i)]);

  RecordSet rs;
  TruthMap truth;
  for (std::size_t d = 0; d < owners.size(); ++d) {
    const std::uint32_t e = owners[d];
    const std::uint32_t own = begin[e + 1] - begin[e];
    const std::uint32_t want =
        cfg.coauthors_min + static_cast<std::uint32_t>(rng.below(cfg.coauthors_max - cfg.coauthors_min + 1));
    std::vector<std::uint32_t> chosen;
    // Bounded so a tiny sub-pool cannot stall the draw.
    for (std::uint32_t attempt = 0; chosen.size() < want && attempt < 16 * want; ++attempt) {
      const std::uint32_t p = rng.bernoulli(cfg.within_collab)
                                  ? begin[e] + static_cast<std::uint32_t>(rng.below(own))
                                  : static_cast<std::uint32_t>(rng.below(cfg.pool));
      if (std::find(chosen.begin(), chosen.end(), p) == chosen.end()) chosen.push_back(p);
    }
    Record r{"d" + std::to_string(d), {{cfg.name_ref, 1}}};
    for (auto p : chosen) r.authors.push_back({"p" + std::to_string(p), 1});
    truth.emplace(r.doc_key, "e" + std::to_string(e));
    rs.add(std::move(r));
  }
  rs.set_truth(std::move(truth));
  return rs;
}

std::vector<std::uint32_t> power_law_class_sizes(std::uint32_t total, std::uint32_t n_classes,
                                                 std::uint32_t min_size) {
  if (n_classes < 1 || std::uint64_t{n_classes} * min_size > total) {
    throw ConfigError("cannot split total into classes of the minimum size");
  }
  auto sizes_for = [&](double alpha) {
    std::vector<std::uint32_t> s(n_classes);
    for (std::uint32_t e = 0; e < n_classes; ++e) {
      const double q = (e + 0.5) / n_classes;
      const double x = std::floor(min_size * std::pow(q, -1.0 / (alpha - 1.0)));
      s[e] = static_cast<std::uint32_t>(std::min(x, static_cast<double>(total)));
    }
    return s;
  };
  auto sum_of = [](const std::vector<std::uint32_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::uint64_t{0});
  };
  // Sum is non-increasing in alpha; find the smallest alpha whose sum fits.
  double lo = 1.0 + 1e-9, hi = 64.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sum_of(sizes_for(mid)) > total) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  auto s = sizes_for(hi);
  s.front() += static_cast<std::uint32_t>(total - sum_of(s));
  return s;
}

}  // namespace trigraph
