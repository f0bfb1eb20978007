#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace trigraph {

struct AuthorRef {
  std::string key;
  std::uint32_t count = 1;

  bool operator==(const AuthorRef&) const = default;
};

// One document and its author list. Repeated authors are collapsed into a
// single entry, kept at the position of their first occurrence.
struct Record {
  std::string doc_key;
  std::vector<AuthorRef> authors;

  bool operator==(const Record&) const = default;
};

// doc_key -> entity_key
using TruthMap = std::map<std::string, std::string>;

class RecordSet {
 public:
  RecordSet() = default;

  // Throws DuplicateKeyError on a repeated doc key and ContractViolation on
  // a record without authors.
  void add(Record record);

  // Truth keys must equal the doc key set exactly.
  void set_truth(TruthMap truth);

  const std::vector<Record>& records() const { return records_; }
  const std::optional<TruthMap>& truth() const { return truth_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  bool contains(const std::string& doc_key) const;

  bool operator==(const RecordSet&) const = default;

 private:
  std::vector<Record> records_;
  std::map<std::string, std::size_t> index_;
  std::optional<TruthMap> truth_;
};

// Record file: `doc_key<TAB>author1,author2,...`, `#` comments, blank lines
// ignored.
RecordSet parse_records(std::istream& in);
RecordSet parse_records_string(const std::string& text);

// Truth file: `doc_key<TAB>entity_key`.
TruthMap parse_truth(std::istream& in);

// Writes records in the record-file format. Repeated authors are emitted
// contiguously at their first position, so parse(serialize(x)) == x.
void serialize_records(const RecordSet& rs, std::ostream& out);
void serialize_truth(const TruthMap& truth, const RecordSet& order, std::ostream& out);
std::string to_record_text(const RecordSet& rs);

// original key -> anonymized token
using KeyMap = std::map<std::string, std::string>;

struct Anonymized {
  RecordSet records;
  KeyMap key_map;
};

// Replaces every doc, author and entity key with a 16-character hex token.
// Tokens are assigned in first-appearance order from a generator seeded by
// `seed`; collisions are redrawn so the mapping is a bijection.
Anonymized anonymize(const RecordSet& rs, std::uint64_t seed);

// One name reference's slice of a record set, with dense indices assigned in
// first-appearance order.
struct Instance {
  struct Entry {
    std::uint32_t person;
    std::uint32_t count;
  };

  std::string name_ref;
  std::vector<std::string> docs;
  std::vector<std::string> collaborators;
  // Per document, the collaborator entries in author-list order.
  std::vector<std::vector<Entry>> doc_authors;
  // Per document, where the name reference sat in the collapsed author list.
  std::vector<std::uint32_t> ref_position;
  // Dense class labels aligned with `docs`, and the entity key behind each.
  std::optional<std::vector<std::uint32_t>> truth;
  std::vector<std::string> class_keys;

  std::size_t n_docs() const { return docs.size(); }
  std::size_t n_persons() const { return collaborators.size(); }
  std::size_t n_classes() const { return class_keys.size(); }
};

// Throws NotFoundError when name_ref authors no record.
Instance select_instance(const RecordSet& rs, const std::string& name_ref);

// Rebuilds the records of the instance (including the name reference at its
// original position). Inverse of select_instance on the selected records.
std::vector<Record> expand_instance(const Instance& inst);

struct SynthConfig {
  std::uint32_t n_entities = 20;
  double alpha = 2.1;
  std::uint32_t docs_min = 4;
  std::uint32_t docs_max = 120;
  std::uint32_t pool = 200;
  double within_collab = 0.9;
  std::uint32_t coauthors_min = 1;
  std::uint32_t coauthors_max = 3;
  std::string name_ref = "a";
  std::uint64_t seed = 1;
};

// Power-law document counts per entity, private collaborator sub-pools, and
// truth labels naming the owning entity. Throws ConfigError on bad ranges.
RecordSet generate_synthetic(const SynthConfig& cfg);

// Deterministic class sizes following the quantiles of a continuous power law
// with minimum `min_size`, with the exponent solved so the sizes sum to
// `total`. The residue goes to the largest class.
std::vector<std::uint32_t> power_law_class_sizes(std::uint32_t total, std::uint32_t n_classes,
                                                 std::uint32_t min_size = 1);

}  // namespace trigraph
