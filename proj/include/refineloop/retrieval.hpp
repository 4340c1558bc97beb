#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "refineloop/errors.hpp"

namespace refineloop {

struct Document {
  std::string id;
  std::string title;
  std::string body;
};

struct RetrievalConfig {
  int top_k = 3;
  int doc_token_budget = 512;
};

struct ScoredDoc {
  const Document* doc = nullptr;
  double score = 0.0;
};

/// BM25 inverted index over title + body tokens. Immutable after build;
/// concurrent queries are safe.
class RetrievalIndex {
 public:
  static RetrievalIndex build(std::vector<Document> corpus, double k1 = 1.2, double b = 0.75);

  /// Top-k by BM25 score descending, ties broken by doc id ascending. Zero
  /// matches yield an empty list; a query with no tokens throws EmptyQuery.
  std::vector<Document> query(std::string_view q, const RetrievalConfig& cfg) const;
  std::vector<ScoredDoc> query_scored(std::string_view q, int top_k) const;

  std::size_t doc_count() const { return docs_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  double k1() const { return k1_; }
  double b() const { return b_; }
  const std::vector<Document>& docs() const { return docs_; }
  std::size_t postings_size(std::string_view term) const;

  void save(const std::string& path) const;
  static RetrievalIndex load(const std::string& path);

 private:
  RetrievalIndex() = default;
  void build_postings();

  std::vector<Document> docs_;  // sorted by id ascending
  std::vector<std::size_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
  double k1_ = 1.2;
  double b_ = 0.75;
  // term -> list of (doc position, term frequency), sorted by doc position
  std::unordered_map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>> postings_;
};

std::vector<Document> load_corpus(const std::string& path);
void save_corpus(const std::string& path, const std::vector<Document>& corpus);

/// "[Doc i: <title>] <body>" segments joined by newlines, truncated to
/// cfg.doc_token_budget whitespace tokens. Empty input yields the sentinel
/// "No results found."
std::string render_documents_block(const std::vector<Document>& docs, const RetrievalConfig& cfg);

inline constexpr std::string_view kNoResultsSentinel = "No results found.";

}  // namespace refineloop
