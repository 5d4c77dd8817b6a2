#include "leaf/corpus_index.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "leaf/error.hpp"
#include "leaf/jsonl.hpp"

namespace leaf::corpus {

using json = nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    const bool mark = c >= 0 && (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0;
    if (c >= 0 && (u_isalnum(c) || (mark && !current.empty()))) {
      const UChar32 lower = u_tolower(c);
      char buf[U8_MAX_LENGTH];
      std::int32_t n = 0;
      UBool error = false;
      U8_APPEND(reinterpret_cast<std::uint8_t*>(buf), n, U8_MAX_LENGTH, lower, error);
      if (!error) current.append(buf, static_cast<std::size_t>(n));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Bm25Index::Bm25Index(Bm25Index&&) noexcept = default;
Bm25Index& Bm25Index::operator=(Bm25Index&&) noexcept = default;
Bm25Index::~Bm25Index() = default;

Bm25Index Bm25Index::build(std::span<const Document> docs, Bm25Params params) {
  if (docs.empty()) throw Error(Errc::empty_input, "cannot build an index over an empty corpus");
  if (!(params.k1 > 0.0)) throw Error(Errc::invalid_argument, "BM25 k1 must be > 0");
  if (!(params.b >= 0.0 && params.b <= 1.0)) {
    throw Error(Errc::invalid_argument, "BM25 b must lie in [0, 1]");
  }

  Bm25Index index;
  index.params_ = params;
  index.docs_.assign(docs.begin(), docs.end());
  index.doc_len_.resize(docs.size());

  for (std::size_t d = 0; d < docs.size(); ++d) {
    const Document& doc = docs[d];
    if (doc.id.empty()) {
      throw Error(Errc::invalid_argument, "document #" + std::to_string(d) + " has an empty id");
    }
    if (doc.text.empty()) {
      throw Error(Errc::invalid_argument, "document \"" + doc.id + "\" has empty text");
    }
    if (!index.doc_ids_.emplace(doc.id, static_cast<std::uint32_t>(d)).second) {
      throw Error(Errc::duplicate_id, "duplicate document id \"" + doc.id + "\"");
    }

    std::map<std::uint32_t, std::uint32_t> counts;
    const auto tokens = tokenize(doc.text);
    for (const auto& token : tokens) {
      auto [it, inserted] =
          index.term_ids_.emplace(token, static_cast<std::uint32_t>(index.vocab_.size()));
      if (inserted) {
        index.vocab_.push_back(token);
        index.postings_.emplace_back();
      }
      ++counts[it->second];
    }
    index.doc_len_[d] = static_cast<std::uint32_t>(tokens.size());
    for (const auto& [term, tf] : counts) {
      index.postings_[term].push_back({static_cast<std::uint32_t>(d), tf});
    }
  }
  index.finalize();
  return index;
}

void Bm25Index::finalize() {
  const std::size_t n = docs_.size();
  std::uint64_t total = 0;
  for (const auto len : doc_len_) total += len;

  stats_.doc_count = n;
  stats_.vocab_size = vocab_.size();
  stats_.avg_doc_len = static_cast<double>(total) / static_cast<double>(n);

  idf_.resize(postings_.size());
  for (std::size_t t = 0; t < postings_.size(); ++t) {
    const double df = static_cast<double>(postings_[t].size());
    idf_[t] = std::log(1.0 + (static_cast<double>(n) - df + 0.5) / (df + 0.5));
  }

  posting_spans_.assign(postings_.begin(), postings_.end());
}

kernels::Bm25Layout Bm25Index::layout() const {
  kernels::Bm25Layout l;
  l.postings = posting_spans_;
  l.doc_len = doc_len_;
  l.idf = idf_;
  // A corpus with no word characters at all never matches; keep the divisor sane.
  l.avg_doc_len = stats_.avg_doc_len > 0.0 ? stats_.avg_doc_len : 1.0;
  l.k1 = params_.k1;
  l.b = params_.b;
  return l;
}

std::vector<std::uint32_t> Bm25Index::query_terms(std::string_view query) const {
  std::vector<std::uint32_t> terms;
  for (const auto& token : tokenize(query)) {
    const auto it = term_ids_.find(token);
    if (it == term_ids_.end()) continue;
    if (std::find(terms.begin(), terms.end(), it->second) == terms.end()) {
      terms.push_back(it->second);
    }
  }
  return terms;
}

std::vector<double> Bm25Index::score_all(std::string_view query, kernels::Exec exec) const {
  std::vector<double> scores(docs_.size(), 0.0);
  const auto terms = query_terms(query);
  if (!terms.empty()) kernels::bm25_scores(exec, layout(), terms, scores);
  return scores;
}

std::vector<RetrievedDoc> Bm25Index::retrieve(std::string_view query, std::size_t k) const {
  if (k == 0) throw Error(Errc::invalid_argument, "retrieve: k must be >= 1");
  const auto terms = query_terms(query);
  if (terms.empty()) return {};

  std::vector<double> scores(docs_.size(), 0.0);
  kernels::bm25_scores(kernels::Exec::parallel, layout(), terms, scores);

  std::vector<std::uint32_t> matched;
  for (std::size_t d = 0; d < scores.size(); ++d) {
    if (scores[d] > 0.0) matched.push_back(static_cast<std::uint32_t>(d));
  }
  const std::size_t take = std::min(k, matched.size());
  if (take == 0) return {};

  // Documents whose scores are equal in exact arithmetic can come out a few
  // ulps apart in double, which would bypass the id tie-break. Rescore every
  // document near or above the k-th score in quad precision and rank on that
  // result rounded back to double: exact ties then compare equal.
  if (take < matched.size()) {
    std::nth_element(matched.begin(), matched.begin() + static_cast<std::ptrdiff_t>(take - 1),
                     matched.end(), [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b]; });
    const double floor = scores[matched[take - 1]] * (1.0 - 1e-9);
    std::erase_if(matched, [&](std::uint32_t d) { return scores[d] < floor; });
  }
  std::vector<double> refined(matched.size());
  for (std::size_t i = 0; i < matched.size(); ++i) refined[i] = rescore(matched[i], terms);
  std::vector<std::size_t> order(matched.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (refined[a] != refined[b]) return refined[a] > refined[b];
    return docs_[matched[a]].id < docs_[matched[b]].id;
  });

  std::vector<RetrievedDoc> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto d = matched[order[i]];
    out.push_back({docs_[d].id, refined[order[i]], docs_[d].text});
  }
  return out;
}

double Bm25Index::rescore(std::uint32_t doc, std::span<const std::uint32_t> terms) const {
  __extension__ typedef __float128 Quad;
  const Quad k1 = params_.k1;
  const Quad b = params_.b;
  const Quad avg = stats_.avg_doc_len > 0.0 ? stats_.avg_doc_len : 1.0;
  const Quad len = doc_len_[doc];
  Quad total = 0;
  for (const auto t : terms) {
    const auto& plist = postings_[t];
    const auto it = std::lower_bound(plist.begin(), plist.end(), doc,
                                     [](const kernels::Posting& p, std::uint32_t d) { return p.doc < d; });
    if (it == plist.end() || it->doc != doc) continue;
    const Quad tf = it->tf;
    total += Quad(idf_[t]) * (tf * (k1 + 1)) / (tf + k1 * (1 - b + b * len / avg));
  }
  return static_cast<double>(total);
}

bool Bm25Index::contains(std::string_view doc_id) const {
  return doc_ids_.find(std::string(doc_id)) != doc_ids_.end();
}

void Bm25Index::save(std::ostream& out) const {
  json j;
  j["format"] = kFormatName;
  j["version"] = kFormatVersion;
  j["params"] = {{"k1", params_.k1}, {"b", params_.b}};
  j["stats"] = {{"doc_count", stats_.doc_count},
                {"avg_doc_len", stats_.avg_doc_len},
                {"vocab_size", stats_.vocab_size}};
  json docs = json::array();
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    docs.push_back({{"id", docs_[d].id},
                    {"title", docs_[d].title},
                    {"text", docs_[d].text},
                    {"len", doc_len_[d]}});
  }
  j["docs"] = std::move(docs);
  j["vocab"] = vocab_;
  json postings = json::array();
  for (const auto& list : postings_) {
    json flat = json::array();
    for (const auto& p : list) {
      flat.push_back(p.doc);
      flat.push_back(p.tf);
    }
    postings.push_back(std::move(flat));
  }
  j["postings"] = std::move(postings);
  out << j.dump() << '\n';
  if (!out) throw Error(Errc::io, "failed writing index");
}

Bm25Index Bm25Index::load(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_input, std::string("index is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kFormatName) {
    throw Error(Errc::unsupported_format, "not a leaf BM25 index file");
  }
  if (j.value("version", -1) != kFormatVersion) {
    throw Error(Errc::unsupported_format,
                "unsupported index version " + j.value("version", json(-1)).dump());
  }

  Bm25Index index;
  try {
    index.params_.k1 = j.at("params").at("k1").get<double>();
    index.params_.b = j.at("params").at("b").get<double>();
    for (const auto& d : j.at("docs")) {
      index.docs_.push_back({d.at("id").get<std::string>(), d.at("title").get<std::string>(),
                             d.at("text").get<std::string>()});
      index.doc_len_.push_back(d.at("len").get<std::uint32_t>());
    }
    index.vocab_ = j.at("vocab").get<std::vector<std::string>>();
    const auto& postings = j.at("postings");
    if (postings.size() != index.vocab_.size()) {
      throw Error(Errc::malformed_input, "index postings/vocab size mismatch");
    }
    for (std::size_t t = 0; t < postings.size(); ++t) {
      const auto flat = postings[t].get<std::vector<std::uint32_t>>();
      if (flat.size() % 2 != 0) throw Error(Errc::malformed_input, "odd posting list");
      auto& list = index.postings_.emplace_back();
      for (std::size_t i = 0; i < flat.size(); i += 2) {
        const std::uint32_t doc = flat[i];
        if (doc >= index.docs_.size()) throw Error(Errc::malformed_input, "posting out of range");
        if (!list.empty() && list.back().doc >= doc) {
          throw Error(Errc::malformed_input, "posting list not sorted by document");
        }
        list.push_back({doc, flat[i + 1]});
      }
      index.term_ids_.emplace(index.vocab_[t], static_cast<std::uint32_t>(t));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_input, std::string("index field error: ") + e.what());
  }
  if (index.docs_.empty()) throw Error(Errc::malformed_input, "index has no documents");
  for (std::size_t d = 0; d < index.docs_.size(); ++d) {
    if (!index.doc_ids_.emplace(index.docs_[d].id, static_cast<std::uint32_t>(d)).second) {
      throw Error(Errc::duplicate_id, "duplicate document id \"" + index.docs_[d].id + "\"");
    }
  }
  index.finalize();
  if (index.stats_.doc_count != j["stats"].value("doc_count", std::size_t{0}) ||
      index.stats_.vocab_size != j["stats"].value("vocab_size", std::size_t{0})) {
    throw Error(Errc::malformed_input, "index stats do not match its contents");
  }
  return index;
}

void Bm25Index::save_file(const std::filesystem::path& path) const {
  auto out = jsonl::open_output(path);
  save(out);
}

Bm25Index Bm25Index::load_file(const std::filesystem::path& path) {
  auto in = jsonl::open_input(path);
  return load(in);
}

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path) {
  std::vector<Document> docs;
  jsonl::for_each_line(path, [&](const json& j, std::size_t line_no) {
    Document doc;
    doc.id = jsonl::get_string(j, "id", line_no);
    doc.title = j.contains("title") ? jsonl::get_string(j, "title", line_no) : std::string();
    doc.text = jsonl::get_string(j, "text", line_no);
    docs.push_back(std::move(doc));
  });
  return docs;
}

}  // namespace leaf::corpus
