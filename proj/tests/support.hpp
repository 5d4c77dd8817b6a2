#pragma once

// Shared helpers for the unit and acceptance tests.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "leaf/corpus_index.hpp"
#include "leaf/llm_gateway.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(LEAF_FIXTURE_DIR) / rel;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("leaf-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Straight evaluation of Okapi BM25 over pre-tokenized documents, one
// (doc, query) pair at a time. No inverted index, no shared code with the
// library beyond the token lists.
struct BruteBm25 {
  std::vector<std::vector<std::string>> docs;
  double k1 = 1.2;
  double b = 0.75;

  double score(std::size_t d, const std::vector<std::string>& query) const {
    const double n = static_cast<double>(docs.size());
    double total_len = 0;
    for (const auto& doc : docs) total_len += static_cast<double>(doc.size());
    const double avg = total_len / n;
    std::set<std::string> seen;
    double s = 0.0;
    for (const auto& term : query) {
      if (!seen.insert(term).second) continue;
      double df = 0;
      for (const auto& doc : docs) {
        for (const auto& t : doc) {
          if (t == term) {
            ++df;
            break;
          }
        }
      }
      double tf = 0;
      for (const auto& t : docs[d]) tf += (t == term);
      if (tf == 0) continue;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double len = static_cast<double>(docs[d].size());
      s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));
    }
    return s;
  }
};

// Backend that answers through a callback and records every prompt.
class ScriptedBackend final : public leaf::llm::Backend {
 public:
  using Fn = std::function<std::string(const std::string& prompt)>;
  explicit ScriptedBackend(Fn fn) : fn_(std::move(fn)) {}

  leaf::llm::GenResponse generate(const leaf::llm::GenRequest& req) override {
    const std::string prompt = leaf::llm::prompt_text(req);
    {
      std::lock_guard lock(mu_);
      prompts_.push_back(prompt);
    }
    leaf::llm::GenResponse r;
    r.backend_id = "scripted";
    for (int i = 0; i < req.n; ++i) r.texts.push_back(fn_(prompt));
    return r;
  }
  std::string id() const override { return "scripted"; }

  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }

 private:
  Fn fn_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

// Text between "STATEMENT:\n" and the next newline of a rendered prompt.
inline std::string statement_of(const std::string& prompt) {
  const std::string key = "STATEMENT:\n";
  const auto at = prompt.rfind(key);
  if (at == std::string::npos) return {};
  const auto start = at + key.size();
  return prompt.substr(start, prompt.find('\n', start) - start);
}

inline bool is_query_prompt(const std::string& prompt) {
  return prompt.find("markdown code block") != std::string::npos;
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (const char c : s) {
    if (c == '\'') {
      q += "'\\''";
    } else {
      q += c;
    }
  }
  return q + "'";
}

// Runs the leaf CLI with stdout and stderr captured to files in `scratch`.
inline CliResult run_cli(const std::vector<std::string>& args,
                         const std::filesystem::path& scratch) {
  std::string cmd = shell_quote(LEAF_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  const auto out = scratch / "cli.stdout";
  const auto err = scratch / "cli.stderr";
  cmd += " >" + shell_quote(out.string()) + " 2>" + shell_quote(err.string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace testing
