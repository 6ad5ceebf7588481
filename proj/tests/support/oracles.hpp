#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace claimcheck::testing {

std::filesystem::path fixture(const std::string& relative);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Okapi BM25 straight from its definition: for every passage and every query
// token occurrence, count tf and df by scanning raw token lists.
std::vector<double> naive_bm25(const std::vector<std::string>& passages, const std::string& query, double k1,
                               double b);

// Indices with score > 0, ordered by score desc then index asc.
std::vector<std::size_t> rank_positive(const std::vector<double>& scores);

// Exhaustive cosine top-k with plain loops; ties break by lower index.
std::vector<std::pair<std::size_t, double>> brute_force_cosine(const std::vector<std::vector<double>>& rows,
                                                               const std::vector<double>& query, std::size_t k);

std::vector<double> random_unit_vector(std::mt19937_64& rng, std::size_t dim);

// Sentence-like text of `words` words drawn from a small vocabulary so terms repeat.
std::string random_text(std::mt19937_64& rng, std::size_t words, std::size_t vocabulary = 40);

}  // namespace claimcheck::testing
