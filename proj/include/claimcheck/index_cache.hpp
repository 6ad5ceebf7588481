#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "claimcheck/ingestion.hpp"
#include "claimcheck/retrieval.hpp"

namespace claimcheck::retrieval {

// Identity of a dense index on disk. Any field change invalidates the entry.
struct CacheKey {
  std::string doc_id;
  std::string config_hash;
  std::string embedder_id;

  std::string canonical() const;
};

// Hash over chunking config and passage contents.
std::string config_hash(const Document& doc, const ChunkConfig& cfg);

class IndexCache {
 public:
  explicit IndexCache(std::filesystem::path dir);

  std::optional<DenseIndex> load(const CacheKey& key) const;
  void store(const CacheKey& key, const DenseIndex& index) const;
  std::filesystem::path path_for(const CacheKey& key) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace claimcheck::retrieval
