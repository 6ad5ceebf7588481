#include "claimcheck/index_cache.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "claimcheck/error.hpp"
#include "claimcheck/hashing.hpp"

namespace claimcheck::retrieval {
namespace {

constexpr char kMagic[4] = {'C', 'C', 'D', 'I'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_pod(std::ifstream& in, T& value) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod(out, static_cast<std::uint64_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

bool read_string(std::ifstream& in, std::string& s) {
  std::uint64_t n = 0;
  if (!read_pod(in, n) || n > (1u << 30)) return false;
  s.resize(n);
  return static_cast<bool>(in.read(s.data(), static_cast<std::streamsize>(n)));
}

}  // namespace

std::string CacheKey::canonical() const { return doc_id + '\x1f' + config_hash + '\x1f' + embedder_id; }

std::string config_hash(const Document& doc, const ChunkConfig& cfg) {
  std::uint64_t h = fnv1a64(cfg.tokenizer);
  h = fnv1a64(std::to_string(cfg.size_tokens) + "/" + std::to_string(cfg.overlap_tokens), h);
  for (const auto& p : doc.passages) {
    h = fnv1a64(p.passage_id, h);
    h = fnv1a64(p.text, h);
  }
  return hex64(h);
}

IndexCache::IndexCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path IndexCache::path_for(const CacheKey& key) const {
  return dir_ / ("dense-" + hex64(fnv1a64(key.canonical())) + ".bin");
}

std::optional<DenseIndex> IndexCache::load(const CacheKey& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  std::uint32_t version = 0;
  std::string stored_key;
  std::uint64_t dim = 0;
  std::uint64_t count = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) return std::nullopt;
  if (!read_pod(in, version) || version != kVersion) return std::nullopt;
  if (!read_string(in, stored_key) || stored_key != key.canonical()) return std::nullopt;
  if (!read_pod(in, dim) || !read_pod(in, count) || dim == 0 || count > (1u << 24)) return std::nullopt;
  std::vector<std::string> ids(count);
  for (auto& id : ids) {
    if (!read_string(in, id)) return std::nullopt;
  }
  std::vector<double> data(dim * count);
  if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)))) {
    return std::nullopt;
  }
  return DenseIndex::from_vectors(std::move(ids), dim, std::move(data), key.embedder_id);
}

void IndexCache::store(const CacheKey& key, const DenseIndex& index) const {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  const auto path = path_for(key);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write index cache " + tmp);
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_string(out, key.canonical());
    write_pod(out, static_cast<std::uint64_t>(index.dim()));
    write_pod(out, static_cast<std::uint64_t>(index.size()));
    for (const auto& id : index.passage_ids()) write_string(out, id);
    out.write(reinterpret_cast<const char*>(index.data().data()),
              static_cast<std::streamsize>(index.data().size() * sizeof(double)));
    if (!out) throw Error(ErrorCode::Io, "short write to index cache " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace claimcheck::retrieval
