#include <fcntl.h>
#include <sys/file.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "eseman/error.hpp"
#include "eseman/node_store.hpp"

namespace eseman {
namespace {

constexpr char kMagic[8] = {'E', 'S', 'M', 'N', 'S', 'T', 'R', '1'};
constexpr std::uint32_t kVersion = 1;

struct Header {
  char magic[8];
  std::uint32_t version;
  std::uint32_t reserved0;
  std::uint64_t map_size;
  std::uint64_t data_end;  // first free byte
  std::uint64_t index_offset;
  std::uint64_t index_count;
  std::uint64_t reserved1[2];
};
static_assert(sizeof(Header) == 64);

std::string sys_error(const std::string& what, const std::filesystem::path& p) {
  return what + " " + p.string() + ": " + std::strerror(errno);
}

std::uint64_t align8(std::uint64_t v) { return (v + 7) & ~std::uint64_t{7}; }

}  // namespace

struct NodeStore::IndexEntry {
  std::array<std::byte, 8> key;  // big-endian packed key
  std::uint64_t offset;          // of the record's length prefix
  std::uint32_t length;          // payload bytes
  std::uint32_t reserved;
};
static_assert(sizeof(std::array<std::byte, 8>) == 8);

NodeStore::NodeStore(const StoreConfig& config) : read_only_(config.read_only) {
  const auto& path = config.path;
  const bool exists = std::filesystem::exists(path);
  if (!exists && read_only_) throw StoreError("node store not found: " + path.string());

  fd_ = ::open(path.c_str(), read_only_ ? O_RDONLY : (O_RDWR | O_CREAT), 0644);
  if (fd_ < 0) throw StoreError(sys_error("cannot open", path));
  if (::flock(fd_, (read_only_ ? LOCK_SH : LOCK_EX) | LOCK_NB) != 0) {
    ::close(fd_);
    throw StoreError("node store is locked by another " +
                     std::string(read_only_ ? "writer" : "reader or writer") + ": " +
                     path.string());
  }

  struct stat st {};
  ::fstat(fd_, &st);
  Header h{};
  const bool fresh = static_cast<std::size_t>(st.st_size) < sizeof(Header);
  if (fresh) {
    if (read_only_) {
      ::close(fd_);
      throw StoreError("node store is empty: " + path.string());
    }
    if (config.map_size_bytes < sizeof(Header)) {
      ::close(fd_);
      throw CapacityError(sizeof(Header), config.map_size_bytes);
    }
    std::memcpy(h.magic, kMagic, sizeof(kMagic));
    h.version = kVersion;
    h.map_size = config.map_size_bytes;
    h.data_end = sizeof(Header);
    h.index_offset = sizeof(Header);
    h.index_count = 0;
    if (::ftruncate(fd_, static_cast<off_t>(h.map_size)) != 0 ||
        ::pwrite(fd_, &h, sizeof(h), 0) != static_cast<ssize_t>(sizeof(h))) {
      const std::string msg = sys_error("cannot initialize", path);
      ::close(fd_);
      throw StoreError(msg);
    }
  } else {
    if (::pread(fd_, &h, sizeof(h), 0) != static_cast<ssize_t>(sizeof(h)) ||
        std::memcmp(h.magic, kMagic, sizeof(kMagic)) != 0 || h.version != kVersion) {
      ::close(fd_);
      throw StoreError("not a node store: " + path.string());
    }
    if (static_cast<std::uint64_t>(st.st_size) < h.map_size) {
      ::close(fd_);
      throw StoreError("node store file is truncated: " + path.string());
    }
  }
  map_size_ = h.map_size;

  void* p = ::mmap(nullptr, map_size_, read_only_ ? PROT_READ : (PROT_READ | PROT_WRITE),
                   MAP_SHARED, fd_, 0);
  if (p == MAP_FAILED) {
    const std::string msg = sys_error("cannot map", path);
    ::close(fd_);
    throw StoreError(msg);
  }
  base_ = static_cast<std::byte*>(p);
}

NodeStore::~NodeStore() {
  if (base_) ::munmap(base_, map_size_);
  if (fd_ >= 0) ::close(fd_);  // releases the lock
}

std::span<const NodeStore::IndexEntry> NodeStore::index() const {
  Header h;
  std::memcpy(&h, base_, sizeof(h));
  return {reinterpret_cast<const IndexEntry*>(base_ + h.index_offset), h.index_count};
}

std::uint64_t NodeStore::size() const { return index().size(); }

std::uint64_t NodeStore::bytes_used() const {
  Header h;
  std::memcpy(&h, base_, sizeof(h));
  return h.data_end;
}

const NodeStore::IndexEntry* NodeStore::find(NodeKey key) const {
  const auto idx = index();
  const auto k = key.bytes();
  const auto it = std::lower_bound(idx.begin(), idx.end(), k, [](const IndexEntry& e, const auto& k) {
    return std::memcmp(e.key.data(), k.data(), 8) < 0;
  });
  if (it == idx.end() || std::memcmp(it->key.data(), k.data(), 8) != 0) return nullptr;
  return &*it;
}

bool NodeStore::contains(NodeKey key) const { return find(key) != nullptr; }

std::span<const std::byte> NodeStore::get_bytes(NodeKey key) const {
  const IndexEntry* e = find(key);
  if (!e) {
    throw NotFoundError("node " + std::to_string(key.tree_id) + ":" +
                        std::to_string(key.preorder) + " not in store");
  }
  return {base_ + e->offset + sizeof(std::uint32_t), e->length};
}

SummaryNode NodeStore::load(NodeKey key) const { return decode_node(get_bytes(key)); }

std::size_t NodeStore::put_trees(std::span<const Tree> trees) {
  if (read_only_) throw StoreError("node store is open read-only");

  // Stage records and their index entries outside the map.
  std::vector<std::byte> payload;
  std::vector<IndexEntry> added;
  for (const Tree& t : trees) {
    for (const SummaryNode& n : t.nodes) {
      const std::size_t at = payload.size();
      payload.resize(at + sizeof(std::uint32_t));
      encode_node(n, payload);
      const auto len = static_cast<std::uint32_t>(payload.size() - at - sizeof(std::uint32_t));
      std::memcpy(payload.data() + at, &len, sizeof(len));
      added.push_back({n.key.bytes(), at, len, 0});
    }
  }
  if (added.empty()) return 0;

  const auto by_key = [](const IndexEntry& a, const IndexEntry& b) {
    return std::memcmp(a.key.data(), b.key.data(), 8) < 0;
  };
  std::stable_sort(added.begin(), added.end(), by_key);
  // Within one write the last record for a key wins.
  std::vector<IndexEntry> fresh;
  fresh.reserve(added.size());
  for (const IndexEntry& e : added) {
    if (!fresh.empty() && std::memcmp(fresh.back().key.data(), e.key.data(), 8) == 0) {
      fresh.back() = e;
    } else {
      fresh.push_back(e);
    }
  }

  Header h;
  std::memcpy(&h, base_, sizeof(h));
  const std::uint64_t data_at = h.data_end;
  for (IndexEntry& e : fresh) e.offset += data_at;

  // Merge with the committed index; new records replace old ones.
  const auto old = index();
  std::vector<IndexEntry> merged;
  merged.reserve(old.size() + fresh.size());
  std::size_t i = 0, j = 0;
  while (i < old.size() || j < fresh.size()) {
    if (j == fresh.size() || (i < old.size() && by_key(old[i], fresh[j]))) {
      merged.push_back(old[i++]);
    } else {
      if (i < old.size() && !by_key(fresh[j], old[i])) ++i;
      merged.push_back(fresh[j++]);
    }
  }

  const std::uint64_t index_at = align8(data_at + payload.size());
  const std::uint64_t required = index_at + merged.size() * sizeof(IndexEntry);
  if (required > map_size_) throw CapacityError(required, map_size_);

  std::memcpy(base_ + data_at, payload.data(), payload.size());
  std::memcpy(base_ + index_at, merged.data(), merged.size() * sizeof(IndexEntry));
  if (::msync(base_, required, MS_SYNC) != 0) throw StoreError("msync failed");

  // Publishing the header commits the write.
  h.data_end = required;
  h.index_offset = index_at;
  h.index_count = merged.size();
  std::memcpy(base_, &h, sizeof(h));
  ::msync(base_, sizeof(h), MS_SYNC);
  return fresh.size();
}

}  // namespace eseman
