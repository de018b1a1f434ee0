#include "signrec/vector_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec {

namespace {
constexpr char kMagic[4] = {'S', 'R', 'A', 'G'};
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::size_t kNpos = static_cast<std::size_t>(-1);
}  // namespace

VectorStore::VectorStore(VectorStore&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  dim_ = other.dim_;
  codes_ = std::move(other.codes_);
  descriptions_ = std::move(other.descriptions_);
  data_ = std::move(other.data_);
}

VectorStore& VectorStore::operator=(VectorStore&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    dim_ = other.dim_;
    codes_ = std::move(other.codes_);
    descriptions_ = std::move(other.descriptions_);
    data_ = std::move(other.data_);
  }
  return *this;
}

VectorStore VectorStore::build(std::vector<StoreEntry> entries) {
  VectorStore store;
  if (entries.empty()) return store;

  store.dim_ = entries.front().vector.dim();
  for (auto& entry : entries) {
    if (entry.vector.dim() != store.dim_) {
      throw Error(ErrorKind::validation,
                  "dimension mismatch for " + entry.code.value + ": got " +
                      std::to_string(entry.vector.dim()) + ", store uses " +
                      std::to_string(store.dim_));
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const StoreEntry& a, const StoreEntry& b) { return a.code < b.code; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].code == entries[i - 1].code) {
      throw Error(ErrorKind::validation, "duplicate sign code: " + entries[i].code.value);
    }
  }

  store.codes_.reserve(entries.size());
  store.descriptions_.reserve(entries.size());
  store.data_.reserve(entries.size() * store.dim_);
  for (auto& entry : entries) {
    store.codes_.push_back(std::move(entry.code));
    store.descriptions_.push_back(std::move(entry.description));
    store.data_.insert(store.data_.end(), entry.vector.values.begin(),
                       entry.vector.values.end());
  }
  return store;
}

std::vector<QueryHit> VectorStore::query(const EmbeddingVector& vector, std::size_t k) const {
  if (k == 0) {
    throw Error(ErrorKind::validation, "k must be at least 1");
  }
  std::shared_lock lock(mutex_);
  if (codes_.empty()) {
    throw Error(ErrorKind::validation, "query against empty store");
  }
  if (vector.dim() != dim_) {
    throw Error(ErrorKind::validation,
                "query dimension " + std::to_string(vector.dim()) +
                    " does not match store dimension " + std::to_string(dim_));
  }

  const std::size_t n = codes_.size();
  std::vector<double> dist2(n);
  const float* base = data_.data();
  for (std::size_t row = 0; row < n; ++row) {
    const float* p = base + row * dim_;
    double sum = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      double d = static_cast<double>(p[j]) - static_cast<double>(vector.values[j]);
      sum += d * d;
    }
    dist2[row] = sum;
  }

  // rows are code-sorted, so (distance, row index) realizes the tie-break
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&dist2](std::size_t a, std::size_t b) {
    if (dist2[a] != dist2[b]) return dist2[a] < dist2[b];
    return a < b;
  };
  const std::size_t take = std::min(k, n);
  if (take < n) {
    std::nth_element(order.begin(), order.begin() + take - 1, order.end(), better);
    order.resize(take);
  }
  std::sort(order.begin(), order.end(), better);

  std::vector<QueryHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    QueryHit hit;
    hit.code = codes_[order[i]];
    hit.distance = std::sqrt(dist2[order[i]]);
    hit.rank = static_cast<int>(i) + 1;
    hits.push_back(std::move(hit));
  }
  return hits;
}

std::size_t VectorStore::row_of(const SignCode& code) const {
  auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
  if (it == codes_.end() || !(*it == code)) return kNpos;
  return static_cast<std::size_t>(it - codes_.begin());
}

void VectorStore::insert_row(StoreEntry entry) {
  auto it = std::lower_bound(codes_.begin(), codes_.end(), entry.code);
  std::size_t row = static_cast<std::size_t>(it - codes_.begin());
  codes_.insert(it, std::move(entry.code));
  descriptions_.insert(descriptions_.begin() + row, std::move(entry.description));
  data_.insert(data_.begin() + row * dim_, entry.vector.values.begin(),
               entry.vector.values.end());
}

void VectorStore::upsert(StoreEntry entry) {
  std::unique_lock lock(mutex_);
  if (codes_.empty() && dim_ == 0) {
    dim_ = entry.vector.dim();
  }
  if (entry.vector.dim() != dim_) {
    throw Error(ErrorKind::validation,
                "dimension mismatch for " + entry.code.value + ": got " +
                    std::to_string(entry.vector.dim()) + ", store uses " +
                    std::to_string(dim_));
  }
  std::size_t row = row_of(entry.code);
  if (row != kNpos) {
    descriptions_[row] = std::move(entry.description);
    std::copy(entry.vector.values.begin(), entry.vector.values.end(),
              data_.begin() + row * dim_);
    return;
  }
  insert_row(std::move(entry));
}

void VectorStore::remove(const SignCode& code) {
  std::unique_lock lock(mutex_);
  std::size_t row = row_of(code);
  if (row == kNpos) {
    throw Error(ErrorKind::not_found, "unknown sign code: " + code.value);
  }
  codes_.erase(codes_.begin() + row);
  descriptions_.erase(descriptions_.begin() + row);
  data_.erase(data_.begin() + row * dim_, data_.begin() + (row + 1) * dim_);
}

std::size_t VectorStore::size() const {
  std::shared_lock lock(mutex_);
  return codes_.size();
}

std::size_t VectorStore::dimension() const {
  std::shared_lock lock(mutex_);
  return dim_;
}

bool VectorStore::contains(const SignCode& code) const {
  std::shared_lock lock(mutex_);
  return row_of(code) != kNpos;
}

std::optional<StoreEntry> VectorStore::entry(const SignCode& code) const {
  std::shared_lock lock(mutex_);
  std::size_t row = row_of(code);
  if (row == kNpos) return std::nullopt;
  StoreEntry e;
  e.code = codes_[row];
  e.description = descriptions_[row];
  e.vector.values.assign(data_.begin() + row * dim_, data_.begin() + (row + 1) * dim_);
  return e;
}

SignDescription VectorStore::description_of(const SignCode& code) const {
  std::shared_lock lock(mutex_);
  std::size_t row = row_of(code);
  if (row == kNpos) {
    throw Error(ErrorKind::not_found, "unknown sign code: " + code.value);
  }
  return descriptions_[row];
}

std::vector<SignCode> VectorStore::codes() const {
  std::shared_lock lock(mutex_);
  return codes_;
}

void VectorStore::save(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::io, "cannot open store file for writing: " + path.string());
  }
  out.write(kMagic, 4);
  util::write_u32(out, kFormatVersion);
  util::write_u32(out, static_cast<std::uint32_t>(dim_));
  util::write_u64(out, codes_.size());
  util::write_u8(out, kDtypeF32);

  for (std::size_t row = 0; row < codes_.size(); ++row) {
    util::write_str(out, codes_[row].value);
    const SignDescription& d = descriptions_[row];
    util::write_str(out, d.appearance);
    util::write_u8(out, d.location ? 1 : 0);
    if (d.location) util::write_str(out, *d.location);
    util::write_u32(out, static_cast<std::uint32_t>(d.placeholders_used.size()));
    for (const auto& p : d.placeholders_used) util::write_str(out, p);
    for (std::size_t j = 0; j < dim_; ++j) {
      util::write_f32(out, data_[row * dim_ + j]);
    }
  }
  out.flush();
  if (!out) {
    throw Error(ErrorKind::io, "write failed: " + path.string());
  }
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open store file: " + path.string());
  }
  util::LeReader reader(in);

  char magic[4];
  for (auto& c : magic) c = static_cast<char>(reader.read_u8());
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw Error(ErrorKind::format, "bad store file magic in " + path.string());
  }
  std::uint32_t version = reader.read_u32();
  if (version != kFormatVersion) {
    throw Error(ErrorKind::format,
                "unsupported store format version " + std::to_string(version));
  }
  std::uint32_t dim = reader.read_u32();
  std::uint64_t count = reader.read_u64();
  std::uint8_t dtype = reader.read_u8();
  if (dtype != kDtypeF32) {
    throw Error(ErrorKind::format, "unsupported vector dtype " + std::to_string(dtype));
  }
  if (dim == 0 && count > 0) {
    throw Error(ErrorKind::corruption, "zero dimension with nonzero count");
  }

  VectorStore store;
  store.dim_ = dim;
  store.codes_.reserve(count);
  store.descriptions_.reserve(count);
  store.data_.reserve(count * dim);

  for (std::uint64_t row = 0; row < count; ++row) {
    std::string code_text = reader.read_str();
    if (!SignCode::valid(code_text)) {
      throw Error(ErrorKind::corruption,
                  "invalid sign code in store file at offset " +
                      std::to_string(reader.offset()));
    }
    SignDescription d;
    d.appearance = reader.read_str();
    if (reader.read_u8() != 0) d.location = reader.read_str();
    std::uint32_t n_placeholders = reader.read_u32();
    d.placeholders_used.reserve(n_placeholders);
    for (std::uint32_t i = 0; i < n_placeholders; ++i) {
      d.placeholders_used.push_back(reader.read_str());
    }
    store.codes_.push_back(SignCode{std::move(code_text)});
    store.descriptions_.push_back(std::move(d));
    for (std::uint32_t j = 0; j < dim; ++j) {
      store.data_.push_back(reader.read_f32());
    }
  }

  if (!std::is_sorted(store.codes_.begin(), store.codes_.end())) {
    throw Error(ErrorKind::corruption, "store rows not sorted by code");
  }
  return store;
}

}  // namespace signrec
