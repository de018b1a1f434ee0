#pragma once

#include <chrono>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace signrec::util {

// FNV-1a, the content-hash used to key mock backends and image handles.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view text);

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

// Deterministic generator used by all mock backends. Not std::mt19937: the
// stream must stay stable regardless of standard-library distribution
// implementations.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }
  // uniform in [0, 1)
  double next_double();
  // uniform in [0, bound)
  std::uint64_t next_below(std::uint64_t bound);
  // standard normal via Box-Muller
  double next_gaussian();

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
// lowercase alphanumeric runs; "SPEED LIMIT 50" -> {"speed","limit","50"}
std::vector<std::string> tokenize(std::string_view text);
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);
std::string replace_all(std::string_view text, std::string_view from, std::string_view to);

std::string base64_encode(const std::uint8_t* data, std::size_t len);

// Little-endian stream helpers for the store file format.
void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_str(std::ostream& out, std::string_view s);

// Readers throw Error(corruption) naming the byte offset on short reads.
class LeReader {
 public:
  explicit LeReader(std::istream& in) : in_(in) {}

  std::uint8_t read_u8();
  std::uint32_t read_u32();
  std::uint64_t read_u64();
  float read_f32();
  std::string read_str();
  std::size_t offset() const { return offset_; }

 private:
  void read_bytes(void* dst, std::size_t n);
  std::istream& in_;
  std::size_t offset_ = 0;
};

// half-up rounding to two decimals, used for all displayed percentages
double round_half_up2(double value);
std::string format2(double value);

// sleep_for plus a short spin so injected stage delays land within the
// profiler's measurement tolerance
void precise_sleep(std::chrono::microseconds duration);

}  // namespace signrec::util
