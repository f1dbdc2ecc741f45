#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace clir::io {

/// Little-endian byte packer for section payloads. Doubles round-trip
/// bit-exactly via their IEEE-754 representation.
class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { buf_.push_back(v); }
  void put_u16(std::uint16_t v);
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_i64(std::int64_t v);
  void put_f64(double v);
  void put_string(std::string_view s);  // u32 length prefix + bytes
  void put_f64_span(std::span<const double> xs);
  void put_i64_span(std::span<const std::int64_t> xs);

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t get_u8();
  std::uint16_t get_u16();
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  std::int64_t get_i64();
  double get_f64();
  std::string get_string();
  std::vector<double> get_f64_vec(std::size_t n);
  std::vector<std::int64_t> get_i64_vec(std::size_t n);
  std::span<const std::uint8_t> get_raw(std::size_t n);
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// Required header fields for every model file; extra carries
/// model-specific keys merged into the header JSON object.
struct ContainerHeader {
  int format_version = 1;
  std::string type;
  std::vector<std::string> languages;
  std::uint64_t vocab_size = 0;
  nlohmann::json extra = nlohmann::json::object();
};

/// Writes a container atomically: payload goes to <path>.tmp and is renamed
/// into place on finish(), so a crash never leaves a truncated file behind.
class ContainerWriter {
 public:
  ContainerWriter(std::filesystem::path path, ContainerHeader header);
  void add_section(std::string_view name, const ByteWriter& payload);
  void add_section(std::string_view name, std::span<const std::uint8_t> payload);
  void finish();

 private:
  std::filesystem::path path_;
  ContainerHeader header_;
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> sections_;
  bool finished_ = false;
};

class ContainerReader {
 public:
  explicit ContainerReader(const std::filesystem::path& path);

  const ContainerHeader& header() const { return header_; }
  const nlohmann::json& header_json() const { return header_json_; }
  bool has_section(std::string_view name) const;
  /// Throws if the section is absent.
  std::span<const std::uint8_t> section(std::string_view name) const;

 private:
  ContainerHeader header_;
  nlohmann::json header_json_;
  std::map<std::string, std::vector<std::uint8_t>, std::less<>> sections_;
};

/// Requires header type to match; throws with both names otherwise.
void expect_type(const ContainerReader& reader, std::string_view type);

}  // namespace clir::io
