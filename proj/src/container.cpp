#include "clir/container.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

namespace clir::io {

namespace {
constexpr char kMagic[8] = {'C', 'L', 'I', 'R', 'B', 'I', 'N', '\n'};
}

void ByteWriter::put_u16(std::uint16_t v) {
  buf_.push_back(static_cast<std::uint8_t>(v & 0xFF));
  buf_.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }

void ByteWriter::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::put_string(std::string_view s) {
  if (s.size() > 0xFFFFFFFFu) throw std::length_error("string too long for container");
  put_u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::put_f64_span(std::span<const double> xs) {
  put_u64(xs.size());
  for (double x : xs) put_f64(x);
}

void ByteWriter::put_i64_span(std::span<const std::int64_t> xs) {
  put_u64(xs.size());
  for (std::int64_t x : xs) put_i64(x);
}

void ByteReader::need(std::size_t n) const {
  if (pos_ + n > data_.size()) throw std::runtime_error("container section truncated");
}

std::uint8_t ByteReader::get_u8() {
  need(1);
  return data_[pos_++];
}

std::uint16_t ByteReader::get_u16() {
  need(2);
  std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::get_u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::get_u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

std::int64_t ByteReader::get_i64() { return static_cast<std::int64_t>(get_u64()); }

double ByteReader::get_f64() { return std::bit_cast<double>(get_u64()); }

std::string ByteReader::get_string() {
  const std::uint32_t n = get_u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<double> ByteReader::get_f64_vec(std::size_t n) {
  const std::uint64_t stored = get_u64();
  if (stored != n) throw std::runtime_error("container vector length mismatch");
  std::vector<double> out(n);
  for (auto& x : out) x = get_f64();
  return out;
}

std::vector<std::int64_t> ByteReader::get_i64_vec(std::size_t n) {
  const std::uint64_t stored = get_u64();
  if (stored != n) throw std::runtime_error("container vector length mismatch");
  std::vector<std::int64_t> out(n);
  for (auto& x : out) x = get_i64();
  return out;
}

std::span<const std::uint8_t> ByteReader::get_raw(std::size_t n) {
  need(n);
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

ContainerWriter::ContainerWriter(std::filesystem::path path, ContainerHeader header)
    : path_(std::move(path)), header_(std::move(header)) {
  if (header_.type.empty()) throw std::invalid_argument("container header needs a type");
}

void ContainerWriter::add_section(std::string_view name, const ByteWriter& payload) {
  add_section(name, std::span<const std::uint8_t>(payload.bytes()));
}

void ContainerWriter::add_section(std::string_view name, std::span<const std::uint8_t> payload) {
  if (finished_) throw std::logic_error("container already finished");
  sections_.emplace_back(std::string(name),
                         std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

void ContainerWriter::finish() {
  if (finished_) throw std::logic_error("container already finished");
  finished_ = true;

  nlohmann::json hdr = header_.extra;
  hdr["format_version"] = header_.format_version;
  hdr["type"] = header_.type;
  hdr["languages"] = header_.languages;
  hdr["vocab_size"] = header_.vocab_size;
  const std::string hdr_text = hdr.dump();

  const std::filesystem::path tmp = path_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    ByteWriter head;
    head.put_u32(static_cast<std::uint32_t>(hdr_text.size()));
    out.write(reinterpret_cast<const char*>(head.bytes().data()),
              static_cast<std::streamsize>(head.bytes().size()));
    out.write(hdr_text.data(), static_cast<std::streamsize>(hdr_text.size()));
    for (const auto& [name, payload] : sections_) {
      ByteWriter meta;
      meta.put_u32(static_cast<std::uint32_t>(name.size()));
      out.write(reinterpret_cast<const char*>(meta.bytes().data()),
                static_cast<std::streamsize>(meta.bytes().size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      ByteWriter len;
      len.put_u64(payload.size());
      out.write(reinterpret_cast<const char*>(len.bytes().data()),
                static_cast<std::streamsize>(len.bytes().size()));
      out.write(reinterpret_cast<const char*>(payload.data()),
                static_cast<std::streamsize>(payload.size()));
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path_);
}

ContainerReader::ContainerReader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<std::uint8_t> data{std::istreambuf_iterator<char>(in),
                                 std::istreambuf_iterator<char>()};
  if (data.size() < sizeof(kMagic) + 4 ||
      !std::equal(kMagic, kMagic + sizeof(kMagic), data.begin()))
    throw std::runtime_error("not a model container: " + path.string());

  ByteReader r({data.data() + sizeof(kMagic), data.size() - sizeof(kMagic)});
  const std::uint32_t hdr_len = r.get_u32();
  auto hdr_raw = r.get_raw(hdr_len);
  const std::string hdr_text(reinterpret_cast<const char*>(hdr_raw.data()), hdr_raw.size());
  header_json_ = nlohmann::json::parse(hdr_text);
  header_.format_version = header_json_.at("format_version").get<int>();
  if (header_.format_version != 1)
    throw std::runtime_error("unsupported container format_version " +
                             std::to_string(header_.format_version));
  header_.type = header_json_.at("type").get<std::string>();
  header_.languages = header_json_.at("languages").get<std::vector<std::string>>();
  header_.vocab_size = header_json_.at("vocab_size").get<std::uint64_t>();
  header_.extra = header_json_;

  while (!r.exhausted()) {
    std::string name = r.get_string();
    const std::uint64_t len = r.get_u64();
    auto raw = r.get_raw(len);
    sections_.emplace(std::move(name), std::vector<std::uint8_t>(raw.begin(), raw.end()));
  }
}

bool ContainerReader::has_section(std::string_view name) const {
  return sections_.find(name) != sections_.end();
}

std::span<const std::uint8_t> ContainerReader::section(std::string_view name) const {
  auto it = sections_.find(name);
  if (it == sections_.end())
    throw std::runtime_error("container missing section: " + std::string(name));
  return it->second;
}

void expect_type(const ContainerReader& reader, std::string_view type) {
  if (reader.header().type != type)
    throw std::runtime_error("container type mismatch: expected " + std::string(type) +
                             ", found " + reader.header().type);
}

}  // namespace clir::io
