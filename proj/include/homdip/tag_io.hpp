/**
 * @file tag_io.hpp
 * @brief HTAG binary time-tag files and CSV interchange.
 *
 * HTAG layout, all little-endian and tightly packed:
 *
 *   header  : "HTAG" | version u16 (=1) | resolution_fs u32 | reserved u32
 *   records : channel u8 | time u64      (9 bytes each, sorted)
 *
 * A file holding only the header is an empty stream. CSV files carry a
 * `channel,time_ps` header line and one tag per row.
 */
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "tags.hpp"

namespace homdip::tags {

inline constexpr std::array<char, 4> kHtagMagic{'H', 'T', 'A', 'G'};
inline constexpr std::uint16_t kHtagVersion = 1;
inline constexpr std::size_t kHtagHeaderSize = 14;
inline constexpr std::size_t kHtagRecordSize = 9;

static_assert(std::endian::native == std::endian::little, "HTAG I/O assumes a little-endian host");

namespace detail {
template <typename T>
void put(char* dst, T v) {
  std::memcpy(dst, &v, sizeof(T));
}
template <typename T>
T get(const char* src) {
  T v;
  std::memcpy(&v, src, sizeof(T));
  return v;
}
} // namespace detail

/// Sequential HTAG reader; holds one buffer of records at a time.
class HtagReader {
public:
  explicit HtagReader(const std::filesystem::path& path, std::size_t buffer_records = 1 << 16)
      : path_(path), in_(path, std::ios::binary), buffer_(buffer_records * kHtagRecordSize) {
    if (!in_) throw IoError("cannot open " + path.string());
    std::array<char, kHtagHeaderSize> header{};
    in_.read(header.data(), header.size());
    if (in_.gcount() < 4 || std::memcmp(header.data(), kHtagMagic.data(), 4) != 0) {
      throw FormatError(FormatError::Kind::bad_magic, path.string() + ": not an HTAG file (bad magic)");
    }
    if (static_cast<std::size_t>(in_.gcount()) < kHtagHeaderSize) {
      throw FormatError(FormatError::Kind::truncated_header, path.string() + ": truncated header");
    }
    const auto version = detail::get<std::uint16_t>(header.data() + 4);
    if (version != kHtagVersion) {
      throw FormatError(FormatError::Kind::version_mismatch,
                        path.string() + ": unsupported HTAG version " + std::to_string(version));
    }
    resolution_fs_ = detail::get<std::uint32_t>(header.data() + 6);
    if (resolution_fs_ == 0) throw FormatError(FormatError::Kind::bad_magic, path.string() + ": zero resolution");
  }

  double resolution() const { return static_cast<double>(resolution_fs_) * units::fs; }
  std::uint32_t resolution_fs() const { return resolution_fs_; }

  /// Reads the next tag; false at a clean end of file.
  bool next(TimeTag& tag) {
    if (pos_ == filled_ && !refill()) return false;
    const char* p = buffer_.data() + pos_;
    tag.channel = static_cast<std::uint8_t>(p[0]);
    tag.time = detail::get<std::uint64_t>(p + 1);
    pos_ += kHtagRecordSize;
    if (index_ > 0 && tag < last_) {
      throw FormatError(FormatError::Kind::unsorted,
                        path_.string() + ": record " + std::to_string(index_) + " out of order");
    }
    last_ = tag;
    ++index_;
    return true;
  }

private:
  bool refill() {
    in_.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got % kHtagRecordSize != 0) {
      throw FormatError(FormatError::Kind::truncated_record,
                        path_.string() + ": truncated record after " +
                            std::to_string(index_ + got / kHtagRecordSize) + " records");
    }
    pos_ = 0;
    filled_ = got;
    return got > 0;
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<char> buffer_;
  std::size_t pos_ = 0;
  std::size_t filled_ = 0;
  std::uint32_t resolution_fs_ = 0;
  std::uint64_t index_ = 0;
  TimeTag last_{};
};

/// Sequential HTAG writer. Records must arrive in sorted order.
class HtagWriter {
public:
  HtagWriter(const std::filesystem::path& path, double resolution)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot create " + path.string());
    const auto res_fs = std::llround(resolution / units::fs);
    if (res_fs <= 0 || res_fs > UINT32_MAX) throw ConfigError("resolution not representable in u32 femtoseconds");
    std::array<char, kHtagHeaderSize> header{};
    std::memcpy(header.data(), kHtagMagic.data(), 4);
    detail::put<std::uint16_t>(header.data() + 4, kHtagVersion);
    detail::put<std::uint32_t>(header.data() + 6, static_cast<std::uint32_t>(res_fs));
    detail::put<std::uint32_t>(header.data() + 10, 0);
    out_.write(header.data(), header.size());
    buffer_.reserve(1 << 20);
  }

  HtagWriter(const HtagWriter&) = delete;
  HtagWriter& operator=(const HtagWriter&) = delete;

  ~HtagWriter() {
    try {
      close();
    } catch (...) {
    }
  }

  void write(const TimeTag& tag) {
    if (count_ > 0 && tag < last_) {
      throw FormatError(FormatError::Kind::unsorted,
                        path_.string() + ": record " + std::to_string(count_) + " out of order");
    }
    char rec[kHtagRecordSize];
    rec[0] = static_cast<char>(tag.channel);
    detail::put<std::uint64_t>(rec + 1, tag.time);
    buffer_.insert(buffer_.end(), rec, rec + kHtagRecordSize);
    if (buffer_.size() >= (1 << 20)) flush();
    last_ = tag;
    ++count_;
  }

  void close() {
    if (!out_.is_open()) return;
    flush();
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

private:
  void flush() {
    out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    buffer_.clear();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

  std::filesystem::path path_;
  std::ofstream out_;
  std::vector<char> buffer_;
  std::uint64_t count_ = 0;
  TimeTag last_{};
};

inline TimeTagStream read_tags(const std::filesystem::path& path) {
  HtagReader reader(path);
  TimeTagStream s;
  s.resolution = reader.resolution();
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(path, ec);
  if (!ec && bytes > kHtagHeaderSize) s.tags.reserve((bytes - kHtagHeaderSize) / kHtagRecordSize);
  TimeTag t;
  while (reader.next(t)) s.tags.push_back(t);
  s.metadata["source_file"] = path.string();
  return s;
}

inline void write_tags(const TimeTagStream& stream, const std::filesystem::path& path) {
  HtagWriter writer(path, stream.resolution);
  for (const auto& t : stream.tags) writer.write(t);
  writer.close();
}

/// CSV with header `channel,time_ps`. Times are written exactly when the
/// resolution is a whole number of picoseconds.
inline void write_tags_csv(const TimeTagStream& stream, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  const std::int64_t res_fs = stream.resolution_fs();
  out << "channel,time_ps\n";
  for (const auto& t : stream.tags) {
    const unsigned __int128 fs = static_cast<unsigned __int128>(t.time) * static_cast<std::uint64_t>(res_fs);
    const auto whole = static_cast<std::uint64_t>(fs / 1000);
    const auto frac = static_cast<unsigned>(fs % 1000);
    out << static_cast<unsigned>(t.channel) << ',' << whole;
    if (frac != 0) {
      char buf[8];
      std::snprintf(buf, sizeof buf, ".%03u", frac);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

/// Reads a CSV written by write_tags_csv (or any `channel,time_ps` table),
/// quantizing times to `resolution`.
inline TimeTagStream read_tags_csv(const std::filesystem::path& path, double resolution = kDefaultResolution) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  TimeTagStream s;
  s.resolution = resolution;
  std::string line;
  std::size_t lineno = 0;
  const double res_ps = resolution / units::ps;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("channel", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw FormatError(FormatError::Kind::bad_csv, path.string() + ":" + std::to_string(lineno) + ": expected 2 columns");
    }
    try {
      std::size_t used = 0;
      const unsigned long ch = std::stoul(line.substr(0, comma), &used);
      const double t_ps = std::stod(line.substr(comma + 1));
      if (ch > 255 || !(t_ps >= 0.0)) throw std::out_of_range("value");
      s.tags.push_back({static_cast<std::uint64_t>(std::nearbyint(t_ps / res_ps)), static_cast<std::uint8_t>(ch)});
    } catch (const std::logic_error&) {
      throw FormatError(FormatError::Kind::bad_csv, path.string() + ":" + std::to_string(lineno) + ": bad value");
    }
  }
  s.require_sorted(path.string());
  s.metadata["source_file"] = path.string();
  return s;
}

} // namespace homdip::tags
