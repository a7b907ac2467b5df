#ifndef EWER_UTIL_HPP_
#define EWER_UTIL_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ewer {

// Shortest decimal string that round-trips the double. Locale independent,
// always '.' as the decimal separator.
std::string fmt_double(double value);

// Fixed 17 significant digits (%.17g), also round-trip exact.
std::string fmt_double17(double value);

std::vector<std::string> split_whitespace(std::string_view text);

// Number of UTF-8 code points that are not ASCII whitespace.
std::size_t count_graphemes(std::string_view token);

// One CSV file, written atomically on close. Cells are joined with ','
// and rows terminated with '\n'; callers format numbers themselves.
class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void close();

private:
  std::string path_;
  std::string buffer_;
  bool closed_ = false;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// CRC32 (zlib polynomial) of a byte string.
std::uint32_t crc32_str(std::string_view data);

}  // namespace ewer

#endif  // EWER_UTIL_HPP_
