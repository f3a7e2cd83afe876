#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace unidecon {

// Shortest form is not used on purpose: 17 significant digits, '.' decimal
// separator regardless of locale.
std::string format_double(double x);

// Locale-independent full-string parse; throws DataError on garbage.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Index of a named column; throws DataError when missing.
  std::size_t column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;
};

// Numeric CSV with a header line. Lines starting with '#' are skipped.
// Errors name the offending line number.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view content, const std::string& source_name = "<input>");

std::string write_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns);

// "key=value" lines; '#' comments and blank lines ignored.
std::map<std::string, std::string> parse_key_values(std::string_view content);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);
std::string write_key_values(const std::map<std::string, std::string>& kv);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace unidecon
