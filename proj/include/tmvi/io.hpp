#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tmvi {

// Doubles in run records use %.17g so every value round-trips exactly;
// plot-ready CSVs use %.12g, which is plenty for any downstream plotter and
// keeps the files readable.
std::string format_double(double v);
std::string format_double_csv(double v);

// Ordered "key = value" lines. '#' starts a comment line; blanks are
// skipped. Order is preserved so serialization is byte-stable.
using KvPairs = std::vector<std::pair<std::string, std::string>>;

std::string serialize_kv(const KvPairs& kv);
KvPairs parse_kv(const std::string& text);

// First value for the key, or nullptr.
const std::string* find_kv(const KvPairs& kv, const std::string& key);

// Same, but the key must exist and parse as a double / comma-separated
// double list.
double kv_double(const KvPairs& kv, const std::string& key);
std::vector<double> kv_double_list(const KvPairs& kv, const std::string& key);

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t file_checksum(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace tmvi
