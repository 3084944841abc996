#include "tmvi/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tmvi {

namespace {

std::string format_with(const char* fmt, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string format_double(double v) { return format_with("%.17g", v); }
std::string format_double_csv(double v) { return format_with("%.12g", v); }

std::string serialize_kv(const KvPairs& kv) {
  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

KvPairs parse_kv(const std::string& text) {
  KvPairs out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') {
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("parse_kv: missing '=' on line " + std::to_string(line_no));
    }
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument("parse_kv: empty key on line " + std::to_string(line_no));
    }
    out.emplace_back(key, trim(stripped.substr(eq + 1)));
  }
  return out;
}

const std::string* find_kv(const KvPairs& kv, const std::string& key) {
  for (const auto& [k, v] : kv) {
    if (k == key) {
      return &v;
    }
  }
  return nullptr;
}

double kv_double(const KvPairs& kv, const std::string& key) {
  const std::string* v = find_kv(kv, key);
  if (v == nullptr) {
    throw std::invalid_argument("missing config key '" + key + "'");
  }
  std::size_t used = 0;
  const double parsed = std::stod(*v, &used);
  if (used != v->size()) {
    throw std::invalid_argument("config key '" + key + "' is not a number");
  }
  return parsed;
}

std::vector<double> kv_double_list(const KvPairs& kv, const std::string& key) {
  const std::string* v = find_kv(kv, key);
  if (v == nullptr) {
    throw std::invalid_argument("missing config key '" + key + "'");
  }
  std::vector<double> out;
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string stripped = trim(item);
    if (stripped.empty()) {
      throw std::invalid_argument("config key '" + key + "' has an empty list entry");
    }
    std::size_t used = 0;
    out.push_back(std::stod(stripped, &used));
    if (used != stripped.size()) {
      throw std::invalid_argument("config key '" + key + "' has a non-numeric entry");
    }
  }
  if (out.empty()) {
    throw std::invalid_argument("config key '" + key + "' is an empty list");
  }
  return out;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t file_checksum(const std::string& path) {
  const std::string content = read_text_file(path);
  return fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(content.data()), content.size()));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "' for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  out << content;
  if (!out) {
    throw std::runtime_error("failed writing '" + path + "'");
  }
}

}  // namespace tmvi
