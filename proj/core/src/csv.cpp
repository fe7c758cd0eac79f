#include "ivlab/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "ivlab/errors.hpp"

namespace ivlab::harness {

bool ResultTable::operator==(const ResultTable& other) const {
  if (columns != other.columns || seed_list != other.seed_list ||
      config_hash != other.config_hash || rows.size() != other.rows.size()) {
    return false;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != other.rows[i].size()) return false;
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      const double a = rows[i][j];
      const double b = other.rows[i][j];
      if (std::isnan(a) ? !std::isnan(b) : a != b) return false;
    }
  }
  return true;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view token) {
  if (token == "nan") return std::nan("");
  if (token == "inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw IoError("csv: malformed numeric field '" + std::string(token) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

std::string render_result_table(const ResultTable& table) {
  if (table.columns.empty() || table.rows.empty()) {
    throw ConfigError("emit_result_table: table must be non-empty");
  }
  std::ostringstream out;
  out << "# seeds=";
  for (std::size_t i = 0; i < table.seed_list.size(); ++i) {
    if (i) out << ' ';
    out << table.seed_list[i];
  }
  out << '\n';
  char hash_buf[32];
  const auto hres = std::to_chars(hash_buf, hash_buf + sizeof(hash_buf),
                                  table.config_hash, 16);
  out << "# config_hash=" << std::string(hash_buf, hres.ptr) << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw ConfigError("emit_result_table: row width does not match header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
  return out.str();
}

void emit_result_table(const ResultTable& table, const std::string& path) {
  const std::string text = render_result_table(table);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("emit_result_table: cannot open '" + path + "'");
  file << text;
  if (!file) throw IoError("emit_result_table: write failed for '" + path + "'");
}

ResultTable parse_result_table_text(const std::string& text) {
  ResultTable table;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string_view view(line);
      if (view.rfind("# seeds=", 0) == 0) {
        for (auto tok : split(view.substr(8), ' ')) {
          if (tok.empty()) continue;
          std::uint64_t s = 0;
          const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), s);
          if (res.ec != std::errc{}) throw IoError("csv: malformed seed list");
          table.seed_list.push_back(s);
        }
      } else if (view.rfind("# config_hash=", 0) == 0) {
        const auto tok = view.substr(14);
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(),
                                         table.config_hash, 16);
        if (res.ec != std::errc{}) throw IoError("csv: malformed config hash");
      }
      continue;
    }
    if (!header_seen) {
      for (auto tok : split(line, ',')) table.columns.emplace_back(tok);
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    for (auto tok : split(line, ',')) row.push_back(parse_double(tok));
    if (row.size() != table.columns.size()) {
      throw IoError("csv: row width does not match header");
    }
    table.rows.push_back(std::move(row));
  }
  if (!header_seen) throw IoError("csv: missing header");
  return table;
}

ResultTable parse_result_table(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("parse_result_table: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_result_table_text(buffer.str());
}

}  // namespace ivlab::harness
