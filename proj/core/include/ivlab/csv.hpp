#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ivlab::harness {

// Numeric result grid with the metadata every emitted artifact carries:
// the seed list and the config hash. Re-running with the same config and
// seed reproduces the emitted bytes exactly.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::uint64_t> seed_list;
  std::uint64_t config_hash = 0;

  bool operator==(const ResultTable& other) const;
};

// Shortest round-trip float formatting (std::to_chars).
std::string format_double(double v);

// UTF-8, LF line endings, leading `#` metadata lines, then header and rows.
void emit_result_table(const ResultTable& table, const std::string& path);
std::string render_result_table(const ResultTable& table);

ResultTable parse_result_table(const std::string& path);
ResultTable parse_result_table_text(const std::string& text);

}  // namespace ivlab::harness
