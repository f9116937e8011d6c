#pragma once

// Minimal CSV writing with deterministic float formatting (17 significant
// digits, so values round-trip and identical runs produce identical bytes).

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace synthcast {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    write_row_strings(header);
  }

  void field(const std::string& v) { fields_.push_back(v); }
  void field(const char* v) { fields_.emplace_back(v); }
  void field(double v) { fields_.push_back(format_double(v)); }
  void field(int v) { fields_.push_back(std::to_string(v)); }
  void field(long v) { fields_.push_back(std::to_string(v)); }
  void field(unsigned long long v) { fields_.push_back(std::to_string(v)); }

  template <typename... Ts>
  void row(const Ts&... vals) {
    (field(vals), ...);
    end_row();
  }

  void end_row() {
    write_row_strings(fields_);
    fields_.clear();
  }

 private:
  void write_row_strings(const std::vector<std::string>& vals) {
    for (size_t i = 0; i < vals.size(); ++i) {
      if (i) out_ << ',';
      out_ << vals[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::vector<std::string> fields_;
};

}  // namespace synthcast
