#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ngrad/common.hpp"

namespace ngrad::io {

/// Locale-independent shortest-exact formatting ('%.17g' equivalent,
/// always '.' as the decimal separator).
std::string format_double(double v);

/// CSV with a fixed header; numbers are written with format_double so files
/// are reproducible byte for byte.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();

  class Row {
   public:
    explicit Row(CsvWriter& w) : w_(w) {}
    ~Row() { w_.end_row(); }
    Row& operator<<(double v) { w_.field(format_double(v)); return *this; }
    Row& operator<<(int v) { w_.field(std::to_string(v)); return *this; }
    Row& operator<<(std::int64_t v) { w_.field(std::to_string(v)); return *this; }
    Row& operator<<(const std::string& v) { w_.field(v); return *this; }
    Row& operator<<(const char* v) { w_.field(v); return *this; }

   private:
    CsvWriter& w_;
  };

  Row row() { return Row(*this); }
  const std::filesystem::path& path() const { return path_; }

 private:
  friend class Row;
  void field(const std::string& s);
  void end_row();

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

}  // namespace ngrad::io
