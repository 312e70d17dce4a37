#include "ngrad/io.hpp"

#include <charconv>

namespace ngrad::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header)
    : path_(path), out_(path), columns_(header.size()) {
  if (!out_) throw IoError("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i)
    out_ << (i ? "," : "") << header[i];
  out_ << "\n";
}

CsvWriter::~CsvWriter() { out_.flush(); }

void CsvWriter::field(const std::string& s) {
  out_ << (in_row_ ? "," : "") << s;
  ++in_row_;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw IoError("CSV row has " + std::to_string(in_row_) + " fields, header has " +
                  std::to_string(columns_));
  out_ << "\n";
  if (!out_) throw IoError("failed writing " + path_.string());
  in_row_ = 0;
}

}  // namespace ngrad::io
