#include "mtsb/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace mtsb {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("rename failed for " + path + ": " + ec.message());
  }
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) {
  if (header.empty())
    throw std::invalid_argument("CsvWriter: empty header");
  columns_ = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += header[i];
  }
  buf_ += '\n';
}

void CsvWriter::begin_row() {
  if (row_open_) throw std::logic_error("CsvWriter: row already open");
  row_open_ = true;
  in_row_ = 0;
}

void CsvWriter::add(double v) { add(format_double(v)); }

void CsvWriter::add(long long v) { add(std::to_string(v)); }

void CsvWriter::add(const std::string& v) {
  if (!row_open_) throw std::logic_error("CsvWriter: no open row");
  if (in_row_ >= columns_) throw std::logic_error("CsvWriter: too many cells");
  if (in_row_) buf_ += ',';
  buf_ += v;
  ++in_row_;
}

void CsvWriter::end_row() {
  if (!row_open_) throw std::logic_error("CsvWriter: no open row");
  if (in_row_ != columns_)
    throw std::logic_error("CsvWriter: row has wrong cell count");
  buf_ += '\n';
  row_open_ = false;
}

void CsvWriter::write(const std::string& path) const {
  if (row_open_) throw std::logic_error("CsvWriter: unfinished row");
  write_file_atomic(path, buf_);
}

void ensure_directory(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create directory " + dir + ": " +
                             ec.message());
}

std::string path_join(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  if (dir.back() == '/') return dir + name;
  return dir + "/" + name;
}

} // namespace mtsb
