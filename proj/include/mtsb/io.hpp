#pragma once

// Output helpers: full-precision number formatting, CSV assembly, and
// atomic file writes (write to a temp file, then rename into place).

#include <string>
#include <vector>

namespace mtsb {

/// Shortest round-trip decimal representation ("%.17g").
std::string format_double(double v);

/// Writes content to path atomically (temp file + rename). Throws
/// std::runtime_error on I/O failure.
void write_file_atomic(const std::string& path, const std::string& content);

/// Incremental CSV builder with full-precision numeric cells.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  void begin_row();
  void add(double v);
  void add(const std::string& v);
  void add(long long v);
  void end_row();
  const std::string& str() const { return buf_; }
  /// Writes the accumulated document atomically.
  void write(const std::string& path) const;

 private:
  std::string buf_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
  bool row_open_ = false;
};

/// Creates directory (and parents) if missing; throws on failure.
void ensure_directory(const std::string& dir);

/// Joins a directory and file name with exactly one separator.
std::string path_join(const std::string& dir, const std::string& name);

} // namespace mtsb
