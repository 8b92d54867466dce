#include "distlqr/csv.hpp"

#include <charconv>
#include <cstdio>
#include <system_error>

#include "distlqr/errors.hpp"

namespace distlqr {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) {
      line += ',';
    }
    line += fields[i];
  }
  return line;
}

std::string csv_document(const std::vector<std::vector<std::string>>& rows) {
  std::string doc;
  for (const auto& row : rows) {
    doc += csv_join(row);
    doc += '\n';
  }
  return doc;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (f == nullptr) {
      throw IoError("cannot open for writing: " + tmp.string());
    }
    const std::size_t written =
        std::fwrite(content.data(), 1, content.size(), f);
    const bool flush_ok = std::fflush(f) == 0;
    const bool close_ok = std::fclose(f) == 0;
    if (written != content.size() || !flush_ok || !close_ok) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("short write: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace distlqr
