#ifndef DISTLQR_CSV_HPP
#define DISTLQR_CSV_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace distlqr {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

std::string csv_join(const std::vector<std::string>& fields);

/// Rows joined with '\n' plus a trailing newline. The header is row zero.
std::string csv_document(const std::vector<std::vector<std::string>>& rows);

/// Writes to a sibling temp file, then renames over the target, so readers
/// never observe a half-written file. Throws IoError or
/// std::filesystem::filesystem_error on failure.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace distlqr

#endif  // DISTLQR_CSV_HPP
