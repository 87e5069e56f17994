// SPDX-License-Identifier: Apache-2.0
//
// Artifact emission: RFC-4180 CSV with a versioned "#" header line, and
// atomic file writes (temp file in the target directory, then rename).
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rtme {

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view value);
/// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double value);

class CsvWriter {
public:
    /// `schema` names the table; the first line reads "# <schema> v<version> config=<hash>".
    CsvWriter(std::string_view schema, int version, std::string_view config_hash);

    void header(const std::vector<std::string>& columns);
    CsvWriter& cell(std::string_view text);
    CsvWriter& cell(double value);
    CsvWriter& cell(long value);
    CsvWriter& cell(unsigned long value);
    CsvWriter& cell(int value) { return cell(static_cast<long>(value)); }
    void end_row();

    const std::string& str() const { return out_; }

private:
    std::string out_;
    std::size_t columns_ = 0;
    std::size_t in_row_ = 0;
};

/// Parsed CSV: header comment (without "# "), column names and rows.
struct CsvTable {
    std::string comment;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace rtme
