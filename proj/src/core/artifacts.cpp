// SPDX-License-Identifier: Apache-2.0
#include "artifacts.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <thread>

#include "errors.hpp"

namespace rtme {

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::string_view schema, int version, std::string_view config_hash) {
    out_ = "# " + std::string(schema) + " v" + std::to_string(version) + " config=" + std::string(config_hash) + "\r\n";
}

void CsvWriter::header(const std::vector<std::string>& columns) {
    if (columns_ != 0) throw InternalError("csv header written twice");
    columns_ = columns.size();
    for (const auto& c : columns) cell(c);
    end_row();
}

CsvWriter& CsvWriter::cell(std::string_view text) {
    if (in_row_++) out_ += ',';
    out_ += csv_field(text);
    return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(std::string_view(format_number(value))); }
CsvWriter& CsvWriter::cell(long value) { return cell(std::string_view(std::to_string(value))); }
CsvWriter& CsvWriter::cell(unsigned long value) { return cell(std::string_view(std::to_string(value))); }

void CsvWriter::end_row() {
    if (in_row_ != columns_)
        throw InternalError("csv row has " + std::to_string(in_row_) + " cells, header has " +
                            std::to_string(columns_));
    out_ += "\r\n";
    in_row_ = 0;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw InputError("csv has no column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::string comment;
    std::size_t i = 0;
    if (text.substr(0, 2) == "# ") {
        const auto eol = text.find('\n');
        comment = std::string(text.substr(2, eol == std::string_view::npos ? std::string_view::npos : eol - 2));
        if (!comment.empty() && comment.back() == '\r') comment.pop_back();
        i = eol == std::string_view::npos ? text.size() : eol + 1;
    }
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, any = false;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                record.push_back(std::move(field));
                records.push_back(std::move(record));
            }
            field.clear();
            record.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw FormatError("csv ends inside a quoted field");
    if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    CsvTable table;
    table.comment = std::move(comment);
    if (records.empty()) return table;
    table.columns = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.columns.size())
            throw FormatError("csv row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                              " fields, header has " + std::to_string(table.columns.size()));
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw InputError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    auto tmp = path;
    tmp += ".tmp-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw InputError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw InputError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

}  // namespace rtme
