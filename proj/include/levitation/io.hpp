#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace levitation {

/// 17 significant digits, '.' decimal point.
/// Non-finite values print as nan, inf and -inf.
std::string format_number(double value);

/// RFC 4180 field quoting: fields holding a comma, quote, CR or LF are quoted
/// with embedded quotes doubled.
std::string csv_field(std::string_view text);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(const std::vector<std::string>& fields);
    void add_numbers(const std::vector<double>& values);

    std::size_t rows() const { return rows_.size(); }
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::string> rows_;
};

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Tracks files written by a command and deletes them unless committed.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path directory);
    ~OutputSet();
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    const std::filesystem::path& directory() const { return directory_; }

    /// Writes `content` to directory/name atomically and records it.
    std::filesystem::path write(const std::string& name, std::string_view content);

    const std::vector<std::filesystem::path>& files() const { return files_; }
    void commit() { committed_ = true; }

private:
    std::filesystem::path directory_;
    std::vector<std::filesystem::path> files_;
    bool created_directory_ = false;
    bool committed_ = false;
};

}  // namespace levitation
