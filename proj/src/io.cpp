#include "levitation/io.hpp"

#include "levitation/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

namespace levitation {

std::string format_number(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0.0 ? "inf" : "-inf";
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(text);
    std::string quoted = "\"";
    for (const char ch : text) {
        if (ch == '"')
            quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(const std::vector<std::string>& fields) {
    if (fields.size() != header_.size())
        throw UsageError("CSV row has " + std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(header_.size()));
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0)
            line += ',';
        line += csv_field(fields[i]);
    }
    rows_.push_back(std::move(line));
}

void CsvTable::add_numbers(const std::vector<double>& values) {
    std::vector<std::string> fields;
    fields.reserve(values.size());
    for (const double v : values)
        fields.push_back(format_number(v));
    add_row(fields);
}

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i > 0)
            out += ',';
        out += csv_field(header_[i]);
    }
    out += '\n';
    for (const auto& row : rows_) {
        out += row;
        out += '\n';
    }
    return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    auto temporary = path;
    temporary += ".tmp";
    {
        std::ofstream file(temporary, std::ios::binary | std::ios::trunc);
        if (!file)
            throw IoError("cannot open " + temporary.string() + " for writing");
        file.write(content.data(), static_cast<std::streamsize>(content.size()));
        file.flush();
        if (!file) {
            std::error_code ignored;
            std::filesystem::remove(temporary, ignored);
            throw IoError("failed writing " + temporary.string());
        }
    }
    std::error_code error;
    std::filesystem::rename(temporary, path, error);
    if (error) {
        std::filesystem::remove(temporary, error);
        throw IoError("cannot move output into place at " + path.string());
    }
}

OutputSet::OutputSet(std::filesystem::path directory) : directory_(std::move(directory)) {
    std::error_code error;
    if (std::filesystem::exists(directory_, error)) {
        if (!std::filesystem::is_directory(directory_, error))
            throw IoError(directory_.string() + " exists and is not a directory");
        return;
    }
    std::filesystem::create_directories(directory_, error);
    if (error)
        throw IoError("cannot create output directory " + directory_.string() + ": " + error.message());
    created_directory_ = true;
}

OutputSet::~OutputSet() {
    if (committed_)
        return;
    std::error_code ignored;
    for (const auto& file : files_)
        std::filesystem::remove(file, ignored);
    if (created_directory_)
        std::filesystem::remove(directory_, ignored);  // only succeeds when empty
}

std::filesystem::path OutputSet::write(const std::string& name, std::string_view content) {
    const auto path = directory_ / name;
    write_atomic(path, content);
    files_.push_back(path);
    return path;
}

}  // namespace levitation
