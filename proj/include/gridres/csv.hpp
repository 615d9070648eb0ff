#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gridres {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

double parse_double(std::string_view text, const std::string& context);
long long parse_integer(std::string_view text, const std::string& context);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws ParseError when absent.
    std::size_t column(std::string_view name) const;
};

/// Plain comma-separated text without quoting (all gridres outputs).
CsvTable parse_csv(std::string_view text, const std::string& context);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace gridres
