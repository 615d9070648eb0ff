#include "gridres/csv.hpp"

#include "gridres/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gridres {

std::string format_double(double value)
{
    if (value == 0.0) return "0"; // folds -0 into 0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& context)
{
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ParseError(context + ": expected a number, got '" + std::string(text) + "'");
    return value;
}

long long parse_integer(std::string_view text, const std::string& context)
{
    long long value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ParseError(context + ": expected an integer, got '" + std::string(text) + "'");
    return value;
}

std::size_t CsvTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ParseError("csv: missing column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_line(std::string_view line)
{
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        cells.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

} // namespace

CsvTable parse_csv(std::string_view text, const std::string& context)
{
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size())
            throw ParseError(context + ": line " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) throw ParseError(context + ": empty file");
    return table;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    return parse_csv(read_text_file(path), path.string());
}

} // namespace gridres
