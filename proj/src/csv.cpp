#include "qsearch/csv.hpp"

#include <charconv>

namespace qsearch {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    return std::string(buf, res.ptr);
}

std::string format_number(std::uint64_t v) { return std::to_string(v); }
std::string format_number(std::int64_t v) { return std::to_string(v); }

std::string format_cell(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string();
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) row.push_back(',');
        row += cells[i];
    }
    row.push_back('\n');
    return row;
}

}  // namespace qsearch
