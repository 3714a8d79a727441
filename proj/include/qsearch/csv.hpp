#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qsearch {

// All CSV output goes through these: locale-independent, '.' decimal
// separator, 9 significant digits (enough to round-trip every quantity we
// emit at full display precision while keeping files diffable).
std::string format_number(double v);
std::string format_number(std::uint64_t v);
std::string format_number(std::int64_t v);

// Absent optional -> empty cell.
std::string format_cell(const std::optional<double>& v);

// Joins cells with ',' and appends '\n'. Cells are trusted not to contain
// separators (every producer here emits plain numbers or fixed tokens).
std::string csv_row(const std::vector<std::string>& cells);

}  // namespace qsearch
