#ifndef MUSEV_CSV_HPP
#define MUSEV_CSV_HPP

#include <string>
#include <vector>

namespace musev {

// Splits one CSV record; double quotes guard commas, doubled quotes escape.
std::vector<std::string> split_csv_line(const std::string& line);

// Quotes the field when it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

}  // namespace musev

#endif
