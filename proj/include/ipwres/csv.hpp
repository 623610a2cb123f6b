#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipwres {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based file line of each row
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = detail::split_csv_line(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size()) {
                std::ostringstream msg;
                msg << path << ":" << line_no << ": expected " << table.header.size()
                    << " fields, got " << fields.size();
                throw std::runtime_error(msg.str());
            }
            table.rows.push_back(std::move(fields));
            table.line_numbers.push_back(line_no);
        }
    }
    if (table.header.empty()) throw std::runtime_error(path + ": missing header row");
    return table;
}

inline double parse_csv_double(const std::string& field, const std::string& path,
                               std::size_t line_no, const std::string& column) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        std::ostringstream msg;
        msg << path << ":" << line_no << ": malformed number in column '" << column << "': '"
            << field << "'";
        throw std::runtime_error(msg.str());
    }
    return value;
}

//! Shortest decimal that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace ipwres
