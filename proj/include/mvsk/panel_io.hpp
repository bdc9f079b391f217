#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "panel.hpp"

namespace mvsk {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline bool parse_cell(std::string_view cell, double& out) {
    cell = trim(cell);
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = first + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

} // namespace detail

// CSV: UTF-8, comma-separated, optional single header row (detected by a
// non-numeric first line), one time period per line. Missing or non-numeric
// cells are hard errors naming the 1-based row and column.
inline ReturnPanel load_returns_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw data_error("cannot open returns file: " + path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!detail::trim(line).empty())
            lines.push_back(line);
    }
    if (lines.empty())
        throw data_error(path + ": empty returns file");

    std::vector<std::string> ids;
    std::size_t first_row = 0;
    {
        auto cells = detail::split_commas(lines[0]);
        bool numeric = true;
        double v;
        for (auto c : cells)
            if (!detail::parse_cell(c, v)) { numeric = false; break; }
        if (!numeric) {
            for (auto c : cells) ids.emplace_back(detail::trim(c));
            first_row = 1;
            if (lines.size() == 1)
                throw data_error(path + ": header row but no data rows");
        }
    }

    const auto ncols = detail::split_commas(lines[first_row]).size();
    if (!ids.empty() && ids.size() != ncols)
        throw data_error(path + ": header has " + std::to_string(ids.size()) +
                         " fields, data rows have " + std::to_string(ncols));
    Mat R(static_cast<index_t>(lines.size() - first_row), static_cast<index_t>(ncols));
    for (std::size_t r = first_row; r < lines.size(); ++r) {
        auto cells = detail::split_commas(lines[r]);
        if (cells.size() != ncols)
            throw data_error(path + ": row " + std::to_string(r + 1) + " has " +
                             std::to_string(cells.size()) + " fields, expected " +
                             std::to_string(ncols));
        for (std::size_t j = 0; j < ncols; ++j) {
            double v;
            if (!detail::parse_cell(cells[j], v))
                throw data_error(path + ": non-numeric cell at row " + std::to_string(r + 1) +
                                 ", column " + std::to_string(j + 1));
            R(static_cast<index_t>(r - first_row), static_cast<index_t>(j)) = v;
        }
    }
    ReturnPanel p = center_panel(std::move(R));
    p.asset_ids = std::move(ids);
    return p;
}

inline void save_returns_csv(const std::string& path, const ReturnPanel& p) {
    std::ofstream out(path);
    if (!out)
        throw data_error("cannot write returns file: " + path);
    out.precision(17);
    if (!p.asset_ids.empty()) {
        for (index_t j = 0; j < p.assets(); ++j)
            out << (j ? "," : "") << p.asset_ids[static_cast<std::size_t>(j)];
        out << '\n';
    }
    for (index_t t = 0; t < p.periods(); ++t) {
        for (index_t j = 0; j < p.assets(); ++j)
            out << (j ? "," : "") << p.R(t, j);
        out << '\n';
    }
}

// Binary panel format: magic "MVSK", u32 T, u32 n, then T*n little-endian f64
// row-major. Round-trips losslessly (used by the benchmark harness).
inline ReturnPanel load_returns_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw data_error("cannot open returns file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "MVSK", 4) != 0)
        throw data_error(path + ": bad magic, not a binary panel file");
    std::uint32_t T = 0, n = 0;
    if (!in.read(reinterpret_cast<char*>(&T), 4) || !in.read(reinterpret_cast<char*>(&n), 4))
        throw data_error(path + ": truncated header");
    if (T < 2 || n < 1)
        throw data_error(path + ": degenerate dimensions in header");
    Mat R(static_cast<index_t>(T), static_cast<index_t>(n));
    const std::streamsize bytes =
        static_cast<std::streamsize>(sizeof(double)) * static_cast<std::streamsize>(T) * n;
    if (!in.read(reinterpret_cast<char*>(R.data()), bytes))
        throw data_error(path + ": truncated payload");
    return center_panel(std::move(R));
}

inline void save_returns_binary(const std::string& path, const ReturnPanel& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw data_error("cannot write returns file: " + path);
    out.write("MVSK", 4);
    const std::uint32_t T = static_cast<std::uint32_t>(p.periods());
    const std::uint32_t n = static_cast<std::uint32_t>(p.assets());
    out.write(reinterpret_cast<const char*>(&T), 4);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(p.R.data()),
              static_cast<std::streamsize>(sizeof(double)) * p.R.size());
}

inline ReturnPanel load_returns(const std::string& path, const std::string& format) {
    if (format == "csv") return load_returns_csv(path);
    if (format == "binary-f64") return load_returns_binary(path);
    throw domain_error("load_returns: unknown format " + format);
}

// Sniffs the 4-byte magic so CLI users can pass either format to --panel.
inline ReturnPanel load_returns_auto(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw data_error("cannot open returns file: " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (std::memcmp(magic, "MVSK", 4) == 0) return load_returns_binary(path);
    return load_returns_csv(path);
}

} // namespace mvsk
