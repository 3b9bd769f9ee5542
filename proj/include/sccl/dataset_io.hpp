#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "sccl/dataset.hpp"
#include "sccl/error.hpp"

namespace sccl {

namespace detail {

inline std::string csv_position(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row + 1) + ", column " + std::to_string(col + 1);
}

inline double parse_cell_double(const std::string& cell, std::size_t row, std::size_t col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw parse_error("CSV: non-numeric cell '" + cell + "' at " + csv_position(row, col));
    return v;
}

inline long parse_cell_label(const std::string& cell, std::size_t row, std::size_t col) {
    long v = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw parse_error("CSV: non-integer label '" + cell + "' at " + csv_position(row, col));
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

} // namespace detail

/// Loads a dataset from CSV: one sample per row, features then an integer
/// label in the last column, cells equal to `missing_token` unobserved.
/// Pass num_classes = 0 to infer it as max label + 1.
inline MaskedDataset load_csv(const std::string& path, const std::string& missing_token = "",
                              int num_classes = 0) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open CSV file: " + path);

    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;
        rows.push_back(detail::split_csv_line(line));
    }
    if (rows.empty()) throw parse_error("CSV file is empty: " + path);

    const std::size_t width = rows[0].size();
    if (width < 2) throw parse_error("CSV: need at least one feature column and a label column");
    const std::size_t n = width - 1;

    MaskedDataset ds;
    ds.features = Matrix(rows.size(), n);
    ds.mask.assign(rows.size() * n, 0);
    ds.labels.resize(rows.size());

    long max_label = -1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != width)
            throw parse_error("CSV: ragged row at " + detail::csv_position(i, rows[i].size()) +
                              " (expected " + std::to_string(width) + " cells)");
        std::size_t observed = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const std::string& cell = rows[i][j];
            if (cell == missing_token) continue;
            ds.features(i, j) = detail::parse_cell_double(cell, i, j);
            ds.mask[i * n + j] = 1;
            ++observed;
        }
        if (observed == 0)
            throw parse_error("CSV: sample with no observed feature at row " +
                              std::to_string(i + 1));
        long label = detail::parse_cell_label(rows[i][n], i, n);
        if (label < 0 || (num_classes > 0 && label >= num_classes))
            throw parse_error("CSV: label " + std::to_string(label) + " out of range at " +
                              detail::csv_position(i, n));
        ds.labels[i] = static_cast<int>(label);
        max_label = std::max(max_label, label);
    }
    ds.num_classes = num_classes > 0 ? num_classes : static_cast<int>(std::max(max_label + 1, 2L));
    ds.validate();
    return ds;
}

/// Inverse of load_csv; observed values are printed with 17 significant
/// digits so a round trip reproduces them exactly.
inline void save_csv(const MaskedDataset& dataset, const std::string& path,
                     const std::string& missing_token = "") {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot open CSV file for writing: " + path);
    char buf[64];
    for (std::size_t i = 0; i < dataset.num_samples(); ++i) {
        for (std::size_t j = 0; j < dataset.num_features(); ++j) {
            if (dataset.is_observed(i, j)) {
                std::snprintf(buf, sizeof buf, "%.17g", dataset.features(i, j));
                out << buf;
            } else {
                out << missing_token;
            }
            out << ',';
        }
        out << dataset.labels[i] << '\n';
    }
    if (!out) throw parse_error("failed while writing CSV file: " + path);
}

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw parse_error("IDX: truncated header in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

} // namespace detail

/// MNIST-layout IDX pair: big-endian magic 0x803 image file (u8 pixels,
/// scaled to [0,1]) and 0x801 label file. Result carries a full mask.
inline MaskedDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw parse_error("cannot open IDX image file: " + images_path);
    if (detail::read_be_u32(img, images_path) != 0x00000803u)
        throw parse_error("IDX: bad image magic in " + images_path);
    const std::uint32_t count = detail::read_be_u32(img, images_path);
    const std::uint32_t rows = detail::read_be_u32(img, images_path);
    const std::uint32_t cols = detail::read_be_u32(img, images_path);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw parse_error("cannot open IDX label file: " + labels_path);
    if (detail::read_be_u32(lab, labels_path) != 0x00000801u)
        throw parse_error("IDX: bad label magic in " + labels_path);
    if (detail::read_be_u32(lab, labels_path) != count)
        throw parse_error("IDX: image/label count mismatch");

    const std::size_t n = std::size_t(rows) * cols;
    MaskedDataset ds;
    ds.features = Matrix(count, n);
    ds.mask.assign(std::size_t(count) * n, 1);
    ds.labels.resize(count);

    std::vector<unsigned char> pix(n);
    int max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(n)))
            throw parse_error("IDX: truncated pixel data in " + images_path);
        for (std::size_t j = 0; j < n; ++j) ds.features(i, j) = pix[j] / 255.0;
        char lb;
        if (!lab.read(&lb, 1)) throw parse_error("IDX: truncated label data in " + labels_path);
        ds.labels[i] = static_cast<unsigned char>(lb);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = std::max(max_label + 1, 2);
    return ds;
}

} // namespace sccl
