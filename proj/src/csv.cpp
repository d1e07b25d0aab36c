#include "colddamp/csv.hpp"

#include <cstdio>

#include "colddamp/types.hpp"

namespace colddamp {

std::string format_g17(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open '" + path + "' for writing");
}

void CsvWriter::header(const std::vector<std::string>& columns) {
    row(columns);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::row_numeric(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_g17(v));
    row(cells);
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    CsvWriter csv(path);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> cells(m.cols());
        for (Eigen::Index c = 0; c < m.cols(); ++c) cells[c] = m(r, c);
        csv.row_numeric(cells);
    }
}

}  // namespace colddamp
