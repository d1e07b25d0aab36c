#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace colddamp {

// 17 significant digits, '.' decimal point, no locale dependence. Output files
// built from this are platform-stable golden files.
std::string format_g17(double value);

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path);

    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);
    void row_numeric(const std::vector<double>& values);
    bool good() const { return static_cast<bool>(out_); }

  private:
    std::ofstream out_;
};

// Row-major full-matrix dump, no header.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

}  // namespace colddamp
