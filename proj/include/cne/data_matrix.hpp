#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cne {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense n x D row-major matrix of high-dimensional input points.
struct DataMatrix {
    std::size_t n = 0;
    std::size_t D = 0;
    std::vector<double> values;               // n * D, row-major
    std::optional<std::vector<int>> labels;   // per-row class tags

    double& at(std::size_t i, std::size_t j) { return values[i * D + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * D + j]; }
    const double* row(std::size_t i) const { return values.data() + i * D; }
};

enum class MatrixFormat { csv, raw_f32, idx };

// csv: '.' decimal separator, '\n' lines, optional single header row.
// raw_f32: "CNE0" magic + n,D (LE u32) + reserved u32 + LE f32 row-major.
// idx: MNIST IDX3 images (pixels scaled to [0,1] by /255).
DataMatrix load_matrix(const std::string& path, MatrixFormat format,
                       bool csv_header = false);

// MNIST IDX1 label file.
std::vector<int> load_idx_labels(const std::string& path);

void save_raw_f32(const DataMatrix& X, const std::string& path);

// Embedding plus provenance for export.
struct ExportRecord {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> embedding;            // n * d, row-major
    std::optional<std::vector<int>> labels;
    std::map<std::string, std::string> metadata;
};

enum class ExportFormat { csv, svg, json };

// csv: per row "x1,...,xd[,label]" with 17 significant digits.
// svg: 800x800 canvas, r=2 circles, 5% margin, 10-color label cycle (d=2 only).
// json: embedding + labels + metadata, sorted keys.
void export_record(const ExportRecord& record, ExportFormat format,
                   const std::string& path);

// 17 significant digits; round-trips doubles losslessly.
std::string format_double(double v);

}  // namespace cne
