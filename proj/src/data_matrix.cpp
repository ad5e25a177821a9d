#include "cne/data_matrix.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cne {
namespace {

std::uint32_t read_u32_le(std::istream& in) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (!in) throw FormatError("unexpected end of file in header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t read_u32_be(std::istream& in) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (!in) throw FormatError("unexpected end of file in header");
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    const std::array<unsigned char, 4> b{static_cast<unsigned char>(v & 0xff),
                                         static_cast<unsigned char>((v >> 8) & 0xff),
                                         static_cast<unsigned char>((v >> 16) & 0xff),
                                         static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b.data()), 4);
}

void check_finite(const DataMatrix& X) {
    for (double v : X.values)
        if (!std::isfinite(v)) throw ValidationError("matrix contains NaN/Inf");
}

DataMatrix load_csv(const std::string& path, bool header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    DataMatrix X;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header && first) {
            first = false;
            continue;
        }
        first = false;
        std::size_t cols = 0;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = line.find(',', pos);
            const std::string cell = line.substr(pos, comma == std::string::npos
                                                          ? std::string::npos
                                                          : comma - pos);
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ValidationError("cannot parse CSV cell '" + cell + "'");
            }
            if (used != cell.size()) throw ValidationError("trailing junk in CSV cell '" + cell + "'");
            X.values.push_back(v);
            ++cols;
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (X.n == 0) {
            X.D = cols;
        } else if (cols != X.D) {
            throw ValidationError("ragged CSV: row " + std::to_string(X.n) + " has " +
                                  std::to_string(cols) + " cells, expected " + std::to_string(X.D));
        }
        ++X.n;
    }
    if (X.n == 0 || X.D == 0) throw ValidationError("empty CSV matrix");
    check_finite(X);
    return X;
}

DataMatrix load_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (!in || std::memcmp(magic.data(), "CNE0", 4) != 0)
        throw FormatError("bad raw_f32 magic (expected CNE0)");
    DataMatrix X;
    X.n = read_u32_le(in);
    X.D = read_u32_le(in);
    read_u32_le(in);  // reserved
    if (X.n == 0 || X.D == 0) throw FormatError("raw_f32 header has zero dimension");
    X.values.resize(X.n * X.D);
    std::vector<float> buf(X.n * X.D);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw FormatError("raw_f32 payload truncated");
    std::copy(buf.begin(), buf.end(), X.values.begin());
    check_finite(X);
    return X;
}

DataMatrix load_idx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    const std::uint32_t magic = read_u32_be(in);
    if (magic != 0x00000803u) throw FormatError("bad IDX3 magic");
    DataMatrix X;
    X.n = read_u32_be(in);
    const std::uint32_t rows = read_u32_be(in);
    const std::uint32_t cols = read_u32_be(in);
    X.D = static_cast<std::size_t>(rows) * cols;
    if (X.n == 0 || X.D == 0) throw FormatError("IDX3 header has zero dimension");
    std::vector<unsigned char> buf(X.n * X.D);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw FormatError("IDX3 payload truncated");
    X.values.resize(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) X.values[i] = buf[i] / 255.0;
    return X;
}

// 10-color cycle for label coloring
constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

void export_csv(const ExportRecord& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (std::size_t i = 0; i < r.n; ++i) {
        for (std::size_t j = 0; j < r.d; ++j) {
            if (j) out << ',';
            out << format_double(r.embedding[i * r.d + j]);
        }
        if (r.labels) out << ',' << (*r.labels)[i];
        out << '\n';
    }
    if (!out) throw IoError("write failure on " + path);
}

void export_svg(const ExportRecord& r, const std::string& path) {
    if (r.d != 2) throw ValidationError("svg export requires d=2");
    double xmin = r.embedding[0], xmax = xmin, ymin = r.embedding[1], ymax = ymin;
    for (std::size_t i = 0; i < r.n; ++i) {
        xmin = std::min(xmin, r.embedding[2 * i]);
        xmax = std::max(xmax, r.embedding[2 * i]);
        ymin = std::min(ymin, r.embedding[2 * i + 1]);
        ymax = std::max(ymax, r.embedding[2 * i + 1]);
    }
    const double canvas = 800.0, margin = 0.05 * canvas;
    const double spanx = xmax > xmin ? xmax - xmin : 1.0;
    const double spany = ymax > ymin ? ymax - ymin : 1.0;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
           "viewBox=\"0 0 800 800\">\n";
    for (std::size_t i = 0; i < r.n; ++i) {
        const double px = margin + (r.embedding[2 * i] - xmin) / spanx * (canvas - 2 * margin);
        // y axis flipped so larger coordinates point up
        const double py =
            canvas - margin - (r.embedding[2 * i + 1] - ymin) / spany * (canvas - 2 * margin);
        const char* color = r.labels ? kPalette[static_cast<std::size_t>(
                                           ((*r.labels)[i] % 10 + 10) % 10)]
                                     : kPalette[0];
        out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"2\" fill=\"" << color
            << "\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failure on " + path);
}

void export_json(const ExportRecord& r, const std::string& path) {
    nlohmann::json j;
    j["n"] = r.n;
    j["d"] = r.d;
    j["embedding"] = r.embedding;
    if (r.labels) j["labels"] = *r.labels;
    nlohmann::json meta;
    for (const auto& [k, v] : r.metadata) meta[k] = v;
    j["metadata"] = meta;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failure on " + path);
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

DataMatrix load_matrix(const std::string& path, MatrixFormat format, bool csv_header) {
    switch (format) {
        case MatrixFormat::csv:
            return load_csv(path, csv_header);
        case MatrixFormat::raw_f32:
            return load_raw(path);
        case MatrixFormat::idx:
            return load_idx(path);
    }
    throw std::invalid_argument("unknown matrix format");
}

std::vector<int> load_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    if (read_u32_be(in) != 0x00000801u) throw FormatError("bad IDX1 magic");
    const std::uint32_t n = read_u32_be(in);
    std::vector<unsigned char> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (!in) throw FormatError("IDX1 payload truncated");
    return std::vector<int>(buf.begin(), buf.end());
}

void save_raw_f32(const DataMatrix& X, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write("CNE0", 4);
    write_u32_le(out, static_cast<std::uint32_t>(X.n));
    write_u32_le(out, static_cast<std::uint32_t>(X.D));
    write_u32_le(out, 0);
    std::vector<float> buf(X.values.begin(), X.values.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("write failure on " + path);
}

void export_record(const ExportRecord& record, ExportFormat format, const std::string& path) {
    switch (format) {
        case ExportFormat::csv:
            export_csv(record, path);
            return;
        case ExportFormat::svg:
            export_svg(record, path);
            return;
        case ExportFormat::json:
            export_json(record, path);
            return;
    }
    throw std::invalid_argument("unknown export format");
}

}  // namespace cne
