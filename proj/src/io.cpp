#include "qbm/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace qbm {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::string path, const std::vector<std::string>& header_lines,
                     const std::vector<std::string>& columns)
    : path_(std::move(path)), n_cols_(columns.size()) {
    for (const auto& line : header_lines) buffer_ += "# " + line + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += columns[i];
    }
    buffer_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != n_cols_)
        throw SimulationError("CSV row width mismatch in " + path_);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += format_double(values[i]);
    }
    buffer_ += '\n';
}

void CsvWriter::close() {
    if (closed_) return;
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw SimulationError("cannot write " + path_);
    out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    closed_ = true;
}

CsvWriter::~CsvWriter() {
    try {
        close();
    } catch (...) {
    }
}

namespace {
constexpr char kMagic[8] = {'Q', 'B', 'M', 'W', 'I', 'G', '1', '\n'};
}

void write_grid_binary(const WignerGrid& w, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimulationError("cannot write " + path);
    out.write(kMagic, 8);
    const std::int64_t nx = w.nx, np = w.np;
    out.write(reinterpret_cast<const char*>(&nx), 8);
    out.write(reinterpret_cast<const char*>(&np), 8);
    const double geo[4] = {w.x0, w.p0, w.dx, w.dp};
    out.write(reinterpret_cast<const char*>(geo), sizeof(geo));
    // p fastest within each x row; values is (np x nx) column-major so each
    // column is already one contiguous x row.
    out.write(reinterpret_cast<const char*>(w.values.data()),
              static_cast<std::streamsize>(sizeof(double) * w.values.size()));
}

WignerGrid read_grid_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SimulationError("cannot read " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw SimulationError(path + " is not a grid file");
    std::int64_t nx = 0, np = 0;
    in.read(reinterpret_cast<char*>(&nx), 8);
    in.read(reinterpret_cast<char*>(&np), 8);
    double geo[4];
    in.read(reinterpret_cast<char*>(geo), sizeof(geo));
    WignerGrid w;
    w.nx = static_cast<int>(nx);
    w.np = static_cast<int>(np);
    w.x0 = geo[0];
    w.p0 = geo[1];
    w.dx = geo[2];
    w.dp = geo[3];
    w.values.resize(w.np, w.nx);
    in.read(reinterpret_cast<char*>(w.values.data()),
            static_cast<std::streamsize>(sizeof(double) * w.values.size()));
    if (!in) throw SimulationError(path + " is truncated");
    return w;
}

void write_grid_csv(const WignerGrid& w, const std::string& path) {
    std::string buf = "# " + std::to_string(w.nx) + "," + std::to_string(w.np) + "," +
                      format_double(w.x0) + "," + format_double(w.p0) + "," +
                      format_double(w.dx) + "," + format_double(w.dp) + "\n";
    for (int i = 0; i < w.nx; ++i) {
        for (int j = 0; j < w.np; ++j) {
            if (j) buf += ',';
            buf += format_double(w.values(j, i));
        }
        buf += '\n';
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimulationError("cannot write " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

} // namespace qbm
