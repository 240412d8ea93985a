// io.hpp — CSV series and phase-space grid files.
//
// All numeric output uses "%.17g" so replays of the same configuration are
// byte-identical. Series files start with '#'-prefixed provenance lines
// recording the fully resolved configuration.

#pragma once

#include <string>
#include <vector>

#include "qbm/grid.hpp"

namespace qbm {

std::string format_double(double v);

class CsvWriter {
public:
    CsvWriter(std::string path, const std::vector<std::string>& header_lines,
              const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void close();
    ~CsvWriter();

private:
    std::string path_;
    std::string buffer_;
    std::size_t n_cols_;
    bool closed_ = false;
};

// Flat binary grid: magic "QBMWIG1\n", int64 nx, np, doubles x0, p0, dx, dp,
// then nx*np doubles, p fastest ("row-major" over x rows).
void write_grid_binary(const WignerGrid& w, const std::string& path);
WignerGrid read_grid_binary(const std::string& path);

// CSV alternative: one header line "# nx,np,x0,p0,dx,dp" then one line per x
// row with np comma-separated values.
void write_grid_csv(const WignerGrid& w, const std::string& path);

} // namespace qbm
