#ifndef CSTSIM_IO_CSV_HPP
#define CSTSIM_IO_CSV_HPP

// Two-column numeric CSV with a header row. Values are written with 17
// significant digits so a write/read round trip is exact.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cstsim/errors.hpp"
#include "cstsim/io/config.hpp"
#include "cstsim/spectra.hpp"

namespace cstsim::io {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_spectrum_csv(std::ostream& os, const spectra::Spectrum& s, const std::string& x_name = "B_mT",
                               const std::string& y_name = "dPL_over_PL") {
    os << x_name << ',' << y_name << '\n';
    for (std::size_t i = 0; i < s.x.size(); ++i) os << format_double(s.x[i]) << ',' << format_double(s.y[i]) << '\n';
}

/// Parses header + rows of exactly two numeric columns. Diagnostics carry
/// the 1-based row and column.
inline spectra::Spectrum read_spectrum_csv(std::istream& is) {
    spectra::Spectrum s;
    std::string line;
    int row = 0;
    bool header = true;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (header) {
            header = false;
            if (split(line, ',').size() != 2) throw ConfigError("CSV header must have two columns", row);
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != 2)
            throw ConfigError("CSV row " + std::to_string(row) + " has " + std::to_string(cols.size()) + " columns, expected 2",
                              row);
        for (int c = 0; c < 2; ++c) {
            const double v = parse_double(cols[c], row, "CSV row " + std::to_string(row) + " column " + std::to_string(c + 1));
            (c == 0 ? s.x : s.y).push_back(v);
        }
    }
    if (header) throw ConfigError("CSV is empty");
    return s;
}

inline spectra::Spectrum read_spectrum_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file '" + path + "'");
    return read_spectrum_csv(in);
}

}  // namespace cstsim::io

#endif
