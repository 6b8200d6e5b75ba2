#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "kwlab/errors.hpp"
#include "kwlab/field.hpp"
#include "kwlab/mesh.hpp"
#include "kwlab/torus.hpp"

namespace kw {

// Binary field container: magic "KWF1", two little-endian u32 dimensions
// (rows, cols), then rows*cols little-endian f64 in row-major order. Grid
// fields store rows = cols = N; mesh fields store rows = vertex count,
// cols = 1.
static_assert(std::endian::native == std::endian::little,
              "field files are little-endian; big-endian hosts need a swap pass");

inline void write_field(const std::string& path, const ScalarField& f) {
    f.check_finite();   // never persist a payload the reader must reject
    std::uint32_t rows, cols;
    if (const auto* torus = dynamic_cast<const TorusGrid*>(f.domain().get())) {
        rows = static_cast<std::uint32_t>(torus->resolution());
        cols = rows;
    } else {
        rows = static_cast<std::uint32_t>(f.size());
        cols = 1;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error(errc::io_error, "cannot open for writing: " + path);
    out.write("KWF1", 4);
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    out.write(reinterpret_cast<const char*>(f.values().data()),
              static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!out) throw error(errc::io_error, "short write: " + path);
}

inline ScalarField read_field(const std::string& path, const DomainPtr& dom) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(errc::io_error, "cannot open for reading: " + path);
    char magic[4];
    std::uint32_t rows = 0, cols = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (!in || std::memcmp(magic, "KWF1", 4) != 0)
        throw error(errc::parse_error, "not a field file: " + path);

    std::uint32_t want_rows, want_cols;
    if (const auto* torus = dynamic_cast<const TorusGrid*>(dom.get())) {
        want_rows = static_cast<std::uint32_t>(torus->resolution());
        want_cols = want_rows;
    } else {
        want_rows = static_cast<std::uint32_t>(dom->size());
        want_cols = 1;
    }
    if (rows != want_rows || cols != want_cols)
        throw error(errc::parse_error,
                    "field dimensions " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " do not match the domain: " + path);

    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw error(errc::parse_error, "truncated field payload: " + path);
    char extra;
    if (in.read(&extra, 1))
        throw error(errc::parse_error, "trailing bytes after field payload: " + path);
    for (double v : data)
        if (!std::isfinite(v))
            throw error(errc::parse_error, "non-finite values in field payload: " + path);
    return ScalarField(dom, std::move(data));
}

} // namespace kw
