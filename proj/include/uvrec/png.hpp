#pragma once
#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "uvrec/errors.hpp"

namespace uvrec {

namespace detail {

inline void png_u32be(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>(v & 0xff));
}

inline void png_chunk(std::vector<unsigned char>& out, const char type[5], const std::vector<unsigned char>& data) {
    png_u32be(out, static_cast<std::uint32_t>(data.size()));
    std::vector<unsigned char> body(type, type + 4);
    body.insert(body.end(), data.begin(), data.end());
    out.insert(out.end(), body.begin(), body.end());
    const auto crc = crc32(0L, body.data(), static_cast<uInt>(body.size()));
    png_u32be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

// Encode an 8-bit grayscale PNG (filter 0 on every scanline, zlib level 9 so
// output bytes are deterministic for a given input).
inline std::vector<unsigned char> encode_png_gray(const std::vector<unsigned char>& pixels, std::size_t width,
                                                  std::size_t height) {
    if (width == 0 || height == 0 || pixels.size() != width * height)
        throw ShapeError("png: pixel buffer does not match width*height");

    std::vector<unsigned char> raw;
    raw.reserve(height * (width + 1));
    for (std::size_t r = 0; r < height; ++r) {
        raw.push_back(0);  // filter type: none
        raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(r * width),
                   pixels.begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> deflated(bound);
    if (compress2(deflated.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw IoError("png: zlib compression failed");
    deflated.resize(bound);

    std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<unsigned char> ihdr;
    detail::png_u32be(ihdr, static_cast<std::uint32_t>(width));
    detail::png_u32be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // color type: grayscale
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    detail::png_chunk(out, "IHDR", ihdr);
    detail::png_chunk(out, "IDAT", deflated);
    detail::png_chunk(out, "IEND", {});
    return out;
}

// Map doubles in [lo, hi] to bytes 0..255 (clamped outside the range).
inline std::vector<unsigned char> quantize_gray(const std::vector<double>& values, double lo, double hi) {
    if (!(hi > lo)) throw UsageError("png: need hi > lo for quantization");
    std::vector<unsigned char> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double t = (values[i] - lo) / (hi - lo);
        const double c = std::min(1.0, std::max(0.0, t));
        out[i] = static_cast<unsigned char>(c * 255.0 + 0.5);
    }
    return out;
}

inline void write_png_gray(const std::string& path, const std::vector<double>& values, std::size_t width,
                           std::size_t height, double lo = 0.0, double hi = 1.0) {
    const std::vector<unsigned char> bytes = encode_png_gray(quantize_gray(values, lo, hi), width, height);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("png: cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("png: short write to " + path);
}

struct PanelImage {
    std::vector<double> values;
    std::size_t width = 0, height = 0;
};

// Side-by-side layout of K equally sized N-by-N panels: a 4-px outer margin
// and a 4-px gap between panels, so the canvas is (K*N + (K-1)*4 + 8) wide
// and (N + 8) tall.  Margins render black (value lo).
inline PanelImage compose_panels(const std::vector<std::vector<double>>& panels, std::size_t n, double background = 0.0,
                                 std::size_t margin = 4, std::size_t gap = 4) {
    if (panels.empty()) throw UsageError("png: no panels to compose");
    for (const auto& p : panels)
        if (p.size() != n * n) throw ShapeError("png: panel size does not match n*n");
    PanelImage img;
    img.width = panels.size() * n + (panels.size() - 1) * gap + 2 * margin;
    img.height = n + 2 * margin;
    img.values.assign(img.width * img.height, background);
    for (std::size_t k = 0; k < panels.size(); ++k) {
        const std::size_t col0 = margin + k * (n + gap);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) img.values[(margin + r) * img.width + col0 + c] = panels[k][r * n + c];
    }
    return img;
}

}  // namespace uvrec
