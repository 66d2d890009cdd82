#pragma once
#include <cstdio>
#include <cstring>
#include <string>

#include "uvrec/tensor.hpp"

namespace uvrec {

// Raw tensor dump: magic "VVTT", u32 rank, u32 dims..., f64 payload, all
// little-endian.  This host is little-endian; bytes are written verbatim so
// saved files are bit-exact images of memory (the determinism contract).

inline void save_tensor(const std::string& path, const Tensor& t) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for write: " + path);
    const char magic[4] = {'V', 'V', 'T', 'T'};
    std::uint32_t rank = static_cast<std::uint32_t>(t.rank());
    bool ok = std::fwrite(magic, 1, 4, f) == 4 && std::fwrite(&rank, 4, 1, f) == 1;
    for (std::size_t i = 0; ok && i < t.rank(); ++i) {
        std::uint32_t d = static_cast<std::uint32_t>(t.dim(i));
        ok = std::fwrite(&d, 4, 1, f) == 1;
    }
    ok = ok && std::fwrite(t.data().data(), 8, t.size(), f) == t.size();
    std::fclose(f);
    if (!ok) throw IoError("short write: " + path);
}

inline Tensor load_tensor(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open for read: " + path);
    char magic[4];
    std::uint32_t rank = 0;
    if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "VVTT", 4) != 0 || std::fread(&rank, 4, 1, f) != 1 || rank > 8) {
        std::fclose(f);
        throw IoError("not a tensor dump: " + path);
    }
    Shape shape(rank);
    for (auto& d : shape) {
        std::uint32_t v = 0;
        if (std::fread(&v, 4, 1, f) != 1) {
            std::fclose(f);
            throw IoError("truncated header: " + path);
        }
        d = v;
    }
    Tensor t = Tensor::zeros(shape);
    if (std::fread(t.data().data(), 8, t.size(), f) != t.size()) {
        std::fclose(f);
        throw IoError("truncated payload: " + path);
    }
    std::fclose(f);
    return t;
}

}  // namespace uvrec
