#pragma once

// Little-endian binary stream helpers shared by the D3FT/D3CB/D3GM/D3DS
// container readers and writers. Not installed.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>

#include "d3/error.hpp"

namespace d3::binio {

static_assert(sizeof(float) == 4, "32-bit IEEE floats required");

template <typename T>
inline T byteswap_if_needed(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char* b = reinterpret_cast<unsigned char*>(&v);
        for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        return v;
    }
}

template <typename T>
inline void write_le(std::ostream& os, T v) {
    v = byteswap_if_needed(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline void write_f32_le(std::ostream& os, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
        for (float f : values) {
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            write_le(os, bits);
        }
    }
}

template <typename T>
inline T read_le(std::istream& is, const char* field, const std::string& context) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw CorruptionError(context + ": truncated while reading " + field);
    return byteswap_if_needed(v);
}

inline void read_f32_le(std::istream& is, std::span<float> out, const char* field,
                        const std::string& context) {
    if (!is.read(reinterpret_cast<char*>(out.data()),
                 static_cast<std::streamsize>(out.size() * sizeof(float))))
        throw CorruptionError(context + ": truncated while reading " + field);
    if constexpr (std::endian::native != std::endian::little) {
        for (float& f : out) {
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            bits = byteswap_if_needed(bits);
            std::memcpy(&f, &bits, 4);
        }
    }
}

inline void expect_magic(std::istream& is, const char expected[4], const std::string& context) {
    char magic[4] = {};
    if (!is.read(magic, 4)) throw CorruptionError(context + ": file shorter than magic");
    if (std::memcmp(magic, expected, 4) != 0)
        throw FormatError(context + ": bad magic, expected \"" + std::string(expected, 4) + "\"");
}

inline void expect_eof(std::istream& is, const std::string& context) {
    if (is.peek() != std::char_traits<char>::eof())
        throw CorruptionError(context + ": trailing bytes after payload");
}

}  // namespace d3::binio
