#pragma once

// Internal little-endian serialization helpers shared by the binary file
// formats. Byte order is explicit so files are host-independent.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

#include "hookmil/errors.hpp"

namespace hookmil::wire {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
public:
    ByteReader(const std::string& bytes, const std::string& path)
        : bytes_(bytes), path_(path) {}

    std::uint16_t u16() {
        need(2);
        const std::uint16_t v =
            byte(0) | (static_cast<std::uint16_t>(byte(1)) << 8);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(byte(i)) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(byte(i)) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void raw(char* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::string str(std::size_t n) {
        need(n);
        std::string s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    std::uint8_t byte(std::size_t offset) const {
        return static_cast<std::uint8_t>(bytes_[pos_ + offset]);
    }

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n)
            throw ParseError(path_ + ": truncated (need " + std::to_string(n) +
                             " more bytes at offset " + std::to_string(pos_) +
                             ")");
    }

    const std::string& bytes_;
    const std::string path_;
    std::size_t pos_ = 0;
};

// Whole-file slurp/spill for the small binary formats.
std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace hookmil::wire
