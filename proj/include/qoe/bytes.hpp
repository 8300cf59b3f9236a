#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "qoe/error.hpp"

namespace qoe {

/// CRC-32 (IEEE 802.3, polynomial 0xEDB88320) of a byte string.
std::uint32_t crc32(std::string_view data);

/// Little-endian binary writer for model files.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { append(&v, 2); }
    void u32(std::uint32_t v) { append(&v, 4); }
    void u64(std::uint64_t v) { append(&v, 8); }
    void i32(std::int32_t v) { append(&v, 4); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }
    void raw(std::string_view s) { buf_.append(s); }

    const std::string& bytes() const { return buf_; }
    std::string take() { return std::move(buf_); }

private:
    void append(const void* p, std::size_t n) {
        // Host is little-endian; serialize verbatim.
        buf_.append(static_cast<const char*>(p), n);
    }
    std::string buf_;
};

/// Bounds-checked reader matching ByteWriter's layout.
class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint16_t u16() { return scalar<std::uint16_t>(); }
    std::uint32_t u32() { return scalar<std::uint32_t>(); }
    std::uint64_t u64() { return scalar<std::uint64_t>(); }
    std::int32_t i32() { return scalar<std::int32_t>(); }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        return std::string(take(n));
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    template <typename T>
    T scalar() {
        T v;
        std::memcpy(&v, take(sizeof(T)).data(), sizeof(T));
        return v;
    }
    std::string_view take(std::size_t n) {
        if (pos_ + n > data_.size())
            throw SerializationError("unexpected end of data");
        std::string_view out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace qoe
