#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace crdlab {

/// MSB-first bit sink.
class BitWriter {
public:
    void put_bit(bool bit) {
        if (fill_ == 0) bytes_.push_back(0);
        if (bit) bytes_.back() |= static_cast<std::uint8_t>(1u << (7 - fill_));
        fill_ = (fill_ + 1) % 8;
    }

    /// n >= 1 as Elias gamma: floor(log2 n) zero bits, then n's binary digits.
    void put_elias_gamma(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("elias gamma codes positive integers only");
        int width = 0;
        while ((n >> (width + 1)) != 0) ++width;
        for (int i = 0; i < width; ++i) put_bit(false);
        for (int i = width; i >= 0; --i) put_bit((n >> i) & 1u);
    }

    std::size_t bit_count() const { return bytes_.size() * 8 - (fill_ == 0 ? 0 : 8 - fill_); }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
    int fill_ = 0;
};

inline std::size_t elias_gamma_length(std::uint64_t n) {
    int width = 0;
    while ((n >> (width + 1)) != 0) ++width;
    return static_cast<std::size_t>(2 * width + 1);
}

/// MSB-first bit source over an externally growable byte buffer; reads fail
/// softly (returns false) when the buffer runs out, so a streaming caller can
/// retry after feeding more bytes.
class BitReader {
public:
    void feed(const std::uint8_t* data, std::size_t size) {
        bytes_.insert(bytes_.end(), data, data + size);
    }

    bool get_bit(bool& bit) {
        const std::size_t byte = cursor_ / 8;
        if (byte >= bytes_.size()) return false;
        bit = (bytes_[byte] >> (7 - cursor_ % 8)) & 1u;
        ++cursor_;
        return true;
    }

    /// Reads one gamma codeword; on underrun restores the cursor and returns
    /// false so the same codeword can be re-read later.
    bool get_elias_gamma(std::uint64_t& n) {
        const std::size_t mark = cursor_;
        int width = 0;
        bool bit = false;
        for (;;) {
            if (!get_bit(bit)) { cursor_ = mark; return false; }
            if (bit) break;
            if (++width > 63) throw std::runtime_error("corrupt bitstream: gamma prefix too long");
        }
        std::uint64_t value = 1;
        for (int i = 0; i < width; ++i) {
            if (!get_bit(bit)) { cursor_ = mark; return false; }
            value = (value << 1) | (bit ? 1u : 0u);
        }
        n = value;
        return true;
    }

    std::size_t bits_consumed() const { return cursor_; }
    void rewind_to(std::size_t bit_position) { cursor_ = bit_position; }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t cursor_ = 0;
};

inline std::uint64_t zigzag_encode(std::int64_t v) {
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

inline std::int64_t zigzag_decode(std::uint64_t v) {
    return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

}  // namespace crdlab
