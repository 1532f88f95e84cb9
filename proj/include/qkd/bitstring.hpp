// bitstring.hpp - ordered bit sequence with hex and text codecs.
//
// Hex packs four bits per digit, most significant first; a trailing partial
// nibble is padded with zeros. Text encodes each byte as 8 bits, MSB first.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qkd {

class BitString {
public:
    BitString() = default;
    explicit BitString(std::size_t n, bool value = false) : bits_(n, value ? 1 : 0) {}
    BitString(std::initializer_list<int> bits) {
        bits_.reserve(bits.size());
        for (int b : bits) push_back(b != 0);
    }
    explicit BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto& b : bits_) b = b ? 1 : 0;
    }

    /// "0110..." -> bits; any other character is rejected.
    static BitString from_binary(std::string_view s) {
        BitString out;
        out.bits_.reserve(s.size());
        for (char c : s) {
            if (c != '0' && c != '1') throw std::invalid_argument("from_binary: expected '0' or '1'");
            out.push_back(c == '1');
        }
        return out;
    }

    static BitString from_hex(std::string_view hex) {
        BitString out;
        out.bits_.reserve(hex.size() * 4);
        for (char c : hex) {
            int v;
            if (c >= '0' && c <= '9') v = c - '0';
            else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
            else throw std::invalid_argument(std::string("from_hex: invalid hex digit '") + c + "'");
            for (int k = 3; k >= 0; --k) out.push_back(((v >> k) & 1) != 0);
        }
        return out;
    }

    static BitString from_text(std::string_view text) {
        BitString out;
        out.bits_.reserve(text.size() * 8);
        for (unsigned char c : text)
            for (int k = 7; k >= 0; --k) out.push_back(((c >> k) & 1) != 0);
        return out;
    }

    std::string to_binary() const {
        std::string s;
        s.reserve(bits_.size());
        for (auto b : bits_) s.push_back(b ? '1' : '0');
        return s;
    }

    std::string to_hex() const {
        static constexpr char kDigits[] = "0123456789abcdef";
        std::string s;
        s.reserve((bits_.size() + 3) / 4);
        for (std::size_t i = 0; i < bits_.size(); i += 4) {
            int v = 0;
            for (std::size_t k = 0; k < 4; ++k) v = (v << 1) | (i + k < bits_.size() ? bits_[i + k] : 0);
            s.push_back(kDigits[v]);
        }
        return s;
    }

    /// Requires a whole number of bytes.
    std::string to_text() const {
        if (bits_.size() % 8 != 0) throw std::invalid_argument("to_text: length is not a multiple of 8");
        std::string s;
        s.reserve(bits_.size() / 8);
        for (std::size_t i = 0; i < bits_.size(); i += 8) {
            unsigned v = 0;
            for (std::size_t k = 0; k < 8; ++k) v = (v << 1) | bits_[i + k];
            s.push_back(static_cast<char>(v));
        }
        return s;
    }

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }

    int operator[](std::size_t i) const { return bits_[i]; }
    void set(std::size_t i, bool v) { bits_.at(i) = v ? 1 : 0; }
    void flip(std::size_t i) { bits_.at(i) ^= 1; }
    void push_back(bool v) { bits_.push_back(v ? 1 : 0); }
    void reserve(std::size_t n) { bits_.reserve(n); }

    BitString slice(std::size_t offset, std::size_t count) const {
        if (offset + count > bits_.size()) throw std::out_of_range("BitString::slice out of range");
        return BitString(std::vector<std::uint8_t>(bits_.begin() + static_cast<std::ptrdiff_t>(offset),
                                                   bits_.begin() + static_cast<std::ptrdiff_t>(offset + count)));
    }

    std::size_t count_ones() const {
        std::size_t n = 0;
        for (auto b : bits_) n += b;
        return n;
    }

    /// Positions where this and `other` differ; lengths must match.
    std::size_t hamming_distance(const BitString& other) const {
        if (other.size() != size()) throw std::invalid_argument("hamming_distance: length mismatch");
        std::size_t n = 0;
        for (std::size_t i = 0; i < bits_.size(); ++i) n += bits_[i] != other.bits_[i];
        return n;
    }

    auto begin() const { return bits_.begin(); }
    auto end() const { return bits_.end(); }

    friend bool operator==(const BitString&, const BitString&) = default;

private:
    std::vector<std::uint8_t> bits_;  // one 0/1 per element
};

}  // namespace qkd
