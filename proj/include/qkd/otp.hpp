// otp.hpp - one-time pad over a shared key.
//
// E_i = D_i xor K_i. Key bits are consumed as a strict prefix starting at a
// caller-held offset so one session key can cover several messages without
// reuse. A key that is too short is refused; nothing is padded or recycled.

#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "qkd/bitstring.hpp"

namespace qkd::otp {

class KeyExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PadResult {
    BitString output;
    std::size_t next_offset;  // first unused key bit
};

inline PadResult apply_pad(const BitString& data, const BitString& key, std::size_t offset = 0) {
    if (offset > key.size() || key.size() - offset < data.size())
        throw KeyExhausted("one-time pad: key has " + std::to_string(key.size() - std::min(offset, key.size())) +
                           " unused bits, message needs " + std::to_string(data.size()));
    BitString out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.set(i, (data[i] ^ key[offset + i]) != 0);
    return {out, offset + data.size()};
}

inline PadResult encrypt(const BitString& data, const BitString& key, std::size_t offset = 0) {
    return apply_pad(data, key, offset);
}

inline PadResult decrypt(const BitString& cipher, const BitString& key, std::size_t offset = 0) {
    return apply_pad(cipher, key, offset);
}

}  // namespace qkd::otp
