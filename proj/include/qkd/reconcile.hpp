// reconcile.hpp - Cascade-style parity reconciliation.
//
// Bob corrects his string against Alice's using only parities she discloses.
// Each pass shuffles the positions, cuts them into blocks (the first block size
// is ceil(0.73 / qber) and doubles every pass), compares block parities and
// bisects every odd block down to one bit. A flip in a later pass re-opens the
// blocks of earlier passes that contain the flipped bit; their parities are
// already known, so only the bisection steps cost new disclosures.
//
// Every parity Alice reveals is one leaked bit.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qkd/bitstring.hpp"
#include "qkd/states.hpp"

namespace qkd::protocol {

struct ReconcileResult {
    BitString corrected;
    std::size_t leaked_bits = 0;
    std::size_t flips = 0;
};

inline constexpr double kMinQberForBlockSize = 0.01;

inline std::size_t first_block_size(double qber_estimate) {
    return static_cast<std::size_t>(std::ceil(0.73 / std::max(qber_estimate, kMinQberForBlockSize)));
}

/// `alice_parity(positions)` returns the parity of Alice's bits at the given
/// positions; each call is one disclosed parity.
template <class AliceParity>
ReconcileResult reconcile_with(AliceParity&& alice_parity, const BitString& bob, double qber_estimate,
                               int passes, Rng& rng) {
    if (passes < 1) throw std::invalid_argument("reconcile: passes must be >= 1");

    ReconcileResult result{bob, 0, 0};
    BitString& bits = result.corrected;
    const std::size_t n = bits.size();
    if (n == 0) return result;

    struct Pass {
        std::vector<std::size_t> order;     // shuffled positions, block b = order[b*k, (b+1)*k)
        std::vector<std::size_t> block_of;  // position -> block index
        std::vector<int> alice_block_parity;
        std::size_t block_size = 0;

        std::span<const std::size_t> block(std::size_t b) const {
            const std::size_t lo = b * block_size;
            const std::size_t hi = std::min(lo + block_size, order.size());
            return {order.data() + lo, hi - lo};
        }
    };
    std::vector<Pass> done;
    done.reserve(static_cast<std::size_t>(passes));

    auto bob_parity = [&](std::span<const std::size_t> positions) {
        int p = 0;
        for (auto pos : positions) p ^= bits[pos];
        return p;
    };
    auto disclose = [&](std::span<const std::size_t> positions) {
        ++result.leaked_bits;
        return alice_parity(positions) & 1;
    };

    // Bisect a block with odd relative parity, flip the culprit, return its position.
    auto bisect_and_flip = [&](std::span<const std::size_t> block) {
        std::size_t lo = 0;
        std::size_t hi = block.size();
        while (hi - lo > 1) {
            const std::size_t mid = lo + (hi - lo + 1) / 2;
            const auto left = block.subspan(lo, mid - lo);
            if (disclose(left) != bob_parity(left))
                hi = mid;
            else
                lo = mid;
        }
        const std::size_t pos = block[lo];
        bits.flip(pos);
        ++result.flips;
        return pos;
    };

    auto mismatched = [&](std::size_t pass, std::size_t b) {
        return done[pass].alice_block_parity[b] != bob_parity(done[pass].block(b));
    };

    // Follow a flip through every other pass until all known parities agree.
    auto cascade = [&](std::size_t origin_pass, std::size_t flipped) {
        std::deque<std::pair<std::size_t, std::size_t>> work;
        auto enqueue_others = [&](std::size_t skip, std::size_t pos) {
            for (std::size_t j = 0; j < done.size(); ++j)
                if (j != skip) work.emplace_back(j, done[j].block_of[pos]);
        };
        enqueue_others(origin_pass, flipped);
        while (!work.empty()) {
            const auto [pass, b] = work.front();
            work.pop_front();
            if (!mismatched(pass, b)) continue;
            enqueue_others(pass, bisect_and_flip(done[pass].block(b)));
        }
    };

    std::size_t block_size = first_block_size(qber_estimate);
    for (int i = 0; i < passes; ++i) {
        Pass pass;
        pass.block_size = std::min(block_size, n);
        pass.order.resize(n);
        std::iota(pass.order.begin(), pass.order.end(), std::size_t{0});
        std::shuffle(pass.order.begin(), pass.order.end(), rng);
        pass.block_of.resize(n);
        for (std::size_t j = 0; j < n; ++j) pass.block_of[pass.order[j]] = j / pass.block_size;
        const std::size_t n_blocks = (n + pass.block_size - 1) / pass.block_size;
        pass.alice_block_parity.resize(n_blocks);
        for (std::size_t b = 0; b < n_blocks; ++b) pass.alice_block_parity[b] = disclose(pass.block(b));
        done.push_back(std::move(pass));

        const std::size_t current = done.size() - 1;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            if (!mismatched(current, b)) continue;
            cascade(current, bisect_and_flip(done[current].block(b)));
        }
        if (block_size < std::numeric_limits<std::size_t>::max() / 2) block_size *= 2;
    }
    return result;
}

inline ReconcileResult reconcile(const BitString& alice, const BitString& bob, double qber_estimate, int passes,
                                 Rng& rng) {
    if (alice.size() != bob.size()) throw std::invalid_argument("reconcile: length mismatch");
    auto parity = [&alice](std::span<const std::size_t> positions) {
        int p = 0;
        for (auto pos : positions) p ^= alice[pos];
        return p;
    };
    return reconcile_with(parity, bob, qber_estimate, passes, rng);
}

}  // namespace qkd::protocol
