#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "fedsea/core.hpp"

namespace fedsea {

// Philox4x32-10 (Salmon et al., SC'11). Pure function of (counter, key).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// What a stream is used for; part of the key so independent consumers never share draws.
enum class DrawPurpose : std::uint32_t {
    data = 1,
    monte_carlo = 2,
    surrogate = 3,
    lemma2_audit = 4,
    state_selection = 5,
    boundary_sampling = 6,
    multistart = 7,
    self_test = 8,
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t replicate = 0;
    std::uint32_t t = 0;
    std::uint32_t m = 0;
    DrawPurpose purpose = DrawPurpose::data;
};

// Sequential view over the counter space of one key. Two streams with equal keys
// produce identical draws no matter when or on which thread they are consumed.
class RngStream {
public:
    explicit RngStream(const StreamKey& key) : key_(key) {
        const std::uint64_t k =
            splitmix64(key.seed ^ splitmix64(0xF5EDull * static_cast<std::uint64_t>(key.purpose)));
        philox_key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    }

    const StreamKey& key() const { return key_; }

    std::uint64_t next_u64() {
        if (lane_ == 2) refill();
        const std::uint64_t v = (static_cast<std::uint64_t>(block_[2 * lane_]) << 32) | block_[2 * lane_ + 1];
        ++lane_;
        return v;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the sine branch is kept for the next call.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    void refill() {
        block_ = Philox4x32::generate({block_index_++, key_.t, key_.m, key_.replicate}, philox_key_);
        lane_ = 0;
    }

    StreamKey key_;
    Philox4x32::Key philox_key_{};
    Philox4x32::Counter block_{};
    std::uint32_t block_index_ = 0;
    int lane_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Distribution parameters chosen by the adversary for one (t, m).
// ---------------------------------------------------------------------------

enum class DistFamily { unspecified, gaussian_isotropic, point_mass };

struct DistParams {
    DistFamily family = DistFamily::unspecified;
    Vector mean;
    // Total variance (trace of the covariance); zero for point masses.
    double variance = 0.0;

    static DistParams gaussian(Vector mean, double variance) {
        return {variance > 0.0 ? DistFamily::gaussian_isotropic : DistFamily::point_mass, std::move(mean),
                variance};
    }
    static DistParams point(Vector at) { return {DistFamily::point_mass, std::move(at), 0.0}; }
    bool operator==(const DistParams&) const = default;
};

// Draw one vector from `params` into `out` (size == mean size).
inline void sample_into(RngStream& stream, const DistParams& params, std::span<double> out) {
    switch (params.family) {
        case DistFamily::point_mass:
            std::copy(params.mean.begin(), params.mean.end(), out.begin());
            return;
        case DistFamily::gaussian_isotropic: {
            if (!(params.variance >= 0.0)) throw Error("gaussian variance must be non-negative");
            const double sd = std::sqrt(params.variance / static_cast<double>(params.mean.size()));
            for (std::size_t i = 0; i < params.mean.size(); ++i) out[i] = params.mean[i] + sd * stream.normal();
            return;
        }
        case DistFamily::unspecified:
            break;
    }
    throw Error("unsupported distribution family");
}

inline Vector sample(RngStream& stream, const DistParams& params) {
    Vector out(params.mean.size());
    sample_into(stream, params, out);
    return out;
}

}  // namespace fedsea
