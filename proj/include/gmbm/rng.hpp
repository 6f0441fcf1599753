#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace gmbm {

/// Name and version of the generator; written into every file header so a
/// stored sample can be traced back to the exact stream definition.
inline constexpr std::string_view kRngName = "philox4x32-10";
inline constexpr int kRngVersion = 1;

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32-10 block: 10 rounds of the bijection keyed by `key`.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// SplitMix64 finalizer, used to derive keys.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over bytes; stable across platforms.
std::uint64_t hash_name(std::string_view name);

/// Counter-based random stream.
///
/// A stream is identified by a 64-bit key and a 64-bit stream id. Draws walk
/// a 64-bit block counter, so the n-th draw is a pure function of
/// (key, id, n). Child streams are derived by hashing, never by consuming
/// draws from the parent, so adding a consumer never perturbs its siblings.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    RngStream child(std::uint64_t tag) const;
    RngStream child(std::string_view name) const { return child(hash_name(name)); }

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }
    /// Standard normal via Box-Muller; draws come in cached pairs.
    double normal();
    /// Gamma(shape, 1) by Marsaglia-Tsang; shape > 0.
    double gamma(double shape);
    /// Chi-square with k > 0 degrees of freedom.
    double chi_square(double k) { return 2.0 * gamma(0.5 * k); }
    /// +1 or -1 with probability 1/2 each.
    int sign();

    std::uint64_t key() const { return key_; }
    std::uint64_t id() const { return id_; }
    std::uint64_t position() const { return counter_; }

private:
    void refill();

    std::uint64_t key_;
    std::uint64_t id_;
    std::uint64_t counter_ = 0;
    PhiloxCounter block_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gmbm
