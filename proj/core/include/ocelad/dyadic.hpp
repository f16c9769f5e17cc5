#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ocelad {

/// A closed step range [start, end] at dyadic level j, of length i0 * 2^j.
struct DyadicInterval {
    int level = 0;
    std::int64_t start = 1;
    std::int64_t end = 1;

    std::int64_t length() const noexcept { return end - start + 1; }
    bool contains(std::int64_t t) const noexcept { return start <= t && t <= end; }

    std::string to_string() const;

    friend auto operator<=>(const DyadicInterval &, const DyadicInterval &) = default;
};

inline constexpr int kUnboundedLevel = std::numeric_limits<int>::max();

/// Intervals covering step t, one per level, sorted by level ascending.
///
/// Steps are grouped into blocks of i0 (block b = (t - 1) / i0 + 1); at level
/// j the blocks are tiled by [k 2^j, (k + 1) 2^j - 1] for k >= 1, so the
/// first level-j interval begins at block 2^j. Levels above max_level are
/// omitted.
std::vector<DyadicInterval> active_intervals(std::int64_t t, std::int64_t i0,
                                             int max_level = kUnboundedLevel);

} // namespace ocelad
