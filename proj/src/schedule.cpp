#include "mqm/schedule.hpp"

#include <charconv>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mqm {

Rational parse_rational(std::string_view text) {
    auto parse_int = [](std::string_view s) -> std::int64_t {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            throw std::invalid_argument("not an integer: '" + std::string(s) +
                                        "' (decimal rates are not accepted, write e.g. 30000/1001)");
        return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos)
        return Rational(parse_int(text));
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
}

FrameRatePair derive_pair(const Rational& ref_rate, const Rational& down_rate) {
    if (!ref_rate.positive() || !down_rate.positive())
        throw std::invalid_argument("frame rates must be positive");
    if (ref_rate < down_rate)
        throw std::invalid_argument("f_down must not exceed f_ref (upsampling unsupported)");

    // Bring both rates onto a common denominator so the GCD/LCM can be taken
    // over exact integers.
    const std::int64_t common_den = ref_rate.den / std::gcd(ref_rate.den, down_rate.den) * down_rate.den;
    const std::int64_t ref_ticks = ref_rate.num * (common_den / ref_rate.den);
    const std::int64_t down_ticks = down_rate.num * (common_den / down_rate.den);
    const std::int64_t g = std::gcd(ref_ticks, down_ticks);

    FrameRatePair pair;
    pair.ref_rate = ref_rate;
    pair.down_rate = down_rate;
    pair.ref_per_cluster = ref_ticks / g;
    pair.down_per_cluster = down_ticks / g;
    pair.virtual_per_cluster = pair.ref_per_cluster * pair.down_per_cluster;
    pair.rate_gcd = Rational(g, common_den);
    pair.rate_lcm = Rational(g * pair.virtual_per_cluster, common_den);
    pair.factor = Rational(pair.ref_per_cluster, pair.down_per_cluster);
    return pair;
}

FrameRatePair derive_pair(std::int64_t ref_hz, std::int64_t down_hz) {
    if (ref_hz <= 0 || down_hz <= 0)
        throw std::invalid_argument("frame rates must be positive");
    return derive_pair(Rational(ref_hz), Rational(down_hz));
}

ClusterCount cluster_count(const FrameRatePair& pair, std::int64_t ref_frames,
                           std::int64_t down_frames) {
    if (ref_frames < pair.ref_per_cluster || down_frames < pair.down_per_cluster)
        throw std::invalid_argument("sequence shorter than one cluster (" +
                                    std::to_string(pair.ref_per_cluster) + " reference / " +
                                    std::to_string(pair.down_per_cluster) + " downsampled frames)");
    ClusterCount out;
    out.clusters = std::min(ref_frames / pair.ref_per_cluster,
                            down_frames / pair.down_per_cluster);
    out.ref_frames_used = out.clusters * pair.ref_per_cluster;
    out.down_frames_used = out.clusters * pair.down_per_cluster;
    out.truncated = out.ref_frames_used != ref_frames || out.down_frames_used != down_frames;
    return out;
}

ClusterSchedule generate_schedule(const FrameRatePair& pair) {
    const std::int64_t n_ref = pair.ref_per_cluster;
    const std::int64_t n_down = pair.down_per_cluster;
    const std::size_t entries = static_cast<std::size_t>(n_ref + n_down - 1);

    ClusterSchedule s;
    s.pair = pair;
    s.weight.reserve(entries);
    s.ref_index.reserve(entries);
    s.down_index.reserve(entries);

    // Walk the common time grid. Reference frame k ends at slot n_down*k,
    // downsampled frame j at slot n_ref*j; whichever boundary comes first
    // closes the current co-occurrence run and its length is the weight.
    std::int64_t last_stamp = 0;
    std::int64_t next_ref = 1;
    std::int64_t next_down = 1;
    for (std::size_t i = 0; i < entries; ++i) {
        s.ref_index.push_back(static_cast<std::int32_t>(next_ref));
        s.down_index.push_back(static_cast<std::int32_t>(next_down));
        std::int64_t next_stamp;
        if (n_down * next_ref < n_ref * next_down) {
            next_stamp = n_down * next_ref;
            ++next_ref;
        } else {
            next_stamp = n_ref * next_down;
            ++next_down;
        }
        s.weight.push_back(next_stamp - last_stamp);
        last_stamp = next_stamp;
    }
    return s;
}

}  // namespace mqm
