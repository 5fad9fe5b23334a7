#ifndef MQM_SCHEDULE_HPP
#define MQM_SCHEDULE_HPP

#include <cstdint>
#include <vector>

#include "mqm/rational.hpp"

namespace mqm {

// Cluster arithmetic for a reference/downsampled frame-rate pair.
//
// A cluster is the span between two instants at which a reference frame and
// a downsampled frame start together. Within one cluster the reference
// contributes ref_per_cluster frames and the downsampled sequence
// down_per_cluster frames; on the common grid running at rate_lcm the
// cluster is virtual_per_cluster slots long.
struct FrameRatePair {
    Rational ref_rate;   // Hz
    Rational down_rate;  // Hz
    Rational rate_gcd;   // Hz
    Rational rate_lcm;   // Hz, the common evaluation rate
    std::int64_t ref_per_cluster = 0;
    std::int64_t down_per_cluster = 0;
    std::int64_t virtual_per_cluster = 0;  // ref_per_cluster * down_per_cluster
    Rational factor;     // ref_rate / down_rate, reduced
};

// Derives all cluster arithmetic from the two rates.
// Requires ref_rate >= down_rate > 0; throws std::invalid_argument otherwise.
FrameRatePair derive_pair(const Rational& ref_rate, const Rational& down_rate);
FrameRatePair derive_pair(std::int64_t ref_hz, std::int64_t down_hz);

struct ClusterCount {
    std::int64_t clusters = 0;
    std::int64_t ref_frames_used = 0;
    std::int64_t down_frames_used = 0;
    bool truncated = false;  // leftover frames beyond the last whole cluster
};

// Whole clusters covered by both sequences. Throws std::invalid_argument if
// either sequence is shorter than one cluster.
ClusterCount cluster_count(const FrameRatePair& pair, std::int64_t ref_frames,
                           std::int64_t down_frames);

// Per-cluster evaluation plan: entry i says "compare reference frame
// ref_index[i] with downsampled frame down_index[i], weighted by the number
// of common-grid slots the two frames share". Indices are 1-based within
// the cluster; they become buffer positions only at the access boundary.
struct ClusterSchedule {
    FrameRatePair pair;
    std::vector<std::int64_t> weight;
    std::vector<std::int32_t> ref_index;
    std::vector<std::int32_t> down_index;

    std::size_t size() const { return weight.size(); }
};

// Builds the weight/index vectors for one cluster. The vectors have
// ref_per_cluster + down_per_cluster - 1 entries and the weights sum to
// virtual_per_cluster.
ClusterSchedule generate_schedule(const FrameRatePair& pair);

}  // namespace mqm

#endif
