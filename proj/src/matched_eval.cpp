#include "mqm/matched_eval.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "mqm/errors.hpp"

namespace mqm {

namespace {

struct ClusterSum {
    double sum = 0.0;       // weighted pooling-domain sum, not yet normalized
    std::int64_t pairs = 0;
    std::int64_t capped = 0;
};

double capped_value(double v, double cap, std::int64_t& capped) {
    if (std::isinf(v)) {
        ++capped;
        return cap;
    }
    return v;
}

void rethrow_with_context(std::int64_t cluster, const std::exception& e) {
    const std::string what = "cluster " + std::to_string(cluster) + ": " + e.what();
    if (dynamic_cast<const ToolError*>(&e))
        throw ToolError(what);
    throw FormatError(what);
}

// Pulls `count` frames; returns how many arrived.
std::size_t read_group(FrameReader& reader, std::size_t count, std::vector<Frame>& out) {
    out.clear();
    Frame f;
    while (out.size() < count && reader.read(f))
        out.push_back(std::move(f));
    return out.size();
}

FrameRatePair pair_of(FrameReader& reference, FrameReader& downsampled) {
    const Rational ref_rate = reference.info().frame_rate;
    const Rational down_rate = downsampled.info().frame_rate;
    if (!ref_rate.positive() || !down_rate.positive())
        throw std::invalid_argument("both sequences need a positive frame rate");
    return derive_pair(ref_rate, down_rate);
}

// Shared cluster loop. `per_cluster` scores one cluster's worth of frames;
// it must be pure so clusters can run on worker threads. The reduction runs
// in cluster order regardless of the job count, so results do not depend on
// scheduling.
template <typename PerCluster>
MatchedResult run_clusters(FrameReader& reference, FrameReader& downsampled,
                           MetricKernel& kernel, const FrameRatePair& pair,
                           const EvalOptions& options, PerCluster per_cluster) {
    const auto n_ref = static_cast<std::size_t>(pair.ref_per_cluster);
    const auto n_down = static_cast<std::size_t>(pair.down_per_cluster);
    const double norm = static_cast<double>(pair.virtual_per_cluster);
    const int jobs = options.jobs > 0 ? options.jobs : 1;

    MatchedResult result;
    result.metric = kernel.name();
    result.pooling_domain = kernel.pooling_domain();
    result.pair = pair;

    double pooled = 0.0;
    bool done = false;
    std::vector<std::vector<Frame>> ref_groups, down_groups;
    while (!done) {
        // Stage up to `jobs` whole clusters.
        ref_groups.clear();
        down_groups.clear();
        while (ref_groups.size() < static_cast<std::size_t>(jobs)) {
            std::vector<Frame> rg, dg;
            const std::size_t got_ref = read_group(reference, n_ref, rg);
            const std::size_t got_down = read_group(downsampled, n_down, dg);
            if (got_ref == n_ref && got_down == n_down) {
                ref_groups.push_back(std::move(rg));
                down_groups.push_back(std::move(dg));
                continue;
            }
            done = true;
            if (got_ref != 0 || got_down != 0)
                result.truncated = true;
            break;
        }
        if (ref_groups.empty())
            break;

        std::vector<ClusterSum> sums;
        try {
            std::vector<std::future<ClusterSum>> futures;
            for (std::size_t i = 1; i < ref_groups.size(); ++i)
                futures.push_back(std::async(std::launch::async, per_cluster,
                                             std::cref(ref_groups[i]), std::cref(down_groups[i])));
            sums.push_back(per_cluster(ref_groups[0], down_groups[0]));
            for (auto& f : futures)
                sums.push_back(f.get());
        } catch (const std::exception& e) {
            rethrow_with_context(result.clusters, e);
        }

        for (const ClusterSum& cs : sums) {
            const double cluster_value = cs.sum / norm;
            result.cluster_values.push_back(cluster_value);
            pooled += cluster_value;
            result.pairs_evaluated += cs.pairs;
            result.capped_pairs += cs.capped;
            ++result.clusters;
        }
    }

    if (result.clusters == 0)
        throw FormatError("sequences shorter than one cluster (" +
                          std::to_string(pair.ref_per_cluster) + " reference / " +
                          std::to_string(pair.down_per_cluster) + " downsampled frames)");

    pooled /= static_cast<double>(result.clusters);
    result.pooled = pooled;
    if (result.pairs_evaluated > 0 && result.capped_pairs == result.pairs_evaluated)
        result.score = std::numeric_limits<double>::infinity();
    else
        result.score = kernel.finalize(pooled);
    result.infinite = std::isinf(result.score) && result.score > 0;
    return result;
}

}  // namespace

MatchedResult evaluate_matched(FrameReader& reference, FrameReader& downsampled,
                               MetricKernel& kernel, const EvalOptions& options) {
    const FrameRatePair pair = pair_of(reference, downsampled);
    const ClusterSchedule schedule = generate_schedule(pair);
    const double cap = options.cap_db;

    auto per_cluster = [&kernel, &schedule, cap](const std::vector<Frame>& ref_frames,
                                                 const std::vector<Frame>& down_frames) {
        ClusterSum cs;
        for (std::size_t i = 0; i < schedule.size(); ++i) {
            // 1-based cluster indices become buffer positions exactly here.
            const Frame& r = ref_frames[static_cast<std::size_t>(schedule.ref_index[i] - 1)];
            const Frame& d = down_frames[static_cast<std::size_t>(schedule.down_index[i] - 1)];
            const double v = capped_value(kernel.pair_value(r, d), cap, cs.capped);
            cs.sum += static_cast<double>(schedule.weight[i]) * v;
            ++cs.pairs;
        }
        return cs;
    };
    return run_clusters(reference, downsampled, kernel, pair, options, per_cluster);
}

MatchedResult evaluate_padded(FrameReader& reference, FrameReader& downsampled,
                              MetricKernel& kernel, const EvalOptions& options) {
    const FrameRatePair pair = pair_of(reference, downsampled);
    if (pair.factor.den != 1)
        throw std::invalid_argument("padding evaluation requires an integer rate ratio, got " +
                                    pair.factor.str());
    const double cap = options.cap_db;

    auto per_cluster = [&kernel, cap](const std::vector<Frame>& ref_frames,
                                      const std::vector<Frame>& down_frames) {
        ClusterSum cs;
        for (const Frame& r : ref_frames) {
            const double v = capped_value(kernel.pair_value(r, down_frames[0]), cap, cs.capped);
            cs.sum += v;
            ++cs.pairs;
        }
        return cs;
    };
    return run_clusters(reference, downsampled, kernel, pair, options, per_cluster);
}

MatchedResult evaluate_oracle(FrameReader& reference, FrameReader& downsampled,
                              MetricKernel& kernel, const EvalOptions& options) {
    const FrameRatePair pair = pair_of(reference, downsampled);
    const std::int64_t n_ref = pair.ref_per_cluster;
    const std::int64_t n_down = pair.down_per_cluster;
    const double cap = options.cap_db;

    auto per_cluster = [&kernel, n_ref, n_down, cap](const std::vector<Frame>& ref_frames,
                                                     const std::vector<Frame>& down_frames) {
        ClusterSum cs;
        // Both sequences expanded to the common rate by repetition: slot t
        // shows reference frame t/n_down and downsampled frame t/n_ref.
        for (std::int64_t t = 0; t < n_ref * n_down; ++t) {
            const Frame& r = ref_frames[static_cast<std::size_t>(t / n_down)];
            const Frame& d = down_frames[static_cast<std::size_t>(t / n_ref)];
            const double v = capped_value(kernel.pair_value(r, d), cap, cs.capped);
            cs.sum += v;
            ++cs.pairs;
        }
        return cs;
    };
    return run_clusters(reference, downsampled, kernel, pair, options, per_cluster);
}

}  // namespace mqm
