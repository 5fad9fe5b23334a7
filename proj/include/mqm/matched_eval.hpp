#ifndef MQM_MATCHED_EVAL_HPP
#define MQM_MATCHED_EVAL_HPP

#include <string>
#include <vector>

#include "mqm/metrics.hpp"
#include "mqm/schedule.hpp"
#include "mqm/video_io.hpp"

namespace mqm {

struct EvalOptions {
    // Substituted for an infinite per-pair value (identical frames under dB
    // pooling) so one perfect pair cannot erase the rest of the mean. The
    // result is +inf only when every pair was perfect.
    double cap_db = 100.0;
    // Clusters evaluated concurrently. Results are identical for any value:
    // per-cluster sums are independent and the reduction runs in cluster
    // order on one thread.
    int jobs = 1;
};

struct MatchedResult {
    std::string metric;
    std::string pooling_domain;        // "db", "mse" or "score"
    double score = 0.0;                // finalized; +inf when all pairs perfect
    double pooled = 0.0;               // pooling-domain mean over clusters
    std::vector<double> cluster_values;  // pooling-domain value per cluster
    FrameRatePair pair;
    std::int64_t clusters = 0;
    std::int64_t pairs_evaluated = 0;  // kernel invocations
    std::int64_t capped_pairs = 0;
    bool infinite = false;
    bool truncated = false;            // trailing frames beyond whole clusters dropped
};

// Weighted per-cluster evaluation on the co-occurrence schedule: each of the
// ref_per_cluster + down_per_cluster - 1 frame pairs per cluster is scored
// once and weighted by its number of shared time slots; cluster sums are
// normalized by the virtual cluster length and averaged over clusters.
// Reduces to the classic per-frame mean at equal rates and to the padding
// evaluation at integer factors.
MatchedResult evaluate_matched(FrameReader& reference, FrameReader& downsampled,
                               MetricKernel& kernel, const EvalOptions& options = {});

// Integer-factor baseline: every downsampled frame is held for `factor`
// reference frames and compared against each of them; plain mean over all
// reference frames. Requires an integer rate ratio.
MatchedResult evaluate_padded(FrameReader& reference, FrameReader& downsampled,
                              MetricKernel& kernel, const EvalOptions& options = {});

// Brute-force check: materializes both sequences on the common grid by frame
// repetition and scores every slot, mean over slots. O(virtual_per_cluster)
// kernel calls per cluster; intended for tests and small inputs.
MatchedResult evaluate_oracle(FrameReader& reference, FrameReader& downsampled,
                              MetricKernel& kernel, const EvalOptions& options = {});

}  // namespace mqm

#endif
