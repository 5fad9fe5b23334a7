#ifndef MQM_RESAMPLE_HPP
#define MQM_RESAMPLE_HPP

#include <vector>

#include "mqm/schedule.hpp"
#include "mqm/video_io.hpp"

namespace mqm {

enum class DownsampleMethod { drop, average };

DownsampleMethod parse_method(const std::string& name);

// Overlap counts between output and input frames within one cluster on the
// common time grid: weights[j][k] is the number of slots output frame j
// shares with input frame k. Each row sums to ref_per_cluster, which is the
// normalizer for the averaging method.
std::vector<std::vector<std::int64_t>> averaging_weights(const FrameRatePair& pair);

// Temporal downsampler, itself a FrameReader at the reduced rate. Consumes
// the source one cluster (ref_per_cluster frames) at a time and emits
// down_per_cluster frames per cluster; trailing frames that do not fill a
// whole cluster are dropped and flagged via truncated().
//
// average: overlap-weighted mean on the common grid, exact integer
//          accumulation, final rounding half away from zero.
// drop:    the input frame on display at the output frame's start time.
class DownsampleReader : public FrameReader {
public:
    DownsampleReader(FrameReader& source, const FrameRatePair& pair, DownsampleMethod method);

    const SequenceInfo& info() const override { return info_; }
    bool read(Frame& out) override;
    bool truncated() const { return truncated_; }

private:
    bool fill_cluster();

    FrameReader& source_;
    FrameRatePair pair_;
    DownsampleMethod method_;
    SequenceInfo info_;
    std::vector<std::vector<std::int64_t>> weights_;
    std::vector<Frame> cluster_;
    std::int64_t cluster_index_ = 0;
    int emitted_in_cluster_ = 0;
    std::int64_t next_output_index_ = 0;
    bool source_done_ = false;
    bool truncated_ = false;
};

}  // namespace mqm

#endif
