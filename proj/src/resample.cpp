#include "mqm/resample.hpp"

#include <algorithm>
#include <stdexcept>

#include "mqm/errors.hpp"

namespace mqm {

DownsampleMethod parse_method(const std::string& name) {
    if (name == "drop") return DownsampleMethod::drop;
    if (name == "average") return DownsampleMethod::average;
    throw std::invalid_argument("unknown method '" + name + "' (expected drop or average)");
}

std::vector<std::vector<std::int64_t>> averaging_weights(const FrameRatePair& pair) {
    const std::int64_t n_ref = pair.ref_per_cluster;
    const std::int64_t n_down = pair.down_per_cluster;
    std::vector<std::vector<std::int64_t>> weights(static_cast<std::size_t>(n_down));
    for (std::int64_t j = 0; j < n_down; ++j) {
        auto& row = weights[static_cast<std::size_t>(j)];
        row.assign(static_cast<std::size_t>(n_ref), 0);
        // Output frame j occupies slots [j*n_ref, (j+1)*n_ref), input frame k
        // occupies [k*n_down, (k+1)*n_down).
        const std::int64_t lo = j * n_ref;
        const std::int64_t hi = lo + n_ref;
        for (std::int64_t k = 0; k < n_ref; ++k) {
            const std::int64_t overlap = std::min(hi, (k + 1) * n_down) - std::max(lo, k * n_down);
            if (overlap > 0)
                row[static_cast<std::size_t>(k)] = overlap;
        }
    }
    return weights;
}

DownsampleReader::DownsampleReader(FrameReader& source, const FrameRatePair& pair,
                                   DownsampleMethod method)
    : source_(source), pair_(pair), method_(method) {
    if (source.info().frame_rate != pair.ref_rate)
        throw std::invalid_argument("source rate " + source.info().frame_rate.str() +
                                    " differs from the pair's reference rate " +
                                    pair.ref_rate.str());
    info_ = source.info();
    info_.frame_rate = pair.down_rate;
    if (info_.frame_count >= 0) {
        if (info_.frame_count < pair.ref_per_cluster)
            throw std::invalid_argument("input shorter than one cluster (" +
                                        std::to_string(pair.ref_per_cluster) + " frames)");
        info_.frame_count = info_.frame_count / pair.ref_per_cluster * pair.down_per_cluster;
    }
    if (method_ == DownsampleMethod::average)
        weights_ = averaging_weights(pair_);
    cluster_.reserve(static_cast<std::size_t>(pair_.ref_per_cluster));
}

bool DownsampleReader::fill_cluster() {
    cluster_.clear();
    Frame f;
    while (cluster_.size() < static_cast<std::size_t>(pair_.ref_per_cluster)) {
        if (!source_.read(f)) {
            source_done_ = true;
            if (!cluster_.empty())
                truncated_ = true;
            if (cluster_index_ == 0)
                throw FormatError(source_.info().source + ": input shorter than one cluster (" +
                                  std::to_string(pair_.ref_per_cluster) + " frames)");
            return false;
        }
        cluster_.push_back(std::move(f));
    }
    ++cluster_index_;
    emitted_in_cluster_ = 0;
    return true;
}

bool DownsampleReader::read(Frame& out) {
    if (emitted_in_cluster_ >= pair_.down_per_cluster) {
        cluster_.clear();
        emitted_in_cluster_ = 0;
    }
    if (cluster_.empty()) {
        if (source_done_ || !fill_cluster())
            return false;
    }

    const int j = emitted_in_cluster_;
    if (method_ == DownsampleMethod::drop) {
        // The input frame whose display interval covers the output start stamp.
        const auto k = static_cast<std::size_t>(std::int64_t(j) * pair_.ref_per_cluster /
                                                pair_.down_per_cluster);
        out = cluster_[k];
    } else {
        const auto& row = weights_[static_cast<std::size_t>(j)];
        const Frame& shape = cluster_.front();
        out.width = shape.width;
        out.height = shape.height;
        out.bit_depth = shape.bit_depth;
        out.chroma = shape.chroma;
        const std::int64_t total = pair_.ref_per_cluster;
        for (int p = 0; p < shape.plane_count(); ++p) {
            const std::size_t samples = shape.dims(p).samples();
            auto& dst = out.planes[p];
            dst.assign(samples, 0);
            std::vector<std::int64_t> acc(samples, 0);
            for (std::size_t k = 0; k < row.size(); ++k) {
                const std::int64_t w = row[k];
                if (w == 0)
                    continue;
                const auto& src = cluster_[k].planes[p];
                for (std::size_t i = 0; i < samples; ++i)
                    acc[i] += w * src[i];
            }
            // Round half away from zero on the exact integer accumulator.
            for (std::size_t i = 0; i < samples; ++i)
                dst[i] = static_cast<std::uint16_t>((2 * acc[i] + total) / (2 * total));
        }
    }
    out.index = next_output_index_++;
    ++emitted_in_cluster_;
    return true;
}

}  // namespace mqm
