#ifndef MQM_TESTS_SUPPORT_HPP
#define MQM_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "mqm/frame.hpp"
#include "mqm/metrics.hpp"
#include "mqm/schedule.hpp"
#include "mqm/video_io.hpp"

namespace testutil {

inline mqm::Frame constant_frame(int w, int h, std::uint16_t luma, int bit_depth = 8,
                                 mqm::Chroma chroma = mqm::Chroma::mono,
                                 std::uint16_t chroma_value = 0) {
    mqm::Frame f = mqm::make_frame(w, h, bit_depth, chroma);
    f.planes[0].assign(f.planes[0].size(), luma);
    for (int p = 1; p < f.plane_count(); ++p)
        f.planes[p].assign(f.planes[p].size(), chroma_value);
    return f;
}

inline mqm::Frame random_frame(std::mt19937& rng, int w, int h, int bit_depth = 8,
                               mqm::Chroma chroma = mqm::Chroma::mono) {
    mqm::Frame f = mqm::make_frame(w, h, bit_depth, chroma);
    std::uniform_int_distribution<std::uint16_t> dist(0, f.max_value());
    for (int p = 0; p < f.plane_count(); ++p)
        for (auto& s : f.planes[p])
            s = dist(rng);
    return f;
}

inline std::vector<mqm::Frame> random_frames(std::mt19937& rng, std::size_t count, int w, int h,
                                             int bit_depth = 8,
                                             mqm::Chroma chroma = mqm::Chroma::mono) {
    std::vector<mqm::Frame> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(random_frame(rng, w, h, bit_depth, chroma));
    return out;
}

// Horizontally translating triangle-wave gradient; smooth everywhere
// including the wrap, so temporal averaging degrades it gracefully.
inline std::vector<mqm::Frame> gradient_sequence(std::size_t frames, int size = 64,
                                                 int pixels_per_frame = 2, int period = 32) {
    std::vector<mqm::Frame> out;
    out.reserve(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        mqm::Frame f = mqm::make_frame(size, size, 8, mqm::Chroma::mono);
        for (int x = 0; x < size; ++x) {
            const int shift = static_cast<int>(t) * pixels_per_frame;
            const int phase = ((x - shift) % period + period) % period;
            const double tri = std::abs(phase - period / 2.0) * (255.0 / (period / 2.0));
            const auto v = static_cast<std::uint16_t>(std::lround(tri));
            for (int y = 0; y < size; ++y)
                f.planes[0][std::size_t(y) * size + x] = v;
        }
        out.push_back(std::move(f));
    }
    return out;
}

// Brute-force schedule: walk the common-grid slots and run-length encode
// which (reference, downsampled) frame pair each slot shows.
struct SlotRun {
    int ref = 0;
    int down = 0;
    std::int64_t count = 0;
};

inline std::vector<SlotRun> slot_schedule(std::int64_t n_ref, std::int64_t n_down) {
    std::vector<SlotRun> runs;
    for (std::int64_t t = 0; t < n_ref * n_down; ++t) {
        const int r = static_cast<int>(t / n_down) + 1;
        const int d = static_cast<int>(t / n_ref) + 1;
        if (!runs.empty() && runs.back().ref == r && runs.back().down == d)
            ++runs.back().count;
        else
            runs.push_back({r, d, 1});
    }
    return runs;
}

// Straightforward windowwise SSIM from the defining formula, no separable
// filtering; the independent check for the production implementation.
inline double reference_ssim(const mqm::Frame& a, const mqm::Frame& b, int plane = 0) {
    const auto dims = a.dims(plane);
    const int win = 11;
    const double sigma = 1.5;
    double taps[11];
    double tap_sum = 0;
    for (int i = 0; i < win; ++i) {
        const double d = i - 5.0;
        taps[i] = std::exp(-d * d / (2 * sigma * sigma));
        tap_sum += taps[i];
    }
    for (double& t : taps)
        t /= tap_sum;

    const double peak = (1 << a.bit_depth) - 1;
    const double c1 = 0.01 * peak * 0.01 * peak;
    const double c2 = 0.03 * peak * 0.03 * peak;
    const auto& xs = a.planes[plane];
    const auto& ys = b.planes[plane];

    double total = 0;
    int windows = 0;
    for (int oy = 0; oy + win <= dims.height; ++oy) {
        for (int ox = 0; ox + win <= dims.width; ++ox) {
            double mx = 0, my = 0, exx = 0, eyy = 0, exy = 0;
            for (int r = 0; r < win; ++r) {
                for (int c = 0; c < win; ++c) {
                    const double wgt = taps[r] * taps[c];
                    const double x = xs[std::size_t(oy + r) * dims.width + ox + c];
                    const double y = ys[std::size_t(oy + r) * dims.width + ox + c];
                    mx += wgt * x;
                    my += wgt * y;
                    exx += wgt * (x * x);
                    eyy += wgt * (y * y);
                    exy += wgt * (x * y);
                }
            }
            const double vx = exx - mx * mx, vy = eyy - my * my, cov = exy - mx * my;
            total += ((2 * (mx * my) + c1) * (2 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++windows;
        }
    }
    return total / windows;
}

// Counts kernel invocations for the work-bound assertions.
class CountingKernel : public mqm::MetricKernel {
public:
    explicit CountingKernel(mqm::MetricKernel& inner) : inner_(inner) {}
    const std::string& name() const override { return inner_.name(); }
    const char* pooling_domain() const override { return inner_.pooling_domain(); }
    double pair_value(const mqm::Frame& r, const mqm::Frame& d) override {
        ++calls_;
        return inner_.pair_value(r, d);
    }
    double finalize(double pooled) const override { return inner_.finalize(pooled); }
    double perfect_score() const override { return inner_.perfect_score(); }
    mqm::ScoreBounds bounds() const override { return inner_.bounds(); }
    std::int64_t calls() const { return calls_; }

private:
    mqm::MetricKernel& inner_;
    std::int64_t calls_ = 0;
};

// Logs every pull against a shared clock so tests can assert the evaluation
// never buffers further ahead than one cluster per stream.
class TrackingReader : public mqm::FrameReader {
public:
    TrackingReader(mqm::MemoryReader inner, std::vector<std::pair<int, std::int64_t>>& log,
                   int stream_id)
        : inner_(std::move(inner)), log_(log), id_(stream_id) {}
    const mqm::SequenceInfo& info() const override { return inner_.info(); }
    bool read(mqm::Frame& out) override {
        if (!inner_.read(out))
            return false;
        log_.emplace_back(id_, out.index);
        return true;
    }

private:
    mqm::MemoryReader inner_;
    std::vector<std::pair<int, std::int64_t>>& log_;
    int id_;
};

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        path_ = base / ("mqm-test-" + std::to_string(rd()) + "-" + std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testutil

#endif
