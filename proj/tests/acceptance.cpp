// Acceptance suite: one binary, one pass/fail line per criterion.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mqm/matched_eval.hpp"
#include "mqm/metrics.hpp"
#include "mqm/rd.hpp"
#include "mqm/resample.hpp"
#include "mqm/schedule.hpp"
#include "mqm/video_io.hpp"
#include "support.hpp"

using namespace mqm;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool pass, double ms,
            const std::string& detail = "") {
    std::printf("[%s] criterion %2d: %s (%.1f ms)%s%s\n", pass ? "PASS" : "FAIL", number,
                name.c_str(), ms, detail.empty() ? "" : " - ", detail.c_str());
    if (!pass)
        ++failures;
}

struct Timer {
    Clock::time_point start = Clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    }
};

MatchedResult run_eval(const std::vector<Frame>& ref, std::int64_t f_ref,
                       const std::vector<Frame>& dist, std::int64_t f_down, MetricKernel& kernel,
                       MatchedResult (*fn)(FrameReader&, FrameReader&, MetricKernel&,
                                           const EvalOptions&) = evaluate_matched) {
    auto r = memory_reader(ref, Rational(f_ref));
    auto d = memory_reader(dist, Rational(f_down));
    return fn(r, d, kernel, {});
}

// 1. Golden schedule for the worked 3/2 Hz pair, exact and fast.
void criterion_1() {
    generate_schedule(derive_pair(3, 2));  // warm-up outside the timed run
    Timer t;
    const auto pair = derive_pair(3, 2);
    const auto s = generate_schedule(pair);
    const double ms = t.ms();
    const bool pass = s.weight == std::vector<std::int64_t>{2, 1, 1, 2} &&
                      s.ref_index == std::vector<std::int32_t>{1, 2, 2, 3} &&
                      s.down_index == std::vector<std::int32_t>{1, 1, 2, 2} &&
                      pair.virtual_per_cluster == 6 && pair.rate_lcm == Rational(6) && ms < 1.0;
    report(1, "golden schedule for 3/2 Hz", pass, ms);
}

// 2. Least common multiple of 60 and 50 Hz.
void criterion_2() {
    Timer t;
    const bool pass = derive_pair(60, 50).rate_lcm == Rational(300);
    report(2, "LCM of 60/50 Hz is 300 Hz", pass, t.ms());
}

// 3. Reduced downsampling factors for the 120 Hz rate ladder.
void criterion_3() {
    Timer t;
    const std::vector<std::pair<std::int64_t, Rational>> expected = {
        {100, Rational(6, 5)}, {60, Rational(2)},  {50, Rational(12, 5)}, {40, Rational(3)},
        {30, Rational(4)},     {25, Rational(24, 5)}, {24, Rational(5)},  {15, Rational(8)}};
    bool pass = true;
    for (const auto& [rate, factor] : expected)
        pass = pass && derive_pair(120, rate).factor == factor;
    report(3, "downsampling factors of the 120 Hz ladder", pass, t.ms());
}

// 4. Equal-rate self-evaluation is a perfect score.
void criterion_4() {
    Timer t;
    std::mt19937 rng(104);
    const auto frames = testutil::random_frames(rng, 6, 16, 16);
    auto ssim = make_ssim_kernel();
    auto psnr = make_psnr_kernel(8, Pooling::frame);
    const auto s = run_eval(frames, 30, frames, 30, *ssim);
    const auto p = run_eval(frames, 30, frames, 30, *psnr);
    const bool pass = s.score == 1.0 && p.infinite && std::isinf(p.score) && p.score > 0;
    report(4, "identity scores: mSSIM 1.000, mPSNR infinite", pass, t.ms());
}

// 5. Weight-sum and length laws, exhaustive over coprime cluster sizes <= 64.
void criterion_5() {
    Timer t;
    bool pass = true;
    std::int64_t pairs = 0;
    for (std::int64_t n_ref = 1; n_ref <= 64 && pass; ++n_ref) {
        for (std::int64_t n_down = 1; n_down <= n_ref; ++n_down) {
            if (std::gcd(n_ref, n_down) != 1)
                continue;
            ++pairs;
            const auto s = generate_schedule(derive_pair(n_ref, n_down));
            if (s.size() != static_cast<std::size_t>(n_ref + n_down - 1) ||
                std::accumulate(s.weight.begin(), s.weight.end(), std::int64_t{0}) !=
                    n_ref * n_down) {
                pass = false;
                break;
            }
        }
    }
    const double ms = t.ms();
    report(5, "weight-sum and length laws, all coprime pairs to 64", pass && ms < 5000.0, ms,
           std::to_string(pairs) + " pairs");
}

// 6 + 8. Randomized matched-vs-oracle trials, and the kernel work bound.
// Criterion 8 reuses the instrumented trials; its result is reported after
// criterion 7 to keep the output numbered.
struct OracleTrialsOutcome {
    bool work_ok = true;
};

OracleTrialsOutcome criteria_6_and_8() {
    Timer t;
    std::mt19937 rng(106);
    bool oracle_ok = true;
    bool work_ok = true;
    double worst = 0.0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        std::int64_t n_ref, n_down;
        for (;;) {
            n_ref = 1 + std::int64_t(rng() % 12);
            n_down = 1 + std::int64_t(rng() % std::uint64_t(n_ref));
            if (std::gcd(n_ref, n_down) == 1)
                break;
        }
        const std::int64_t clusters = 1 + trial % 2;
        const auto ref = testutil::random_frames(rng, std::size_t(clusters * n_ref), 16, 16);
        const auto dist = testutil::random_frames(rng, std::size_t(clusters * n_down), 16, 16);

        auto psnr_db = make_psnr_kernel(8, Pooling::frame);
        auto psnr_mse = make_psnr_kernel(8, Pooling::mse);
        auto ssim = make_ssim_kernel();
        const struct {
            MetricKernel* kernel;
            bool relative;
        } cases[] = {{psnr_db.get(), true}, {psnr_mse.get(), true}, {ssim.get(), false}};

        for (const auto& c : cases) {
            testutil::CountingKernel counted(*c.kernel);
            const auto matched = run_eval(ref, n_ref, dist, n_down, counted);
            const auto oracle = run_eval(ref, n_ref, dist, n_down, *c.kernel, evaluate_oracle);
            const double scale = c.relative ? std::abs(oracle.score) : 1.0;
            const double err = std::abs(matched.score - oracle.score) / scale;
            worst = std::max(worst, err);
            if (!(std::isfinite(matched.score) && err < 1e-12))
                oracle_ok = false;
            if (counted.calls() != clusters * (n_ref + n_down - 1) ||
                counted.calls() != matched.pairs_evaluated)
                work_ok = false;
        }
    }
    const double ms = t.ms();
    char detail[64];
    snprintf(detail, sizeof detail, "worst |matched-oracle| = %.2e", worst);
    report(6, "matched equals the virtual-expansion oracle, 200 trials",
           oracle_ok && ms < 60000.0, ms, detail);
    return {work_ok};
}

// 7. Integer factors reduce to the padding evaluation bit-exactly.
void criterion_7() {
    Timer t;
    std::mt19937 rng(107);
    bool pass = true;
    for (const int d : {1, 2, 3, 4, 8}) {
        const auto ref = testutil::random_frames(rng, std::size_t(2 * d), 12, 12);
        const auto dist = testutil::random_frames(rng, 2, 12, 12);
        auto psnr_db = make_psnr_kernel(8, Pooling::frame);
        auto psnr_mse = make_psnr_kernel(8, Pooling::mse);
        auto ssim = make_ssim_kernel();
        for (MetricKernel* kernel : {psnr_db.get(), psnr_mse.get(), ssim.get()}) {
            const auto matched = run_eval(ref, 24 * d, dist, 24, *kernel);
            const auto padded = run_eval(ref, 24 * d, dist, 24, *kernel, evaluate_padded);
            if (matched.score != padded.score || matched.cluster_values != padded.cluster_values)
                pass = false;
        }
    }
    const double ms = t.ms();
    report(7, "integer factors reduce to padding, bit-exact", pass && ms < 10000.0, ms);
}

// 9. Frame-averaging a translating gradient: both metrics drop strictly
// with the frame rate across the whole 120 Hz ladder.
void criterion_9() {
    Timer t;
    const auto ref = testutil::gradient_sequence(120);
    const std::vector<std::int64_t> rates = {100, 60, 50, 40, 30, 25, 24, 15};
    std::vector<double> psnr_scores, ssim_scores;
    for (const auto rate : rates) {
        auto source = memory_reader(ref, Rational(120));
        DownsampleReader down(source, derive_pair(120, rate), DownsampleMethod::average);
        std::vector<Frame> frames;
        Frame f;
        while (down.read(f))
            frames.push_back(std::move(f));
        auto psnr = make_psnr_kernel(8, Pooling::frame);
        auto ssim = make_ssim_kernel();
        psnr_scores.push_back(run_eval(ref, 120, frames, rate, *psnr).score);
        ssim_scores.push_back(run_eval(ref, 120, frames, rate, *ssim).score);
    }
    bool pass = true;
    for (std::size_t i = 1; i < rates.size(); ++i)
        pass = pass && psnr_scores[i] < psnr_scores[i - 1] &&
               ssim_scores[i] < ssim_scores[i - 1];
    const double ms = t.ms();
    char detail[96];
    snprintf(detail, sizeof detail, "mPSNR %.2f..%.2f dB, mSSIM %.4f..%.4f",
             psnr_scores.front(), psnr_scores.back(), ssim_scores.front(), ssim_scores.back());
    report(9, "scores drop strictly across the 120 Hz ladder", pass && ms < 30000.0, ms, detail);
}

// 10. Two engineered rate-distortion curves cross exactly once.
void criterion_10() {
    Timer t;
    testutil::TempDir dir;
    std::mt19937 rng(110);
    const auto ref_frames = testutil::random_frames(rng, 4, 16, 16);

    auto write_seq = [&](const std::string& name, const std::vector<Frame>& frames) {
        SequenceInfo info;
        info.width = 16;
        info.height = 16;
        info.bit_depth = 8;
        info.chroma = Chroma::mono;
        info.frame_rate = Rational(30);
        const auto path = dir.file(name);
        auto writer = make_y4m_writer(path, info);
        for (const Frame& f : frames)
            writer->write(f);
        writer->close();
        return path;
    };
    auto noisy = [&](int amplitude) {
        std::vector<Frame> out = ref_frames;
        std::uniform_int_distribution<int> noise(-amplitude, amplitude);
        for (Frame& f : out)
            for (auto& s : f.planes[0])
                s = static_cast<std::uint16_t>(std::clamp(int(s) + noise(rng), 0, 255));
        return out;
    };

    const auto ref = write_seq("ref.y4m", ref_frames);
    const auto steep_lo = write_seq("steep_lo.y4m", noisy(40));  // poor at small size
    const auto steep_hi = write_seq("steep_hi.y4m", noisy(6));   // strong at large size
    const auto flat_lo = write_seq("flat_lo.y4m", noisy(15));
    const auto flat_hi = write_seq("flat_hi.y4m", noisy(15));

    const auto manifest_path = dir.file("cross.manifest");
    std::ofstream(manifest_path)
        << "reference " << ref << "\nmetric psnr\n"
        << "point\ncurve steep\ndecoded " << steep_lo << "\nsize_bits 3000\n"
        << "point\ncurve steep\ndecoded " << steep_hi << "\nsize_bits 9000\n"
        << "point\ncurve flat\ndecoded " << flat_lo << "\nsize_bits 3000\n"
        << "point\ncurve flat\ndecoded " << flat_hi << "\nsize_bits 9000\n";

    const auto table = evaluate_rd_manifest(parse_rd_manifest(manifest_path));
    const auto crossings = find_intersections(table);
    const bool pass = crossings.size() == 1;
    report(10, "engineered rate-distortion curves cross exactly once", pass, t.ms(),
           std::to_string(crossings.size()) + " intersections");
}

// 11. Write-then-read round trips, Y4M and raw, 8 and 10 bit.
void criterion_11() {
    Timer t;
    testutil::TempDir dir;
    std::mt19937 rng(111);
    const Chroma chromas[] = {Chroma::mono, Chroma::c420, Chroma::c422, Chroma::c444};
    bool pass = true;
    for (int trial = 0; trial < 100 && pass; ++trial) {
        const int bit_depth = trial % 2 == 0 ? 8 : 10;
        const Chroma chroma = chromas[trial % 4];
        const bool y4m = trial % 8 < 4;
        const int w = 2 + int(rng() % 12);
        const int h = 2 + int(rng() % 12);
        const int n = 1 + int(rng() % 3);
        const auto frames = testutil::random_frames(rng, std::size_t(n), w, h, bit_depth, chroma);

        SequenceInfo info;
        info.width = w;
        info.height = h;
        info.bit_depth = bit_depth;
        info.chroma = chroma;
        info.frame_rate = Rational(24000, 1001);
        const auto path = dir.file("seq" + std::to_string(trial) + (y4m ? ".y4m" : ".yuv"));
        auto writer = y4m ? make_y4m_writer(path, info) : make_raw_writer(path, info);
        for (const Frame& f : frames)
            writer->write(f);
        writer->close();

        std::unique_ptr<FrameReader> reader;
        if (y4m) {
            reader = open_y4m(path);
        } else {
            RawGeometry geom;
            geom.width = w;
            geom.height = h;
            geom.bit_depth = bit_depth;
            geom.chroma = chroma;
            geom.frame_rate = info.frame_rate;
            reader = open_raw(path, geom);
        }
        if (reader->info().frame_count != n)
            pass = false;
        Frame back;
        for (int i = 0; i < n && pass; ++i) {
            if (!reader->read(back)) {
                pass = false;
                break;
            }
            for (int p = 0; p < back.plane_count(); ++p)
                if (back.planes[p] != frames[std::size_t(i)].planes[p])
                    pass = false;
        }
        if (pass && reader->read(back))
            pass = false;
    }
    const double ms = t.ms();
    report(11, "100 random sequences round-trip bit-exactly", pass && ms < 10000.0, ms);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    const auto trials = criteria_6_and_8();
    criterion_7();
    report(8, "kernel calls equal C*(N_ref+N_down-1) in every trial", trials.work_ok, 0.0,
           "shares criterion 6's instrumented trials");
    criterion_9();
    criterion_10();
    criterion_11();
    if (failures > 0) {
        std::printf("%d criterion(s) FAILED\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
