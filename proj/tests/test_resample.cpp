#include <doctest.h>

#include <numeric>

#include "mqm/errors.hpp"
#include "mqm/resample.hpp"
#include "support.hpp"

using mqm::Chroma;
using mqm::DownsampleMethod;
using mqm::DownsampleReader;
using mqm::Frame;
using mqm::Rational;

namespace {

std::vector<Frame> collect(DownsampleReader& reader) {
    std::vector<Frame> out;
    Frame f;
    while (reader.read(f))
        out.push_back(f);
    return out;
}

std::vector<Frame> run(std::vector<Frame> input, std::int64_t f_ref, std::int64_t f_down,
                       DownsampleMethod method, bool* truncated = nullptr) {
    auto source = mqm::memory_reader(std::move(input), Rational(f_ref));
    DownsampleReader down(source, mqm::derive_pair(f_ref, f_down), method);
    auto frames = collect(down);
    if (truncated)
        *truncated = down.truncated();
    return frames;
}

}  // namespace

TEST_CASE("averaging weights for the 3/2 cluster") {
    const auto w = mqm::averaging_weights(mqm::derive_pair(3, 2));
    REQUIRE(w.size() == 2);
    CHECK(w[0] == std::vector<std::int64_t>{2, 1, 0});
    CHECK(w[1] == std::vector<std::int64_t>{0, 1, 2});
}

TEST_CASE("averaging weights are the schedule's co-occurrence counts") {
    for (const auto& [a, b] : std::vector<std::pair<std::int64_t, std::int64_t>>{
             {3, 2}, {6, 5}, {24, 5}, {7, 1}, {1, 1}, {12, 7}}) {
        const auto pair = mqm::derive_pair(a * 10, b * 10);
        const auto weights = mqm::averaging_weights(pair);

        // Rebuild the matrix from the schedule's (weight, ref, down) triples.
        const auto s = mqm::generate_schedule(pair);
        std::vector<std::vector<std::int64_t>> expected(
            size_t(pair.down_per_cluster),
            std::vector<std::int64_t>(size_t(pair.ref_per_cluster), 0));
        for (std::size_t i = 0; i < s.size(); ++i)
            expected[size_t(s.down_index[i] - 1)][size_t(s.ref_index[i] - 1)] = s.weight[i];
        CHECK(weights == expected);

        for (const auto& row : weights)
            CHECK(std::accumulate(row.begin(), row.end(), std::int64_t{0}) ==
                  pair.ref_per_cluster);
    }
}

TEST_CASE("averaging a constant cluster returns the constant") {
    const auto out = run({testutil::constant_frame(8, 8, 77), testutil::constant_frame(8, 8, 77),
                          testutil::constant_frame(8, 8, 77), testutil::constant_frame(8, 8, 77)},
                         4, 1, DownsampleMethod::average);
    REQUIRE(out.size() == 1);
    CHECK(out[0].planes[0][0] == 77);
}

TEST_CASE("halving averages adjacent frames") {
    const auto out = run({testutil::constant_frame(8, 8, 10), testutil::constant_frame(8, 8, 20)},
                         2, 1, DownsampleMethod::average);
    REQUIRE(out.size() == 1);
    CHECK(out[0].planes[0][0] == 15);
}

TEST_CASE("3-to-2 averaging uses the overlap weights and rounds once") {
    const auto out = run({testutil::constant_frame(8, 8, 10), testutil::constant_frame(8, 8, 20),
                          testutil::constant_frame(8, 8, 30)},
                         3, 2, DownsampleMethod::average);
    REQUIRE(out.size() == 2);
    // (2*10 + 1*20)/3 = 40/3 -> 13, (1*20 + 2*30)/3 = 80/3 -> 27
    CHECK(out[0].planes[0][0] == 13);
    CHECK(out[1].planes[0][0] == 27);
    CHECK(out[0].index == 0);
    CHECK(out[1].index == 1);
}

TEST_CASE("3-to-2 averaging equals the slot-expansion oracle samplewise") {
    std::mt19937 rng(21);
    auto input = testutil::random_frames(rng, 3, 8, 8);
    const auto out = run(input, 3, 2, DownsampleMethod::average);
    REQUIRE(out.size() == 2);
    // Expand to the 6-slot grid: slot t shows input frame t/2; output frame j
    // covers slots [3j, 3j+3). Average those three slots per sample.
    for (int j = 0; j < 2; ++j) {
        for (std::size_t i = 0; i < out[0].planes[0].size(); ++i) {
            std::int64_t acc = 0;
            for (int t = 3 * j; t < 3 * (j + 1); ++t)
                acc += input[size_t(t / 2)].planes[0][i];
            const auto want = static_cast<std::uint16_t>((2 * acc + 3) / 6);
            CHECK(out[size_t(j)].planes[0][i] == want);
        }
    }
}

TEST_CASE("drop keeps the frame on display at the output start stamp") {
    const auto out = run({testutil::constant_frame(8, 8, 1), testutil::constant_frame(8, 8, 2),
                          testutil::constant_frame(8, 8, 3)},
                         3, 2, DownsampleMethod::drop);
    REQUIRE(out.size() == 2);
    CHECK(out[0].planes[0][0] == 1);
    CHECK(out[1].planes[0][0] == 2);
}

TEST_CASE("drop at integer factors keeps every d-th frame") {
    std::vector<Frame> input;
    for (int i = 0; i < 8; ++i)
        input.push_back(testutil::constant_frame(8, 8, std::uint16_t(i)));
    const auto out = run(std::move(input), 120, 30, DownsampleMethod::drop);
    REQUIRE(out.size() == 2);
    CHECK(out[0].planes[0][0] == 0);
    CHECK(out[1].planes[0][0] == 4);
}

TEST_CASE("constant sequences are fixed points of both methods") {
    std::mt19937 rng(22);
    for (const auto& [a, b] : std::vector<std::pair<std::int64_t, std::int64_t>>{
             {5, 2}, {6, 5}, {4, 4}, {8, 1}}) {
        for (const auto method : {DownsampleMethod::drop, DownsampleMethod::average}) {
            const auto value = static_cast<std::uint16_t>(rng() % 256);
            std::vector<Frame> input(size_t(2 * a),
                                     testutil::constant_frame(8, 8, value, 8, Chroma::c420, 99));
            const auto out = run(std::move(input), a, b, method);
            REQUIRE(out.size() == std::size_t(2 * b));
            for (const Frame& f : out) {
                for (const auto s : f.planes[0])
                    CHECK(s == value);
                for (const auto s : f.planes[1])
                    CHECK(s == 99);
            }
        }
    }
}

TEST_CASE("integer-factor averaging equals the plain mean of d consecutive frames") {
    std::mt19937 rng(23);
    for (const int d : {2, 3, 4, 8}) {
        auto input = testutil::random_frames(rng, std::size_t(2 * d), 8, 8);
        const auto out = run(input, 120, 120 / d, DownsampleMethod::average);
        REQUIRE(out.size() == 2);
        for (int j = 0; j < 2; ++j) {
            for (std::size_t i = 0; i < out[0].planes[0].size(); ++i) {
                std::int64_t acc = 0;
                for (int k = 0; k < d; ++k)
                    acc += input[size_t(j * d + k)].planes[0][i];
                const auto want = static_cast<std::uint16_t>((2 * acc + d) / (2 * d));
                CHECK(out[size_t(j)].planes[0][i] == want);
            }
        }
    }
}

TEST_CASE("output length is whole clusters, trailing frames flagged") {
    std::mt19937 rng(24);
    bool truncated = false;
    const auto exact = run(testutil::random_frames(rng, 6, 8, 8), 3, 2,
                           DownsampleMethod::average, &truncated);
    CHECK(exact.size() == 4);
    CHECK_FALSE(truncated);

    const auto trailing = run(testutil::random_frames(rng, 8, 8, 8), 3, 2,
                              DownsampleMethod::average, &truncated);
    CHECK(trailing.size() == 4);
    CHECK(truncated);
}

TEST_CASE("known-length info is scaled to the output rate") {
    std::mt19937 rng(25);
    auto source = mqm::memory_reader(testutil::random_frames(rng, 12, 8, 8), Rational(120));
    DownsampleReader down(source, mqm::derive_pair(120, 40), DownsampleMethod::average);
    CHECK(down.info().frame_rate == Rational(40));
    CHECK(down.info().frame_count == 4);
}

TEST_CASE("downsampler rejects bad inputs") {
    std::mt19937 rng(26);
    auto source = mqm::memory_reader(testutil::random_frames(rng, 4, 8, 8), Rational(30));
    CHECK_THROWS_AS(DownsampleReader(source, mqm::derive_pair(120, 40), DownsampleMethod::drop),
                    std::invalid_argument);

    auto short_source = mqm::memory_reader(testutil::random_frames(rng, 2, 8, 8), Rational(120));
    CHECK_THROWS_AS(DownsampleReader(short_source, mqm::derive_pair(120, 40),
                                     DownsampleMethod::drop),
                    std::invalid_argument);

    // Unknown-length source shorter than one cluster fails at read time.
    class Unsized : public mqm::FrameReader {
    public:
        explicit Unsized(mqm::MemoryReader inner) : inner_(std::move(inner)) {
            info_ = inner_.info();
            info_.frame_count = -1;
        }
        const mqm::SequenceInfo& info() const override { return info_; }
        bool read(Frame& out) override { return inner_.read(out); }

    private:
        mqm::MemoryReader inner_;
        mqm::SequenceInfo info_;
    };
    Unsized unsized(mqm::memory_reader(testutil::random_frames(rng, 2, 8, 8), Rational(120)));
    DownsampleReader down(unsized, mqm::derive_pair(120, 40), DownsampleMethod::drop);
    Frame f;
    CHECK_THROWS_AS(down.read(f), mqm::FormatError);
}
