#ifndef MQM_FRAME_HPP
#define MQM_FRAME_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mqm/rational.hpp"

namespace mqm {

enum class Chroma { mono, c420, c422, c444 };

const char* chroma_name(Chroma c);
Chroma parse_chroma(const std::string& name);  // "mono", "420", "422", "444"
int plane_count(Chroma c);

struct PlaneDims {
    int width = 0;
    int height = 0;
    std::size_t samples() const { return std::size_t(width) * std::size_t(height); }
};

// Dimensions of plane 0 (luma) or 1/2 (chroma) given the frame geometry.
// Chroma planes of odd-sized frames round up.
PlaneDims plane_dims(int width, int height, Chroma chroma, int plane);

// One decoded picture. Samples are stored as uint16_t regardless of bit
// depth; values are always < 2^bit_depth. Planes are contiguous row-major.
struct Frame {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    Chroma chroma = Chroma::c420;
    std::int64_t index = 0;  // 0-based position in the source sequence
    std::array<std::vector<std::uint16_t>, 3> planes;

    int plane_count() const { return mqm::plane_count(chroma); }
    PlaneDims dims(int plane) const { return plane_dims(width, height, chroma, plane); }
    std::uint16_t max_value() const { return static_cast<std::uint16_t>((1u << bit_depth) - 1); }

    bool same_geometry(const Frame& other) const {
        return width == other.width && height == other.height &&
               bit_depth == other.bit_depth && chroma == other.chroma;
    }
};

Frame make_frame(int width, int height, int bit_depth, Chroma chroma);

struct SequenceInfo {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    Chroma chroma = Chroma::c420;
    Rational frame_rate{0, 1};
    std::int64_t frame_count = -1;  // -1 when unknown (pipe input)
    std::string source;
    std::string warning;  // nonfatal open-time note, empty if none

    std::int64_t frame_bytes() const;  // on-disk bytes of one raw frame
};

}  // namespace mqm

#endif
