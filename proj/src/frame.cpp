#include "mqm/frame.hpp"

#include <stdexcept>

namespace mqm {

const char* chroma_name(Chroma c) {
    switch (c) {
        case Chroma::mono: return "mono";
        case Chroma::c420: return "420";
        case Chroma::c422: return "422";
        case Chroma::c444: return "444";
    }
    return "?";
}

Chroma parse_chroma(const std::string& name) {
    if (name == "mono" || name == "400") return Chroma::mono;
    if (name == "420") return Chroma::c420;
    if (name == "422") return Chroma::c422;
    if (name == "444") return Chroma::c444;
    throw std::invalid_argument("unknown chroma '" + name + "' (expected mono, 420, 422 or 444)");
}

int plane_count(Chroma c) {
    return c == Chroma::mono ? 1 : 3;
}

PlaneDims plane_dims(int width, int height, Chroma chroma, int plane) {
    if (plane == 0)
        return {width, height};
    switch (chroma) {
        case Chroma::c420: return {(width + 1) / 2, (height + 1) / 2};
        case Chroma::c422: return {(width + 1) / 2, height};
        case Chroma::c444: return {width, height};
        case Chroma::mono: break;
    }
    throw std::invalid_argument("no chroma planes in a mono frame");
}

Frame make_frame(int width, int height, int bit_depth, Chroma chroma) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("frame dimensions must be positive");
    if (bit_depth != 8 && bit_depth != 10)
        throw std::invalid_argument("bit depth must be 8 or 10");
    Frame f;
    f.width = width;
    f.height = height;
    f.bit_depth = bit_depth;
    f.chroma = chroma;
    for (int p = 0; p < f.plane_count(); ++p)
        f.planes[p].assign(f.dims(p).samples(), 0);
    return f;
}

std::int64_t SequenceInfo::frame_bytes() const {
    const int bytes_per_sample = bit_depth > 8 ? 2 : 1;
    std::int64_t total = 0;
    for (int p = 0; p < mqm::plane_count(chroma); ++p)
        total += static_cast<std::int64_t>(plane_dims(width, height, chroma, p).samples());
    return total * bytes_per_sample;
}

}  // namespace mqm
