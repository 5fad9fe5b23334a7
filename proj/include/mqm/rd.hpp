#ifndef MQM_RD_HPP
#define MQM_RD_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mqm/metrics.hpp"
#include "mqm/rational.hpp"
#include "mqm/video_io.hpp"

namespace mqm {

// One evaluated encode: bitstream size against matched metric score.
struct RdPoint {
    std::string curve;       // grouping key, one polyline per curve
    std::string label;       // optional free-form point label
    Rational rate{0, 1};     // downsampled frame rate
    std::int64_t size_bits = 0;
    std::string metric;
    double score = 0.0;
};

struct RdCurve {
    std::string label;
    std::vector<RdPoint> points;  // sorted by size_bits, strictly increasing
};

struct RdTable {
    std::vector<RdCurve> curves;
};

// Where two curves cross on the (size, score) plane, with the bracketing
// point sizes of both segments involved.
struct RdIntersection {
    std::string curve_a;
    std::string curve_b;
    double size_bits = 0.0;
    double score = 0.0;
    std::int64_t a_size_lo = 0, a_size_hi = 0;
    std::int64_t b_size_lo = 0, b_size_hi = 0;
};

struct RdManifestPoint {
    std::string curve;
    std::string label;
    std::string reference;
    std::string decoded;
    std::string bitstream;            // size taken from the file when set
    std::optional<std::int64_t> size_bits;  // explicit override
    std::string metric = "psnr";
    Pooling pooling = Pooling::frame;
    std::string external_cmd;
    double cap_db = 100.0;
    std::optional<RawGeometry> geometry;      // for headerless inputs
    std::optional<Rational> reference_rate;   // raw reference rate
    std::optional<Rational> decoded_rate;     // raw decoded rate
    int line = 0;  // manifest line of the `point` keyword, for error context
};

struct RdManifest {
    std::vector<RdManifestPoint> points;
};

// Line-oriented manifest: `key value` pairs, `#` comments, one `point` line
// per entry, keys before the first `point` set defaults. See README for the
// full key list and an example.
RdManifest parse_rd_manifest(const std::string& path);

// Evaluates every manifest point (up to `jobs` in parallel) and assembles
// curves sorted by size. Throws FormatError with point context on failure.
RdTable evaluate_rd_manifest(const RdManifest& manifest, int jobs = 1);

// CSV with header label,rate_hz,file_size_bits,metric,score (RFC 4180).
void write_rd_csv(const RdTable& table, std::ostream& out);
RdTable read_rd_csv(std::istream& in);

std::vector<RdIntersection> find_intersections(const RdTable& table);

// Minimal line plot: axes, one polyline per curve, legend.
void write_rd_svg(const RdTable& table, std::ostream& out);

}  // namespace mqm

#endif
