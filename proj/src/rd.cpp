#include "mqm/rd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <sstream>

#include "mqm/errors.hpp"
#include "mqm/matched_eval.hpp"

namespace mqm {

namespace {

std::string strf(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

RawGeometry& geometry_of(RdManifestPoint& p) {
    if (!p.geometry)
        p.geometry = RawGeometry{};
    return *p.geometry;
}

void apply_key(RdManifestPoint& p, const std::string& key, const std::string& value,
               const std::string& where) {
    try {
        if (key == "curve") p.curve = value;
        else if (key == "label") p.label = value;
        else if (key == "reference") p.reference = value;
        else if (key == "decoded") p.decoded = value;
        else if (key == "bitstream") p.bitstream = value;
        else if (key == "size_bits") p.size_bits = std::stoll(value);
        else if (key == "metric") p.metric = value;
        else if (key == "pooling") {
            if (value == "frame") p.pooling = Pooling::frame;
            else if (value == "mse") p.pooling = Pooling::mse;
            else throw std::invalid_argument("pooling must be frame or mse");
        }
        else if (key == "external_cmd") p.external_cmd = value;
        else if (key == "cap_db") p.cap_db = std::stod(value);
        else if (key == "width") geometry_of(p).width = std::stoi(value);
        else if (key == "height") geometry_of(p).height = std::stoi(value);
        else if (key == "bitdepth") geometry_of(p).bit_depth = std::stoi(value);
        else if (key == "chroma") geometry_of(p).chroma = parse_chroma(value);
        else if (key == "ref_fps") p.reference_rate = parse_rational(value);
        else if (key == "decoded_fps") p.decoded_rate = parse_rational(value);
        else throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::exception& e) {
        throw FormatError(where + ": " + e.what());
    }
}

std::int64_t point_size_bits(const RdManifestPoint& p, const std::string& where) {
    if (p.size_bits)
        return *p.size_bits;
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(p.bitstream, ec);
    if (ec)
        throw FormatError(where + ": cannot stat bitstream '" + p.bitstream + "'");
    return static_cast<std::int64_t>(bytes) * 8;
}

RdPoint evaluate_point(const RdManifestPoint& p, int inner_jobs) {
    const std::string where = "manifest point at line " + std::to_string(p.line) +
                              (p.curve.empty() ? "" : " (curve '" + p.curve + "')");
    std::optional<RawGeometry> ref_geom = p.geometry;
    if (ref_geom && p.reference_rate)
        ref_geom->frame_rate = *p.reference_rate;
    std::optional<RawGeometry> dec_geom = p.geometry;
    if (dec_geom && p.decoded_rate)
        dec_geom->frame_rate = *p.decoded_rate;

    auto reference = open_sequence(p.reference, ref_geom, p.reference_rate);
    auto decoded = open_sequence(p.decoded, dec_geom, p.decoded_rate);

    std::unique_ptr<MetricKernel> kernel;
    if (p.metric == "psnr")
        kernel = make_psnr_kernel(reference->info().bit_depth, p.pooling);
    else if (p.metric == "ssim")
        kernel = make_ssim_kernel();
    else if (p.metric == "external") {
        if (p.external_cmd.empty())
            throw FormatError(where + ": metric external requires external_cmd");
        kernel = make_external_kernel(p.external_cmd);
    } else {
        throw FormatError(where + ": unknown metric '" + p.metric + "'");
    }

    EvalOptions options;
    options.cap_db = p.cap_db;
    options.jobs = inner_jobs;
    const MatchedResult result = evaluate_matched(*reference, *decoded, *kernel, options);

    RdPoint out;
    out.curve = p.curve;
    out.label = p.label;
    out.rate = result.pair.down_rate;
    out.size_bits = point_size_bits(p, where);
    out.metric = p.metric;
    out.score = result.score;
    return out;
}

RdTable assemble_curves(std::vector<RdPoint> points) {
    RdTable table;
    std::map<std::string, std::size_t> index;
    for (RdPoint& p : points) {
        const auto [it, fresh] = index.emplace(p.curve, table.curves.size());
        if (fresh)
            table.curves.push_back(RdCurve{p.curve, {}});
        table.curves[it->second].points.push_back(std::move(p));
    }
    for (RdCurve& curve : table.curves) {
        std::sort(curve.points.begin(), curve.points.end(),
                  [](const RdPoint& a, const RdPoint& b) { return a.size_bits < b.size_bits; });
        for (std::size_t i = 1; i < curve.points.size(); ++i)
            if (curve.points[i].size_bits == curve.points[i - 1].size_bits)
                throw FormatError("curve '" + curve.label + "' has two points of equal size " +
                                  std::to_string(curve.points[i].size_bits) + " bits");
    }
    return table;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos)
        return value;
    std::string quoted = "\"";
    for (const char c : value) {
        if (c == '"')
            quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string format_score(double score) {
    if (std::isinf(score))
        return score > 0 ? "inf" : "-inf";
    return strf("%.17g", score);
}

double parse_score(const std::string& text) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(text);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

}  // namespace

RdManifest parse_rd_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open manifest '" + path + "'");

    RdManifest manifest;
    RdManifestPoint defaults;
    bool in_point = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#')
            continue;
        const auto space = text.find_first_of(" \t");
        const std::string key = text.substr(0, space);
        const std::string value = space == std::string::npos ? "" : trim(text.substr(space));
        const std::string where = path + ":" + std::to_string(line_no);

        if (key == "point") {
            manifest.points.push_back(defaults);
            manifest.points.back().line = line_no;
            in_point = true;
            continue;
        }
        if (value.empty())
            throw FormatError(where + ": key '" + key + "' has no value");
        apply_key(in_point ? manifest.points.back() : defaults, key, value, where);
    }

    if (manifest.points.empty())
        throw FormatError(path + ": no points");
    for (const RdManifestPoint& p : manifest.points) {
        const std::string where = path + ":" + std::to_string(p.line);
        if (p.curve.empty())
            throw FormatError(where + ": point has no curve label");
        if (p.reference.empty() || p.decoded.empty())
            throw FormatError(where + ": point needs reference and decoded paths");
        if (p.bitstream.empty() && !p.size_bits)
            throw FormatError(where + ": point needs a bitstream path or size_bits");
    }
    return manifest;
}

RdTable evaluate_rd_manifest(const RdManifest& manifest, int jobs) {
    const std::size_t n = manifest.points.size();
    std::vector<RdPoint> points(n);
    std::vector<std::exception_ptr> errors(n);

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    // Spare jobs go to in-point cluster parallelism once points < jobs.
    const int inner_jobs = std::max(1, workers / static_cast<int>(n));
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        std::size_t i;
        while ((i = next.fetch_add(1)) < n) {
            try {
                points[i] = evaluate_point(manifest.points[i], inner_jobs);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        drain();
    } else {
        std::vector<std::future<void>> pool;
        for (int w = 0; w < workers; ++w)
            pool.push_back(std::async(std::launch::async, drain));
        for (auto& f : pool)
            f.get();
    }
    for (const auto& err : errors)
        if (err)
            std::rethrow_exception(err);

    return assemble_curves(std::move(points));
}

void write_rd_csv(const RdTable& table, std::ostream& out) {
    out << "label,rate_hz,file_size_bits,metric,score\r\n";
    for (const RdCurve& curve : table.curves)
        for (const RdPoint& p : curve.points)
            out << csv_field(p.curve) << ',' << csv_field(p.rate.str()) << ',' << p.size_bits
                << ',' << csv_field(p.metric) << ',' << format_score(p.score) << "\r\n";
}

RdTable read_rd_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("empty CSV");
    if (split_csv_line(line) !=
        std::vector<std::string>{"label", "rate_hz", "file_size_bits", "metric", "score"})
        throw FormatError("unexpected CSV header: " + line);

    std::vector<RdPoint> points;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw FormatError("CSV row with " + std::to_string(fields.size()) + " fields: " + line);
        RdPoint p;
        p.curve = fields[0];
        p.rate = parse_rational(fields[1]);
        p.size_bits = std::stoll(fields[2]);
        p.metric = fields[3];
        p.score = parse_score(fields[4]);
        points.push_back(std::move(p));
    }
    return assemble_curves(std::move(points));
}

std::vector<RdIntersection> find_intersections(const RdTable& table) {
    std::vector<RdIntersection> found;
    for (std::size_t a = 0; a < table.curves.size(); ++a) {
        for (std::size_t b = a + 1; b < table.curves.size(); ++b) {
            const auto& pa = table.curves[a].points;
            const auto& pb = table.curves[b].points;
            for (std::size_t i = 0; i + 1 < pa.size(); ++i) {
                for (std::size_t j = 0; j + 1 < pb.size(); ++j) {
                    if (!std::isfinite(pa[i].score) || !std::isfinite(pa[i + 1].score) ||
                        !std::isfinite(pb[j].score) || !std::isfinite(pb[j + 1].score))
                        continue;
                    const double rx = double(pa[i + 1].size_bits - pa[i].size_bits);
                    const double ry = pa[i + 1].score - pa[i].score;
                    const double sx = double(pb[j + 1].size_bits - pb[j].size_bits);
                    const double sy = pb[j + 1].score - pb[j].score;
                    const double qpx = double(pb[j].size_bits - pa[i].size_bits);
                    const double qpy = pb[j].score - pa[i].score;
                    const double denom = rx * sy - ry * sx;
                    if (denom == 0.0)
                        continue;  // parallel or collinear
                    const double t = (qpx * sy - qpy * sx) / denom;
                    const double u = (qpx * ry - qpy * rx) / denom;
                    if (t <= 0.0 || t >= 1.0 || u <= 0.0 || u >= 1.0)
                        continue;
                    RdIntersection x;
                    x.curve_a = table.curves[a].label;
                    x.curve_b = table.curves[b].label;
                    x.size_bits = double(pa[i].size_bits) + t * rx;
                    x.score = pa[i].score + t * ry;
                    x.a_size_lo = pa[i].size_bits;
                    x.a_size_hi = pa[i + 1].size_bits;
                    x.b_size_lo = pb[j].size_bits;
                    x.b_size_hi = pb[j + 1].size_bits;
                    found.push_back(std::move(x));
                }
            }
        }
    }
    return found;
}

void write_rd_svg(const RdTable& table, std::ostream& out) {
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    const double width = 800, height = 520;
    const double ml = 80, mr = 170, mt = 24, mb = 56;

    double min_x = std::numeric_limits<double>::max(), max_x = std::numeric_limits<double>::lowest();
    double min_y = min_x, max_y = max_x;
    std::string metric = "score";
    for (const RdCurve& curve : table.curves) {
        for (const RdPoint& p : curve.points) {
            if (!std::isfinite(p.score))
                continue;
            min_x = std::min(min_x, double(p.size_bits));
            max_x = std::max(max_x, double(p.size_bits));
            min_y = std::min(min_y, p.score);
            max_y = std::max(max_y, p.score);
            metric = p.metric;
        }
    }
    if (min_x > max_x) {  // nothing plottable
        min_x = 0; max_x = 1; min_y = 0; max_y = 1;
    }
    if (min_x == max_x) { min_x -= 1; max_x += 1; }
    if (min_y == max_y) { min_y -= 1; max_y += 1; }
    const double pad_x = (max_x - min_x) * 0.05, pad_y = (max_y - min_y) * 0.05;
    min_x -= pad_x; max_x += pad_x; min_y -= pad_y; max_y += pad_y;

    const double plot_w = width - ml - mr, plot_h = height - mt - mb;
    auto sx = [&](double v) { return ml + (v - min_x) / (max_x - min_x) * plot_w; };
    auto sy = [&](double v) { return mt + plot_h - (v - min_y) / (max_y - min_y) * plot_h; };
    auto fmt_bits = [](double bits) {
        if (bits >= 1e9) return strf("%.4g G", bits / 1e9);
        if (bits >= 1e6) return strf("%.4g M", bits / 1e6);
        if (bits >= 1e3) return strf("%.4g k", bits / 1e3);
        return strf("%.4g ", bits);
    };

    out << strf("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "viewBox=\"0 0 %g %g\">\n", width, height, width, height);
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << strf("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
                "stroke=\"black\"/>\n", ml, mt, plot_w, plot_h);

    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double vx = min_x + (max_x - min_x) * i / ticks;
        const double vy = min_y + (max_y - min_y) * i / ticks;
        out << strf("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                    sx(vx), mt + plot_h, sx(vx), mt + plot_h + 5);
        out << strf("<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">%sb</text>\n",
                    sx(vx), mt + plot_h + 20, fmt_bits(vx).c_str());
        out << strf("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                    ml - 5, sy(vy), ml, sy(vy));
        out << strf("<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"end\">%.4g</text>\n",
                    ml - 9, sy(vy) + 4, vy);
    }
    out << strf("<text x=\"%g\" y=\"%g\" font-size=\"13\" text-anchor=\"middle\">File size "
                "[bits]</text>\n", ml + plot_w / 2, height - 12);
    out << strf("<text x=\"18\" y=\"%g\" font-size=\"13\" text-anchor=\"middle\" "
                "transform=\"rotate(-90 18 %g)\">%s</text>\n",
                mt + plot_h / 2, mt + plot_h / 2, xml_escape(metric).c_str());

    for (std::size_t c = 0; c < table.curves.size(); ++c) {
        const char* color = kColors[c % (sizeof kColors / sizeof *kColors)];
        std::string pts;
        for (const RdPoint& p : table.curves[c].points) {
            if (!std::isfinite(p.score))
                continue;
            pts += strf("%g,%g ", sx(double(p.size_bits)), sy(p.score));
        }
        out << strf("<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                    pts.c_str(), color);
        for (const RdPoint& p : table.curves[c].points) {
            if (!std::isfinite(p.score))
                continue;
            out << strf("<circle cx=\"%g\" cy=\"%g\" r=\"3\" fill=\"%s\"/>\n",
                        sx(double(p.size_bits)), sy(p.score), color);
        }
        const double ly = mt + 16 + 18 * double(c);
        out << strf("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" "
                    "stroke-width=\"2\"/>\n", width - mr + 10, ly - 4, width - mr + 34, ly - 4,
                    color);
        out << strf("<text x=\"%g\" y=\"%g\" font-size=\"12\">%s</text>\n", width - mr + 40, ly,
                    xml_escape(table.curves[c].label).c_str());
    }
    out << "</svg>\n";
}

}  // namespace mqm
