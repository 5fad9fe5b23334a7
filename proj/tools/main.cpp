// mqm: quality evaluation between sequences whose frame-rate ratio is any
// positive rational, plus the temporal downsampler and rate-distortion batch
// harness around it.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mqm/errors.hpp"
#include "mqm/matched_eval.hpp"
#include "mqm/metrics.hpp"
#include "mqm/rd.hpp"
#include "mqm/resample.hpp"
#include "mqm/schedule.hpp"
#include "mqm/video_io.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitTool = 4;

struct GeometryFlags {
    int width = 0;
    int height = 0;
    int bitdepth = 8;
    std::string chroma = "420";
    std::string fps;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--width", width, "Width of headerless YUV input");
        cmd.add_option("--height", height, "Height of headerless YUV input");
        cmd.add_option("--bitdepth", bitdepth, "Bit depth of headerless YUV input (8 or 10)")
            ->check(CLI::IsMember({8, 10}));
        cmd.add_option("--chroma", chroma, "Chroma of headerless YUV input")
            ->check(CLI::IsMember({"mono", "420", "422", "444"}));
        cmd.add_option("--fps", fps, "Frame rate of headerless YUV input, e.g. 30 or 30000/1001");
    }

    std::optional<mqm::RawGeometry> geometry() const {
        if (width == 0 && height == 0 && fps.empty())
            return std::nullopt;
        mqm::RawGeometry g;
        g.width = width;
        g.height = height;
        g.bit_depth = bitdepth;
        g.chroma = mqm::parse_chroma(chroma);
        if (!fps.empty())
            g.frame_rate = mqm::parse_rational(fps);
        return g;
    }

    std::optional<mqm::Rational> rate() const {
        if (fps.empty())
            return std::nullopt;
        return mqm::parse_rational(fps);
    }
};

void print_warning(const mqm::SequenceInfo& info) {
    if (!info.warning.empty())
        std::cerr << "warning: " << info.source << ": " << info.warning << "\n";
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t hash = 1469598103934665603ull;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::string iso_now() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string fmt_score(double score, int digits = 4) {
    if (std::isinf(score))
        return score > 0 ? "inf" : "-inf";
    char buf[40];
    snprintf(buf, sizeof buf, "%.*f", digits, score);
    return buf;
}

void write_out(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw mqm::FormatError("cannot create '" + path + "'");
    out << content;
}

json score_json(double score) {
    // JSON numbers cannot hold infinities; the infinite flag next to the
    // score is authoritative, the string keeps the value greppable.
    if (std::isinf(score))
        return score > 0 ? "inf" : "-inf";
    return score;
}

// ---------------------------------------------------------------- schedule

int cmd_schedule(const std::string& ref_text, const std::string& down_text, bool as_json) {
    const auto pair = mqm::derive_pair(mqm::parse_rational(ref_text),
                                       mqm::parse_rational(down_text));
    const auto schedule = mqm::generate_schedule(pair);

    if (as_json) {
        json out;
        out["w"] = schedule.weight;
        out["h"] = schedule.ref_index;
        out["l"] = schedule.down_index;
        out["n_ref"] = pair.ref_per_cluster;
        out["n_down"] = pair.down_per_cluster;
        out["n_virtual"] = pair.virtual_per_cluster;
        out["lcm_hz"] = pair.rate_lcm.str();
        out["gcd_hz"] = pair.rate_gcd.str();
        out["factor"] = pair.factor.str();
        std::cout << out.dump() << "\n";
        return 0;
    }

    std::printf("rates         %s -> %s Hz (factor %s)\n", pair.ref_rate.str().c_str(),
                pair.down_rate.str().c_str(), pair.factor.str().c_str());
    std::printf("cluster       %" PRId64 " reference / %" PRId64 " downsampled frames\n",
                pair.ref_per_cluster, pair.down_per_cluster);
    std::printf("common rate   %s Hz, %" PRId64 " slots per cluster\n",
                pair.rate_lcm.str().c_str(), pair.virtual_per_cluster);
    std::printf("%6s %8s %6s %6s\n", "i", "w", "h", "l");
    for (std::size_t i = 0; i < schedule.size(); ++i)
        std::printf("%6zu %8" PRId64 " %6d %6d\n", i + 1, schedule.weight[i],
                    schedule.ref_index[i], schedule.down_index[i]);
    return 0;
}

// -------------------------------------------------------------- downsample

int cmd_downsample(const std::string& input, const std::string& output,
                   const std::string& to_text, const std::string& method_name,
                   const GeometryFlags& flags, std::int64_t max_frames) {
    std::unique_ptr<mqm::FrameReader> source =
        mqm::open_sequence(input, flags.geometry(), flags.rate());
    print_warning(source->info());
    if (max_frames > 0)
        source = std::make_unique<mqm::LimitReader>(std::move(source), max_frames);

    const auto pair = mqm::derive_pair(source->info().frame_rate, mqm::parse_rational(to_text));
    mqm::DownsampleReader down(*source, pair, mqm::parse_method(method_name));

    mqm::SequenceInfo out_info = down.info();
    const bool y4m = output.size() >= 4 && output.substr(output.size() - 4) == ".y4m";
    auto writer = y4m ? mqm::make_y4m_writer(output, out_info)
                      : mqm::make_raw_writer(output, out_info);
    mqm::Frame frame;
    std::int64_t frames = 0;
    while (down.read(frame)) {
        writer->write(frame);
        ++frames;
    }
    writer->close();
    if (down.truncated())
        std::cerr << "warning: input not a whole number of clusters, trailing frames dropped\n";

    std::printf("%s: %" PRId64 " frames at %s Hz (%" PRId64 " clusters, %" PRId64 " bytes)\n",
                output.c_str(), frames, pair.down_rate.str().c_str(),
                frames / pair.down_per_cluster, writer->bytes_written());
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string ref;
    std::string dist;
    std::string metric = "psnr";
    std::string pooling = "frame";
    std::string external_cmd;
    bool planes = false;
    double cap_db = 100.0;
    int jobs = 1;
    std::string json_path;
    std::string csv_path;
    bool deterministic = false;
    GeometryFlags geometry;
    std::string dist_fps;
    std::int64_t max_frames = 0;
};

std::unique_ptr<mqm::MetricKernel> make_kernel(const EvaluateArgs& args, int bit_depth,
                                               int plane) {
    if (args.metric == "psnr")
        return mqm::make_psnr_kernel(
            bit_depth, args.pooling == "mse" ? mqm::Pooling::mse : mqm::Pooling::frame, plane);
    if (args.metric == "ssim")
        return mqm::make_ssim_kernel(plane);
    if (args.metric == "external") {
        if (args.external_cmd.empty())
            throw std::invalid_argument("--metric external requires --external-cmd");
        if (plane != 0)
            throw std::invalid_argument("--planes is not available for external metrics");
        return mqm::make_external_kernel(args.external_cmd);
    }
    throw std::invalid_argument("unknown metric '" + args.metric + "'");
}

mqm::MatchedResult evaluate_plane(const EvaluateArgs& args, int plane) {
    std::unique_ptr<mqm::FrameReader> reference =
        mqm::open_sequence(args.ref, args.geometry.geometry(), args.geometry.rate());
    std::optional<mqm::RawGeometry> dist_geom = args.geometry.geometry();
    std::optional<mqm::Rational> dist_rate;
    if (!args.dist_fps.empty())
        dist_rate = mqm::parse_rational(args.dist_fps);
    if (dist_geom && dist_rate)
        dist_geom->frame_rate = *dist_rate;
    std::unique_ptr<mqm::FrameReader> dist_reader =
        mqm::open_sequence(args.dist, dist_geom, dist_rate);
    if (args.max_frames > 0) {
        reference = std::make_unique<mqm::LimitReader>(std::move(reference), args.max_frames);
        dist_reader = std::make_unique<mqm::LimitReader>(std::move(dist_reader), args.max_frames);
    }
    auto& distorted = dist_reader;
    if (plane == 0) {
        print_warning(reference->info());
        print_warning(distorted->info());
    }

    auto kernel = make_kernel(args, reference->info().bit_depth, plane);
    mqm::EvalOptions options;
    options.cap_db = args.cap_db;
    options.jobs = args.jobs;
    return mqm::evaluate_matched(*reference, *distorted, *kernel, options);
}

int cmd_evaluate(const EvaluateArgs& args) {
    const mqm::MatchedResult luma = evaluate_plane(args, 0);

    // Optional chroma passes; PSNR additionally gets the common 6/1/1 blend.
    std::optional<mqm::MatchedResult> u_plane, v_plane;
    std::optional<double> combined;
    if (args.planes) {
        u_plane = evaluate_plane(args, 1);
        v_plane = evaluate_plane(args, 2);
        if (args.metric == "psnr" && std::isfinite(luma.score) &&
            std::isfinite(u_plane->score) && std::isfinite(v_plane->score))
            combined = (6.0 * luma.score + u_plane->score + v_plane->score) / 8.0;
    }

    const char* unit = args.metric == "psnr" ? " dB" : "";
    std::printf("matched %s: %s%s over %" PRId64 " cluster%s (%" PRId64 " frame pairs)\n",
                args.metric.c_str(), fmt_score(luma.score).c_str(), unit, luma.clusters,
                luma.clusters == 1 ? "" : "s", luma.pairs_evaluated);
    if (luma.capped_pairs > 0 && !luma.infinite)
        std::printf("note: %" PRId64 " identical frame pair%s capped at %.1f dB\n",
                    luma.capped_pairs, luma.capped_pairs == 1 ? "" : "s", args.cap_db);
    if (luma.truncated)
        std::cerr << "warning: inputs not a whole number of clusters, trailing frames ignored\n";
    if (args.planes) {
        std::printf("  u: %s%s\n", fmt_score(u_plane->score).c_str(), unit);
        std::printf("  v: %s%s\n", fmt_score(v_plane->score).c_str(), unit);
        if (combined)
            std::printf("  combined (6/1/1): %s dB\n", fmt_score(*combined).c_str());
    }

    if (args.json_path.empty() && args.csv_path.empty())
        return 0;

    json report;
    report["tool"] = {{"name", "mqm"}, {"version", kVersion}};
    report["metric"] = args.metric;
    report["pooling"] = luma.pooling_domain;
    report["score"] = score_json(luma.score);
    report["infinite"] = luma.infinite;
    report["pooled"] = luma.pooled;
    report["cap_db"] = args.cap_db;
    report["capped_pairs"] = luma.capped_pairs;
    report["rates"] = {{"reference", luma.pair.ref_rate.str()},
                       {"downsampled", luma.pair.down_rate.str()},
                       {"common", luma.pair.rate_lcm.str()},
                       {"factor", luma.pair.factor.str()}};
    report["cluster"] = {{"reference_frames", luma.pair.ref_per_cluster},
                         {"downsampled_frames", luma.pair.down_per_cluster},
                         {"virtual_length", luma.pair.virtual_per_cluster},
                         {"count", luma.clusters}};
    report["pairs_evaluated"] = luma.pairs_evaluated;
    report["cluster_values"] = luma.cluster_values;
    report["truncated"] = luma.truncated;
    if (args.planes) {
        json planes;
        planes["y"] = score_json(luma.score);
        planes["u"] = score_json(u_plane->score);
        planes["v"] = score_json(v_plane->score);
        if (combined)
            planes["combined_611"] = *combined;
        report["planes"] = planes;
    }
    if (args.metric == "external")
        report["external_cmd"] = args.external_cmd;
    auto input_json = [&](const std::string& path) {
        json j;
        j["path"] = path;
        if (path != "-")
            j["digest_fnv1a64"] = hex64(fnv1a64_file(path));
        return j;
    };
    report["inputs"] = {{"reference", input_json(args.ref)},
                        {"distorted", input_json(args.dist)}};
    if (!args.deterministic)
        report["timestamp"] = iso_now();

    if (!args.json_path.empty())
        write_out(args.json_path, report.dump(2) + "\n");
    if (!args.csv_path.empty()) {
        std::ostringstream csv;
        csv << "metric,pooling,score,clusters,pairs_evaluated,capped_pairs,truncated\r\n";
        char score_buf[40];
        snprintf(score_buf, sizeof score_buf, "%.17g", luma.score);
        csv << args.metric << ',' << luma.pooling_domain << ','
            << (luma.infinite ? "inf" : score_buf) << ',' << luma.clusters << ','
            << luma.pairs_evaluated << ',' << luma.capped_pairs << ','
            << (luma.truncated ? "true" : "false") << "\r\n";
        write_out(args.csv_path, csv.str());
    }
    return 0;
}

// ---------------------------------------------------------------- rd-curve

int cmd_rd_curve(const std::string& manifest_path, const std::string& csv_path,
                 const std::string& svg_path, int jobs) {
    const auto manifest = mqm::parse_rd_manifest(manifest_path);
    const auto table = mqm::evaluate_rd_manifest(manifest, jobs);

    std::ostringstream csv;
    mqm::write_rd_csv(table, csv);
    write_out(csv_path, csv.str());

    if (!svg_path.empty()) {
        std::ostringstream svg;
        mqm::write_rd_svg(table, svg);
        write_out(svg_path, svg.str());
    }

    std::size_t points = 0;
    for (const auto& curve : table.curves)
        points += curve.points.size();
    std::printf("%zu curves, %zu points -> %s\n", table.curves.size(), points, csv_path.c_str());

    const auto crossings = mqm::find_intersections(table);
    if (crossings.empty()) {
        std::printf("no rate-distortion intersections\n");
    } else {
        for (const auto& x : crossings)
            std::printf("intersection: '%s' and '%s' cross near %.0f bits (score %.4f), "
                        "between sizes %" PRId64 "..%" PRId64 " and %" PRId64 "..%" PRId64 "\n",
                        x.curve_a.c_str(), x.curve_b.c_str(), x.size_bits, x.score, x.a_size_lo,
                        x.a_size_hi, x.b_size_lo, x.b_size_hi);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matched quality metrics for temporally downsampled video"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // schedule
    std::string sched_ref, sched_down;
    bool sched_json = false;
    auto* schedule = app.add_subcommand(
        "schedule", "Print the per-cluster weight/index schedule for a rate pair");
    schedule->add_option("f_ref", sched_ref, "Reference rate in Hz (integer or a/b)")->required();
    schedule->add_option("f_down", sched_down, "Downsampled rate in Hz")->required();
    schedule->add_flag("--json", sched_json, "Emit JSON instead of a table");

    // downsample
    std::string ds_in, ds_out, ds_to, ds_method = "average";
    GeometryFlags ds_geom;
    auto* downsample = app.add_subcommand("downsample",
                                          "Reduce the frame rate by a rational factor");
    downsample->add_option("-i,--input", ds_in, "Input video (Y4M or headerless YUV)")
        ->required();
    downsample->add_option("-o,--output", ds_out, "Output path (.y4m writes Y4M, else raw)")
        ->required();
    downsample->add_option("--to", ds_to, "Target rate in Hz")->required();
    downsample->add_option("--method", ds_method, "drop or average")
        ->check(CLI::IsMember({"drop", "average"}));
    std::int64_t ds_max_frames = 0;
    downsample->add_option("--max-frames", ds_max_frames,
                           "Read at most this many input frames (0 = all)");
    ds_geom.add_to(*downsample);

    // evaluate
    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand(
        "evaluate", "Score a downsampled sequence against its reference");
    evaluate->add_option("--ref", ev.ref, "Reference sequence")->required();
    evaluate->add_option("--dist", ev.dist, "Downsampled/distorted sequence")->required();
    evaluate->add_option("--metric", ev.metric, "psnr, ssim or external")
        ->check(CLI::IsMember({"psnr", "ssim", "external"}));
    evaluate->add_option("--pooling", ev.pooling,
                         "PSNR pooling: frame (mean dB) or mse (mean MSE, then dB)")
        ->check(CLI::IsMember({"frame", "mse"}));
    evaluate->add_flag("--planes", ev.planes, "Also score chroma planes (and 6/1/1 PSNR)");
    evaluate->add_option("--cap-db", ev.cap_db, "Substitute for infinite per-pair dB values");
    evaluate->add_option("--jobs", ev.jobs, "Clusters evaluated in parallel")
        ->check(CLI::PositiveNumber);
    evaluate->add_option("--external-cmd", ev.external_cmd,
                         "Command template with {ref} {dist} {width} {height}");
    evaluate->add_option("--json", ev.json_path, "Write a JSON report here ('-' for stdout)");
    evaluate->add_option("--csv", ev.csv_path, "Write a CSV report here ('-' for stdout)");
    evaluate->add_flag("--deterministic", ev.deterministic,
                       "Omit timestamps so reports are byte-reproducible");
    ev.geometry.add_to(*evaluate);
    evaluate->add_option("--dist-fps", ev.dist_fps,
                         "Frame rate of a headerless distorted input");
    evaluate->add_option("--max-frames", ev.max_frames,
                         "Read at most this many frames per input (0 = all)");

    // rd-curve
    std::string rd_manifest, rd_csv, rd_svg;
    int rd_jobs = 1;
    auto* rd = app.add_subcommand("rd-curve",
                                  "Evaluate a manifest of encodes into CSV (and SVG) curves");
    rd->add_option("--manifest", rd_manifest, "Manifest file, see README")->required();
    rd->add_option("--csv", rd_csv, "Output CSV path ('-' for stdout)")->required();
    rd->add_option("--svg", rd_svg, "Optional SVG plot path");
    rd->add_option("--jobs", rd_jobs, "Points evaluated in parallel")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (schedule->parsed())
            return cmd_schedule(sched_ref, sched_down, sched_json);
        if (downsample->parsed())
            return cmd_downsample(ds_in, ds_out, ds_to, ds_method, ds_geom, ds_max_frames);
        if (evaluate->parsed())
            return cmd_evaluate(ev);
        if (rd->parsed())
            return cmd_rd_curve(rd_manifest, rd_csv, rd_svg, rd_jobs);
    } catch (const mqm::ToolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTool;
    } catch (const mqm::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
