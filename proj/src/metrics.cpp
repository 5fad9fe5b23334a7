#include "mqm/metrics.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "mqm/errors.hpp"
#include "mqm/video_io.hpp"

namespace mqm {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

void require_comparable(const Frame& a, const Frame& b, int plane) {
    if (!a.same_geometry(b))
        throw FormatError("frame geometry mismatch: " + std::to_string(a.width) + "x" +
                          std::to_string(a.height) + "/" + std::to_string(a.bit_depth) + "-bit " +
                          chroma_name(a.chroma) + " vs " + std::to_string(b.width) + "x" +
                          std::to_string(b.height) + "/" + std::to_string(b.bit_depth) + "-bit " +
                          chroma_name(b.chroma));
    if (plane < 0 || plane >= a.plane_count())
        throw std::invalid_argument("plane " + std::to_string(plane) + " not present");
}

const std::array<double, kWindow>& gaussian_taps() {
    static const std::array<double, kWindow> taps = [] {
        std::array<double, kWindow> t{};
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            const double d = i - (kWindow - 1) / 2.0;
            t[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += t[i];
        }
        for (double& v : t)
            v /= sum;
        return t;
    }();
    return taps;
}

}  // namespace

double plane_mse(const Frame& reference, const Frame& distorted, int plane) {
    require_comparable(reference, distorted, plane);
    const auto& a = reference.planes[plane];
    const auto& b = distorted.planes[plane];
    std::uint64_t ssd = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::int64_t d = std::int64_t(a[i]) - std::int64_t(b[i]);
        ssd += static_cast<std::uint64_t>(d * d);
    }
    return static_cast<double>(ssd) / static_cast<double>(a.size());
}

double psnr_from_mse(double mse, int bit_depth) {
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    const double peak = static_cast<double>((1 << bit_depth) - 1);
    return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const Frame& reference, const Frame& distorted, int plane) {
    return psnr_from_mse(plane_mse(reference, distorted, plane), reference.bit_depth);
}

double ssim(const Frame& reference, const Frame& distorted, int plane) {
    require_comparable(reference, distorted, plane);
    const PlaneDims dims = reference.dims(plane);
    if (dims.width < kWindow || dims.height < kWindow)
        throw FormatError("plane " + std::to_string(dims.width) + "x" + std::to_string(dims.height) +
                          " smaller than the " + std::to_string(kWindow) + "x" +
                          std::to_string(kWindow) + " SSIM window");

    const auto& taps = gaussian_taps();
    const double peak = static_cast<double>((1 << reference.bit_depth) - 1);
    const double c1 = (kK1 * peak) * (kK1 * peak);
    const double c2 = (kK2 * peak) * (kK2 * peak);

    const int w = dims.width;
    const int h = dims.height;
    const int out_w = w - kWindow + 1;
    const int out_h = h - kWindow + 1;
    const std::uint16_t* x = reference.planes[plane].data();
    const std::uint16_t* y = distorted.planes[plane].data();

    // Separable Gaussian over the five product images, horizontal first.
    // Buffers hold out_w columns for every input row.
    const std::size_t hn = std::size_t(out_w) * h;
    std::vector<double> hx(hn), hy(hn), hxx(hn), hyy(hn), hxy(hn);
    for (int r = 0; r < h; ++r) {
        const std::uint16_t* xr = x + std::size_t(r) * w;
        const std::uint16_t* yr = y + std::size_t(r) * w;
        double* ox = hx.data() + std::size_t(r) * out_w;
        double* oy = hy.data() + std::size_t(r) * out_w;
        double* oxx = hxx.data() + std::size_t(r) * out_w;
        double* oyy = hyy.data() + std::size_t(r) * out_w;
        double* oxy = hxy.data() + std::size_t(r) * out_w;
        for (int c = 0; c < out_w; ++c) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int k = 0; k < kWindow; ++k) {
                const double xv = xr[c + k];
                const double yv = yr[c + k];
                const double t = taps[k];
                sx += t * xv;
                sy += t * yv;
                sxx += t * (xv * xv);
                syy += t * (yv * yv);
                sxy += t * (xv * yv);  // grouped so swapping inputs is bit-exact
            }
            ox[c] = sx; oy[c] = sy; oxx[c] = sxx; oyy[c] = syy; oxy[c] = sxy;
        }
    }

    double total = 0.0;
    for (int r = 0; r < out_h; ++r) {
        for (int c = 0; c < out_w; ++c) {
            double mx = 0, my = 0, exx = 0, eyy = 0, exy = 0;
            for (int k = 0; k < kWindow; ++k) {
                const std::size_t at = std::size_t(r + k) * out_w + c;
                const double t = taps[k];
                mx += t * hx[at];
                my += t * hy[at];
                exx += t * hxx[at];
                eyy += t * hyy[at];
                exy += t * hxy[at];
            }
            const double var_x = exx - mx * mx;
            const double var_y = eyy - my * my;
            const double cov = exy - mx * my;
            total += ((2.0 * (mx * my) + c1) * (2.0 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (var_x + var_y + c2));
        }
    }
    return total / (double(out_w) * double(out_h));
}

namespace {

class PsnrKernel : public MetricKernel {
public:
    PsnrKernel(int bit_depth, Pooling pooling, int plane)
        : bit_depth_(bit_depth), pooling_(pooling), plane_(plane) {}

    const std::string& name() const override {
        static const std::string n = "psnr";
        return n;
    }
    const char* pooling_domain() const override {
        return pooling_ == Pooling::frame ? "db" : "mse";
    }
    double pair_value(const Frame& reference, const Frame& distorted) override {
        if (reference.bit_depth != bit_depth_)
            throw FormatError("kernel built for " + std::to_string(bit_depth_) +
                              "-bit video, got " + std::to_string(reference.bit_depth) + "-bit");
        const double m = plane_mse(reference, distorted, plane_);
        return pooling_ == Pooling::frame ? psnr_from_mse(m, bit_depth_) : m;
    }
    double finalize(double pooled) const override {
        return pooling_ == Pooling::frame ? pooled : psnr_from_mse(pooled, bit_depth_);
    }
    double perfect_score() const override { return std::numeric_limits<double>::infinity(); }
    ScoreBounds bounds() const override {
        return {0.0, std::numeric_limits<double>::infinity()};
    }

private:
    int bit_depth_;
    Pooling pooling_;
    int plane_;
};

class SsimKernel : public MetricKernel {
public:
    explicit SsimKernel(int plane) : plane_(plane) {}

    const std::string& name() const override {
        static const std::string n = "ssim";
        return n;
    }
    const char* pooling_domain() const override { return "score"; }
    double pair_value(const Frame& reference, const Frame& distorted) override {
        return ssim(reference, distorted, plane_);
    }
    double finalize(double pooled) const override { return pooled; }
    double perfect_score() const override { return 1.0; }
    ScoreBounds bounds() const override { return {-1.0, 1.0}; }

private:
    int plane_;
};

std::string substitute(const std::string& tpl, const std::string& key, const std::string& value) {
    std::string out = tpl;
    std::size_t at = 0;
    while ((at = out.find(key, at)) != std::string::npos) {
        out.replace(at, key.size(), value);
        at += value.size();
    }
    return out;
}

std::string capture_command(const std::string& cmd) {
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        throw ToolError("cannot launch: " + cmd);
    std::string output;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0)
        output.append(buf, got);
    const int status = pclose(pipe);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw ToolError("external metric failed (exit " +
                        std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) + "): " + cmd);
    return output;
}

std::vector<double> parse_scores(const std::string& output, const std::string& cmd) {
    const auto first = output.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        throw ToolError("external metric produced no output: " + cmd);
    std::vector<double> scores;
    if (output[first] == '[') {
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(output);
        } catch (const nlohmann::json::exception& e) {
            throw ToolError(std::string("unparsable JSON from external metric: ") + e.what());
        }
        if (!parsed.is_array() || parsed.empty())
            throw ToolError("external metric JSON is not a non-empty list: " + cmd);
        for (const auto& v : parsed) {
            if (!v.is_number())
                throw ToolError("external metric JSON list holds a non-number: " + cmd);
            scores.push_back(v.get<double>());
        }
    } else {
        char* end = nullptr;
        const double v = std::strtod(output.c_str() + first, &end);
        if (end == output.c_str() + first)
            throw ToolError("unparsable output from external metric: '" + output + "'");
        scores.push_back(v);
    }
    return scores;
}

std::filesystem::path unique_temp_name(const char* stem) {
    static std::atomic<std::uint64_t> counter{0};
    return std::filesystem::temp_directory_path() /
           (std::string(stem) + "-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter.fetch_add(1)) + ".yuv");
}

class ExternalKernel : public MetricKernel {
public:
    explicit ExternalKernel(std::string command_template)
        : template_(std::move(command_template)) {}

    const std::string& name() const override {
        static const std::string n = "external";
        return n;
    }
    const char* pooling_domain() const override { return "score"; }

    double pair_value(const Frame& reference, const Frame& distorted) override {
        if (!reference.same_geometry(distorted))
            throw FormatError("frame geometry mismatch in external metric");
        const auto key = std::make_pair(reference.index, distorted.index);
        {
            std::lock_guard lock(mutex_);
            if (const auto it = cache_.find(key); it != cache_.end())
                return it->second;
        }
        const double value = score_pair(reference, distorted);
        std::lock_guard lock(mutex_);
        cache_.emplace(key, value);
        return value;
    }

    double finalize(double pooled) const override { return pooled; }
    double perfect_score() const override { return std::numeric_limits<double>::quiet_NaN(); }
    ScoreBounds bounds() const override {
        return {-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
    }

private:
    double score_pair(const Frame& reference, const Frame& distorted) {
        const auto ref_path = unique_temp_name("mqm-ref");
        const auto dist_path = unique_temp_name("mqm-dist");
        struct Cleanup {
            const std::filesystem::path &a, &b;
            ~Cleanup() {
                std::error_code ec;
                std::filesystem::remove(a, ec);
                std::filesystem::remove(b, ec);
            }
        } cleanup{ref_path, dist_path};

        SequenceInfo info;
        info.width = reference.width;
        info.height = reference.height;
        info.bit_depth = reference.bit_depth;
        info.chroma = reference.chroma;
        info.frame_rate = Rational(1);
        make_raw_writer(ref_path.string(), info)->write(reference);
        make_raw_writer(dist_path.string(), info)->write(distorted);

        const auto scores = run_external_metric(template_, ref_path.string(), dist_path.string(),
                                                reference.width, reference.height);
        double sum = 0.0;
        for (const double s : scores)
            sum += s;
        return sum / static_cast<double>(scores.size());
    }

    std::string template_;
    std::mutex mutex_;
    std::map<std::pair<std::int64_t, std::int64_t>, double> cache_;
};

}  // namespace

std::vector<double> run_external_metric(const std::string& command_template,
                                        const std::string& ref_path,
                                        const std::string& dist_path,
                                        int width, int height) {
    std::string cmd = substitute(command_template, "{ref}", ref_path);
    cmd = substitute(cmd, "{dist}", dist_path);
    cmd = substitute(cmd, "{width}", std::to_string(width));
    cmd = substitute(cmd, "{height}", std::to_string(height));
    return parse_scores(capture_command(cmd), cmd);
}

std::unique_ptr<MetricKernel> make_psnr_kernel(int bit_depth, Pooling pooling, int plane) {
    if (bit_depth != 8 && bit_depth != 10)
        throw std::invalid_argument("bit depth must be 8 or 10");
    return std::make_unique<PsnrKernel>(bit_depth, pooling, plane);
}

std::unique_ptr<MetricKernel> make_ssim_kernel(int plane) {
    return std::make_unique<SsimKernel>(plane);
}

std::unique_ptr<MetricKernel> make_external_kernel(const std::string& command_template) {
    return std::make_unique<ExternalKernel>(command_template);
}

}  // namespace mqm
