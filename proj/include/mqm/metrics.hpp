#ifndef MQM_METRICS_HPP
#define MQM_METRICS_HPP

#include <memory>
#include <string>
#include <vector>

#include "mqm/frame.hpp"

namespace mqm {

// How per-pair values combine into a sequence score.
//   frame: pool the per-pair scores themselves (dB for PSNR).
//   mse:   pool per-pair MSE, convert to dB once at the end (PSNR only).
enum class Pooling { frame, mse };

struct ScoreBounds {
    double lo = 0.0;
    double hi = 0.0;
};

// Frame-pair scoring contract. pair_value() returns the poolable per-pair
// quantity (dB, MSE, or a similarity score, per pooling_domain()); the
// pooled mean goes through finalize() once to become the reported score.
// Kernels are deterministic; pair_value(x, x) finalizes to perfect_score().
class MetricKernel {
public:
    virtual ~MetricKernel() = default;
    virtual const std::string& name() const = 0;
    virtual const char* pooling_domain() const = 0;  // "db", "mse" or "score"
    virtual double pair_value(const Frame& reference, const Frame& distorted) = 0;
    virtual double finalize(double pooled) const = 0;
    virtual double perfect_score() const = 0;
    virtual ScoreBounds bounds() const = 0;
    virtual bool higher_is_better() const { return true; }
};

// Mean squared error over one plane, exact integer sum.
double plane_mse(const Frame& reference, const Frame& distorted, int plane = 0);

// 10*log10(MAX^2 / MSE); +inf when the planes are identical.
double psnr(const Frame& reference, const Frame& distorted, int plane = 0);
double psnr_from_mse(double mse, int bit_depth);

// Mean local SSIM over the plane, 11x11 Gaussian window (sigma 1.5),
// K1=0.01 K2=0.03, L=2^bit_depth-1, valid window positions only.
// Requires the plane to be at least 11x11.
double ssim(const Frame& reference, const Frame& distorted, int plane = 0);

std::unique_ptr<MetricKernel> make_psnr_kernel(int bit_depth, Pooling pooling = Pooling::frame,
                                               int plane = 0);
std::unique_ptr<MetricKernel> make_ssim_kernel(int plane = 0);

// Adapter for out-of-process metrics (e.g. VMAF). The command template may
// use {ref}, {dist}, {width}, {height}; each frame pair is materialized as
// two single-frame raw files and the tool's stdout is parsed as either one
// number or a JSON list of numbers. Scores are cached by frame-index pair,
// so every co-occurring pair is scored exactly once.
std::unique_ptr<MetricKernel> make_external_kernel(const std::string& command_template);

// Runs one external invocation and returns all scores parsed from stdout.
// Exposed separately so the parse contract is testable on its own.
std::vector<double> run_external_metric(const std::string& command_template,
                                        const std::string& ref_path,
                                        const std::string& dist_path,
                                        int width, int height);

}  // namespace mqm

#endif
