#ifndef MQM_VIDEO_IO_HPP
#define MQM_VIDEO_IO_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mqm/frame.hpp"

namespace mqm {

// Sequential single-consumer frame source. Lookback is not supported; the
// evaluation loops hold at most one cluster of frames at a time.
class FrameReader {
public:
    virtual ~FrameReader() = default;
    virtual const SequenceInfo& info() const = 0;
    // Fills `out` with the next frame, returns false at end of stream.
    virtual bool read(Frame& out) = 0;
};

class FrameWriter {
public:
    virtual ~FrameWriter() = default;
    virtual const SequenceInfo& info() const = 0;
    virtual void write(const Frame& frame) = 0;
    virtual std::int64_t bytes_written() const = 0;
    // Flushes and closes; further writes are invalid. Called by the dtor.
    virtual void close() = 0;
};

// Geometry for headerless YUV input, where the file carries no metadata.
struct RawGeometry {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    Chroma chroma = Chroma::c420;
    Rational frame_rate{0, 1};
};

std::unique_ptr<FrameReader> open_y4m(const std::string& path);
std::unique_ptr<FrameReader> open_raw(const std::string& path, const RawGeometry& geometry);

// Dispatches on the Y4M magic (or .y4m extension for pipes). A rate_override
// on a Y4M input is ignored with a warning in info().warning; the header is
// authoritative. Path "-" reads standard input.
std::unique_ptr<FrameReader> open_sequence(const std::string& path,
                                           const std::optional<RawGeometry>& geometry = {},
                                           const std::optional<Rational>& rate_override = {});

std::unique_ptr<FrameWriter> make_y4m_writer(const std::string& path, const SequenceInfo& info);
std::unique_ptr<FrameWriter> make_raw_writer(const std::string& path, const SequenceInfo& info);

// Caps a source at `limit` frames; bounds unknown-length pipe input.
class LimitReader : public FrameReader {
public:
    LimitReader(std::unique_ptr<FrameReader> source, std::int64_t limit);
    const SequenceInfo& info() const override { return info_; }
    bool read(Frame& out) override;

private:
    std::unique_ptr<FrameReader> source_;
    SequenceInfo info_;
    std::int64_t remaining_;
};

// In-memory source for generated sequences (tests, fixtures).
class MemoryReader : public FrameReader {
public:
    MemoryReader(SequenceInfo info, std::vector<Frame> frames);
    const SequenceInfo& info() const override { return info_; }
    bool read(Frame& out) override;

private:
    SequenceInfo info_;
    std::vector<Frame> frames_;
    std::size_t next_ = 0;
};

MemoryReader memory_reader(std::vector<Frame> frames, const Rational& rate);

}  // namespace mqm

#endif
