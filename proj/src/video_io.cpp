#include "mqm/video_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mqm/errors.hpp"

namespace mqm {

namespace {

// Byte stream over a file or stdin, with a small pushback buffer so the
// format can be sniffed before committing to a parser.
class ByteStream {
public:
    explicit ByteStream(const std::string& path) : path_(path) {
        if (path == "-") {
            in_ = &std::cin;
        } else {
            file_.open(path, std::ios::binary);
            if (!file_)
                throw FormatError("cannot open '" + path + "'");
            in_ = &file_;
            std::error_code ec;
            const auto size = std::filesystem::file_size(path, ec);
            if (!ec)
                size_ = static_cast<std::int64_t>(size);
        }
    }

    // Total size when backed by a regular file, -1 for pipes.
    std::int64_t size() const { return size_; }
    const std::string& path() const { return path_; }

    void push_back(const char* data, std::size_t n) {
        pending_.insert(pending_.begin(), data, data + n);
    }

    std::size_t read(void* dst, std::size_t n) {
        char* out = static_cast<char*>(dst);
        std::size_t got = 0;
        if (!pending_.empty()) {
            got = std::min(n, pending_.size());
            std::memcpy(out, pending_.data(), got);
            pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(got));
        }
        if (got < n) {
            in_->read(out + got, static_cast<std::streamsize>(n - got));
            got += static_cast<std::size_t>(in_->gcount());
        }
        return got;
    }

    // Reads until '\n' (consumed, not returned). False on immediate EOF.
    bool read_line(std::string& line, std::size_t max_len = 4096) {
        line.clear();
        char c;
        while (line.size() < max_len) {
            if (read(&c, 1) != 1)
                return !line.empty();
            if (c == '\n')
                return true;
            line.push_back(c);
        }
        throw FormatError(path_ + ": header line longer than " + std::to_string(max_len) + " bytes");
    }

private:
    std::string path_;
    std::ifstream file_;
    std::istream* in_ = nullptr;
    std::vector<char> pending_;
    std::int64_t size_ = -1;
};

void read_plane(ByteStream& s, std::vector<std::uint16_t>& plane, std::size_t samples,
                int bit_depth, std::vector<char>& scratch) {
    const std::size_t bytes = samples * (bit_depth > 8 ? 2 : 1);
    scratch.resize(bytes);
    if (s.read(scratch.data(), bytes) != bytes)
        throw FormatError(s.path() + ": truncated frame data");
    plane.resize(samples);
    if (bit_depth > 8) {
        const std::uint16_t limit = static_cast<std::uint16_t>(1u << bit_depth);
        const auto* src = reinterpret_cast<const unsigned char*>(scratch.data());
        for (std::size_t i = 0; i < samples; ++i) {
            const std::uint16_t v = static_cast<std::uint16_t>(src[2 * i] | (src[2 * i + 1] << 8));
            if (v >= limit)
                throw FormatError(s.path() + ": sample value " + std::to_string(v) +
                                  " out of range for " + std::to_string(bit_depth) + "-bit video");
            plane[i] = v;
        }
    } else {
        const auto* src = reinterpret_cast<const unsigned char*>(scratch.data());
        for (std::size_t i = 0; i < samples; ++i)
            plane[i] = src[i];
    }
}

std::pair<Chroma, int> parse_chroma_tag(const std::string& tag, const std::string& path) {
    std::string base;
    std::string rest;
    for (const char* prefix : {"420", "422", "444", "mono"}) {
        if (tag.rfind(prefix, 0) == 0) {
            base = prefix;
            rest = tag.substr(base.size());
            break;
        }
    }
    if (base.empty())
        throw FormatError(path + ": unsupported chroma tag C" + tag);
    int bit_depth = 8;
    if (rest == "p10") {
        bit_depth = 10;
    } else if (rest == "10" && base == "mono") {
        bit_depth = 10;
    } else if (!(rest.empty() || rest == "jpeg" || rest == "mpeg2" || rest == "paldv" || rest == "p8")) {
        throw FormatError(path + ": unsupported chroma tag C" + tag);
    }
    Chroma chroma = Chroma::c420;
    if (base == "422") chroma = Chroma::c422;
    else if (base == "444") chroma = Chroma::c444;
    else if (base == "mono") chroma = Chroma::mono;
    return {chroma, bit_depth};
}

class Y4mReader : public FrameReader {
public:
    explicit Y4mReader(std::unique_ptr<ByteStream> stream,
                       const std::optional<Rational>& rate_override = {})
        : stream_(std::move(stream)) {
        std::string header;
        if (!stream_->read_line(header))
            throw FormatError(stream_->path() + ": empty input");
        std::istringstream tokens(header);
        std::string tok;
        tokens >> tok;
        if (tok != "YUV4MPEG2")
            throw FormatError(stream_->path() + ": missing YUV4MPEG2 magic");
        info_.source = stream_->path();
        info_.chroma = Chroma::c420;  // Y4M default when no C tag is present
        bool have_rate = false;
        while (tokens >> tok) {
            if (tok.empty()) continue;
            const std::string value = tok.substr(1);
            switch (tok[0]) {
                case 'W': info_.width = std::stoi(value); break;
                case 'H': info_.height = std::stoi(value); break;
                case 'F': {
                    const auto colon = value.find(':');
                    if (colon == std::string::npos)
                        throw FormatError(stream_->path() + ": malformed F tag '" + tok + "'");
                    info_.frame_rate = Rational(std::stoll(value.substr(0, colon)),
                                                std::stoll(value.substr(colon + 1)));
                    have_rate = true;
                    break;
                }
                case 'C': {
                    const auto [chroma, depth] = parse_chroma_tag(value, stream_->path());
                    info_.chroma = chroma;
                    info_.bit_depth = depth;
                    break;
                }
                case 'I': case 'A': case 'X':
                    break;  // interlacing, aspect and extensions are irrelevant here
                default:
                    throw FormatError(stream_->path() + ": unknown header tag '" + tok + "'");
            }
        }
        if (info_.width <= 0 || info_.height <= 0)
            throw FormatError(stream_->path() + ": header missing W/H");
        if (!have_rate || !info_.frame_rate.positive())
            throw FormatError(stream_->path() + ": header missing F tag");
        if (rate_override && *rate_override != info_.frame_rate)
            info_.warning = "frame rate flag " + rate_override->str() +
                            " ignored, Y4M header says F" + std::to_string(info_.frame_rate.num) +
                            ":" + std::to_string(info_.frame_rate.den);

        // Frame count is only derivable when every FRAME marker is the plain
        // 6-byte form; otherwise it stays unknown and the reader streams.
        if (stream_->size() >= 0) {
            const std::int64_t body = stream_->size() - static_cast<std::int64_t>(header.size()) - 1;
            const std::int64_t per_frame = info_.frame_bytes() + 6;
            if (body >= 0 && body % per_frame == 0)
                info_.frame_count = body / per_frame;
        }
    }

    const SequenceInfo& info() const override { return info_; }

    bool read(Frame& out) override {
        std::string marker;
        if (!stream_->read_line(marker))
            return false;
        if (marker.rfind("FRAME", 0) != 0)
            throw FormatError(stream_->path() + ": expected FRAME marker, got '" + marker + "'");
        out.width = info_.width;
        out.height = info_.height;
        out.bit_depth = info_.bit_depth;
        out.chroma = info_.chroma;
        out.index = next_index_++;
        for (int p = 0; p < out.plane_count(); ++p)
            read_plane(*stream_, out.planes[p], out.dims(p).samples(), out.bit_depth, scratch_);
        return true;
    }

private:
    std::unique_ptr<ByteStream> stream_;
    SequenceInfo info_;
    std::int64_t next_index_ = 0;
    std::vector<char> scratch_;
};

class RawReader : public FrameReader {
public:
    RawReader(std::unique_ptr<ByteStream> stream, const RawGeometry& g)
        : stream_(std::move(stream)) {
        if (g.width <= 0 || g.height <= 0)
            throw std::invalid_argument("headerless input requires explicit width/height");
        if (!g.frame_rate.positive())
            throw std::invalid_argument("headerless input requires an explicit frame rate");
        if (g.bit_depth != 8 && g.bit_depth != 10)
            throw std::invalid_argument("bit depth must be 8 or 10");
        info_.width = g.width;
        info_.height = g.height;
        info_.bit_depth = g.bit_depth;
        info_.chroma = g.chroma;
        info_.frame_rate = g.frame_rate;
        info_.source = stream_->path();
        if (stream_->size() >= 0) {
            const std::int64_t per_frame = info_.frame_bytes();
            if (stream_->size() % per_frame != 0)
                throw FormatError(stream_->path() + ": trailing " +
                                  std::to_string(stream_->size() % per_frame) +
                                  " bytes (file size not a multiple of the " +
                                  std::to_string(per_frame) + "-byte frame size)");
            info_.frame_count = stream_->size() / per_frame;
        }
    }

    const SequenceInfo& info() const override { return info_; }

    bool read(Frame& out) override {
        char probe;
        if (stream_->read(&probe, 1) != 1)
            return false;
        stream_->push_back(&probe, 1);
        out.width = info_.width;
        out.height = info_.height;
        out.bit_depth = info_.bit_depth;
        out.chroma = info_.chroma;
        out.index = next_index_++;
        for (int p = 0; p < out.plane_count(); ++p)
            read_plane(*stream_, out.planes[p], out.dims(p).samples(), out.bit_depth, scratch_);
        return true;
    }

private:
    std::unique_ptr<ByteStream> stream_;
    SequenceInfo info_;
    std::int64_t next_index_ = 0;
    std::vector<char> scratch_;
};

std::string chroma_tag(Chroma chroma, int bit_depth) {
    switch (chroma) {
        case Chroma::mono: return bit_depth > 8 ? "mono10" : "mono";
        case Chroma::c420: return bit_depth > 8 ? "420p10" : "420";
        case Chroma::c422: return bit_depth > 8 ? "422p10" : "422";
        case Chroma::c444: return bit_depth > 8 ? "444p10" : "444";
    }
    return "420";
}

class FileWriter : public FrameWriter {
public:
    FileWriter(const std::string& path, const SequenceInfo& info, bool y4m)
        : info_(info), y4m_(y4m) {
        if (info_.width <= 0 || info_.height <= 0)
            throw std::invalid_argument("writer requires positive dimensions");
        if (y4m_ && !info_.frame_rate.positive())
            throw std::invalid_argument("Y4M output requires a frame rate");
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_)
            throw FormatError("cannot create '" + path + "'");
        info_.source = path;
        if (y4m_) {
            std::string header = "YUV4MPEG2 W" + std::to_string(info_.width) +
                                 " H" + std::to_string(info_.height) +
                                 " F" + std::to_string(info_.frame_rate.num) + ":" +
                                 std::to_string(info_.frame_rate.den) +
                                 " Ip A1:1 C" + chroma_tag(info_.chroma, info_.bit_depth) + "\n";
            put(header.data(), header.size());
        }
    }

    ~FileWriter() override {
        try { close(); } catch (...) {}
    }

    const SequenceInfo& info() const override { return info_; }

    void write(const Frame& frame) override {
        if (closed_)
            throw FormatError("write after close on '" + info_.source + "'");
        if (frame.width != info_.width || frame.height != info_.height ||
            frame.bit_depth != info_.bit_depth || frame.chroma != info_.chroma)
            throw FormatError("frame geometry changed mid-stream while writing '" +
                              info_.source + "'");
        if (y4m_)
            put("FRAME\n", 6);
        for (int p = 0; p < frame.plane_count(); ++p) {
            const auto& plane = frame.planes[p];
            if (info_.bit_depth > 8) {
                scratch_.resize(plane.size() * 2);
                for (std::size_t i = 0; i < plane.size(); ++i) {
                    scratch_[2 * i] = static_cast<char>(plane[i] & 0xff);
                    scratch_[2 * i + 1] = static_cast<char>(plane[i] >> 8);
                }
            } else {
                scratch_.resize(plane.size());
                for (std::size_t i = 0; i < plane.size(); ++i)
                    scratch_[i] = static_cast<char>(plane[i] & 0xff);
            }
            put(scratch_.data(), scratch_.size());
        }
        ++frames_;
    }

    std::int64_t bytes_written() const override { return bytes_; }

    void close() override {
        if (closed_)
            return;
        closed_ = true;
        out_.flush();
        if (!out_)
            throw FormatError("I/O failure writing '" + info_.source + "'");
        out_.close();
        info_.frame_count = frames_;
    }

private:
    void put(const char* data, std::size_t n) {
        out_.write(data, static_cast<std::streamsize>(n));
        if (!out_)
            throw FormatError("I/O failure writing '" + info_.source + "'");
        bytes_ += static_cast<std::int64_t>(n);
    }

    SequenceInfo info_;
    bool y4m_;
    std::ofstream out_;
    std::vector<char> scratch_;
    std::int64_t bytes_ = 0;
    std::int64_t frames_ = 0;
    bool closed_ = false;
};

}  // namespace

std::unique_ptr<FrameReader> open_y4m(const std::string& path) {
    return std::make_unique<Y4mReader>(std::make_unique<ByteStream>(path));
}

std::unique_ptr<FrameReader> open_raw(const std::string& path, const RawGeometry& geometry) {
    return std::make_unique<RawReader>(std::make_unique<ByteStream>(path), geometry);
}

std::unique_ptr<FrameReader> open_sequence(const std::string& path,
                                           const std::optional<RawGeometry>& geometry,
                                           const std::optional<Rational>& rate_override) {
    auto stream = std::make_unique<ByteStream>(path);
    char magic[9];
    const std::size_t got = stream->read(magic, sizeof magic);
    stream->push_back(magic, got);
    const bool is_y4m = got == sizeof magic && std::memcmp(magic, "YUV4MPEG2", 9) == 0;

    if (is_y4m)
        return std::make_unique<Y4mReader>(std::move(stream), rate_override);
    if (!geometry)
        throw FormatError(path + ": no YUV4MPEG2 magic and no explicit geometry given");
    RawGeometry g = *geometry;
    if (rate_override)
        g.frame_rate = *rate_override;
    return std::make_unique<RawReader>(std::move(stream), g);
}

std::unique_ptr<FrameWriter> make_y4m_writer(const std::string& path, const SequenceInfo& info) {
    return std::make_unique<FileWriter>(path, info, true);
}

std::unique_ptr<FrameWriter> make_raw_writer(const std::string& path, const SequenceInfo& info) {
    return std::make_unique<FileWriter>(path, info, false);
}

LimitReader::LimitReader(std::unique_ptr<FrameReader> source, std::int64_t limit)
    : source_(std::move(source)), info_(source_->info()), remaining_(limit) {
    if (limit < 0)
        throw std::invalid_argument("frame limit must be non-negative");
    // An unknown count stays unknown: the limit only caps what is read.
    if (info_.frame_count > limit)
        info_.frame_count = limit;
}

bool LimitReader::read(Frame& out) {
    if (remaining_ == 0)
        return false;
    if (!source_->read(out))
        return false;
    --remaining_;
    return true;
}

MemoryReader::MemoryReader(SequenceInfo info, std::vector<Frame> frames)
    : info_(std::move(info)), frames_(std::move(frames)) {
    info_.frame_count = static_cast<std::int64_t>(frames_.size());
    for (std::size_t i = 0; i < frames_.size(); ++i)
        frames_[i].index = static_cast<std::int64_t>(i);
}

bool MemoryReader::read(Frame& out) {
    if (next_ >= frames_.size())
        return false;
    out = frames_[next_++];
    return true;
}

MemoryReader memory_reader(std::vector<Frame> frames, const Rational& rate) {
    SequenceInfo info;
    if (!frames.empty()) {
        info.width = frames[0].width;
        info.height = frames[0].height;
        info.bit_depth = frames[0].bit_depth;
        info.chroma = frames[0].chroma;
    }
    info.frame_rate = rate;
    info.source = "<memory>";
    return MemoryReader(std::move(info), std::move(frames));
}

}  // namespace mqm
