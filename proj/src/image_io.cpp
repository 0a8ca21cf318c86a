#include "inscene/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace inscene {

namespace fs = std::filesystem;

namespace {

void atomic_write_bytes(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open for write: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw ValidationError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// NetPBM header tokenizer; skips whitespace and '#' comments.
struct PnmParser {
    const std::string& bytes;
    size_t pos = 0;

    explicit PnmParser(const std::string& b) : bytes(b) {}

    std::string token() {
        while (pos < bytes.size()) {
            char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
        size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw ValidationError("truncated netpbm header");
        return bytes.substr(start, pos - start);
    }

    // Binary payload starts after exactly one whitespace byte past maxval.
    size_t payload_offset() {
        if (pos >= bytes.size()) throw ValidationError("truncated netpbm file");
        return ++pos;
    }
};

int parse_dim(const std::string& tok) {
    int v = std::stoi(tok);
    if (v <= 0) throw ValidationError("bad netpbm dimension");
    return v;
}

} // namespace

void write_image(const ImageRGB& img, const fs::path& path) {
    const ImageRGB unit = to_unit(img);
    std::string bytes = "P6\n" + std::to_string(unit.width) + " " + std::to_string(unit.height) +
                        "\n255\n";
    bytes.reserve(bytes.size() + unit.data.size());
    for (double v : unit.data) {
        const long q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
        bytes.push_back(static_cast<char>(static_cast<unsigned char>(q)));
    }
    atomic_write_bytes(path, bytes);
}

ImageRGB read_image(const fs::path& path) {
    const std::string bytes = read_bytes(path);
    PnmParser p(bytes);
    if (p.token() != "P6") throw ValidationError("unsupported image format (want P6): " + path.string());
    const int w = parse_dim(p.token());
    const int h = parse_dim(p.token());
    const int maxval = parse_dim(p.token());
    if (maxval != 255) throw ValidationError("expected 8-bit image: " + path.string());
    const size_t off = p.payload_offset();
    const size_t need = static_cast<size_t>(w) * h * 3;
    if (bytes.size() - off < need) throw ValidationError("truncated image payload: " + path.string());
    ImageRGB img(h, w, ValueRange::unit);
    for (size_t i = 0; i < need; ++i)
        img.data[i] = static_cast<unsigned char>(bytes[off + i]) / 255.0;
    return img;
}

void write_mask(const BinaryMask& mask, const fs::path& path) {
    std::string bytes = "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) +
                        "\n255\n";
    bytes.reserve(bytes.size() + mask.data.size());
    for (uint8_t v : mask.data) bytes.push_back(static_cast<char>(v ? 255 : 0));
    atomic_write_bytes(path, bytes);
}

BinaryMask read_mask(const fs::path& path) {
    const std::string bytes = read_bytes(path);
    PnmParser p(bytes);
    if (p.token() != "P5") throw ValidationError("unsupported mask format (want P5): " + path.string());
    const int w = parse_dim(p.token());
    const int h = parse_dim(p.token());
    const int maxval = parse_dim(p.token());
    if (maxval != 255) throw ValidationError("expected 8-bit mask: " + path.string());
    const size_t off = p.payload_offset();
    const size_t need = static_cast<size_t>(w) * h;
    if (bytes.size() - off < need) throw ValidationError("truncated mask payload: " + path.string());
    BinaryMask mask(h, w);
    for (size_t i = 0; i < need; ++i) {
        const unsigned char v = static_cast<unsigned char>(bytes[off + i]);
        if (v != 0 && v != 255) throw ValidationError("mask byte not in {0, 255}: " + path.string());
        mask.data[i] = v ? 1 : 0;
    }
    return mask;
}

void write_depth(const DepthMap& depth, const fs::path& path) {
    if (depth.norm == DepthNorm::raw)
        throw ValidationError("write_depth: raw depth maps are not serializable");
    std::string bytes = "P5\n" + std::to_string(depth.width) + " " + std::to_string(depth.height) +
                        "\n65535\n";
    bytes.reserve(bytes.size() + depth.data.size() * 2);
    for (double v : depth.data) {
        const long q = std::lround(std::clamp((v + 1.0) * 0.5, 0.0, 1.0) * 65535.0);
        // PGM 16-bit is big-endian.
        bytes.push_back(static_cast<char>((q >> 8) & 0xff));
        bytes.push_back(static_cast<char>(q & 0xff));
    }
    atomic_write_bytes(path, bytes);
}

DepthMap read_depth(const fs::path& path, DepthNorm norm_tag) {
    const std::string bytes = read_bytes(path);
    PnmParser p(bytes);
    if (p.token() != "P5") throw ValidationError("unsupported depth format (want P5): " + path.string());
    const int w = parse_dim(p.token());
    const int h = parse_dim(p.token());
    const int maxval = parse_dim(p.token());
    if (maxval != 65535) throw ValidationError("expected 16-bit depth: " + path.string());
    const size_t off = p.payload_offset();
    const size_t need = static_cast<size_t>(w) * h * 2;
    if (bytes.size() - off < need) throw ValidationError("truncated depth payload: " + path.string());
    DepthMap depth(h, w, norm_tag);
    for (size_t i = 0; i < static_cast<size_t>(w) * h; ++i) {
        const unsigned hi = static_cast<unsigned char>(bytes[off + 2 * i]);
        const unsigned lo = static_cast<unsigned char>(bytes[off + 2 * i + 1]);
        depth.data[i] = static_cast<double>((hi << 8) | lo) / 65535.0 * 2.0 - 1.0;
    }
    return depth;
}

void atomic_write_text(const fs::path& path, const std::string& content) {
    atomic_write_bytes(path, content);
}

} // namespace inscene
