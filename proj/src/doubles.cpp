#include "inscene/doubles.hpp"

#include <algorithm>
#include <cmath>

#include "inscene/conv_backbone.hpp"
#include "inscene/imaging.hpp"
#include "inscene/rng.hpp"

namespace inscene {

namespace {

double key_distance(const ImageRGB& img, int y, int x, const std::array<double, 3>& key) {
    double d = 0.0;
    for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(img.at(y, x, c) - key[c]));
    return d;
}

// Gram-Schmidt a new row against the rows already in `rows`.
bool orthonormalize_row(std::vector<double>& row, const std::vector<double>& rows, int n_rows,
                        int dim) {
    for (int r = 0; r < n_rows; ++r) {
        double dot = 0.0;
        for (int i = 0; i < dim; ++i) dot += row[i] * rows[static_cast<size_t>(r) * dim + i];
        for (int i = 0; i < dim; ++i) row[i] -= dot * rows[static_cast<size_t>(r) * dim + i];
    }
    double norm = 0.0;
    for (int i = 0; i < dim; ++i) norm += row[i] * row[i];
    norm = std::sqrt(norm);
    if (norm < 1e-9) return false;
    for (int i = 0; i < dim; ++i) row[i] /= norm;
    return true;
}

} // namespace

std::optional<BBox> DoublePersonDetector::detect_person(const ImageRGB& frame) const {
    frame.validate();
    const ImageRGB unit = to_unit(frame);
    BBox box{unit.width, unit.height, 0, 0};
    bool any = false;
    for (int y = 0; y < unit.height; ++y) {
        for (int x = 0; x < unit.width; ++x) {
            if (key_distance(unit, y, x, p_.key) > p_.detect_threshold) {
                box.x0 = std::min(box.x0, x);
                box.y0 = std::min(box.y0, y);
                box.x1 = std::max(box.x1, x + 1);
                box.y1 = std::max(box.y1, y + 1);
                any = true;
            }
        }
    }
    if (!any) return std::nullopt;
    return box;
}

BinaryMask DoublePersonSegmenter::segment_person(const ImageRGB& img) const {
    img.validate();
    const ImageRGB unit = to_unit(img);
    BinaryMask mask(unit.height, unit.width, 0);
    for (int y = 0; y < unit.height; ++y)
        for (int x = 0; x < unit.width; ++x)
            if (key_distance(unit, y, x, p_.key) > p_.segment_threshold) mask.at(y, x) = 1;
    return mask;
}

ImageRGB DoubleSceneInpainter::inpaint(const ImageRGB& img, const BinaryMask& hole,
                                       const std::string& /*prompt*/) const {
    if (img.height != hole.height || img.width != hole.width)
        throw ValidationError("inpaint: shape mismatch");
    if (hole.count_ones() == 0) return img; // no hole -> identity

    // Mean color of kept pixels 8-adjacent to the hole.
    std::array<double, 3> mean{0.5, 0.5, 0.5};
    double n = 0.0;
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (hole.at(y, x)) continue;
            bool border = false;
            for (int dy = -1; dy <= 1 && !border; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int ny = y + dy, nx = x + dx;
                    if (ny < 0 || ny >= img.height || nx < 0 || nx >= img.width) continue;
                    if (hole.at(ny, nx)) {
                        border = true;
                        break;
                    }
                }
            }
            if (border) {
                for (int c = 0; c < 3; ++c) acc[c] += img.at(y, x, c);
                n += 1.0;
            }
        }
    }
    if (n > 0.0)
        for (int c = 0; c < 3; ++c) mean[c] = acc[c] / n;

    ImageRGB out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (hole.at(y, x))
                for (int c = 0; c < 3; ++c) out.at(y, x, c) = mean[c];
    return out;
}

DepthMap DoubleDepthEstimator::estimate_depth(const ImageRGB& img) const {
    img.validate();
    const ImageRGB unit = to_unit(img);
    DepthMap out(unit.height, unit.width, DepthNorm::raw);
    for (int y = 0; y < unit.height; ++y)
        for (int x = 0; x < unit.width; ++x)
            out.at(y, x) = luminance(unit.at(y, x, 0), unit.at(y, x, 1), unit.at(y, x, 2));
    return out;
}

DoubleAutoencoder::DoubleAutoencoder(int latent_channels, int spatial_factor, uint64_t seed) {
    if (latent_channels < 1) throw ValidationError("autoencoder needs at least one channel");
    if (spatial_factor < 1 || (spatial_factor & (spatial_factor - 1)) != 0)
        throw ValidationError("spatial factor must be a power of two");
    spec_ = AutoencoderSpec{latent_channels, spatial_factor, "double-linear-v1"};
    const int f = spatial_factor;
    block_dim_ = 3 * f * f;
    scale_ = 1.0 / std::sqrt(static_cast<double>(block_dim_));

    basis_.assign(static_cast<size_t>(latent_channels) * block_dim_, 0.0);
    Rng rng(Rng::derive(seed, "double-autoencoder"));

    // Structured rows first: block mean, centered x/y ramps, xy. Index order
    // within a block is (pixel-major, then channel).
    auto coord = [&](int idx, int axis) {
        const int pix = idx / 3;
        const int x = pix % f;
        const int y = pix / f;
        return static_cast<double>(axis == 0 ? x : y) - (f - 1) * 0.5;
    };
    std::vector<double> row(static_cast<size_t>(block_dim_));
    int filled = 0;
    for (int c = 0; c < latent_channels && filled == c; ++c) {
        for (int i = 0; i < block_dim_; ++i) {
            switch (c) {
                case 0: row[i] = 1.0; break;
                case 1: row[i] = coord(i, 0); break;
                case 2: row[i] = coord(i, 1); break;
                case 3: row[i] = coord(i, 0) * coord(i, 1); break;
                default: row[i] = rng.normal(); break;
            }
        }
        while (!orthonormalize_row(row, basis_, filled, block_dim_)) {
            for (int i = 0; i < block_dim_; ++i) row[i] = rng.normal();
        }
        std::copy(row.begin(), row.end(), basis_.begin() + static_cast<size_t>(filled) * block_dim_);
        ++filled;
    }
}

LatentTensor DoubleAutoencoder::encode(const ImageRGB& signed_img) const {
    if (signed_img.range != ValueRange::signed_)
        throw ValidationError("encode expects a signed-range image");
    const int f = spec_.spatial_factor;
    if (signed_img.height % f != 0 || signed_img.width % f != 0)
        throw ValidationError("encode: image size not divisible by the spatial factor");
    const int h = signed_img.height / f;
    const int w = signed_img.width / f;
    LatentTensor z(spec_.latent_channels, h, w);
    std::vector<double> block(static_cast<size_t>(block_dim_));
    for (int by = 0; by < h; ++by) {
        for (int bx = 0; bx < w; ++bx) {
            int i = 0;
            for (int py = 0; py < f; ++py)
                for (int px = 0; px < f; ++px)
                    for (int c = 0; c < 3; ++c)
                        block[i++] = signed_img.at(by * f + py, bx * f + px, c);
            for (int c = 0; c < spec_.latent_channels; ++c) {
                double dot = 0.0;
                const size_t base = static_cast<size_t>(c) * block_dim_;
                for (int k = 0; k < block_dim_; ++k) dot += basis_[base + k] * block[k];
                z.at(c, by, bx) = dot * scale_;
            }
        }
    }
    return z;
}

ImageRGB DoubleAutoencoder::decode(const LatentTensor& z) const {
    if (z.channels != spec_.latent_channels)
        throw ValidationError("decode: latent channel mismatch");
    const int f = spec_.spatial_factor;
    ImageRGB out(z.height * f, z.width * f, ValueRange::signed_);
    std::vector<double> block(static_cast<size_t>(block_dim_));
    for (int by = 0; by < z.height; ++by) {
        for (int bx = 0; bx < z.width; ++bx) {
            std::fill(block.begin(), block.end(), 0.0);
            for (int c = 0; c < spec_.latent_channels; ++c) {
                const double zc = z.at(c, by, bx) / scale_;
                const size_t base = static_cast<size_t>(c) * block_dim_;
                for (int k = 0; k < block_dim_; ++k) block[k] += zc * basis_[base + k];
            }
            int i = 0;
            for (int py = 0; py < f; ++py)
                for (int px = 0; px < f; ++px)
                    for (int c = 0; c < 3; ++c)
                        out.at(by * f + py, bx * f + px, c) = std::clamp(block[i++], -1.0, 1.0);
        }
    }
    return out;
}

DoubleReferenceEncoder::DoubleReferenceEncoder(int width, int expected_size, uint64_t seed)
    : width_(width), expected_size_(expected_size) {
    if (width < 1) throw ValidationError("reference encoder width must be positive");
    if (expected_size % kPool != 0)
        throw ValidationError("reference encoder input size must be a multiple of 16");
    const int dim = 3 * kPool * kPool;
    if (width > dim) throw ValidationError("reference encoder width larger than pooled dim");
    proj_.assign(static_cast<size_t>(width) * dim, 0.0);
    Rng rng(Rng::derive(seed, "double-reference-encoder"));
    std::vector<double> row(static_cast<size_t>(dim));
    for (int r = 0; r < width; ++r) {
        do {
            for (int i = 0; i < dim; ++i) row[i] = rng.normal();
        } while (!orthonormalize_row(row, proj_, r, dim));
        std::copy(row.begin(), row.end(), proj_.begin() + static_cast<size_t>(r) * dim);
    }
}

Embedding DoubleReferenceEncoder::embed_reference(const ImageRGB& img) const {
    if (img.height != expected_size_ || img.width != expected_size_)
        throw ValidationError("embed_reference: expected " + std::to_string(expected_size_) +
                              "x" + std::to_string(expected_size_) + " input");
    const ImageRGB unit = to_unit(img);

    // Average-pool to kPool x kPool, center around mid-gray.
    const int cell = expected_size_ / kPool;
    const int dim = 3 * kPool * kPool;
    std::vector<double> pooled(static_cast<size_t>(dim), 0.0);
    for (int py = 0; py < kPool; ++py) {
        for (int px = 0; px < kPool; ++px) {
            std::array<double, 3> acc{0.0, 0.0, 0.0};
            for (int y = 0; y < cell; ++y)
                for (int x = 0; x < cell; ++x)
                    for (int c = 0; c < 3; ++c)
                        acc[c] += unit.at(py * cell + y, px * cell + x, c);
            const double inv = 1.0 / (static_cast<double>(cell) * cell);
            for (int c = 0; c < 3; ++c)
                pooled[(static_cast<size_t>(py) * kPool + px) * 3 + c] = acc[c] * inv - 0.5;
        }
    }

    Embedding e(1, width_);
    for (int r = 0; r < width_; ++r) {
        double dot = 0.0;
        const size_t base = static_cast<size_t>(r) * dim;
        for (int i = 0; i < dim; ++i) dot += proj_[base + i] * pooled[i];
        e.data[r] = dot;
    }
    return e;
}

BodyMesh make_humanoid_mesh(int pose) {
    // Low-poly figure out of axis-aligned boxes; y down, meters, origin at the
    // body center. Limbs sit at slightly different depths so the rendered
    // depth map is never flat.
    BodyMesh mesh;
    mesh.source = MeshSource::synthetic;

    auto add_box = [&](double cx, double cy, double cz, double sx, double sy, double sz) {
        const int base = static_cast<int>(mesh.vertices.size());
        for (int i = 0; i < 8; ++i) {
            const double dx = (i & 1) ? 0.5 : -0.5;
            const double dy = (i & 2) ? 0.5 : -0.5;
            const double dz = (i & 4) ? 0.5 : -0.5;
            mesh.vertices.push_back({cx + dx * sx, cy + dy * sy, cz + dz * sz});
        }
        static const int quads[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                                        {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
        for (const auto& q : quads) {
            mesh.faces.push_back({base + q[0], base + q[1], base + q[2]});
            mesh.faces.push_back({base + q[0], base + q[2], base + q[3]});
        }
    };

    add_box(0.0, 0.55, 0.02, 0.16, 0.18, 0.16);   // head (slightly behind)
    add_box(0.0, 0.15, 0.0, 0.36, 0.6, 0.2);      // torso
    add_box(-0.1, -0.58, 0.03, 0.14, 0.85, 0.14); // left leg
    add_box(0.1, -0.58, 0.01, 0.14, 0.85, 0.14);  // right leg
    switch (pose % 3) {
        case 0: // arms down
            add_box(-0.26, 0.12, -0.04, 0.1, 0.55, 0.1);
            add_box(0.26, 0.12, -0.02, 0.1, 0.55, 0.1);
            break;
        case 1: // arms out
            add_box(-0.48, 0.32, -0.04, 0.5, 0.1, 0.1);
            add_box(0.48, 0.32, -0.02, 0.5, 0.1, 0.1);
            break;
        default: // one arm raised
            add_box(-0.26, 0.12, -0.04, 0.1, 0.55, 0.1);
            add_box(0.3, 0.62, -0.02, 0.1, 0.55, 0.1);
            break;
    }
    return mesh;
}

std::optional<BodyFitter::Fit> DoubleBodyFitter::fit_body(const ImageRGB& img) const {
    DoublePersonSegmenter seg(p_);
    const BinaryMask sil = seg.segment_person(img);
    const size_t px = sil.count_ones();
    if (px < static_cast<size_t>(min_fit_pixels_)) return std::nullopt;

    const BBox box = silhouette_bbox(sil);
    CameraSpec cam;
    cam.height = img.height;
    cam.width = img.width;
    cam.fx = cam.fy = static_cast<double>(img.height);
    cam.cx = img.width * 0.5;
    cam.cy = img.height * 0.5;

    // Deterministic pose pick from the silhouette footprint.
    const int pose = static_cast<int>((static_cast<uint64_t>(px) + box.x0 + box.y0) % 3);
    BodyMesh mesh = make_humanoid_mesh(pose);
    mesh.source = MeshSource::fitted;

    // Place the ~1.7 m figure so its projection matches the person bbox.
    const double body_h = 2.0; // bounding height of the canonical mesh
    const double z0 = cam.fy * body_h / std::max(1, box.height());
    const double bx = (box.x0 + box.x1) * 0.5;
    const double by = (box.y0 + box.y1) * 0.5;
    const double tx = (bx - cam.cx) * z0 / cam.fx;
    const double ty = (by - cam.cy) * z0 / cam.fy;
    for (auto& v : mesh.vertices) {
        v[0] += tx;
        v[1] += ty;
        v[2] += z0;
    }
    return BodyFitter::Fit{std::move(mesh), cam};
}

BackendRegistry make_double_registry(const KeyValueConfig& cfg) {
    const int latent_channels = cfg.get_int("latent_channels", 4);
    const int spatial_factor = cfg.get_int("spatial_factor", 8);
    const int resolution = cfg.get_int("resolution", 512);
    const int ctx_width = cfg.get_int("context_width", 16);
    const int hidden = cfg.get_int("hidden_channels", 8);
    const int t_train = cfg.get_int("t_train", 1000);
    const uint64_t seed = cfg.get_u64("backend_seed", 101);

    ChromaKeyParams chroma;
    chroma.key = cfg.get_rgb("chroma_key", chroma.key);
    chroma.detect_threshold = cfg.get_double("detect_threshold", chroma.detect_threshold);
    chroma.segment_threshold = cfg.get_double("segment_threshold", chroma.segment_threshold);
    const int min_fit_pixels = cfg.get_int("min_fit_pixels", 16);

    BackendRegistry reg;
    reg.name = "double";
    reg.detector = std::make_shared<DoublePersonDetector>(chroma);
    reg.segmenter = std::make_shared<DoublePersonSegmenter>(chroma);
    reg.fitter = std::make_shared<DoubleBodyFitter>(chroma, min_fit_pixels);
    reg.inpainter = std::make_shared<DoubleSceneInpainter>();
    reg.depth = std::make_shared<DoubleDepthEstimator>();
    reg.autoencoder = std::make_shared<DoubleAutoencoder>(latent_channels, spatial_factor, seed);
    reg.reference = std::make_shared<DoubleReferenceEncoder>(ctx_width, resolution, seed);
    reg.make_backbone = [latent_channels, hidden, ctx_width, t_train](int input_channels,
                                                                      uint64_t init_seed) {
        return std::make_unique<TwoLayerConvBackbone>(input_channels, latent_channels, hidden,
                                                      ctx_width, t_train, init_seed);
    };
    return reg;
}

} // namespace inscene
