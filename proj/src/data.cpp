#include "srn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace srn {

namespace {

struct SceneShape {
    bool ellipse = false;
    double cx = 0, cy = 0;   // center, px
    double hw = 0, hh = 0;   // half extents, px
    double r = 0, g = 0, b = 0;
    double vx = 0, vy = 0;   // px per frame step
};

struct Scene {
    double bg0[3] = {0, 0, 0}, bg1[3] = {0, 0, 0};
    double bg_dx = 1, bg_dy = 0;
    std::vector<SceneShape> shapes;
    double cam_vx = 0, cam_vy = 0; // px per frame step
    double cam_rot = 0;            // radians per frame step
    int frames = 7;
};

Scene random_scene(int h, int w, Rng& rng) {
    Scene s;
    for (int c = 0; c < 3; ++c) {
        s.bg0[c] = rng.uniform(0.1, 0.9);
        s.bg1[c] = rng.uniform(0.1, 0.9);
    }
    const double bg_angle = rng.uniform(0, 2 * M_PI);
    s.bg_dx = std::cos(bg_angle);
    s.bg_dy = std::sin(bg_angle);

    const int n_shapes = 8 + static_cast<int>(rng.uniform_int(7));
    const double extent = std::min(h, w);
    for (int i = 0; i < n_shapes; ++i) {
        SceneShape sh;
        sh.ellipse = rng.bernoulli(0.5);
        sh.cx = rng.uniform(0, w);
        sh.cy = rng.uniform(0, h);
        sh.hw = rng.uniform(0.05, 0.22) * extent;
        sh.hh = rng.uniform(0.05, 0.22) * extent;
        sh.r = rng.uniform01();
        sh.g = rng.uniform01();
        sh.b = rng.uniform01();
        if (rng.bernoulli(0.5)) {
            const double speed = rng.uniform(1.0, 6.0); // total px over the window
            const double dir = rng.uniform(0, 2 * M_PI);
            sh.vx = speed * std::cos(dir);
            sh.vy = speed * std::sin(dir);
        }
        s.shapes.push_back(sh);
    }

    s.frames = 7 + static_cast<int>(rng.uniform_int(7)); // 7..13
    const double cam_speed = rng.uniform(2.0, 8.0);       // total px over the window
    const double cam_dir = rng.uniform(0, 2 * M_PI);
    const double steps = s.frames - 1;
    s.cam_vx = cam_speed * std::cos(cam_dir) / steps;
    s.cam_vy = cam_speed * std::sin(cam_dir) / steps;
    s.cam_rot = rng.uniform(-1.5, 1.5) * (M_PI / 180.0) / steps;
    for (auto& sh : s.shapes) {
        sh.vx /= steps;
        sh.vy /= steps;
    }
    return s;
}

// Render the scene at time offset t (frames relative to the middle frame).
Tensor<float> render(const Scene& s, int h, int w, double t) {
    std::vector<float> data(static_cast<std::size_t>(3) * h * w);
    const double cx0 = w / 2.0, cy0 = h / 2.0;
    const double theta = s.cam_rot * t;
    const double cosr = std::cos(theta), sinr = std::sin(theta);
    const double tx = s.cam_vx * t, ty = s.cam_vy * t;
    const double diag = std::hypot(h, w);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // camera pose at time t: rotate about the image center, then shift
            const double rx = (x - cx0) * cosr - (y - cy0) * sinr + cx0 + tx;
            const double ry = (x - cx0) * sinr + (y - cy0) * cosr + cy0 + ty;
            double col[3];
            const double u = 0.5 + (s.bg_dx * (rx - cx0) + s.bg_dy * (ry - cy0)) / diag;
            for (int c = 0; c < 3; ++c) col[c] = s.bg0[c] + (s.bg1[c] - s.bg0[c]) * u;
            for (const auto& sh : s.shapes) {
                const double dx = rx - (sh.cx + sh.vx * t);
                const double dy = ry - (sh.cy + sh.vy * t);
                bool inside;
                if (sh.ellipse) {
                    const double ex = dx / sh.hw, ey = dy / sh.hh;
                    inside = ex * ex + ey * ey <= 1.0;
                } else {
                    inside = std::abs(dx) <= sh.hw && std::abs(dy) <= sh.hh;
                }
                if (inside) {
                    col[0] = sh.r;
                    col[1] = sh.g;
                    col[2] = sh.b;
                }
            }
            const std::int64_t px = static_cast<std::int64_t>(y) * w + x;
            for (int c = 0; c < 3; ++c)
                data[static_cast<std::size_t>(c * plane + px)] =
                    static_cast<float>(std::clamp(col[c], 0.0, 1.0));
        }
    return Tensor<float>(Shape{1, 3, h, w}, std::move(data));
}

} // namespace

ImagePair synth_blur(const std::vector<Tensor<float>>& frames, const std::string& id) {
    detail::require(frames.size() >= 2, "synth_blur: need at least 2 frames");
    for (const auto& f : frames) detail::require_same_shape(frames[0], f, "synth_blur");
    std::vector<float> acc(static_cast<std::size_t>(frames[0].numel()), 0.0f);
    for (const auto& f : frames)
        detail::MutMap<float>(acc.data(), f.numel()) += detail::cmap(f);
    detail::MutMap<float>(acc.data(), frames[0].numel()) /= static_cast<float>(frames.size());
    return ImagePair{Tensor<float>(frames[0].shape(), std::move(acc)),
                     frames[frames.size() / 2], id};
}

SyntheticData generate_synthetic_dataset(int count, int height, int width, Rng& rng) {
    detail::require(count >= 1, "generate_synthetic_dataset: count must be >= 1");
    detail::require(height >= 8 && width >= 8, "generate_synthetic_dataset: size too small");
    SyntheticData out;
    out.train.split = "train";
    out.eval.split = "eval";
    const int train_count = count - count / 3;
    for (int i = 0; i < count; ++i) {
        const Scene scene = random_scene(height, width, rng);
        std::vector<Tensor<float>> frames;
        const int mid = scene.frames / 2;
        for (int f = 0; f < scene.frames; ++f)
            frames.push_back(render(scene, height, width, f - mid));
        char id[32];
        std::snprintf(id, sizeof(id), "pair_%04d", i);
        ImagePair pair = synth_blur(frames, id);
        (i < train_count ? out.train : out.eval).pairs.push_back(std::move(pair));
    }
    return out;
}

ImagePair sample_patch(const ImagePair& pair, int size, Rng& rng) {
    const int h = pair.blurry.h(), w = pair.blurry.w();
    detail::require(size >= 1 && size <= h && size <= w,
                    "sample_patch: patch " + std::to_string(size) + " exceeds image " +
                        pair.blurry.shape().str());
    const int oy = static_cast<int>(rng.uniform_int(h - size + 1));
    const int ox = static_cast<int>(rng.uniform_int(w - size + 1));
    return ImagePair{crop(pair.blurry, oy, ox, size, size), crop(pair.sharp, oy, ox, size, size),
                     pair.id};
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw io_error("dataset: no such directory: " + dir);
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory()) ids.push_back(entry.path().filename().string());
    std::sort(ids.begin(), ids.end());
    Dataset data;
    data.split = fs::path(dir).filename().string();
    for (const auto& id : ids) {
        const std::string base = (fs::path(dir) / id).string();
        ImagePair pair{read_image(base + "/blur.ppm"), read_image(base + "/sharp.ppm"), id};
        if (!(pair.blurry.shape() == pair.sharp.shape()))
            throw io_error("dataset: blur/sharp size mismatch for " + id);
        data.pairs.push_back(std::move(pair));
    }
    if (data.pairs.empty()) throw io_error("dataset: no pairs found under " + dir);
    return data;
}

void save_dataset(const Dataset& data, const std::string& dir) {
    namespace fs = std::filesystem;
    for (const auto& pair : data.pairs) {
        const fs::path base = fs::path(dir) / pair.id;
        fs::create_directories(base);
        write_image(pair.blurry, (base / "blur.ppm").string());
        write_image(pair.sharp, (base / "sharp.ppm").string());
    }
}

} // namespace srn
