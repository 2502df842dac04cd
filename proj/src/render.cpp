#include "motionforge/render.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "motionforge/error.hpp"

namespace motionforge {

using nlohmann::json;

Palette Palette::defaults() {
    Palette p;
    p.parts[static_cast<std::size_t>(BodyPart::head)] = {255, 255, 0};
    p.parts[static_cast<std::size_t>(BodyPart::torso)] = {255, 0, 0};
    p.parts[static_cast<std::size_t>(BodyPart::left_arm)] = {0, 255, 0};
    p.parts[static_cast<std::size_t>(BodyPart::right_arm)] = {0, 255, 255};
    p.parts[static_cast<std::size_t>(BodyPart::left_leg)] = {0, 0, 255};
    p.parts[static_cast<std::size_t>(BodyPart::right_leg)] = {255, 0, 255};
    p.background = {0, 0, 0};
    return p;
}

void Palette::validate() const {
    std::vector<Rgb> all(parts.begin(), parts.end());
    all.push_back(background);
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j)
            if (all[i] == all[j]) fail(ErrorCode::config, "palette colors must be pairwise distinct");
}

void LightingConfig::validate() const {
    if (!direction.allFinite() || std::abs(direction.norm() - 1.0) > 1e-9)
        fail(ErrorCode::config, "lighting direction must be a unit vector");
    if (!(ambient >= 0.0 && ambient <= 1.0)) fail(ErrorCode::config, "lighting ambient must lie in [0, 1]");
}

Image::Image(int w, int h, Rgb fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = fill.r;
        rgb[i + 1] = fill.g;
        rgb[i + 2] = fill.b;
    }
}

Rgb Image::at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

namespace {

inline double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double px, double py) {
    return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

int clamp_pixel(double v, int limit) {
    if (!(v > 0.0)) return 0;
    if (v > limit) return limit;
    return static_cast<int>(v);
}

}  // namespace

Image rasterize_triangles(std::span<const ScreenTriangle> triangles, int width, int height, Rgb background,
                          std::vector<std::int32_t>* winners) {
    if (width < 1 || height < 1) fail(ErrorCode::contract, "rasterize: zero-area image");
    Image image(width, height, background);
    const std::size_t npix = static_cast<std::size_t>(width) * height;
    std::vector<double> zbuf(npix, std::numeric_limits<double>::infinity());
    std::vector<std::int32_t> owner(npix, kNoTriangle);

    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        const auto& v0 = tri.xy[0];
        const auto& v1 = tri.xy[1];
        const auto& v2 = tri.xy[2];
        if (!v0.allFinite() || !v1.allFinite() || !v2.allFinite()) continue;
        const double area = edge(v0, v1, v2.x(), v2.y());
        if (area == 0.0 || !std::isfinite(area)) continue;
        const double sign = area > 0.0 ? 1.0 : -1.0;
        const double inv_area = 1.0 / area;

        // One pixel of slack; the edge test decides coverage.
        const double minx = std::min({v0.x(), v1.x(), v2.x()});
        const double maxx = std::max({v0.x(), v1.x(), v2.x()});
        const double miny = std::min({v0.y(), v1.y(), v2.y()});
        const double maxy = std::max({v0.y(), v1.y(), v2.y()});
        const int x0 = clamp_pixel(std::floor(minx) - 1.0, width - 1);
        const int x1 = clamp_pixel(std::ceil(maxx) + 1.0, width - 1);
        const int y0 = clamp_pixel(std::floor(miny) - 1.0, height - 1);
        const int y1 = clamp_pixel(std::ceil(maxy) + 1.0, height - 1);
        if (maxx < 0.0 || maxy < 0.0 || minx > width || miny > height) continue;

        const auto id = static_cast<std::int32_t>(t);
        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5;
                const double w0 = edge(v1, v2, px, py);
                const double w1 = edge(v2, v0, px, py);
                const double w2 = edge(v0, v1, px, py);
                if (sign * w0 < 0.0 || sign * w1 < 0.0 || sign * w2 < 0.0) continue;
                const double inv_depth =
                    (w0 * inv_area) / tri.depth[0] + (w1 * inv_area) / tri.depth[1] + (w2 * inv_area) / tri.depth[2];
                const double depth = 1.0 / inv_depth;
                const std::size_t i = static_cast<std::size_t>(y) * width + x;
                if (depth < zbuf[i] || (depth == zbuf[i] && id < owner[i])) {
                    zbuf[i] = depth;
                    owner[i] = id;
                }
            }
        }
    }

    for (std::size_t i = 0; i < npix; ++i) {
        if (owner[i] == kNoTriangle) continue;
        const Rgb& c = triangles[owner[i]].color;
        image.rgb[3 * i] = c.r;
        image.rgb[3 * i + 1] = c.g;
        image.rgb[3 * i + 2] = c.b;
    }
    if (winners) *winners = std::move(owner);
    return image;
}

BodyPart triangle_part(const Face& face, std::span<const BodyPart> labels) {
    const BodyPart a = labels[face[0]];
    const BodyPart b = labels[face[1]];
    const BodyPart c = labels[face[2]];
    if (a == b || a == c) return a;
    if (b == c) return b;
    return std::min({a, b, c});
}

double shade_intensity(const Eigen::Vector3d& normal, const LightingConfig& light) {
    return light.ambient + (1.0 - light.ambient) * std::max(0.0, normal.dot(light.direction));
}

Rgb shade(const Rgb& base, double intensity, double ambient) {
    auto channel = [&](std::uint8_t c) {
        const double lo = std::ceil(c * ambient);
        const double v = std::clamp(std::round(c * intensity), lo, static_cast<double>(c));
        return static_cast<std::uint8_t>(v);
    };
    return {channel(base.r), channel(base.g), channel(base.b)};
}

Image rasterize_frame(const Points3& vertices, std::span<const Face> faces, std::span<const BodyPart> labels,
                      const FrameCamera& camera, const Palette& palette, const LightingConfig& light) {
    const auto& intr = camera.intrinsics;
    if (intr.width < 1 || intr.height < 1) fail(ErrorCode::contract, "rasterize: zero-area image");
    if (static_cast<Eigen::Index>(labels.size()) != vertices.rows())
        fail(ErrorCode::contract, "rasterize: labels must cover every vertex");

    const Points3 cam = (vertices * camera.extrinsics.R.transpose()).rowwise() + camera.extrinsics.T.transpose();
    std::vector<ScreenTriangle> tris;
    tris.reserve(faces.size());
    for (const auto& f : faces) {
        const Eigen::Vector3d q0 = cam.row(f[0]).transpose();
        const Eigen::Vector3d q1 = cam.row(f[1]).transpose();
        const Eigen::Vector3d q2 = cam.row(f[2]).transpose();
        if (q0.z() < camera.near || q1.z() < camera.near || q2.z() < camera.near) continue;
        const Eigen::Vector3d n = (q1 - q0).cross(q2 - q0);
        const double len = n.norm();
        if (!(len > 0.0)) continue;
        ScreenTriangle t;
        const Eigen::Vector3d* q[3] = {&q0, &q1, &q2};
        for (int k = 0; k < 3; ++k) {
            t.xy[k] = Eigen::Vector2d(intr.fx * q[k]->x() / q[k]->z() + intr.cx, intr.fy * q[k]->y() / q[k]->z() + intr.cy);
            t.depth[k] = q[k]->z();
        }
        t.color = shade(palette.color(triangle_part(f, labels)), shade_intensity(n / len, light), light.ambient);
        tris.push_back(t);
    }
    return rasterize_triangles(tris, intr.width, intr.height, palette.background);
}

namespace {

template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (n == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n; ++w) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

ConditioningVideo render_video(const MotionSequence& motion, const BodyModel& model, const CameraTrack& track,
                               const Palette& palette, const LightingConfig& light, const RenderOptions& options) {
    const std::size_t n = motion.frame_count();
    if (n == 0) fail(ErrorCode::contract, "render_video: empty motion");
    if (track.frame_count() != n)
        fail(ErrorCode::contract, "render_video: frame count mismatch (motion " + std::to_string(n) + ", track " +
                                      std::to_string(track.frame_count()) + ")");
    if (options.reference && options.reference->size() != n)
        fail(ErrorCode::contract, "render_video: reference frame count mismatch (reference " +
                                      std::to_string(options.reference->size()) + ", motion " + std::to_string(n) + ")");
    palette.validate();
    light.validate();

    const auto labels = part_labels(model);
    const auto first = track.frame_intrinsics(0);
    const int width = options.width.value_or(first.width);
    const int height = options.height.value_or(first.height);
    if (width < 1 || height < 1) fail(ErrorCode::contract, "render_video: zero-area image");

    ConditioningVideo video;
    video.width = width;
    video.height = height;
    video.fps = motion.fps;
    video.frames.resize(n);
    video.points.resize(n);

    parallel_for(n, options.workers, [&](std::size_t i) {
        VertexFrame posed = pose(model, motion.frames[i], motion.betas);
        if (options.reference) posed = align_to_reference({posed}, {(*options.reference)[i]}, options.align).front();
        FrameCamera cam{track.frame_intrinsics(i).rescaled(width, height), track.frames[i].extrinsics, options.near};
        video.points[i] = project(posed.vertices, cam.intrinsics, cam.extrinsics, cam.near);
        video.frames[i] = rasterize_frame(posed.vertices, model.faces, labels, cam, palette, light);
    });
    return video;
}

// ---------------------------------------------------------------------------

namespace {

json rgb_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

Rgb rgb_from(const json& node, const std::string& where) {
    if (!node.is_array() || node.size() != 3) fail(ErrorCode::config, where + ": expected [r, g, b]");
    Rgb c;
    std::uint8_t* dst[3] = {&c.r, &c.g, &c.b};
    for (int k = 0; k < 3; ++k) {
        if (!node[k].is_number_integer() || node[k].get<int>() < 0 || node[k].get<int>() > 255)
            fail(ErrorCode::config, where + ": channels must be integers in [0, 255]");
        *dst[k] = static_cast<std::uint8_t>(node[k].get<int>());
    }
    return c;
}

}  // namespace

json palette_to_json(const Palette& palette) {
    json doc = json::object();
    for (std::size_t i = 0; i < kPartCount; ++i)
        doc[std::string(part_name(static_cast<BodyPart>(i)))] = rgb_json(palette.parts[i]);
    doc["background"] = rgb_json(palette.background);
    return doc;
}

Palette palette_from_json(const json& doc) {
    Palette p = Palette::defaults();
    if (!doc.is_object()) fail(ErrorCode::config, "render.palette: expected object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() == "background") {
            p.background = rgb_from(it.value(), "render.palette.background");
            continue;
        }
        const auto part = part_from_name(it.key());
        if (!part) fail(ErrorCode::config, "render.palette: unknown part '" + it.key() + "'");
        p.parts[static_cast<std::size_t>(*part)] = rgb_from(it.value(), "render.palette." + it.key());
    }
    p.validate();
    return p;
}

json lighting_to_json(const LightingConfig& light) {
    return {{"direction", {light.direction.x(), light.direction.y(), light.direction.z()}}, {"ambient", light.ambient}};
}

LightingConfig lighting_from_json(const json& doc) {
    LightingConfig light;
    if (!doc.is_object()) fail(ErrorCode::config, "render.lighting: expected object");
    if (doc.contains("direction")) {
        const auto& d = doc["direction"];
        if (!d.is_array() || d.size() != 3) fail(ErrorCode::config, "render.lighting.direction: expected 3 numbers");
        const Eigen::Vector3d v(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
        if (!(v.norm() > 0.0)) fail(ErrorCode::config, "render.lighting.direction: zero vector");
        // already-unit vectors are kept as is so the config echo round trips
        light.direction = std::abs(v.norm() - 1.0) <= 1e-15 ? v : v.normalized();
    }
    if (doc.contains("ambient")) light.ambient = doc["ambient"].get<double>();
    light.validate();
    return light;
}

}  // namespace motionforge
