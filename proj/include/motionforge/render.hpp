#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "motionforge/body_model.hpp"
#include "motionforge/camera.hpp"
#include "motionforge/motion.hpp"

namespace motionforge {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    bool operator==(const Rgb&) const = default;
};

struct Palette {
    std::array<Rgb, kPartCount> parts;
    Rgb background;

    // head yellow, torso red, left arm green, right arm cyan, left leg blue,
    // right leg magenta, black background.
    static Palette defaults();
    void validate() const;
    const Rgb& color(BodyPart part) const { return parts[static_cast<std::size_t>(part)]; }
};

struct LightingConfig {
    // Camera space, pointing from the surface toward the light.
    Eigen::Vector3d direction = Eigen::Vector3d(0.0, -0.5, -1.0).normalized();
    double ambient = 0.35;

    void validate() const;
};

struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    Image() = default;
    Image(int w, int h, Rgb fill);

    Rgb at(int x, int y) const;
    bool operator==(const Image&) const = default;
};

// Screen-space triangle; depth is camera-space z at each corner.
struct ScreenTriangle {
    std::array<Eigen::Vector2d, 3> xy;
    std::array<double, 3> depth;
    Rgb color;
};

inline constexpr std::int32_t kNoTriangle = -1;

// Z-buffered fill at pixel centers (x + 0.5, y + 0.5). A center is covered
// when it lies inside or on the boundary of a triangle with nonzero signed
// area. Depth is perspective-correct. The nearest triangle wins; equal depth
// goes to the lower triangle index, so submission order never matters.
// `winners`, when given, receives the per-pixel triangle index.
Image rasterize_triangles(std::span<const ScreenTriangle> triangles, int width, int height, Rgb background,
                          std::vector<std::int32_t>* winners = nullptr);

struct FrameCamera {
    Intrinsics intrinsics;
    Extrinsics extrinsics;
    double near = kDefaultNear;
};

// Majority part of the three corners; ties go to the lowest part id.
BodyPart triangle_part(const Face& face, std::span<const BodyPart> labels);

// Flat shading: ambient + (1 - ambient) max(0, n.l), camera-space face normal.
double shade_intensity(const Eigen::Vector3d& normal, const LightingConfig& light);
Rgb shade(const Rgb& base, double intensity, double ambient);

// Triangles with any corner in front of the near plane are dropped.
Image rasterize_frame(const Points3& vertices, std::span<const Face> faces, std::span<const BodyPart> labels,
                      const FrameCamera& camera, const Palette& palette, const LightingConfig& light);

struct ConditioningVideo {
    std::vector<Image> frames;
    int width = 0;
    int height = 0;
    double fps = 0.0;
    std::vector<Points2D> points;

    std::size_t frame_count() const { return frames.size(); }
};

struct RenderOptions {
    // Output resolution; the track's intrinsics are rescaled from its frame size.
    std::optional<int> width;
    std::optional<int> height;
    double near = kDefaultNear;
    unsigned workers = 1;
    // Reference meshes to align to (camera coordinates), one per frame.
    const std::vector<VertexFrame>* reference = nullptr;
    AlignOptions align;
};

inline constexpr int kDefaultRenderWidth = 480;
inline constexpr int kDefaultRenderHeight = 720;

ConditioningVideo render_video(const MotionSequence& motion, const BodyModel& model, const CameraTrack& track,
                               const Palette& palette, const LightingConfig& light, const RenderOptions& options = {});

nlohmann::json palette_to_json(const Palette& palette);
Palette palette_from_json(const nlohmann::json& doc);
nlohmann::json lighting_to_json(const LightingConfig& light);
LightingConfig lighting_from_json(const nlohmann::json& doc);

}  // namespace motionforge
