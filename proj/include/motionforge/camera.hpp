#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "motionforge/body_model.hpp"
#include "motionforge/types.hpp"

// Camera convention: right-handed, camera looks down +z, x right, y down.

namespace motionforge {

inline constexpr double kDefaultNear = 1e-3;
inline constexpr double kDefaultCropSide = 512.0;

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    void validate() const;
    // Same camera sampled at a different image resolution.
    Intrinsics rescaled(int new_width, int new_height) const;
};

// World -> camera.
struct Extrinsics {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d T = Eigen::Vector3d::Zero();

    void validate() const;
    bool operator==(const Extrinsics& other) const { return R == other.R && T == other.T; }
};

struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

// How the stored intrinsics of a track are expressed. `crop` means the
// estimator's square crop of side crop_side around bbox; `frame` means the
// full reference frame.
enum class IntrinsicsSpace { crop, frame };

struct CameraFrame {
    Intrinsics intrinsics;
    Extrinsics extrinsics;
    BBox bbox;
};

struct CameraTrack {
    double crop_side = kDefaultCropSide;
    IntrinsicsSpace space = IntrinsicsSpace::crop;
    std::vector<CameraFrame> frames;

    std::size_t frame_count() const { return frames.size(); }
    // Intrinsics on the full frame for frame i (reparameterized from the crop
    // when the track stores crop-space intrinsics).
    Intrinsics frame_intrinsics(std::size_t i) const;
};

std::vector<Violation> camera_track_violations(const nlohmann::json& doc);
CameraTrack camera_track_from_json(const nlohmann::json& doc);
nlohmann::json camera_track_to_json(const CameraTrack& track);
CameraTrack load_camera_track(const std::filesystem::path& path);
void save_camera_track(const CameraTrack& track, const std::filesystem::path& path);

struct Points2D {
    Points2 pixels;                      // NaN where no pixel is emitted
    std::vector<std::uint8_t> visible;   // in front of near plane and inside the frame

    std::size_t size() const { return visible.size(); }
};

Points2D project(const Points3& vertices, const Intrinsics& intr, const Extrinsics& extr, double near = kDefaultNear);

// fx' = fx w / S, fy' = fy h / S, principal point at the bbox center.
Intrinsics reparameterize_intrinsics(const Intrinsics& base, double crop_side, const BBox& bbox, int width, int height);

struct AlignOptions {
    int pelvis_joint = 0;
    // Also rotate about the camera's vertical axis so the hip lines agree.
    bool yaw = false;
    int left_hip = 1;
    int right_hip = 2;
};

// Per frame, translate gen so its pelvis joint lands on ref's.
std::vector<VertexFrame> align_to_reference(const std::vector<VertexFrame>& gen,
                                            const std::vector<VertexFrame>& ref,
                                            const AlignOptions& options = {});

// R' = rodrigues(delta_rot) R, T' = T + delta_T. Requires |delta_rot| < pi.
Extrinsics perturb(const Extrinsics& extr, const Eigen::Vector3d& delta_rot, const Eigen::Vector3d& delta_T);

// ceil(total_steps * stop_fraction) clamped to [1, total_steps].
int reference_stop_step(int total_steps, double stop_fraction);

// Reference meshes recovered from the reference video, in camera coordinates.
// {"frames": [{"joints": [3*N_j], "vertices": [3*N_v] (optional)}]}
std::vector<VertexFrame> load_reference_frames(const std::filesystem::path& path);
void save_reference_frames(const std::vector<VertexFrame>& frames, const std::filesystem::path& path);

}  // namespace motionforge
