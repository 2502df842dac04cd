#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/types.hpp"

namespace motionforge {

// Six-part taxonomy used for conditioning colors. Order defines part ids.
enum class BodyPart : std::uint8_t {
    head = 0,
    torso = 1,
    left_arm = 2,
    right_arm = 3,
    left_leg = 4,
    right_leg = 5,
};

inline constexpr std::size_t kPartCount = 6;

std::string_view part_name(BodyPart part);
std::optional<BodyPart> part_from_name(std::string_view name);

// Joint -> part table over the 24 SMPL body joints.
const std::array<BodyPart, 24>& smpl_part_table();

// SMPL kinematic tree, parent of joint j; -1 marks the root.
const std::array<int, 24>& smpl_parents();

inline constexpr int kRootParent = -1;

using Face = std::array<std::int32_t, 3>;

struct Violation {
    std::string path;
    std::string message;
};

struct BodyModel {
    Points3 template_vertices;            // N_v x 3, metres, rest pose
    std::vector<Face> faces;              // 0-based
    Matrix joint_regressor;               // N_j x N_v
    Matrix skinning_weights;              // N_v x N_j
    std::vector<int> parents;             // parents[root] == kRootParent
    std::vector<BodyPart> part_of_joint;  // N_j
    Matrix shape_basis;                   // 3*N_v x N_beta (row 3v+c), may be empty
    Matrix pose_basis;                    // 3*N_v x 9*(N_j-1), may be empty

    std::size_t vertex_count() const { return static_cast<std::size_t>(template_vertices.rows()); }
    std::size_t joint_count() const { return parents.size(); }
    std::size_t shape_count() const { return static_cast<std::size_t>(shape_basis.cols()); }
    std::size_t body_pose_size() const { return 3 * (joint_count() - 1); }
    int root_joint() const;

    // All invariant violations; empty when the model is valid.
    std::vector<Violation> violations() const;
    // Throws Error(contract) naming the first violation.
    void validate() const;
};

struct PoseFrame {
    Eigen::Vector3d global_orient = Eigen::Vector3d::Zero();
    Vector body_pose;  // 3*(N_j-1), axis-angle per non-root joint
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static PoseFrame zero(std::size_t joint_count);
    bool operator==(const PoseFrame& other) const;
};

struct VertexFrame {
    Points3 vertices;
    Points3 joints;
};

enum class ModelFormat { model_json, generator };

// Loads and validates. Generator documents have the form
// {"generator": "chain3" | "humanoid24", ...generator parameters}.
BodyModel load_model(const std::filesystem::path& path, ModelFormat format);
// Picks the format from the document content.
BodyModel load_model(const std::filesystem::path& path);

// Builds a model from a model-json or generator document without
// checking invariants; structural errors throw Error(contract).
BodyModel parse_model(const nlohmann::json& doc);

void save_model(const BodyModel& model, const std::filesystem::path& path);

// Procedural models for tests and fixtures.
//
// chain3: three joints along +y spaced `segment` apart, a triangular tube of
// four vertex rings (12 vertices). Ring r sits at height r*segment. Ring 0 is
// bound to joint 0, ring 1 is split 0.5/0.5 between joints 0 and 1, ring 2
// between joints 1 and 2, ring 3 (the tip) to joint 2.
BodyModel make_chain3(double segment = 0.3, double radius = 0.05);

// humanoid24: the SMPL joint layout with a box per bone, rigidly bound to the
// bone's parent joint. Joint j is regressed from the four far-end corners of
// its bone; the root from the near-end corners of the pelvis->spine1 bone.
// `shape_count` > 0 adds a procedural basis (height scale, girth scale, ...).
BodyModel make_humanoid24(int shape_count = 0);

// Blend-skinning forward pass. `betas` shorter than the basis is zero-padded.
VertexFrame pose(const BodyModel& model, const PoseFrame& frame, std::span<const double> betas = {});

// Per-vertex part ids: part of the argmax skinning weight, lowest joint on ties.
std::vector<BodyPart> part_labels(const BodyModel& model);

}  // namespace motionforge
