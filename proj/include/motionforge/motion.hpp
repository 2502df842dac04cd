#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/body_model.hpp"
#include "motionforge/schedule.hpp"
#include "motionforge/types.hpp"

namespace motionforge {

class Denoiser;

struct PipelineManifest {
    std::string full_prompt;
    std::string motion_prompt;
    std::string semantic_prompt;
    std::string source;

    bool operator==(const PipelineManifest&) const = default;
};

struct MotionSequence {
    double fps = 0.0;
    std::vector<PoseFrame> frames;
    std::vector<double> betas;
    std::optional<PipelineManifest> manifest;

    std::size_t frame_count() const { return frames.size(); }
    std::size_t body_pose_size() const { return frames.empty() ? 0 : static_cast<std::size_t>(frames.front().body_pose.size()); }
    std::size_t vector_size() const { return 6 + body_pose_size(); }

    bool operator==(const MotionSequence& other) const;
};

std::vector<Violation> motion_violations(const nlohmann::json& doc, std::optional<std::size_t> joint_count = std::nullopt);

MotionSequence motion_from_json(const nlohmann::json& doc, std::optional<std::size_t> joint_count = std::nullopt);
nlohmann::json motion_to_json(const MotionSequence& motion);

// `joint_count`, when given, pins body_pose to 3*(joint_count-1).
MotionSequence load_motion(const std::filesystem::path& path, std::optional<std::size_t> joint_count = std::nullopt);
void save_motion(const MotionSequence& motion, const std::filesystem::path& path);

// Source index for output frame k when decimating `source_count` frames to
// `target_count`: round_half_away(k (K-1) / (target-1)).
std::size_t resample_index(std::size_t k, std::size_t source_count, std::size_t target_count);

MotionSequence resample(const MotionSequence& motion, std::size_t target_frame_count, double target_fps);

// Rows of global_orient | body_pose | translation.
PoseVectors flatten(const MotionSequence& motion);
// Shape, fps and metadata come from `layout`.
MotionSequence unflatten(const PoseVectors& vectors, const MotionSequence& layout);

struct SdeditOptions {
    double t_edit = 0.5;
    int steps = 10;
    NoiseSchedule schedule;
};

// Re-noise to t_edit, then run the denoiser from t_edit to 0 over `steps`
// uniformly spaced timesteps with deterministic (DDIM) updates.
MotionSequence sdedit(const MotionSequence& motion, const SdeditOptions& options, Denoiser& denoiser, Rng& rng);

}  // namespace motionforge
