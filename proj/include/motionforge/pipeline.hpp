#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/body_model.hpp"
#include "motionforge/render.hpp"
#include "motionforge/schedule.hpp"

namespace motionforge {

std::string tool_version();

enum class FrameFormat { png, ppm };

struct DenoiserConfig {
    // "linear-family" (built in, reads `family`) or "external" (spawns `command`).
    std::string kind = "linear-family";
    std::filesystem::path family;
    std::vector<std::string> command;
};

struct EditingConfig {
    std::optional<double> t_edit;
    int steps = 10;
    DenoiserConfig denoiser;
    std::optional<Eigen::Vector3d> delta_rot;
    std::optional<Eigen::Vector3d> delta_T;
};

struct ReferenceConfig {
    std::optional<std::filesystem::path> vertices;
    double stop_fraction = 0.3;
    int total_steps = 50;
    AlignOptions align;
};

struct PipelineConfig {
    struct Paths {
        std::filesystem::path model;
        std::filesystem::path motion;
        std::filesystem::path camera_track;
        std::filesystem::path output_dir;
    } paths;

    struct Render {
        int width = kDefaultRenderWidth;
        int height = kDefaultRenderHeight;
        FrameFormat format = FrameFormat::png;
        Palette palette = Palette::defaults();
        LightingConfig lighting;
        double near = kDefaultNear;
    } render;

    struct Frames {
        std::size_t count = 49;
        double fps = 8.0;
    } frames;

    TimestepSamplerConfig timestep;
    NoiseSchedule noise_schedule;
    EditingConfig editing;
    ReferenceConfig reference;

    // Recorded in the manifest for external video-model drivers only.
    double guidance_scale = 4.0;
    double pose_guidance_scale = 2.0;

    std::uint64_t seed = 0;
    unsigned workers = 0;  // 0 = hardware concurrency

    static PipelineConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    void validate() const;
};

// Merge order: defaults < file < MOTIONFORGE_* environment < `overrides`.
// Environment names map to nested keys by splitting on "__" after the
// prefix, lower-cased: MOTIONFORGE_RENDER__WIDTH=640 sets render.width.
// Values are parsed as JSON when possible, otherwise taken as strings.
nlohmann::json merge_config_layers(const std::optional<std::filesystem::path>& file,
                                   const std::map<std::string, std::string>& environment,
                                   const nlohmann::json& overrides);
std::map<std::string, std::string> motionforge_environment();

struct RunResult {
    std::filesystem::path manifest_path;
    std::vector<std::filesystem::path> frame_paths;
    nlohmann::json manifest;
};

// Frames (frame_%04d.png|ppm), points.jsonl, then manifest.json written last.
// On failure the output directory holds no manifest and no new frames.
RunResult cmd_render(const PipelineConfig& config);
// Writes edited_motion.json, then renders it.
RunResult cmd_edit_motion(const PipelineConfig& config);
// Applies editing.delta_rot / delta_T to every frame's extrinsics, then renders.
RunResult cmd_edit_camera(const PipelineConfig& config);

struct ValidationPaths {
    std::optional<std::filesystem::path> model;
    std::optional<std::filesystem::path> motion;
    std::optional<std::filesystem::path> camera_track;
    std::optional<std::filesystem::path> reference;
};

struct ReportEntry {
    std::string file;
    std::string path;
    std::string message;
};

std::vector<ReportEntry> cmd_validate(const ValidationPaths& paths);
nlohmann::json report_to_json(const std::vector<ReportEntry>& report);

}  // namespace motionforge
