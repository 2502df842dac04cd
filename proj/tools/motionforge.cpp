// motionforge command-line driver.
//
//   motionforge render      --config run.json [--seed N] [--workers N] [--out DIR]
//   motionforge edit-motion --config run.json [--t-edit T]
//   motionforge edit-camera --config run.json [--delta-rot x,y,z] [--delta-t x,y,z]
//   motionforge validate    [--config run.json] [--model M] [--motion F] [--track T] [--reference R]
//
// Exit codes: 0 ok, 2 config error, 3 input missing, 4 contract violation,
// 5 internal error. Failures print one JSON error record on stderr.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "motionforge/error.hpp"
#include "motionforge/pipeline.hpp"

namespace {

using nlohmann::json;
namespace mf = motionforge;

int report_error(mf::ErrorCode code, const std::string& message) {
    const json record = {{"error",
                          {{"code", static_cast<int>(code)},
                           {"kind", std::string(mf::error_kind(code))},
                           {"message", message}}}};
    std::cerr << record.dump() << std::endl;
    return static_cast<int>(code);
}

struct CommonFlags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    std::optional<double> t_edit;
    std::vector<double> delta_rot;
    std::vector<double> delta_t;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config, "Pipeline config document");
    cmd->add_option("--seed", flags.seed, "Seed for all randomness");
    cmd->add_option("--workers", flags.workers, "Frame-level worker count (0 = logical cores)");
    cmd->add_option("--out", flags.out, "Output directory");
}

mf::PipelineConfig build_config(const CommonFlags& flags) {
    json overrides = json::object();
    if (flags.seed) overrides["seed"] = *flags.seed;
    if (flags.workers) overrides["workers"] = *flags.workers;
    if (flags.out) overrides["paths"]["output_dir"] = *flags.out;
    if (flags.t_edit) overrides["editing"]["t_edit"] = *flags.t_edit;
    if (!flags.delta_rot.empty()) overrides["editing"]["camera"]["delta_rot"] = flags.delta_rot;
    if (!flags.delta_t.empty()) overrides["editing"]["camera"]["delta_T"] = flags.delta_t;
    std::optional<std::filesystem::path> file;
    if (flags.config) file = *flags.config;
    return mf::PipelineConfig::from_json(mf::merge_config_layers(file, mf::motionforge_environment(), overrides));
}

void print_result(const mf::RunResult& result) {
    std::cout << json{{"status", "ok"},
                      {"manifest", result.manifest_path.string()},
                      {"frames", result.frame_paths.size()}}
                     .dump()
              << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"motionforge: body-mesh conditioning videos and diffusion-side utilities"};
    app.set_version_flag("--version", mf::tool_version());
    app.require_subcommand(1);

    CommonFlags render_flags, motion_flags, camera_flags;
    auto* render = app.add_subcommand("render", "Pose, align, project and rasterize a conditioning video");
    add_common(render, render_flags);

    auto* edit_motion = app.add_subcommand("edit-motion", "Re-noise and regenerate the motion, then render it");
    add_common(edit_motion, motion_flags);
    edit_motion->add_option("--t-edit", motion_flags.t_edit, "Re-noising timestep in [0, 1]");

    auto* edit_camera = app.add_subcommand("edit-camera", "Perturb every frame's extrinsics, then render");
    add_common(edit_camera, camera_flags);
    edit_camera->add_option("--delta-rot", camera_flags.delta_rot, "Axis-angle rotation x,y,z (radians)")
        ->delimiter(',')
        ->expected(3);
    edit_camera->add_option("--delta-t", camera_flags.delta_t, "Translation x,y,z (metres)")->delimiter(',')->expected(3);

    std::optional<std::string> v_config, v_model, v_motion, v_track, v_reference;
    auto* validate = app.add_subcommand("validate", "Check model, motion, and track files");
    validate->add_option("--config", v_config, "Take paths from a pipeline config");
    validate->add_option("--model", v_model, "Body model file");
    validate->add_option("--motion", v_motion, "Motion file");
    validate->add_option("--track", v_track, "Camera-track file");
    validate->add_option("--reference", v_reference, "Reference vertices file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(mf::ErrorCode::config, e.what());
    }

    try {
        if (*render) {
            print_result(mf::cmd_render(build_config(render_flags)));
        } else if (*edit_motion) {
            print_result(mf::cmd_edit_motion(build_config(motion_flags)));
        } else if (*edit_camera) {
            print_result(mf::cmd_edit_camera(build_config(camera_flags)));
        } else if (*validate) {
            mf::ValidationPaths paths;
            if (v_config) {
                const auto doc = mf::merge_config_layers(std::filesystem::path(*v_config), mf::motionforge_environment(),
                                                         json(nullptr));
                const auto cfg = mf::PipelineConfig::from_json(doc);
                if (!cfg.paths.model.empty()) paths.model = cfg.paths.model;
                if (!cfg.paths.motion.empty()) paths.motion = cfg.paths.motion;
                if (!cfg.paths.camera_track.empty()) paths.camera_track = cfg.paths.camera_track;
                paths.reference = cfg.reference.vertices;
            }
            if (v_model) paths.model = *v_model;
            if (v_motion) paths.motion = *v_motion;
            if (v_track) paths.camera_track = *v_track;
            if (v_reference) paths.reference = *v_reference;
            const auto report = mf::cmd_validate(paths);
            std::cout << mf::report_to_json(report).dump(2) << std::endl;
            return report.empty() ? 0 : static_cast<int>(mf::ErrorCode::contract);
        }
    } catch (const mf::Error& e) {
        return report_error(e.code(), e.what());
    } catch (const std::exception& e) {
        return report_error(mf::ErrorCode::internal, e.what());
    }
    return 0;
}
