#include "motionforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "motionforge/denoiser.hpp"
#include "motionforge/digest.hpp"
#include "motionforge/error.hpp"
#include "motionforge/image_io.hpp"
#include "motionforge/json_util.hpp"
#include "motionforge/motion.hpp"
#include "motionforge/rotation.hpp"

extern char** environ;

namespace motionforge {

using nlohmann::json;
namespace fs = std::filesystem;

#ifndef MOTIONFORGE_VERSION
#define MOTIONFORGE_VERSION "0.0.0"
#endif

std::string tool_version() { return MOTIONFORGE_VERSION; }

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr const char* kManifestName = "manifest.json";
constexpr const char* kPointsName = "points.jsonl";
constexpr const char* kEditedMotionName = "edited_motion.json";
constexpr const char* kEditedTrackName = "edited_camera_track.json";
constexpr const char* kStagingName = ".staging";

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from(const json& node, const std::string& where) {
    if (!node.is_array() || node.size() != 3) fail(ErrorCode::config, where + ": expected 3 numbers");
    for (const auto& x : node)
        if (!x.is_number()) fail(ErrorCode::config, where + ": expected 3 numbers");
    return Eigen::Vector3d(node[0].get<double>(), node[1].get<double>(), node[2].get<double>());
}

template <typename T>
void read_opt(const json& node, const char* key, T& target) {
    if (node.contains(key) && !node[key].is_null()) target = node[key].get<T>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

PipelineConfig PipelineConfig::from_json(const json& doc) {
    PipelineConfig c;
    if (!doc.is_object()) fail(ErrorCode::config, "config must be an object");
    try {
        if (doc.contains("paths")) {
            const auto& p = doc["paths"];
            if (p.contains("model")) c.paths.model = p["model"].get<std::string>();
            if (p.contains("motion")) c.paths.motion = p["motion"].get<std::string>();
            if (p.contains("camera_track")) c.paths.camera_track = p["camera_track"].get<std::string>();
            if (p.contains("output_dir")) c.paths.output_dir = p["output_dir"].get<std::string>();
        }
        if (doc.contains("render")) {
            const auto& r = doc["render"];
            read_opt(r, "width", c.render.width);
            read_opt(r, "height", c.render.height);
            read_opt(r, "near", c.render.near);
            if (r.contains("format")) {
                const auto f = r["format"].get<std::string>();
                if (f == "png") c.render.format = FrameFormat::png;
                else if (f == "ppm") c.render.format = FrameFormat::ppm;
                else fail(ErrorCode::config, "render.format: expected \"png\" or \"ppm\"");
            }
            if (r.contains("palette")) c.render.palette = palette_from_json(r["palette"]);
            if (r.contains("lighting")) c.render.lighting = lighting_from_json(r["lighting"]);
        }
        if (doc.contains("frames")) {
            const auto& f = doc["frames"];
            read_opt(f, "count", c.frames.count);
            read_opt(f, "fps", c.frames.fps);
        }
        if (doc.contains("schedule")) {
            const auto& s = doc["schedule"];
            if (s.contains("timestep")) {
                const auto& t = s["timestep"];
                read_opt(t, "mean", c.timestep.mean);
                read_opt(t, "std", c.timestep.stddev);
                read_opt(t, "lo", c.timestep.lo);
                read_opt(t, "hi", c.timestep.hi);
            }
            if (s.contains("noise_schedule") && s["noise_schedule"].contains("preset"))
                c.noise_schedule.preset = preset_from_name(s["noise_schedule"]["preset"].get<std::string>());
        }
        if (doc.contains("editing")) {
            const auto& e = doc["editing"];
            if (e.contains("t_edit") && !e["t_edit"].is_null()) c.editing.t_edit = e["t_edit"].get<double>();
            read_opt(e, "steps", c.editing.steps);
            if (e.contains("denoiser")) {
                const auto& d = e["denoiser"];
                read_opt(d, "kind", c.editing.denoiser.kind);
                if (d.contains("family")) c.editing.denoiser.family = d["family"].get<std::string>();
                read_opt(d, "command", c.editing.denoiser.command);
            }
            if (e.contains("camera")) {
                const auto& cam = e["camera"];
                if (cam.contains("delta_rot") && !cam["delta_rot"].is_null())
                    c.editing.delta_rot = vec3_from(cam["delta_rot"], "editing.camera.delta_rot");
                if (cam.contains("delta_T") && !cam["delta_T"].is_null())
                    c.editing.delta_T = vec3_from(cam["delta_T"], "editing.camera.delta_T");
            }
        }
        if (doc.contains("reference")) {
            const auto& r = doc["reference"];
            if (r.contains("vertices") && !r["vertices"].is_null()) c.reference.vertices = r["vertices"].get<std::string>();
            read_opt(r, "stop_fraction", c.reference.stop_fraction);
            read_opt(r, "total_steps", c.reference.total_steps);
            read_opt(r, "pelvis_joint", c.reference.align.pelvis_joint);
            read_opt(r, "yaw_align", c.reference.align.yaw);
            read_opt(r, "left_hip", c.reference.align.left_hip);
            read_opt(r, "right_hip", c.reference.align.right_hip);
        }
        if (doc.contains("vdm")) {
            read_opt(doc["vdm"], "guidance_scale", c.guidance_scale);
            read_opt(doc["vdm"], "pose_guidance_scale", c.pose_guidance_scale);
        }
        read_opt(doc, "seed", c.seed);
        read_opt(doc, "workers", c.workers);
    } catch (const json::exception& e) {
        fail(ErrorCode::config, std::string("config type error: ") + e.what());
    } catch (const Error& e) {
        // palette/lighting/preset parsing reports config errors already
        if (e.code() != ErrorCode::config) fail(ErrorCode::config, e.what());
        throw;
    }
    return c;
}

json PipelineConfig::to_json() const {
    json editing_doc = {{"t_edit", editing.t_edit ? json(*editing.t_edit) : json(nullptr)},
                    {"steps", editing.steps},
                    {"denoiser",
                     {{"kind", editing.denoiser.kind},
                      {"family", editing.denoiser.family.string()},
                      {"command", editing.denoiser.command}}},
                    {"camera",
                     {{"delta_rot", editing.delta_rot ? vec3_json(*editing.delta_rot) : json(nullptr)},
                      {"delta_T", editing.delta_T ? vec3_json(*editing.delta_T) : json(nullptr)}}}};
    return {
        {"paths",
         {{"model", paths.model.string()},
          {"motion", paths.motion.string()},
          {"camera_track", paths.camera_track.string()},
          {"output_dir", paths.output_dir.string()}}},
        {"render",
         {{"width", render.width},
          {"height", render.height},
          {"format", render.format == FrameFormat::png ? "png" : "ppm"},
          {"near", render.near},
          {"palette", palette_to_json(render.palette)},
          {"lighting", lighting_to_json(render.lighting)}}},
        {"frames", {{"count", frames.count}, {"fps", frames.fps}}},
        {"schedule",
         {{"timestep", {{"mean", timestep.mean}, {"std", timestep.stddev}, {"lo", timestep.lo}, {"hi", timestep.hi}}},
          {"noise_schedule", {{"preset", std::string(preset_name(noise_schedule.preset))}}}}},
        {"editing", editing_doc},
        {"reference",
         {{"vertices", reference.vertices ? json(reference.vertices->string()) : json(nullptr)},
          {"stop_fraction", reference.stop_fraction},
          {"total_steps", reference.total_steps},
          {"pelvis_joint", reference.align.pelvis_joint},
          {"yaw_align", reference.align.yaw},
          {"left_hip", reference.align.left_hip},
          {"right_hip", reference.align.right_hip}}},
        {"vdm", {{"guidance_scale", guidance_scale}, {"pose_guidance_scale", pose_guidance_scale}}},
        {"seed", seed},
        {"workers", workers},
    };
}

void PipelineConfig::validate() const {
    if (paths.model.empty()) fail(ErrorCode::config, "paths.model is required");
    if (paths.motion.empty()) fail(ErrorCode::config, "paths.motion is required");
    if (paths.camera_track.empty()) fail(ErrorCode::config, "paths.camera_track is required");
    if (paths.output_dir.empty()) fail(ErrorCode::config, "paths.output_dir is required");
    if (render.width < 1 || render.height < 1) fail(ErrorCode::config, "render resolution must be positive");
    if (!(render.near > 0.0)) fail(ErrorCode::config, "render.near must be positive");
    render.palette.validate();
    render.lighting.validate();
    if (frames.count < 1) fail(ErrorCode::config, "frames.count must be >= 1");
    if (!(frames.fps > 0.0)) fail(ErrorCode::config, "frames.fps must be positive");
    timestep.validate();
    if (editing.t_edit && !(*editing.t_edit >= 0.0 && *editing.t_edit <= 1.0))
        fail(ErrorCode::config, "editing.t_edit must lie in [0, 1]");
    if (editing.steps < 1) fail(ErrorCode::config, "editing.steps must be >= 1");
    if (editing.delta_rot && !(editing.delta_rot->norm() < kPi))
        fail(ErrorCode::config, "editing.camera.delta_rot magnitude must be below pi");
    if (editing.denoiser.kind != "linear-family" && editing.denoiser.kind != "external")
        fail(ErrorCode::config, "editing.denoiser.kind must be \"linear-family\" or \"external\"");
    reference_stop_step(reference.total_steps, reference.stop_fraction);
    if (reference.align.pelvis_joint < 0) fail(ErrorCode::config, "reference.pelvis_joint must be >= 0");
}

std::map<std::string, std::string> motionforge_environment() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        const auto key = entry.substr(0, eq);
        if (key.rfind("MOTIONFORGE_", 0) == 0) out[key] = entry.substr(eq + 1);
    }
    return out;
}

json merge_config_layers(const std::optional<fs::path>& file, const std::map<std::string, std::string>& environment,
                         const json& overrides) {
    json doc = json::object();
    if (file) {
        try {
            doc = jsonutil::read_json_file(*file);
        } catch (const Error& e) {
            fail(e.code() == ErrorCode::input_missing ? ErrorCode::config : e.code(),
                 std::string("config file: ") + e.what());
        }
        if (!doc.is_object()) fail(ErrorCode::config, "config file must hold an object");
    }
    constexpr std::string_view prefix = "MOTIONFORGE_";
    for (const auto& [key, raw] : environment) {
        if (key.rfind(prefix, 0) != 0 || key.size() == prefix.size()) continue;
        std::string rest = key.substr(prefix.size());
        std::transform(rest.begin(), rest.end(), rest.begin(), [](unsigned char ch) { return std::tolower(ch); });
        std::string pointer;
        for (std::size_t pos = 0;;) {
            const auto next = rest.find("__", pos);
            pointer += "/" + rest.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
            if (next == std::string::npos) break;
            pos = next + 2;
        }
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        json patch = json::object();
        patch[json::json_pointer(pointer)] = value;
        doc.merge_patch(patch);
    }
    if (!overrides.is_null()) doc.merge_patch(overrides);
    return doc;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

void require_file(const fs::path& path, const char* what) {
    if (!fs::is_regular_file(path)) fail(ErrorCode::input_missing, std::string("input missing: ") + what + " " + path.string());
}

json file_entry(const fs::path& path) { return {{"path", path.string()}, {"sha256", sha256_file(path)}}; }

std::string frame_name(std::size_t i, FrameFormat format) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%04zu.%s", i, format == FrameFormat::png ? "png" : "ppm");
    return buf;
}

bool is_frame_file(const fs::path& p) {
    const auto name = p.filename().string();
    return name.rfind("frame_", 0) == 0 && (p.extension() == ".png" || p.extension() == ".ppm");
}

unsigned worker_count(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string points_jsonl(const ConditioningVideo& video) {
    std::string out;
    for (std::size_t f = 0; f < video.points.size(); ++f) {
        const auto& pts = video.points[f];
        for (std::size_t v = 0; v < pts.size(); ++v) {
            const double x = pts.pixels(static_cast<Eigen::Index>(v), 0);
            const double y = pts.pixels(static_cast<Eigen::Index>(v), 1);
            json rec = {{"frame", f},
                        {"vertex", v},
                        {"x", std::isnan(x) ? json(nullptr) : json(x)},
                        {"y", std::isnan(y) ? json(nullptr) : json(y)},
                        {"visible", pts.visible[v] != 0}};
            out += rec.dump();
            out += '\n';
        }
    }
    return out;
}

// Output directory transaction: files are staged, then moved into place; the
// manifest is written last and only on success.
class OutputTransaction {
public:
    explicit OutputTransaction(fs::path out) : out_(std::move(out)), staging_(out_ / kStagingName) {
        fs::create_directories(out_);
        fs::remove(out_ / kManifestName);
        fs::remove_all(staging_);
        fs::create_directories(staging_);
    }

    ~OutputTransaction() {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }

    fs::path stage(const std::string& name) {
        names_.push_back(name);
        return staging_ / name;
    }

    void commit(const json& manifest) {
        for (const auto& entry : fs::directory_iterator(out_))
            if (entry.is_regular_file() && is_frame_file(entry.path())) fs::remove(entry.path());
        for (const auto& name : names_) fs::rename(staging_ / name, out_ / name);
        fs::remove_all(staging_);
        jsonutil::write_json_file(out_ / kManifestName, manifest, 2);
    }

    const fs::path& dir() const { return out_; }

private:
    fs::path out_;
    fs::path staging_;
    std::vector<std::string> names_;
};

struct LoadedInputs {
    BodyModel model;
    MotionSequence motion;
    CameraTrack track;
    std::optional<std::vector<VertexFrame>> reference;
    json inputs = json::object();
};

LoadedInputs load_inputs(const PipelineConfig& config) {
    require_file(config.paths.model, "model");
    require_file(config.paths.motion, "motion");
    require_file(config.paths.camera_track, "camera track");
    if (config.reference.vertices) require_file(*config.reference.vertices, "reference vertices");
    if (config.editing.t_edit && config.editing.denoiser.kind == "linear-family" && !config.editing.denoiser.family.empty())
        require_file(config.editing.denoiser.family, "denoiser family");

    LoadedInputs in;
    in.model = load_model(config.paths.model);
    in.motion = load_motion(config.paths.motion, in.model.joint_count());
    in.track = load_camera_track(config.paths.camera_track);
    in.inputs["model"] = file_entry(config.paths.model);
    in.inputs["motion"] = file_entry(config.paths.motion);
    in.inputs["camera_track"] = file_entry(config.paths.camera_track);
    if (config.reference.vertices) {
        in.reference = load_reference_frames(*config.reference.vertices);
        in.inputs["reference"] = file_entry(*config.reference.vertices);
    }
    return in;
}

RunResult render_and_commit(const PipelineConfig& config, const std::string& command, const LoadedInputs& in,
                            const MotionSequence& motion, const CameraTrack& track, OutputTransaction& tx,
                            json outputs) {
    const MotionSequence video_motion =
        motion.frame_count() == config.frames.count && motion.fps == config.frames.fps
            ? motion
            : resample(motion, config.frames.count, config.frames.fps);
    if (in.reference && in.reference->size() != video_motion.frame_count())
        fail(ErrorCode::contract, "reference has " + std::to_string(in.reference->size()) +
                                      " frames but the resampled motion has " +
                                      std::to_string(video_motion.frame_count()));

    RenderOptions options;
    options.width = config.render.width;
    options.height = config.render.height;
    options.near = config.render.near;
    options.workers = worker_count(config.workers);
    options.reference = in.reference ? &*in.reference : nullptr;
    options.align = config.reference.align;
    const auto video = render_video(video_motion, in.model, track, config.render.palette, config.render.lighting, options);

    RunResult result;
    json frames = json::array();
    for (std::size_t i = 0; i < video.frame_count(); ++i) {
        const auto name = frame_name(i, config.render.format);
        const auto bytes = config.render.format == FrameFormat::png ? encode_png(video.frames[i]) : encode_ppm(video.frames[i]);
        write_file(tx.stage(name), bytes);
        frames.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}});
        result.frame_paths.push_back(tx.dir() / name);
    }
    const auto points = points_jsonl(video);
    write_file(tx.stage(kPointsName), points);
    outputs["frames"] = frames;
    outputs["points"] = {{"file", kPointsName}, {"sha256", sha256_hex(points)}};

    json prompts = nullptr;
    if (motion.manifest)
        prompts = {{"full_prompt", motion.manifest->full_prompt},
                   {"motion_prompt", motion.manifest->motion_prompt},
                   {"semantic_prompt", motion.manifest->semantic_prompt},
                   {"source", motion.manifest->source}};

    result.manifest = {
        {"tool", {{"name", "motionforge"}, {"version", tool_version()}}},
        {"command", command},
        {"config", config.to_json()},
        {"prompts", prompts},
        {"inputs", in.inputs},
        {"motion_digest", sha256_hex(motion_to_json(motion).dump())},
        {"outputs", outputs},
        {"render",
         {{"width", video.width},
          {"height", video.height},
          {"fps", video.fps},
          {"frame_count", video.frame_count()},
          {"palette", palette_to_json(config.render.palette)},
          {"lighting", lighting_to_json(config.render.lighting)}}},
        {"reference_stop_step",
         {{"total_steps", config.reference.total_steps},
          {"stop_fraction", config.reference.stop_fraction},
          {"stop_step", reference_stop_step(config.reference.total_steps, config.reference.stop_fraction)}}},
        {"vdm", {{"guidance_scale", config.guidance_scale}, {"pose_guidance_scale", config.pose_guidance_scale}}},
        {"seed", config.seed},
    };
    tx.commit(result.manifest);
    result.manifest_path = tx.dir() / kManifestName;
    return result;
}

std::unique_ptr<Denoiser> make_denoiser(const PipelineConfig& config) {
    const auto& d = config.editing.denoiser;
    if (d.kind == "external") return std::make_unique<ExternalProcessDenoiser>(d.command);
    if (d.family.empty()) fail(ErrorCode::config, "editing.denoiser.family is required for the linear-family denoiser");
    return std::make_unique<LinearFamilyDenoiser>(load_linear_family(d.family), config.noise_schedule);
}

}  // namespace

RunResult cmd_render(const PipelineConfig& config) {
    config.validate();
    OutputTransaction tx(config.paths.output_dir);
    const auto in = load_inputs(config);
    return render_and_commit(config, "render", in, in.motion, in.track, tx, json::object());
}

RunResult cmd_edit_motion(const PipelineConfig& config) {
    config.validate();
    if (!config.editing.t_edit) fail(ErrorCode::config, "editing.t_edit is required for edit-motion");
    OutputTransaction tx(config.paths.output_dir);
    const auto in = load_inputs(config);

    MotionSequence edited;
    if (*config.editing.t_edit == 0.0) {
        edited = in.motion;
    } else {
        auto denoiser = make_denoiser(config);
        Rng rng(derive_seed(config.seed, 0));
        edited = sdedit(in.motion, {*config.editing.t_edit, config.editing.steps, config.noise_schedule}, *denoiser, rng);
    }
    const auto text = motion_to_json(edited).dump() + "\n";
    write_file(tx.stage(kEditedMotionName), text);
    json outputs = {{"edited_motion", {{"file", kEditedMotionName}, {"sha256", sha256_hex(text)}}}};
    return render_and_commit(config, "edit-motion", in, edited, in.track, tx, outputs);
}

RunResult cmd_edit_camera(const PipelineConfig& config) {
    config.validate();
    OutputTransaction tx(config.paths.output_dir);
    const auto in = load_inputs(config);

    const Eigen::Vector3d delta_rot = config.editing.delta_rot.value_or(Eigen::Vector3d::Zero());
    const Eigen::Vector3d delta_T = config.editing.delta_T.value_or(Eigen::Vector3d::Zero());
    CameraTrack track = in.track;
    for (auto& f : track.frames) f.extrinsics = perturb(f.extrinsics, delta_rot, delta_T);

    const auto text = camera_track_to_json(track).dump() + "\n";
    write_file(tx.stage(kEditedTrackName), text);
    json outputs = {{"edited_camera_track", {{"file", kEditedTrackName}, {"sha256", sha256_hex(text)}}}};
    return render_and_commit(config, "edit-camera", in, in.motion, track, tx, outputs);
}

// ---------------------------------------------------------------------------
// Validation

std::vector<ReportEntry> cmd_validate(const ValidationPaths& paths) {
    std::vector<ReportEntry> report;
    auto add_all = [&](const std::string& file, const std::vector<Violation>& vs) {
        for (const auto& v : vs) report.push_back({file, v.path, v.message});
    };
    auto read = [&](const fs::path& path, const std::string& file) -> std::optional<json> {
        try {
            return jsonutil::read_json_file(path);
        } catch (const Error& e) {
            report.push_back({file, "", e.what()});
            return std::nullopt;
        }
    };

    std::optional<std::size_t> joint_count;
    if (paths.model) {
        if (auto doc = read(*paths.model, "model")) {
            try {
                const auto model = parse_model(*doc);
                const auto vs = model.violations();
                add_all("model", vs);
                if (vs.empty()) joint_count = model.joint_count();
            } catch (const Error& e) {
                report.push_back({"model", "", e.what()});
            }
        }
    }
    if (paths.motion)
        if (auto doc = read(*paths.motion, "motion")) add_all("motion", motion_violations(*doc, joint_count));
    if (paths.camera_track)
        if (auto doc = read(*paths.camera_track, "camera_track")) add_all("camera_track", camera_track_violations(*doc));
    if (paths.reference) {
        try {
            load_reference_frames(*paths.reference);
        } catch (const Error& e) {
            report.push_back({"reference", "", e.what()});
        }
    }
    return report;
}

json report_to_json(const std::vector<ReportEntry>& report) {
    json list = json::array();
    for (const auto& r : report) list.push_back({{"file", r.file}, {"path", r.path}, {"message", r.message}});
    return {{"clean", report.empty()}, {"violations", list}};
}

}  // namespace motionforge
