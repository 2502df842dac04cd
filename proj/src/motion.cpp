#include "motionforge/motion.hpp"

#include <cmath>

#include "motionforge/denoiser.hpp"
#include "motionforge/error.hpp"
#include "motionforge/json_util.hpp"

namespace motionforge {

using jsonutil::json;

bool MotionSequence::operator==(const MotionSequence& other) const {
    return fps == other.fps && frames == other.frames && betas == other.betas && manifest == other.manifest;
}

namespace {

constexpr std::size_t kMaxBetas = 10;

void check_vec(const json& frame, const std::string& key, const std::string& where, std::optional<std::size_t> expected,
               std::vector<Violation>& out, std::optional<std::size_t>* seen_size = nullptr) {
    const std::string path = where + "." + key;
    if (!frame.contains(key)) {
        out.push_back({path, "missing field"});
        return;
    }
    const auto& node = frame[key];
    if (!node.is_array()) {
        out.push_back({path, "expected array"});
        return;
    }
    for (const auto& v : node)
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            out.push_back({path, "non-finite or non-numeric value"});
            return;
        }
    if (expected && node.size() != *expected) {
        out.push_back({path, (key == "body_pose" ? "pose length mismatch (" : "wrong length (") +
                                 std::to_string(node.size()) + ", expected " + std::to_string(*expected) + ")"});
        return;
    }
    if (seen_size) {
        if (node.size() % 3 != 0) {
            out.push_back({path, "pose length mismatch (" + std::to_string(node.size()) + " is not a multiple of 3)"});
            return;
        }
        if (!*seen_size) *seen_size = node.size();
        else if (**seen_size != node.size())
            out.push_back({path, "pose length mismatch (" + std::to_string(node.size()) + ", earlier frames have " +
                                     std::to_string(**seen_size) + ")"});
    }
}

Eigen::Vector3d vec3(const json& node) {
    return Eigen::Vector3d(node[0].get<double>(), node[1].get<double>(), node[2].get<double>());
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

}  // namespace

std::vector<Violation> motion_violations(const json& doc, std::optional<std::size_t> joint_count) {
    std::vector<Violation> out;
    if (!doc.is_object()) {
        out.push_back({"", "motion document must be an object"});
        return out;
    }
    if (!doc.contains("fps") || !doc["fps"].is_number() || !(doc["fps"].get<double>() > 0.0) ||
        !std::isfinite(doc["fps"].get<double>()))
        out.push_back({"fps", "fps must be a positive number"});
    if (doc.contains("betas")) {
        const auto& betas = doc["betas"];
        if (!betas.is_array()) out.push_back({"betas", "expected array"});
        else {
            if (betas.size() > kMaxBetas) out.push_back({"betas", "at most 10 shape coefficients"});
            for (const auto& b : betas)
                if (!b.is_number() || !std::isfinite(b.get<double>())) {
                    out.push_back({"betas", "non-finite or non-numeric value"});
                    break;
                }
        }
    }
    if (!doc.contains("frames") || !doc["frames"].is_array()) {
        out.push_back({"frames", "expected array"});
        return out;
    }
    const auto& frames = doc["frames"];
    if (frames.empty()) out.push_back({"frames", "empty sequence"});
    std::optional<std::size_t> pose_len;
    if (joint_count && *joint_count > 0) pose_len = 3 * (*joint_count - 1);
    std::optional<std::size_t> seen;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const std::string where = "frames[" + std::to_string(k) + "]";
        if (!frames[k].is_object()) {
            out.push_back({where, "expected object"});
            continue;
        }
        check_vec(frames[k], "global_orient", where, 3, out);
        check_vec(frames[k], "body_pose", where, pose_len, out, &seen);
        check_vec(frames[k], "transl", where, 3, out);
    }
    if (doc.contains("manifest") && !doc["manifest"].is_null()) {
        const auto& m = doc["manifest"];
        if (!m.is_object()) out.push_back({"manifest", "expected object"});
        else
            for (const char* key : {"full_prompt", "motion_prompt", "semantic_prompt", "source"})
                if (m.contains(key) && !m[key].is_string())
                    out.push_back({std::string("manifest.") + key, "expected string"});
    }
    return out;
}

MotionSequence motion_from_json(const json& doc, std::optional<std::size_t> joint_count) {
    const auto violations = motion_violations(doc, joint_count);
    if (!violations.empty()) {
        const auto& v = violations.front();
        fail(ErrorCode::contract, "invalid motion: " + (v.path.empty() ? "" : v.path + ": ") + v.message);
    }
    MotionSequence m;
    m.fps = doc["fps"].get<double>();
    if (doc.contains("betas")) m.betas = doc["betas"].get<std::vector<double>>();
    for (const auto& f : doc["frames"]) {
        PoseFrame frame;
        frame.global_orient = vec3(f["global_orient"]);
        const auto body = f["body_pose"].get<std::vector<double>>();
        frame.body_pose = Eigen::Map<const Vector>(body.data(), static_cast<Eigen::Index>(body.size()));
        frame.translation = vec3(f["transl"]);
        m.frames.push_back(std::move(frame));
    }
    if (doc.contains("manifest") && doc["manifest"].is_object()) {
        const auto& j = doc["manifest"];
        PipelineManifest pm;
        pm.full_prompt = j.value("full_prompt", "");
        pm.motion_prompt = j.value("motion_prompt", "");
        pm.semantic_prompt = j.value("semantic_prompt", "");
        pm.source = j.value("source", "");
        if (pm.source == "t2m" && pm.motion_prompt.empty())
            fail(ErrorCode::contract, "invalid motion: manifest.motion_prompt: required for T2M provenance");
        m.manifest = pm;
    }
    return m;
}

json motion_to_json(const MotionSequence& motion) {
    json frames = json::array();
    for (const auto& f : motion.frames)
        frames.push_back({{"global_orient", vec_json(f.global_orient)},
                          {"body_pose", vec_json(f.body_pose)},
                          {"transl", vec_json(f.translation)}});
    json doc = {{"fps", motion.fps}, {"betas", motion.betas}, {"frames", frames}};
    if (motion.manifest) {
        const auto& pm = *motion.manifest;
        doc["manifest"] = {{"full_prompt", pm.full_prompt},
                           {"motion_prompt", pm.motion_prompt},
                           {"semantic_prompt", pm.semantic_prompt},
                           {"source", pm.source}};
    }
    return doc;
}

MotionSequence load_motion(const std::filesystem::path& path, std::optional<std::size_t> joint_count) {
    try {
        return motion_from_json(jsonutil::read_json_file(path), joint_count);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::contract) fail(e.code(), path.string() + ": " + e.what());
        throw;
    }
}

void save_motion(const MotionSequence& motion, const std::filesystem::path& path) {
    jsonutil::write_json_file(path, motion_to_json(motion));
}

std::size_t resample_index(std::size_t k, std::size_t source_count, std::size_t target_count) {
    if (target_count <= 1 || source_count <= 1) return 0;
    // round half away from zero of k (K-1) / (T-1), in exact integer arithmetic
    const std::uint64_t num = static_cast<std::uint64_t>(k) * (source_count - 1);
    const std::uint64_t den = target_count - 1;
    return static_cast<std::size_t>((2 * num + den) / (2 * den));
}

MotionSequence resample(const MotionSequence& motion, std::size_t target_frame_count, double target_fps) {
    if (target_frame_count < 1) fail(ErrorCode::contract, "resample: target frame count must be >= 1");
    if (motion.frames.empty()) fail(ErrorCode::contract, "resample: empty sequence");
    if (target_frame_count == motion.frame_count() && target_fps == motion.fps) return motion;
    MotionSequence out;
    out.fps = target_fps;
    out.betas = motion.betas;
    out.manifest = motion.manifest;
    out.frames.reserve(target_frame_count);
    for (std::size_t k = 0; k < target_frame_count; ++k)
        out.frames.push_back(motion.frames[resample_index(k, motion.frame_count(), target_frame_count)]);
    return out;
}

PoseVectors flatten(const MotionSequence& motion) {
    const auto rows = static_cast<Eigen::Index>(motion.frame_count());
    const auto cols = static_cast<Eigen::Index>(motion.vector_size());
    PoseVectors out(rows, cols);
    const Eigen::Index body = cols - 6;
    for (Eigen::Index k = 0; k < rows; ++k) {
        const auto& f = motion.frames[k];
        if (f.body_pose.size() != body) fail(ErrorCode::contract, "flatten: frames differ in dimensionality");
        out.row(k).segment<3>(0) = f.global_orient.transpose();
        out.row(k).segment(3, body) = f.body_pose.transpose();
        out.row(k).segment<3>(3 + body) = f.translation.transpose();
    }
    return out;
}

MotionSequence unflatten(const PoseVectors& vectors, const MotionSequence& layout) {
    const auto cols = static_cast<Eigen::Index>(layout.vector_size());
    if (vectors.cols() != cols)
        fail(ErrorCode::contract, "unflatten: vector length " + std::to_string(vectors.cols()) + ", expected " +
                                      std::to_string(cols));
    MotionSequence out;
    out.fps = layout.fps;
    out.betas = layout.betas;
    out.manifest = layout.manifest;
    const Eigen::Index body = cols - 6;
    out.frames.reserve(static_cast<std::size_t>(vectors.rows()));
    for (Eigen::Index k = 0; k < vectors.rows(); ++k) {
        PoseFrame f;
        f.global_orient = vectors.row(k).segment<3>(0).transpose();
        f.body_pose = vectors.row(k).segment(3, body).transpose();
        f.translation = vectors.row(k).segment<3>(3 + body).transpose();
        out.frames.push_back(std::move(f));
    }
    return out;
}

MotionSequence sdedit(const MotionSequence& motion, const SdeditOptions& options, Denoiser& denoiser, Rng& rng) {
    if (!(options.t_edit >= 0.0 && options.t_edit <= 1.0)) fail(ErrorCode::contract, "sdedit: t_edit outside [0, 1]");
    if (options.steps < 1) fail(ErrorCode::contract, "sdedit: steps must be >= 1");
    if (options.t_edit == 0.0) return motion;

    const PoseVectors clean = flatten(motion);
    Matrix x = forward_noise(clean, options.t_edit, options.schedule, rng);
    const double steps = options.steps;
    for (int k = 0; k < options.steps; ++k) {
        const double t = options.t_edit * (steps - k) / steps;
        const double t_next = options.t_edit * (steps - k - 1) / steps;
        Matrix predicted = denoiser.predict(x, t);
        if (!predicted.allFinite()) fail(ErrorCode::contract, "sdedit: denoiser returned non-finite values");
        const double abar = options.schedule.alpha_bar(t);
        if (k + 1 == options.steps || !(abar < 1.0)) {
            x = std::move(predicted);
            continue;
        }
        const double abar_next = options.schedule.alpha_bar(t_next);
        const Matrix eps = (x - std::sqrt(abar) * predicted) / std::sqrt(1.0 - abar);
        x = std::sqrt(abar_next) * predicted + std::sqrt(1.0 - abar_next) * eps;
    }
    return unflatten(x, motion);
}

}  // namespace motionforge
