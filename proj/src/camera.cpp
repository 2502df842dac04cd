#include "motionforge/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "motionforge/error.hpp"
#include "motionforge/json_util.hpp"
#include "motionforge/rotation.hpp"

namespace motionforge {

using jsonutil::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRotationTolerance = 1e-9;
constexpr double kBoxTolerance = 1e-9;

std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
        fail(ErrorCode::contract, "intrinsics: focal lengths must be positive");
    if (width < 1 || height < 1) fail(ErrorCode::contract, "intrinsics: zero-area image");
    if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height))
        fail(ErrorCode::contract, "intrinsics: principal point outside the image");
}

Intrinsics Intrinsics::rescaled(int new_width, int new_height) const {
    if (new_width == width && new_height == height) return *this;
    const double sx = static_cast<double>(new_width) / width;
    const double sy = static_cast<double>(new_height) / height;
    return Intrinsics{fx * sx, fy * sy, cx * sx, cy * sy, new_width, new_height};
}

void Extrinsics::validate() const {
    if (!R.allFinite() || !T.allFinite()) fail(ErrorCode::contract, "extrinsics: non-finite values");
    const double err = orthonormality_error(R);
    if (err > kRotationTolerance) fail(ErrorCode::contract, "extrinsics: R not a rotation (error " + num(err) + ")");
}

Intrinsics CameraTrack::frame_intrinsics(std::size_t i) const {
    const auto& f = frames.at(i);
    if (space == IntrinsicsSpace::frame) return f.intrinsics;
    return reparameterize_intrinsics(f.intrinsics, crop_side, f.bbox, f.intrinsics.width, f.intrinsics.height);
}

// ---------------------------------------------------------------------------
// Track files

std::vector<Violation> camera_track_violations(const json& doc) {
    std::vector<Violation> out;
    if (!doc.is_object()) {
        out.push_back({"", "camera track must be an object"});
        return out;
    }
    double crop_side = kDefaultCropSide;
    if (doc.contains("crop_side")) {
        if (!doc["crop_side"].is_number() || !(doc["crop_side"].get<double>() > 0.0))
            out.push_back({"crop_side", "crop_side must be positive"});
        else crop_side = doc["crop_side"].get<double>();
    }
    bool crop_space = true;
    if (doc.contains("intrinsics_space")) {
        const auto& s = doc["intrinsics_space"];
        if (!s.is_string() || (s != "crop" && s != "frame"))
            out.push_back({"intrinsics_space", "expected \"crop\" or \"frame\""});
        else crop_space = s == "crop";
    }
    if (!doc.contains("frames") || !doc["frames"].is_array()) {
        out.push_back({"frames", "expected array"});
        return out;
    }
    const auto& frames = doc["frames"];
    if (frames.empty()) out.push_back({"frames", "track needs at least one frame"});
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string where = "frames[" + std::to_string(i) + "]";
        const auto& f = frames[i];
        if (!f.is_object()) {
            out.push_back({where, "expected object"});
            continue;
        }
        auto numbers = [&](const char* key, std::size_t n) -> std::vector<double> {
            if (!f.contains(key) || !f[key].is_array() || f[key].size() != n) {
                out.push_back({where + "." + key, "expected " + std::to_string(n) + " numbers"});
                return {};
            }
            std::vector<double> v;
            for (const auto& x : f[key]) {
                if (!x.is_number() || !std::isfinite(x.get<double>())) {
                    out.push_back({where + "." + key, "non-finite or non-numeric value"});
                    return {};
                }
                v.push_back(x.get<double>());
            }
            return v;
        };
        auto scalar = [&](const char* key) -> std::optional<double> {
            if (!f.contains(key) || !f[key].is_number() || !std::isfinite(f[key].get<double>())) {
                out.push_back({where + "." + key, "expected number"});
                return std::nullopt;
            }
            return f[key].get<double>();
        };
        const auto R = numbers("R", 9);
        if (R.size() == 9) {
            const Eigen::Matrix3d m = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R.data());
            const double err = orthonormality_error(m);
            if (err > kRotationTolerance)
                out.push_back({where + ".R", "frame " + std::to_string(i) + ": R not orthonormal (error " + num(err) + ")"});
        }
        numbers("T", 3);
        const auto fx = scalar("fx");
        const auto fy = scalar("fy");
        const auto cx = scalar("cx");
        const auto cy = scalar("cy");
        const auto width = scalar("width");
        const auto height = scalar("height");
        if ((fx && !(*fx > 0.0)) || (fy && !(*fy > 0.0)))
            out.push_back({where, "frame " + std::to_string(i) + ": focal lengths must be positive"});
        if (width && height && (*width < 1 || *height < 1))
            out.push_back({where, "frame " + std::to_string(i) + ": zero-area image"});
        if (cx && cy && width && height) {
            const double pw = crop_space ? crop_side : *width;
            const double ph = crop_space ? crop_side : *height;
            if (!(*cx >= 0.0 && *cx <= pw && *cy >= 0.0 && *cy <= ph))
                out.push_back({where, "frame " + std::to_string(i) + ": principal point outside the image"});
        }
        const auto bbox = numbers("bbox", 4);
        if (bbox.size() == 4 && width && height) {
            if (!(bbox[2] > 0.0 && bbox[3] > 0.0))
                out.push_back({where + ".bbox", "frame " + std::to_string(i) + ": degenerate bbox"});
            else if (bbox[0] < -kBoxTolerance || bbox[1] < -kBoxTolerance || bbox[0] + bbox[2] > *width + kBoxTolerance ||
                     bbox[1] + bbox[3] > *height + kBoxTolerance)
                out.push_back({where + ".bbox", "frame " + std::to_string(i) + ": bbox outside the frame"});
        }
    }
    return out;
}

CameraTrack camera_track_from_json(const json& doc) {
    const auto violations = camera_track_violations(doc);
    if (!violations.empty())
        fail(ErrorCode::contract, "invalid camera track: " + violations.front().path + ": " + violations.front().message);
    CameraTrack track;
    track.crop_side = doc.value("crop_side", kDefaultCropSide);
    track.space = doc.value("intrinsics_space", std::string("crop")) == "frame" ? IntrinsicsSpace::frame : IntrinsicsSpace::crop;
    for (const auto& f : doc["frames"]) {
        CameraFrame cf;
        const auto R = f["R"].get<std::vector<double>>();
        cf.extrinsics.R = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R.data());
        const auto T = f["T"].get<std::vector<double>>();
        cf.extrinsics.T = Eigen::Vector3d(T[0], T[1], T[2]);
        cf.intrinsics = Intrinsics{f["fx"].get<double>(), f["fy"].get<double>(), f["cx"].get<double>(),
                                   f["cy"].get<double>(), f["width"].get<int>(), f["height"].get<int>()};
        const auto b = f["bbox"].get<std::vector<double>>();
        cf.bbox = BBox{b[0], b[1], b[2], b[3]};
        track.frames.push_back(cf);
    }
    return track;
}

json camera_track_to_json(const CameraTrack& track) {
    json frames = json::array();
    for (const auto& f : track.frames) {
        std::vector<double> R(9);
        Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R.data()) = f.extrinsics.R;
        frames.push_back({{"R", R},
                          {"T", {f.extrinsics.T.x(), f.extrinsics.T.y(), f.extrinsics.T.z()}},
                          {"fx", f.intrinsics.fx},
                          {"fy", f.intrinsics.fy},
                          {"cx", f.intrinsics.cx},
                          {"cy", f.intrinsics.cy},
                          {"width", f.intrinsics.width},
                          {"height", f.intrinsics.height},
                          {"bbox", {f.bbox.x, f.bbox.y, f.bbox.w, f.bbox.h}}});
    }
    return {{"crop_side", track.crop_side},
            {"intrinsics_space", track.space == IntrinsicsSpace::crop ? "crop" : "frame"},
            {"frames", frames}};
}

CameraTrack load_camera_track(const std::filesystem::path& path) {
    try {
        return camera_track_from_json(jsonutil::read_json_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::contract) fail(e.code(), path.string() + ": " + e.what());
        throw;
    }
}

void save_camera_track(const CameraTrack& track, const std::filesystem::path& path) {
    jsonutil::write_json_file(path, camera_track_to_json(track));
}

// ---------------------------------------------------------------------------

Points2D project(const Points3& vertices, const Intrinsics& intr, const Extrinsics& extr, double near) {
    if (!(near > 0.0)) fail(ErrorCode::contract, "project: near plane must be positive");
    if (!vertices.allFinite()) fail(ErrorCode::contract, "project: non-finite vertices");
    const auto n = vertices.rows();
    Points2D out;
    out.pixels.resize(n, 2);
    out.visible.assign(static_cast<std::size_t>(n), 0);
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector3d q = extr.R * vertices.row(i).transpose() + extr.T;
        if (q.z() < near) {
            out.pixels.row(i) << nan, nan;
            continue;
        }
        const double x = intr.fx * q.x() / q.z() + intr.cx;
        const double y = intr.fy * q.y() / q.z() + intr.cy;
        out.pixels.row(i) << x, y;
        out.visible[i] = x >= 0.0 && x < intr.width && y >= 0.0 && y < intr.height;
    }
    return out;
}

Intrinsics reparameterize_intrinsics(const Intrinsics& base, double crop_side, const BBox& bbox, int width, int height) {
    if (!(crop_side > 0.0)) fail(ErrorCode::contract, "reparameterize_intrinsics: crop side must be positive");
    if (!(bbox.w > 0.0) || !(bbox.h > 0.0)) fail(ErrorCode::contract, "reparameterize_intrinsics: degenerate bbox");
    if (bbox.x < -kBoxTolerance || bbox.y < -kBoxTolerance || bbox.x + bbox.w > width + kBoxTolerance ||
        bbox.y + bbox.h > height + kBoxTolerance)
        fail(ErrorCode::contract, "reparameterize_intrinsics: bbox outside the frame");
    Intrinsics out{base.fx * (bbox.w / crop_side), base.fy * (bbox.h / crop_side), bbox.x + 0.5 * bbox.w,
                   bbox.y + 0.5 * bbox.h, width, height};
    out.validate();
    return out;
}

namespace {

// Heading of the hip line in the camera's horizontal (x, z) plane.
double hip_heading(const Points3& joints, const AlignOptions& o) {
    const Eigen::Vector3d d = joints.row(o.left_hip) - joints.row(o.right_hip);
    return std::atan2(d.z(), d.x());
}

}  // namespace

std::vector<VertexFrame> align_to_reference(const std::vector<VertexFrame>& gen, const std::vector<VertexFrame>& ref,
                                            const AlignOptions& options) {
    if (gen.size() != ref.size())
        fail(ErrorCode::contract, "align_to_reference: frame-count mismatch (" + std::to_string(gen.size()) + " vs " +
                                      std::to_string(ref.size()) + ")");
    const int p = options.pelvis_joint;
    std::vector<VertexFrame> out;
    out.reserve(gen.size());
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const auto& g = gen[i];
        const auto& r = ref[i];
        if (p < 0 || p >= g.joints.rows() || p >= r.joints.rows())
            fail(ErrorCode::contract, "align_to_reference: pelvis joint " + std::to_string(p) + " missing in frame " +
                                          std::to_string(i));
        VertexFrame a = g;
        if (options.yaw) {
            const auto need = std::max(options.left_hip, options.right_hip);
            if (need >= g.joints.rows() || need >= r.joints.rows())
                fail(ErrorCode::contract, "align_to_reference: hip joints missing for yaw alignment");
            const double theta = hip_heading(g.joints, options) - hip_heading(r.joints, options);
            const Eigen::Matrix3d Ry = rodrigues(Eigen::Vector3d(0.0, theta, 0.0));
            const Eigen::RowVector3d pivot = g.joints.row(p);
            a.vertices = ((a.vertices.rowwise() - pivot) * Ry.transpose()).rowwise() + pivot;
            a.joints = ((a.joints.rowwise() - pivot) * Ry.transpose()).rowwise() + pivot;
        }
        const Eigen::RowVector3d delta = r.joints.row(p) - a.joints.row(p);
        a.vertices.rowwise() += delta;
        a.joints.rowwise() += delta;
        a.joints.row(p) = r.joints.row(p);
        out.push_back(std::move(a));
    }
    return out;
}

Extrinsics perturb(const Extrinsics& extr, const Eigen::Vector3d& delta_rot, const Eigen::Vector3d& delta_T) {
    if (!delta_rot.allFinite() || !delta_T.allFinite()) fail(ErrorCode::contract, "perturb: non-finite delta");
    if (!(delta_rot.norm() < kPi)) fail(ErrorCode::contract, "perturb: |delta_rot| must be below pi");
    Extrinsics out;
    out.R = rodrigues(delta_rot) * extr.R;
    out.T = extr.T + delta_T;
    return out;
}

int reference_stop_step(int total_steps, double stop_fraction) {
    if (total_steps < 1) fail(ErrorCode::config, "reference_stop_step: total_steps must be >= 1");
    if (!(stop_fraction > 0.0 && stop_fraction <= 1.0))
        fail(ErrorCode::config, "reference_stop_step: stop_fraction must be in (0, 1]");
    // absorb representation error such as 50 * 0.3 = 15.000000000000002
    const double steps = std::ceil(total_steps * stop_fraction - 1e-9);
    return std::clamp(static_cast<int>(steps), 1, total_steps);
}

std::vector<VertexFrame> load_reference_frames(const std::filesystem::path& path) {
    const auto doc = jsonutil::read_json_file(path);
    const auto& frames = jsonutil::require(doc, "frames", "");
    if (!frames.is_array() || frames.empty()) fail(ErrorCode::contract, path.string() + ": frames: empty sequence");
    std::vector<VertexFrame> out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string where = "frames[" + std::to_string(i) + "]";
        VertexFrame vf;
        const auto joints = jsonutil::read_f64_array(jsonutil::require(frames[i], "joints", where), where + ".joints");
        if (joints.empty() || joints.size() % 3 != 0 || !jsonutil::all_finite(joints))
            fail(ErrorCode::contract, path.string() + ": " + where + ".joints: expected finite 3-vectors");
        vf.joints = Eigen::Map<const Points3>(joints.data(), static_cast<Eigen::Index>(joints.size() / 3), 3);
        if (frames[i].contains("vertices")) {
            const auto verts = jsonutil::read_f64_array(frames[i]["vertices"], where + ".vertices");
            if (verts.size() % 3 != 0 || !jsonutil::all_finite(verts))
                fail(ErrorCode::contract, path.string() + ": " + where + ".vertices: expected finite 3-vectors");
            vf.vertices = Eigen::Map<const Points3>(verts.data(), static_cast<Eigen::Index>(verts.size() / 3), 3);
        }
        out.push_back(std::move(vf));
    }
    return out;
}

void save_reference_frames(const std::vector<VertexFrame>& frames, const std::filesystem::path& path) {
    json list = json::array();
    for (const auto& f : frames) {
        json entry = {{"joints", std::vector<double>(f.joints.data(), f.joints.data() + f.joints.size())}};
        if (f.vertices.size() > 0)
            entry["vertices"] = jsonutil::f64_blob(f.vertices.data(), static_cast<std::size_t>(f.vertices.size()),
                                                   {static_cast<std::size_t>(f.vertices.rows()), 3});
        list.push_back(entry);
    }
    jsonutil::write_json_file(path, json{{"frames", list}});
}

}  // namespace motionforge
