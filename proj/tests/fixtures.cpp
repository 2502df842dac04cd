#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "motionforge/digest.hpp"
#include "motionforge/json_util.hpp"

namespace fixtures {

namespace mf = motionforge;
using motionforge::Vector;

mf::MotionSequence chain_motion(std::size_t frames, double fps) {
    mf::MotionSequence m;
    m.fps = fps;
    for (std::size_t k = 0; k < frames; ++k) {
        const double s = static_cast<double>(k) / std::max<std::size_t>(1, frames - 1);
        mf::PoseFrame f = mf::PoseFrame::zero(3);
        f.global_orient = Eigen::Vector3d(0.0, 0.6 * std::sin(2.0 * M_PI * s), 0.0);
        f.body_pose << 0.0, 0.0, 0.5 * std::sin(M_PI * s), 0.3 * std::cos(M_PI * s), 0.0, 0.7 * s;
        f.translation = Eigen::Vector3d(0.1 * s, 0.0, 0.05 * std::sin(M_PI * s));
        m.frames.push_back(f);
    }
    m.manifest = mf::PipelineManifest{"a person waves", "raise the arm", "a bright room", "t2m"};
    return m;
}

mf::CameraTrack chain_track(std::size_t frames) {
    mf::CameraTrack t;
    t.crop_side = 512.0;
    t.space = mf::IntrinsicsSpace::crop;
    for (std::size_t k = 0; k < frames; ++k) {
        mf::CameraFrame f;
        f.extrinsics.R = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
        f.extrinsics.T = Eigen::Vector3d(0.0, 0.45, 3.0);
        f.intrinsics = mf::Intrinsics{1600.0, 1600.0, 256.0, 256.0, 480, 720};
        f.bbox = mf::BBox{40.0, 160.0, 400.0, 400.0};
        t.frames.push_back(f);
    }
    return t;
}

mf::LinearFamily chain_family(const mf::MotionSequence& motion) {
    mf::LinearFamily fam;
    fam.mean = mf::flatten(motion);
    const auto n = fam.mean.size();
    fam.basis = mf::Matrix(n, 3);
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd;
    for (Eigen::Index i = 0; i < fam.basis.rows(); ++i)
        for (Eigen::Index j = 0; j < 3; ++j) fam.basis(i, j) = nd(gen) / std::sqrt(static_cast<double>(n));
    fam.prior_std = 1e-3;
    // shift the mean so the motion sits at a nonzero coefficient vector
    Vector c0(3);
    c0 << 1e-3, -1.5e-3, 0.5e-3;
    const Vector offset = fam.basis * c0;
    fam.mean -= Eigen::Map<const mf::Matrix>(offset.data(), fam.mean.rows(), fam.mean.cols());
    return fam;
}

fs::path temp_dir(const std::string& tag) {
    static std::random_device rd;
    const auto dir = fs::temp_directory_path() / ("motionforge-" + tag + "-" + std::to_string(rd()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Corpus write_corpus(const fs::path& dir) {
    Corpus c;
    c.dir = dir;
    fs::create_directories(dir);
    c.model = dir / "chain3.model.json";
    c.motion = dir / "motion.json";
    c.track = dir / "track.json";
    c.family = dir / "family.json";
    c.config = dir / "config.json";
    mf::save_model(mf::make_chain3(), c.model);
    const auto motion = chain_motion();
    mf::save_motion(motion, c.motion);
    mf::save_camera_track(chain_track(), c.track);
    mf::save_linear_family(chain_family(motion), c.family);
    c.config_doc = {
        {"paths",
         {{"model", c.model.string()},
          {"motion", c.motion.string()},
          {"camera_track", c.track.string()},
          {"output_dir", (dir / "out").string()}}},
        {"render", {{"width", 480}, {"height", 720}, {"format", "png"}}},
        {"frames", {{"count", 49}, {"fps", 8.0}}},
        {"editing", {{"steps", 10}, {"denoiser", {{"kind", "linear-family"}, {"family", c.family.string()}}}}},
        {"seed", 1234},
        {"workers", 2},
    };
    mf::jsonutil::write_json_file(c.config, c.config_doc, 2);
    return c;
}

std::vector<std::pair<std::string, std::string>> digests(const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out.emplace_back(e.path().filename().string(), mf::sha256_file(e.path()));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace fixtures
