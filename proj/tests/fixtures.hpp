// Shared scenes and file corpora for the test binaries.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/body_model.hpp"
#include "motionforge/camera.hpp"
#include "motionforge/denoiser.hpp"
#include "motionforge/motion.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Smooth bending motion for the 3-joint chain.
motionforge::MotionSequence chain_motion(std::size_t frames = 49, double fps = 8.0);

// Camera 3 m in front of the chain (rotated 180 degrees about x so world up is
// image up), intrinsics given in crop space.
motionforge::CameraTrack chain_track(std::size_t frames = 49);

// Rank-3 family around the chain motion with a narrow prior; the fixture
// motion itself is a member.
motionforge::LinearFamily chain_family(const motionforge::MotionSequence& motion);

struct Corpus {
    fs::path dir;
    fs::path model;
    fs::path motion;
    fs::path track;
    fs::path family;
    fs::path config;
    nlohmann::json config_doc;
};

// Writes model, motion, track, family and a render config under dir.
Corpus write_corpus(const fs::path& dir);

// Fresh empty directory under the system temp dir.
fs::path temp_dir(const std::string& tag);

// Every regular file in dir except the staging area, name -> sha256.
std::vector<std::pair<std::string, std::string>> digests(const fs::path& dir);

}  // namespace fixtures
