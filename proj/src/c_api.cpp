#include "motionforge/c_api.h"

#include <cstring>
#include <exception>
#include <string>

#include "motionforge/body_model.hpp"
#include "motionforge/error.hpp"
#include "motionforge/motion.hpp"
#include "motionforge/render.hpp"
#include "motionforge/schedule.hpp"

namespace {

using namespace motionforge;

thread_local std::string g_last_error;

std::size_t dtype_size(int32_t dtype) {
    switch (dtype) {
        case MF_FLOAT32: return 4;
        case MF_FLOAT64: return 8;
        case MF_UINT8: return 1;
        default: return 0;
    }
}

void check_descriptor(const mf_array* a, int32_t dtype, int32_t ndim, const char* name) {
    const std::string n(name);
    if (!a || !a->data) fail(ErrorCode::contract, n + ": null descriptor");
    if (a->dtype != dtype) fail(ErrorCode::contract, n + ": unexpected element type");
    if (a->ndim != ndim) fail(ErrorCode::contract, n + ": expected " + std::to_string(ndim) + " dimensions");
    const auto elem = static_cast<int64_t>(dtype_size(dtype));
    for (int d = 0; d < ndim; ++d) {
        if (a->shape[d] < 0) fail(ErrorCode::contract, n + ": negative extent");
        if (a->strides[d] <= 0 || a->strides[d] % elem != 0)
            fail(ErrorCode::contract, n + ": stride must be a positive multiple of the element size");
    }
}

// Output descriptors must be C-contiguous.
void check_output(const mf_array* a, int32_t dtype, std::initializer_list<int64_t> shape, const char* name) {
    check_descriptor(a, dtype, static_cast<int32_t>(shape.size()), name);
    int64_t expected = static_cast<int64_t>(dtype_size(dtype));
    for (int d = static_cast<int>(shape.size()) - 1; d >= 0; --d) {
        if (a->shape[d] != shape.begin()[d])
            fail(ErrorCode::contract, std::string(name) + ": shape mismatch in dimension " + std::to_string(d));
        if (a->strides[d] != expected) fail(ErrorCode::contract, std::string(name) + ": output must be C-contiguous");
        expected *= a->shape[d];
    }
}

// Float inputs may be float32 or float64; values are widened to double.
void check_float_input(const mf_array* a, int32_t ndim, const char* name) {
    if (a && a->dtype == MF_FLOAT32) check_descriptor(a, MF_FLOAT32, ndim, name);
    else check_descriptor(a, MF_FLOAT64, ndim, name);
}

double f64_at(const mf_array* a, int64_t i, int64_t j = 0) {
    const auto* at = static_cast<const unsigned char*>(a->data) + i * a->strides[0] + (a->ndim > 1 ? j * a->strides[1] : 0);
    if (a->dtype == MF_FLOAT32) {
        float f;
        std::memcpy(&f, at, sizeof(float));
        return f;
    }
    double v;
    std::memcpy(&v, at, sizeof(double));
    return v;
}

Matrix read_matrix(const mf_array* a, const char* name) {
    check_float_input(a, 2, name);
    Matrix m(a->shape[0], a->shape[1]);
    for (int64_t i = 0; i < a->shape[0]; ++i)
        for (int64_t j = 0; j < a->shape[1]; ++j) m(i, j) = f64_at(a, i, j);
    return m;
}

std::vector<double> read_betas(const mf_array* betas) {
    std::vector<double> out;
    if (!betas) return out;
    check_float_input(betas, 1, "betas");
    for (int64_t i = 0; i < betas->shape[0]; ++i) out.push_back(f64_at(betas, i));
    return out;
}

MotionSequence motion_from_matrix(const Matrix& poses, const BodyModel& model, std::vector<double> betas) {
    if (static_cast<std::size_t>(poses.cols()) != 6 + model.body_pose_size())
        fail(ErrorCode::contract, "motion: row length does not match the model");
    MotionSequence layout;
    layout.fps = 1.0;
    layout.frames.push_back(PoseFrame::zero(model.joint_count()));
    layout.betas = std::move(betas);
    return unflatten(poses, layout);
}

template <typename Fn>
int32_t guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return 0;
    } catch (const Error& e) {
        g_last_error = e.what();
        return static_cast<int32_t>(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return static_cast<int32_t>(ErrorCode::internal);
    } catch (...) {
        g_last_error = "unknown error";
        return static_cast<int32_t>(ErrorCode::internal);
    }
}

}  // namespace

extern "C" {

int32_t motionforge_abi_version(void) { return MOTIONFORGE_ABI_VERSION; }

const char* motionforge_last_error(void) { return g_last_error.c_str(); }

void motionforge_default_render_settings(mf_render_settings* s) {
    if (!s) return;
    const LightingConfig light;
    const Palette palette = Palette::defaults();
    s->width = kDefaultRenderWidth;
    s->height = kDefaultRenderHeight;
    s->near_plane = kDefaultNear;
    s->ambient = light.ambient;
    for (int k = 0; k < 3; ++k) s->light[k] = light.direction[k];
    s->use_default_palette = 1;
    for (std::size_t p = 0; p < kPartCount; ++p) {
        s->palette[p][0] = palette.parts[p].r;
        s->palette[p][1] = palette.parts[p].g;
        s->palette[p][2] = palette.parts[p].b;
    }
    s->palette[6][0] = palette.background.r;
    s->palette[6][1] = palette.background.g;
    s->palette[6][2] = palette.background.b;
    s->workers = 1;
}

int32_t motionforge_sample_timestep(double mean, double stddev, double lo, double hi, uint64_t seed, mf_array* out) {
    return guarded([&] {
        const TimestepSamplerConfig cfg{mean, stddev, lo, hi};
        cfg.validate();
        check_descriptor(out, MF_FLOAT64, 1, "out");
        check_output(out, MF_FLOAT64, {out->shape[0]}, "out");
        Rng rng(seed);
        auto* dst = static_cast<double*>(out->data);
        for (int64_t i = 0; i < out->shape[0]; ++i) dst[i] = sample_timestep(cfg, rng);
    });
}

int32_t motionforge_conditioning_active(double t, double mean, double stddev, double lo, double hi, int32_t* out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::contract, "out: null pointer");
        const TimestepSamplerConfig cfg{mean, stddev, lo, hi};
        cfg.validate();
        *out = conditioning_active(t, cfg) ? 1 : 0;
    });
}

int32_t motionforge_forward_noise(const mf_array* x0, double t, int32_t preset, uint64_t seed, mf_array* out) {
    return guarded([&] {
        const Matrix x = read_matrix(x0, "x0");
        check_output(out, MF_FLOAT64, {x.rows(), x.cols()}, "out");
        if (preset != 0 && preset != 1) fail(ErrorCode::contract, "preset: expected 0 (cosine) or 1 (linear)");
        Rng rng(seed);
        const Matrix y = forward_noise(x, t, NoiseSchedule{preset == 0 ? NoisePreset::cosine : NoisePreset::linear}, rng);
        std::memcpy(out->data, y.data(), static_cast<std::size_t>(y.size()) * sizeof(double));
    });
}

int32_t motionforge_pose(const char* model_path, const mf_array* poses, const mf_array* betas, mf_array* out) {
    return guarded([&] {
        if (!model_path) fail(ErrorCode::contract, "model_path: null pointer");
        const BodyModel model = load_model(model_path);
        const MotionSequence motion = motion_from_matrix(read_matrix(poses, "poses"), model, read_betas(betas));
        const auto nv = static_cast<int64_t>(model.vertex_count());
        check_output(out, MF_FLOAT64, {static_cast<int64_t>(motion.frame_count()), nv, 3}, "out");
        auto* dst = static_cast<double*>(out->data);
        for (std::size_t k = 0; k < motion.frame_count(); ++k) {
            const auto vf = pose(model, motion.frames[k], motion.betas);
            std::memcpy(dst + k * nv * 3, vf.vertices.data(), static_cast<std::size_t>(nv) * 3 * sizeof(double));
        }
    });
}

int32_t motionforge_render_video(const mf_array* motion, const mf_array* betas, const char* model_path,
                                 const mf_array* track, double crop_side, int32_t intrinsics_space,
                                 const mf_render_settings* settings, mf_array* out) {
    return guarded([&] {
        if (!model_path || !settings) fail(ErrorCode::contract, "null argument");
        const BodyModel model = load_model(model_path);
        const MotionSequence seq = motion_from_matrix(read_matrix(motion, "motion"), model, read_betas(betas));
        const Matrix rows = read_matrix(track, "track");
        if (rows.cols() != MF_TRACK_ROW) fail(ErrorCode::contract, "track: expected 22 values per frame");

        CameraTrack cams;
        cams.crop_side = crop_side;
        cams.space = intrinsics_space == 1 ? IntrinsicsSpace::frame : IntrinsicsSpace::crop;
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
            CameraFrame f;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) f.extrinsics.R(r, c) = rows(i, 3 * r + c);
            f.extrinsics.T = Eigen::Vector3d(rows(i, 9), rows(i, 10), rows(i, 11));
            f.extrinsics.validate();
            f.intrinsics = Intrinsics{rows(i, 12), rows(i, 13), rows(i, 14), rows(i, 15),
                                      static_cast<int>(rows(i, 16)), static_cast<int>(rows(i, 17))};
            f.bbox = BBox{rows(i, 18), rows(i, 19), rows(i, 20), rows(i, 21)};
            cams.frames.push_back(f);
        }

        Palette palette = Palette::defaults();
        if (!settings->use_default_palette) {
            for (std::size_t p = 0; p < kPartCount; ++p)
                palette.parts[p] = {settings->palette[p][0], settings->palette[p][1], settings->palette[p][2]};
            palette.background = {settings->palette[6][0], settings->palette[6][1], settings->palette[6][2]};
        }
        LightingConfig light;
        light.direction = Eigen::Vector3d(settings->light[0], settings->light[1], settings->light[2]);
        light.ambient = settings->ambient;

        check_output(out, MF_UINT8, {static_cast<int64_t>(seq.frame_count()), settings->height, settings->width, 3}, "out");
        RenderOptions options;
        options.width = settings->width;
        options.height = settings->height;
        options.near = settings->near_plane;
        options.workers = settings->workers;
        const auto video = render_video(seq, model, cams, palette, light, options);
        auto* dst = static_cast<std::uint8_t*>(out->data);
        const std::size_t frame_bytes = static_cast<std::size_t>(settings->width) * settings->height * 3;
        for (std::size_t k = 0; k < video.frame_count(); ++k)
            std::memcpy(dst + k * frame_bytes, video.frames[k].rgb.data(), frame_bytes);
    });
}

}  // extern "C"
