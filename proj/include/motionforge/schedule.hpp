#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "motionforge/types.hpp"

namespace motionforge {

// Seeded generator. Uniforms and normals are derived from the raw 64-bit
// stream with fixed arithmetic, so draws are identical across standard
// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on the open interval (0, 1).
    double uniform_open();
    // Standard normal by inverse transform.
    double standard_normal();

private:
    std::mt19937_64 engine_;
};

// Independent stream seed for (seed, stream) via splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Standard normal CDF and density.
double normal_cdf(double x);
double normal_pdf(double x);
// Wichura's AS241 (PPND16); relative error about 1e-16 on (0, 1).
double normal_quantile(double p);

struct TimestepSamplerConfig {
    double mean = 0.9;
    double stddev = 0.2;
    double lo = 0.6;
    double hi = 1.0;

    void validate() const;
    // Closed-form mean and variance of the truncated distribution.
    double truncated_mean() const;
    double truncated_variance() const;
    // CDF of the truncated distribution.
    double truncated_cdf(double t) const;
};

// Inverse-CDF draw from N(mean, stddev^2) truncated to [lo, hi].
double sample_timestep(const TimestepSamplerConfig& cfg, Rng& rng);

// True iff lo <= t <= hi. Throws Error(contract) for t outside [0, 1].
bool conditioning_active(double t, const TimestepSamplerConfig& cfg);

enum class NoisePreset { cosine, linear };

std::string_view preset_name(NoisePreset preset);
NoisePreset preset_from_name(std::string_view name);

// t = 0 is clean data, t = 1 is pure noise.
struct NoiseSchedule {
    NoisePreset preset = NoisePreset::cosine;

    // cosine: cos^2(pi t / 2); linear: exp(-(b0 t + (b1 - b0) t^2 / 2)) with
    // b0 = 0.1, b1 = 20. Both clamped to [1e-8, 1].
    double alpha_bar(double t) const;
};

// x_t = sqrt(abar) x0 + sqrt(1 - abar) eps.
Matrix forward_noise(const Matrix& x0, double t, const NoiseSchedule& schedule, Rng& rng);

}  // namespace motionforge
