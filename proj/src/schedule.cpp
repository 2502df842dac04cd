#include "motionforge/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "motionforge/error.hpp"

namespace motionforge {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

template <std::size_t N>
double horner(const double (&c)[N], double x) {
    double acc = c[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
    return acc;
}

// Probability mass of the standard normal on [a, b], computed on the side
// with less cancellation.
double normal_mass(double a, double b) {
    if (a >= 0.0) return normal_cdf(-a) - normal_cdf(-b);
    return normal_cdf(b) - normal_cdf(a);
}

}  // namespace

double Rng::uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::standard_normal() { return normal_quantile(uniform_open()); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_quantile(double p) {
    if (std::isnan(p) || p < 0.0 || p > 1.0) return std::numeric_limits<double>::quiet_NaN();
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();

    static constexpr double a[] = {3.3871328727963666080e0, 1.3314166789178437745e+2, 1.9715909503065514427e+3,
                                   1.3731693765509461125e+4, 4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                   3.3430575583588128105e+4, 2.5090809287301226727e+3};
    static constexpr double b[] = {1.0, 4.2313330701600911252e+1, 6.8718700749205790830e+2, 5.3941960214247511077e+3,
                                   2.1213794301586595867e+4, 3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                   5.2264952788528545610e+3};
    static constexpr double c[] = {1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                                   3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                   2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double d[] = {1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
                                   1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                   1.05075007164441684324e-9};
    static constexpr double e[] = {6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                                   2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                   2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[] = {1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
                                   7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                   2.04426310338993978564e-15};

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * horner(a, r) / horner(b, r);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        z = horner(c, r) / horner(d, r);
    } else {
        r -= 5.0;
        z = horner(e, r) / horner(f, r);
    }
    return q < 0.0 ? -z : z;
}

void TimestepSamplerConfig::validate() const {
    if (!std::isfinite(mean)) fail(ErrorCode::config, "timestep.mean must be finite");
    if (!(stddev > 0.0) || !std::isfinite(stddev)) fail(ErrorCode::config, "timestep.std must be positive");
    if (!(lo < hi)) fail(ErrorCode::config, "timestep range requires lo < hi");
    if (lo < 0.0 || hi > 1.0) fail(ErrorCode::config, "timestep range must lie in [0, 1]");
}

double TimestepSamplerConfig::truncated_mean() const {
    const double a = (lo - mean) / stddev;
    const double b = (hi - mean) / stddev;
    return mean + stddev * (normal_pdf(a) - normal_pdf(b)) / normal_mass(a, b);
}

double TimestepSamplerConfig::truncated_variance() const {
    const double a = (lo - mean) / stddev;
    const double b = (hi - mean) / stddev;
    const double z = normal_mass(a, b);
    const double m = (normal_pdf(a) - normal_pdf(b)) / z;
    return stddev * stddev * (1.0 + (a * normal_pdf(a) - b * normal_pdf(b)) / z - m * m);
}

double TimestepSamplerConfig::truncated_cdf(double t) const {
    if (t <= lo) return 0.0;
    if (t >= hi) return 1.0;
    const double a = (lo - mean) / stddev;
    const double b = (hi - mean) / stddev;
    const double x = (t - mean) / stddev;
    return std::clamp(normal_mass(a, x) / normal_mass(a, b), 0.0, 1.0);
}

double sample_timestep(const TimestepSamplerConfig& cfg, Rng& rng) {
    const double a = (cfg.lo - cfg.mean) / cfg.stddev;
    const double b = (cfg.hi - cfg.mean) / cfg.stddev;
    const double u = rng.uniform_open();
    double z;
    if (a >= 0.0) {
        // Entire interval above the mean: invert the upper tail.
        const double sa = normal_cdf(-a);
        const double sb = normal_cdf(-b);
        if (!(sa > sb)) return cfg.lo;
        z = -normal_quantile(sa - u * (sa - sb));
    } else {
        const double pa = normal_cdf(a);
        const double pb = normal_cdf(b);
        if (!(pb > pa)) return cfg.hi;
        z = normal_quantile(pa + u * (pb - pa));
    }
    return std::clamp(cfg.mean + cfg.stddev * z, cfg.lo, cfg.hi);
}

bool conditioning_active(double t, const TimestepSamplerConfig& cfg) {
    if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::contract, "timestep outside [0, 1]");
    return cfg.lo <= t && t <= cfg.hi;
}

std::string_view preset_name(NoisePreset preset) {
    return preset == NoisePreset::cosine ? "cosine" : "linear";
}

NoisePreset preset_from_name(std::string_view name) {
    if (name == "cosine") return NoisePreset::cosine;
    if (name == "linear") return NoisePreset::linear;
    fail(ErrorCode::config, "unknown noise schedule preset '" + std::string(name) + "'");
}

double NoiseSchedule::alpha_bar(double t) const {
    double value;
    if (preset == NoisePreset::cosine) {
        const double c = std::cos(0.5 * kPi * t);
        value = c * c;
    } else {
        constexpr double b0 = 0.1;
        constexpr double b1 = 20.0;
        value = std::exp(-(b0 * t + 0.5 * (b1 - b0) * t * t));
    }
    return std::clamp(value, 1e-8, 1.0);
}

Matrix forward_noise(const Matrix& x0, double t, const NoiseSchedule& schedule, Rng& rng) {
    if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::contract, "forward_noise: timestep outside [0, 1]");
    if (!x0.allFinite()) fail(ErrorCode::contract, "forward_noise: non-finite input");
    const double abar = schedule.alpha_bar(t);
    if (abar == 1.0) return x0;
    const double signal = std::sqrt(abar);
    const double noise = std::sqrt(1.0 - abar);
    Matrix out(x0.rows(), x0.cols());
    for (Eigen::Index i = 0; i < x0.size(); ++i) out.data()[i] = signal * x0.data()[i] + noise * rng.standard_normal();
    return out;
}

}  // namespace motionforge
