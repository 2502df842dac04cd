#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/schedule.hpp"
#include "motionforge/types.hpp"

namespace motionforge {

// Predicts the clean pose-vector sequence from a noisy one at timestep t.
// Calls are serialized per instance.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    // Checks the shape contract on the result.
    Matrix predict(const Matrix& noisy, double t);

protected:
    virtual Matrix do_predict(const Matrix& noisy, double t) = 0;

private:
    std::mutex mutex_;
};

// Always returns the same sequence.
class ConstantDenoiser final : public Denoiser {
public:
    explicit ConstantDenoiser(Matrix value) : value_(std::move(value)) {}

protected:
    Matrix do_predict(const Matrix& noisy, double t) override;

private:
    Matrix value_;
};

// Gaussian linear family x0 = mean + basis * c, c ~ N(0, prior_std^2 I).
struct LinearFamily {
    Matrix mean;        // rows x cols, same layout as the pose vectors
    Matrix basis;       // (rows*cols) x r, columns index family directions
    double prior_std = 1.0;

    std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }
    // A member of the family for coefficients c.
    Matrix member(const Vector& coefficients) const;
};

LinearFamily load_linear_family(const std::filesystem::path& path);
void save_linear_family(const LinearFamily& family, const std::filesystem::path& path);

// Posterior-mean (LMMSE) denoiser for a LinearFamily under the forward process
// of `schedule`; exact for the Gaussian family.
class LinearFamilyDenoiser final : public Denoiser {
public:
    LinearFamilyDenoiser(LinearFamily family, NoiseSchedule schedule);

    const LinearFamily& family() const { return family_; }

protected:
    Matrix do_predict(const Matrix& noisy, double t) override;

private:
    LinearFamily family_;
    NoiseSchedule schedule_;
    Matrix gram_;  // basis^T basis
};

inline constexpr const char* kDenoiserProtocol = "motionforge-denoiser";
inline constexpr int kDenoiserProtocolVersion = 1;

// Child process speaking line-delimited JSON on stdin/stdout.
//   child -> {"protocol":"motionforge-denoiser","version":1}   (first line)
//   parent -> {"t":t,"rows":K,"cols":D,"x":[row-major K*D]}
//   child -> {"x":[K*D]}  or  {"error":"..."}
class ExternalProcessDenoiser final : public Denoiser {
public:
    explicit ExternalProcessDenoiser(std::vector<std::string> argv);
    ~ExternalProcessDenoiser() override;

    ExternalProcessDenoiser(const ExternalProcessDenoiser&) = delete;
    ExternalProcessDenoiser& operator=(const ExternalProcessDenoiser&) = delete;

protected:
    Matrix do_predict(const Matrix& noisy, double t) override;

private:
    void shutdown();
    void write_line(const std::string& line);
    std::string read_line();

    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

}  // namespace motionforge
