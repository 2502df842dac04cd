#include "motionforge/denoiser.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Cholesky>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include "motionforge/error.hpp"
#include "motionforge/json_util.hpp"

namespace motionforge {

using jsonutil::json;

Matrix Denoiser::predict(const Matrix& noisy, double t) {
    std::lock_guard<std::mutex> lock(mutex_);
    Matrix out = do_predict(noisy, t);
    if (out.rows() != noisy.rows() || out.cols() != noisy.cols())
        fail(ErrorCode::contract, "denoiser contract violation: returned " + std::to_string(out.rows()) + "x" +
                                      std::to_string(out.cols()) + " for a " + std::to_string(noisy.rows()) + "x" +
                                      std::to_string(noisy.cols()) + " input");
    return out;
}

Matrix ConstantDenoiser::do_predict(const Matrix&, double) { return value_; }

Matrix LinearFamily::member(const Vector& coefficients) const {
    const Vector flat = basis * coefficients;
    Matrix out = mean;
    Eigen::Map<Vector>(out.data(), out.size()) += flat;
    return out;
}

LinearFamily load_linear_family(const std::filesystem::path& path) {
    const auto doc = jsonutil::read_json_file(path);
    const auto rows = static_cast<Eigen::Index>(jsonutil::read_number(doc, "rows", ""));
    const auto cols = static_cast<Eigen::Index>(jsonutil::read_number(doc, "cols", ""));
    const auto rank = static_cast<Eigen::Index>(jsonutil::read_number(doc, "rank", ""));
    LinearFamily family;
    family.prior_std = jsonutil::read_number(doc, "prior_std", "");
    if (rows < 1 || cols < 1 || rank < 0 || !(family.prior_std > 0.0))
        fail(ErrorCode::contract, path.string() + ": invalid linear family dimensions");
    const auto mean = jsonutil::read_f64_array(jsonutil::require(doc, "mean", ""), "mean");
    const auto basis = jsonutil::read_f64_array(jsonutil::require(doc, "basis", ""), "basis");
    if (static_cast<Eigen::Index>(mean.size()) != rows * cols ||
        static_cast<Eigen::Index>(basis.size()) != rows * cols * rank)
        fail(ErrorCode::contract, path.string() + ": linear family arrays do not match rows/cols/rank");
    family.mean = Eigen::Map<const Matrix>(mean.data(), rows, cols);
    family.basis = Eigen::Map<const Matrix>(basis.data(), rows * cols, rank);
    return family;
}

void save_linear_family(const LinearFamily& family, const std::filesystem::path& path) {
    const auto n = static_cast<std::size_t>(family.mean.size());
    json doc = {{"rows", family.mean.rows()},
                {"cols", family.mean.cols()},
                {"rank", family.rank()},
                {"prior_std", family.prior_std},
                {"mean", jsonutil::f64_blob(family.mean.data(), n, {n})},
                {"basis", jsonutil::f64_blob(family.basis.data(), n * family.rank(), {n, family.rank()})}};
    jsonutil::write_json_file(path, doc);
}

LinearFamilyDenoiser::LinearFamilyDenoiser(LinearFamily family, NoiseSchedule schedule)
    : family_(std::move(family)), schedule_(schedule) {
    if (family_.basis.rows() != family_.mean.size()) fail(ErrorCode::contract, "linear family basis/mean mismatch");
    gram_ = family_.basis.transpose() * family_.basis;
}

Matrix LinearFamilyDenoiser::do_predict(const Matrix& noisy, double t) {
    if (noisy.rows() != family_.mean.rows() || noisy.cols() != family_.mean.cols())
        fail(ErrorCode::contract, "linear-family denoiser: input shape does not match the family");
    const double abar = schedule_.alpha_bar(t);
    const double signal = std::sqrt(abar);
    const double s2 = family_.prior_std * family_.prior_std;
    const auto n = family_.mean.size();

    const Vector residual = Eigen::Map<const Vector>(noisy.data(), n) - signal * Eigen::Map<const Vector>(family_.mean.data(), n);
    const Eigen::Index r = gram_.rows();
    const Matrix system = s2 * abar * gram_ + (1.0 - abar) * Matrix::Identity(r, r);
    const Vector coeff = s2 * signal * system.ldlt().solve(family_.basis.transpose() * residual);
    return family_.member(coeff);
}

// ---------------------------------------------------------------------------

ExternalProcessDenoiser::ExternalProcessDenoiser(std::vector<std::string> argv) {
    if (argv.empty()) fail(ErrorCode::config, "external denoiser: empty command");
    std::signal(SIGPIPE, SIG_IGN);

    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) fail(ErrorCode::internal, "pipe failed");
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        fail(ErrorCode::internal, "pipe failed");
    }
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);

    const pid_t pid = fork();
    if (pid < 0) fail(ErrorCode::internal, "fork failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execvp(args[0], args.data());
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];

    try {
        json hello;
        try {
            hello = json::parse(read_line());
        } catch (const json::exception&) {
            fail(ErrorCode::contract, "external denoiser: malformed handshake");
        }
        if (!hello.is_object() || hello.value("protocol", "") != kDenoiserProtocol ||
            hello.value("version", -1) != kDenoiserProtocolVersion)
            fail(ErrorCode::contract, "external denoiser: unsupported handshake " + hello.dump());
    } catch (...) {
        shutdown();
        throw;
    }
}

void ExternalProcessDenoiser::shutdown() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        int status = 0;
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

ExternalProcessDenoiser::~ExternalProcessDenoiser() { shutdown(); }

void ExternalProcessDenoiser::write_line(const std::string& line) {
    std::string data = line + "\n";
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
        const ssize_t n = ::write(to_child_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::contract, "external denoiser: process closed its input");
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

std::string ExternalProcessDenoiser::read_line() {
    char chunk[4096];
    for (;;) {
        const auto pos = buffer_.find('\n');
        if (pos != std::string::npos) {
            std::string line = buffer_.substr(0, pos);
            buffer_.erase(0, pos + 1);
            return line;
        }
        const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) fail(ErrorCode::contract, "external denoiser: process exited without a response");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

Matrix ExternalProcessDenoiser::do_predict(const Matrix& noisy, double t) {
    json request = {{"t", t},
                    {"rows", noisy.rows()},
                    {"cols", noisy.cols()},
                    {"x", std::vector<double>(noisy.data(), noisy.data() + noisy.size())}};
    write_line(request.dump());
    json response;
    try {
        response = json::parse(read_line());
    } catch (const json::exception&) {
        fail(ErrorCode::contract, "external denoiser: malformed response");
    }
    if (response.contains("error"))
        fail(ErrorCode::contract, "external denoiser: " + response["error"].dump());
    if (!response.contains("x") || !response["x"].is_array())
        fail(ErrorCode::contract, "external denoiser: response lacks x");
    const auto values = jsonutil::read_f64_array(response["x"], "x");
    if (static_cast<Eigen::Index>(values.size()) != noisy.size())
        fail(ErrorCode::contract, "denoiser contract violation: returned " + std::to_string(values.size()) +
                                      " values for " + std::to_string(noisy.size()));
    return Eigen::Map<const Matrix>(values.data(), noisy.rows(), noisy.cols());
}

}  // namespace motionforge
