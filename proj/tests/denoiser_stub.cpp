// Child process used by the external-denoiser tests.
//
//   denoiser_stub constant V   every prediction is V in every coordinate
//   denoiser_stub echo         returns its input
//   denoiser_stub short        returns one value too few
//   denoiser_stub error        answers with an error record
//   denoiser_stub handshake    announces an unknown protocol version
//   denoiser_stub exit         exits after the handshake

#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

int main(int argc, char** argv) {
    using nlohmann::json;
    const std::string mode = argc > 1 ? argv[1] : "echo";
    const double value = argc > 2 ? std::stod(argv[2]) : 0.0;

    json hello = {{"protocol", "motionforge-denoiser"}, {"version", mode == "handshake" ? 99 : 1}};
    std::cout << hello.dump() << std::endl;
    if (mode == "exit") return 0;

    std::string line;
    while (std::getline(std::cin, line)) {
        const auto req = json::parse(line);
        std::vector<double> x = req["x"].get<std::vector<double>>();
        json resp;
        if (mode == "constant") {
            resp["x"] = std::vector<double>(x.size(), value);
        } else if (mode == "short") {
            x.pop_back();
            resp["x"] = x;
        } else if (mode == "error") {
            resp["error"] = "refusing";
        } else {
            resp["x"] = x;
        }
        std::cout << resp.dump() << std::endl;
    }
    return 0;
}
