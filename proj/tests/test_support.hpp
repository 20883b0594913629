#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drcf/dataio.hpp"
#include "drcf/grad.hpp"
#include "drcf/model.hpp"
#include "drcf/random.hpp"

namespace drcf::testing {

/// Model with every coordinate (biases included) drawn from U(-scale, scale).
inline ModelParams random_model(Rng& rng, std::size_t users, std::size_t items, std::size_t d, std::size_t h,
                                double scale = 1.0, double k_max = 5.0) {
    ModelParams p({users, items, d, h}, k_max);
    for (double& v : p.values()) v = uniform(rng, -scale, scale);
    return p;
}

inline Batch random_batch(Rng& rng, std::size_t users, std::size_t items, std::size_t n) {
    Batch b;
    for (std::size_t i = 0; i < n; ++i) {
        b.examples.push_back({static_cast<std::uint32_t>(uniform_index(rng, users)),
                              static_cast<std::uint32_t>(uniform_index(rng, items)), uniform01(rng)});
    }
    return b;
}

/// Synthetic ratings on a 1..5 scale driven by a hidden low-rank structure.
inline Dataset toy_dataset(std::size_t n, std::size_t users, std::size_t items, std::uint64_t seed) {
    Rng rng = make_rng({seed});
    std::vector<double> ub(users), ib(items);
    for (double& v : ub) v = uniform(rng, -1.0, 1.0);
    for (double& v : ib) v = uniform(rng, -1.0, 1.0);
    std::vector<RatingTriplet> triplets;
    for (std::size_t k = 0; k < n; ++k) {
        const auto u = uniform_index(rng, users);
        const auto i = uniform_index(rng, items);
        double r = 3.0 + ub[u] + ib[i] + 0.8 * ub[u] * ib[i];
        r = std::round(std::clamp(r, 1.0, 5.0));
        triplets.push_back({"u" + std::to_string(u), "i" + std::to_string(i), r, std::nullopt});
    }
    return build_dataset(triplets, 5.0);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("drcf_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace drcf::testing
