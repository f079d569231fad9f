#pragma once
// Shared helpers for the test binaries: seeded random instances, brute-force
// oracles that do not reuse library code, and scratch directories.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "files.hpp"
#include "tpmkl/features_io.hpp"
#include "tpmkl/kernels.hpp"
#include "tpmkl/pyramid.hpp"

namespace tpmkl::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline FrameSequence random_sequence(Rng& rng, std::int64_t frames, std::int64_t dim, double scale = 1.0) {
    FrameSequence s;
    s.video_id = "v";
    s.stream_name = "s";
    s.frames.resize(frames, dim);
    std::normal_distribution<double> n(0.0, scale);
    for (Eigen::Index r = 0; r < frames; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) s.frames(r, c) = n(rng);
    return s;
}

/// Uniform sample from the probability simplex (normalized exponentials).
inline std::vector<double> random_simplex(Rng& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(n);
    double sum = 0.0;
    for (double& x : w) sum += (x = e(rng));
    for (double& x : w) x /= sum;
    return w;
}

/// Plain row-range mean; deliberately independent of the library.
inline Eigen::VectorXd range_mean(const FrameMatrix& frames, std::int64_t begin, std::int64_t end) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(frames.cols());
    for (std::int64_t t = begin; t < end; ++t)
        for (Eigen::Index c = 0; c < frames.cols(); ++c) sum(c) += frames(t, c);
    return sum / static_cast<double>(end - begin);
}

/// n random pyramids sharing L and q, with T drawn from [2^(L-1), max_frames].
inline std::vector<PyramidRep> random_reps(Rng& rng, int n, int levels, std::int64_t dim, std::int64_t max_frames) {
    std::vector<PyramidRep> reps;
    const auto min_frames = std::int64_t{1} << (levels - 1);
    for (int i = 0; i < n; ++i) {
        const auto t = static_cast<std::int64_t>(uniform_int(rng, static_cast<int>(min_frames), static_cast<int>(max_frames)));
        reps.push_back(aggregate(random_sequence(rng, t, dim), levels));
    }
    return reps;
}

inline std::vector<std::string> numbered_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i));
    return ids;
}

}  // namespace tpmkl::testing
