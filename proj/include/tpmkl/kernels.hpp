#pragma once

// Per-node linear Gram matrices, trace normalization, and their convex
// combination K = sum_node beta_node * K_node.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tpmkl/pyramid.hpp"

namespace tpmkl {

/// Nonnegative node weights summing to one.
struct SimplexWeights {
    std::vector<NodeId> nodes;
    std::vector<double> beta;

    static SimplexWeights uniform(const std::vector<NodeId>& nodes);
    /// All mass on one node.
    static SimplexWeights indicator(const std::vector<NodeId>& nodes, NodeId target);
    /// Uniform over the nodes of one pyramid level, zero elsewhere.
    static SimplexWeights level(const std::vector<NodeId>& nodes, int level);

    double weight(NodeId id) const;
    /// Sum of beta per level 1..max level present.
    std::vector<double> level_sums() const;
    /// Throws ShapeError/ParameterError if sizes differ, any beta < 0, or the
    /// sum is off by more than `tol`.
    void validate(double tol = 1e-9) const;
};

struct KernelBank {
    std::vector<NodeId> node_ids;
    std::vector<Eigen::MatrixXd> grams;  // n x n each, same video order
    std::vector<double> normalizers;     // scale already applied to each gram
    std::vector<std::string> video_ids;

    Eigen::Index size() const { return static_cast<Eigen::Index>(video_ids.size()); }
    std::size_t node_count() const { return node_ids.size(); }
};

struct NormalizedGram {
    Eigen::MatrixXd gram;
    double scale = 1.0;
};

/// Entry (i, j) = <Psi_node(V_i), Psi_node(V_j)>; symmetric by construction.
Eigen::MatrixXd node_gram(std::span<const PyramidRep> reps, NodeId node);

/// Scales G to unit mean diagonal: G * (n / trace G). Throws KernelError on
/// a non-positive trace.
NormalizedGram normalize_gram(const Eigen::MatrixXd& gram);

/// Builds one (optionally normalized) gram per node over the given videos.
KernelBank build_bank(std::span<const PyramidRep> reps, std::vector<std::string> video_ids,
                      const std::vector<NodeId>& nodes, bool normalize = true);

/// Weighted sum of the bank's grams.
Eigen::MatrixXd combine(const KernelBank& bank, const SimplexWeights& weights);

/// Combined-kernel values between one test video and every training video,
/// using the bank's training normalizers.
Eigen::VectorXd test_kernel_row(std::span<const PyramidRep> train_reps, const PyramidRep& test_rep,
                                const KernelBank& bank, const SimplexWeights& weights);

struct SpectrumBounds {
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
};

SpectrumBounds spectrum_bounds(const Eigen::MatrixXd& symmetric);

/// min eigenvalue >= -rel_tol * max(|max eigenvalue|, tiny).
bool is_psd(const Eigen::MatrixXd& symmetric, double rel_tol = 1e-8);

// Bank file: "TPKB" | u32 version | u64 node count | u64 n | (u32 level,
// u32 index) per node | f64 normalizer per node | n strings (u64 length +
// bytes) | node_count * n * n f64 row-major.
void write_bank(const std::filesystem::path& path, const KernelBank& bank);
KernelBank read_bank(const std::filesystem::path& path);

}  // namespace tpmkl
