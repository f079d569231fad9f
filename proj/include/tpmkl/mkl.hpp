#pragma once

// Multiple kernel learning over pyramid nodes: alternate between training
// one-vs-rest SVMs on the combined kernel (beta fixed) and minimizing the
// joint multi-class hinge objective over beta on the simplex (SVMs fixed).
//
// With the SVMs fixed, node-wise hyperplanes are w_c^node = sum_i a_i^c y_ic Psi^node(V_i),
// so that g_c(V) = sum_node beta_node <w_c^node, Psi^node(V)> + b_c and the
// objective
//     F(beta) = 1/2 sum_node beta_node S_node + sum_j xi_j(beta),
//     xi_j    = max_{c' != c_j} max(0, 1 - (g_{c_j}(V_j) - g_{c'}(V_j)))
// is convex piecewise linear in beta.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "tpmkl/kernels.hpp"
#include "tpmkl/simplex_lp.hpp"
#include "tpmkl/svm.hpp"

namespace tpmkl {

struct LpProblem {
    std::vector<NodeId> nodes;
    /// S_node = sum_c ||w_c^node||^2.
    Eigen::VectorXd regularizer;
    /// One row per (training video j, competing class c'): per-node margin
    /// contributions m such that g_{c_j}(V_j) - g_{c'}(V_j) = beta.m + bias_gap.
    Eigen::MatrixXd margins;
    Eigen::VectorXd bias_gap;
    std::vector<int> row_video;
    std::vector<int> row_competitor;
    int num_videos = 0;

    /// xi_j(beta) for every training video.
    Eigen::VectorXd slacks(const std::vector<double>& beta) const;
    /// F(beta).
    double objective(const std::vector<double>& beta) const;
};

/// Per-class SVMs on combine(bank, beta); labels are 1..C.
std::vector<SvmModel> qp_step(const KernelBank& bank, const SimplexWeights& beta, std::span<const int> labels,
                              double c_reg, double tol);

/// `svms[c-1]` must be the model of class c, trained on the bank's videos.
LpProblem build_lp(const KernelBank& bank, std::span<const SvmModel> svms, std::span<const int> labels);

/// min F as an LP in (beta, xi): row 0 is sum(beta) = 1, row r+1 is margin row r.
LinearProgram primal_lp(const LpProblem& problem);
/// Its dual in (lambda, mu+, mu-). Rows: nodes, then videos.
LinearProgram dual_lp(const LpProblem& problem);

/// Minimizer of F over the simplex.
SimplexWeights lp_step(const LpProblem& problem);

struct MklOptions {
    double c_reg = 1.0;
    double tol = 1e-6;
    int max_outer = 50;
    double tol_outer = 1e-4;
};

struct MklIteration {
    SimplexWeights beta;          // beta after the LP step
    double objective_before = 0;  // F(beta_old, svms_old)
    double objective_after = 0;   // F(beta_new, svms_old)
    bool qp_accepted = true;      // false if retraining at beta_new raised F
};

struct MklModel {
    SimplexWeights beta;
    std::vector<SvmModel> svms;
    /// F at the accepted (beta, svms) pair: initial value, then one entry per
    /// outer iteration that moved beta. Non-increasing.
    std::vector<double> objective_trace;
    std::vector<MklIteration> history;
    int iterations = 0;
    bool converged = false;
};

/// Alternating optimization from uniform beta. An LP step that does not
/// strictly lower F keeps the current beta; a QP step that would raise F at
/// the new beta is rejected, keeping the previous SVMs.
MklModel train_mkl(const KernelBank& bank, std::span<const int> labels, const MklOptions& options = {});

/// One-vs-rest SVMs at a pinned beta, packaged like an MKL result.
MklModel train_fixed(const KernelBank& bank, std::span<const int> labels, const SimplexWeights& beta,
                     const MklOptions& options = {});

}  // namespace tpmkl
