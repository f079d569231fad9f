#pragma once

// Binary soft-margin SVM trained in the dual on a precomputed kernel, and
// the one-vs-rest multi-class scheme built from it.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tpmkl {

struct SvmModel {
    std::vector<double> alpha;  // 0 <= alpha_i <= c_reg
    double bias = 0.0;
    std::vector<int> labels;    // +1 / -1 per training video
    double c_reg = 1.0;
    int class_id = 0;

    /// alpha_i * y_i, the coefficients of the kernel expansion.
    Eigen::VectorXd signed_alpha() const;
};

struct SolverProgress {
    int iteration = 0;
    std::span<const double> alpha;
    double dual_objective = 0.0;
};

struct SolverOptions {
    double c_reg = 1.0;
    /// Stop once the duality gap is <= tol * (1 + |primal|).
    double tol = 1e-6;
    long max_iterations = 10'000'000;
    /// Eigenvalue PSD check of K before solving.
    bool check_kernel = true;
    /// Invoked after every pairwise update (testing hook).
    std::function<void(const SolverProgress&)> observer;
};

/// Pairwise coordinate ascent with most-violating-pair selection; ties go to
/// the lowest index. Throws SolverStallError when the gap cannot be closed
/// (iteration limit, or a tolerance below what double precision resolves).
SvmModel solve_binary(const Eigen::MatrixXd& kernel, std::span<const int> labels, const SolverOptions& options);
SvmModel solve_binary(const Eigen::MatrixXd& kernel, std::span<const int> labels, double c_reg, double tol);

struct SvmObjectives {
    double dual = 0.0;
    double primal = 0.0;
    double gap = 0.0;
};

/// Dual and primal (hinge) objectives of a model on its training kernel.
SvmObjectives svm_objectives(const Eigen::MatrixXd& kernel, const SvmModel& model);

/// sum_i alpha_i y_i k_row_i + b.
double decision(const SvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& k_row);

/// Model c treats label == c as +1 and everything else as -1. Classes are
/// 1..num_classes; each must have at least one sample.
std::vector<SvmModel> train_one_vs_rest(const Eigen::MatrixXd& kernel, std::span<const int> labels,
                                        int num_classes, double c_reg, double tol);

/// Decision values, one row per test video (k_rows: n_test x n_train).
Eigen::MatrixXd decision_matrix(std::span<const SvmModel> models, const Eigen::MatrixXd& k_rows);

/// 1-based arg max; ties resolve to the smallest class id.
int argmax_class(const Eigen::Ref<const Eigen::VectorXd>& scores);

std::vector<int> predict(std::span<const SvmModel> models, const Eigen::MatrixXd& k_rows);

}  // namespace tpmkl
