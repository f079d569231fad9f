#include "tpmkl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <string>

#include "tpmkl/error.hpp"
#include "tpmkl/kernels.hpp"

namespace tpmkl {

Eigen::VectorXd SvmModel::signed_alpha() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(alpha.size()));
    for (std::size_t i = 0; i < alpha.size(); ++i) out(static_cast<Eigen::Index>(i)) = alpha[i] * labels[i];
    return out;
}

namespace {

void check_problem(const Eigen::MatrixXd& k, std::span<const int> y, double c_reg, double tol) {
    const auto n = k.rows();
    if (k.cols() != n || static_cast<Eigen::Index>(y.size()) != n) {
        throw ShapeError("solve_binary: kernel is " + std::to_string(k.rows()) + "x" + std::to_string(k.cols()) +
                         " but there are " + std::to_string(y.size()) + " labels");
    }
    if (!(c_reg > 0.0) || !(tol > 0.0)) throw ParameterError("solve_binary: c_reg and tol must be positive");
    bool pos = false, neg = false;
    for (int v : y) {
        if (v == 1) pos = true;
        else if (v == -1) neg = true;
        else throw ParameterError("solve_binary: labels must be +1 or -1");
    }
    if (!pos || !neg) throw DegenerateProblemError("solve_binary: labels contain a single class");
}

// Gradient of f(alpha) = 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij.
Eigen::VectorXd full_gradient(const Eigen::MatrixXd& k, std::span<const int> y, const std::vector<double>& alpha) {
    const auto n = k.rows();
    Eigen::VectorXd ya(n);
    for (Eigen::Index i = 0; i < n; ++i) ya(i) = alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    Eigen::VectorXd kya = k * ya;
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) g(i) = y[static_cast<std::size_t>(i)] * kya(i) - 1.0;
    return g;
}

bool in_up(int y, double a, double c) { return y == 1 ? a < c : a > 0.0; }
bool in_low(int y, double a, double c) { return y == 1 ? a > 0.0 : a < c; }

double dual_from_gradient(const Eigen::VectorXd& g, const std::vector<double>& alpha) {
    // W = sum a - 1/2 a'Qa, and a'Qa = sum a_i (g_i + 1).
    double sum_a = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        sum_a += alpha[i];
        quad += alpha[i] * (g(static_cast<Eigen::Index>(i)) + 1.0);
    }
    return sum_a - 0.5 * quad;
}

double compute_bias(const Eigen::VectorXd& g, std::span<const int> y, const std::vector<double>& alpha, double c) {
    double free_sum = 0.0;
    int free_count = 0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double v = -y[i] * g(static_cast<Eigen::Index>(i));
        if (alpha[i] > 0.0 && alpha[i] < c) {
            free_sum += v;
            ++free_count;
        } else {
            if (in_up(y[i], alpha[i], c)) lower = std::max(lower, v);
            if (in_low(y[i], alpha[i], c)) upper = std::min(upper, v);
        }
    }
    if (free_count > 0) return free_sum / free_count;
    if (!std::isfinite(lower)) return upper;
    if (!std::isfinite(upper)) return lower;
    return 0.5 * (lower + upper);
}

}  // namespace

SvmObjectives svm_objectives(const Eigen::MatrixXd& kernel, const SvmModel& model) {
    const std::span<const int> y(model.labels);
    const Eigen::VectorXd g = full_gradient(kernel, y, model.alpha);
    SvmObjectives out;
    out.dual = dual_from_gradient(g, model.alpha);
    double quad = 0.0, hinge = 0.0;
    for (std::size_t i = 0; i < model.alpha.size(); ++i) {
        const double gi = g(static_cast<Eigen::Index>(i));
        quad += model.alpha[i] * (gi + 1.0);
        // y_i f(x_i) = (g_i + 1) + y_i b
        const double margin = gi + 1.0 + y[i] * model.bias;
        hinge += std::max(0.0, 1.0 - margin);
    }
    out.primal = 0.5 * quad + model.c_reg * hinge;
    out.gap = out.primal - out.dual;
    return out;
}

SvmModel solve_binary(const Eigen::MatrixXd& kernel, std::span<const int> labels, const SolverOptions& opt) {
    check_problem(kernel, labels, opt.c_reg, opt.tol);
    if (opt.check_kernel) {
        const double scale = std::max(1.0, kernel.cwiseAbs().maxCoeff());
        if ((kernel - kernel.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw KernelError("solve_binary: kernel is not symmetric");
        }
        if (!is_psd(kernel)) throw KernelError("solve_binary: kernel is not positive semi-definite");
    }

    const auto n = kernel.rows();
    const double c = opt.c_reg;
    const std::span<const int> y = labels;
    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    Eigen::VectorXd g = Eigen::VectorXd::Constant(n, -1.0);

    SvmModel model;
    model.labels.assign(labels.begin(), labels.end());
    model.c_reg = c;

    double eps = std::max(opt.tol, 1e-3);
    bool stalled = false;
    long iteration = 0;
    double objective = 0.0;
    while (true) {
        // Most violating pair over -y_i g_i.
        std::ptrdiff_t i_best = -1, j_best = -1;
        double up_max = -std::numeric_limits<double>::infinity();
        double low_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            const double v = -y[ts] * g(t);
            if (in_up(y[ts], alpha[ts], c) && v > up_max) {
                up_max = v;
                i_best = t;
            }
            if (in_low(y[ts], alpha[ts], c) && v < low_min) {
                low_min = v;
                j_best = t;
            }
        }

        if (stalled || i_best < 0 || j_best < 0 || up_max - low_min <= eps) {
            // Refresh the gradient to shed accumulated rounding, then certify.
            g = full_gradient(kernel, y, alpha);
            model.alpha = alpha;
            model.bias = compute_bias(g, y, alpha, c);
            const auto obj = svm_objectives(kernel, model);
            if (obj.gap <= opt.tol * (1.0 + std::abs(obj.primal))) break;
            if (eps <= 1e-15) {
                throw SolverStallError("solve_binary: duality gap " + std::to_string(obj.gap) +
                                       " cannot be brought under the tolerance in double precision");
            }
            eps *= 0.1;
            stalled = false;
            continue;
        }
        if (iteration >= opt.max_iterations) {
            throw SolverStallError("solve_binary: iteration limit reached before the duality gap closed");
        }

        const auto i = static_cast<std::size_t>(i_best);
        const auto j = static_cast<std::size_t>(j_best);
        // Step along alpha_i += y_i t, alpha_j -= y_j t.
        double curvature = kernel(i_best, i_best) + kernel(j_best, j_best) - 2.0 * kernel(i_best, j_best);
        if (curvature <= 0.0) curvature = 1e-12;
        double t = (up_max - low_min) / curvature;
        const double bound_i = y[i] == 1 ? c - alpha[i] : alpha[i];
        const double bound_j = y[j] == 1 ? alpha[j] : c - alpha[j];
        t = std::min({t, bound_i, bound_j});
        const double next_i = t == bound_i ? (y[i] == 1 ? c : 0.0) : alpha[i] + y[i] * t;
        const double next_j = t == bound_j ? (y[j] == 1 ? 0.0 : c) : alpha[j] - y[j] * t;
        if (next_i == alpha[i] && next_j == alpha[j]) {
            // The step is below the resolution of alpha.
            stalled = true;
            continue;
        }
        alpha[i] = next_i;
        alpha[j] = next_j;

        for (Eigen::Index k = 0; k < n; ++k) {
            g(k) += t * y[static_cast<std::size_t>(k)] * (kernel(k, i_best) - kernel(k, j_best));
        }
        ++iteration;
        if (opt.observer) {
            objective = dual_from_gradient(g, alpha);
            opt.observer({static_cast<int>(iteration), alpha, objective});
        }
    }
    return model;
}

SvmModel solve_binary(const Eigen::MatrixXd& kernel, std::span<const int> labels, double c_reg, double tol) {
    SolverOptions opt;
    opt.c_reg = c_reg;
    opt.tol = tol;
    return solve_binary(kernel, labels, opt);
}

double decision(const SvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& k_row) {
    if (k_row.size() != static_cast<Eigen::Index>(model.alpha.size())) {
        throw ShapeError("decision: kernel row has " + std::to_string(k_row.size()) + " entries, model has " +
                         std::to_string(model.alpha.size()) + " training videos");
    }
    double s = model.bias;
    for (std::size_t i = 0; i < model.alpha.size(); ++i) {
        if (model.alpha[i] != 0.0) s += model.alpha[i] * model.labels[i] * k_row(static_cast<Eigen::Index>(i));
    }
    return s;
}

std::vector<SvmModel> train_one_vs_rest(const Eigen::MatrixXd& kernel, std::span<const int> labels, int num_classes,
                                        double c_reg, double tol) {
    if (num_classes < 2) throw DegenerateProblemError("train_one_vs_rest: need at least two classes");
    if (static_cast<Eigen::Index>(labels.size()) != kernel.rows() || kernel.rows() != kernel.cols()) {
        throw ShapeError("train_one_vs_rest: kernel/label size mismatch");
    }
    std::vector<int> counts(static_cast<std::size_t>(num_classes) + 1, 0);
    for (int l : labels) {
        if (l < 1 || l > num_classes) throw ParameterError("train_one_vs_rest: label " + std::to_string(l) + " out of range");
        ++counts[static_cast<std::size_t>(l)];
    }
    for (int c = 1; c <= num_classes; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            throw DegenerateProblemError("train_one_vs_rest: class " + std::to_string(c) + " has no training samples");
        }
    }
    if (!is_psd(kernel)) throw KernelError("train_one_vs_rest: kernel is not positive semi-definite");

    SolverOptions opt;
    opt.c_reg = c_reg;
    opt.tol = tol;
    opt.check_kernel = false;

    std::vector<std::future<SvmModel>> jobs;
    for (int c = 1; c <= num_classes; ++c) {
        jobs.push_back(std::async(std::launch::async, [&, c] {
            std::vector<int> y(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == c ? 1 : -1;
            SvmModel m = solve_binary(kernel, y, opt);
            m.class_id = c;
            return m;
        }));
    }
    std::vector<SvmModel> models;
    for (auto& j : jobs) models.push_back(j.get());
    return models;
}

Eigen::MatrixXd decision_matrix(std::span<const SvmModel> models, const Eigen::MatrixXd& k_rows) {
    Eigen::MatrixXd out(k_rows.rows(), static_cast<Eigen::Index>(models.size()));
    for (Eigen::Index r = 0; r < k_rows.rows(); ++r) {
        const Eigen::VectorXd row = k_rows.row(r).transpose();
        for (std::size_t c = 0; c < models.size(); ++c) out(r, static_cast<Eigen::Index>(c)) = decision(models[c], row);
    }
    return out;
}

int argmax_class(const Eigen::Ref<const Eigen::VectorXd>& scores) {
    if (scores.size() == 0) throw ShapeError("argmax_class: empty score vector");
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.size(); ++c) {
        if (scores(c) > scores(best)) best = c;
    }
    return static_cast<int>(best) + 1;
}

std::vector<int> predict(std::span<const SvmModel> models, const Eigen::MatrixXd& k_rows) {
    const Eigen::MatrixXd d = decision_matrix(models, k_rows);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(d.rows()));
    for (Eigen::Index r = 0; r < d.rows(); ++r) out.push_back(argmax_class(d.row(r).transpose()));
    return out;
}

}  // namespace tpmkl
