#include "tpmkl/mkl.hpp"

#include <algorithm>
#include <cmath>

#include "tpmkl/error.hpp"
#include "tpmkl/simplex_lp.hpp"

namespace tpmkl {

namespace {

int max_label(std::span<const int> labels) {
    int c = 0;
    for (int l : labels) c = std::max(c, l);
    return c;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

Eigen::VectorXd LpProblem::slacks(const std::vector<double>& beta) const {
    if (beta.size() != nodes.size()) throw ShapeError("LpProblem: beta has wrong length");
    const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(num_videos);
    const Eigen::VectorXd gaps = margins * b + bias_gap;
    for (Eigen::Index r = 0; r < gaps.size(); ++r) {
        auto& x = xi(row_video[static_cast<std::size_t>(r)]);
        x = std::max(x, 1.0 - gaps(r));
    }
    return xi;
}

double LpProblem::objective(const std::vector<double>& beta) const {
    const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
    return 0.5 * regularizer.dot(b) + slacks(beta).sum();
}

std::vector<SvmModel> qp_step(const KernelBank& bank, const SimplexWeights& beta, std::span<const int> labels,
                              double c_reg, double tol) {
    beta.validate();
    if (static_cast<Eigen::Index>(labels.size()) != bank.size()) throw ShapeError("qp_step: label count differs from bank");
    return train_one_vs_rest(combine(bank, beta), labels, max_label(labels), c_reg, tol);
}

LpProblem build_lp(const KernelBank& bank, std::span<const SvmModel> svms, std::span<const int> labels) {
    const Eigen::Index n = bank.size();
    const auto classes = static_cast<Eigen::Index>(svms.size());
    if (static_cast<Eigen::Index>(labels.size()) != n) throw ShapeError("build_lp: label count differs from bank");
    Eigen::MatrixXd coef(n, classes);  // signed alphas, one column per class
    for (Eigen::Index c = 0; c < classes; ++c) {
        const auto& m = svms[static_cast<std::size_t>(c)];
        if (m.class_id != c + 1) throw ShapeError("build_lp: models must be ordered by class id");
        if (static_cast<Eigen::Index>(m.alpha.size()) != n) throw ShapeError("build_lp: model size differs from bank");
        coef.col(c) = m.signed_alpha();
    }
    for (int l : labels) {
        if (l < 1 || l > classes) throw ShapeError("build_lp: label out of range");
    }

    LpProblem p;
    p.nodes = bank.node_ids;
    p.num_videos = static_cast<int>(n);
    const auto nodes = static_cast<Eigen::Index>(bank.node_count());
    p.regularizer.resize(nodes);
    const Eigen::Index rows = n * (classes - 1);
    p.margins.resize(rows, nodes);
    p.bias_gap.resize(rows);
    for (Eigen::Index j = 0; j < n; ++j) {
        const int cj = labels[static_cast<std::size_t>(j)];
        for (int c = 1; c <= classes; ++c) {
            if (c == cj) continue;
            p.row_video.push_back(static_cast<int>(j));
            p.row_competitor.push_back(c);
        }
    }

    for (Eigen::Index m = 0; m < nodes; ++m) {
        // scores(j, c) = <w_c^node, Psi^node(V_j)> (normalized kernel units)
        const Eigen::MatrixXd scores = bank.grams[static_cast<std::size_t>(m)] * coef;
        p.regularizer(m) = (coef.array() * scores.array()).sum();
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Eigen::Index j = p.row_video[static_cast<std::size_t>(r)];
            const Eigen::Index own = labels[static_cast<std::size_t>(j)] - 1;
            const Eigen::Index other = p.row_competitor[static_cast<std::size_t>(r)] - 1;
            p.margins(r, m) = scores(j, own) - scores(j, other);
        }
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index j = p.row_video[static_cast<std::size_t>(r)];
        const auto own = static_cast<std::size_t>(labels[static_cast<std::size_t>(j)] - 1);
        const auto other = static_cast<std::size_t>(p.row_competitor[static_cast<std::size_t>(r)] - 1);
        p.bias_gap(r) = svms[own].bias - svms[other].bias;
    }
    return p;
}

LinearProgram primal_lp(const LpProblem& problem) {
    const auto nodes = static_cast<Eigen::Index>(problem.nodes.size());
    const Eigen::Index videos = problem.num_videos;
    const Eigen::Index rows = problem.margins.rows();
    // Variables: beta (nodes) then xi (videos).
    LinearProgram lp;
    lp.a = Eigen::MatrixXd::Zero(rows + 1, nodes + videos);
    lp.b.resize(rows + 1);
    lp.sense.assign(static_cast<std::size_t>(rows + 1), Sense::GreaterEqual);
    lp.cost.resize(nodes + videos);
    lp.cost.head(nodes) = 0.5 * problem.regularizer;
    lp.cost.tail(videos).setOnes();

    lp.a.row(0).head(nodes).setOnes();
    lp.b(0) = 1.0;
    lp.sense[0] = Sense::Equal;
    for (Eigen::Index r = 0; r < rows; ++r) {
        lp.a.row(r + 1).head(nodes) = problem.margins.row(r);
        lp.a(r + 1, nodes + problem.row_video[static_cast<std::size_t>(r)]) = 1.0;
        lp.b(r + 1) = 1.0 - problem.bias_gap(r);
    }
    return lp;
}

LinearProgram dual_lp(const LpProblem& problem) {
    const auto nodes = static_cast<Eigen::Index>(problem.nodes.size());
    const Eigen::Index videos = problem.num_videos;
    const Eigen::Index rows = problem.margins.rows();
    // Variables: lambda (one per margin row), then mu = mu_plus - mu_minus
    // for the simplex equality. Rows: one per node, then one per video.
    LinearProgram lp;
    lp.a = Eigen::MatrixXd::Zero(nodes + videos, rows + 2);
    lp.b.resize(nodes + videos);
    lp.sense.assign(static_cast<std::size_t>(nodes + videos), Sense::LessEqual);
    lp.cost.resize(rows + 2);
    lp.a.topLeftCorner(nodes, rows) = problem.margins.transpose();
    lp.a.col(rows).head(nodes).setOnes();
    lp.a.col(rows + 1).head(nodes).setConstant(-1.0);
    lp.b.head(nodes) = 0.5 * problem.regularizer;
    for (Eigen::Index r = 0; r < rows; ++r) {
        lp.a(nodes + problem.row_video[static_cast<std::size_t>(r)], r) = 1.0;
        lp.cost(r) = -(1.0 - problem.bias_gap(r));
    }
    lp.b.tail(videos).setOnes();
    lp.cost(rows) = -1.0;
    lp.cost(rows + 1) = 1.0;
    return lp;
}

SimplexWeights lp_step(const LpProblem& problem) {
    const auto nodes = static_cast<Eigen::Index>(problem.nodes.size());
    if (nodes == 0) throw ParameterError("lp_step: no nodes");
    if (nodes == 1) return {problem.nodes, {1.0}};

    // The dual starts from a feasible slack basis; beta is read off its
    // multipliers on the node rows.
    const LpSolution sol = solve_lp(dual_lp(problem));
    SimplexWeights w{problem.nodes, std::vector<double>(static_cast<std::size_t>(nodes))};
    double sum = 0.0;
    for (Eigen::Index i = 0; i < nodes; ++i) {
        const double b = std::max(0.0, -sol.duals(i));
        w.beta[static_cast<std::size_t>(i)] = b;
        sum += b;
    }
    if (!(sum > 0.0)) throw SolverStallError("lp_step: simplex returned an empty weight vector");
    for (double& b : w.beta) b /= sum;
    return w;
}

MklModel train_fixed(const KernelBank& bank, std::span<const int> labels, const SimplexWeights& beta,
                     const MklOptions& options) {
    MklModel model;
    model.beta = beta;
    model.svms = qp_step(bank, beta, labels, options.c_reg, options.tol);
    model.objective_trace.push_back(build_lp(bank, model.svms, labels).objective(beta.beta));
    model.converged = true;
    return model;
}

MklModel train_mkl(const KernelBank& bank, std::span<const int> labels, const MklOptions& options) {
    if (options.max_outer < 1) throw ParameterError("train_mkl: max_outer must be >= 1");
    if (!(options.tol_outer >= 0.0)) throw ParameterError("train_mkl: tol_outer must be >= 0");

    MklModel model;
    model.beta = SimplexWeights::uniform(bank.node_ids);
    model.svms = qp_step(bank, model.beta, labels, options.c_reg, options.tol);
    LpProblem lp = build_lp(bank, model.svms, labels);
    model.objective_trace.push_back(lp.objective(model.beta.beta));

    while (model.iterations < options.max_outer) {
        ++model.iterations;
        MklIteration step;
        step.objective_before = lp.objective(model.beta.beta);
        step.beta = lp_step(lp);
        step.objective_after = lp.objective(step.beta.beta);
        // Ties among optimal betas keep the current one.
        const double margin = 1e-9 * (1.0 + std::abs(step.objective_before));
        if (!(step.objective_after < step.objective_before - margin)) {
            step.beta = model.beta;
            step.objective_after = step.objective_before;
        }
        const double delta = max_abs_diff(step.beta.beta, model.beta.beta);
        if (delta <= options.tol_outer) {
            model.history.push_back(step);
            model.converged = true;
            break;
        }

        auto svms = qp_step(bank, step.beta, labels, options.c_reg, options.tol);
        LpProblem next = build_lp(bank, svms, labels);
        const double retrained = next.objective(step.beta.beta);
        model.beta = step.beta;
        if (retrained <= step.objective_after) {
            model.svms = std::move(svms);
            lp = std::move(next);
            model.objective_trace.push_back(retrained);
        } else {
            // Keep the SVMs the LP step optimized against; the next LP step
            // then reproduces this beta and the loop terminates.
            step.qp_accepted = false;
            model.objective_trace.push_back(step.objective_after);
        }
        model.history.push_back(step);
    }
    return model;
}

}  // namespace tpmkl
