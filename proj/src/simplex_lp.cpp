#include "tpmkl/simplex_lp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tpmkl/error.hpp"

namespace tpmkl {

namespace {

constexpr double kCostEps = 1e-10;
constexpr double kPivotEps = 1e-10;

class Tableau {
public:
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    Tableau(Eigen::Index rows, Eigen::Index cols)
        : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(static_cast<std::size_t>(rows), -1) {}

    Eigen::Index rows() const { return t_.rows() - 1; }
    Eigen::Index cols() const { return t_.cols() - 1; }
    double& at(Eigen::Index r, Eigen::Index c) { return t_(r, c); }
    double& rhs(Eigen::Index r) { return t_(r, cols()); }
    double& cost(Eigen::Index c) { return t_(rows(), c); }
    double& objective() { return t_(rows(), cols()); }
    std::vector<Eigen::Index>& basis() { return basis_; }

    void pivot(Eigen::Index r, Eigen::Index c) {
        t_.row(r) /= t_(r, c);
        t_(r, c) = 1.0;
        // The pivot row is usually sparse; touch only its nonzero columns.
        nonzero_.clear();
        for (Eigen::Index j = 0; j < t_.cols(); ++j) {
            if (t_(r, j) != 0.0) nonzero_.push_back(j);
        }
        for (Eigen::Index i = 0; i < t_.rows(); ++i) {
            if (i == r) continue;
            const double f = t_(i, c);
            if (f == 0.0) continue;
            double* row = t_.row(i).data();
            const double* prow = t_.row(r).data();
            for (Eigen::Index j : nonzero_) row[j] -= f * prow[j];
            row[c] = 0.0;
        }
        basis_[static_cast<std::size_t>(r)] = c;
    }

    // Bland: lowest-index improving column; among minimum-ratio rows the one
    // whose basic variable has the lowest index. Returns false at optimality.
    bool step(Eigen::Index allowed_cols, long& pivots, long max_pivots) {
        Eigen::Index enter = -1;
        for (Eigen::Index c = 0; c < allowed_cols; ++c) {
            if (cost(c) < -kCostEps) {
                enter = c;
                break;
            }
        }
        if (enter < 0) return false;

        Eigen::Index leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (Eigen::Index r = 0; r < rows(); ++r) {
            const double a = at(r, enter);
            if (a <= kPivotEps) continue;
            const double ratio = rhs(r) / a;
            const double tie = 1e-12 * std::max(1.0, std::abs(ratio));
            if (leave < 0 || ratio < best_ratio - tie) {
                leave = r;
                best_ratio = ratio;
            } else if (ratio <= best_ratio + tie &&
                       basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)]) {
                leave = r;
                best_ratio = std::min(best_ratio, ratio);
            }
        }
        if (leave < 0) throw Error("solve_lp: problem is unbounded");
        if (++pivots > max_pivots) {
            throw SolverStallError("solve_lp: no optimum after " + std::to_string(max_pivots) + " pivots");
        }
        pivot(leave, enter);
        return true;
    }

private:
    Matrix t_;
    std::vector<Eigen::Index> basis_;
    std::vector<Eigen::Index> nonzero_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, long max_pivots) {
    const Eigen::Index m = lp.a.rows();
    const Eigen::Index n = lp.a.cols();
    if (lp.b.size() != m || static_cast<Eigen::Index>(lp.sense.size()) != m || lp.cost.size() != n || n == 0) {
        throw ParameterError("solve_lp: inconsistent problem dimensions");
    }

    // Normalize to b >= 0, flipping inequality senses with the sign.
    Eigen::MatrixXd a = lp.a;
    Eigen::VectorXd b = lp.b;
    std::vector<Sense> sense = lp.sense;
    Eigen::Index slack_count = 0, artificial_count = 0;
    std::vector<double> flip(static_cast<std::size_t>(m), 1.0);
    for (Eigen::Index r = 0; r < m; ++r) {
        auto& s = sense[static_cast<std::size_t>(r)];
        if (b(r) < 0.0) {
            flip[static_cast<std::size_t>(r)] = -1.0;
            a.row(r) *= -1.0;
            b(r) = -b(r);
            if (s == Sense::LessEqual) s = Sense::GreaterEqual;
            else if (s == Sense::GreaterEqual) s = Sense::LessEqual;
        }
        if (s != Sense::Equal) ++slack_count;
        if (s != Sense::LessEqual) ++artificial_count;
    }

    // Columns: original | slack/surplus | artificial.
    const Eigen::Index first_artificial = n + slack_count;
    Tableau tab(m, first_artificial + artificial_count);
    Eigen::Index next_slack = n, next_artificial = first_artificial;
    // Column holding +e_r in the initial tableau; its final reduced cost is -y_r.
    std::vector<Eigen::Index> unit_column(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) tab.at(r, c) = a(r, c);
        tab.rhs(r) = b(r);
        switch (sense[static_cast<std::size_t>(r)]) {
            case Sense::LessEqual:
                tab.at(r, next_slack) = 1.0;
                unit_column[static_cast<std::size_t>(r)] = next_slack;
                tab.basis()[static_cast<std::size_t>(r)] = next_slack++;
                break;
            case Sense::GreaterEqual:
                tab.at(r, next_slack++) = -1.0;
                [[fallthrough]];
            case Sense::Equal:
                tab.at(r, next_artificial) = 1.0;
                unit_column[static_cast<std::size_t>(r)] = next_artificial;
                tab.basis()[static_cast<std::size_t>(r)] = next_artificial++;
                break;
        }
    }

    const long budget = max_pivots > 0 ? max_pivots : 50 * static_cast<long>(m + tab.cols());
    long pivots = 0;

    // Phase 1: minimize the sum of artificials.
    if (artificial_count > 0) {
        for (Eigen::Index r = 0; r < m; ++r) {
            if (tab.basis()[static_cast<std::size_t>(r)] < first_artificial) continue;
            for (Eigen::Index c = 0; c < first_artificial; ++c) tab.cost(c) -= tab.at(r, c);
            tab.objective() -= tab.rhs(r);
        }
        while (tab.step(first_artificial, pivots, budget)) {
        }
        const double infeasibility = -tab.objective();
        if (infeasibility > 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
            throw Error("solve_lp: problem is infeasible (phase-1 residual " + std::to_string(infeasibility) + ")");
        }
        // Drive zero-level artificials out of the basis where possible.
        for (Eigen::Index r = 0; r < m; ++r) {
            if (tab.basis()[static_cast<std::size_t>(r)] < first_artificial) continue;
            for (Eigen::Index c = 0; c < first_artificial; ++c) {
                if (std::abs(tab.at(r, c)) > 1e-9) {
                    tab.pivot(r, c);
                    break;
                }
            }
        }
    }

    // Phase 2: reduced costs of the real objective under the current basis.
    for (Eigen::Index c = 0; c <= tab.cols(); ++c) tab.cost(c) = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) tab.cost(c) = lp.cost(c);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index bc = tab.basis()[static_cast<std::size_t>(r)];
        const double cb = bc < n ? lp.cost(bc) : 0.0;
        if (cb == 0.0) continue;
        for (Eigen::Index c = 0; c < tab.cols(); ++c) tab.cost(c) -= cb * tab.at(r, c);
        tab.objective() -= cb * tab.rhs(r);
    }
    while (tab.step(first_artificial, pivots, budget)) {
    }

    LpSolution sol;
    sol.x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index bc = tab.basis()[static_cast<std::size_t>(r)];
        if (bc < n) sol.x(bc) = std::max(0.0, tab.rhs(r));
    }
    sol.objective = lp.cost.dot(sol.x);
    sol.duals.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        sol.duals(r) = -flip[static_cast<std::size_t>(r)] * tab.cost(unit_column[static_cast<std::size_t>(r)]);
    }
    sol.pivots = pivots;
    return sol;
}

}  // namespace tpmkl
