#pragma once

// Dense two-phase primal simplex on a full tableau, Bland's rule throughout.
// Solves  min c'x  s.t.  A x (<=|>=|=) b,  x >= 0,  and reads the constraint
// multipliers off the final reduced costs.

#include <vector>

#include <Eigen/Core>

namespace tpmkl {

enum class Sense { LessEqual, GreaterEqual, Equal };

struct LinearProgram {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    std::vector<Sense> sense;
    Eigen::VectorXd cost;
};

struct LpSolution {
    Eigen::VectorXd x;
    /// Constraint multipliers y with c'x = b'y at the optimum (y <= 0 on
    /// LessEqual rows, y >= 0 on GreaterEqual rows).
    Eigen::VectorXd duals;
    double objective = 0.0;
    long pivots = 0;
};

/// Throws ParameterError on malformed input, Error on infeasible/unbounded
/// problems, SolverStallError if the pivot budget (default 50 * (rows + cols))
/// runs out.
LpSolution solve_lp(const LinearProgram& lp, long max_pivots = 0);

}  // namespace tpmkl
