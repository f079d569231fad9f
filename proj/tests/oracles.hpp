#pragma once
// Independent reference solvers. None of these call into the solvers they
// check; they share only the problem data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tpmkl/mkl.hpp"
#include "tpmkl/simplex_lp.hpp"

namespace tpmkl::testing {

// ---- SVM dual ----------------------------------------------------------------

struct SvmInstance {
    Eigen::MatrixXd x;
    Eigen::MatrixXd k;
    std::vector<int> y;
};

// Linear-kernel instance. Separable labels come from a random hyperplane with
// a margin gap; otherwise a fraction of labels is flipped.
template <typename Rng>
inline SvmInstance random_svm_instance(Rng& rng, int n, int dim, bool separable) {
    SvmInstance in;
    in.x.resize(n, dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd w(dim);
    for (int d = 0; d < dim; ++d) w(d) = normal(rng);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < dim; ++d) in.x(i, d) = normal(rng);
        double s = in.x.row(i).dot(w);
        if (separable && std::abs(s) < 0.3) {
            in.x.row(i) += (0.3 - std::abs(s) + 0.1) * (s >= 0 ? 1.0 : -1.0) * w.transpose() / w.squaredNorm();
            s = in.x.row(i).dot(w);
        }
        int label = s >= 0 ? 1 : -1;
        if (!separable && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.2) label = -label;
        in.y.push_back(label);
    }
    if (std::count(in.y.begin(), in.y.end(), 1) == 0) in.y[0] = 1;
    if (std::count(in.y.begin(), in.y.end(), -1) == 0) in.y[0] = -1;
    in.k = in.x * in.x.transpose();
    return in;
}

struct DualSolution {
    Eigen::VectorXd alpha;
    double bias = 0.0;
    double dual = 0.0;
};

inline double svm_dual_value(const Eigen::MatrixXd& q, const Eigen::VectorXd& alpha) {
    return alpha.sum() - 0.5 * alpha.dot(q * alpha);
}

// Euclidean projection onto {0 <= a <= c, y'a = 0} by bisection on the
// multiplier of the equality.
inline Eigen::VectorXd project_box_hyperplane(const Eigen::VectorXd& v, const Eigen::VectorXd& y, double c) {
    auto at = [&](double mu) { return (v - mu * y).cwiseMax(0.0).cwiseMin(c).eval(); };
    double lo = -(v.cwiseAbs().maxCoeff() + c) - 1.0, hi = -lo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (y.dot(at(mid)) > 0.0) lo = mid;
        else hi = mid;
    }
    return at(0.5 * (lo + hi));
}

/// Accelerated projected gradient ascent on the dual, then an active-set
/// polish: with the bound set fixed, the KKT system of the free variables
/// is solved directly, giving alpha and b to machine precision.
inline DualSolution pg_svm(const Eigen::MatrixXd& k, const std::vector<int>& labels, double c,
                           int iterations = 40000) {
    const Eigen::Index n = k.rows();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd q = y.asDiagonal() * k * y.asDiagonal();
    const double lipschitz = std::max(1e-12, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff());

    Eigen::VectorXd a = Eigen::VectorXd::Zero(n), z = a;
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd next = project_box_hyperplane(z + (Eigen::VectorXd::Ones(n) - q * z) / lipschitz, y, c);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / t_next) * (next - a);
        const double moved = (next - a).cwiseAbs().maxCoeff();
        a = next;
        t = t_next;
        if (moved <= 1e-14 * std::max(1.0, c)) break;
    }

    // Polish: classify each variable as at 0, at C or free, solve the KKT
    // system of the free ones, then move variables whose bound violates the
    // KKT sign conditions (or free ones that leave the box) and re-solve.
    const double snap = 1e-7 * c;
    enum class State { Low, Up, Free };
    std::vector<State> state(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        state[static_cast<std::size_t>(i)] = a(i) <= snap ? State::Low : a(i) >= c - snap ? State::Up : State::Free;
    }
    DualSolution out;
    for (int round = 0; round < 4 * n + 10; ++round) {
        std::vector<Eigen::Index> free;
        Eigen::VectorXd fixed = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const State st = state[static_cast<std::size_t>(i)];
            if (st == State::Free) free.push_back(i);
            else if (st == State::Up) fixed(i) = c;
        }
        Eigen::VectorXd trial = fixed;
        double b = 0.0;
        if (free.empty()) {
            // b is only bounded by the sign conditions; take the interval midpoint.
            const Eigen::VectorXd qa = q * fixed;
            double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < n; ++i) {
                const bool at_low = state[static_cast<std::size_t>(i)] == State::Low;
                // at 0: y_i b >= 1 - qa_i; at C: y_i b <= 1 - qa_i.
                if ((y(i) > 0) == at_low) lo = std::max(lo, y(i) * (1.0 - qa(i)));
                else hi = std::min(hi, y(i) * (1.0 - qa(i)));
            }
            b = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : std::isfinite(lo) ? lo : hi;
        } else {
            const auto f = static_cast<Eigen::Index>(free.size());
            const Eigen::VectorXd qfixed = q * fixed;
            Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(f + 1, f + 1);
            Eigen::VectorXd rhs(f + 1);
            for (Eigen::Index r = 0; r < f; ++r) {
                const Eigen::Index i = free[static_cast<std::size_t>(r)];
                for (Eigen::Index s = 0; s < f; ++s) sys(r, s) = q(i, free[static_cast<std::size_t>(s)]);
                sys(r, f) = y(i);
                sys(f, r) = y(i);
                rhs(r) = 1.0 - qfixed(i);
            }
            rhs(f) = -y.dot(fixed);
            const Eigen::VectorXd sol = sys.completeOrthogonalDecomposition().solve(rhs);
            for (Eigen::Index r = 0; r < f; ++r) trial(free[static_cast<std::size_t>(r)]) = sol(r);
            b = sol(f);
        }

        bool changed = false;
        for (Eigen::Index i : free) {
            if (trial(i) < -1e-12) state[static_cast<std::size_t>(i)] = State::Low, changed = true;
            else if (trial(i) > c + 1e-12) state[static_cast<std::size_t>(i)] = State::Up, changed = true;
        }
        if (changed) continue;
        // y_i f(x_i) = (Q alpha)_i + y_i b must be >= 1 at 0 and <= 1 at C.
        const Eigen::VectorXd margin = q * trial + b * y;
        Eigen::Index worst = -1;
        double worst_v = 1e-9;
        for (Eigen::Index i = 0; i < n; ++i) {
            const State st = state[static_cast<std::size_t>(i)];
            const double v = st == State::Low ? 1.0 - margin(i) : st == State::Up ? margin(i) - 1.0 : 0.0;
            if (v > worst_v) {
                worst_v = v;
                worst = i;
            }
        }
        if (worst < 0) {
            out.alpha = trial.cwiseMax(0.0).cwiseMin(c);
            out.bias = b;
            out.dual = svm_dual_value(q, out.alpha);
            if (out.dual >= svm_dual_value(q, a) - 1e-12) return out;
            break;
        }
        state[static_cast<std::size_t>(worst)] = State::Free;
    }
    // No free variables (or polish rejected): b from the KKT interval midpoint.
    out.alpha = a;
    const Eigen::VectorXd grad = q * a - Eigen::VectorXd::Ones(n);
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = -y(i) * grad(i);
        const bool up = (y(i) > 0 && a(i) < c - snap) || (y(i) < 0 && a(i) > snap);
        const bool low = (y(i) > 0 && a(i) > snap) || (y(i) < 0 && a(i) < c - snap);
        if (up) lo = std::max(lo, v);
        if (low) hi = std::min(hi, v);
    }
    out.bias = 0.5 * (lo + hi);
    out.dual = svm_dual_value(q, a);
    return out;
}

// ---- general LP by vertex enumeration ----------------------------------------

/// Minimum of a bounded, feasible LP with few variables: every vertex is the
/// solution of n active constraints drawn from the rows and x >= 0.
inline double enumerate_lp(const LinearProgram& lp, Eigen::VectorXd* argmin = nullptr) {
    const Eigen::Index m = lp.a.rows(), n = lp.a.cols();
    const Eigen::Index total = m + n;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(static_cast<std::size_t>(total), 0);
    std::fill(pick.end() - n, pick.end(), 1);
    do {
        Eigen::MatrixXd a(n, n);
        Eigen::VectorXd b(n);
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < total; ++i) {
            if (!pick[static_cast<std::size_t>(i)]) continue;
            if (i < m) {
                a.row(r) = lp.a.row(i);
                b(r) = lp.b(i);
            } else {
                a.row(r).setZero();
                a(r, i - m) = 1.0;
                b(r) = 0.0;
            }
            ++r;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd x = lu.solve(b);
        bool ok = x.minCoeff() >= -1e-9;
        for (Eigen::Index i = 0; ok && i < m; ++i) {
            const double lhs = lp.a.row(i).dot(x);
            const double slack = 1e-9 * (1.0 + std::abs(lp.b(i)));
            switch (lp.sense[static_cast<std::size_t>(i)]) {
                case Sense::LessEqual: ok = lhs <= lp.b(i) + slack; break;
                case Sense::GreaterEqual: ok = lhs >= lp.b(i) - slack; break;
                case Sense::Equal: ok = std::abs(lhs - lp.b(i)) <= slack; break;
            }
        }
        if (!ok) continue;
        const double v = lp.cost.dot(x);
        if (v < best) {
            best = v;
            if (argmin) *argmin = x;
        }
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

// ---- F(beta) over a small simplex --------------------------------------------

/// Embeds (u, v) of the 2-simplex {u, v >= 0, u + v <= 1} into beta for one,
/// two or three nodes.
inline std::vector<double> simplex_point(std::size_t nodes, double u, double v) {
    if (nodes == 1) return {1.0};
    if (nodes == 2) return {u, 1.0 - u};
    return {u, v, std::max(0.0, 1.0 - u - v)};
}

/// Grid search over the simplex with the given step, then repeated zooms
/// (step / 100 over a +-2 step window) around the incumbent.
inline double grid_lp_objective(const LpProblem& p, double step, int zooms = 3) {
    const std::size_t nodes = p.nodes.size();
    double best = std::numeric_limits<double>::infinity(), bu = 0.0, bv = 0.0;
    auto scan = [&](double u0, double u1, double v0, double v1, double h) {
        const long nu = static_cast<long>(std::llround((u1 - u0) / h));
        const long nv = nodes == 3 ? static_cast<long>(std::llround((v1 - v0) / h)) : 0;
        for (long i = 0; i <= nu; ++i) {
            const double u = std::clamp(u0 + static_cast<double>(i) * h, 0.0, 1.0);
            for (long j = 0; j <= nv; ++j) {
                const double v = nodes == 3 ? std::clamp(v0 + static_cast<double>(j) * h, 0.0, 1.0) : 0.0;
                if (u + v > 1.0 + 1e-15) continue;
                const double f = p.objective(simplex_point(nodes, u, v));
                if (f < best) {
                    best = f;
                    bu = u;
                    bv = v;
                }
            }
        }
    };
    if (nodes == 1) return p.objective({1.0});
    scan(0.0, 1.0, 0.0, 1.0, step);
    double h = step;
    for (int z = 0; z < zooms; ++z) {
        const double w = 2.0 * h;
        h /= 100.0;
        scan(bu - w, bu + w, bv - w, bv + w, h);
    }
    return best;
}

/// Exact minimum of F over the simplex for up to three nodes. F is convex
/// and piecewise linear in (u, v); its minimum is attained at a vertex of the
/// arrangement formed by the hinge kinks, the pairwise ties of rows sharing
/// a video, and the simplex edges.
inline double arrangement_lp_objective(const LpProblem& p) {
    const std::size_t nodes = p.nodes.size();
    if (nodes == 1) return p.objective({1.0});
    // Each row's margin is affine in (u, v): g = g0 + gu*u + gv*v.
    struct Line {
        double a, b, c;  // a*u + b*v = c
    };
    std::vector<Line> lines;
    auto affine = [&](Eigen::Index r) {
        const auto m = p.margins.row(r);
        const double last = m(static_cast<Eigen::Index>(nodes) - 1);
        const double g0 = last + p.bias_gap(r);
        const double gu = m(0) - last;
        const double gv = nodes == 3 ? m(1) - last : 0.0;
        return std::array<double, 3>{g0, gu, gv};
    };
    const Eigen::Index rows = p.margins.rows();
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto g = affine(r);
        lines.push_back({g[1], g[2], 1.0 - g[0]});
        for (Eigen::Index s = r + 1; s < rows; ++s) {
            if (p.row_video[static_cast<std::size_t>(r)] != p.row_video[static_cast<std::size_t>(s)]) continue;
            const auto h = affine(s);
            lines.push_back({g[1] - h[1], g[2] - h[2], h[0] - g[0]});
        }
    }
    lines.push_back({1.0, 0.0, 0.0});
    lines.push_back({0.0, 1.0, 0.0});
    lines.push_back({1.0, 1.0, 1.0});

    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](double u, double v) {
        if (u < -1e-12 || v < -1e-12 || u + v > 1.0 + 1e-12) return;
        u = std::max(0.0, u);
        v = std::max(0.0, v);
        if (u + v > 1.0) {
            const double s = u + v;
            u /= s;
            v /= s;
        }
        best = std::min(best, p.objective(simplex_point(nodes, u, v)));
    };
    if (nodes == 2) {
        // One-dimensional: breakpoints of each line in u.
        consider(0.0, 0.0);
        consider(1.0, 0.0);
        for (const auto& l : lines) {
            if (std::abs(l.a) > 1e-14) consider(l.c / l.a, 0.0);
        }
        return best;
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            const double det = lines[i].a * lines[j].b - lines[i].b * lines[j].a;
            if (std::abs(det) < 1e-14) continue;
            consider((lines[i].c * lines[j].b - lines[i].b * lines[j].c) / det,
                     (lines[i].a * lines[j].c - lines[i].c * lines[j].a) / det);
        }
    }
    return best;
}

/// A random LpProblem over `nodes` nodes, `videos` videos and `classes`
/// classes (one row per competing class). `zero_margins` sets m = 0.
template <typename Rng>
inline LpProblem random_lp_problem(Rng& rng, int nodes, int videos, int classes, bool zero_margins = false) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 2.0);
    LpProblem p;
    for (int i = 0; i < nodes; ++i) p.nodes.push_back({i == 0 ? 1 : 2, i == 0 ? 1 : i});
    p.regularizer.resize(nodes);
    for (int i = 0; i < nodes; ++i) p.regularizer(i) = unit(rng);
    p.num_videos = videos;
    const int rows = videos * (classes - 1);
    p.margins = Eigen::MatrixXd::Zero(rows, nodes);
    p.bias_gap.resize(rows);
    int r = 0;
    for (int j = 0; j < videos; ++j) {
        for (int c = 0; c < classes - 1; ++c, ++r) {
            if (!zero_margins) {
                for (int k = 0; k < nodes; ++k) p.margins(r, k) = normal(rng);
            }
            p.bias_gap(r) = 0.5 * normal(rng);
            p.row_video.push_back(j);
            p.row_competitor.push_back(c + 2);
        }
    }
    return p;
}

}  // namespace tpmkl::testing
