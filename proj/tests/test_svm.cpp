#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "tpmkl/error.hpp"
#include "tpmkl/svm.hpp"

using namespace tpmkl;
using namespace tpmkl::testing;

namespace {

Eigen::VectorXd train_decisions(const SvmModel& m, const Eigen::MatrixXd& k) {
    Eigen::VectorXd out(k.rows());
    for (Eigen::Index i = 0; i < k.rows(); ++i) out(i) = decision(m, k.col(i));
    return out;
}

}  // namespace

TEST(SolveBinary, TwoPointClosedForm) {
    const Eigen::Matrix2d k = Eigen::Matrix2d::Identity();
    const std::vector<int> y{1, -1};
    const SvmModel m = solve_binary(k, y, 10.0, 1e-6);
    EXPECT_NEAR(m.alpha[0], 1.0, 1e-10);
    EXPECT_NEAR(m.alpha[1], 1.0, 1e-10);
    EXPECT_NEAR(m.bias, 0.0, 1e-10);
    EXPECT_NEAR(decision(m, k.col(0)), 1.0, 1e-10);
    EXPECT_NEAR(decision(m, k.col(1)), -1.0, 1e-10);
}

TEST(Decision, Examples) {
    SvmModel zero;
    zero.alpha = {0.0, 0.0, 0.0};
    zero.labels = {1, -1, 1};
    zero.bias = 0.5;
    EXPECT_EQ(decision(zero, Eigen::Vector3d(3.0, -1.0, 9.0)), 0.5);

    SvmModel m;
    m.alpha = {0.5, 2.0, 1.0};
    m.labels = {1, -1, 1};
    m.bias = -0.25;
    Rng rng(20);
    const Eigen::Vector3d r1(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    const Eigen::Vector3d r2(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    const double a = 3.0;
    const double lhs = decision(m, a * r1 + r2);
    const double rhs = a * (decision(m, r1) - m.bias) + (decision(m, r2) - m.bias) + m.bias;
    EXPECT_NEAR(lhs, rhs, 1e-12);
    EXPECT_THROW(decision(m, Eigen::Vector2d(1, 2)), ShapeError);
}

TEST(SolveBinary, DualityGapAndInvariants) {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const bool separable = trial % 2 == 0;
        const auto in = random_svm_instance(rng, uniform_int(rng, 2, 30), uniform_int(rng, 1, 6), separable);
        const double c = separable ? 10.0 : uniform(rng, 0.1, 5.0);
        const SvmModel m = solve_binary(in.k, in.y, c, 1e-6);
        const auto obj = svm_objectives(in.k, m);
        EXPECT_LE(obj.gap, 1e-6 * (1.0 + std::abs(obj.primal)));
        EXPECT_GE(obj.gap, -1e-9 * (1.0 + std::abs(obj.primal)));
        double eq = 0.0;
        for (std::size_t i = 0; i < m.alpha.size(); ++i) {
            EXPECT_GE(m.alpha[i], 0.0);
            EXPECT_LE(m.alpha[i], c);
            eq += m.alpha[i] * m.labels[i];
        }
        EXPECT_LE(std::abs(eq), 1e-8);
    }
}

TEST(SolveBinary, MatchesProjectedGradientOracle) {
    Rng rng(22);
    for (int trial = 0; trial < 30; ++trial) {
        const bool separable = trial % 3 == 0;
        const auto in = random_svm_instance(rng, uniform_int(rng, 4, 30), uniform_int(rng, 2, 6), separable);
        const double c = separable ? 5.0 : uniform(rng, 0.2, 3.0);
        const SvmModel m = solve_binary(in.k, in.y, c, 1e-10);
        const DualSolution ref = pg_svm(in.k, in.y, c);
        const Eigen::VectorXd mine = train_decisions(m, in.k);
        Eigen::VectorXd y(in.k.rows());
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = in.y[static_cast<std::size_t>(i)];
        const Eigen::VectorXd theirs = in.k * y.cwiseProduct(ref.alpha) + Eigen::VectorXd::Constant(y.size(), ref.bias);
        EXPECT_LE((mine - theirs).cwiseAbs().maxCoeff(), 1e-4) << "trial " << trial;
        EXPECT_NEAR(svm_objectives(in.k, m).dual, ref.dual, 1e-6 * (1.0 + std::abs(ref.dual)));
    }
}

TEST(SolveBinary, OneDimensionalGridSearch) {
    // Separable points on a line; the primal is minimized over a (w, b) grid.
    Rng rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 10;
        Eigen::MatrixXd x(n, 1);
        std::vector<int> y;
        const double cut = uniform(rng, -1.0, 1.0);
        for (int i = 0; i < n; ++i) {
            double v = uniform(rng, -3.0, 3.0);
            if (std::abs(v - cut) < 0.2) v = cut + (i % 2 ? 0.2 : -0.2);
            x(i, 0) = v;
            y.push_back(v > cut ? 1 : -1);
        }
        if (std::count(y.begin(), y.end(), 1) == 0) { x(0, 0) = cut + 1.0; y[0] = 1; }
        if (std::count(y.begin(), y.end(), -1) == 0) { x(0, 0) = cut - 1.0; y[0] = -1; }
        const double c = 1.0;
        const Eigen::MatrixXd k = x * x.transpose();
        const SvmModel m = solve_binary(k, y, c, 1e-8);

        double best = std::numeric_limits<double>::infinity(), bw = 0, bb = 0;
        for (double w = -10.0; w <= 10.0; w += 0.01) {
            for (double b = -10.0; b <= 10.0; b += 0.01) {
                double f = 0.5 * w * w;
                for (int i = 0; i < n; ++i) f += c * std::max(0.0, 1.0 - y[static_cast<std::size_t>(i)] * (w * x(i, 0) + b));
                if (f < best) {
                    best = f;
                    bw = w;
                    bb = b;
                }
            }
        }
        int compared = 0;
        for (double t = -4.0; t <= 4.0; t += 0.05) {
            const double oracle = bw * t + bb;
            if (std::abs(oracle) < 0.1) continue;
            const Eigen::VectorXd row = x.col(0) * t;
            EXPECT_EQ(decision(m, row) > 0, oracle > 0) << "t=" << t;
            ++compared;
        }
        EXPECT_GT(compared, 100);
        EXPECT_LE(svm_objectives(k, m).primal, best + 1e-9);
    }
}

TEST(SolveBinary, DuplicatedTrainingSet) {
    Rng rng(24);
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = random_svm_instance(rng, uniform_int(rng, 4, 12), 3, trial % 2 == 0);
        const Eigen::Index n = in.k.rows();
        Eigen::MatrixXd x2(2 * n, in.x.cols());
        x2 << in.x, in.x;
        std::vector<int> y2 = in.y;
        y2.insert(y2.end(), in.y.begin(), in.y.end());
        const Eigen::MatrixXd k2 = x2 * x2.transpose();

        // Soft margin: every hinge term appears twice, so C halves.
        const double c = 1.0;
        const SvmModel once = solve_binary(in.k, in.y, c, 1e-12);
        const SvmModel twice = solve_binary(k2, y2, c / 2.0, 1e-12);
        for (Eigen::Index i = 0; i < n; ++i) {
            EXPECT_NEAR(decision(once, in.k.col(i)), decision(twice, k2.col(i)), 1e-6);
        }
    }
    // Hard margin: separable data with a box that never binds.
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = random_svm_instance(rng, uniform_int(rng, 4, 12), 2, true);
        const Eigen::Index n = in.k.rows();
        Eigen::MatrixXd x2(2 * n, in.x.cols());
        x2 << in.x, in.x;
        std::vector<int> y2 = in.y;
        y2.insert(y2.end(), in.y.begin(), in.y.end());
        const Eigen::MatrixXd k2 = x2 * x2.transpose();
        const SvmModel once = solve_binary(in.k, in.y, 100.0, 1e-10);
        const SvmModel twice = solve_binary(k2, y2, 100.0, 1e-10);
        ASSERT_LT(*std::max_element(once.alpha.begin(), once.alpha.end()), 50.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            EXPECT_NEAR(decision(once, in.k.col(i)), decision(twice, k2.col(i)), 1e-6);
        }
    }
}

TEST(SolveBinary, ObserverSeesFeasibleAscent) {
    Rng rng(25);
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = random_svm_instance(rng, 25, 4, trial % 2 == 0);
        SolverOptions opt;
        opt.c_reg = 2.0;
        double last = -std::numeric_limits<double>::infinity();
        int calls = 0;
        opt.observer = [&](const SolverProgress& p) {
            ++calls;
            double eq = 0.0;
            for (std::size_t i = 0; i < p.alpha.size(); ++i) {
                EXPECT_GE(p.alpha[i], 0.0);
                EXPECT_LE(p.alpha[i], opt.c_reg);
                eq += p.alpha[i] * in.y[i];
            }
            EXPECT_LE(std::abs(eq), 1e-8);
            EXPECT_GE(p.dual_objective, last - 1e-12);
            last = p.dual_objective;
        };
        solve_binary(in.k, in.y, opt);
        EXPECT_GT(calls, 0);
    }
}

TEST(SolveBinary, KernelScaleFoldsIntoC) {
    Rng rng(26);
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = random_svm_instance(rng, 20, 3, false);
        const double s = uniform(rng, 0.1, 10.0);
        const SvmModel base = solve_binary(in.k, in.y, 1.0, 1e-12);
        const SvmModel scaled = solve_binary(s * in.k, in.y, 1.0 / s, 1e-12);
        for (Eigen::Index i = 0; i < in.k.rows(); ++i) {
            EXPECT_NEAR(decision(base, in.k.col(i)), decision(scaled, s * in.k.col(i)), 1e-8);
        }
    }
}

TEST(SolveBinary, Deterministic) {
    Rng rng(27);
    const auto in = random_svm_instance(rng, 30, 4, false);
    const SvmModel a = solve_binary(in.k, in.y, 1.0, 1e-6);
    const SvmModel b = solve_binary(in.k, in.y, 1.0, 1e-6);
    EXPECT_EQ(a.alpha, b.alpha);
    EXPECT_EQ(a.bias, b.bias);
}

TEST(SolveBinary, Errors) {
    const Eigen::Matrix2d k = Eigen::Matrix2d::Identity();
    EXPECT_THROW(solve_binary(k, std::vector<int>{1, 1}, 1.0, 1e-6), DegenerateProblemError);
    EXPECT_THROW(solve_binary(k, std::vector<int>{1, 2}, 1.0, 1e-6), ParameterError);
    EXPECT_THROW(solve_binary(k, std::vector<int>{1, -1}, 0.0, 1e-6), ParameterError);
    EXPECT_THROW(solve_binary(k, std::vector<int>{1, -1, 1}, 1.0, 1e-6), ShapeError);
    const Eigen::Matrix2d indefinite = (Eigen::Matrix2d() << 1, 2, 2, 1).finished();
    EXPECT_THROW(solve_binary(indefinite, std::vector<int>{1, -1}, 1.0, 1e-6), KernelError);
    const Eigen::Matrix2d asym = (Eigen::Matrix2d() << 1, 0.5, 0, 1).finished();
    EXPECT_THROW(solve_binary(asym, std::vector<int>{1, -1}, 1.0, 1e-6), KernelError);

    Rng rng(31);
    const auto in = random_svm_instance(rng, 30, 3, false);
    SolverOptions opt;
    opt.max_iterations = 1;
    EXPECT_THROW(solve_binary(in.k, in.y, opt), SolverStallError);
}

TEST(OneVsRest, ErrorsNameTheClass) {
    const Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
    try {
        train_one_vs_rest(k, std::vector<int>{1, 1, 3}, 3, 1.0, 1e-6);
        FAIL() << "expected an error";
    } catch (const DegenerateProblemError& e) {
        EXPECT_NE(std::string(e.what()).find("class 2"), std::string::npos);
    }
    EXPECT_THROW(train_one_vs_rest(k, std::vector<int>{1, 2, 4}, 3, 1.0, 1e-6), ParameterError);
}

TEST(OneVsRest, MatchesIndependentBinarySolves) {
    Rng rng(28);
    const auto in = random_svm_instance(rng, 24, 3, false);
    std::vector<int> labels;
    for (int i = 0; i < 24; ++i) labels.push_back(1 + i % 3);
    const auto models = train_one_vs_rest(in.k, labels, 3, 1.0, 1e-6);
    ASSERT_EQ(models.size(), 3u);
    for (int c = 1; c <= 3; ++c) {
        std::vector<int> y;
        for (int l : labels) y.push_back(l == c ? 1 : -1);
        const SvmModel ref = solve_binary(in.k, y, 1.0, 1e-6);
        EXPECT_EQ(models[static_cast<std::size_t>(c - 1)].class_id, c);
        EXPECT_EQ(models[static_cast<std::size_t>(c - 1)].alpha, ref.alpha);
        EXPECT_EQ(models[static_cast<std::size_t>(c - 1)].labels, y);
    }
}

TEST(Predict, Examples) {
    std::vector<SvmModel> models(3);
    const double biases[] = {0.1, -0.2, 0.3};
    for (int c = 0; c < 3; ++c) {
        models[static_cast<std::size_t>(c)].alpha = {0.0, 0.0};
        models[static_cast<std::size_t>(c)].labels = {1, -1};
        models[static_cast<std::size_t>(c)].bias = biases[c];
        models[static_cast<std::size_t>(c)].class_id = c + 1;
    }
    EXPECT_EQ(predict(models, Eigen::MatrixXd::Zero(1, 2)), std::vector<int>{3});

    EXPECT_EQ(argmax_class(Eigen::Vector3d(0.5, 0.5, 0.1)), 1);
    EXPECT_EQ(argmax_class(Eigen::Vector3d(0.1, 0.7, 0.7)), 2);

    Rng rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Vector2d g(uniform(rng, -1, 1), uniform(rng, -1, 1));
        EXPECT_EQ(argmax_class(g), g(0) - g(1) >= 0 ? 1 : 2);
        const Eigen::Vector4d s = Eigen::Vector4d::Random();
        EXPECT_EQ(argmax_class(s), argmax_class((s.array() + 7.0).matrix()));
    }
}

TEST(Predict, SeparableThreeClassData) {
    Rng rng(30);
    const Eigen::Vector2d centers[3] = {{5.0, 0.0}, {-2.5, 4.33}, {-2.5, -4.33}};
    std::normal_distribution<double> noise(0.0, 0.3);
    auto sample = [&](int count, Eigen::MatrixXd& x, std::vector<int>& labels) {
        x.resize(count, 2);
        for (int i = 0; i < count; ++i) {
            const int c = i % 3;
            x.row(i) = (centers[c] + Eigen::Vector2d(noise(rng), noise(rng))).transpose();
            labels.push_back(c + 1);
        }
    };
    Eigen::MatrixXd xtr, xte;
    std::vector<int> ytr, yte;
    sample(40, xtr, ytr);
    sample(30, xte, yte);
    const auto models = train_one_vs_rest(xtr * xtr.transpose(), ytr, 3, 1.0, 1e-6);
    EXPECT_EQ(predict(models, xte * xtr.transpose()), yte);
}
