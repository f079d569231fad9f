#include "tpmkl/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "tpmkl/binary_io.hpp"
#include "tpmkl/error.hpp"

namespace tpmkl {

// ---- SimplexWeights -----------------------------------------------------------------

SimplexWeights SimplexWeights::uniform(const std::vector<NodeId>& nodes) {
    if (nodes.empty()) throw ParameterError("simplex weights need at least one node");
    return {nodes, std::vector<double>(nodes.size(), 1.0 / static_cast<double>(nodes.size()))};
}

SimplexWeights SimplexWeights::indicator(const std::vector<NodeId>& nodes, NodeId target) {
    SimplexWeights w{nodes, std::vector<double>(nodes.size(), 0.0)};
    const auto it = std::find(nodes.begin(), nodes.end(), target);
    if (it == nodes.end()) throw ShapeError("indicator: node " + target.to_string() + " not in node set");
    w.beta[static_cast<std::size_t>(it - nodes.begin())] = 1.0;
    return w;
}

SimplexWeights SimplexWeights::level(const std::vector<NodeId>& nodes, int level) {
    SimplexWeights w{nodes, std::vector<double>(nodes.size(), 0.0)};
    const auto count = std::count_if(nodes.begin(), nodes.end(), [&](NodeId n) { return n.level == level; });
    if (count == 0) throw ShapeError("level weights: no nodes at level " + std::to_string(level));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].level == level) w.beta[i] = 1.0 / static_cast<double>(count);
    }
    return w;
}

double SimplexWeights::weight(NodeId id) const {
    const auto it = std::find(nodes.begin(), nodes.end(), id);
    return it == nodes.end() ? 0.0 : beta[static_cast<std::size_t>(it - nodes.begin())];
}

std::vector<double> SimplexWeights::level_sums() const {
    int max_level = 0;
    for (const auto& n : nodes) max_level = std::max(max_level, n.level);
    std::vector<double> sums(static_cast<std::size_t>(max_level), 0.0);
    for (std::size_t i = 0; i < nodes.size(); ++i) sums[static_cast<std::size_t>(nodes[i].level - 1)] += beta[i];
    return sums;
}

void SimplexWeights::validate(double tol) const {
    if (nodes.size() != beta.size() || nodes.empty()) {
        throw ShapeError("simplex weights: node/weight count mismatch");
    }
    double sum = 0.0;
    for (double b : beta) {
        if (!(b >= 0.0)) throw ParameterError("simplex weights: negative or NaN weight");
        sum += b;
    }
    if (std::abs(sum - 1.0) > tol) {
        throw ParameterError("simplex weights: sum is " + std::to_string(sum));
    }
}

// ---- grams ---------------------------------------------------------------------------

Eigen::MatrixXd node_gram(std::span<const PyramidRep> reps, NodeId node) {
    const auto n = static_cast<Eigen::Index>(reps.size());
    if (n == 0) throw ShapeError("node_gram: empty video set");
    const auto q = reps.front().dim();
    for (const auto& r : reps) {
        if (!r.contains(node)) throw ShapeError("node_gram: pyramid lacks node " + node.to_string());
        if (r.dim() != q) throw ShapeError("node_gram: feature dimension mismatch");
    }
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto vi = reps[static_cast<std::size_t>(i)].node(node);
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = vi.dot(reps[static_cast<std::size_t>(j)].node(node));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

NormalizedGram normalize_gram(const Eigen::MatrixXd& gram) {
    if (gram.rows() != gram.cols() || gram.rows() == 0) throw ShapeError("normalize_gram: not a square matrix");
    const double trace = gram.trace();
    if (!(trace > 0.0) || !std::isfinite(trace)) {
        throw KernelError("normalize_gram: degenerate kernel (trace " + std::to_string(trace) +
                          "); every node vector is zero");
    }
    const double scale = static_cast<double>(gram.rows()) / trace;
    return {gram * scale, scale};
}

KernelBank build_bank(std::span<const PyramidRep> reps, std::vector<std::string> video_ids,
                      const std::vector<NodeId>& nodes, bool normalize) {
    if (video_ids.size() != reps.size()) throw ShapeError("build_bank: id/representation count mismatch");
    if (nodes.empty()) throw ShapeError("build_bank: empty node set");
    KernelBank bank;
    bank.node_ids = nodes;
    bank.video_ids = std::move(video_ids);
    for (const NodeId node : nodes) {
        Eigen::MatrixXd g = node_gram(reps, node);
        if (normalize) {
            auto norm = normalize_gram(g);
            bank.grams.push_back(std::move(norm.gram));
            bank.normalizers.push_back(norm.scale);
        } else {
            bank.grams.push_back(std::move(g));
            bank.normalizers.push_back(1.0);
        }
    }
    return bank;
}

namespace {
void check_weights(const std::vector<NodeId>& bank_nodes, const SimplexWeights& w) {
    if (w.nodes != bank_nodes || w.beta.size() != bank_nodes.size()) {
        throw ShapeError("weights do not cover exactly the bank's nodes");
    }
}
}  // namespace

Eigen::MatrixXd combine(const KernelBank& bank, const SimplexWeights& weights) {
    check_weights(bank.node_ids, weights);
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(bank.size(), bank.size());
    for (std::size_t m = 0; m < bank.node_count(); ++m) {
        if (weights.beta[m] != 0.0) k.noalias() += weights.beta[m] * bank.grams[m];
    }
    return k;
}

Eigen::VectorXd test_kernel_row(std::span<const PyramidRep> train_reps, const PyramidRep& test_rep,
                                const KernelBank& bank, const SimplexWeights& weights) {
    check_weights(bank.node_ids, weights);
    if (static_cast<Eigen::Index>(train_reps.size()) != bank.size()) {
        throw ShapeError("test_kernel_row: training set size differs from the bank");
    }
    for (const NodeId node : bank.node_ids) {
        if (!test_rep.contains(node)) throw ShapeError("test_kernel_row: test pyramid lacks node " + node.to_string());
    }
    Eigen::VectorXd row = Eigen::VectorXd::Zero(bank.size());
    for (std::size_t m = 0; m < bank.node_count(); ++m) {
        const double w = weights.beta[m] * bank.normalizers[m];
        if (w == 0.0) continue;
        const NodeId node = bank.node_ids[m];
        const auto v = test_rep.node(node);
        for (Eigen::Index i = 0; i < bank.size(); ++i) {
            const auto& tr = train_reps[static_cast<std::size_t>(i)];
            if (!tr.contains(node) || tr.dim() != test_rep.dim()) {
                throw ShapeError("test_kernel_row: training pyramid shape mismatch");
            }
            row(i) += w * v.dot(tr.node(node));
        }
    }
    return row;
}

SpectrumBounds spectrum_bounds(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw KernelError("eigenvalue decomposition failed");
    const auto& ev = solver.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

bool is_psd(const Eigen::MatrixXd& symmetric, double rel_tol) {
    const auto b = spectrum_bounds(symmetric);
    return b.min_eigenvalue >= -rel_tol * std::max(std::abs(b.max_eigenvalue), 1e-300);
}

// ---- bank file -------------------------------------------------------------------------

void write_bank(const std::filesystem::path& path, const KernelBank& bank) {
    ByteWriter out;
    out.put_magic("TPKB");
    out.put_u32(1);
    out.put_u64(bank.node_count());
    out.put_u64(static_cast<std::uint64_t>(bank.size()));
    for (const auto& n : bank.node_ids) {
        out.put_u32(static_cast<std::uint32_t>(n.level));
        out.put_u32(static_cast<std::uint32_t>(n.index));
    }
    for (double s : bank.normalizers) out.put_f64(s);
    for (const auto& id : bank.video_ids) out.put_string(id);
    for (const auto& g : bank.grams) {
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            for (Eigen::Index j = 0; j < g.cols(); ++j) out.put_f64(g(i, j));
        }
    }
    out.save(path);
}

KernelBank read_bank(const std::filesystem::path& path) {
    ByteReader in = ByteReader::from_file(path);
    in.expect_magic("TPKB");
    const std::size_t version_at = in.offset();
    if (in.get_u32() != 1) in.fail("unsupported bank version", version_at);
    const std::uint64_t nodes = in.get_u64();
    const std::uint64_t n = in.get_u64();
    if (nodes > in.remaining() / 8 || n > in.remaining() / 8) in.fail("implausible bank shape", in.offset());
    KernelBank bank;
    for (std::uint64_t m = 0; m < nodes; ++m) {
        NodeId id;
        id.level = static_cast<int>(in.get_u32());
        id.index = static_cast<int>(in.get_u32());
        bank.node_ids.push_back(id);
    }
    for (std::uint64_t m = 0; m < nodes; ++m) bank.normalizers.push_back(in.get_f64());
    for (std::uint64_t i = 0; i < n; ++i) bank.video_ids.push_back(in.get_string());
    for (std::uint64_t m = 0; m < nodes; ++m) {
        Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = in.get_f64();
        }
        bank.grams.push_back(std::move(g));
    }
    in.expect_end();
    return bank;
}

}  // namespace tpmkl
