#include "tpmkl/pyramid.hpp"

#include <algorithm>

#include "tpmkl/error.hpp"

namespace tpmkl {

std::string NodeId::to_string() const {
    return "(" + std::to_string(level) + "," + std::to_string(index) + ")";
}

std::vector<NodeId> pyramid_nodes(int levels) {
    if (levels < 1 || levels > 30) throw ParameterError("pyramid depth must be in 1..30");
    std::vector<NodeId> out;
    out.reserve((std::size_t{1} << levels) - 1);
    for (int l = 1; l <= levels; ++l) {
        for (int k = 1; k <= nodes_at_level(l); ++k) out.push_back({l, k});
    }
    return out;
}

std::vector<NodeId> level_nodes(int level) {
    if (level < 1 || level > 30) throw ParameterError("pyramid level must be in 1..30");
    std::vector<NodeId> out;
    for (int k = 1; k <= nodes_at_level(level); ++k) out.push_back({level, k});
    return out;
}

FrameRange node_frames(std::int64_t frames, NodeId node) {
    if (node.level < 1 || node.level > 62 || node.index < 1 || node.index > nodes_at_level(node.level)) {
        throw ParameterError("invalid pyramid node " + node.to_string());
    }
    const std::int64_t width = nodes_at_level(node.level);
    if (frames < width) {
        throw GranularityError("level " + std::to_string(node.level) + " needs at least " +
                               std::to_string(width) + " frames but the sequence has " +
                               std::to_string(frames) + "; use fewer pyramid levels");
    }
    return {(node.index - 1) * frames / width, node.index * frames / width};
}

PyramidRep aggregate(const FrameSequence& seq, int levels) {
    if (levels < 1) throw ParameterError("aggregate: levels must be >= 1");
    const std::int64_t t = seq.num_frames();
    const std::int64_t q = seq.dim();
    if (t < 1 || q < 1) throw ShapeError("aggregate: empty frame sequence");
    // Validates granularity for the deepest (and therefore every) level.
    node_frames(t, {levels, 1});

    const auto nodes = pyramid_nodes(levels);
    FrameMatrix sums(static_cast<Eigen::Index>(nodes.size()), q);

    const std::size_t first_leaf = NodeId{levels, 1}.flat_index();
    std::vector<double> column;
    for (std::size_t n = first_leaf; n < nodes.size(); ++n) {
        const FrameRange range = node_frames(t, nodes[n]);
        column.resize(static_cast<std::size_t>(range.size()));
        for (Eigen::Index d = 0; d < q; ++d) {
            for (std::int64_t i = 0; i < range.size(); ++i) {
                column[static_cast<std::size_t>(i)] = seq.frames(range.begin + i, d);
            }
            std::sort(column.begin(), column.end());
            double s = 0.0;
            for (double v : column) s += v;
            sums(static_cast<Eigen::Index>(n), d) = s;
        }
    }
    for (std::size_t n = first_leaf; n-- > 0;) {
        const NodeId id = nodes[n];
        const NodeId left{id.level + 1, 2 * id.index - 1};
        const NodeId right{id.level + 1, 2 * id.index};
        sums.row(static_cast<Eigen::Index>(n)) = sums.row(static_cast<Eigen::Index>(left.flat_index())) +
                                                 sums.row(static_cast<Eigen::Index>(right.flat_index()));
    }

    PyramidRep rep;
    rep.levels = levels;
    rep.source_frames = t;
    rep.nodes.resize(sums.rows(), q);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        const double count = static_cast<double>(node_frames(t, nodes[n]).size());
        rep.nodes.row(static_cast<Eigen::Index>(n)) = sums.row(static_cast<Eigen::Index>(n)) / count;
    }
    return rep;
}

Eigen::VectorXd spectrogram(const FrameSequence& seq, std::int64_t target_frames) {
    const FrameSequence sampled = resample(seq, target_frames);
    Eigen::VectorXd out(sampled.frames.size());
    // Row-major storage: the flat buffer is already time-major.
    std::copy(sampled.frames.data(), sampled.frames.data() + sampled.frames.size(), out.data());
    return out;
}

void write_pyramid_file(const std::filesystem::path& path, const PyramidRep& rep) {
    write_feature_file(path, rep.nodes);
}

}  // namespace tpmkl
