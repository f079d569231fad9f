#pragma once

// Binary temporal pyramid over frame indices. Level 1 is the root (global
// average pooling); level l holds 2^(l-1) contiguous nodes indexed 1..2^(l-1).

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tpmkl/features_io.hpp"

namespace tpmkl {

struct NodeId {
    int level = 1;
    int index = 1;

    auto operator<=>(const NodeId&) const = default;

    /// Position in level-major order: (1,1), (2,1), (2,2), (3,1), ...
    std::size_t flat_index() const {
        return (std::size_t{1} << (level - 1)) - 1 + static_cast<std::size_t>(index - 1);
    }
    std::string to_string() const;
};

/// All 2^L - 1 nodes of an L-level pyramid in level-major order.
std::vector<NodeId> pyramid_nodes(int levels);

/// The nodes of a single level.
std::vector<NodeId> level_nodes(int level);

/// Number of nodes at `level`.
inline std::int64_t nodes_at_level(int level) { return std::int64_t{1} << (level - 1); }

struct FrameRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;

    std::int64_t size() const { return end - begin; }
    bool operator==(const FrameRange&) const = default;
};

/// Frames of `node` over [0, T): [floor((k-1)T/2^(l-1)), floor(kT/2^(l-1))).
/// Throws GranularityError if the level would contain empty nodes.
FrameRange node_frames(std::int64_t frames, NodeId node);

/// Node-averaged representations of one video; one row per node in
/// level-major order.
struct PyramidRep {
    int levels = 0;
    std::int64_t source_frames = 0;
    FrameMatrix nodes;

    std::int64_t dim() const { return nodes.cols(); }
    auto node(NodeId id) const { return nodes.row(static_cast<Eigen::Index>(id.flat_index())); }
    bool contains(NodeId id) const {
        return id.level >= 1 && id.level <= levels && id.index >= 1 && id.index <= nodes_at_level(id.level);
    }
};

/// Mean of the frame rows in every node. Leaf sums are accumulated in double
/// over sorted values, so reordering frames inside a leaf leaves the result
/// bit-identical; internal nodes are formed from their children's sums.
PyramidRep aggregate(const FrameSequence& seq, int levels);

/// Resample to `target_frames` then concatenate the rows in time order.
Eigen::VectorXd spectrogram(const FrameSequence& seq, std::int64_t target_frames);

/// Pyramid file: the feature container with one row per node (T := node count).
void write_pyramid_file(const std::filesystem::path& path, const PyramidRep& rep);

}  // namespace tpmkl
