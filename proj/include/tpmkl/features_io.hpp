#pragma once

// Per-frame feature sequences, their on-disk container, dataset manifests,
// and the synthetic dataset generator used for desk-scale experiments.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tpmkl {

/// Row-major T x q matrix: one row per frame.
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FrameSequence {
    std::string video_id;
    std::string stream_name;
    FrameMatrix frames;

    std::int64_t num_frames() const { return frames.rows(); }
    std::int64_t dim() const { return frames.cols(); }
};

enum class Split { Train, Test };

std::string to_string(Split split);
Split parse_split(const std::string& text);

struct ManifestEntry {
    std::string id;
    int label = 0;  // 1..C
    Split split = Split::Train;
    std::map<std::string, std::string> streams;  // stream name -> path relative to the manifest
};

struct Manifest {
    std::vector<ManifestEntry> entries;

    /// C, the largest label present.
    int num_classes() const;
};

// ---- feature file container ------------------------------------------------
// "TPFV" | u32 version=1 | u64 T | u64 q | T*q float32, row-major, little-endian.

inline constexpr char kFeatureMagic[] = "TPFV";
inline constexpr std::uint32_t kFeatureVersion = 1;

/// Loads a feature file. The sequence id is the file stem.
FrameSequence load_feature_file(const std::filesystem::path& path);

/// Reads the container matrix only (used for pyramid files as well).
FrameMatrix read_feature_matrix(const std::filesystem::path& path);

/// Encodes the matrix as float32; values must be finite after narrowing.
std::vector<std::uint8_t> encode_feature_matrix(const FrameMatrix& frames);
void write_feature_file(const std::filesystem::path& path, const FrameMatrix& frames);

// ---- manifest (JSON lines) ---------------------------------------------------

/// Parses and validates a manifest. Referenced files are checked relative to
/// the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                        bool check_files = true);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
std::string format_manifest(const Manifest& manifest);

/// Loads one stream for every manifest entry, in manifest order, checking
/// that all sequences share the same feature dimension.
std::vector<FrameSequence> load_stream(const Manifest& manifest,
                                       const std::filesystem::path& base_dir,
                                       const std::string& stream);

// ---- transforms --------------------------------------------------------------

/// Nearest-index uniform resampling: output row j is input row floor(j*T/T_target).
FrameSequence resample(const FrameSequence& seq, std::int64_t target_frames);

// ---- synthetic data ----------------------------------------------------------

struct SyntheticParams {
    int per_class = 10;
    int classes = 2;
    std::int64_t frames = 8;
    std::int64_t dim = 4;
    int signal_level = 1;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    std::string stream_name = "appearance";
    /// Classes (1-based) that receive no planted pattern; they share the
    /// common base and are indistinguishable from each other in this stream.
    std::vector<int> silent_classes;
};

struct SyntheticDataset {
    Manifest manifest;
    std::vector<FrameSequence> sequences;  // aligned with manifest.entries
};

/// Class prototypes differ only in the segment means at `signal_level`;
/// every coarser pyramid node has the same mean for all classes.
SyntheticDataset gen_synthetic(const SyntheticParams& params);

/// Noise-free prototype of one class (T x q).
FrameMatrix synthetic_prototype(const SyntheticParams& params, int label);

/// Writes `<dir>/manifest.jsonl` and one feature file per video and stream
/// under `<dir>/<stream>/<id>.tpfv`. Datasets must list the same videos.
void write_dataset(const std::filesystem::path& dir, const std::vector<SyntheticDataset>& streams);

}  // namespace tpmkl
