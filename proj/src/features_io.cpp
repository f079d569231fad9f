#include "tpmkl/features_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tpmkl/binary_io.hpp"
#include "tpmkl/error.hpp"

namespace tpmkl {

namespace fs = std::filesystem;

std::string to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Split parse_split(const std::string& text) {
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    throw ParameterError("unknown split \"" + text + "\" (expected train|test)");
}

int Manifest::num_classes() const {
    int c = 0;
    for (const auto& e : entries) c = std::max(c, e.label);
    return c;
}

// ---- feature files -------------------------------------------------------------

FrameMatrix read_feature_matrix(const fs::path& path) {
    ByteReader in = ByteReader::from_file(path);
    in.expect_magic(kFeatureMagic);
    const std::size_t version_at = in.offset();
    const std::uint32_t version = in.get_u32();
    if (version != kFeatureVersion) {
        in.fail("unsupported format version " + std::to_string(version), version_at);
    }
    const std::size_t shape_at = in.offset();
    const std::uint64_t rows = in.get_u64();
    const std::uint64_t cols = in.get_u64();
    if (rows == 0 || cols == 0) {
        in.fail("empty shape " + std::to_string(rows) + "x" + std::to_string(cols), shape_at);
    }
    if (cols > in.remaining() / 4 || rows > in.remaining() / 4 / cols) {
        in.fail("truncated payload for shape " + std::to_string(rows) + "x" + std::to_string(cols),
                in.offset());
    }
    FrameMatrix frames(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < frames.rows(); ++r) {
        for (Eigen::Index c = 0; c < frames.cols(); ++c) {
            const std::size_t at = in.offset();
            const float v = in.get_f32();
            if (!std::isfinite(v)) {
                in.fail("non-finite value", at);
            }
            frames(r, c) = v;
        }
    }
    in.expect_end();
    return frames;
}

FrameSequence load_feature_file(const fs::path& path) {
    FrameSequence seq;
    seq.video_id = path.stem().string();
    seq.frames = read_feature_matrix(path);
    return seq;
}

std::vector<std::uint8_t> encode_feature_matrix(const FrameMatrix& frames) {
    if (frames.rows() < 1 || frames.cols() < 1) {
        throw ShapeError("feature matrix must have at least one row and one column");
    }
    ByteWriter out;
    out.put_magic(kFeatureMagic);
    out.put_u32(kFeatureVersion);
    out.put_u64(static_cast<std::uint64_t>(frames.rows()));
    out.put_u64(static_cast<std::uint64_t>(frames.cols()));
    for (Eigen::Index r = 0; r < frames.rows(); ++r) {
        for (Eigen::Index c = 0; c < frames.cols(); ++c) {
            const float v = static_cast<float>(frames(r, c));
            if (!std::isfinite(v)) {
                throw ParameterError("value at (" + std::to_string(r) + ", " + std::to_string(c) +
                                     ") is not finite in float32");
            }
            out.put_f32(v);
        }
    }
    return out.bytes();
}

void write_feature_file(const fs::path& path, const FrameMatrix& frames) {
    const auto bytes = encode_feature_matrix(frames);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

// ---- manifest -------------------------------------------------------------------

Manifest parse_manifest(const std::string& text, const fs::path& base_dir, bool check_files) {
    Manifest manifest;
    std::set<std::string> seen;
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "manifest line " + std::to_string(line_no) + ": ";
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(where + e.what());
        }
        ManifestEntry entry;
        try {
            entry.id = obj.at("id").get<std::string>();
            entry.label = obj.at("label").get<int>();
            entry.split = parse_split(obj.at("split").get<std::string>());
            for (const auto& [name, rel] : obj.at("streams").items()) {
                entry.streams[name] = rel.get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(where + e.what());
        } catch (const ParameterError& e) {
            throw FormatError(where + e.what());
        }
        if (entry.label < 1) {
            throw FormatError(where + "label must be >= 1, got " + std::to_string(entry.label));
        }
        if (!seen.insert(entry.id).second) {
            throw FormatError(where + "duplicate video id \"" + entry.id + "\"");
        }
        if (check_files) {
            for (const auto& [name, rel] : entry.streams) {
                if (!fs::exists(base_dir / rel)) {
                    throw FormatError(where + "missing file " + (base_dir / rel).string());
                }
            }
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string() + ": cannot open manifest");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_manifest(buffer.str(), path.parent_path());
}

std::string format_manifest(const Manifest& manifest) {
    std::string out;
    for (const auto& e : manifest.entries) {
        nlohmann::ordered_json obj;
        obj["id"] = e.id;
        obj["label"] = e.label;
        obj["split"] = to_string(e.split);
        obj["streams"] = nlohmann::ordered_json::object();
        for (const auto& [name, rel] : e.streams) obj["streams"][name] = rel;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << format_manifest(manifest);
}

std::vector<FrameSequence> load_stream(const Manifest& manifest, const fs::path& base_dir,
                                       const std::string& stream) {
    std::vector<FrameSequence> out;
    out.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        const auto it = e.streams.find(stream);
        if (it == e.streams.end()) {
            throw FormatError("video \"" + e.id + "\" has no stream \"" + stream + "\"");
        }
        FrameSequence seq = load_feature_file(base_dir / it->second);
        seq.video_id = e.id;
        seq.stream_name = stream;
        if (!out.empty() && seq.dim() != out.front().dim()) {
            throw ShapeError("stream \"" + stream + "\": video \"" + e.id + "\" has dimension " +
                             std::to_string(seq.dim()) + ", expected " +
                             std::to_string(out.front().dim()));
        }
        out.push_back(std::move(seq));
    }
    return out;
}

// ---- transforms ------------------------------------------------------------------

FrameSequence resample(const FrameSequence& seq, std::int64_t target_frames) {
    if (target_frames < 1) {
        throw ParameterError("resample: target frame count must be >= 1");
    }
    const std::int64_t t = seq.num_frames();
    FrameSequence out{seq.video_id, seq.stream_name, FrameMatrix(target_frames, seq.dim())};
    for (std::int64_t j = 0; j < target_frames; ++j) {
        out.frames.row(j) = seq.frames.row(j * t / target_frames);
    }
    return out;
}

// ---- synthetic data ---------------------------------------------------------------

namespace {

void validate(const SyntheticParams& p) {
    if (p.classes < 2) throw ParameterError("gen_synthetic: need at least 2 classes");
    if (p.per_class < 1) throw ParameterError("gen_synthetic: per-class count must be >= 1");
    if (p.dim < 1) throw ParameterError("gen_synthetic: dimension must be >= 1");
    if (p.signal_level < 1 || p.signal_level > 40) {
        throw ParameterError("gen_synthetic: signal level must be in 1..40");
    }
    const std::int64_t segments = std::int64_t{1} << (p.signal_level - 1);
    if (p.frames < segments) {
        throw ParameterError("gen_synthetic: " + std::to_string(p.frames) +
                             " frames cannot hold " + std::to_string(segments) +
                             " segments at signal level " + std::to_string(p.signal_level));
    }
    if (!(p.noise_std >= 0.0) || !std::isfinite(p.noise_std)) {
        throw ParameterError("gen_synthetic: noise std must be finite and >= 0");
    }
    for (int c : p.silent_classes) {
        if (c < 1 || c > p.classes) {
            throw ParameterError("gen_synthetic: silent class " + std::to_string(c) + " out of range");
        }
    }
}

struct Prototypes {
    FrameMatrix base;                  // shared by every class
    std::vector<FrameMatrix> offsets;  // per class, zero mean on every node coarser than the signal level
};

// Segment bounds use the same floor rule as the pyramid partition, so the
// segments at `level` are exactly the pyramid nodes at that level.
std::int64_t segment_bound(std::int64_t frames, std::int64_t k, int level) {
    return k * frames / (std::int64_t{1} << (level - 1));
}

// Rounds to a multiple of 2^-12 so prototype sums are exact.
double on_grid(double v) { return std::ldexp(std::round(std::ldexp(v, 12)), -12); }

Prototypes make_prototypes(const SyntheticParams& p) {
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Prototypes proto;
    proto.base.resize(p.frames, p.dim);
    for (Eigen::Index t = 0; t < proto.base.rows(); ++t) {
        for (Eigen::Index d = 0; d < proto.base.cols(); ++d) proto.base(t, d) = on_grid(normal(rng));
    }

    const std::set<int> silent(p.silent_classes.begin(), p.silent_classes.end());
    for (int c = 1; c <= p.classes; ++c) {
        FrameMatrix offset = FrameMatrix::Zero(p.frames, p.dim);
        if (p.signal_level == 1) {
            for (Eigen::Index d = 0; d < offset.cols(); ++d) {
                const double a = on_grid(normal(rng));
                offset.col(d).setConstant(silent.count(c) ? 0.0 : a);
            }
        } else {
            // Each parent segment (level signal_level-1) splits into two children
            // whose offsets cancel in the count-weighted parent mean. Values are
            // dyadic, so the cancellation is exact in floating point and every
            // coarser node mean is bitwise identical across classes.
            const int parent_level = p.signal_level - 1;
            const std::int64_t parents = std::int64_t{1} << (parent_level - 1);
            for (std::int64_t k = 0; k < parents; ++k) {
                const std::int64_t begin = segment_bound(p.frames, k, parent_level);
                const std::int64_t mid = segment_bound(p.frames, 2 * k + 1, p.signal_level);
                const std::int64_t end = segment_bound(p.frames, k + 1, parent_level);
                const double n_left = static_cast<double>(mid - begin);
                const double n_right = static_cast<double>(end - mid);
                // Power of two near n / 2; keeps |offset| ~ |a| without rounding.
                const double half = static_cast<double>(std::bit_floor(static_cast<std::uint64_t>(end - begin))) / 2.0;
                for (Eigen::Index d = 0; d < offset.cols(); ++d) {
                    double a = on_grid(normal(rng));
                    if (silent.count(c)) a = 0.0;
                    const double left = a * n_right / half;
                    const double right = -a * n_left / half;
                    for (std::int64_t t = begin; t < mid; ++t) offset(t, d) = left;
                    for (std::int64_t t = mid; t < end; ++t) offset(t, d) = right;
                }
            }
        }
        proto.offsets.push_back(std::move(offset));
    }
    return proto;
}

}  // namespace

FrameMatrix synthetic_prototype(const SyntheticParams& params, int label) {
    validate(params);
    if (label < 1 || label > params.classes) {
        throw ParameterError("synthetic_prototype: label out of range");
    }
    const Prototypes proto = make_prototypes(params);
    return proto.base + proto.offsets[static_cast<std::size_t>(label - 1)];
}

SyntheticDataset gen_synthetic(const SyntheticParams& params) {
    validate(params);
    const Prototypes proto = make_prototypes(params);

    std::seed_seq noise_seed{static_cast<std::uint32_t>(params.seed),
                             static_cast<std::uint32_t>(params.seed >> 32), 0x6e6f6973u};
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    SyntheticDataset out;
    for (int c = 1; c <= params.classes; ++c) {
        for (int i = 0; i < params.per_class; ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "c%03d_v%04d", c, i);

            FrameSequence seq;
            seq.video_id = id;
            seq.stream_name = params.stream_name;
            seq.frames = proto.base + proto.offsets[static_cast<std::size_t>(c - 1)];
            if (params.noise_std > 0.0) {
                for (Eigen::Index t = 0; t < seq.frames.rows(); ++t) {
                    for (Eigen::Index d = 0; d < seq.frames.cols(); ++d) {
                        seq.frames(t, d) += params.noise_std * noise(rng);
                    }
                }
            }

            ManifestEntry entry;
            entry.id = id;
            entry.label = c;
            entry.split = (i % 10) < 7 ? Split::Train : Split::Test;
            entry.streams[params.stream_name] = params.stream_name + "/" + entry.id + ".tpfv";

            out.manifest.entries.push_back(std::move(entry));
            out.sequences.push_back(std::move(seq));
        }
    }
    return out;
}

void write_dataset(const fs::path& dir, const std::vector<SyntheticDataset>& streams) {
    if (streams.empty()) throw ParameterError("write_dataset: no streams given");
    Manifest merged = streams.front().manifest;
    for (std::size_t s = 1; s < streams.size(); ++s) {
        const auto& other = streams[s].manifest.entries;
        if (other.size() != merged.entries.size()) {
            throw ShapeError("write_dataset: streams list different videos");
        }
        for (std::size_t i = 0; i < other.size(); ++i) {
            auto& e = merged.entries[i];
            if (other[i].id != e.id || other[i].label != e.label || other[i].split != e.split) {
                throw ShapeError("write_dataset: streams disagree on video " + e.id);
            }
            for (const auto& kv : other[i].streams) e.streams.insert(kv);
        }
    }
    fs::create_directories(dir);
    for (const auto& ds : streams) {
        for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
            const auto& rel = ds.manifest.entries[i].streams.at(ds.sequences[i].stream_name);
            fs::create_directories((dir / rel).parent_path());
            write_feature_file(dir / rel, ds.sequences[i].frames);
        }
    }
    write_manifest(dir / "manifest.jsonl", merged);
}

}  // namespace tpmkl
