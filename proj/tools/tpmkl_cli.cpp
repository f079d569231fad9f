// tpmkl: command-line front end for temporal-pyramid MKL experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tpmkl/error.hpp"
#include "tpmkl/eval.hpp"
#include "tpmkl/features_io.hpp"
#include "tpmkl/kernels.hpp"
#include "tpmkl/model_file.hpp"
#include "tpmkl/pyramid.hpp"

namespace fs = std::filesystem;
using namespace tpmkl;

namespace {

struct TrainingFlags {
    double c_reg = 1.0;
    double tol = 1e-6;
    int max_outer = 50;
    double tol_outer = 1e-4;
    bool no_kernel_norm = false;

    void attach(CLI::App* app) {
        app->add_option("--c-reg", c_reg, "SVM box constraint")->check(CLI::PositiveNumber);
        app->add_option("--tol", tol, "SVM duality-gap tolerance")->check(CLI::PositiveNumber);
        app->add_option("--max-outer", max_outer, "maximum QP/LP alternations")->check(CLI::PositiveNumber);
        app->add_option("--tol-outer", tol_outer, "stop when beta moves less than this (max norm)");
        app->add_flag("--no-kernel-norm", no_kernel_norm, "disable trace normalization of node kernels");
    }

    ExperimentOptions options() const {
        ExperimentOptions o;
        o.c_reg = c_reg;
        o.tol = tol;
        o.max_outer = max_outer;
        o.tol_outer = tol_outer;
        o.kernel_norm = !no_kernel_norm;
        return o;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
}

int parse_fixed_beta(const std::string& text) {
    const std::string prefix = "level:";
    if (text.rfind(prefix, 0) != 0) throw ParameterError("--fixed-beta expects level:<n>, got \"" + text + "\"");
    try {
        const int level = std::stoi(text.substr(prefix.size()));
        if (level < 1) throw ParameterError("--fixed-beta level must be >= 1");
        return level;
    } catch (const std::logic_error&) {
        throw ParameterError("--fixed-beta expects level:<n>, got \"" + text + "\"");
    }
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal-pyramid aggregation and multiple kernel learning"};
    app.require_subcommand(1);

    // gen-synth
    SyntheticParams synth;
    std::string synth_out;
    bool complementary = false;
    auto* gen = app.add_subcommand("gen-synth", "generate a synthetic dataset with a planted temporal granularity");
    gen->add_option("--classes", synth.classes, "number of classes")->required();
    gen->add_option("--per-class", synth.per_class, "videos per class")->required();
    gen->add_option("--frames", synth.frames, "frames per video")->required();
    gen->add_option("--dim", synth.dim, "feature dimension")->required();
    gen->add_option("--signal-level", synth.signal_level, "pyramid level carrying the class signal")->required();
    gen->add_option("--noise", synth.noise_std, "Gaussian noise std")->required();
    gen->add_option("--seed", synth.seed, "random seed")->required();
    gen->add_option("--out", synth_out, "output directory")->required();
    gen->add_option("--stream", synth.stream_name, "stream name");
    gen->add_flag("--complementary", complementary,
                  "write streams \"a\" and \"b\", each carrying the signal of half the classes");

    // aggregate
    std::string manifest_path, stream, out_path;
    int levels = 1;
    auto* agg = app.add_subcommand("aggregate", "write one pyramid file per video");
    agg->add_option("--manifest", manifest_path)->required();
    agg->add_option("--stream", stream)->required();
    agg->add_option("--levels", levels)->required()->check(CLI::Range(1, 30));
    agg->add_option("--out", out_path, "output directory")->required();

    // kernels
    bool kernels_no_norm = false;
    auto* ker = app.add_subcommand("kernels", "write the node Gram bank of the training split");
    ker->add_option("--manifest", manifest_path)->required();
    ker->add_option("--stream", stream)->required();
    ker->add_option("--levels", levels)->required()->check(CLI::Range(1, 30));
    ker->add_option("--out", out_path, "bank file")->required();
    ker->add_flag("--no-kernel-norm", kernels_no_norm, "disable trace normalization");

    // train
    TrainingFlags train_flags;
    std::string fixed_beta;
    auto* train = app.add_subcommand("train", "learn node weights and one-vs-rest SVMs");
    train->add_option("--manifest", manifest_path)->required();
    train->add_option("--stream", stream)->required();
    train->add_option("--levels", levels)->required()->check(CLI::Range(1, 30));
    train->add_option("--out", out_path, "model file")->required();
    train->add_option("--fixed-beta", fixed_beta, "pin beta uniformly on one level, e.g. level:3");
    train_flags.attach(train);

    // predict
    std::string model_path;
    auto* pred = app.add_subcommand("predict", "score the test split with a trained model");
    pred->add_option("--model", model_path)->required();
    pred->add_option("--manifest", manifest_path)->required();
    pred->add_option("--out", out_path, "decision CSV")->required();

    // eval
    TrainingFlags eval_flags;
    std::string settings = "levelwise,mkl,spectrogram";
    std::string decisions_dir;
    std::int64_t spectrogram_frames = 0;
    auto* ev = app.add_subcommand("eval", "run baseline and MKL settings and report accuracies");
    ev->add_option("--manifest", manifest_path)->required();
    ev->add_option("--stream", stream)->required();
    ev->add_option("--levels", levels)->required()->check(CLI::Range(1, 30));
    ev->add_option("--settings", settings, "comma-separated subset of levelwise,mkl,spectrogram");
    ev->add_option("--spectrogram-frames", spectrogram_frames,
                   "frames kept by the spectrogram baseline (default: shortest video)");
    ev->add_option("--decisions-dir", decisions_dir, "also write one decision CSV per setting here");
    ev->add_option("--out", out_path, "report JSON")->required();
    eval_flags.attach(ev);

    // fuse
    std::vector<std::string> inputs;
    std::vector<double> weights;
    std::string fuse_report;
    auto* fuse = app.add_subcommand("fuse", "late fusion of decision CSVs");
    fuse->add_option("--inputs", inputs)->required()->expected(1, -1);
    fuse->add_option("--weights", weights, "one weight per input (default uniform)");
    fuse->add_option("--out", out_path, "fused decision CSV")->required();
    fuse->add_option("--report", fuse_report, "optional report JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            std::vector<SyntheticDataset> streams;
            if (complementary) {
                const int half = synth.classes / 2;
                SyntheticParams a = synth, b = synth;
                a.stream_name = "a";
                b.stream_name = "b";
                b.seed = synth.seed + 1;
                a.silent_classes.clear();
                b.silent_classes.clear();
                for (int c = half + 1; c <= synth.classes; ++c) a.silent_classes.push_back(c);
                for (int c = 1; c <= half; ++c) b.silent_classes.push_back(c);
                streams.push_back(gen_synthetic(a));
                streams.push_back(gen_synthetic(b));
            } else {
                streams.push_back(gen_synthetic(synth));
            }
            write_dataset(synth_out, streams);
        } else if (*agg) {
            const Manifest manifest = read_manifest(manifest_path);
            const auto seqs = load_stream(manifest, fs::path(manifest_path).parent_path(), stream);
            fs::create_directories(out_path);
            for (const auto& s : seqs) write_pyramid_file(fs::path(out_path) / (s.video_id + ".tpfv"), aggregate(s, levels));
        } else if (*ker) {
            const Manifest manifest = read_manifest(manifest_path);
            const Dataset ds = Dataset::from_manifest(manifest, fs::path(manifest_path).parent_path(), stream);
            std::vector<PyramidRep> reps;
            std::vector<std::string> ids;
            for (std::size_t i : ds.indices(Split::Train)) {
                reps.push_back(aggregate(ds.sequences[i], levels));
                ids.push_back(ds.sequences[i].video_id);
            }
            write_bank(out_path, build_bank(reps, std::move(ids), pyramid_nodes(levels), !kernels_no_norm));
        } else if (*train) {
            const Manifest manifest = read_manifest(manifest_path);
            const Dataset ds = Dataset::from_manifest(manifest, fs::path(manifest_path).parent_path(), stream);
            std::vector<FrameSequence> seqs;
            std::vector<int> labels;
            for (std::size_t i : ds.indices(Split::Train)) {
                seqs.push_back(ds.sequences[i]);
                labels.push_back(ds.labels[i]);
            }
            const int fixed = fixed_beta.empty() ? 0 : parse_fixed_beta(fixed_beta);
            const PyramidModel model = fit_pyramid_model(seqs, labels, levels, train_flags.options(), fixed, stream);
            write_model(out_path, model);
        } else if (*pred) {
            const PyramidModel model = read_model(model_path);
            const Manifest manifest = read_manifest(manifest_path);
            const Dataset ds = Dataset::from_manifest(manifest, fs::path(manifest_path).parent_path(), model.stream);
            write_decision_csv(out_path, predict_dataset(model, ds));
        } else if (*ev) {
            const Manifest manifest = read_manifest(manifest_path);
            const Dataset ds = Dataset::from_manifest(manifest, fs::path(manifest_path).parent_path(), stream);
            const ExperimentOptions opts = eval_flags.options();
            std::vector<RunResult> results;
            for (const auto& s : split_list(settings)) {
                if (s == "levelwise") {
                    for (int l = 1; l <= levels; ++l) results.push_back(run_levelwise(ds, l, opts));
                } else if (s == "mkl") {
                    results.push_back(run_mkl(ds, levels, opts));
                } else if (s == "spectrogram") {
                    std::int64_t frames = spectrogram_frames;
                    if (frames <= 0) {
                        frames = ds.sequences.front().num_frames();
                        for (const auto& q : ds.sequences) frames = std::min(frames, q.num_frames());
                    }
                    results.push_back(run_spectrogram(ds, frames, opts));
                } else {
                    throw ParameterError("unknown setting \"" + s + "\"");
                }
            }
            std::vector<RunReport> reports;
            for (const auto& r : results) reports.push_back(r.report);
            write_text(out_path, format_reports_json(reports));
            if (!decisions_dir.empty()) {
                fs::create_directories(decisions_dir);
                for (const auto& r : results) {
                    write_decision_csv(fs::path(decisions_dir) / (r.report.setting + ".csv"), r.decisions);
                }
            }
            for (const auto& r : reports) {
                std::printf("%-12s accuracy %.4f  mean-class %.4f\n", r.setting.c_str(), r.accuracy,
                            r.mean_class_accuracy);
            }
        } else if (*fuse) {
            std::vector<DecisionTable> tables;
            for (const auto& p : inputs) tables.push_back(read_decision_csv(p));
            const RunResult fused = late_fusion(tables, weights);
            write_decision_csv(out_path, fused.decisions);
            if (!fuse_report.empty()) {
                const std::vector<RunReport> reports{fused.report};
                write_text(fuse_report, format_reports_json(reports));
            }
        }
    } catch (const tpmkl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
