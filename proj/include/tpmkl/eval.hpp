#pragma once

// Experiment driver: level-wise baselines, full MKL, spectrogram baseline,
// late fusion, and the accuracy reports they produce.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tpmkl/features_io.hpp"
#include "tpmkl/model_file.hpp"

namespace tpmkl {

/// One stream of a labelled, split video set.
struct Dataset {
    std::vector<FrameSequence> sequences;
    std::vector<int> labels;
    std::vector<Split> splits;
    int num_classes = 0;

    static Dataset from_manifest(const Manifest& manifest, const std::filesystem::path& base_dir,
                                 const std::string& stream);
    static Dataset from_synthetic(const SyntheticDataset& synthetic);

    std::vector<std::size_t> indices(Split split) const;
};

struct ExperimentOptions {
    double c_reg = 1.0;
    double tol = 1e-6;
    bool kernel_norm = true;
    int max_outer = 50;
    double tol_outer = 1e-4;

    MklOptions mkl() const { return {c_reg, tol, max_outer, tol_outer}; }
};

/// Per-video decision values for a test set.
struct DecisionTable {
    std::vector<std::string> video_ids;
    std::vector<int> true_labels;
    std::vector<int> predicted;
    Eigen::MatrixXd decisions;  // videos x classes

    int num_classes() const { return static_cast<int>(decisions.cols()); }
};

/// CSV: header `video_id,true_label,predicted_label,decision_1..decision_C`,
/// decision values in shortest round-trip form.
std::string format_decision_csv(const DecisionTable& table);
void write_decision_csv(const std::filesystem::path& path, const DecisionTable& table);
DecisionTable read_decision_csv(const std::filesystem::path& path);

struct RunReport {
    std::string setting;
    double accuracy = 0.0;
    double mean_class_accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    Eigen::MatrixXi confusion;  // rows: true class, cols: predicted
    std::vector<double> beta_by_level;
};

RunReport make_report(std::string setting, const DecisionTable& table, std::vector<double> beta_by_level = {});

/// JSON array of {setting, accuracy, mean_class_accuracy, per_class_accuracy,
/// num_classes, confusion (row-major), beta_by_level}.
std::string format_reports_json(std::span<const RunReport> reports);

struct RunResult {
    RunReport report;
    DecisionTable decisions;
    std::optional<PyramidModel> model;
};

/// Trains on the given sequences. `fixed_level` > 0 pins beta uniformly on
/// that level's nodes instead of learning it.
PyramidModel fit_pyramid_model(std::span<const FrameSequence> train, std::span<const int> labels, int levels,
                               const ExperimentOptions& options, int fixed_level = 0, std::string stream = {});

/// Decision values (test x classes) given the training and test pyramids.
Eigen::MatrixXd pyramid_decisions(const PyramidModel& model, std::span<const PyramidRep> train_reps,
                                  std::span<const PyramidRep> test_reps);

/// Scores every test-split video of `dataset` with a model trained on its
/// training split (training videos are matched by id).
DecisionTable predict_dataset(const PyramidModel& model, const Dataset& dataset);

RunResult run_levelwise(const Dataset& dataset, int level, const ExperimentOptions& options);
RunResult run_mkl(const Dataset& dataset, int levels, const ExperimentOptions& options);
RunResult run_spectrogram(const Dataset& dataset, std::int64_t target_frames, const ExperimentOptions& options);

/// Weighted mean of decision vectors (uniform when `weights` is empty),
/// then arg max. Tables must list the same videos, labels and classes.
RunResult late_fusion(std::span<const DecisionTable> tables, std::span<const double> weights = {});

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace tpmkl
