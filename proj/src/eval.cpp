#include "tpmkl/eval.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tpmkl/error.hpp"
#include "tpmkl/kernels.hpp"
#include "tpmkl/pyramid.hpp"
#include "tpmkl/svm.hpp"

namespace tpmkl {

namespace fs = std::filesystem;

// ---- Dataset ---------------------------------------------------------------------------

Dataset Dataset::from_manifest(const Manifest& manifest, const fs::path& base_dir, const std::string& stream) {
    Dataset ds;
    ds.sequences = load_stream(manifest, base_dir, stream);
    for (const auto& e : manifest.entries) {
        ds.labels.push_back(e.label);
        ds.splits.push_back(e.split);
    }
    ds.num_classes = manifest.num_classes();
    return ds;
}

Dataset Dataset::from_synthetic(const SyntheticDataset& synthetic) {
    Dataset ds;
    ds.sequences = synthetic.sequences;
    for (const auto& e : synthetic.manifest.entries) {
        ds.labels.push_back(e.label);
        ds.splits.push_back(e.split);
    }
    ds.num_classes = synthetic.manifest.num_classes();
    return ds;
}

std::vector<std::size_t> Dataset::indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        if (splits[i] == split) out.push_back(i);
    }
    return out;
}

// ---- decision tables ----------------------------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_decision_csv(const DecisionTable& table) {
    std::string out = "video_id,true_label,predicted_label";
    for (int c = 1; c <= table.num_classes(); ++c) out += ",decision_" + std::to_string(c);
    out += '\n';
    for (std::size_t i = 0; i < table.video_ids.size(); ++i) {
        out += table.video_ids[i] + "," + std::to_string(table.true_labels[i]) + "," +
               std::to_string(table.predicted[i]);
        for (Eigen::Index c = 0; c < table.decisions.cols(); ++c) {
            out += "," + format_double(table.decisions(static_cast<Eigen::Index>(i), c));
        }
        out += '\n';
    }
    return out;
}

void write_decision_csv(const fs::path& path, const DecisionTable& table) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << format_decision_csv(table);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
    T v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw FormatError(where + ": cannot parse \"" + text + "\"");
    }
    return v;
}

}  // namespace

DecisionTable read_decision_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string() + ": cannot open decision file");
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty decision file");
    const auto header = split_csv(line);
    if (header.size() < 4 || header[0] != "video_id" || header[1] != "true_label" || header[2] != "predicted_label") {
        throw FormatError(path.string() + ": unexpected header");
    }
    const auto classes = static_cast<Eigen::Index>(header.size() - 3);
    DecisionTable table;
    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path.string() + " line " + std::to_string(line_no);
        const auto f = split_csv(line);
        if (static_cast<Eigen::Index>(f.size()) != classes + 3) throw FormatError(where + ": wrong field count");
        table.video_ids.push_back(f[0]);
        table.true_labels.push_back(parse_number<int>(f[1], where));
        table.predicted.push_back(parse_number<int>(f[2], where));
        std::vector<double> d;
        for (std::size_t c = 3; c < f.size(); ++c) d.push_back(parse_number<double>(f[c], where));
        rows.push_back(std::move(d));
    }
    table.decisions.resize(static_cast<Eigen::Index>(rows.size()), classes);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (Eigen::Index c = 0; c < classes; ++c) {
            table.decisions(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
        }
    }
    return table;
}

// ---- reports -------------------------------------------------------------------------------

RunReport make_report(std::string setting, const DecisionTable& table, std::vector<double> beta_by_level) {
    const int classes = table.num_classes();
    RunReport r;
    r.setting = std::move(setting);
    r.beta_by_level = std::move(beta_by_level);
    r.confusion = Eigen::MatrixXi::Zero(classes, classes);
    for (std::size_t i = 0; i < table.video_ids.size(); ++i) {
        const int t = table.true_labels[i];
        const int p = table.predicted[i];
        if (t < 1 || t > classes || p < 1 || p > classes) throw ShapeError("make_report: label out of range");
        ++r.confusion(t - 1, p - 1);
    }
    const int total = r.confusion.sum();
    r.accuracy = total > 0 ? static_cast<double>(r.confusion.trace()) / total : 0.0;
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < classes; ++c) {
        const int row = r.confusion.row(c).sum();
        const double acc = row > 0 ? static_cast<double>(r.confusion(c, c)) / row : 0.0;
        r.per_class_accuracy.push_back(acc);
        if (row > 0) {
            sum += acc;
            ++present;
        }
    }
    r.mean_class_accuracy = present > 0 ? sum / present : 0.0;
    return r;
}

std::string format_reports_json(std::span<const RunReport> reports) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json obj;
        obj["setting"] = r.setting;
        obj["accuracy"] = r.accuracy;
        obj["mean_class_accuracy"] = r.mean_class_accuracy;
        obj["per_class_accuracy"] = r.per_class_accuracy;
        obj["num_classes"] = r.confusion.rows();
        std::vector<int> flat;
        for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
            for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) flat.push_back(r.confusion(i, j));
        }
        obj["confusion"] = flat;
        obj["beta_by_level"] = r.beta_by_level;
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

// ---- pyramid models --------------------------------------------------------------------------

namespace {

std::vector<PyramidRep> aggregate_all(std::span<const FrameSequence> seqs, int levels) {
    std::vector<PyramidRep> reps;
    reps.reserve(seqs.size());
    for (const auto& s : seqs) reps.push_back(aggregate(s, levels));
    return reps;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

DecisionTable make_table(const Dataset& ds, const std::vector<std::size_t>& test_idx, Eigen::MatrixXd decisions) {
    DecisionTable t;
    for (std::size_t i : test_idx) {
        t.video_ids.push_back(ds.sequences[i].video_id);
        t.true_labels.push_back(ds.labels[i]);
    }
    for (Eigen::Index r = 0; r < decisions.rows(); ++r) t.predicted.push_back(argmax_class(decisions.row(r).transpose()));
    t.decisions = std::move(decisions);
    return t;
}

}  // namespace

PyramidModel fit_pyramid_model(std::span<const FrameSequence> train, std::span<const int> labels, int levels,
                               const ExperimentOptions& options, int fixed_level, std::string stream) {
    if (train.size() != labels.size()) throw ShapeError("fit_pyramid_model: sequence/label count mismatch");
    if (fixed_level < 0 || fixed_level > levels) throw ParameterError("fit_pyramid_model: fixed level out of range");
    const auto reps = aggregate_all(train, levels);
    std::vector<std::string> ids;
    for (const auto& s : train) ids.push_back(s.video_id);

    PyramidModel model;
    model.stream = std::move(stream);
    model.levels = levels;
    model.kernel_norm = options.kernel_norm;
    model.fixed_level = fixed_level;
    const auto nodes = pyramid_nodes(levels);
    KernelBank bank = build_bank(reps, std::move(ids), nodes, options.kernel_norm);
    model.mkl = fixed_level > 0 ? train_fixed(bank, labels, SimplexWeights::level(nodes, fixed_level), options.mkl())
                                : train_mkl(bank, labels, options.mkl());
    bank.grams.clear();
    model.bank = std::move(bank);
    return model;
}

Eigen::MatrixXd pyramid_decisions(const PyramidModel& model, std::span<const PyramidRep> train_reps,
                                  std::span<const PyramidRep> test_reps) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(test_reps.size()), model.bank.size());
    for (std::size_t i = 0; i < test_reps.size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) =
            test_kernel_row(train_reps, test_reps[i], model.bank, model.mkl.beta).transpose();
    }
    return decision_matrix(model.mkl.svms, rows);
}

DecisionTable predict_dataset(const PyramidModel& model, const Dataset& dataset) {
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < dataset.sequences.size(); ++i) by_id[dataset.sequences[i].video_id] = i;
    std::vector<std::size_t> train_idx;
    for (const auto& id : model.bank.video_ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ShapeError("predict: training video \"" + id + "\" is not in the dataset");
        train_idx.push_back(it->second);
    }
    const auto test_idx = dataset.indices(Split::Test);
    const auto train_reps = aggregate_all(pick(dataset.sequences, train_idx), model.levels);
    const auto test_reps = aggregate_all(pick(dataset.sequences, test_idx), model.levels);
    return make_table(dataset, test_idx, pyramid_decisions(model, train_reps, test_reps));
}

namespace {

void require_test_split(const Dataset& ds) {
    if (ds.indices(Split::Test).empty()) throw DegenerateProblemError("dataset has no test-split videos to score");
}

RunResult run_pyramid(const Dataset& ds, int levels, int fixed_level, const ExperimentOptions& options,
                      std::string setting) {
    require_test_split(ds);
    const auto train_idx = ds.indices(Split::Train);
    const auto train = pick(ds.sequences, train_idx);
    const auto labels = pick(ds.labels, train_idx);
    PyramidModel model = fit_pyramid_model(train, labels, levels, options, fixed_level);
    if (model.num_classes() != ds.num_classes) {
        throw DegenerateProblemError("training split does not contain every class");
    }
    RunResult out;
    out.decisions = predict_dataset(model, ds);
    out.report = make_report(std::move(setting), out.decisions, model.mkl.beta.level_sums());
    out.model = std::move(model);
    return out;
}

}  // namespace

RunResult run_levelwise(const Dataset& dataset, int level, const ExperimentOptions& options) {
    return run_pyramid(dataset, level, level, options, "level" + std::to_string(level));
}

RunResult run_mkl(const Dataset& dataset, int levels, const ExperimentOptions& options) {
    return run_pyramid(dataset, levels, 0, options, "mkl");
}

RunResult run_spectrogram(const Dataset& dataset, std::int64_t target_frames, const ExperimentOptions& options) {
    require_test_split(dataset);
    const auto n = static_cast<Eigen::Index>(dataset.sequences.size());
    std::vector<Eigen::VectorXd> specs;
    for (const auto& s : dataset.sequences) specs.push_back(spectrogram(s, target_frames));
    Eigen::MatrixXd x(n, specs.front().size());
    for (Eigen::Index i = 0; i < n; ++i) x.row(i) = specs[static_cast<std::size_t>(i)].transpose();

    const auto train_idx = dataset.indices(Split::Train);
    const auto test_idx = dataset.indices(Split::Test);
    Eigen::MatrixXd train_x(static_cast<Eigen::Index>(train_idx.size()), x.cols());
    Eigen::MatrixXd test_x(static_cast<Eigen::Index>(test_idx.size()), x.cols());
    for (std::size_t i = 0; i < train_idx.size(); ++i) train_x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(train_idx[i]));
    for (std::size_t i = 0; i < test_idx.size(); ++i) test_x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(test_idx[i]));

    Eigen::MatrixXd gram = train_x * train_x.transpose();
    gram = 0.5 * (gram + gram.transpose()).eval();
    double scale = 1.0;
    if (options.kernel_norm) {
        auto norm = normalize_gram(gram);
        gram = std::move(norm.gram);
        scale = norm.scale;
    }
    const auto labels = pick(dataset.labels, train_idx);
    const auto models = train_one_vs_rest(gram, labels, dataset.num_classes, options.c_reg, options.tol);
    const Eigen::MatrixXd rows = scale * (test_x * train_x.transpose());

    RunResult out;
    out.decisions = make_table(dataset, test_idx, decision_matrix(models, rows));
    out.report = make_report("spectrogram", out.decisions);
    return out;
}

RunResult late_fusion(std::span<const DecisionTable> tables, std::span<const double> weights) {
    if (tables.empty()) throw ParameterError("late_fusion: no inputs");
    if (!weights.empty() && weights.size() != tables.size()) throw ShapeError("late_fusion: one weight per input required");
    const auto& first = tables.front();
    for (const auto& t : tables) {
        if (t.video_ids != first.video_ids || t.true_labels != first.true_labels ||
            t.decisions.cols() != first.decisions.cols() || t.decisions.rows() != first.decisions.rows()) {
            throw ShapeError("late_fusion: inputs disagree on videos, labels or classes");
        }
    }
    double total = 0.0;
    for (std::size_t k = 0; k < tables.size(); ++k) total += weights.empty() ? 1.0 : weights[k];
    if (!(total > 0.0)) throw ParameterError("late_fusion: weights must sum to a positive value");

    Eigen::MatrixXd fused = Eigen::MatrixXd::Zero(first.decisions.rows(), first.decisions.cols());
    for (std::size_t k = 0; k < tables.size(); ++k) {
        fused += ((weights.empty() ? 1.0 : weights[k]) / total) * tables[k].decisions;
    }
    RunResult out;
    out.decisions.video_ids = first.video_ids;
    out.decisions.true_labels = first.true_labels;
    for (Eigen::Index r = 0; r < fused.rows(); ++r) out.decisions.predicted.push_back(argmax_class(fused.row(r).transpose()));
    out.decisions.decisions = std::move(fused);
    out.report = make_report("fusion", out.decisions);
    return out;
}

}  // namespace tpmkl
