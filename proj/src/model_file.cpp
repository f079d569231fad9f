#include "tpmkl/model_file.hpp"

#include "tpmkl/binary_io.hpp"
#include "tpmkl/error.hpp"

namespace tpmkl {

// "TPMM" | u32 version | stream | u32 levels | u8 kernel_norm | i32 fixed_level
// | u64 nodes | (u32 level, u32 index)* | f64 normalizer* | f64 beta*
// | u64 n | n strings | u32 classes | per class: i32 id, f64 c_reg, f64 bias,
//   f64 alpha * n, u8 (label > 0) * n
// | u32 iterations | u8 converged | u64 trace length | f64 trace*

void write_model(const std::filesystem::path& path, const PyramidModel& model) {
    const auto& bank = model.bank;
    const auto& mkl = model.mkl;
    ByteWriter out;
    out.put_magic("TPMM");
    out.put_u32(1);
    out.put_string(model.stream);
    out.put_u32(static_cast<std::uint32_t>(model.levels));
    out.put_u8(model.kernel_norm ? 1 : 0);
    out.put_i32(model.fixed_level);
    out.put_u64(bank.node_count());
    for (const auto& n : bank.node_ids) {
        out.put_u32(static_cast<std::uint32_t>(n.level));
        out.put_u32(static_cast<std::uint32_t>(n.index));
    }
    for (double s : bank.normalizers) out.put_f64(s);
    for (double b : mkl.beta.beta) out.put_f64(b);
    out.put_u64(bank.video_ids.size());
    for (const auto& id : bank.video_ids) out.put_string(id);
    out.put_u32(static_cast<std::uint32_t>(mkl.svms.size()));
    for (const auto& svm : mkl.svms) {
        out.put_i32(svm.class_id);
        out.put_f64(svm.c_reg);
        out.put_f64(svm.bias);
        for (double a : svm.alpha) out.put_f64(a);
        for (int y : svm.labels) out.put_u8(y > 0 ? 1 : 0);
    }
    out.put_u32(static_cast<std::uint32_t>(mkl.iterations));
    out.put_u8(mkl.converged ? 1 : 0);
    out.put_u64(mkl.objective_trace.size());
    for (double f : mkl.objective_trace) out.put_f64(f);
    out.save(path);
}

PyramidModel read_model(const std::filesystem::path& path) {
    ByteReader in = ByteReader::from_file(path);
    in.expect_magic("TPMM");
    const std::size_t version_at = in.offset();
    if (in.get_u32() != 1) in.fail("unsupported model version", version_at);

    PyramidModel model;
    model.stream = in.get_string();
    model.levels = static_cast<int>(in.get_u32());
    model.kernel_norm = in.get_u8() != 0;
    model.fixed_level = in.get_i32();
    const std::size_t nodes_at = in.offset();
    const std::uint64_t nodes = in.get_u64();
    if (nodes > in.remaining() / 8) in.fail("implausible node count", nodes_at);
    for (std::uint64_t m = 0; m < nodes; ++m) {
        NodeId id;
        id.level = static_cast<int>(in.get_u32());
        id.index = static_cast<int>(in.get_u32());
        model.bank.node_ids.push_back(id);
    }
    for (std::uint64_t m = 0; m < nodes; ++m) model.bank.normalizers.push_back(in.get_f64());
    model.mkl.beta.nodes = model.bank.node_ids;
    for (std::uint64_t m = 0; m < nodes; ++m) model.mkl.beta.beta.push_back(in.get_f64());

    const std::size_t n_at = in.offset();
    const std::uint64_t n = in.get_u64();
    if (n > in.remaining() / 8) in.fail("implausible training set size", n_at);
    for (std::uint64_t i = 0; i < n; ++i) model.bank.video_ids.push_back(in.get_string());

    const std::uint32_t classes = in.get_u32();
    for (std::uint32_t c = 0; c < classes; ++c) {
        SvmModel svm;
        svm.class_id = in.get_i32();
        svm.c_reg = in.get_f64();
        svm.bias = in.get_f64();
        for (std::uint64_t i = 0; i < n; ++i) svm.alpha.push_back(in.get_f64());
        for (std::uint64_t i = 0; i < n; ++i) svm.labels.push_back(in.get_u8() ? 1 : -1);
        model.mkl.svms.push_back(std::move(svm));
    }
    model.mkl.iterations = static_cast<int>(in.get_u32());
    model.mkl.converged = in.get_u8() != 0;
    const std::size_t trace_at = in.offset();
    const std::uint64_t trace = in.get_u64();
    if (trace > in.remaining() / 8) in.fail("implausible trace length", trace_at);
    for (std::uint64_t i = 0; i < trace; ++i) model.mkl.objective_trace.push_back(in.get_f64());
    in.expect_end();
    return model;
}

}  // namespace tpmkl
