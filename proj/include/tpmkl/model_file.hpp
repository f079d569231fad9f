#pragma once

#include <filesystem>
#include <string>

#include "tpmkl/kernels.hpp"
#include "tpmkl/mkl.hpp"

namespace tpmkl {

/// A trained pyramid classifier: everything needed to score new videos given
/// the training videos' features.
struct PyramidModel {
    std::string stream;
    int levels = 1;
    bool kernel_norm = true;
    int fixed_level = 0;  // 0 when beta was learned
    /// Node ids, normalizers and training video ids; grams are not kept.
    KernelBank bank;
    MklModel mkl;

    int num_classes() const { return static_cast<int>(mkl.svms.size()); }
};

void write_model(const std::filesystem::path& path, const PyramidModel& model);
PyramidModel read_model(const std::filesystem::path& path);

}  // namespace tpmkl
