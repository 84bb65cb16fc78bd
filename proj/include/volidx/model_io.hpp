#pragma once

#include "volidx/features.hpp"
#include "volidx/regressors.hpp"
#include "volidx/targets.hpp"
#include "volidx/validation.hpp"

#include <filesystem>
#include <string>

namespace volidx {

/// Everything needed to turn a saved model into daily option weights.
struct ModelBundle {
    Algorithm algorithm = Algorithm::Linear;
    RegressionMode mode = RegressionMode::RegI;
    FeatureConfig features;
    Normalizer normalizer;
    std::string hyperparam;
    RegressionModel model;
};

/// Text file: a `volidx-bundle 1` header, one `key value...` line per
/// bundle field, then the model in the write_model layout.
void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
[[nodiscard]] ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace volidx
