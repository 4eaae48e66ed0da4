#pragma once

#include <filesystem>
#include <string>

#include "kgads/geometry.hpp"

namespace kgads {

/// Parses a model definition from JSON text. Keys: kind (ads2_strip |
/// ads3_cylinder | custom), n, nu, L, ell, beta_table, k_table. Table paths
/// point at CSV files with (x, value) columns and are resolved against base_dir.
MetricModel model_from_json_text(const std::string& text,
                                 const std::filesystem::path& base_dir = {});

MetricModel load_model_config(const std::filesystem::path& path);

}  // namespace kgads
