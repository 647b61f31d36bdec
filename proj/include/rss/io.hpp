#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rss/dataset.hpp"

namespace rss::io {

namespace fs = std::filesystem;

/// Dataset container: a directory with manifest.json, X.bin and optional mask.bin.
Dataset load_dataset(const fs::path& dir);
void save_dataset(const Dataset& d, const fs::path& dir);

/// "feature,cluster" CSV.
Parcellation load_parcellation(const fs::path& csv);
void save_parcellation(const Parcellation& parc, const fs::path& csv);

/// "feature,planted_cluster" CSV; 0 marks background features.
std::vector<std::int32_t> load_ground_truth(const fs::path& csv);
void save_ground_truth(const std::vector<std::int32_t>& cluster_of, const fs::path& csv);

/// "feature,x,y,z,count,score" CSV; coordinates are -1 without geometry.
void save_scores(const StabilityScores& s, const Dataset& d, const fs::path& csv);

/// Real-valued per-feature scores written in the same CSV layout (count column = -1).
void save_real_scores(const std::vector<double>& scores, const Dataset& d, const fs::path& csv);
/// The score column of a scores CSV.
std::vector<double> load_score_column(const fs::path& csv);

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_checksum(const fs::path& file);
/// Checksum over a dataset container's files.
std::string container_checksum(const fs::path& dir);

/// Format a double so that it parses back to the identical value.
std::string format_double(double v);

}  // namespace rss::io
