#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "d3/evaluation.hpp"

namespace d3 {

// Batch run configuration: a flat key=value UTF-8 config file plus flag
// overrides, applied in order. Unknown keys are config errors.
struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path out_dir = ".";
    std::filesystem::path models_dir;  // `describe` input
    PipelineConfig pipeline;
    std::vector<SelectionStrategy> compare_strategies = {
        SelectionStrategy::Random, SelectionStrategy::Chc, SelectionStrategy::Medoid};
    std::vector<size_t> compare_frames = {1, 5, 10, 15};
};

RunConfig load_run_config(const std::filesystem::path& path);
// Applies one key=value pair; the same routine backs config files and flags.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

// Subcommand entry points. All return 0 on success and throw d3 errors
// otherwise; exit_code_for maps those to process exit codes.
int run_extract(const std::filesystem::path& frames_dir, size_t grid, float fps,
                const std::filesystem::path& out_path);
int run_select(const std::filesystem::path& feature_path, const SelectionSpec& spec, uint64_t seed,
               const std::filesystem::path& out_path);
int run_codebook(const RunConfig& cfg);
int run_describe(const RunConfig& cfg);
int run_evaluate(const RunConfig& cfg);
int run_compare_selection(const RunConfig& cfg);

// config 2, data 3, pipeline 4, anything else 1
int exit_code_for(const std::exception& e);

}  // namespace d3
