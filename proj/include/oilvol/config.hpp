#pragma once

#include "oilvol/classifiers.hpp"
#include "oilvol/evaluation.hpp"
#include "oilvol/explain.hpp"
#include "oilvol/features.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace oilvol::cli {

struct ProviderConfig {
    std::string endpoint;
    std::string model;
    std::size_t batch_size = 32;
};

struct RunConfig {
    // Inputs
    std::filesystem::path bars;
    std::filesystem::path news;
    std::filesystem::path vectors;
    std::filesystem::path lexicon;
    std::filesystem::path cleaning_rules;  // optional
    std::filesystem::path stopwords;       // optional additions
    std::filesystem::path cache;           // remote embedding cache
    std::optional<ProviderConfig> provider;
    // Output
    std::filesystem::path output_dir = "out";

    /// News-derived channels; the HAR baseline is always evaluated as well.
    std::vector<features::Channel> channels{features::Channel::count, features::Channel::sentiment,
                                            features::Channel::embedding};
    std::size_t lags = 5;
    int interval_minutes = 5;
    models::EnsembleSpec ensemble;
    eval::RollingConfig rolling;

    std::size_t shap_samples = 2048;
    std::size_t shap_background = 100;
    std::size_t top_k = 20;
    std::vector<explain::PeriodSpec> periods = explain::default_periods();

    std::uint64_t seed = 42;
};

/// Parses a JSON config object on top of `base`. Unknown keys are errors.
/// Relative paths resolve against `base_dir`.
RunConfig config_from_json(std::string_view text, RunConfig base = {},
                           const std::filesystem::path& base_dir = {});

/// Every field that is invalid, as one message each. Empty when valid.
/// `need_inputs` selects which input paths must exist.
struct InputNeeds {
    bool bars = false;
    bool news = false;
    bool vectors = false;
    bool lexicon = false;
};
std::vector<std::string> validate(const RunConfig& config, const InputNeeds& needs);

/// Deterministic JSON snapshot (excludes the output directory).
std::string config_snapshot(const RunConfig& config);

}  // namespace oilvol::cli
