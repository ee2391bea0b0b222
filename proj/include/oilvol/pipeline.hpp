#pragma once

#include "oilvol/config.hpp"
#include "oilvol/embeddings.hpp"
#include "oilvol/explain.hpp"
#include "oilvol/features.hpp"
#include "oilvol/news_pipeline.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string_view>
#include <string>
#include <vector>

namespace oilvol::cli {

enum class Command { ingest, features, evaluate, mcnemar, explain, all };
std::optional<Command> command_from_string(std::string_view s);
std::string_view to_string(Command c);

inline constexpr const char* kToolVersion = "1.0.0";

/// Exit codes: 0 success, 2 config error, 3 data error, 4 dependency error.
int exit_code_for(ErrorKind kind);

/// Runs one stage (or every stage for `all`) and updates manifest.json in the
/// output directory. Holds an exclusive lock on the output directory for the
/// duration. Returns the artifact file names written.
std::vector<std::string> run(const RunConfig& config, Command command);

// Stage building blocks, exposed for tests.

/// Model names in report order: enabled news channels, then "har".
std::vector<std::string> model_names(const RunConfig& config);

/// Aligned datasets for every model, restricted to their common feature dates.
std::map<std::string, features::Dataset> load_datasets(const RunConfig& config);

/// Cleaned news grouped onto the trading calendar of rv.csv.
std::vector<news::DailyNews> load_calendar_news(const RunConfig& config);

/// Pooled daily embeddings (local store or remote provider).
std::vector<embed::PoolResult> pool_days(const std::vector<news::DailyNews>& days, const RunConfig& config);

struct DayExplanation {
    explain::ShapExplanation shap;
    std::vector<explain::WordImpact> words;
    double article_mass = 0.0;  // sum of |article impacts|
    double word_mass = 0.0;     // sum of word shares
};

/// SHAP explanations for every evaluated day of the embedding channel,
/// redistributed to articles and words. Lag block k of a row explains the
/// articles of the k-th previous embedding day.
std::vector<DayExplanation> explain_embedding_days(const RunConfig& config);

}  // namespace oilvol::cli
