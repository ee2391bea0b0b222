#pragma once

#include "oilvol/common.hpp"
#include "oilvol/embeddings.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace oilvol::explain {

/// Model under explanation: feature vector -> probability of class 1.
using ModelFn = std::function<double(std::span<const double>)>;

struct ShapConfig {
    /// Coalitions drawn in sampled mode (rounded up to an even count for
    /// complement pairing).
    std::size_t n_samples = 2048;
    /// Full enumeration is used up to this many features.
    std::size_t exact_max_dim = 12;
    std::uint64_t seed = 0;
};

struct ShapExplanation {
    Date date{};
    /// Model output with every feature replaced by its background mean.
    double base_value = 0.0;
    std::vector<double> values;
    double model_output = 0.0;
    bool exact = false;
};

/// Shapley values of `model` at `x`. A feature outside the coalition takes its
/// background-column mean. Exact mode enumerates all 2^d coalitions; sampled
/// mode draws Shapley-kernel coalitions (with complements) and solves the
/// weighted least squares problem under the efficiency constraint. Throws
/// Error{config} when sampled mode gets fewer than 2d samples.
ShapExplanation kernel_shap(const ModelFn& model, std::span<const double> x, const Matrix& background,
                            const ShapConfig& config);

/// Seed for one explained day, stable across serial and parallel runs.
std::uint64_t day_seed(std::uint64_t global_seed, Date day);

/// Splits the SHAP mass of a pooled daily vector among its articles.
class AttributionStrategy {
public:
    virtual ~AttributionStrategy() = default;
    /// `values` has one entry per dimension of `day.vector`. Returns one
    /// impact per article vector.
    virtual std::vector<double> article_impacts(std::span<const double> values,
                                                const embed::DailyEmbedding& day) const = 0;
};

/// impact_i = sum_d values_d * X_{i,d} / (N * Xdaily_d); dimensions where the
/// daily mean is zero are split evenly.
class PoolingProportional final : public AttributionStrategy {
public:
    std::vector<double> article_impacts(std::span<const double> values,
                                        const embed::DailyEmbedding& day) const override;
};

std::vector<double> article_attribution(std::span<const double> values, const embed::DailyEmbedding& day,
                                        const AttributionStrategy& strategy = PoolingProportional{});

struct WordImpact {
    std::string word;
    double mean_abs_impact = 0.0;
    std::size_t occurrence_count = 0;
};

class Stopwords {
public:
    /// Standard English function words.
    static Stopwords english();
    void add(std::string word) { words_.insert(to_lower(word)); }
    /// One word per line; '#' comments.
    void add_from_text(std::string_view text);
    bool contains(const std::string& word) const { return words_.count(word) != 0; }
    /// Non-stopword and at least two bytes long.
    bool meaningful(const std::string& token) const { return token.size() >= 2 && !contains(token); }

private:
    std::set<std::string> words_;
};

/// |impact| of each article divided equally among its meaningful tokens, then
/// averaged per word. `article_tokens` is parallel to `article_impacts`.
std::vector<WordImpact> word_attribution(std::span<const double> article_impacts,
                                         const std::vector<std::vector<std::string>>& article_tokens,
                                         const Stopwords& stopwords);

struct PeriodSpec {
    std::string name;
    Date start;
    Date end;  // inclusive
};

/// Throws Error{config} unless each period has start <= end and periods are
/// ordered and disjoint.
void validate_periods(const std::vector<PeriodSpec>& periods);
std::vector<PeriodSpec> default_periods();

struct DatedWordImpacts {
    Date date;
    std::vector<WordImpact> impacts;
};

struct PeriodRanking {
    PeriodSpec period;
    std::vector<WordImpact> words;  // ranked
    std::size_t days = 0;
};

struct PeriodReport {
    std::vector<PeriodRanking> periods;
    std::size_t unassigned_days = 0;
};

/// Pools word impacts per period (count-weighted means) and ranks by
/// mean_abs_impact descending, then count descending, then word.
PeriodReport period_report(const std::vector<DatedWordImpacts>& impacts, const std::vector<PeriodSpec>& periods,
                           std::size_t top_k = 20);

/// `rank,word,mean_abs_impact,count`.
std::string ranking_to_csv(const PeriodRanking& ranking);
std::string report_to_json(const PeriodReport& report);

}  // namespace oilvol::explain
