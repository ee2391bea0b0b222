#pragma once

#include "oilvol/common.hpp"
#include "oilvol/features.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace oilvol::models {

/// P(class 0), P(class 1).
using Proba = std::array<double, 2>;

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    double l2_lambda = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    /// Negative penalized log-likelihood after each accepted step.
    std::vector<double> loss_history;

    double predict_proba1(std::span<const double> x) const;
};

/// Penalized log-likelihood  sum_i [y_i z_i - log(1 + e^{z_i})] - lambda/2 ||w||^2,
/// z_i = w.x_i + b. The bias is not penalized.
double logistic_objective(const Matrix& X, std::span<const int> y, double l2_lambda,
                          std::span<const double> w, double b);
/// Gradient of logistic_objective; the last entry is d/db.
std::vector<double> logistic_gradient(const Matrix& X, std::span<const int> y, double l2_lambda,
                                      std::span<const double> w, double b);

/// Gradient ascent with backtracking line search. Stops when the gradient
/// max-norm drops below `tol` or after `max_iter` steps.
LogisticModel fit_logistic(const Matrix& X, std::span<const int> y, double l2_lambda = 1.0, double tol = 1e-6,
                           std::size_t max_iter = 1000);

double sigmoid(double z);

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

struct GaussianNbModel {
    Proba priors{};
    std::array<std::vector<double>, 2> means;
    std::array<std::vector<double>, 2> variances;
    double var_floor = 1e-9;
};

GaussianNbModel fit_gaussian_nb(const Matrix& X, std::span<const int> y, double var_floor = 1e-9);
/// Normalized in log space, so it stays finite when both densities underflow.
Proba nb_predict_proba(const GaussianNbModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// K nearest neighbours
// ---------------------------------------------------------------------------

struct KnnModel {
    Matrix X;
    std::vector<int> y;
    std::size_t k = 5;
};

KnnModel fit_knn(Matrix X, std::vector<int> y, std::size_t k = 5);
/// Indices of the k nearest rows by Euclidean distance; ties go to the lower
/// row index. Result is ordered nearest first.
std::vector<std::size_t> knn_neighbors(const KnnModel& model, std::span<const double> x);
Proba knn_predict_proba(const KnnModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Soft voting
// ---------------------------------------------------------------------------

struct VoteResult {
    int label = 0;
    Proba aggregated{};
};

/// Aggregates sum_i w_i P_i and takes the argmax. Aggregates within 1e-12 of
/// each other count as a tie, which resolves to class 0.
VoteResult soft_vote(std::span<const Proba> member_probas, std::span<const double> weights);

/// Rescales nonnegative weights to sum to 1.
std::vector<double> normalize_weights(std::span<const double> raw);

struct EnsembleSpec {
    std::size_t knn_k = 5;
    double l2_lambda = 1.0;
    double var_floor = 1e-9;
    double lr_tol = 1e-6;
    std::size_t lr_max_iter = 1000;
    /// Order: logistic, naive Bayes, KNN.
    std::vector<double> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
};

/// Standardizer plus the three members, fitted on one training window.
struct FittedEnsemble {
    features::Standardizer standardizer;
    LogisticModel logistic;
    GaussianNbModel naive_bayes;
    KnnModel knn;
    std::vector<double> weights;

    /// Member probabilities for a raw (unstandardized) feature row.
    std::array<Proba, 3> member_probas(std::span<const double> raw_x) const;
    VoteResult predict(std::span<const double> raw_x) const;
    double predict_proba1(std::span<const double> raw_x) const { return predict(raw_x).aggregated[1]; }
};

/// Fits the standardizer on `raw_X` and every member on the standardized rows.
/// Throws Error{degenerate_training} when `y` has a single class.
FittedEnsemble fit_ensemble(const Matrix& raw_X, std::span<const int> y, const EnsembleSpec& spec);

inline constexpr int kModelFormatVersion = 1;
/// JSON text with a `format_version` field.
std::string ensemble_to_json(const FittedEnsemble& model);
FittedEnsemble ensemble_from_json(std::string_view text);

}  // namespace oilvol::models
