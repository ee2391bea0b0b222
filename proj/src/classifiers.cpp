#include "oilvol/classifiers.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace oilvol::models {

namespace {

void check_binary(std::span<const int> y, std::size_t rows, const char* who) {
    if (y.size() != rows) throw Error(ErrorKind::contract, std::string(who) + ": X and y row counts differ");
    bool seen[2] = {false, false};
    for (int v : y) {
        if (v != 0 && v != 1) throw Error(ErrorKind::contract, std::string(who) + ": labels must be 0 or 1");
        seen[v] = true;
    }
    if (!seen[0] || !seen[1]) {
        throw Error(ErrorKind::degenerate_training, std::string(who) + ": training labels contain a single class");
    }
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double LogisticModel::predict_proba1(std::span<const double> x) const { return sigmoid(dot(weights, x) + bias); }

double logistic_objective(const Matrix& X, std::span<const int> y, double l2_lambda, std::span<const double> w,
                          double b) {
    double ll = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double z = dot(w, X.row(i)) + b;
        ll += y[i] * z - softplus(z);
    }
    return ll - 0.5 * l2_lambda * dot(w, w);
}

std::vector<double> logistic_gradient(const Matrix& X, std::span<const int> y, double l2_lambda,
                                      std::span<const double> w, double b) {
    const std::size_t m = X.cols();
    std::vector<double> g(m + 1, 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        auto row = X.row(i);
        const double r = y[i] - sigmoid(dot(w, row) + b);
        for (std::size_t j = 0; j < m; ++j) g[j] += r * row[j];
        g[m] += r;
    }
    for (std::size_t j = 0; j < m; ++j) g[j] -= l2_lambda * w[j];
    return g;
}

LogisticModel fit_logistic(const Matrix& X, std::span<const int> y, double l2_lambda, double tol,
                           std::size_t max_iter) {
    if (X.rows() < 2) throw Error(ErrorKind::insufficient_data, "fit_logistic needs at least 2 rows");
    if (l2_lambda < 0) throw Error(ErrorKind::contract, "l2_lambda must be nonnegative");
    check_binary(y, X.rows(), "fit_logistic");

    const std::size_t m = X.cols();
    LogisticModel model;
    model.l2_lambda = l2_lambda;
    model.weights.assign(m, 0.0);

    // Lipschitz bound of the gradient gives a safe first step.
    double frob = static_cast<double>(X.rows());
    for (double v : X.data()) frob += v * v;
    double step = 1.0 / (0.25 * frob + l2_lambda);

    double obj = logistic_objective(X, y, l2_lambda, model.weights, model.bias);
    std::vector<double> trial_w(m);
    for (std::size_t it = 0; it < max_iter; ++it) {
        auto g = logistic_gradient(X, y, l2_lambda, model.weights, model.bias);
        double max_abs = 0.0, sq = 0.0;
        for (double v : g) {
            max_abs = std::max(max_abs, std::abs(v));
            sq += v * v;
        }
        if (max_abs < tol) {
            model.converged = true;
            break;
        }

        // Armijo backtracking, starting from a doubled previous step.
        step *= 2.0;
        double trial_obj = -std::numeric_limits<double>::infinity();
        double trial_b = 0.0;
        for (int halvings = 0; halvings < 60; ++halvings) {
            for (std::size_t j = 0; j < m; ++j) trial_w[j] = model.weights[j] + step * g[j];
            trial_b = model.bias + step * g[m];
            trial_obj = logistic_objective(X, y, l2_lambda, trial_w, trial_b);
            if (trial_obj >= obj + 1e-4 * step * sq) break;
            step *= 0.5;
        }
        if (!(trial_obj >= obj)) break;  // no ascent possible at machine precision
        model.weights = trial_w;
        model.bias = trial_b;
        obj = trial_obj;
        model.loss_history.push_back(-obj);
        model.iterations = it + 1;
    }
    if (!model.converged) {
        auto g = logistic_gradient(X, y, l2_lambda, model.weights, model.bias);
        double max_abs = 0.0;
        for (double v : g) max_abs = std::max(max_abs, std::abs(v));
        model.converged = max_abs < tol;
    }
    return model;
}

GaussianNbModel fit_gaussian_nb(const Matrix& X, std::span<const int> y, double var_floor) {
    check_binary(y, X.rows(), "fit_gaussian_nb");
    const std::size_t m = X.cols();
    GaussianNbModel model;
    model.var_floor = var_floor;
    std::array<double, 2> counts{0.0, 0.0};
    for (int c = 0; c < 2; ++c) {
        model.means[c].assign(m, 0.0);
        model.variances[c].assign(m, 0.0);
    }
    for (std::size_t i = 0; i < X.rows(); ++i) {
        counts[y[i]] += 1.0;
        for (std::size_t j = 0; j < m; ++j) model.means[y[i]][j] += X(i, j);
    }
    for (int c = 0; c < 2; ++c) {
        for (auto& mu : model.means[c]) mu /= counts[c];
    }
    for (std::size_t i = 0; i < X.rows(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = X(i, j) - model.means[y[i]][j];
            model.variances[y[i]][j] += d * d;
        }
    }
    for (int c = 0; c < 2; ++c) {
        for (auto& v : model.variances[c]) v = std::max(v / counts[c], var_floor);
        model.priors[c] = counts[c] / static_cast<double>(X.rows());
    }
    return model;
}

Proba nb_predict_proba(const GaussianNbModel& model, std::span<const double> x) {
    std::array<double, 2> log_joint{};
    for (int c = 0; c < 2; ++c) {
        double lj = std::log(model.priors[c]);
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double var = model.variances[c][j];
            const double d = x[j] - model.means[c][j];
            lj += -0.5 * std::log(2.0 * M_PI * var) - 0.5 * d * d / var;
        }
        log_joint[c] = lj;
    }
    const double mx = std::max(log_joint[0], log_joint[1]);
    const double e0 = std::exp(log_joint[0] - mx), e1 = std::exp(log_joint[1] - mx);
    return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

KnnModel fit_knn(Matrix X, std::vector<int> y, std::size_t k) {
    if (k == 0) throw Error(ErrorKind::contract, "knn k must be positive");
    if (X.rows() != y.size()) throw Error(ErrorKind::contract, "fit_knn: X and y row counts differ");
    if (k > X.rows()) {
        throw Error(ErrorKind::insufficient_data, "knn k = " + std::to_string(k) + " exceeds " +
                                                      std::to_string(X.rows()) + " training rows");
    }
    return KnnModel{std::move(X), std::move(y), k};
}

std::vector<std::size_t> knn_neighbors(const KnnModel& model, std::span<const double> x) {
    const std::size_t n = model.X.rows();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = model.X.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = row[j] - x[j];
            s += d * d;
        }
        dist[i] = {s, i};
    }
    const std::size_t k = std::min(model.k, n);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

Proba knn_predict_proba(const KnnModel& model, std::span<const double> x) {
    if (model.X.empty()) throw Error(ErrorKind::contract, "knn model has no training rows");
    auto nn = knn_neighbors(model, x);
    double ones = 0.0;
    for (auto i : nn) ones += model.y[i];
    const double p1 = ones / static_cast<double>(nn.size());
    return {1.0 - p1, p1};
}

VoteResult soft_vote(std::span<const Proba> member_probas, std::span<const double> weights) {
    if (member_probas.size() != weights.size() || member_probas.empty()) {
        throw Error(ErrorKind::contract, "soft_vote: need one weight per member");
    }
    VoteResult r;
    for (std::size_t i = 0; i < member_probas.size(); ++i) {
        r.aggregated[0] += weights[i] * member_probas[i][0];
        r.aggregated[1] += weights[i] * member_probas[i][1];
    }
    r.label = r.aggregated[1] > r.aggregated[0] + 1e-12 ? 1 : 0;
    return r;
}

std::vector<double> normalize_weights(std::span<const double> raw) {
    double total = 0.0;
    for (double w : raw) {
        if (!(w >= 0.0)) throw Error(ErrorKind::validation, "voting weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw Error(ErrorKind::validation, "voting weights must not all be zero");
    std::vector<double> out(raw.begin(), raw.end());
    for (auto& w : out) w /= total;
    return out;
}

std::array<Proba, 3> FittedEnsemble::member_probas(std::span<const double> raw_x) const {
    auto z = standardizer.apply(raw_x);
    const double p1 = logistic.predict_proba1(z);
    return {Proba{1.0 - p1, p1}, nb_predict_proba(naive_bayes, z), knn_predict_proba(knn, z)};
}

VoteResult FittedEnsemble::predict(std::span<const double> raw_x) const {
    auto members = member_probas(raw_x);
    return soft_vote(members, weights);
}

FittedEnsemble fit_ensemble(const Matrix& raw_X, std::span<const int> y, const EnsembleSpec& spec) {
    if (spec.weights.size() != 3) throw Error(ErrorKind::config, "ensemble needs exactly 3 voting weights");
    check_binary(y, raw_X.rows(), "fit_ensemble");
    FittedEnsemble e;
    e.weights = normalize_weights(spec.weights);
    e.standardizer = features::Standardizer::fit(raw_X);
    Matrix z = e.standardizer.apply(raw_X);
    e.logistic = fit_logistic(z, y, spec.l2_lambda, spec.lr_tol, spec.lr_max_iter);
    e.naive_bayes = fit_gaussian_nb(z, y, spec.var_floor);
    e.knn = fit_knn(std::move(z), std::vector<int>(y.begin(), y.end()), spec.knn_k);
    return e;
}

std::string ensemble_to_json(const FittedEnsemble& model) {
    nlohmann::ordered_json j;
    j["format_version"] = kModelFormatVersion;
    j["weights"] = model.weights;
    j["standardizer"] = {{"means", model.standardizer.means()}, {"stds", model.standardizer.stds()}};
    j["logistic"] = {{"weights", model.logistic.weights},
                     {"bias", model.logistic.bias},
                     {"l2_lambda", model.logistic.l2_lambda},
                     {"converged", model.logistic.converged},
                     {"iterations", model.logistic.iterations}};
    j["naive_bayes"] = {{"priors", model.naive_bayes.priors},
                        {"means", model.naive_bayes.means},
                        {"variances", model.naive_bayes.variances},
                        {"var_floor", model.naive_bayes.var_floor}};
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < model.knn.X.rows(); ++i) {
        auto r = model.knn.X.row(i);
        rows.emplace_back(r.begin(), r.end());
    }
    j["knn"] = {{"k", model.knn.k}, {"X", rows}, {"y", model.knn.y}};
    return j.dump(2) + "\n";
}

FittedEnsemble ensemble_from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("format_version").get<int>() != kModelFormatVersion) {
            throw Error(ErrorKind::format, "unsupported model format_version");
        }
        FittedEnsemble e;
        e.weights = j.at("weights").get<std::vector<double>>();
        e.standardizer = features::Standardizer::from_parts(j.at("standardizer").at("means").get<std::vector<double>>(),
                                                            j.at("standardizer").at("stds").get<std::vector<double>>());
        const auto& lr = j.at("logistic");
        e.logistic.weights = lr.at("weights").get<std::vector<double>>();
        e.logistic.bias = lr.at("bias").get<double>();
        e.logistic.l2_lambda = lr.at("l2_lambda").get<double>();
        e.logistic.converged = lr.at("converged").get<bool>();
        e.logistic.iterations = lr.at("iterations").get<std::size_t>();
        const auto& nb = j.at("naive_bayes");
        e.naive_bayes.priors = nb.at("priors").get<Proba>();
        e.naive_bayes.means = nb.at("means").get<std::array<std::vector<double>, 2>>();
        e.naive_bayes.variances = nb.at("variances").get<std::array<std::vector<double>, 2>>();
        e.naive_bayes.var_floor = nb.at("var_floor").get<double>();
        const auto& knn = j.at("knn");
        e.knn = fit_knn(Matrix::from_rows(knn.at("X").get<std::vector<std::vector<double>>>()),
                        knn.at("y").get<std::vector<int>>(), knn.at("k").get<std::size_t>());
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::format, std::string("model JSON: ") + ex.what());
    }
}

}  // namespace oilvol::models
