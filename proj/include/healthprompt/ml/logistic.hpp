#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/error.hpp"
#include "healthprompt/ml/boosting.hpp"  // sigmoid
#include "healthprompt/ml/tree.hpp"      // Matrix

namespace healthprompt::ml {

enum class Penalty { l2, none };
enum class LogisticSolver { gd, nesterov };

struct LogisticParams {
    double C = 1.0;
    Penalty penalty = Penalty::l2;
    LogisticSolver solver = LogisticSolver::gd;
    std::size_t max_iter = 2000;
    double tol = 1e-6;  // on the max-norm of the gradient
};

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Mean logistic loss plus (lambda/2)|w|^2 with lambda = 1/(C n); the
// intercept is not penalized. Minimizers match C * sum(loss) + |w|^2 / 2.
struct LogisticObjective {
    const Matrix& x;
    std::span<const int> y;
    double lambda = 0.0;

    static LogisticObjective make(const Matrix& x, std::span<const int> y, const LogisticParams& p) {
        const double n = static_cast<double>(x.size());
        const double lambda = p.penalty == Penalty::l2 ? 1.0 / (p.C * n) : 0.0;
        return {x, y, lambda};
    }

    // params = (w_0 .. w_{d-1}, b)
    double loss(std::span<const double> params) const {
        const std::size_t d = params.size() - 1;
        double total = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double z = params[d];
            for (std::size_t j = 0; j < d; ++j) z += params[j] * x[i][j];
            total += softplus(z) - y[i] * z;
        }
        double reg = 0.0;
        for (std::size_t j = 0; j < d; ++j) reg += params[j] * params[j];
        return total / static_cast<double>(x.size()) + 0.5 * lambda * reg;
    }

    std::vector<double> gradient(std::span<const double> params) const {
        const std::size_t d = params.size() - 1;
        std::vector<double> g(params.size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double z = params[d];
            for (std::size_t j = 0; j < d; ++j) z += params[j] * x[i][j];
            const double r = sigmoid(z) - y[i];
            for (std::size_t j = 0; j < d; ++j) g[j] += r * x[i][j];
            g[d] += r;
        }
        const double n = static_cast<double>(x.size());
        for (std::size_t j = 0; j < d; ++j) g[j] = g[j] / n + lambda * params[j];
        g[d] /= n;
        return g;
    }

    // Upper bound on the Lipschitz constant of the gradient:
    // 1/4 * trace(A^T A)/n for the augmented design A = [x 1], plus lambda.
    double lipschitz_bound() const {
        double frob = 0.0;
        for (const auto& row : x) {
            frob += 1.0;
            for (double v : row) frob += v * v;
        }
        return 0.25 * frob / static_cast<double>(x.size()) + lambda;
    }
};

class LogisticRegression {
public:
    LogisticRegression() = default;
    LogisticRegression(std::vector<double> coef, double intercept)
        : coef_(std::move(coef)), intercept_(intercept), converged_(true) {}

    // Fixed step 1/L, so plain gradient descent never increases the loss.
    void fit(const Matrix& x, std::span<const int> y, const LogisticParams& p) {
        if (x.empty()) throw ValidationError("logistic: empty training set");
        if (p.penalty == Penalty::l2 && !(p.C > 0.0)) throw ValidationError("logistic: C must be positive");
        const auto obj = LogisticObjective::make(x, y, p);
        const std::size_t dim = x.front().size() + 1;
        const double step = 1.0 / obj.lipschitz_bound();
        std::vector<double> theta(dim, 0.0), prev(dim, 0.0), probe(dim, 0.0);
        loss_history_.clear();
        loss_history_.push_back(obj.loss(theta));
        converged_ = false;
        n_iter_ = 0;
        for (std::size_t it = 0; it < p.max_iter; ++it) {
            if (p.solver == LogisticSolver::nesterov) {
                const double beta = static_cast<double>(it) / static_cast<double>(it + 3);
                for (std::size_t j = 0; j < dim; ++j) probe[j] = theta[j] + beta * (theta[j] - prev[j]);
            } else {
                probe = theta;
            }
            const auto g = obj.gradient(probe);
            double gmax = 0.0;
            for (double v : g) gmax = std::max(gmax, std::abs(v));
            if (gmax < p.tol) {
                theta = probe;
                converged_ = true;
                break;
            }
            prev = theta;
            for (std::size_t j = 0; j < dim; ++j) theta[j] = probe[j] - step * g[j];
            loss_history_.push_back(obj.loss(theta));
            n_iter_ = it + 1;
        }
        coef_.assign(theta.begin(), theta.end() - 1);
        intercept_ = theta.back();
    }

    double predict_proba(std::span<const double> row) const {
        if (row.size() != coef_.size()) throw ValidationError("logistic: arity mismatch");
        double z = intercept_;
        for (std::size_t j = 0; j < coef_.size(); ++j) z += coef_[j] * row[j];
        return sigmoid(z);
    }

    int predict(std::span<const double> row) const { return predict_proba(row) >= 0.5 ? 1 : 0; }

    const std::vector<double>& coef() const noexcept { return coef_; }
    double intercept() const noexcept { return intercept_; }
    bool converged() const noexcept { return converged_; }
    std::size_t n_iter() const noexcept { return n_iter_; }
    const std::vector<double>& loss_history() const noexcept { return loss_history_; }

    std::vector<double> importance() const {
        std::vector<double> out;
        for (double c : coef_) out.push_back(std::abs(c));
        return out;
    }

    nlohmann::json to_json() const {
        return {{"coef", coef_}, {"intercept", intercept_}, {"converged", converged_}, {"n_iter", n_iter_}};
    }

    static LogisticRegression from_json(const nlohmann::json& j) {
        LogisticRegression m(j.at("coef").get<std::vector<double>>(), j.at("intercept").get<double>());
        m.converged_ = j.at("converged").get<bool>();
        m.n_iter_ = j.at("n_iter").get<std::size_t>();
        return m;
    }

private:
    std::vector<double> coef_;
    double intercept_ = 0.0;
    bool converged_ = false;
    std::size_t n_iter_ = 0;
    std::vector<double> loss_history_;
};

}  // namespace healthprompt::ml
