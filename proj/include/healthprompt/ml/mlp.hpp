#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "healthprompt/error.hpp"
#include "healthprompt/ml/boosting.hpp"  // sigmoid
#include "healthprompt/ml/logistic.hpp"  // softplus
#include "healthprompt/random.hpp"

namespace healthprompt::ml {

enum class Activation { identity, logistic, tanh, relu };
enum class MlpSolver { sgd, adam };
enum class LearningRateSchedule { constant, invscaling, adaptive };

struct MlpParams {
    std::vector<std::size_t> hidden_layer_sizes{100};
    Activation activation = Activation::relu;
    MlpSolver solver = MlpSolver::adam;
    double alpha = 1e-4;  // L2 strength
    LearningRateSchedule learning_rate = LearningRateSchedule::constant;  // sgd only
    double learning_rate_init = 1e-3;
    double tol = 1e-4;
    std::size_t max_iter = 200;  // epochs
    std::size_t batch_size = 200;
    std::size_t n_iter_no_change = 10;
    double momentum = 0.9;  // sgd only
};

// Feed-forward binary classifier with a single sigmoid output unit.
class Mlp {
public:
    struct Layer {
        std::size_t in = 0, out = 0;
        std::vector<double> w;  // out x in, row-major
        std::vector<double> b;
    };

    void fit(const Matrix& x, std::span<const int> y, const MlpParams& p, std::uint64_t seed) {
        if (x.empty()) throw ValidationError("mlp: empty training set");
        if (p.max_iter == 0) throw ValidationError("mlp: max_iter must be positive");
        activation_ = p.activation;
        const std::size_t n = x.size();
        Rng rng = make_rng(seed);
        init_layers(x.front().size(), p, rng);

        const std::size_t batch = std::clamp<std::size_t>(p.batch_size, 1, n);
        std::vector<Layer> grad = layers_;
        std::vector<Layer> m1 = zeros_like(layers_), m2 = zeros_like(layers_), velocity = zeros_like(layers_);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        double lr = p.learning_rate_init;
        double best_loss = std::numeric_limits<double>::infinity();
        std::size_t no_improvement = 0;
        std::size_t adam_t = 0;
        converged_ = false;
        n_iter_ = 0;
        loss_history_.clear();

        for (std::size_t epoch = 0; epoch < p.max_iter; ++epoch) {
            shuffle(order, rng);
            if (p.solver == MlpSolver::sgd && p.learning_rate == LearningRateSchedule::invscaling) {
                lr = p.learning_rate_init / std::sqrt(static_cast<double>(epoch + 1));
            }
            double epoch_loss = 0.0;
            for (std::size_t start = 0; start < n; start += batch) {
                const std::size_t stop = std::min(n, start + batch);
                const std::span<const std::size_t> idx(order.data() + start, stop - start);
                epoch_loss += batch_gradient(x, y, idx, p.alpha, grad) * static_cast<double>(idx.size());
                if (p.solver == MlpSolver::adam) {
                    ++adam_t;
                    adam_step(grad, m1, m2, lr, adam_t);
                } else {
                    sgd_step(grad, velocity, lr, p.momentum);
                }
            }
            epoch_loss /= static_cast<double>(n);
            loss_history_.push_back(epoch_loss);
            n_iter_ = epoch + 1;
            if (!std::isfinite(epoch_loss)) break;

            if (epoch_loss > best_loss - p.tol) {
                ++no_improvement;
            } else {
                no_improvement = 0;
            }
            best_loss = std::min(best_loss, epoch_loss);
            if (no_improvement > p.n_iter_no_change) {
                if (p.solver == MlpSolver::sgd && p.learning_rate == LearningRateSchedule::adaptive && lr > 1e-6) {
                    lr /= 5.0;
                    no_improvement = 0;
                } else {
                    converged_ = true;
                    break;
                }
            }
        }
    }

    double predict_proba(std::span<const double> row) const {
        if (layers_.empty() || row.size() != layers_.front().in) throw ValidationError("mlp: arity mismatch");
        std::vector<double> a(row.begin(), row.end()), z;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            affine(layers_[l], a, z);
            if (l + 1 < layers_.size()) {
                for (auto& v : z) v = activate(v);
            }
            a.swap(z);
        }
        return sigmoid(a.front());
    }

    int predict(std::span<const double> row) const { return predict_proba(row) >= 0.5 ? 1 : 0; }

    bool converged() const noexcept { return converged_; }
    std::size_t n_iter() const noexcept { return n_iter_; }
    const std::vector<double>& loss_history() const noexcept { return loss_history_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    nlohmann::json to_json() const {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : layers_) layers.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
        return {{"activation", static_cast<int>(activation_)},
                {"converged", converged_},
                {"n_iter", n_iter_},
                {"layers", layers}};
    }

    static Mlp from_json(const nlohmann::json& j) {
        Mlp m;
        m.activation_ = static_cast<Activation>(j.at("activation").get<int>());
        m.converged_ = j.at("converged").get<bool>();
        m.n_iter_ = j.at("n_iter").get<std::size_t>();
        for (const auto& l : j.at("layers")) {
            m.layers_.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                                 l.at("w").get<std::vector<double>>(), l.at("b").get<std::vector<double>>()});
        }
        return m;
    }

private:
    static std::vector<Layer> zeros_like(const std::vector<Layer>& ls) {
        std::vector<Layer> out = ls;
        for (auto& l : out) {
            std::fill(l.w.begin(), l.w.end(), 0.0);
            std::fill(l.b.begin(), l.b.end(), 0.0);
        }
        return out;
    }

    void init_layers(std::size_t n_in, const MlpParams& p, Rng& rng) {
        layers_.clear();
        std::vector<std::size_t> sizes{n_in};
        sizes.insert(sizes.end(), p.hidden_layer_sizes.begin(), p.hidden_layer_sizes.end());
        sizes.push_back(1);
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            Layer layer{sizes[l], sizes[l + 1], std::vector<double>(sizes[l] * sizes[l + 1]),
                        std::vector<double>(sizes[l + 1])};
            // Glorot uniform; doubled gain for logistic units.
            const double factor = p.activation == Activation::logistic ? 2.0 : 6.0;
            const double bound = std::sqrt(factor / static_cast<double>(layer.in + layer.out));
            for (auto& v : layer.w) v = uniform_real(rng, -bound, bound);
            for (auto& v : layer.b) v = uniform_real(rng, -bound, bound);
            layers_.push_back(std::move(layer));
        }
    }

    double activate(double z) const {
        switch (activation_) {
            case Activation::identity: return z;
            case Activation::logistic: return sigmoid(z);
            case Activation::tanh: return std::tanh(z);
            case Activation::relu: return z > 0.0 ? z : 0.0;
        }
        return z;
    }

    // Derivative expressed through the activation output a = f(z).
    double activate_grad(double a) const {
        switch (activation_) {
            case Activation::identity: return 1.0;
            case Activation::logistic: return a * (1.0 - a);
            case Activation::tanh: return 1.0 - a * a;
            case Activation::relu: return a > 0.0 ? 1.0 : 0.0;
        }
        return 1.0;
    }

    static void affine(const Layer& l, std::span<const double> in, std::vector<double>& out) {
        out.assign(l.out, 0.0);
        for (std::size_t o = 0; o < l.out; ++o) {
            double s = l.b[o];
            const double* w = l.w.data() + o * l.in;
            for (std::size_t i = 0; i < l.in; ++i) s += w[i] * in[i];
            out[o] = s;
        }
    }

    // Mean log-loss over the batch plus alpha/(2 batch) |W|^2; fills grad.
    double batch_gradient(const Matrix& x, std::span<const int> y, std::span<const std::size_t> idx, double alpha,
                          std::vector<Layer>& grad) const {
        for (auto& g : grad) {
            std::fill(g.w.begin(), g.w.end(), 0.0);
            std::fill(g.b.begin(), g.b.end(), 0.0);
        }
        const std::size_t depth = layers_.size();
        std::vector<std::vector<double>> acts(depth + 1);
        std::vector<double> delta, prev_delta;
        double loss = 0.0;
        for (auto i : idx) {
            acts[0].assign(x[i].begin(), x[i].end());
            for (std::size_t l = 0; l < depth; ++l) {
                affine(layers_[l], acts[l], acts[l + 1]);
                if (l + 1 < depth) {
                    for (auto& v : acts[l + 1]) v = activate(v);
                }
            }
            const double z = acts[depth][0];
            loss += softplus(z) - y[i] * z;
            delta.assign(1, sigmoid(z) - y[i]);
            for (std::size_t l = depth; l-- > 0;) {
                const Layer& layer = layers_[l];
                Layer& g = grad[l];
                for (std::size_t o = 0; o < layer.out; ++o) {
                    g.b[o] += delta[o];
                    double* gw = g.w.data() + o * layer.in;
                    for (std::size_t k = 0; k < layer.in; ++k) gw[k] += delta[o] * acts[l][k];
                }
                if (l == 0) break;
                prev_delta.assign(layer.in, 0.0);
                for (std::size_t o = 0; o < layer.out; ++o) {
                    const double* w = layer.w.data() + o * layer.in;
                    for (std::size_t k = 0; k < layer.in; ++k) prev_delta[k] += w[k] * delta[o];
                }
                for (std::size_t k = 0; k < layer.in; ++k) prev_delta[k] *= activate_grad(acts[l][k]);
                delta.swap(prev_delta);
            }
        }
        const double m = static_cast<double>(idx.size());
        double reg = 0.0;
        for (std::size_t l = 0; l < depth; ++l) {
            for (std::size_t k = 0; k < grad[l].w.size(); ++k) {
                reg += layers_[l].w[k] * layers_[l].w[k];
                grad[l].w[k] = grad[l].w[k] / m + alpha * layers_[l].w[k] / m;
            }
            for (auto& v : grad[l].b) v /= m;
        }
        return loss / m + 0.5 * alpha * reg / m;
    }

    void adam_step(const std::vector<Layer>& grad, std::vector<Layer>& m1, std::vector<Layer>& m2, double lr,
                   std::size_t t) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double step = lr * std::sqrt(1.0 - std::pow(b2, static_cast<double>(t))) /
                            (1.0 - std::pow(b1, static_cast<double>(t)));
        auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& a,
                          std::vector<double>& v) {
            for (std::size_t k = 0; k < param.size(); ++k) {
                a[k] = b1 * a[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                param[k] -= step * a[k] / (std::sqrt(v[k]) + eps);
            }
        };
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            update(layers_[l].w, grad[l].w, m1[l].w, m2[l].w);
            update(layers_[l].b, grad[l].b, m1[l].b, m2[l].b);
        }
    }

    void sgd_step(const std::vector<Layer>& grad, std::vector<Layer>& velocity, double lr, double momentum) {
        auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& v) {
            for (std::size_t k = 0; k < param.size(); ++k) {
                v[k] = momentum * v[k] - lr * g[k];
                param[k] += v[k];
            }
        };
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            update(layers_[l].w, grad[l].w, velocity[l].w);
            update(layers_[l].b, grad[l].b, velocity[l].b);
        }
    }

    std::vector<Layer> layers_;
    Activation activation_ = Activation::relu;
    bool converged_ = false;
    std::size_t n_iter_ = 0;
    std::vector<double> loss_history_;
};

}  // namespace healthprompt::ml
