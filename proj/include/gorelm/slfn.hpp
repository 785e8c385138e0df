#pragma once

// Single-hidden-layer feedforward network with random input weights: layer
// construction, hidden-layer output H, predictions, node appending for the
// incremental solvers, and JSON model round-trip.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gorelm/matrix.hpp"
#include "gorelm/rng.hpp"

namespace gorelm {

enum class Activation { Sigmoid };

struct HiddenLayer {
    Mat a;                   // n x n_tilde input weights, node i in column i
    std::vector<double> nu;  // n_tilde biases
    Activation activation = Activation::Sigmoid;

    std::size_t inputs() const { return a.rows(); }
    std::size_t nodes() const { return a.cols(); }
};

struct SlfnModel {
    HiddenLayer hidden;
    Mat b;  // n_tilde x m output weights

    std::size_t outputs() const { return b.cols(); }
};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Weights and biases i.i.d. uniform on [-1, 1); drawing order is all of A
// row-major, then nu. Same seed gives a bitwise-identical layer.
inline HiddenLayer init_random(std::uint64_t seed, std::size_t n, std::size_t n_tilde) {
    if (n == 0 || n_tilde == 0)
        throw std::invalid_argument("init_random: zero dimension (n=" + std::to_string(n) +
                                    ", n_tilde=" + std::to_string(n_tilde) + ")");
    SplitMix64 rng(seed);
    HiddenLayer layer;
    layer.a = Mat(n, n_tilde);
    for (double& v : layer.a.values()) v = rng.uniform_pm1();
    layer.nu.resize(n_tilde);
    for (double& v : layer.nu) v = rng.uniform_pm1();
    return layer;
}

// Appends delta fresh nodes drawn from the given seed; the existing columns
// of A and entries of nu are preserved bitwise.
inline HiddenLayer append_nodes(const HiddenLayer& layer, std::uint64_t seed, std::size_t delta) {
    if (delta == 0) throw std::invalid_argument("append_nodes: delta must be at least 1");
    SplitMix64 rng(seed);
    Mat block(layer.inputs(), delta);
    for (double& v : block.values()) v = rng.uniform_pm1();
    HiddenLayer out;
    out.a = hconcat(layer.a, block);
    out.nu = layer.nu;
    out.nu.reserve(layer.nu.size() + delta);
    for (std::size_t i = 0; i < delta; ++i) out.nu.push_back(rng.uniform_pm1());
    out.activation = layer.activation;
    return out;
}

// Copy of the node range [first, last) as its own layer.
inline HiddenLayer slice_nodes(const HiddenLayer& layer, std::size_t first, std::size_t last) {
    if (first >= last || last > layer.nodes())
        throw std::invalid_argument("slice_nodes: bad range [" + std::to_string(first) + ", " +
                                    std::to_string(last) + ") of " + std::to_string(layer.nodes()));
    HiddenLayer out;
    out.a = Mat(layer.inputs(), last - first);
    for (std::size_t i = 0; i < layer.inputs(); ++i)
        for (std::size_t j = first; j < last; ++j) out.a(i, j - first) = layer.a(i, j);
    out.nu.assign(layer.nu.begin() + static_cast<std::ptrdiff_t>(first),
                  layer.nu.begin() + static_cast<std::ptrdiff_t>(last));
    out.activation = layer.activation;
    return out;
}

// H entry (j, i) = h(a_i . x_j + nu_i); rows follow samples, columns nodes.
inline Mat hidden_output(const HiddenLayer& layer, const Mat& x) {
    if (x.cols() != layer.a.rows())
        throw std::invalid_argument("hidden_output: x has " + std::to_string(x.cols()) +
                                    " features but layer expects " + std::to_string(layer.a.rows()));
    Mat h(x.rows(), layer.nodes());
    for (std::size_t j = 0; j < x.rows(); ++j) {
        const double* xr = x.row_ptr(j);
        double* hr = h.row_ptr(j);
        for (std::size_t i = 0; i < layer.nodes(); ++i) hr[i] = layer.nu[i];
        for (std::size_t d = 0; d < x.cols(); ++d) {
            const double xv = xr[d];
            if (xv == 0.0) continue;
            const double* ar = layer.a.row_ptr(d);
            for (std::size_t i = 0; i < layer.nodes(); ++i) hr[i] += xv * ar[i];
        }
        for (std::size_t i = 0; i < layer.nodes(); ++i) hr[i] = sigmoid(hr[i]);
    }
    return h;
}

inline Mat predict(const SlfnModel& model, const Mat& x) {
    if (model.b.rows() != model.hidden.nodes())
        throw std::invalid_argument("predict: output weights rows " + std::to_string(model.b.rows()) +
                                    " do not match hidden nodes " + std::to_string(model.hidden.nodes()));
    return matmul(hidden_output(model.hidden, x), model.b);
}

inline nlohmann::json model_to_json(const SlfnModel& model) {
    nlohmann::json j;
    j["n"] = model.hidden.inputs();
    j["n_tilde"] = model.hidden.nodes();
    j["m"] = model.b.cols();
    j["activation"] = "sigmoid";
    j["a"] = model.hidden.a.values();
    j["nu"] = model.hidden.nu;
    j["b"] = model.b.values();
    return j;
}

inline SlfnModel model_from_json(const nlohmann::json& j) {
    const std::string act = j.at("activation").get<std::string>();
    if (act != "sigmoid")
        throw std::runtime_error("model_from_json: unsupported activation \"" + act + "\"");
    const std::size_t n = j.at("n").get<std::size_t>();
    const std::size_t n_tilde = j.at("n_tilde").get<std::size_t>();
    const std::size_t m = j.at("m").get<std::size_t>();
    const auto a = j.at("a").get<std::vector<double>>();
    const auto nu = j.at("nu").get<std::vector<double>>();
    const auto b = j.at("b").get<std::vector<double>>();
    if (a.size() != n * n_tilde || nu.size() != n_tilde || b.size() != n_tilde * m)
        throw std::runtime_error("model_from_json: array lengths disagree with declared shape");
    SlfnModel model;
    model.hidden.a = Mat(n, n_tilde);
    model.hidden.a.values() = a;
    model.hidden.nu = nu;
    model.b = Mat(n_tilde, m);
    model.b.values() = b;
    return model;
}

inline void save_model(const std::string& path, const SlfnModel& model) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_model: cannot open " + path);
    os << model_to_json(model).dump(2) << "\n";
}

inline SlfnModel load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_model: cannot open " + path);
    nlohmann::json j;
    is >> j;
    return model_from_json(j);
}

}  // namespace gorelm
