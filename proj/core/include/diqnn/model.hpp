#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "diqnn/matrix.hpp"

namespace diqnn {

class Rng;

/// w x + b; the baseline unit. Bias is optional and only used in linear
/// baseline nets (it breaks homogeneity).
struct LinearLayer {
    Matrix weight; // out x in
    Vec bias;      // empty when the layer has no bias

    bool has_bias() const { return !bias.empty(); }
    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
    std::size_t param_count() const { return weight.size() + bias.size(); }
};

/// One symmetric weight matrix per output unit; unit i computes x^T A_i x.
struct QuadraticLayer {
    std::vector<Matrix> weights; // out_dim matrices, each in x in

    std::size_t in_dim() const { return weights.front().cols(); }
    std::size_t out_dim() const { return weights.size(); }
    std::size_t param_count() const { return weights.size() * weights.front().size(); }
    /// Largest ||A_i - A_i^T|| entry across units.
    double worst_asymmetry() const;
};

/// Factorized quadratic unit: output i is sum_j <c_ij, x>^2, hence >= 0.
struct LowRankLayer {
    std::size_t rank = 1;
    std::size_t units = 0;
    Matrix factors; // (units * rank) x in; factor (i,j) lives in row i*rank+j

    std::size_t in_dim() const { return factors.cols(); }
    std::size_t out_dim() const { return units; }
    std::size_t param_count() const { return factors.size(); }
    std::span<const double> factor(std::size_t unit, std::size_t j) const {
        return factors.row(unit * rank + j);
    }
    /// sum_j c_ij c_ij^T for one unit; symmetric PSD with rank <= `rank`.
    Matrix effective_matrix(std::size_t unit) const;
};

using Layer = std::variant<LinearLayer, QuadraticLayer, LowRankLayer>;

enum class Activation { None, ReLU };

enum class LayerKind { Linear, LinearNoBias, Quadratic, LowRank };

struct LayerSpec {
    LayerKind kind = LayerKind::Quadratic;
    std::size_t out = 0;
    std::size_t rank = 1; // LowRank only
};

struct NetSpec {
    std::size_t input_dim = 0;
    std::vector<LayerSpec> layers;
    Activation activation = Activation::None; // applied between linear layers only
};

struct InitOptions {
    // Standard deviations of the parameter draws; defaults follow the layer
    // type (see model.cpp). Quadratic layers symmetrize the raw draw.
    std::optional<double> linear_std;
    std::optional<double> quadratic_std;
    std::optional<double> lowrank_std;
    /// Start a 2-2 rank-1 low-rank net at exactly c1=(1,0), c2=(0,1).
    bool xor_paper_init = false;
};

/// Per-sample forward record kept for backpropagation.
struct ForwardTrace {
    std::uint64_t net_version = 0;
    std::vector<Vec> inputs;        // input to each layer
    std::vector<Vec> inner;         // low-rank <c_ij,x>, linear pre-activation
    Vec output;
};

/// Batched counterpart; matrices are sample-per-row.
struct BatchTrace {
    std::uint64_t net_version = 0;
    std::vector<Matrix> inputs;
    std::vector<Matrix> inner;             // low-rank T = X C^T, linear pre-act
    std::vector<std::vector<Matrix>> lifted; // quadratic X A_i per unit
    Matrix outputs;                         // N x k
};

/// An ordered layer stack with a flattened parameter view.
class Network {
public:
    Network() = default;

    /// Builds and initializes a network; deterministic in `seed`.
    static Network init(const NetSpec& spec, std::uint64_t seed,
                        const InitOptions& opts = {});

    /// Wraps pre-built layers (checkpoint loading, tests).
    static Network assemble(std::vector<Layer> layers, Activation act);

    const std::vector<Layer>& layers() const { return layers_; }
    Activation activation() const { return activation_; }
    std::size_t depth() const { return layers_.size(); }
    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::uint64_t version() const { return version_; }

    // -- flattened parameter view ------------------------------------------
    std::size_t param_count() const;
    Vec get_theta() const;
    void set_theta(std::span<const double> theta);
    /// theta += a * dir, applied in place layer by layer.
    void axpy_theta(double a, std::span<const double> dir);
    double theta_norm() const;

    // -- forward / backward --------------------------------------------------
    Vec forward(std::span<const double> x) const;
    Vec forward(std::span<const double> x, ForwardTrace& trace) const;
    /// Gradient w.r.t. all parameters (aligned with the theta view) and,
    /// when `input_grad` is non-null, w.r.t. the input.
    Vec backward(const ForwardTrace& trace, std::span<const double> output_grad,
                 Vec* input_grad = nullptr) const;

    Matrix forward_batch(const Matrix& x) const;
    Matrix forward_batch(const Matrix& x, BatchTrace& trace) const;
    /// Accumulates the parameter gradient summed over the batch rows into
    /// `param_grad` (size param_count, zeroed by the caller).
    void backward_batch(const BatchTrace& trace, const Matrix& output_grads,
                        std::span<double> param_grad) const;

    /// Degree L with Phi(x, a*theta) = a^L Phi(x, theta); empty for nets with
    /// bias terms or ReLU between layers.
    std::optional<int> homogeneity_degree() const;

    /// Direct layer access for analyses that rewrite weights.
    std::vector<Layer>& mutable_layers() { ++version_; return layers_; }

private:
    std::vector<Layer> layers_;
    Activation activation_ = Activation::None;
    std::uint64_t version_ = 0;

    void check_chain() const;
};

/// Index of the largest entry, lowest index on ties.
std::size_t argmax_lowest(std::span<const double> v);

struct Dataset;
/// Fraction of samples whose argmax output matches the label.
double evaluate_accuracy(const Network& net, const Dataset& data,
                         std::size_t batch = 512);

} // namespace diqnn
