#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "diqnn/dataset.hpp"
#include "diqnn/margin.hpp"
#include "diqnn/matrix.hpp"
#include "diqnn/model.hpp"

namespace diqnn {

// ---- losses -----------------------------------------------------------------

struct LossGrad {
    double loss = 0.0;
    Vec grad; // d loss / d outputs
};

/// Softmax cross-entropy with max-subtraction stabilization.
LossGrad cross_entropy(std::span<const double> outputs, int label);

/// Mean cross-entropy over a batch; fills `grads` (selfsame shape as
/// `outputs`) with per-sample output gradients already divided by the batch
/// size, so backward accumulation yields the mean-loss gradient.
double cross_entropy_batch(const Matrix& outputs, std::span<const int> labels,
                           Matrix& grads);

/// Margin-regularized objective of a batch: mean cross-entropy minus
/// lambda times the batch normalized margin. Returns the loss value and the
/// full parameter gradient.
std::pair<double, Vec> regularized_loss(const Network& net, const Dataset& batch,
                                        double lambda);

// ---- training ---------------------------------------------------------------

enum class Optimizer { GD, SGD, GradientFlow };

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 100;    // ignored for GD / GradientFlow
    std::size_t epochs = 1;          // GD/SGD; GradientFlow uses total_time
    double lambda_margin = 0.0;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::SGD;
    double flow_step = 1e-2;         // RK4 step for GradientFlow
    double total_time = 50.0;        // GradientFlow horizon
    /// Record cadence for SGD runs; GD and flow runs record every step.
    std::size_t record_every = 50;

    void validate() const;
};

struct TraceRecord {
    long step = 0;
    long epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double delta_mu = 0.0;
    double theta_norm = 0.0;
    double wall_ms = 0.0;
};

struct TrainTrace {
    std::vector<TraceRecord> records;
    static const char* csv_header() {
        return "step,epoch,loss,train_acc,test_acc,delta_mu,theta_norm,wall_ms";
    }
};

/// Called after every recorded step with the margin report that produced the
/// record's delta_mu (over the margin probe set for SGD-scale runs).
using StepObserver = std::function<void(long step, const Network&, const TraceRecord&,
                                        const MarginReport&)>;

/// Gradient-descent training (full batch or minibatch SGD per config).
/// Deterministic given the seed; SGD reshuffles per epoch and keeps the last
/// partial batch. Throws DivergedTraining when the loss turns non-finite or
/// exceeds 1e6.
TrainTrace train(Network& net, const Dataset& train_data,
                 const Dataset* test_data, const TrainConfig& config,
                 const StepObserver& observer = nullptr);

/// Integrates d theta / dt = -grad L(theta) with classical fixed-step RK4.
TrainTrace gradient_flow(Network& net, const Dataset& data, double total_time,
                         double flow_step, const StepObserver& observer = nullptr);

} // namespace diqnn
