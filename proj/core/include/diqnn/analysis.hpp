#pragma once

#include <optional>
#include <vector>

#include "diqnn/dataset.hpp"
#include "diqnn/model.hpp"

namespace diqnn {

/// Test accuracy as a function of how many leading eigencomponents of each
/// class weight matrix are kept.
struct RankCurve {
    struct Point {
        std::size_t rank = 0;
        double accuracy = 0.0;
    };
    std::vector<Point> points;       // strictly increasing rank
    double full_rank_accuracy = 0.0; // untruncated baseline on the same data
};

/// For each class matrix A_i, replaces A_i by its leading-|lambda| rank-r
/// approximation and evaluates test accuracy; the input net is untouched.
/// The classifier layer must be a full QuadraticLayer.
RankCurve truncate_and_eval(const Network& net, const Dataset& data,
                            const std::vector<std::size_t>& ranks);

/// Mean input per predicted class next to the leading eigenvector of that
/// class's (effective) weight matrix.
struct StaReport {
    struct PerClass {
        int cls = 0;
        bool defined = false;     // false when no sample was predicted as cls
        Vec sta;                  // mean of inputs predicted as cls
        Vec leading_eigenvector;
        double abs_cosine = 0.0;  // |cos(sta, eigenvector)|, sign folded
    };
    std::vector<PerClass> classes;
};

/// Spike-triggered average built from model predictions (not true labels).
/// Works for single-classifier nets with quadratic or low-rank final layers.
StaReport spike_triggered_average(const Network& net, const Dataset& data);

struct HomogeneityReport {
    int degree = 0; // L used in the comparison
    struct Case {
        double scale = 0.0;
        double rel_error = 0.0;
    };
    std::vector<Case> cases;
    double worst_rel_error = 0.0;
};

/// Verifies Phi(x, a*theta) = a^L Phi(x, theta) for each scale.
/// Throws UnsupportedModel for nets without a homogeneity degree.
HomogeneityReport check_homogeneity(const Network& net, std::span<const double> x,
                                    std::span<const double> scales);

struct EulerReport {
    int degree = 0;
    Vec lhs;  // <d_theta Phi_i, theta> per output
    Vec rhs;  // L * Phi_i per output
    double worst_rel_error = 0.0;
};

/// Verifies the differential form <d_theta Phi_i, theta> = L Phi_i.
EulerReport check_euler_identity(const Network& net, std::span<const double> x);

} // namespace diqnn
