#pragma once

#include <string>
#include <vector>

#include "diqnn/model.hpp"
#include "diqnn/train.hpp"

namespace diqnn {

/// The XOR rank-one system reduces to two scalars: a = <c1,x1>^2 and
/// b = <c1,x2>^2 (by symmetry <c2,x2>^2 = a and <c2,x1>^2 = b).
struct XorState {
    double a = 0.0;
    double b = 0.0;
    double cross_sym = 0.0; // <c2,x2>^2, equals a when the symmetry holds
    double delta_mu = 0.0;
};

/// Closed-form margin velocity of the XOR gradient-flow system,
///   d(delta_mu)/dt = 8 v (a+b) a b / (a^2+b^2)^{3/2},
/// with v the runner-up softmax probability 1 / (1 + e^{a-b}).
double xor_margin_rate(double a, double b);

/// Outcome of the five gradient-flow checks behind the XOR theorem.
struct XorFlowChecks {
    bool monotone = false;          // delta_mu strictly increasing per step
    bool terminal = false;          // final delta_mu >= 0.99
    bool conserved = false;         // a*b within 1 +- 1e-6 throughout
    bool symmetric = false;         // |<c1,x1>^2 - <c2,x2>^2| <= 1e-8 throughout
    bool rate_matches = false;      // measured d(delta_mu)/dt vs closed form, rel 1e-3

    double final_delta_mu = 0.0;
    double worst_product_drift = 0.0;
    double worst_symmetry_error = 0.0;
    double worst_rate_rel_error = 0.0;
    long steps = 0;
    bool vacuous = false;           // total_time too small to record any step

    bool all_pass() const {
        return monotone && terminal && conserved && symmetric && rate_matches;
    }
    std::vector<std::string> failures() const;
};

/// Integrates the XOR problem from the paper initialization c1=(1,0),
/// c2=(0,1) with fixed-step RK4 and evaluates all five checks.
/// `require_terminal` drops the terminal-margin gate (used for short runs).
XorFlowChecks run_xor_flow_checks(double total_time, double flow_step,
                                  bool require_terminal = true);

} // namespace diqnn
