#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "emsa/hamiltonian.hpp"
#include "emsa/network.hpp"
#include "emsa/propagation.hpp"

// Computes every quantity in the convergence estimates: the objective J, the
// per-iteration Hamiltonian increase mu_k, the two feasibility errors, plus
// the audits that make the theory executable at runtime.
//
// Unit convention: J is the batch MEAN of the terminal loss (plus the
// delta-weighted regularizer sum), while Hamiltonian quantities (mu_k,
// feasibility errors) are batch SUMS. Audits convert with the documented
// factor = batch size.

namespace emsa {

enum class RunStatus { Ok, Diverged, Error };

const char* to_string(RunStatus s);

struct IterationReport {
  int iter = 0;
  std::string method;
  // Full-dataset evaluations, filled on the eval schedule only.
  std::optional<double> J_train;
  std::optional<double> J_test;
  std::optional<double> accuracy_train;
  std::optional<double> accuracy_test;
  // Per-iteration quantities on the iteration's batch.
  double mu_k = 0.0;              // >= 0 for MSA-family iterations (batch sum)
  double feas_err_state = 0.0;    // >= 0, batch sum
  double feas_err_costate = 0.0;  // >= 0, batch sum
  double J_batch_before = 0.0;    // batch-mean J at theta_k
  double J_batch_after = 0.0;     // batch-mean J at theta_{k+1}
  double delta_J = 0.0;           // J_batch_after - J_batch_before
  Eigen::Index batch_size = 0;
  double wall_time_s = 0.0;
  double t_forward_s = 0.0;
  double t_backward_s = 0.0;
  double t_update_s = 0.0;  // maximization or gradient-step phase
  RunStatus status = RunStatus::Ok;
};

/// J = mean_i Phi(x_N^i) + sum_n delta_n * L(theta_n).
double total_loss(const NetworkSpec& net, const ParamStack& params, const Batch& batch);

/// Classification accuracy in [0,1]; argmax over logits, ties broken toward
/// the lower class index.
double accuracy(const NetworkSpec& net, const ParamStack& params, const Batch& batch);

/// mu_k = sum_n [H_n(x_n, p_{n+1}, theta_k1[n]) - H_n(x_n, p_{n+1}, theta_k[n])]
/// over contexts generated at theta_k.
double mu_k(const std::vector<LayerContext>& ctxs, const ParamStack& theta_k,
            const ParamStack& theta_k1);

struct FeasibilityErrors {
  double state = 0.0;    // sum_n sum_i ||g_n(x_n, theta_k1) - g_n(x_n, theta_k)||^2
  double costate = 0.0;  // sum_n sum_i ||grad_x H_n(theta_k1) - grad_x H_n(theta_k)||^2
};

FeasibilityErrors feasibility_errors(const std::vector<LayerContext>& ctxs,
                                     const ParamStack& theta_k, const ParamStack& theta_k1);

struct Lemma1Audit {
  struct Row {
    int iter = 0;
    double c_min = 0.0;  // implied lower bound on the estimate's constant
    bool flagged = false;
  };
  std::vector<Row> rows;
  double max_c_min = 0.0;
  int flags = 0;
};

/// For each iteration with positive feasibility errors, emits the implied
/// lower bound C_min = (dJ + mu_k) / (state_err + costate_err) after
/// converting the batch-sum quantities to the mean convention; iterations
/// with vanishing feasibility errors must satisfy dJ <= -mu_k exactly and are
/// flagged otherwise. Throws on empty history.
Lemma1Audit lemma1_audit(const std::vector<IterationReport>& history);

struct CostateBoundCheck {
  bool pass = true;
  // Worst relative slack (bound - ||p_n||)/bound per layer; negative => violation.
  std::vector<double> layer_slack;
  double worst_slack = 1.0;
};

/// Discrete Gronwall-type bound: per sample,
/// ||p_n|| <= ||grad Phi(x_N)|| * prod_{m>=n} (1 + delta_m ||W_m||_2),
/// for networks made of residual dense layers. `costate_override` substitutes
/// the internally computed costates (negative-control hook for tests).
CostateBoundCheck costate_norm_audit(const NetworkSpec& net, const ParamStack& params,
                                     const Batch& batch,
                                     const CostateTrajectory* costate_override = nullptr);

struct GradCheckResult {
  bool pass = false;
  double worst_rel_err = 0.0;
  Eigen::Index worst_index = -1;
};

/// Central finite differences per coordinate against the oracle's analytic
/// gradient; relative error |a-b| / max(|a|,|b|,1e-8).
GradCheckResult gradient_check(const std::function<double(const Eigen::VectorXd&,
                                                          Eigen::VectorXd*)>& fn,
                               const Eigen::VectorXd& point, double h, double tol);

}  // namespace emsa
