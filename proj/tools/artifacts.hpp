#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emsa/diagnostics.hpp"
#include "emsa/network.hpp"

// Output artifacts of a training run: the history CSV (stable schema), the
// per-phase timing CSV, the final parameters as a flat float64 blob and its
// descriptive JSON manifest.

namespace emsa::cli {

inline constexpr const char* kHistoryHeader =
    "iter,method,J_train,J_test,acc_train,acc_test,mu_k,feas_state,feas_costate,delta_J,"
    "wall_time_s";

/// One row per eval point (reports carrying J_train). `timing` off writes the
/// wall-time column as 0 so repeated runs are byte-identical.
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterationReport>& history, bool timing);

std::string history_csv_text(const std::vector<IterationReport>& history, bool timing);

/// One row per iteration: iter,t_forward_s,t_backward_s,t_update_s,wall_time_s.
void write_timings_csv(const std::filesystem::path& path,
                       const std::vector<IterationReport>& history);

/// Flat little-endian float64 blob (layer order) plus a JSON manifest naming
/// shapes, dtype and layer order.
void write_params_blob(const std::filesystem::path& dir, const NetworkSpec& net,
                       const ParamStack& params);

}  // namespace emsa::cli
