#include "artifacts.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace emsa::cli {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

}  // namespace

std::string history_csv_text(const std::vector<IterationReport>& history, bool timing) {
  std::ostringstream os;
  os << kHistoryHeader << "\n";
  for (const IterationReport& r : history) {
    if (!r.J_train) continue;  // rows are eval points
    os << r.iter << ',' << r.method << ',' << fmt_opt(r.J_train) << ',' << fmt_opt(r.J_test)
       << ',' << fmt_opt(r.accuracy_train) << ',' << fmt_opt(r.accuracy_test) << ','
       << fmt(r.mu_k) << ',' << fmt(r.feas_err_state) << ',' << fmt(r.feas_err_costate) << ','
       << fmt(r.delta_J) << ',' << fmt(timing ? r.wall_time_s : 0.0) << "\n";
  }
  return os.str();
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterationReport>& history, bool timing) {
  std::ofstream out(path, std::ios::binary);
  out << history_csv_text(history, timing);
}

void write_timings_csv(const std::filesystem::path& path,
                       const std::vector<IterationReport>& history) {
  std::ofstream out(path, std::ios::binary);
  out << "iter,t_forward_s,t_backward_s,t_update_s,wall_time_s\n";
  for (const IterationReport& r : history) {
    out << r.iter << ',' << fmt(r.t_forward_s) << ',' << fmt(r.t_backward_s) << ','
        << fmt(r.t_update_s) << ',' << fmt(r.wall_time_s) << "\n";
  }
}

void write_params_blob(const std::filesystem::path& dir, const NetworkSpec& net,
                       const ParamStack& params) {
  std::ofstream blob(dir / "params.bin", std::ios::binary);
  for (int n = 0; n < params.depth(); ++n) {
    blob.write(reinterpret_cast<const char*>(params[n].data()),
               static_cast<std::streamsize>(params[n].size() * sizeof(double)));
  }

  nlohmann::json manifest;
  manifest["dtype"] = "float64";
  manifest["byte_order"] = "little";
  manifest["total_params"] = net.total_param_count();
  manifest["loss_kind"] = to_string(net.loss_kind);
  manifest["regularizer_weight"] = net.regularizer_weight;
  nlohmann::json layers = nlohmann::json::array();
  for (int n = 0; n < net.depth(); ++n) {
    const LayerSpec& l = net.layers[static_cast<std::size_t>(n)];
    nlohmann::json entry;
    entry["index"] = n;
    entry["kind"] = to_string(l.kind);
    entry["activation"] = to_string(l.activation);
    entry["in_dim"] = l.in_dim;
    entry["out_dim"] = l.out_dim;
    entry["delta"] = l.delta;
    entry["param_count"] = l.param_count();
    if (l.is_conv()) {
      entry["weight_shape"] = {l.conv.out_channels, l.conv.in_channels, l.conv.kernel,
                               l.conv.kernel};
      entry["bias_shape"] = {l.conv.out_channels};
      entry["storage"] = "kernel weights ((o*C_in+c)*K+u)*K+v, then bias";
    } else {
      entry["weight_shape"] = {l.out_dim, l.in_dim};
      entry["bias_shape"] = {l.out_dim};
      entry["storage"] = "column-major weights, then bias";
    }
    layers.push_back(entry);
  }
  manifest["layers"] = layers;
  std::ofstream mf(dir / "params_manifest.json");
  mf << manifest.dump(2) << "\n";
}

}  // namespace emsa::cli
