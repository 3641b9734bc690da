#include "run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "emsa/idx.hpp"
#include "emsa/presets.hpp"

namespace emsa::cli {

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::Sine: return "sine";
    case Experiment::MnistDense: return "mnist_dense";
    case Experiment::MnistConv: return "mnist_conv";
    case Experiment::FashionConv: return "fashion_conv";
    case Experiment::Custom: return "custom";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& s) {
  if (s == "sine") return Experiment::Sine;
  if (s == "mnist_dense") return Experiment::MnistDense;
  if (s == "mnist_conv") return Experiment::MnistConv;
  if (s == "fashion_conv") return Experiment::FashionConv;
  if (s == "custom") return Experiment::Custom;
  throw ShapeError("unknown experiment '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::map<std::string, std::map<std::string, std::string>> parse_ini(const std::string& text) {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ShapeError("config line " + std::to_string(lineno) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ShapeError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return sections;
}

namespace {

class SectionReader {
 public:
  SectionReader(const std::map<std::string, std::map<std::string, std::string>>& sections,
                const std::string& name)
      : section_(nullptr) {
    const auto it = sections.find(name);
    if (it != sections.end()) section_ = &it->second;
  }

  std::optional<std::string> get(const std::string& key) const {
    if (!section_) return std::nullopt;
    const auto it = section_->find(key);
    if (it == section_->end()) return std::nullopt;
    return it->second;
  }
  void get_to(const std::string& key, std::string& out) const {
    if (auto v = get(key)) out = *v;
  }
  void get_to(const std::string& key, double& out) const {
    if (auto v = get(key)) out = std::stod(*v);
  }
  void get_to(const std::string& key, int& out) const {
    if (auto v = get(key)) out = std::stoi(*v);
  }
  void get_to(const std::string& key, Eigen::Index& out) const {
    if (auto v = get(key)) out = static_cast<Eigen::Index>(std::stoll(*v));
  }
  void get_to(const std::string& key, std::uint64_t& out) const {
    if (auto v = get(key)) out = std::stoull(*v);
  }
  void get_to(const std::string& key, bool& out) const {
    if (auto v = get(key)) {
      if (*v == "on" || *v == "true" || *v == "1") out = true;
      else if (*v == "off" || *v == "false" || *v == "0") out = false;
      else throw ShapeError("expected on/off for key '" + key + "'");
    }
  }

 private:
  const std::map<std::string, std::string>* section_;
};

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ShapeError("cannot open config file " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return from_ini_text(text.str());
}

RunConfig RunConfig::from_ini_text(const std::string& text) {
  const auto sections = parse_ini(text);
  RunConfig cfg;

  const SectionReader run(sections, "run");
  if (auto v = run.get("experiment")) cfg.experiment = experiment_from_string(*v);
  run.get_to("seed", cfg.seed);
  std::string out;
  run.get_to("out_dir", out);
  cfg.out_dir = out;
  if (auto v = run.get("init")) cfg.init = init_scheme_from_string(*v);
  run.get_to("timing", cfg.timing);
  run.get_to("eval_every", cfg.solver.eval_every);
  run.get_to("threads", cfg.solver.threads);

  const SectionReader net(sections, "network");
  net.get_to("layers", cfg.net_layers);
  net.get_to("delta", cfg.net_delta);
  net.get_to("dim", cfg.net_dim);
  net.get_to("channels", cfg.net_channels);
  net.get_to("hidden", cfg.net_hidden);
  net.get_to("residual_layers", cfg.net_residual_layers);

  const SectionReader solver(sections, "solver");
  if (auto v = solver.get("method")) cfg.solver.method = method_from_string(*v);
  solver.get_to("iterations", cfg.solver.iterations);
  if (auto v = solver.get("batch_size")) {
    cfg.solver.batch_size = (*v == "full") ? 0 : static_cast<Eigen::Index>(std::stoll(*v));
  }
  solver.get_to("rho", cfg.solver.rho);
  solver.get_to("eta", cfg.solver.eta);
  solver.get_to("momentum", cfg.solver.momentum);
  solver.get_to("adagrad_eps", cfg.solver.adagrad_eps);
  solver.get_to("adam_beta1", cfg.solver.adam_beta1);
  solver.get_to("adam_beta2", cfg.solver.adam_beta2);
  solver.get_to("adam_eps", cfg.solver.adam_eps);
  solver.get_to("divergence_threshold", cfg.solver.divergence_threshold);

  const SectionReader ascent(sections, "ascent");
  ascent.get_to("max_iters", cfg.solver.ascent.max_iters);
  ascent.get_to("memory", cfg.solver.ascent.memory);
  ascent.get_to("armijo_c", cfg.solver.ascent.armijo_c);
  ascent.get_to("backtrack_factor", cfg.solver.ascent.backtrack_factor);
  ascent.get_to("max_backtracks", cfg.solver.ascent.max_backtracks);
  ascent.get_to("grad_tol", cfg.solver.ascent.grad_tol);

  const SectionReader data(sections, "data");
  std::string dir;
  data.get_to("dir", dir);
  if (!dir.empty()) cfg.data_dir = dir;
  data.get_to("train_samples", cfg.train_samples);
  data.get_to("test_samples", cfg.test_samples);
  data.get_to("subset", cfg.subset);

  cfg.solver.seed = cfg.seed;
  return cfg;
}

std::string RunConfig::to_ini_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "[run]\n";
  os << "experiment = " << to_string(experiment) << "\n";
  os << "seed = " << seed << "\n";
  os << "out_dir = " << out_dir << "\n";
  os << "init = " << emsa::to_string(init) << "\n";
  os << "timing = " << (timing ? "on" : "off") << "\n";
  os << "eval_every = " << solver.eval_every << "\n";
  os << "threads = " << solver.threads << "\n";
  os << "\n[network]\n";
  os << "layers = " << net_layers << "\n";
  os << "delta = " << net_delta << "\n";
  os << "dim = " << net_dim << "\n";
  os << "channels = " << net_channels << "\n";
  os << "hidden = " << net_hidden << "\n";
  os << "residual_layers = " << net_residual_layers << "\n";
  os << "\n[solver]\n";
  os << "method = " << emsa::to_string(solver.method) << "\n";
  os << "iterations = " << solver.iterations << "\n";
  if (solver.batch_size == 0) {
    os << "batch_size = full\n";
  } else {
    os << "batch_size = " << solver.batch_size << "\n";
  }
  os << "rho = " << solver.rho << "\n";
  os << "eta = " << solver.eta << "\n";
  os << "momentum = " << solver.momentum << "\n";
  os << "adagrad_eps = " << solver.adagrad_eps << "\n";
  os << "adam_beta1 = " << solver.adam_beta1 << "\n";
  os << "adam_beta2 = " << solver.adam_beta2 << "\n";
  os << "adam_eps = " << solver.adam_eps << "\n";
  os << "divergence_threshold = " << solver.divergence_threshold << "\n";
  os << "\n[ascent]\n";
  os << "max_iters = " << solver.ascent.max_iters << "\n";
  os << "memory = " << solver.ascent.memory << "\n";
  os << "armijo_c = " << solver.ascent.armijo_c << "\n";
  os << "backtrack_factor = " << solver.ascent.backtrack_factor << "\n";
  os << "max_backtracks = " << solver.ascent.max_backtracks << "\n";
  os << "grad_tol = " << solver.ascent.grad_tol << "\n";
  os << "\n[data]\n";
  os << "dir = " << data_dir.string() << "\n";
  os << "train_samples = " << train_samples << "\n";
  os << "test_samples = " << test_samples << "\n";
  os << "subset = " << subset << "\n";
  return os.str();
}

NetworkSpec RunConfig::build_network() const {
  switch (experiment) {
    case Experiment::Sine:
    case Experiment::Custom: {
      const int dim = net_dim > 0 ? net_dim : 5;
      const double delta = net_delta > 0 ? net_delta : 0.25;
      const int layers = net_layers > 0 ? net_layers : 20;
      return sine_network(dim, layers * delta, delta);
    }
    case Experiment::MnistDense: {
      const int hidden = net_hidden > 0 ? net_hidden : 64;
      const int res = net_residual_layers > 0 ? net_residual_layers : 7;
      const double delta = net_delta > 0 ? net_delta : 0.5;
      return mnist_dense_network(hidden, res, delta);
    }
    case Experiment::MnistConv:
    case Experiment::FashionConv: {
      const int channels = net_channels > 0 ? net_channels : 32;
      const int res = net_residual_layers > 0 ? net_residual_layers : 7;
      const double delta = net_delta > 0 ? net_delta : 0.5;
      return mnist_conv_network(channels, res, delta);
    }
  }
  throw ShapeError("unknown experiment");
}

RunConfig::Data RunConfig::load_data() const {
  Data out;
  if (experiment == Experiment::Sine || experiment == Experiment::Custom) {
    const int dim = net_dim > 0 ? net_dim : 5;
    out.train = lift_dataset(sine_dataset(train_samples, seed), dim);
    if (test_samples > 0) {
      out.test = lift_dataset(sine_dataset(test_samples, seed + 1), dim);
    }
    return out;
  }
  const MnistSplit split = load_mnist_split(
      data_dir, experiment == Experiment::FashionConv ? "fashion" : "mnist");
  if (subset > 0) {
    if (subset > split.train.size()) {
      throw ShapeError("subset larger than the available training set");
    }
    out.train = slice_dataset(split.train, 0, subset);
    if (split.test.size() > 0) {
      out.test = split.test;
    } else {
      const Eigen::Index rest = split.train.size() - subset;
      const Eigen::Index held = std::min(rest, test_samples > 0 ? test_samples : rest);
      if (held > 0) out.test = slice_dataset(split.train, subset, held);
    }
  } else {
    out.train = split.train;
    if (split.test.size() > 0) {
      out.test = split.test;
    } else if (split.validation.size() > 0) {
      out.test = split.validation;
    }
  }
  return out;
}

std::filesystem::path RunConfig::resolved_out_dir() const {
  if (!out_dir.empty()) return out_dir;
  if (const char* env = std::getenv("EMSA_OUTPUT_DIR")) {
    return std::filesystem::path(env) /
           (std::string(to_string(experiment)) + "-" + emsa::to_string(solver.method));
  }
  return std::filesystem::path("runs") /
         (std::string(to_string(experiment)) + "-" + emsa::to_string(solver.method));
}

}  // namespace emsa::cli
