#include "sensorsched/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sensorsched/csv.hpp"
#include "sensorsched/network_io.hpp"
#include "sensorsched/parallel.hpp"
#include "sensorsched/sampling.hpp"
#include "sensorsched/spectral.hpp"

namespace sensorsched::cli {

namespace {

using nlohmann::json;
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorKind::Validation, message);
}

/// Output sink: the named file, or the fallback stream when no path is set.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) invalid("cannot write " + path);
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<double> parse_grid(const std::string& text, const char* name) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) grid.push_back(csv::parse(field));
  if (grid.empty()) invalid(std::string(name) + " grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) invalid(std::string(name) + " grid must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      invalid(std::string(name) + " grid must be strictly ascending");
    }
  }
  return grid;
}

std::vector<std::string> parse_names(const std::string& text) {
  std::vector<std::string> names;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (!field.empty()) names.push_back(field);
  }
  if (names.empty()) invalid("method list is empty");
  return names;
}

int resolve_jobs(int flag) {
  if (const char* env = std::getenv("SENSORSCHED_JOBS")) {
    try {
      const int jobs = std::stoi(env);
      if (jobs >= 1) return jobs;
    } catch (const std::exception&) {
    }
    invalid("SENSORSCHED_JOBS must be a positive integer");
  }
  return flag > 0 ? flag : default_jobs();
}

Criterion parse_criterion(const std::string& name) {
  if (name == "mse") return Criterion::Mse;
  if (name == "vce") return Criterion::Vce;
  invalid("unknown criterion " + name);
}

Penalty parse_penalty(const std::string& name) {
  if (name == "l2") return Penalty::L2;
  if (name == "l2sq") return Penalty::L2Squared;
  if (name == "linf") return Penalty::Linf;
  invalid("unknown penalty " + name);
}

std::string criterion_name(Criterion c) { return c == Criterion::Mse ? "mse" : "vce"; }

double safe_mse(const Matrix& A) {
  try {
    return mse(A);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::RankDeficient) return kInf;
    throw;
  }
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

// Shared scheduling flags.
struct ScheduleFlags {
  std::string network;
  int T = 10;
  double rho = 3.0;
  std::string criterion = "mse";
  std::string mode = "implicit";
  double lambda = 1.0;
  std::string penalty = "l2sq";
  bool comms = false;
  double epsilon = 1e-3;
  std::vector<int> exclude;
  std::string trace;

  void attach(CLI::App* app, bool withLambda) {
    app->add_option("--network", network, "Network JSON file")->required();
    app->add_option("--T", T, "Number of time instances")->check(CLI::PositiveNumber);
    app->add_option("--criterion", criterion, "mse or vce");
    app->add_option("--mode", mode, "implicit or explicit energy constraint");
    if (withLambda) app->add_option("--lambda", lambda, "Energy regularisation weight");
    app->add_option("--penalty", penalty, "Explicit-mode penalty: l2, l2sq or linf");
    app->add_flag("--comms", comms, "Charge communication costs in explicit mode");
    app->add_option("--epsilon", epsilon, "Reweighting and pinning threshold");
    app->add_option("--exclude", exclude, "Sensors exempt from coverage")->delimiter(',');
    app->add_option("--trace", trace, "JSON-lines trace of the outer loop");
  }

  EnergyModel energy(double lam) const {
    EnergyModel model;
    if (mode == "implicit") {
      model.mode = EnergyMode::Implicit;
    } else if (mode == "explicit") {
      model.mode = EnergyMode::Explicit;
    } else {
      invalid("unknown mode " + mode);
    }
    model.lambda = lam;
    model.penalty = parse_penalty(penalty);
    model.includeComms = comms;
    return model;
  }
};

struct RunOutcome {
  ScheduleResult result;
  AccuracySpec accuracy;
};

RunOutcome run_schedule(const std::shared_ptr<const SensorNetwork>& net,
                        const ScheduleFlags& flags, double rho, double lambda,
                        std::ostream* trace) {
  const AccuracySpec accuracy =
      AccuracySpec::make(*net, parse_criterion(flags.criterion), rho);
  ScheduleOptions options;
  options.epsilon = flags.epsilon;
  options.coverageExclusions = flags.exclude;
  options.trace = trace;
  return {schedule(net, flags.T, accuracy, flags.energy(lambda), options), accuracy};
}

std::shared_ptr<const SensorNetwork> load_shared(const std::string& path) {
  return std::make_shared<const SensorNetwork>(load_network(path));
}

// ---------------------------------------------------------------- gen

struct GenFlags {
  bool tight = false;
  bool gaussian = false;
  int m = 100;
  int n = 20;
  std::optional<double> alpha;
  std::optional<double> scale;
  std::uint64_t seed = 0;
  std::string topology = "none";
  int fanout = 3;
  int maxDepth = 4;
  double commFraction = 0.5;
  double e0 = 0.0;
  std::string out;
};

void cmd_gen(const GenFlags& f) {
  if (f.tight == f.gaussian) invalid("choose exactly one of --tight / --gaussian");
  if (f.m < f.n || f.n < 1) invalid("need m >= n >= 1");
  const Matrix A = f.tight ? gen_tight(f.m, f.n, f.alpha.value_or(f.m), f.seed)
                           : gen_gaussian(f.m, f.n, f.scale, f.seed);
  std::optional<Topology> topology;
  if (f.topology == "star") {
    topology = star_topology(f.m);
  } else if (f.topology == "tree") {
    topology = random_tree_topology(f.m, f.fanout, f.maxDepth, f.seed);
  } else if (f.topology != "none") {
    invalid("unknown topology " + f.topology);
  }
  const CostModel costs = default_costs(A, topology, f.commFraction);
  const Matrix C = topology ? costs.C : Matrix::Zero(f.m, f.m);
  save_network(SensorNetwork(A, costs.s, Vector::Constant(f.m, f.e0), C, topology),
               f.out);
}

// ---------------------------------------------------------------- metrics

void cmd_metrics(const std::string& networkPath, const std::string& schedulePath,
                 std::ostream& out) {
  const SensorNetwork net = load_network(networkPath);
  const Matrix& A = net.A();
  json doc{{"m", net.m()},
           {"n", net.n()},
           {"mse", number(mse(A))},
           {"wce", number(wce(A))},
           {"vce", number(vce(A))},
           {"frame_potential", number(frame_potential(A))}};
  if (!schedulePath.empty()) {
    const Matrix Z = csv::load_matrix(schedulePath);
    if (Z.rows() != net.m()) invalid("schedule must have m rows");
    json instants = json::array();
    for (Eigen::Index t = 0; t < Z.cols(); ++t) {
      const Matrix M = restrict(net, Z.col(t));
      double m = kInf, w = kInf, v = -kInf;
      try {
        m = mse_of_gram(M);
        w = wce_of_gram(M);
        v = vce_of_gram(M);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::RankDeficient) throw;
      }
      instants.push_back({{"mse", number(m)}, {"wce", number(w)}, {"vce", number(v)}});
    }
    doc["instants"] = instants;
  }
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------- place

struct PlaceFlags {
  std::string network;
  std::string method = "greedy";
  std::optional<int> k;
  std::optional<double> rho;
  std::uint64_t seed = 0;
  std::string out;
  std::string trajectory;
};

SelectionResult first_meeting(const SensorNetwork& net, double threshold,
                              const std::function<SelectionResult(int)>& pick) {
  for (int k = net.n(); k <= net.m(); ++k) {
    SelectionResult r = pick(k);
    if (safe_mse(select_rows(net.A(), r.indices)) <= threshold * (1.0 + 1e-12)) return r;
  }
  throw Error(ErrorKind::Infeasible, "no selection size meets the target");
}

void cmd_place(const PlaceFlags& f, std::ostream& out) {
  const auto net = load_shared(f.network);
  if (f.k.has_value() == f.rho.has_value()) invalid("give exactly one of --k / --rho");
  std::optional<AccuracySpec> accuracy;
  if (f.rho) accuracy = AccuracySpec::make(*net, Criterion::Mse, *f.rho);

  SelectionResult result;
  if (f.method == "greedy") {
    if (f.k) {
      result = greedy_add_mse(*net, *f.k);
    } else {
      result = greedy_add_mse(*net, net->m());
      std::size_t size = 0;
      while (size < result.trajectory.size() &&
             !accuracy->satisfiedBy(result.trajectory[size])) {
        ++size;
      }
      if (size == result.trajectory.size()) {
        throw Error(ErrorKind::Infeasible, "greedy never meets the target");
      }
      result.indices.resize(size + 1);
      result.trajectory.resize(size + 1);
    }
  } else if (f.method == "fp") {
    result = f.k ? fp_remove(*net, *f.k)
                 : first_meeting(*net, accuracy->threshold(),
                                 [&](int k) { return fp_remove(*net, k); });
  } else if (f.method == "random") {
    result = f.k ? random_select(*net, *f.k, f.seed)
                 : first_meeting(*net, accuracy->threshold(),
                                 [&](int k) { return random_select(*net, k, f.seed); });
  } else if (f.method == "exhaustive") {
    if (!accuracy) invalid("exhaustive placement needs --rho");
    result = exhaustive_min_sensors(*net, *accuracy);
  } else if (f.method == "irl1") {
    if (!accuracy) invalid("irl1 placement needs --rho");
    const ScheduleResult s = schedule(net, 1, *accuracy, EnergyModel{});
    for (int i = 0; i < net->m(); ++i) {
      if (s.Z.Z()(i, 0) == 1.0) result.indices.push_back(i);
    }
    result.trajectory.push_back(s.perInstant.instants.front().mse);
  } else {
    invalid("unknown method " + f.method);
  }

  json doc = selection_to_json(result, net->A());
  if (f.method == "irl1") doc["method"] = "irl1";
  if (accuracy) {
    doc["threshold"] = number(accuracy->threshold());
    doc["feasible"] = accuracy->satisfiedBy(safe_mse(select_rows(net->A(), result.indices)));
  }
  Sink sink(f.out, out);
  *sink << doc.dump(2) << '\n';
  if (!f.trajectory.empty()) {
    Sink traj(f.trajectory, out);
    csv::write_row(*traj, {"step", "value"});
    for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
      csv::write_row(*traj, {std::to_string(i + 1), csv::format(result.trajectory[i])});
    }
  }
}

// ---------------------------------------------------------------- schedule

void cmd_schedule(const ScheduleFlags& f, const std::string& scheduleOut,
                  const std::string& reportOut, std::ostream& out) {
  const auto net = load_shared(f.network);
  std::ofstream traceFile;
  if (!f.trace.empty()) {
    traceFile.open(f.trace);
    if (!traceFile) invalid("cannot write " + f.trace);
  }
  const RunOutcome run =
      run_schedule(net, f, f.rho, f.lambda, f.trace.empty() ? nullptr : &traceFile);
  csv::save_matrix(scheduleOut, run.result.Z.Z());
  json doc = report_to_json(run.result.perInstant);
  doc["T"] = f.T;
  doc["rho"] = number(f.rho);
  doc["lambda"] = number(f.lambda);
  doc["mode"] = f.mode;
  doc["outer_iterations"] = run.result.outerIterations;
  doc["rounding_events"] = run.result.roundingEvents;
  doc["repair_events"] = run.result.repairEvents;
  Sink sink(reportOut, out);
  *sink << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------- sweeps

void cmd_sweep_lambda(const ScheduleFlags& f, const std::string& grid,
                      const std::string& outPath, int jobs, std::ostream& out) {
  const auto net = load_shared(f.network);
  const std::vector<double> lambdas = parse_grid(grid, "lambda");
  std::vector<std::vector<std::string>> rows(lambdas.size());
  parallel_for(lambdas.size(), jobs, [&](std::size_t i) {
    const RunOutcome run = run_schedule(net, f, f.rho, lambdas[i], nullptr);
    const PerformanceReport& r = run.result.perInstant;
    rows[i] = {csv::format(lambdas[i]), csv::format(r.maxActivations),
               csv::format(r.totalActivations), csv::format(r.worstMse()),
               csv::format(r.totalEnergy.sum()), r.feasible ? "1" : "0"};
  });
  Sink sink(outPath, out);
  csv::write_row(*sink, {"lambda", "maxUtilization", "totalUtilization", "worstMse",
                         "totalEnergy", "feasible"});
  for (const auto& row : rows) csv::write_row(*sink, row);
}

void cmd_sweep_rho(const ScheduleFlags& f, const std::string& grid,
                   const std::string& outPath, int jobs, std::ostream& out) {
  const auto net = load_shared(f.network);
  const std::vector<double> rhos = parse_grid(grid, "rho");
  std::vector<std::vector<std::string>> rows(rhos.size());
  parallel_for(rhos.size(), jobs, [&](std::size_t i) {
    const RunOutcome run = run_schedule(net, f, rhos[i], f.lambda, nullptr);
    const PerformanceReport& r = run.result.perInstant;
    const Vector used = energy_use(*net, run.result.Z.Z(), f.comms);
    rows[i] = {csv::format(rhos[i]),
               csv::format(r.worstMse()),
               csv::format(r.worstMse() / run.accuracy.gamma0),
               csv::format(used.sum()),
               csv::format(r.sensingEnergy.sum()),
               csv::format(r.totalActivations),
               r.feasible ? "1" : "0"};
  });
  Sink sink(outPath, out);
  csv::write_row(*sink, {"rho", "worstMse", "worstMseRelative", "energy",
                         "sensingEnergy", "totalUtilization", "feasible"});
  for (const auto& row : rows) csv::write_row(*sink, row);
}

// ---------------------------------------------------------------- analysis

struct ExpectedFlags {
  int m = 100;
  int n = 20;
  std::optional<double> alpha;
  std::optional<int> kmin;
  std::optional<int> kmax;
  int kstep = 1;
  long mc = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void cmd_analyze_expected(const ExpectedFlags& f, int jobs, std::ostream& out) {
  const double alpha = f.alpha.value_or(f.m);
  const int kmin = f.kmin.value_or(f.n);
  const int kmax = f.kmax.value_or(f.m);
  if (f.kstep < 1 || kmin > kmax) invalid("need kmin <= kmax and kstep >= 1");
  if (f.mc > 0 && !f.seed) invalid("Monte Carlo runs need --seed");
  Matrix A;
  if (f.mc > 0) A = gen_tight(f.m, f.n, alpha, *f.seed);
  Sink sink(f.out, out);
  csv::write_row(*sink, {"k", "expMse", "mcMeanMse", "mcStdMse", "expVce", "ksLowerBound"});
  for (int k = kmin; k <= kmax; k += f.kstep) {
    const ExpectedPerf e = expected_perf(f.m, f.n, alpha, k);
    std::string mcMean, mcStd;
    if (f.mc > 0) {
      const MonteCarloMse mc = monte_carlo_mse(A, k, f.mc, *f.seed, jobs);
      mcMean = csv::format(mc.mean);
      mcStd = csv::format(mc.stddev);
    }
    csv::write_row(*sink, {std::to_string(k), csv::format(e.expMse), mcMean, mcStd,
                           csv::format(e.expVce),
                           csv::format(ks_mse_lower_bound(f.m, f.n, k) / alpha)});
  }
}

void cmd_oracle(const std::string& networkPath, double rho, const std::string& crit,
                std::ostream& out) {
  const SensorNetwork net = load_network(networkPath);
  const AccuracySpec accuracy = AccuracySpec::make(net, parse_criterion(crit), rho);
  const SelectionResult r = exhaustive_min_sensors(net, accuracy);
  const Matrix gram = select_rows(net.A(), r.indices).transpose() *
                      select_rows(net.A(), r.indices);
  json doc{{"k", r.indices.size()},
           {"indices", r.indices},
           {"criterion", criterion_name(accuracy.criterion)},
           {"value", number(criterion_of_gram(gram, accuracy.criterion))},
           {"threshold", number(accuracy.threshold())},
           {"best_per_size", json::array()}};
  for (double v : r.trajectory) doc["best_per_size"].push_back(number(v));
  out << doc.dump(2) << '\n';
}

int cmd_verify(const std::string& networkPath, const std::string& schedulePath,
               double rho, const std::string& crit, const std::vector<int>& exclude,
               const std::string& outPath, std::ostream& out) {
  const SensorNetwork net = load_network(networkPath);
  const AccuracySpec accuracy = AccuracySpec::make(net, parse_criterion(crit), rho);
  const PerformanceReport report =
      verify_schedule(net, csv::load_matrix(schedulePath), accuracy, exclude);
  Sink sink(outPath, out);
  *sink << report_to_json(report).dump(2) << '\n';
  return report.feasible ? kExitOk : kExitInfeasible;
}

struct CurveFlags {
  int m = 100;
  int n = 20;
  std::optional<double> alpha;
  bool gaussian = false;
  std::optional<int> kmin;
  std::optional<int> kmax;
  int kstep = 10;
  std::string methods = "greedy,random";
  int trials = 20;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_mse_curve(const CurveFlags& f, int jobs, std::ostream& out) {
  const int kmin = f.kmin.value_or(f.n);
  const int kmax = f.kmax.value_or(f.m);
  if (kmin < 1 || kmax > f.m || kmin > kmax || f.kstep < 1 || f.trials < 1) {
    invalid("need 1 <= kmin <= kmax <= m, kstep >= 1 and trials >= 1");
  }
  const std::vector<std::string> methods = parse_names(f.methods);
  for (const auto& name : methods) {
    if (name != "greedy" && name != "fp" && name != "random") {
      invalid("mse-curve supports greedy, fp and random, not " + name);
    }
  }
  std::vector<int> ks;
  for (int k = kmin; k <= kmax; k += f.kstep) ks.push_back(k);

  // values[trial][method][k index]
  std::vector<std::vector<std::vector<double>>> values(
      static_cast<std::size_t>(f.trials),
      std::vector<std::vector<double>>(methods.size(), std::vector<double>(ks.size())));
  parallel_for(static_cast<std::size_t>(f.trials), jobs, [&](std::size_t trial) {
    auto rng = stream_rng(f.seed, trial);
    const std::uint64_t instanceSeed = rng();
    const std::uint64_t randomSeed = rng();
    const Matrix A = f.gaussian ? gen_gaussian(f.m, f.n, std::nullopt, instanceSeed)
                                : gen_tight(f.m, f.n, f.alpha.value_or(f.m), instanceSeed);
    const SensorNetwork net(A);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      auto& row = values[trial][mi];
      if (methods[mi] == "greedy") {
        const SelectionResult g = greedy_add_mse(net, kmax < net.n() ? net.n() : kmax);
        for (std::size_t j = 0; j < ks.size(); ++j) {
          row[j] = ks[j] < net.n() ? kInf : g.trajectory[static_cast<std::size_t>(ks[j] - 1)];
        }
      } else if (methods[mi] == "fp") {
        for (std::size_t j = 0; j < ks.size(); ++j) {
          row[j] = ks[j] < net.n()
                       ? kInf
                       : safe_mse(select_rows(A, fp_remove(net, ks[j]).indices));
        }
      } else {
        for (std::size_t j = 0; j < ks.size(); ++j) {
          row[j] = random_select(net, ks[j], randomSeed + static_cast<std::uint64_t>(ks[j]))
                       .trajectory.front();
        }
      }
    }
  });

  Sink sink(f.out, out);
  csv::write_row(*sink, {"k", "method", "meanMse", "stdMse", "trials"});
  for (std::size_t j = 0; j < ks.size(); ++j) {
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      double sum = 0.0;
      for (int t = 0; t < f.trials; ++t) sum += values[static_cast<std::size_t>(t)][mi][j];
      const double mean = sum / f.trials;
      double sq = 0.0;
      if (std::isfinite(mean)) {
        for (int t = 0; t < f.trials; ++t) {
          const double d = values[static_cast<std::size_t>(t)][mi][j] - mean;
          sq += d * d;
        }
      }
      const double sd = !std::isfinite(mean) ? kInf
                        : f.trials > 1       ? std::sqrt(sq / (f.trials - 1))
                                             : 0.0;
      csv::write_row(*sink, {std::to_string(ks[j]), methods[mi], csv::format(mean),
                             csv::format(sd), std::to_string(f.trials)});
    }
  }
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Infeasible:
      return kExitInfeasible;
    case ErrorKind::Validation:
    case ErrorKind::DomainError:
    case ErrorKind::TooLarge:
      return kExitValidation;
    case ErrorKind::RankDeficient:
    case ErrorKind::MaxIterExceeded:
    case ErrorKind::MaxOuterIterExceeded:
      return kExitNumeric;
  }
  return kExitNumeric;
}

json number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

json report_to_json(const PerformanceReport& report) {
  json instants = json::array();
  for (const auto& r : report.instants) {
    instants.push_back({{"active", r.active},
                        {"mse", number(r.mse)},
                        {"wce", number(r.wce)},
                        {"vce", number(r.vce)},
                        {"mse_lower_bound", number(r.mseLowerBound)},
                        {"meets_accuracy", r.meetsAccuracy}});
  }
  return {{"criterion", criterion_name(report.criterion)},
          {"gamma0", number(report.gamma0)},
          {"threshold", number(report.threshold)},
          {"feasible", report.feasible},
          {"instants", instants},
          {"activations", vector_json(report.activations)},
          {"total_activations", number(report.totalActivations)},
          {"max_activations", number(report.maxActivations)},
          {"worst_mse", number(report.worstMse())},
          {"sensing_energy", vector_json(report.sensingEnergy)},
          {"total_energy", vector_json(report.totalEnergy)},
          {"excess", vector_json(report.excess)},
          {"violations", report.violations}};
}

json selection_to_json(const SelectionResult& result, const Matrix& A) {
  json trajectory = json::array();
  for (double v : result.trajectory) trajectory.push_back(number(v));
  return {{"method", std::string(to_string(result.method))},
          {"k", result.indices.size()},
          {"indices", result.indices},
          {"mse", number(safe_mse(select_rows(A, result.indices)))},
          {"trajectory", trajectory}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sensor selection and scheduling toolkit", "sensorsched"};
  app.require_subcommand(1);
  app.fallthrough();  // --jobs may follow the subcommand
  int jobsFlag = 0;
  app.add_option("--jobs", jobsFlag, "Worker threads (SENSORSCHED_JOBS overrides)");

  GenFlags gen;
  auto* genCmd = app.add_subcommand("gen", "Generate a network file");
  genCmd->add_flag("--tight", gen.tight, "Random alpha-tight frame");
  genCmd->add_flag("--gaussian", gen.gaussian, "i.i.d. Gaussian rows");
  genCmd->add_option("--m", gen.m, "Sensors")->check(CLI::PositiveNumber);
  genCmd->add_option("--n", gen.n, "Unknowns")->check(CLI::PositiveNumber);
  genCmd->add_option("--alpha", gen.alpha, "Tightness constant (default m)");
  genCmd->add_option("--scale", gen.scale, "Gaussian entry scale (default sqrt(m))");
  genCmd->add_option("--seed", gen.seed, "Random seed")->required();
  genCmd->add_option("--topology", gen.topology, "none, star or tree");
  genCmd->add_option("--fanout", gen.fanout, "Tree fan-out");
  genCmd->add_option("--max-depth", gen.maxDepth, "Tree depth limit");
  genCmd->add_option("--comm-fraction", gen.commFraction, "Relay cost per unit sensing cost");
  genCmd->add_option("--e0", gen.e0, "Per-sensor energy budget");
  genCmd->add_option("--out", gen.out, "Output network JSON")->required();

  std::string metricsNetwork, metricsSchedule, metricsOut;
  auto* metricsCmd = app.add_subcommand("metrics", "Performance metrics of a network");
  metricsCmd->add_option("--network", metricsNetwork, "Network JSON file")->required();
  metricsCmd->add_option("--schedule", metricsSchedule, "Schedule CSV for per-instant metrics");
  metricsCmd->add_option("--out", metricsOut, "Output JSON (default stdout)");

  PlaceFlags place;
  auto* placeCmd = app.add_subcommand("place", "Single-instant sensor selection");
  placeCmd->add_option("--network", place.network, "Network JSON file")->required();
  placeCmd->add_option("--method", place.method, "greedy, fp, random, exhaustive or irl1");
  placeCmd->add_option("--k", place.k, "Number of sensors");
  placeCmd->add_option("--rho", place.rho, "MSE target as a multiple of gamma0");
  placeCmd->add_option("--seed", place.seed, "Seed for random selection");
  placeCmd->add_option("--out", place.out, "Selection JSON (default stdout)");
  placeCmd->add_option("--trajectory", place.trajectory, "Trajectory CSV");

  ScheduleFlags sched;
  std::string scheduleOut, reportOut;
  auto* schedCmd = app.add_subcommand("schedule", "Schedule sensors over T instants");
  sched.attach(schedCmd, true);
  schedCmd->add_option("--rho", sched.rho, "Accuracy target as a multiple of gamma0");
  schedCmd->add_option("--schedule-out", scheduleOut, "Schedule CSV")->required();
  schedCmd->add_option("--report-out", reportOut, "Report JSON (default stdout)");

  ScheduleFlags sweepL;
  std::string lambdaGrid = "0.1,1,10,100,1000", sweepLOut;
  auto* sweepLCmd = app.add_subcommand("sweep-lambda", "Utilisation versus lambda");
  sweepL.attach(sweepLCmd, false);
  sweepLCmd->add_option("--rho", sweepL.rho, "Accuracy target as a multiple of gamma0");
  sweepLCmd->add_option("--lambdas", lambdaGrid, "Ascending comma-separated grid");
  sweepLCmd->add_option("--out", sweepLOut, "Output CSV (default stdout)");

  ScheduleFlags sweepR;
  sweepR.mode = "explicit";
  sweepR.lambda = 1e3;
  std::string rhoGrid = "1.5,2,3,5,10", sweepROut;
  auto* sweepRCmd = app.add_subcommand("sweep-rho", "Energy versus accuracy Pareto points");
  sweepR.attach(sweepRCmd, true);
  sweepRCmd->add_option("--rhos", rhoGrid, "Ascending comma-separated grid");
  sweepRCmd->add_option("--out", sweepROut, "Output CSV (default stdout)");

  ExpectedFlags expected;
  auto* expCmd = app.add_subcommand("analyze-expected",
                                    "Expected performance of random subsets of a tight frame");
  expCmd->add_option("--m", expected.m, "Sensors");
  expCmd->add_option("--n", expected.n, "Unknowns");
  expCmd->add_option("--alpha", expected.alpha, "Tightness constant (default m)");
  expCmd->add_option("--kmin", expected.kmin, "Smallest subset size (default n)");
  expCmd->add_option("--kmax", expected.kmax, "Largest subset size (default m)");
  expCmd->add_option("--kstep", expected.kstep, "Subset size step");
  expCmd->add_option("--mc", expected.mc, "Monte Carlo samples per k");
  expCmd->add_option("--seed", expected.seed, "Seed for the frame and the samples");
  expCmd->add_option("--out", expected.out, "Output CSV (default stdout)");

  std::string oracleNetwork, oracleCriterion = "mse";
  double oracleRho = 2.0;
  auto* oracleCmd = app.add_subcommand("oracle", "Exhaustive minimum sensor set");
  oracleCmd->add_option("--network", oracleNetwork, "Network JSON file")->required();
  oracleCmd->add_option("--rho", oracleRho, "Accuracy target as a multiple of gamma0");
  oracleCmd->add_option("--criterion", oracleCriterion, "mse or vce");

  std::string verifyNetwork, verifySchedule, verifyCriterion = "mse", verifyOut;
  double verifyRho = 3.0;
  std::vector<int> verifyExclude;
  auto* verifyCmd = app.add_subcommand("verify", "Audit a schedule");
  verifyCmd->add_option("--network", verifyNetwork, "Network JSON file")->required();
  verifyCmd->add_option("--schedule", verifySchedule, "Schedule CSV")->required();
  verifyCmd->add_option("--rho", verifyRho, "Accuracy target as a multiple of gamma0");
  verifyCmd->add_option("--criterion", verifyCriterion, "mse or vce");
  verifyCmd->add_option("--exclude", verifyExclude, "Sensors exempt from coverage")
      ->delimiter(',');
  verifyCmd->add_option("--out", verifyOut, "Report JSON (default stdout)");

  CurveFlags curve;
  auto* curveCmd = app.add_subcommand("mse-curve", "MSE versus number of selected sensors");
  curveCmd->add_option("--m", curve.m, "Sensors");
  curveCmd->add_option("--n", curve.n, "Unknowns");
  curveCmd->add_option("--alpha", curve.alpha, "Tightness constant (default m)");
  curveCmd->add_flag("--gaussian", curve.gaussian, "Gaussian instead of tight instances");
  curveCmd->add_option("--kmin", curve.kmin, "Smallest k (default n)");
  curveCmd->add_option("--kmax", curve.kmax, "Largest k (default m)");
  curveCmd->add_option("--kstep", curve.kstep, "k step");
  curveCmd->add_option("--methods", curve.methods, "Comma-separated: greedy, fp, random");
  curveCmd->add_option("--trials", curve.trials, "Random instances per point");
  curveCmd->add_option("--seed", curve.seed, "Random seed")->required();
  curveCmd->add_option("--out", curve.out, "Output CSV (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    const int jobs = resolve_jobs(jobsFlag);
    if (*genCmd) {
      cmd_gen(gen);
    } else if (*metricsCmd) {
      Sink sink(metricsOut, out);
      cmd_metrics(metricsNetwork, metricsSchedule, *sink);
    } else if (*placeCmd) {
      cmd_place(place, out);
    } else if (*schedCmd) {
      cmd_schedule(sched, scheduleOut, reportOut, out);
    } else if (*sweepLCmd) {
      cmd_sweep_lambda(sweepL, lambdaGrid, sweepLOut, jobs, out);
    } else if (*sweepRCmd) {
      cmd_sweep_rho(sweepR, rhoGrid, sweepROut, jobs, out);
    } else if (*expCmd) {
      cmd_analyze_expected(expected, jobs, out);
    } else if (*oracleCmd) {
      cmd_oracle(oracleNetwork, oracleRho, oracleCriterion, out);
    } else if (*verifyCmd) {
      return cmd_verify(verifyNetwork, verifySchedule, verifyRho, verifyCriterion,
                        verifyExclude, verifyOut, out);
    } else if (*curveCmd) {
      cmd_mse_curve(curve, jobs, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace sensorsched::cli
