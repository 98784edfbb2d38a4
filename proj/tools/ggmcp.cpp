// Command-line front-end: simulate / detect / segment / benchmark.
// Exit codes: 0 ok, 2 flag error, 3 data error, 4 solver divergence.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ggmcp/datagen.hpp"
#include "ggmcp/errors.hpp"
#include "ggmcp/ingest.hpp"
#include "ggmcp/objective.hpp"
#include "ggmcp/segmentation.hpp"
#include "ggmcp/solvers.hpp"

namespace {

using nlohmann::json;
using namespace ggmcp;

constexpr const char* kSchemaVersion = "1";

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double lap() {
    const auto t1 = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(t1 - t0).count();
    t0 = t1;
    return s;
  }
};

struct FlagError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json edges_json(const SymMatrix& th, double eps) {
  json arr = json::array();
  for (int i = 0; i < th.dim(); ++i) {
    for (int j = i; j < th.dim(); ++j) {
      const double v = th(i, j);
      if (std::abs(v) > eps) arr.push_back({i, j, v});
    }
  }
  return arr;
}

void write_edges_csv(const std::string& path, const SymMatrix& th, double eps) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << "i,j,value\n";
  char buf[40];
  for (int i = 0; i < th.dim(); ++i) {
    for (int j = i; j < th.dim(); ++j) {
      const double v = th(i, j);
      if (std::abs(v) > eps) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << i << ',' << j << ',' << buf << '\n';
      }
    }
  }
}

void write_trace_csv(const std::string& path, const std::vector<int>& taus,
                     const std::vector<double>& objectives,
                     const std::vector<double>& betas) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << (betas.empty() ? "k,tau,objective" : "k,tau,objective,beta") << '\n';
  char buf[40];
  for (size_t k = 0; k < taus.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", objectives[k]);
    out << (k + 1) << ',' << taus[k] << ',' << buf;
    if (!betas.empty()) {
      std::snprintf(buf, sizeof buf, "%.17g", betas[k]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- options

struct ModelOpts {
  double lambda = 0.13;
  double gamma = 0.25;
  double alpha = 0.5;
  double n0_frac = 0.05;
  std::string schedule = "experimental";
  double kappa_bar = 0.0;
  std::string frob = "full";
  bool unweighted_grad = false;
  bool no_diag_penalty = false;
  double epsilon = -1.0;  // <0: automatic rule
  double edge_eps = 1e-4;
  std::string preset;

  CLI::Option* lambda_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* epsilon_opt = nullptr;

  void add_to(CLI::App* cmd) {
    lambda_opt = cmd->add_option("--lambda", lambda,
                                 "base penalty level (default 0.13)");
    gamma_opt =
        cmd->add_option("--gamma", gamma, "prox step size (default 0.25)");
    cmd->add_option("--alpha", alpha, "elastic-net mix in [0,1) (default 0.5)");
    cmd->add_option("--n0-frac", n0_frac,
                    "search-window margin fraction (default 0.05)");
    cmd->add_option("--schedule", schedule, "lambda schedule")
        ->check(CLI::IsMember({"experimental", "theory"}));
    cmd->add_option("--kappa-bar", kappa_bar,
                    "curvature constant for --schedule theory");
    cmd->add_option("--frob", frob, "Frobenius counting convention")
        ->check(CLI::IsMember({"full", "upper"}));
    cmd->add_flag("--unweighted-grad", unweighted_grad,
                  "drop the tau/2T factor from the loss gradient");
    cmd->add_flag("--no-diag-penalty", no_diag_penalty,
                  "exempt the diagonal from the l1 part");
    epsilon_opt = cmd->add_option(
        "--epsilon", epsilon, "ridge added to scatter at initialization");
    cmd->add_option("--edge-eps", edge_eps,
                    "edge-list magnitude threshold (default 1e-4)");
    cmd->add_option("--preset", preset, "tuning preset")
        ->check(CLI::IsMember({"t1000", "t500", "real"}));
  }

  // Preset values apply only where the user did not pass the flag.
  void apply_preset_detect() {
    if (preset.empty()) return;
    if (!lambda_opt->count()) {
      lambda = (preset == "t1000") ? 0.1 : (preset == "t500") ? 0.01 : 0.002;
    }
    if (!gamma_opt->count()) {
      gamma = (preset == "real") ? 0.5 : 3.5;
    }
    if (preset == "real" && !epsilon_opt->count()) epsilon = 1e-4;
  }

  PenaltyConfig penalty_config() const {
    PenaltyConfig cfg;
    cfg.alpha = alpha;
    cfg.lambda_base = lambda;
    cfg.schedule = (schedule == "theory") ? LambdaSchedule::Theory
                                          : LambdaSchedule::Experimental;
    if (kappa_bar > 0.0) cfg.theory_kappa_bar = kappa_bar;
    cfg.frob = (frob == "upper") ? FrobConvention::UpperTriangle
                                 : FrobConvention::FullMatrix;
    cfg.grad = unweighted_grad ? GradientScaling::Unweighted
                               : GradientScaling::WeightedTau;
    cfg.penalize_diagonal = !no_diag_penalty;
    cfg.validate();
    return cfg;
  }

  std::optional<double> epsilon_opt_value() const {
    if (epsilon < 0.0) return std::nullopt;
    return epsilon;
  }

  json echo() const {
    return {{"lambda", lambda},
            {"gamma", gamma},
            {"alpha", alpha},
            {"n0_frac", n0_frac},
            {"schedule", schedule},
            {"kappa_bar", kappa_bar},
            {"frob", frob},
            {"unweighted_grad", unweighted_grad},
            {"no_diag_penalty", no_diag_penalty},
            {"epsilon", epsilon},
            {"edge_eps", edge_eps},
            {"preset", preset}};
  }
};

struct StopOpts {
  std::string stop = "practical";
  int max_iter = 500;
  double tau_tol = 0.005;
  double theta_tol = 0.05;
  double practical_tol = 1e-5;
  int practical_window = 25;
  int true_tau = 0;
  int reference_iters = 1000;

  CLI::Option* true_tau_opt = nullptr;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--stop", stop, "stopping rule")
        ->check(CLI::IsMember({"v1", "v2", "practical"}));
    cmd->add_option("--max-iter", max_iter, "iteration cap (default 500)");
    cmd->add_option("--tau-tol", tau_tol,
                    "v1/v2 tolerance on |tau - true|/T (default 0.005)");
    cmd->add_option("--theta-tol", theta_tol,
                    "v1 tolerance on summed relative theta error");
    cmd->add_option("--practical-tol", practical_tol,
                    "relative-change tolerance (default 1e-5)");
    cmd->add_option("--practical-window", practical_window,
                    "consecutive quiet iterations required (default 25)");
    true_tau_opt =
        cmd->add_option("--true-tau", true_tau, "ground truth for v1/v2");
    cmd->add_option("--reference", reference_iters,
                    "prox steps for the v1 reference fit (default 1000)");
  }

  // Rule without the v1 reference pair; the caller fills it after loading.
  StoppingRule rule() const {
    StoppingRule r;
    r.kind = (stop == "v1")   ? StopKind::V1
             : (stop == "v2") ? StopKind::V2
                              : StopKind::Practical;
    r.max_iter = max_iter;
    r.tau_tol = tau_tol;
    r.theta_tol = theta_tol;
    r.practical_tol = practical_tol;
    r.practical_window = practical_window;
    if (true_tau_opt->count()) r.true_tau = true_tau;
    return r;
  }

  void validate(int T) const {
    if (stop != "practical") {
      if (!true_tau_opt->count()) {
        throw FlagError("--stop " + stop + " requires --true-tau");
      }
      if (true_tau < 1 || true_tau >= T) {
        throw FlagError("--true-tau must lie in [1, T-1]");
      }
    }
    if (max_iter < 1) throw FlagError("--max-iter must be positive");
  }

  json echo() const {
    return {{"stop", stop},
            {"max_iter", max_iter},
            {"tau_tol", tau_tol},
            {"theta_tol", theta_tol},
            {"practical_tol", practical_tol},
            {"practical_window", practical_window},
            {"true_tau", true_tau_opt && true_tau_opt->count()
                             ? json(true_tau)
                             : json(nullptr)},
            {"reference_iters", reference_iters}};
  }
};

struct SaOpts {
  std::string kernel = "uniform";
  double sigma = 0.0;  // 0: max(2, 0.02 T)
  double mix_weight = 0.5;
  double beta0 = 1.0;
  double beta_final = 1e-3;
  int anneal_iters = 1000;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--kernel", kernel, "annealing proposal kernel")
        ->check(CLI::IsMember({"uniform", "rw", "mix"}));
    cmd->add_option("--sigma", sigma,
                    "random-walk scale (0 = max(2, 0.02 T))");
    cmd->add_option("--mix-weight", mix_weight,
                    "independence weight of the mixture kernel");
    cmd->add_option("--beta0", beta0, "initial temperature (default 1)");
    cmd->add_option("--beta-final", beta_final,
                    "final temperature (default 1e-3)");
    cmd->add_option("--anneal-iters", anneal_iters,
                    "cooling-schedule length (default 1000)");
  }

  KernelSpec kernel_spec(int T) const {
    KernelSpec k = KernelSpec::defaults(
        T, kernel == "rw"    ? KernelKind::RandomWalkTruncGauss
           : kernel == "mix" ? KernelKind::Mixture
                             : KernelKind::IndependenceUniform);
    if (sigma > 0.0) k.sigma = sigma;
    k.mix_weight = mix_weight;
    return k;
  }

  CoolingSchedule cooling() const {
    if (anneal_iters < 1) throw FlagError("--anneal-iters must be positive");
    if (beta0 <= 0.0 || beta_final <= 0.0 || beta_final > beta0) {
      throw FlagError("temperatures must satisfy 0 < beta-final <= beta0");
    }
    return CoolingSchedule{beta0, beta_final, anneal_iters};
  }

  json echo() const {
    return {{"kernel", kernel},       {"sigma", sigma},
            {"mix_weight", mix_weight}, {"beta0", beta0},
            {"beta_final", beta_final}, {"anneal_iters", anneal_iters}};
  }
};

struct InputOpts {
  std::string input;
  bool has_header = false;
  bool clean = false;
  double clip = 3.0;
  bool drop_clipped = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--input", input, "data CSV")->required();
    cmd->add_flag("--has-header", has_header, "skip one header row");
    cmd->add_flag("--clean", clean,
                  "treat input as price levels: log returns, standardize, "
                  "clip at +-3 sd");
    cmd->add_option("--clip", clip, "clipping threshold for --clean");
    cmd->add_flag("--drop-clipped", drop_clipped,
                  "drop rows past the threshold instead of clipping");
  }

  Dataset load(int* dropped) const {
    RawTable t = load_csv(input, has_header);
    *dropped = t.dropped_rows;
    if (!clean) return Dataset(std::move(t.values));
    CleanOptions opts;
    opts.clip = clip;
    opts.drop_rows = drop_clipped;
    return clean_returns(t, opts);
  }

  json echo() const {
    return {{"input", input},
            {"has_header", has_header},
            {"clean", clean},
            {"clip", clip},
            {"drop_clipped", drop_clipped}};
  }
};

// v1 reference pair: iters prox steps from the standard blocks at true tau.
std::pair<SpdMatrix, SpdMatrix> reference_pair(const Dataset& d,
                                               const PenaltyConfig& cfg,
                                               int true_tau, double gamma,
                                               int iters,
                                               std::optional<double> eps) {
  SolverState s;
  try {
    s = initialize_at(d, cfg, true_tau, eps);
  } catch (const NotPositiveDefinite&) {
    s = initialize_at(d, cfg, true_tau, 0.2);
  }
  return refine_at(d, cfg, true_tau, s.theta1, s.theta2, gamma, iters);
}

SolverState robust_initialize(const Dataset& d, const PenaltyConfig& cfg,
                              const SearchWindow& window, uint64_t seed,
                              std::optional<double> eps) {
  try {
    return initialize(d, cfg, window, seed, eps);
  } catch (const NotPositiveDefinite&) {
    if (eps.has_value()) throw;
    return initialize(d, cfg, window, seed, 0.2);
  }
}

// --------------------------------------------------------------- simulate

struct SimulateOpts {
  int p = 10;
  int t = 200;
  std::vector<double> tau_fracs;
  double density = 0.25;
  std::vector<double> similar;  // q_pct, p_pct
  uint64_t seed = 0;
  std::string out = "data.csv";
  std::string truth_out;
  double edge_eps = 1e-4;
};

int run_simulate(const SimulateOpts& o) {
  if (o.p < 1 || o.t < 2) throw FlagError("need --p >= 1 and --t >= 2");
  std::vector<int> taus;
  for (double f : o.tau_fracs) {
    if (f <= 0.0 || f >= 1.0) throw FlagError("--tau-frac must be in (0,1)");
    taus.push_back(static_cast<int>(std::llround(f * o.t)));
  }
  for (size_t i = 0; i + 1 < taus.size(); ++i) {
    if (taus[i] >= taus[i + 1]) {
      throw FlagError("--tau-frac values must be strictly increasing");
    }
  }
  if (!taus.empty() && (taus.front() < 1 || taus.back() > o.t - 1)) {
    throw FlagError("--tau-frac rounds outside (0, T)");
  }

  std::vector<SpdMatrix> thetas;
  if (!o.similar.empty()) {
    if (o.similar.size() != 2) {
      throw FlagError("--similar needs two values: q_pct,p_pct");
    }
    if (taus.size() != 1) {
      throw FlagError("--similar requires exactly one --tau-frac");
    }
    auto [th1, th2] = similar_pair(o.p, o.similar[0], o.similar[1], o.seed);
    thetas.push_back(std::move(th1));
    thetas.push_back(std::move(th2));
  } else {
    for (size_t j = 0; j <= taus.size(); ++j) {
      GeneratorSpec spec;
      spec.p = o.p;
      spec.density = o.density;
      spec.seed = Rng::mix(o.seed, static_cast<uint64_t>(j + 1));
      thetas.push_back(random_precision(spec));
    }
  }
  Dataset d = sample_series(thetas, taus, o.t,
                            Rng::mix(o.seed, 0xda7aull));
  write_csv(o.out, d.rows());

  json truth = {{"schema_version", kSchemaVersion},
                {"command", "simulate"},
                {"seed", o.seed},
                {"p", o.p},
                {"T", o.t},
                {"density", o.density},
                {"similar", o.similar},
                {"taus", taus},
                {"data", o.out}};
  json edge_blocks = json::array();
  for (const SpdMatrix& th : thetas) {
    edge_blocks.push_back(edges_json(th.sym(), o.edge_eps));
  }
  truth["theta_edges"] = std::move(edge_blocks);
  const std::string tpath =
      o.truth_out.empty() ? o.out + ".truth.json" : o.truth_out;
  write_json(tpath, truth);
  std::cout << "wrote " << o.out << " and " << tpath << "\n";
  return 0;
}

// ----------------------------------------------------------------- detect

struct DetectOpts {
  InputOpts in;
  ModelOpts model;
  StopOpts stopping;
  SaOpts sa;
  std::string algorithm = "approx-mm";
  int max_outer = 50;
  double glasso_tol = 1e-7;
  int glasso_iter = 500;
  uint64_t seed = 0;
  std::string out = "report.json";
  std::string trace_out;
  std::string edges_out;
};

int run_detect(const DetectOpts& o) {
  Timer total, phase;
  int dropped = 0;
  const Dataset d = o.in.load(&dropped);
  const double t_load = phase.lap();

  const PenaltyConfig cfg = o.model.penalty_config();
  o.stopping.validate(d.T());
  const SearchWindow window = SearchWindow::from_frac(o.model.n0_frac, d.T());
  StoppingRule rule = o.stopping.rule();
  if (rule.kind == StopKind::V1) {
    rule.reference_thetas = reference_pair(d, cfg, *rule.true_tau,
                                           o.model.gamma,
                                           o.stopping.reference_iters,
                                           o.model.epsilon_opt_value());
  }
  if (rule.kind != StopKind::Practical && !window.contains(*rule.true_tau)) {
    throw FlagError("--true-tau falls outside the search window");
  }

  SolverState state0 = robust_initialize(d, cfg, window, o.seed,
                                         o.model.epsilon_opt_value());
  const double t_setup = phase.lap();

  int tau_hat = 0;
  int iterations = 0;
  std::string stop_reason;
  double gamma_used = o.model.gamma;
  int restarts = 0;
  std::vector<int> tau_trace;
  std::vector<double> objective_trace, beta_trace;
  SymMatrix th1, th2;

  GlassoSettings inner;
  inner.gamma = o.model.gamma;
  inner.tol = o.glasso_tol;
  inner.max_iter = o.glasso_iter;

  if (o.algorithm == "brute") {
    BruteForceResult r = brute_force(d, cfg, window, inner, state0);
    tau_hat = r.tau_hat;
    iterations = window.size();
    stop_reason = "scan";
    for (int t = window.lo; t <= window.hi; ++t) tau_trace.push_back(t);
    objective_trace = r.G_profile;
    th1 = r.theta1.sym();
    th2 = r.theta2.sym();
  } else if (o.algorithm == "mm") {
    SolverState s = mm_exact(d, cfg, window, std::move(state0), inner,
                             o.max_outer);
    tau_hat = s.tau;
    iterations = s.k;
    stop_reason = s.stop_reason;
    tau_trace = std::move(s.tau_trace);
    objective_trace = std::move(s.objective_trace);
    th1 = s.theta1.sym();
    th2 = s.theta2.sym();
  } else if (o.algorithm == "approx-mm") {
    SolverState s = mm_approx(d, cfg, window, std::move(state0),
                              o.model.gamma, rule);
    tau_hat = s.tau;
    iterations = s.k;
    stop_reason = s.stop_reason;
    gamma_used = s.gamma_used;
    restarts = s.restarts;
    tau_trace = std::move(s.tau_trace);
    objective_trace = std::move(s.objective_trace);
    th1 = s.theta1.sym();
    th2 = s.theta2.sym();
  } else {  // sa
    const StoppingRule* rp =
        (rule.kind == StopKind::Practical) ? nullptr : &rule;
    SolverState s = sa_solve(d, cfg, window, std::move(state0), o.model.gamma,
                             o.sa.kernel_spec(d.T()), o.sa.cooling(), rp);
    tau_hat = s.tau;
    iterations = s.k;
    stop_reason = s.stop_reason;
    gamma_used = s.gamma_used;
    restarts = s.restarts;
    tau_trace = std::move(s.tau_trace);
    objective_trace = std::move(s.objective_trace);
    beta_trace = std::move(s.beta_trace);
    th1 = s.theta1.sym();
    th2 = s.theta2.sym();
  }
  const double t_solve = phase.lap();

  json report = {
      {"schema_version", kSchemaVersion},
      {"command", "detect"},
      {"seed", o.seed},
      {"args",
       {{"algorithm", o.algorithm},
        {"model", o.model.echo()},
        {"stopping", o.stopping.echo()},
        {"annealing", o.sa.echo()},
        {"input", o.in.echo()},
        {"max_outer", o.max_outer},
        {"glasso_tol", o.glasso_tol},
        {"glasso_iter", o.glasso_iter}}},
      {"data", {{"T", d.T()}, {"p", d.p()}, {"dropped_rows", dropped}}},
      {"window", {{"n0", window.n0}, {"lo", window.lo}, {"hi", window.hi}}},
      {"tau_hat", tau_hat},
      {"stop_reason", stop_reason},
      {"iterations", iterations},
      {"gamma_used", gamma_used},
      {"restarts", restarts},
      {"edges",
       {{"theta1", edges_json(th1, o.model.edge_eps)},
        {"theta2", edges_json(th2, o.model.edge_eps)}}},
      {"traces",
       {{"tau", tau_trace},
        {"objective", objective_trace},
        {"beta", beta_trace}}},
      {"wall_time_s",
       {{"load", t_load},
        {"setup", t_setup},
        {"solve", t_solve},
        {"total", total.lap()}}}};
  write_json(o.out, report);
  if (!o.trace_out.empty()) {
    write_trace_csv(o.trace_out, tau_trace, objective_trace, beta_trace);
  }
  if (!o.edges_out.empty()) {
    write_edges_csv(o.edges_out + ".theta1.csv", th1, o.model.edge_eps);
    write_edges_csv(o.edges_out + ".theta2.csv", th2, o.model.edge_eps);
  }
  std::cout << "tau_hat=" << tau_hat << " stop=" << stop_reason
            << " iterations=" << iterations << " report=" << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- segment

struct SegmentOpts {
  InputOpts in;
  ModelOpts model;
  StopOpts stopping;
  SaOpts sa;
  std::string algorithm = "approx-mm";
  double c_mult = 2.0;
  int refine_iters = 500;
  double refine_gamma = -1.0;  // <0: same as gamma
  int n0_floor = 5;
  double guard = 2e3;
  bool guard_frob = false;
  std::string unsplit_lambda = "midpoint";
  uint64_t seed = 0;
  std::string out = "report.json";
  std::string edges_out;

  CLI::Option* refine_gamma_opt = nullptr;
  CLI::Option* c_opt = nullptr;
};

json tree_json(const SegmentNode& n, double edge_eps) {
  json j = {{"lo", n.lo},       {"hi", n.hi},
            {"ell_tau", n.ell_tau}, {"ell_F", n.ell_F},
            {"diverged", n.diverged}};
  if (n.tau) {
    j["tau"] = *n.tau;
    j["children"] = {tree_json(*n.left, edge_eps),
                     tree_json(*n.right, edge_eps)};
  }
  return j;
}

int run_segment(const SegmentOpts& o) {
  Timer total, phase;
  int dropped = 0;
  const Dataset d = o.in.load(&dropped);
  const double t_load = phase.lap();

  SegmentationConfig cfg;
  cfg.penalty = o.model.penalty_config();
  cfg.C = o.c_mult;
  cfg.window_frac = o.model.n0_frac;
  cfg.n0_floor = o.n0_floor;
  cfg.solver = (o.algorithm == "sa") ? SegmentSolver::Sa
                                     : SegmentSolver::ApproxMM;
  cfg.gamma = o.model.gamma;
  if (o.refine_gamma > 0.0) cfg.refine_gamma = o.refine_gamma;
  cfg.refine_iters = o.refine_iters;
  cfg.rule = o.stopping.rule();
  if (cfg.rule.kind != StopKind::Practical) {
    throw FlagError("segment supports --stop practical only");
  }
  cfg.kernel = o.sa.kernel_spec(d.T());
  if (o.sa.sigma <= 0.0) cfg.kernel.sigma = 0.0;  // per-segment default
  cfg.cooling = o.sa.cooling();
  cfg.guard = o.guard;
  cfg.guard_frobenius = o.guard_frob;
  cfg.unsplit_lambda = (o.unsplit_lambda == "full-length")
                           ? UnsplitLambda::FullLength
                           : UnsplitLambda::Midpoint;
  cfg.seed = o.seed;

  SegmentationResult r = binary_segmentation(d, cfg);
  const double t_solve = phase.lap();

  json segments = json::array();
  for (size_t i = 0; i < r.points.segments.size(); ++i) {
    const Segment& s = r.points.segments[i];
    segments.push_back({{"lo", s.lo},
                        {"hi", s.hi},
                        {"edges", edges_json(s.theta.sym(), o.model.edge_eps)}});
    if (!o.edges_out.empty()) {
      write_edges_csv(o.edges_out + ".seg" + std::to_string(i) + ".csv",
                      s.theta.sym(), o.model.edge_eps);
    }
  }
  json report = {
      {"schema_version", kSchemaVersion},
      {"command", "segment"},
      {"seed", o.seed},
      {"args",
       {{"algorithm", o.algorithm},
        {"model", o.model.echo()},
        {"stopping", o.stopping.echo()},
        {"annealing", o.sa.echo()},
        {"input", o.in.echo()},
        {"c_mult", o.c_mult},
        {"refine_iters", o.refine_iters},
        {"refine_gamma", o.refine_gamma},
        {"n0_floor", o.n0_floor},
        {"guard", o.guard},
        {"guard_frob", o.guard_frob},
        {"unsplit_lambda", o.unsplit_lambda}}},
      {"data", {{"T", d.T()}, {"p", d.p()}, {"dropped_rows", dropped}}},
      {"taus", r.points.taus},
      {"segments", segments},
      {"tree", tree_json(*r.tree, o.model.edge_eps)},
      {"wall_time_s",
       {{"load", t_load}, {"solve", t_solve}, {"total", total.lap()}}}};
  write_json(o.out, report);
  std::cout << "taus=" << json(r.points.taus).dump()
            << " segments=" << r.points.segments.size()
            << " report=" << o.out << "\n";
  return 0;
}

// -------------------------------------------------------------- benchmark

struct BenchmarkOpts {
  ModelOpts model;
  StopOpts stopping;
  SaOpts sa;
  int p = 50;
  int t = 500;
  int reps = 5;
  std::string variant = "v2";
  std::vector<std::string> algorithms{"sa", "approx-mm", "brute"};
  double density = 0.25;
  int jobs = 1;
  uint64_t seed = 0;
  std::string out = "report.json";
  double glasso_tol = 1e-7;
  int glasso_iter = 500;
  int max_outer = 50;
};

struct BenchSample {
  double seconds = 0.0;
  int iterations = 0;
  int tau_hat = 0;
};

int run_benchmark(const BenchmarkOpts& o) {
  Timer total;
  if (o.reps < 1) throw FlagError("--reps must be positive");
  if (o.jobs < 1) throw FlagError("--jobs must be positive");
  for (const std::string& a : o.algorithms) {
    if (a != "sa" && a != "approx-mm" && a != "brute" && a != "mm") {
      throw FlagError("unknown algorithm " + a);
    }
  }
  const PenaltyConfig cfg = o.model.penalty_config();
  const int true_tau = o.t / 2;

  auto run_rep = [&](int rep) {
    const uint64_t rep_seed = Rng::mix(o.seed, static_cast<uint64_t>(rep + 1));
    GeneratorSpec g1{o.p, o.density, 4.0, Rng::mix(rep_seed, 1)};
    GeneratorSpec g2{o.p, o.density, 4.0, Rng::mix(rep_seed, 2)};
    const Dataset d = sample_series({random_precision(g1), random_precision(g2)},
                                    {true_tau}, o.t, Rng::mix(rep_seed, 3));
    const SearchWindow window = SearchWindow::from_frac(o.model.n0_frac, o.t);

    StoppingRule rule;
    rule.kind = (o.variant == "v1") ? StopKind::V1 : StopKind::V2;
    rule.max_iter = o.stopping.max_iter;
    rule.tau_tol = o.stopping.tau_tol;
    rule.theta_tol = o.stopping.theta_tol;
    rule.true_tau = true_tau;
    if (rule.kind == StopKind::V1) {
      rule.reference_thetas = reference_pair(d, cfg, true_tau, o.model.gamma,
                                             o.stopping.reference_iters,
                                             o.model.epsilon_opt_value());
    }
    const SolverState state0 = robust_initialize(
        d, cfg, window, Rng::mix(rep_seed, 4), o.model.epsilon_opt_value());

    GlassoSettings inner;
    inner.gamma = o.model.gamma;
    inner.tol = o.glasso_tol;
    inner.max_iter = o.glasso_iter;

    std::vector<BenchSample> samples;
    samples.reserve(o.algorithms.size());
    for (const std::string& algo : o.algorithms) {
      Timer watch;
      BenchSample s;
      if (algo == "brute") {
        BruteForceResult r = brute_force(d, cfg, window, inner, state0);
        s.tau_hat = r.tau_hat;
        s.iterations = window.size();
      } else if (algo == "mm") {
        SolverState r = mm_exact(d, cfg, window, state0, inner, o.max_outer);
        s.tau_hat = r.tau;
        s.iterations = r.k;
      } else if (algo == "approx-mm") {
        SolverState r =
            mm_approx(d, cfg, window, state0, o.model.gamma, rule);
        s.tau_hat = r.tau;
        s.iterations = r.k;
      } else {
        SolverState r = sa_solve(d, cfg, window, state0, o.model.gamma,
                                 o.sa.kernel_spec(o.t), o.sa.cooling(), &rule);
        s.tau_hat = r.tau;
        s.iterations = r.k;
      }
      s.seconds = watch.lap();
      samples.push_back(s);
    }
    return samples;
  };

  std::vector<std::vector<BenchSample>> all(static_cast<size_t>(o.reps));
  for (int base = 0; base < o.reps; base += o.jobs) {
    std::vector<std::future<std::vector<BenchSample>>> futs;
    const int end = std::min(o.reps, base + o.jobs);
    for (int rep = base; rep < end; ++rep) {
      futs.push_back(std::async(std::launch::async, run_rep, rep));
    }
    for (int rep = base; rep < end; ++rep) {
      all[static_cast<size_t>(rep)] = futs[static_cast<size_t>(rep - base)].get();
    }
  }

  json per_algo = json::object();
  for (size_t a = 0; a < o.algorithms.size(); ++a) {
    json times = json::array(), iters = json::array(), taus = json::array();
    double tsum = 0.0, isum = 0.0;
    for (int rep = 0; rep < o.reps; ++rep) {
      const BenchSample& s = all[static_cast<size_t>(rep)][a];
      times.push_back(s.seconds);
      iters.push_back(s.iterations);
      taus.push_back(s.tau_hat);
      tsum += s.seconds;
      isum += s.iterations;
    }
    per_algo[o.algorithms[a]] = {{"times_s", times},
                                 {"iterations", iters},
                                 {"tau_hats", taus},
                                 {"mean_time_s", tsum / o.reps},
                                 {"mean_iterations", isum / o.reps}};
  }
  json report = {{"schema_version", kSchemaVersion},
                 {"command", "benchmark"},
                 {"seed", o.seed},
                 {"args",
                  {{"p", o.p},
                   {"t", o.t},
                   {"reps", o.reps},
                   {"variant", o.variant},
                   {"algorithms", o.algorithms},
                   {"density", o.density},
                   {"jobs", o.jobs},
                   {"model", o.model.echo()},
                   {"stopping", o.stopping.echo()},
                   {"annealing", o.sa.echo()}}},
                 {"true_tau", true_tau},
                 {"results", per_algo},
                 {"wall_time_s", {{"total", total.lap()}}}};
  write_json(o.out, report);
  for (const std::string& algo : o.algorithms) {
    std::cout << algo << ": mean_time_s="
              << per_algo[algo]["mean_time_s"].get<double>()
              << " mean_iterations="
              << per_algo[algo]["mean_iterations"].get<double>() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Change-point estimation in Gaussian graphical models"};
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "generate piecewise Gaussian data");
  sim_cmd->add_option("--p", sim.p, "dimension")->required();
  sim_cmd->add_option("--t", sim.t, "series length")->required();
  sim_cmd->add_option("--tau-frac", sim.tau_fracs,
                      "change-point locations as fractions of T (repeatable)");
  sim_cmd->add_option("--density", sim.density,
                      "off-diagonal density (default 0.25)");
  sim_cmd->add_option("--similar", sim.similar,
                      "similar-pair densities q_pct,p_pct")
      ->delimiter(',');
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--out", sim.out, "data CSV path (default data.csv)");
  sim_cmd->add_option("--truth-out", sim.truth_out,
                      "ground-truth JSON path (default <out>.truth.json)");
  sim_cmd->add_option("--edge-eps", sim.edge_eps,
                      "edge-list magnitude threshold");

  DetectOpts det;
  CLI::App* det_cmd =
      app.add_subcommand("detect", "single change-point estimation");
  det.in.add_to(det_cmd);
  det.model.add_to(det_cmd);
  det.stopping.add_to(det_cmd);
  det.sa.add_to(det_cmd);
  det_cmd->add_option("--algorithm", det.algorithm, "solver")
      ->check(CLI::IsMember({"brute", "mm", "approx-mm", "sa"}));
  det_cmd->add_option("--max-outer", det.max_outer,
                      "outer iteration cap for --algorithm mm");
  det_cmd->add_option("--glasso-tol", det.glasso_tol,
                      "inner fit tolerance (brute, mm)");
  det_cmd->add_option("--glasso-iter", det.glasso_iter,
                      "inner fit iteration cap (brute, mm)");
  det_cmd->add_option("--seed", det.seed, "RNG seed");
  det_cmd->add_option("--out", det.out, "report path (default report.json)");
  det_cmd->add_option("--trace-out", det.trace_out, "per-iteration trace CSV");
  det_cmd->add_option("--edges-out", det.edges_out,
                      "edge-list CSV path prefix");

  SegmentOpts seg;
  CLI::App* seg_cmd =
      app.add_subcommand("segment", "multiple change-points");
  seg.in.add_to(seg_cmd);
  seg.model.add_to(seg_cmd);
  seg.stopping.add_to(seg_cmd);
  seg.sa.add_to(seg_cmd);
  seg_cmd->add_option("--algorithm", seg.algorithm, "per-segment solver")
      ->check(CLI::IsMember({"approx-mm", "sa"}));
  seg.c_opt = seg_cmd->add_option("--c-mult", seg.c_mult,
                                  "complexity penalty C (default 2)");
  seg_cmd->add_option("--refine-iters", seg.refine_iters,
                      "post-split prox steps (default 500)");
  seg.refine_gamma_opt = seg_cmd->add_option(
      "--refine-gamma", seg.refine_gamma, "step size for refinement");
  seg_cmd->add_option("--n0-floor", seg.n0_floor,
                      "minimum per-segment window margin (default 5)");
  seg_cmd->add_option("--guard", seg.guard,
                      "squared-norm divergence guard (default 2e3)");
  seg_cmd->add_flag("--guard-frob", seg.guard_frob,
                    "guard on squared Frobenius norm instead of spectral");
  seg_cmd->add_option("--unsplit-lambda", seg.unsplit_lambda,
                      "lambda index for the no-split fit")
      ->check(CLI::IsMember({"midpoint", "full-length"}));
  seg_cmd->add_option("--seed", seg.seed, "RNG seed");
  seg_cmd->add_option("--out", seg.out, "report path (default report.json)");
  seg_cmd->add_option("--edges-out", seg.edges_out,
                      "per-segment edge-list CSV path prefix");

  BenchmarkOpts ben;
  CLI::App* ben_cmd =
      app.add_subcommand("benchmark", "timing comparison across solvers");
  ben.model.add_to(ben_cmd);
  ben.stopping.add_to(ben_cmd);
  ben.sa.add_to(ben_cmd);
  ben_cmd->add_option("--p", ben.p, "dimension (default 50)");
  ben_cmd->add_option("--t", ben.t, "series length (default 500)");
  ben_cmd->add_option("--reps", ben.reps, "replications (default 5)");
  ben_cmd->add_option("--variant", ben.variant, "stopping variant")
      ->check(CLI::IsMember({"v1", "v2"}));
  ben_cmd->add_option("--algorithms", ben.algorithms,
                      "comma-separated subset of sa,approx-mm,brute,mm")
      ->delimiter(',');
  ben_cmd->add_option("--density", ben.density, "generator density");
  ben_cmd->add_option("--jobs", ben.jobs, "concurrent replications");
  ben_cmd->add_option("--seed", ben.seed, "RNG seed");
  ben_cmd->add_option("--out", ben.out, "report path (default report.json)");
  ben_cmd->add_option("--glasso-tol", ben.glasso_tol, "inner fit tolerance");
  ben_cmd->add_option("--glasso-iter", ben.glasso_iter,
                      "inner fit iteration cap");
  ben_cmd->add_option("--max-outer", ben.max_outer,
                      "outer iteration cap for mm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (det_cmd->parsed()) {
      det.model.apply_preset_detect();
      return run_detect(det);
    }
    if (seg_cmd->parsed()) {
      seg.model.apply_preset_detect();
      if (!seg.model.preset.empty() && seg.model.preset == "real") {
        if (!seg.refine_gamma_opt->count()) seg.refine_gamma = 350.0;
        if (!seg.c_opt->count()) seg.c_mult = 0.005;
      }
      return run_segment(seg);
    }
    if (ben_cmd->parsed()) {
      ben.model.apply_preset_detect();
      return run_benchmark(ben);
    }
  } catch (const FlagError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MissingKappa& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MissingReference& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Diverged& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 4;
  } catch (const ConvergenceFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const MalformedCsv& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const EmptyTable& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NonPositivePrice& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ZeroVariance& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ShapeMismatch& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateWindow& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const OutOfWindow& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
