#pragma once

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbmlab/config.hpp"
#include "fbmlab/density_lab.hpp"
#include "fbmlab/hitting.hpp"
#include "fbmlab/io.hpp"
#include "fbmlab/kl.hpp"
#include "fbmlab/malliavin.hpp"

namespace fbmlab {

inline constexpr const char* kVersion = "fbmlab 0.1.0";

struct RunOptions {
  std::string out_dir = "out";
  unsigned workers = 0;
  std::optional<std::uint64_t> seed_override;
};

struct RunManifest {
  std::string version;
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::uint64_t> task_seeds;
  std::vector<std::pair<std::string, bool>> verdicts;
  std::vector<std::string> outputs;
  double wall_clock_ms = 0.0;

  bool all_pass() const {
    for (const auto& [name, ok] : verdicts)
      if (!ok) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = version;
    j["command"] = command;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hash;
    j["seed"] = seed;
    j["task_seeds"] = task_seeds;
    nlohmann::json v = nlohmann::json::object();
    for (const auto& [name, ok] : verdicts) v[name] = ok;
    j["verdicts"] = v;
    j["outputs"] = outputs;
    j["wall_clock_ms"] = wall_clock_ms;
    return j;
  }
};

namespace detail {

inline std::uint32_t suite_index(const std::string& command) {
  static const std::vector<std::string> order = {
      "sample-fbm", "kl",       "solve",    "malliavin", "density", "concentration",
      "capacity",   "lemma-le", "hitting",  "a1a2"};
  for (std::uint32_t i = 0; i < order.size(); ++i)
    if (order[i] == command) return i + 1;
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace detail

/// Config-driven experiment orchestration.  All Monte-Carlo draws are keyed by
/// (task seed, path index) so re-runs and worker-count changes reproduce every
/// artifact byte for byte.
class Runner {
 public:
  Runner(Config cfg, RunOptions opt) : cfg_(std::move(cfg)), opt_(std::move(opt)) {
    std::filesystem::create_directories(opt_.out_dir);
    if (!cfg_.has("", "seed")) throw ConfigError("config requires a top-level seed");
    seed_ = opt_.seed_override ? *opt_.seed_override
                               : static_cast<std::uint64_t>(cfg_.integer("", "seed"));
  }

  RunManifest run(const std::string& command) {
    const auto start = std::chrono::steady_clock::now();
    manifest_ = RunManifest{};
    manifest_.version = kVersion;
    manifest_.command = command;
    manifest_.config_hash = cfg_.fingerprint();
    manifest_.seed = seed_;

    if (command == "verify-all") {
      for (const std::string& sub :
           {"sample-fbm", "kl", "solve", "malliavin", "density", "concentration", "capacity",
            "lemma-le", "hitting", "a1a2"})
        dispatch(sub);
    } else {
      dispatch(command);
    }

    manifest_.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    write_summary();
    return manifest_;
  }

 private:
  void dispatch(const std::string& command) {
    const std::uint64_t task_seed = mix_seed(seed_, detail::suite_index(command));
    manifest_.task_seeds[command] = task_seed;
    if (command == "sample-fbm") return run_sample_fbm(task_seed);
    if (command == "kl") return run_kl(task_seed);
    if (command == "solve") return run_solve(task_seed);
    if (command == "malliavin") return run_malliavin(task_seed);
    if (command == "density") return run_density(task_seed);
    if (command == "concentration") return run_concentration(task_seed);
    if (command == "capacity") return run_capacity(task_seed);
    if (command == "lemma-le") return run_lemma_le(task_seed);
    if (command == "hitting") return run_hitting(task_seed);
    if (command == "a1a2") return run_a1a2(task_seed);
    throw ConfigError("unknown command '" + command + "'");
  }

  // -- shared pieces ---------------------------------------------------------

  HurstParam theory_hurst(const std::string& section) const {
    const double h = cfg_.number_or(section, "H", cfg_.number_or("", "H", 0.7));
    HurstParam hurst(h);
    if (!(h > 0.25)) throw ConfigError("H must exceed 1/4 for theory commands");
    return hurst;
  }

  VectorFieldSystem fields(const std::string& section = "fields") const {
    const int n = static_cast<int>(cfg_.integer(section, "n"));
    const int d = static_cast<int>(cfg_.integer(section, "d"));
    std::vector<std::vector<std::string>> texts;
    for (int j = 0; j <= d; ++j)
      texts.push_back(cfg_.texts(section, "V" + std::to_string(j)));
    VectorFieldSystem vf = VectorFieldSystem::from_expressions(n, d, texts);
    if (cfg_.has(section, "lambda")) vf.ellipticity_lambda = cfg_.number(section, "lambda");
    return vf;
  }

  Eigen::VectorXd x0_from(const std::string& section, int n) const {
    const auto values = cfg_.has(section, "x0") ? cfg_.numbers(section, "x0")
                                                : std::vector<double>(static_cast<std::size_t>(n), 0.0);
    if (static_cast<int>(values.size()) != n) throw ConfigError("x0 dimension mismatch");
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = values[static_cast<std::size_t>(i)];
    return x;
  }

  McOptions mc_options(const std::string& section, std::uint64_t task_seed) const {
    McOptions opt;
    opt.paths = static_cast<std::size_t>(cfg_.integer_or(section, "paths", 20000));
    opt.steps = static_cast<std::size_t>(cfg_.integer_or(section, "steps", 128));
    opt.seed = task_seed;
    opt.workers = opt_.workers;
    opt.method = method_from(cfg_.text_or(section, "method", "circulant"));
    const std::string scheme = cfg_.text_or(section, "scheme", "milstein2");
    opt.scheme = SolverScheme{scheme_from_name(scheme),
                              static_cast<int>(cfg_.integer_or(section, "refinement", 16))};
    return opt;
  }

  static SampleMethod method_from(const std::string& name) {
    if (name == "cholesky") return SampleMethod::cholesky;
    if (name == "circulant") return SampleMethod::circulant;
    if (name == "volterra") return SampleMethod::volterra;
    throw ConfigError("unknown sampling method '" + name + "'");
  }

  std::string artifact(const std::string& name) {
    manifest_.outputs.push_back(name);
    return (std::filesystem::path(opt_.out_dir) / name).string();
  }

  void verdict(const std::string& name, bool ok) { manifest_.verdicts.emplace_back(name, ok); }

  void write_json(const std::string& name, const nlohmann::json& j) {
    std::ofstream out(artifact(name), std::ios::binary);
    out << j.dump(2) << "\n";
  }

  void write_summary() {
    nlohmann::json j;
    j["command"] = manifest_.command;
    nlohmann::json v = nlohmann::json::object();
    for (const auto& [name, ok] : manifest_.verdicts) v[name] = ok;
    j["verdicts"] = v;
    j["all_pass"] = manifest_.all_pass();
    std::ofstream out((std::filesystem::path(opt_.out_dir) / "summary.json").string(),
                      std::ios::binary);
    out << j.dump(2) << "\n";
    std::ofstream man((std::filesystem::path(opt_.out_dir) / "manifest.json").string(),
                      std::ios::binary);
    man << manifest_.to_json().dump(2) << "\n";
  }

  // -- suites ----------------------------------------------------------------

  void run_sample_fbm(std::uint64_t task_seed) {
    const HurstParam hurst = theory_hurst("sample_fbm");
    const auto steps = static_cast<std::size_t>(cfg_.integer_or("sample_fbm", "steps", 64));
    const int d = static_cast<int>(cfg_.integer_or("sample_fbm", "d", 1));
    const SampleMethod method = method_from(cfg_.text_or("sample_fbm", "method", "cholesky"));
    const auto exports = static_cast<std::size_t>(cfg_.integer_or("sample_fbm", "export_paths", 2));

    FbmSampler sampler(hurst, TimeGrid::regular(1.0, steps), d, method);
    bool deterministic = true;
    for (std::size_t p = 0; p < exports; ++p) {
      const FbmPath path = sampler.sample(task_seed, p);
      deterministic = deterministic && (sampler.sample(task_seed, p).values == path.values);
      write_fbm_csv(artifact("fbm_path_" + std::to_string(p) + ".csv"), path);
      write_fbm_binary(artifact("fbm_path_" + std::to_string(p) + ".fbm"), path);
    }
    verdict("sample_fbm_deterministic", deterministic);
    verdict("sample_fbm_no_warnings", sampler.warnings().empty());
  }

  void run_kl(std::uint64_t task_seed) {
    (void)task_seed;
    const HurstParam hurst = theory_hurst("kl");
    const int order = static_cast<int>(cfg_.integer_or("kl", "order", 20));
    const auto quad = static_cast<std::size_t>(cfg_.integer_or("kl", "quad_cells", 256));
    const KlBasis basis = build_basis(order, hurst, quad);

    {
      CsvWriter csv(artifact("kl_basis.csv"), {"k", "coefficients..."});
      // coefficient rows are ragged; emit k then the k monomial coefficients
      for (std::size_t k = 0; k < basis.ell_prime.size(); ++k) {
        std::vector<double> row = {static_cast<double>(k + 1)};
        row.insert(row.end(), basis.ell_prime[k].begin(), basis.ell_prime[k].end());
        csv.row(row);
      }
    }
    {
      CsvWriter csv(artifact("kl_variance.csv"), {"t", "captured_variance", "full_variance"});
      for (double t : {0.25, 0.5, 1.0}) {
        const std::size_t i = basis.quad_grid.index_of(t);
        double captured = 0.0;
        for (int k = 0; k < basis.order; ++k)
          captured += basis.h_funcs(k, static_cast<Eigen::Index>(i)) *
                      basis.h_funcs(k, static_cast<Eigen::Index>(i));
        csv.row({t, captured, kl_full_variance(basis, i)});
      }
    }
    const Eigen::MatrixXd gram = basis_gram_matrix(basis, std::min(order, 12));
    const double dev =
        (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    verdict("kl_gram_orthonormal", dev < 1e-10);
  }

  void run_solve(std::uint64_t task_seed) {
    const HurstParam hurst = theory_hurst("solve");
    const VectorFieldSystem vf = fields();
    const McOptions opt = mc_options("solve", task_seed);
    const Eigen::VectorXd x0 = x0_from("solve", vf.n);
    const bool with_jac = cfg_.boolean_or("solve", "with_jacobian", true);

    const std::size_t total_cells =
        opt.scheme.kind == SchemeKind::wong_zakai_fine
            ? opt.steps * static_cast<std::size_t>(opt.scheme.refinement)
            : opt.steps;
    FbmSampler sampler(hurst, TimeGrid::regular(1.0, total_cells), vf.d, opt.method);
    const FbmPath driver = sampler.sample(task_seed, 0);
    const SolutionPath sol = with_jac ? solve_with_jacobian(vf, driver, x0, opt.scheme)
                                      : solve(vf, driver, x0, opt.scheme);
    write_solution_csv(artifact("solution.csv"), sol);
    if (with_jac) verdict("solve_jacobian_consistent", sol.jacobian_consistency() <= 1e-6);
    verdict("solve_finite", sol.X.allFinite());
  }

  void run_malliavin(std::uint64_t task_seed) {
    const HurstParam hurst = theory_hurst("malliavin");
    const VectorFieldSystem vf = fields();
    ScalingFitOptions opt;
    opt.paths = static_cast<int>(cfg_.integer_or("malliavin", "paths", 200));
    opt.steps = static_cast<std::size_t>(cfg_.integer_or("malliavin", "steps", 128));
    opt.seed = task_seed;
    if (cfg_.has("malliavin", "t_grid")) opt.t_grid = cfg_.numbers("malliavin", "t_grid");
    if (hurst.value() <= 1.0 / 3.0) opt.scheme = SolverScheme::wong_zakai(16);

    std::vector<double> medians;
    const BoundFit fit =
        malliavin_scaling_fit(vf, hurst, x0_from("malliavin", vf.n), opt, &medians);
    {
      std::ofstream out(artifact("malliavin_scaling.jsonl"), std::ios::binary);
      for (std::size_t i = 0; i < opt.t_grid.size(); ++i) {
        nlohmann::json j;
        j["t"] = opt.t_grid[i];
        j["lambda_min"] = medians[i];
        j["slope"] = fit.exponents[0].fitted;
        j["band"] = fit.diagnostics.at("batch_spread");
        out << j.dump() << "\n";
      }
    }
    verdict("malliavin_slope_2H", fit.pass);

    const double gamma = cfg_.number_or("malliavin", "gamma",
                                        0.25 + std::abs(hurst.value() - 0.5));
    std::vector<double> t_grid = cfg_.has("malliavin", "interpolation_t")
                                     ? cfg_.numbers("malliavin", "interpolation_t")
                                     : std::vector<double>{0.125, 0.25, 0.375, 0.5, 0.75, 1.0};
    const InterpolationReport rep =
        verify_interpolation(hurst, gamma, interpolation_corpus(), t_grid,
                             static_cast<std::size_t>(cfg_.integer_or("malliavin", "quad_cells", 256)));
    nlohmann::json j;
    j["H"] = rep.hurst;
    j["gamma"] = rep.gamma;
    nlohmann::json funcs = nlohmann::json::array();
    for (const auto& f : rep.functions) {
      funcs.push_back({{"name", f.name},
                       {"c1_min", f.c1_min},
                       {"c1_max", f.c1_max},
                       {"c2_min", f.c2_min},
                       {"c2_max", f.c2_max},
                       {"vacuous_lower", f.vacuous_lower},
                       {"violation", f.violation}});
    }
    j["functions"] = funcs;
    write_json("interpolation.json", j);
    verdict("interpolation_no_violation", !rep.any_violation);
  }

  void run_density(std::uint64_t task_seed) {
    const HurstParam hurst = theory_hurst("density");
    const VectorFieldSystem vf = fields();
    const McOptions opt = mc_options("density", task_seed);
    const Eigen::VectorXd x0 = x0_from("density", vf.n);
    const auto t_list = cfg_.has("density", "t_list") ? cfg_.numbers("density", "t_list")
                                                      : std::vector<double>{0.25, 0.5, 1.0};

    DensityBoundArtifacts art;
    const BoundFit fit = verify_density_upper_bound(vf, hurst, x0, t_list, opt, &art);
    for (const auto& est : art.estimates) {
      CsvWriter csv(artifact("density_t" + std::to_string(est.t) + ".csv"),
                    {"t", "y", "p_hat", "stderr"});
      for (std::size_t i = 0; i < est.density.size(); ++i)
        csv.row({est.t, est.eval_points(static_cast<Eigen::Index>(i), 0), est.density[i],
                 est.stderrs[i]});
    }
    nlohmann::json j;
    for (const auto& e : fit.exponents)
      j["exponents"].push_back({{"name", e.name},
                                {"target", e.target},
                                {"fitted", e.fitted},
                                {"tolerance", e.tolerance},
                                {"pass", e.pass}});
    j["c1"] = art.c1;
    j["c2"] = art.c2;
    j["q_used"] = art.q_used;
    j["envelope_holds"] = art.envelope_holds;
    if (hurst.value() < 0.5) j["c2_gaussian_alt"] = art.c2_gaussian_alt;
    write_json("density_fit.json", j);
    verdict("density_envelope", art.envelope_holds);

    if (cfg_.has("density", "positivity_probes")) {
      const auto probes_v = cfg_.numbers("density", "positivity_probes");
      Eigen::MatrixXd probes(static_cast<Eigen::Index>(probes_v.size()), 1);
      for (std::size_t i = 0; i < probes_v.size(); ++i)
        probes(static_cast<Eigen::Index>(i), 0) = probes_v[i];
      const double t = cfg_.number_or("density", "positivity_t", 1.0);
      const KlBasis basis = build_basis(
          static_cast<int>(cfg_.integer_or("density", "kl_order", 8)), hurst,
          static_cast<std::size_t>(cfg_.integer_or("density", "kl_quad_cells", 256)));
      const PositivityReport rep = verify_positivity(vf, hurst, x0, t, probes, opt, basis);
      nlohmann::json pj;
      pj["t"] = rep.t;
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& p : rep.probes)
        rows.push_back({{"y", p.y(0)},
                        {"density", p.density},
                        {"stderr", p.stderr_mc},
                        {"positive", p.positive},
                        {"certificate_error", p.certificate_error}});
      pj["probes"] = rows;
      write_json("positivity.json", pj);
      verdict("positivity_probes", rep.all_positive);
      verdict("positivity_certificates", rep.all_certified);
    }
  }

  void run_concentration(std::uint64_t task_seed) {
    const HurstParam hurst = theory_hurst("concentration");
    const VectorFieldSystem vf = fields();
    const McOptions opt = mc_options("concentration", task_seed);
    const auto t_list = cfg_.has("concentration", "t_list")
                            ? cfg_.numbers("concentration", "t_list")
                            : std::vector<double>{0.375, 0.5, 0.75, 1.0};
    std::vector<double> xi = cfg_.has("concentration", "xi_grid")
                                 ? cfg_.numbers("concentration", "xi_grid")
                                 : std::vector<double>{};
    if (xi.empty())
      for (double v = 0.8; v <= 3.5; v *= 1.15) xi.push_back(v);

    ConcentrationArtifacts art;
    const BoundFit fit =
        verify_concentration(vf, hurst, x0_from("concentration", vf.n), t_list, xi, opt, &art);
    {
      CsvWriter csv(artifact("concentration_tail.csv"), {"t", "xi", "tail_probability"});
      for (std::size_t ti = 0; ti < art.t_used.size(); ++ti)
        for (std::size_t x = 0; x < art.xi_used.size(); ++x)
          csv.row({art.t_used[ti], art.xi_used[x],
                   art.tail_probability(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(x))});
    }
    nlohmann::json j;
    for (const auto& e : fit.exponents)
      j["exponents"].push_back({{"name", e.name},
                                {"target", e.target},
                                {"fitted", e.fitted},
                                {"tolerance", e.tolerance},
                                {"pass", e.pass}});
    write_json("concentration_fit.json", j);
    verdict("concentration_exponents", fit.pass);
  }

  void run_capacity(std::uint64_t task_seed) {
    (void)task_seed;
    const CompactSet set = parse_compact_set(cfg_.text_or("capacity", "set", "box(0; 1)"));
    const auto alphas = cfg_.has("capacity", "alphas") ? cfg_.numbers("capacity", "alphas")
                                                       : std::vector<double>{-0.5, 0.5};
    const auto support = static_cast<std::size_t>(cfg_.integer_or("capacity", "support", 256));
    const double tol = cfg_.number_or("capacity", "tol", 5e-3);

    nlohmann::json all = nlohmann::json::array();
    bool conclusive = true;
    for (double alpha : alphas) {
      const CapacityEstimate est = capacity(set, alpha, support, tol);
      nlohmann::json j;
      j["alpha"] = alpha;
      j["capacity"] = est.capacity;
      j["energy_min"] = std::isfinite(est.energy_min) ? est.energy_min : -1.0;
      j["status"] = capacity_status_name(est.status);
      nlohmann::json log = nlohmann::json::array();
      for (const auto& e : est.log)
        log.push_back({{"support", e.support_size},
                       {"eps", e.mollify_eps},
                       {"energy", std::isfinite(e.energy) ? e.energy : -1.0},
                       {"best_gap", e.best_gap},
                       {"iterations", e.iterations}});
      j["convergence_log"] = log;
      all.push_back(j);
      conclusive = conclusive && est.status != CapacityStatus::inconclusive;
    }
    write_json("capacity.json", all);
    verdict("capacity_conclusive", conclusive);
  }

  void run_lemma_le(std::uint64_t task_seed) {
    (void)task_seed;
    const double a = cfg_.number_or("lemma_le", "a", 0.1);
    const double b = cfg_.number_or("lemma_le", "b", 0.9);
    const double H = theory_hurst("lemma_le").value();
    const double big_n = cfg_.number_or("lemma_le", "N", 2.0);
    const auto betas = cfg_.has("lemma_le", "betas") ? cfg_.numbers("lemma_le", "betas")
                                                     : std::vector<double>{1.0, 1.0 / H, 3.0};
    const double p_offset = cfg_.number_or("lemma_le", "p_offset", 1.5);
    std::vector<double> r_grid;
    for (double r = 1e-4; r <= big_n; r *= 1.5) r_grid.push_back(r);

    bool all_pass = true;
    nlohmann::json j = nlohmann::json::array();
    for (double beta : betas) {
      const LemmaLeReport rep = verify_lemma_le(a, b, beta, H, beta + p_offset, big_n, r_grid,
                                                static_cast<std::size_t>(cfg_.integer_or(
                                                    "lemma_le", "grid_cells", 4096)));
      CsvWriter csv(artifact("lemma_le_beta" + std::to_string(beta) + ".csv"),
                    {"r", "lhs", "ratio"});
      for (std::size_t i = 0; i < rep.r_grid.size(); ++i)
        csv.row({rep.r_grid[i], rep.lhs[i], rep.ratio[i]});
      j.push_back({{"beta", beta},
                   {"alpha", rep.alpha},
                   {"sup_ratio", rep.sup_ratio},
                   {"max_decade_variation", rep.max_decade_variation},
                   {"pass", rep.pass}});
      all_pass = all_pass && rep.pass;
    }
    write_json("lemma_le.json", j);
    verdict("lemma_le_bounded", all_pass);
  }

  void run_hitting(std::uint64_t task_seed) {
    const std::string fsec = cfg_.has("hitting_fields", "n") ? "hitting_fields" : "fields";
    HittingExperiment exp{fields(fsec),
                          theory_hurst("hitting"),
                          x0_from("hitting", static_cast<int>(cfg_.integer(fsec, "n"))),
                          0.0,
                          1.0,
                          parse_compact_set(cfg_.text_or("hitting", "target", "ball(0.5 0 0; 0.1)"))};
    const auto window = cfg_.has("hitting", "window") ? cfg_.numbers("hitting", "window")
                                                      : std::vector<double>{1.0 / 32.0, 1.0};
    exp.window_a = window.at(0);
    exp.window_b = window.at(1);
    exp.bound_m = cfg_.number_or("hitting", "M", 2.0);
    exp.eta = cfg_.number_or("hitting", "eta", 0.05);
    exp.paths = static_cast<std::size_t>(cfg_.integer_or("hitting", "paths", 10000));
    exp.steps = static_cast<std::size_t>(cfg_.integer_or("hitting", "steps", 1024));
    exp.scheme = SolverScheme{scheme_from_name(cfg_.text_or("hitting", "scheme", "euler")), 16};
    exp.seed = task_seed;
    exp.workers = opt_.workers;

    const auto center_v = cfg_.has("hitting", "center") ? cfg_.numbers("hitting", "center")
                                                        : std::vector<double>{0.5, 0.0, 0.0};
    Eigen::VectorXd center(static_cast<Eigen::Index>(center_v.size()));
    for (std::size_t i = 0; i < center_v.size(); ++i)
      center(static_cast<Eigen::Index>(i)) = center_v[i];
    const auto radii = cfg_.has("hitting", "radii") ? cfg_.numbers("hitting", "radii")
                                                    : std::vector<double>{0.1, 0.2};
    const double max_spread = cfg_.number_or("hitting", "max_spread", 4.0);

    const SandwichReport rep = capacity_sandwich(exp, center, radii, max_spread);
    {
      CsvWriter csv(artifact("hitting_ratios.csv"),
                    {"radius", "p_hit", "stderr", "p_refined", "gap", "cap_lower", "cap_upper",
                     "ratio_lower", "ratio_upper"});
      for (const auto& e : rep.entries)
        csv.row({e.radius, e.result.p_hit, e.result.stderr_mc, e.result.p_hit_refined,
                 e.result.refinement_gap, e.result.cap_lower, e.result.cap_upper,
                 e.result.ratio_lower, e.result.ratio_upper});
    }
    nlohmann::json j;
    j["c5"] = rep.c5;
    j["c6"] = rep.c6;
    j["band_spread"] = rep.band_spread;
    j["pass"] = rep.pass;
    j["warnings"] = rep.warnings;
    write_json("hitting.json", j);
    verdict("hitting_sandwich", rep.pass);
    bool gaps_ok = true;
    for (const auto& e : rep.entries)
      gaps_ok = gaps_ok && e.result.refinement_gap <= 3.0 * e.result.stderr_mc;
    verdict("hitting_refinement_gap", gaps_ok);
  }

  void run_a1a2(std::uint64_t task_seed) {
    const HurstParam hurst = theory_hurst("a1a2");
    const VectorFieldSystem vf = fields();
    McOptions opt = mc_options("a1a2", task_seed);
    const double a = cfg_.number_or("a1a2", "a", 0.25);
    const double b = cfg_.number_or("a1a2", "b", 1.0);
    const double m = cfg_.number_or("a1a2", "M", 1.0);
    const Eigen::VectorXd x0 = x0_from("a1a2", vf.n);

    const auto z_points = static_cast<std::size_t>(cfg_.integer_or("a1a2", "z_points", 21));
    Eigen::MatrixXd z_grid;
    if (vf.n == 1)
      z_grid = eval_grid_1d(-m, m, z_points);
    else
      z_grid = eval_grid_2d(-m, m, -m, m, z_points);
    const A1Report a1 = check_a1(vf, hurst, x0, a, b, z_grid, opt);
    {
      nlohmann::json j;
      j["min_integral"] = a1.min_integral;
      j["stderr_at_min"] = a1.stderr_at_min;
      j["pass"] = a1.pass;
      j["vacuous"] = a1.vacuous;
      write_json("a1.json", j);
    }
    verdict("a1_min_positive", a1.pass);

    std::vector<std::pair<double, double>> pairs;
    const auto flat = cfg_.has("a1a2", "pairs") ? cfg_.numbers("a1a2", "pairs")
                                                : std::vector<double>{0.25, 0.5, 0.25, 0.75, 0.5, 1.0};
    if (flat.size() % 2 != 0) throw ConfigError("a1a2 pairs must list s,t couples");
    for (std::size_t i = 0; i + 1 < flat.size(); i += 2) pairs.emplace_back(flat[i], flat[i + 1]);
    const A2Report a2 = check_a2(vf, hurst, x0, m, pairs, opt,
                                 static_cast<std::size_t>(cfg_.integer_or("a1a2", "grid_per_dim", 17)));
    {
      nlohmann::json j;
      j["beta"] = a2.beta;
      j["c_max"] = a2.c_max;
      j["pass"] = a2.pass;
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& pr : a2.pairs)
        rows.push_back({{"s", pr.s},
                        {"t", pr.t},
                        {"c_fit", pr.c_fit},
                        {"p_used", pr.p_used},
                        {"coverage", pr.coverage}});
      j["pairs"] = rows;
      j["warnings"] = a2.warnings;
      write_json("a2.json", j);
    }
    verdict("a2_envelope", a2.pass);
  }

  Config cfg_;
  RunOptions opt_;
  std::uint64_t seed_ = 0;
  RunManifest manifest_;
};

}  // namespace fbmlab
