#include "finitebath/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "finitebath/bath.hpp"
#include "finitebath/correlation.hpp"
#include "finitebath/dynamics.hpp"
#include "finitebath/kernel.hpp"
#include "finitebath/numerics.hpp"
#include "finitebath/oracle.hpp"
#include "finitebath/system.hpp"
#include "finitebath/version.hpp"

namespace finitebath {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kScenarios = {
    "spectrum",   "correlations", "rates",    "evolve",
    "compare",    "stationary",   "mutualinfo", "validate"};

[[noreturn]] void config_fail(const std::string& where, const std::string& what) {
  throw ConfigError("config error at " + where + ": " + what);
}

const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) config_fail(where, "missing key '" + key + "'");
  return j.at(key);
}

double need_number(const json& j, const std::string& key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number()) config_fail(where + "/" + key, "expected a number");
  return v.get<double>();
}

// Accepts 0.5, 10, or the string form "1/2", "3/2".
double parse_spin(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return std::stod(s);
      return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
    } catch (const std::exception&) {
      config_fail(where, "cannot parse spin '" + s + "'");
    }
  }
  config_fail(where, "spin must be a number or a rational string");
}

struct Setup {
  BathSpec bath;
  MeasurementKernel kernel;
  SystemSpec system;
  SpectralDensity spectral;
  bool has_system = false;
  bool has_spectral = false;
  RateMode mode = RateMode::Continuum;
};

Setup parse_setup(const json& cfg, std::uint64_t seed) {
  Setup s;
  const json& jb = need(cfg, "bath", "/");
  if (jb.contains("zeeman")) {
    BathSpec b;
    b.n_spins = static_cast<int>(need_number(jb, "n_spins", "/bath"));
    b.zeeman = need(jb, "zeeman", "/bath").get<std::vector<double>>();
    if (jb.contains("couplings"))
      b.couplings = jb.at("couplings").get<std::vector<double>>();
    else
      b.couplings.assign(b.zeeman.size(),
                         jb.value("coupling", 1.0));
    b.seed = seed;
    b.zeeman_dist.mean = jb.contains("zeeman_dist")
                             ? need_number(jb.at("zeeman_dist"), "mean", "/bath/zeeman_dist")
                             : 1.0;
    b.zeeman_dist.std = jb.contains("zeeman_dist")
                            ? need_number(jb.at("zeeman_dist"), "std", "/bath/zeeman_dist")
                            : 0.0;
    try {
      b.validate();
    } catch (const std::invalid_argument& e) {
      config_fail("/bath", e.what());
    }
    s.bath = b;
  } else {
    const json& jd = need(jb, "zeeman_dist", "/bath");
    ZeemanDistribution dist{need_number(jd, "mean", "/bath/zeeman_dist"),
                            need_number(jd, "std", "/bath/zeeman_dist")};
    const int n = static_cast<int>(need_number(jb, "n_spins", "/bath"));
    try {
      s.bath = sample_bath(n, dist, jb.value("coupling", 1.0), seed);
    } catch (const std::invalid_argument& e) {
      config_fail("/bath", e.what());
    }
  }

  const json& jk = need(cfg, "kernel", "/");
  const std::string kind = need(jk, "kind", "/kernel").get<std::string>();
  const double de = need_number(jk, "delta_e", "/kernel");
  const double e_max = jk.value("e_max", 8.0 * s.bath.sigma_n());
  try {
    if (kind == "indicator")
      s.kernel = MeasurementKernel::indicator(de, e_max);
    else if (kind == "gaussian")
      s.kernel = MeasurementKernel::gaussian(de, e_max);
    else
      config_fail("/kernel/kind", "expected 'indicator' or 'gaussian'");
  } catch (const std::invalid_argument& e) {
    config_fail("/kernel", e.what());
  }

  if (cfg.contains("system")) {
    s.system.spin = parse_spin(need(cfg.at("system"), "spin", "/system"), "/system/spin");
    s.system.omega_s = need_number(cfg.at("system"), "omega_s", "/system");
    try {
      s.system.validate();
    } catch (const std::invalid_argument& e) {
      config_fail("/system", e.what());
    }
    s.has_system = true;
  }
  if (cfg.contains("spectral")) {
    const json& js = cfg.at("spectral");
    const std::string mode = js.value("mode", "continuum");
    if (mode != "continuum" && mode != "discrete")
      config_fail("/spectral/mode", "expected 'continuum' or 'discrete'");
    s.spectral = make_spectral_density(s.bath, need_number(js, "lambda", "/spectral"),
                                       js.value("c0", 1.0), mode == "continuum");
    s.has_spectral = true;
  }
  const std::string rate_mode = cfg.value("rate_mode", "continuum");
  if (rate_mode == "oracle")
    s.mode = RateMode::Oracle;
  else if (rate_mode != "continuum")
    config_fail("/rate_mode", "expected 'continuum' or 'oracle'");
  return s;
}

std::vector<double> parse_times(const json& cfg) {
  const json& jt = need(cfg, "times", "/");
  const double t_max = need_number(jt, "t_max", "/times");
  const int n = static_cast<int>(need_number(jt, "n_points", "/times"));
  if (n < 2 || !(t_max > 0.0)) config_fail("/times", "need n_points >= 2 and t_max > 0");
  const std::string spacing = jt.value("spacing", "linear");
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(n));
  if (spacing == "linear") {
    for (int i = 0; i < n; ++i) t.push_back(t_max * i / (n - 1));
  } else if (spacing == "log") {
    t.push_back(0.0);
    const double t0 = t_max * 1e-3;
    for (int i = 0; i < n - 1; ++i)
      t.push_back(t0 * std::pow(t_max / t0, static_cast<double>(i) / (n - 2)));
  } else {
    config_fail("/times/spacing", "expected 'linear' or 'log'");
  }
  return t;
}

struct InitialState {
  Eigen::VectorXd system_populations;
  std::string bath_type;  // canonical | microcanonical
  double beta0 = 0.0;     // canonical
  double energy = 0.0;    // microcanonical
};

InitialState parse_initial(const json& cfg, const SystemSpec& system,
                           const BathSpec& bath) {
  InitialState st;
  const int d = system.dimension();
  st.system_populations = Eigen::VectorXd::Zero(d);
  if (cfg.contains("initial") && cfg.at("initial").contains("system")) {
    const json& js = cfg.at("initial").at("system");
    if (js.contains("populations")) {
      const auto pops = js.at("populations").get<std::vector<double>>();
      if (static_cast<int>(pops.size()) != d)
        config_fail("/initial/system/populations", "length != 2s+1");
      for (int k = 0; k < d; ++k) st.system_populations[k] = pops[static_cast<std::size_t>(k)];
    } else {
      const int k0 = static_cast<int>(js.value("excited_level", d - 1));
      if (k0 < 0 || k0 >= d) config_fail("/initial/system/excited_level", "out of range");
      st.system_populations[k0] = 1.0;
    }
  } else {
    st.system_populations[d - 1] = 1.0;  // topmost level
  }

  const json jb = cfg.contains("initial") && cfg.at("initial").contains("bath")
                      ? cfg.at("initial").at("bath")
                      : json{{"type", "canonical"}, {"beta", 0.75}};
  st.bath_type = need(jb, "type", "/initial/bath").get<std::string>();
  if (st.bath_type == "canonical") {
    st.beta0 = need_number(jb, "beta", "/initial/bath");
  } else if (st.bath_type == "microcanonical") {
    st.energy = need_number(jb, "energy", "/initial/bath");
    try {
      st.beta0 = solve_beta_star(st.energy, bath);
    } catch (const std::domain_error& e) {
      config_fail("/initial/bath/energy", e.what());
    }
  } else {
    config_fail("/initial/bath/type", "expected 'canonical' or 'microcanonical'");
  }
  return st;
}

Eigen::VectorXd initial_bath_populations(const InitialState& st,
                                         const std::vector<double>& grid,
                                         const BathSpec& bath,
                                         const MeasurementKernel& kernel) {
  if (st.bath_type == "canonical")
    return canonical_bath_populations(st.beta0, grid, bath, kernel);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  const long m = kernel.bin_index(st.energy);
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (kernel.bin_index(grid[j]) == m) {
      p[static_cast<Eigen::Index>(j)] = 1.0;
      return p;
    }
  throw ConfigError("initial bath energy " + fmt_g17(st.energy) +
                    " is outside the energy grid");
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
  }
  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      out_ << cols[i] << (i + 1 == cols.size() ? '\n' : ',');
  }
  void row(const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i)
      out_ << fmt_g17(vals[i]) << (i + 1 == vals.size() ? '\n' : ',');
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> trajectory_columns(const SystemSpec& system,
                                            const std::vector<double>& grid,
                                            double delta_e) {
  std::vector<std::string> cols = {"t",        "U_S",        "U_B",
                                   "U",        "Q_dot",      "beta_star",
                                   "mutual_info", "clausius_rate"};
  for (int k = 0; k < system.dimension(); ++k)
    cols.push_back("p_k_" + std::to_string(k));
  for (double e : grid)
    cols.push_back("p_E_" + std::to_string(static_cast<long>(std::lround(e / delta_e))));
  return cols;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& tr,
                          const SystemSpec& system, double delta_e,
                          const BathSpec& bath,
                          const MeasurementKernel& kernel) {
  CsvWriter csv(path);
  csv.header(trajectory_columns(system, tr.grid, delta_e));
  for (const auto& pt : tr.points) {
    std::vector<double> row = {pt.t,
                               pt.obs.u_s,
                               pt.obs.u_b,
                               pt.obs.u_tot,
                               pt.obs.q_dot,
                               pt.obs.beta_star,
                               pt.obs.mutual_info,
                               pt.obs.clausius_rate};
    for (int k = 0; k < system.dimension(); ++k)
      row.push_back(pt.system_populations[k]);
    if (pt.bath_populations.size() > 0) {
      for (Eigen::Index j = 0; j < pt.bath_populations.size(); ++j)
        row.push_back(pt.bath_populations[j]);
    } else {
      // Level-2/3 descriptions carry a canonical bath surrogate.
      const Eigen::VectorXd pb =
          canonical_bath_populations(pt.obs.beta_star, tr.grid, bath, kernel);
      for (Eigen::Index j = 0; j < pb.size(); ++j) row.push_back(pb[j]);
    }
    csv.row(row);
  }
}

json run_spectrum(const Setup& s, const json& cfg, const fs::path& dir) {
  (void)cfg;
  if (s.bath.n_spins > 24)
    config_fail("/bath/n_spins", "spectrum scenario enumerates exactly; N <= 24");
  const auto spectrum = enumerate_spectrum(s.bath);
  CsvWriter csv(dir / "spectrum.csv");
  csv.header({"E", "count", "dos_prediction"});
  for (double e : s.kernel.grid) {
    const double count = volume_exact(e, s.kernel, s.bath);
    const double pred = volume(e, s.kernel, s.bath);
    if (count == 0.0 && pred < 1e-6) continue;
    csv.row({e, count, pred});
  }
  const auto rep = lindeberg_check(s.bath);
  return json{{"n_levels", spectrum.size()},
              {"sigma_n", s.bath.sigma_n()},
              {"ks_statistic", rep.ks_statistic},
              {"lindeberg_ratio", rep.ratio}};
}

json run_correlations(const Setup& s, const json& cfg, const fs::path& dir) {
  const json& jc = need(cfg, "correlation", "/");
  const double e = need_number(jc, "e", "/correlation");
  const double ep = need_number(jc, "e_prime", "/correlation");
  const double t_max = jc.value("t_max", 60.0);
  const int n = static_cast<int>(jc.value("n_points", 1200));
  CorrelationEvaluator corr(e, ep, s.bath, s.kernel);
  CsvWriter csv(dir / "correlation.csv");
  csv.header({"tau", "re", "im"});
  const double c0 = std::abs(corr(0.0));
  double c_tail = 0.0;
  for (int i = 0; i < n; ++i) {
    const double tau = t_max * i / (n - 1);
    const auto c = corr(tau);
    if (i >= n - n / 10) c_tail = std::max(c_tail, std::abs(c));
    csv.row({tau, c.real(), c.imag()});
  }
  return json{{"abs_at_zero", c0}, {"abs_tail_max", c_tail}};
}

json run_rates(const Setup& s, const json& cfg, const fs::path& dir, int threads) {
  if (!s.has_system || !s.has_spectral)
    config_fail("/", "rates scenario needs 'system' and 'spectral' sections");
  const auto table = build_rate_table(s.system, s.bath, s.kernel, s.spectral,
                                      s.mode, threads);
  table.write_csv((dir / "rate_table.csv").string());

  const json& jc = need(cfg, "correlation", "/");
  const double e = need_number(jc, "e", "/correlation");
  const double ep = need_number(jc, "e_prime", "/correlation");
  const double sigma_omega = s.bath.zeeman_dist.std;
  if (!(sigma_omega > 0.0))
    config_fail("/bath/zeeman_dist/std", "rates FT check needs a Zeeman spread");
  const double t_max = jc.value("ft_t_max", 20.0 / sigma_omega);
  const int n_samples = static_cast<int>(jc.value("ft_n_samples", 4096));
  const double w_lo = jc.value("omega_min", 0.5);
  const double w_hi = jc.value("omega_max", 1.5);
  const int n_w = static_cast<int>(jc.value("n_omega", 101));
  std::vector<double> omegas(static_cast<std::size_t>(n_w));
  for (int i = 0; i < n_w; ++i)
    omegas[static_cast<std::size_t>(i)] = w_lo + (w_hi - w_lo) * i / (n_w - 1);

  CorrelationEvaluator corr(e, ep, s.bath, s.kernel);
  const auto ft = gamma1_numeric_ft(corr, s.spectral.lambda, omegas, t_max,
                                    n_samples, threads);
  CsvWriter csv(dir / "rates_ft.csv");
  csv.header({"omega", "gamma1_analytic", "gamma1_ft"});
  double worst = 0.0;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const double analytic =
        gamma1(e, ep, omegas[i], s.spectral, s.bath, s.kernel);
    csv.row({omegas[i], analytic, ft[i]});
    if (analytic > 0.0)
      worst = std::max(worst, std::abs(ft[i] - analytic) / analytic);
  }
  return json{{"ft_t_max", t_max},
              {"ft_n_samples", n_samples},
              {"max_rel_deviation", worst}};
}

json run_evolve(const Setup& s, const json& cfg, const fs::path& dir, int threads) {
  if (!s.has_system || !s.has_spectral)
    config_fail("/", "evolve scenario needs 'system' and 'spectral' sections");
  const auto times = parse_times(cfg);
  const auto rm = build_rate_matrix(s.system, s.bath, s.kernel, s.spectral,
                                    s.mode, threads);
  const auto init = parse_initial(cfg, s.system, s.bath);
  const auto p0 = product_state(init.system_populations,
                                initial_bath_populations(init, rm.grid, s.bath, s.kernel),
                                rm.grid);
  const auto tr = evolve_emme(rm, p0, times, s.bath);
  write_trajectory_csv(dir / "trajectory_emme.csv", tr, s.system,
                       s.kernel.delta_e, s.bath, s.kernel);
  if (cfg.value("dump_joint", false)) {
    for (std::size_t i = 0; i < tr.joint_states.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "joint_%04zu.csv", i);
      CsvWriter csv(dir / name);
      std::vector<std::string> cols = {"k"};
      for (double e : rm.grid)
        cols.push_back("p_E_" + std::to_string(static_cast<long>(
                                    std::lround(e / s.kernel.delta_e))));
      csv.header(cols);
      for (int k = 0; k < s.system.dimension(); ++k) {
        std::vector<double> row = {static_cast<double>(k)};
        for (std::size_t ie = 0; ie < rm.grid.size(); ++ie)
          row.push_back(tr.joint_states[i][static_cast<Eigen::Index>(rm.index(k, ie))]);
        csv.row(row);
      }
    }
  }
  return json{{"exact_blocks", rm.exact_blocks},
              {"grid_bins", rm.grid.size()},
              {"final_mutual_info", tr.points.back().obs.mutual_info}};
}

json run_compare(const Setup& s, const json& cfg, const fs::path& dir, int threads) {
  if (!s.has_system || !s.has_spectral)
    config_fail("/", "compare scenario needs 'system' and 'spectral' sections");
  const auto times = parse_times(cfg);
  const auto rm = build_rate_matrix(s.system, s.bath, s.kernel, s.spectral,
                                    s.mode, threads);
  const auto init = parse_initial(cfg, s.system, s.bath);
  const auto p0 = product_state(init.system_populations,
                                initial_bath_populations(init, rm.grid, s.bath, s.kernel),
                                rm.grid);
  const auto tr_emme = evolve_emme(rm, p0, times, s.bath);

  const auto kg = build_kappa_grid(s.system, s.bath, s.kernel, s.spectral);
  const auto tr_star = evolve_bms_adaptive(s.system, init.beta0,
                                           init.system_populations, times, kg,
                                           s.bath, BetaUpdate::Resolve);
  const auto tr_ode = evolve_bms_adaptive(s.system, init.beta0,
                                          init.system_populations, times, kg,
                                          s.bath, BetaUpdate::Ode);
  const auto tr_fixed = evolve_bms_fixed(s.system, init.beta0,
                                         init.system_populations, times, kg,
                                         s.bath);

  write_trajectory_csv(dir / "trajectory_emme.csv", tr_emme, s.system,
                       s.kernel.delta_e, s.bath, s.kernel);
  write_trajectory_csv(dir / "trajectory_bms_star.csv", tr_star, s.system,
                       s.kernel.delta_e, s.bath, s.kernel);
  write_trajectory_csv(dir / "trajectory_bms_fixed.csv", tr_fixed, s.system,
                       s.kernel.delta_e, s.bath, s.kernel);

  CsvWriter csv(dir / "beta_star.csv");
  csv.header({"t", "beta_star_emme", "beta_star_resolve", "beta_star_ode"});
  double l1_star = 0.0, l1_fixed = 0.0, beta_gap = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    csv.row({times[i], tr_emme.points[i].obs.beta_star,
             tr_star.points[i].obs.beta_star, tr_ode.points[i].obs.beta_star});
    beta_gap = std::max(beta_gap,
                        std::abs(tr_star.points[i].obs.beta_star -
                                 tr_ode.points[i].obs.beta_star));
    const double w = (i == 0 || i + 1 == times.size()) ? 0.5 : 1.0;
    const double dt = times.size() > 1 ? times[1] - times[0] : 1.0;
    l1_star += w * dt *
               (tr_star.points[i].system_populations -
                tr_emme.points[i].system_populations)
                   .cwiseAbs()
                   .sum();
    l1_fixed += w * dt *
                (tr_fixed.points[i].system_populations -
                 tr_emme.points[i].system_populations)
                    .cwiseAbs()
                    .sum();
  }
  return json{{"beta_update_gap", beta_gap},
              {"l1_time_integrated_bms_star", l1_star},
              {"l1_time_integrated_bms_fixed", l1_fixed},
              {"exact_blocks", rm.exact_blocks}};
}

json run_stationary(const Setup& s, const json& cfg, const fs::path& dir, int threads) {
  if (!s.has_system || !s.has_spectral)
    config_fail("/", "stationary scenario needs 'system' and 'spectral' sections");
  const auto rm = build_rate_matrix(s.system, s.bath, s.kernel, s.spectral,
                                    s.mode, threads);
  const auto init = parse_initial(cfg, s.system, s.bath);
  const auto p0 = product_state(init.system_populations,
                                initial_bath_populations(init, rm.grid, s.bath, s.kernel),
                                rm.grid);
  const auto st = stationary_distribution(rm, p0);

  const double u_b_inf = [&] {
    double u = 0.0;
    const Eigen::VectorXd pb = st.distribution.bath_marginal();
    for (std::size_t j = 0; j < rm.grid.size(); ++j)
      u += rm.grid[j] * pb[static_cast<Eigen::Index>(j)];
    return u;
  }();
  const double beta_inf = solve_beta_star(u_b_inf, s.bath);

  auto gibbs = [&](double beta) {
    Eigen::VectorXd g(s.system.dimension());
    for (int k = 0; k < s.system.dimension(); ++k)
      g[k] = std::exp(-beta * s.system.level(k));
    g /= g.sum();
    return g;
  };

  const Eigen::VectorXd ps = st.distribution.system_marginal();
  const Eigen::VectorXd g_star = gibbs(beta_inf);
  const Eigen::VectorXd g_0 = gibbs(init.beta0);
  {
    CsvWriter csv(dir / "stationary_system.csv");
    csv.header({"k", "eps_k", "p_emme", "p_bms_beta_star", "p_bms_beta0"});
    for (int k = 0; k < s.system.dimension(); ++k)
      csv.row({static_cast<double>(k), s.system.level(k), ps[k], g_star[k], g_0[k]});
  }
  {
    const Eigen::VectorXd pb = st.distribution.bath_marginal();
    const Eigen::VectorXd c_star =
        canonical_bath_populations(beta_inf, rm.grid, s.bath, s.kernel);
    const Eigen::VectorXd c_0 =
        canonical_bath_populations(init.beta0, rm.grid, s.bath, s.kernel);
    CsvWriter csv(dir / "stationary_bath.csv");
    csv.header({"E", "p_emme", "p_canonical_beta_star", "p_canonical_beta0"});
    for (std::size_t j = 0; j < rm.grid.size(); ++j)
      csv.row({rm.grid[j], pb[static_cast<Eigen::Index>(j)],
               c_star[static_cast<Eigen::Index>(j)],
               c_0[static_cast<Eigen::Index>(j)]});
  }
  return json{{"beta_star_infinity", beta_inf},
              {"degenerate_shells", st.degenerate_shells.size()}};
}

json run_mutualinfo(const Setup& s, const json& cfg, const fs::path& dir, int threads) {
  if (!s.has_system || !s.has_spectral)
    config_fail("/", "mutualinfo scenario needs 'system' and 'spectral' sections");
  const auto times = parse_times(cfg);
  const auto rm = build_rate_matrix(s.system, s.bath, s.kernel, s.spectral,
                                    s.mode, threads);
  const auto init = parse_initial(cfg, s.system, s.bath);
  const auto p0 = product_state(init.system_populations,
                                initial_bath_populations(init, rm.grid, s.bath, s.kernel),
                                rm.grid);
  const auto tr = evolve_emme(rm, p0, times, s.bath);
  write_trajectory_csv(dir / "trajectory_emme.csv", tr, s.system,
                       s.kernel.delta_e, s.bath, s.kernel);
  CsvWriter csv(dir / "mutualinfo.csv");
  csv.header({"t", "mutual_info", "bound_log_ds"});
  const double bound = std::log(static_cast<double>(s.system.dimension()));
  double mi_max = 0.0;
  for (const auto& pt : tr.points) {
    csv.row({pt.t, pt.obs.mutual_info, bound});
    mi_max = std::max(mi_max, pt.obs.mutual_info);
  }
  return json{{"exact_blocks", rm.exact_blocks},
              {"mutual_info_max", mi_max},
              {"bound_log_ds", bound}};
}

json run_validate(const Setup& s, const json& cfg, const fs::path& dir, int threads) {
  if (!s.has_system || !s.has_spectral)
    config_fail("/", "validate scenario needs 'system' and 'spectral' sections");
  if (s.bath.n_spins > 8)
    config_fail("/bath/n_spins", "validate runs the exact oracle; N <= 8");
  const auto times = parse_times(cfg);
  const auto rm = build_rate_matrix(s.system, s.bath, s.kernel, s.spectral,
                                    RateMode::Oracle, threads);
  const auto init = parse_initial(cfg, s.system, s.bath);
  const auto p0 = product_state(init.system_populations,
                                initial_bath_populations(init, rm.grid, s.bath, s.kernel),
                                rm.grid);
  const auto tr = evolve_emme(rm, p0, times, s.bath);
  write_trajectory_csv(dir / "trajectory_emme.csv", tr, s.system,
                       s.kernel.delta_e, s.bath, s.kernel);

  ExactPropagator prop(s.system, s.bath, s.spectral.lambda);
  Eigen::MatrixXcd rho0;
  int k0 = 0;
  init.system_populations.maxCoeff(&k0);
  if (init.bath_type == "microcanonical")
    rho0 = microcanonical_product_state(k0, init.energy, s.system, s.bath, s.kernel);
  else
    rho0 = thermal_product_state(k0, init.beta0, s.system, s.bath);

  CsvWriter csv(dir / "validate.csv");
  csv.header({"t", "max_abs_dev", "l1_dev"});
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto exact = measure_joint(prop.evolve(rho0, times[i]), s.kernel, rm.grid);
    const Eigen::VectorXd diff = (exact.p - tr.joint_states[i]).cwiseAbs();
    worst = std::max(worst, diff.maxCoeff());
    csv.row({times[i], diff.maxCoeff(), diff.sum()});
  }
  const double band = 10.0 * s.spectral.lambda;
  return json{{"lambda", s.spectral.lambda},
              {"band_10_lambda", band},
              {"max_abs_deviation", worst},
              {"within_band", worst < band}};
}

}  // namespace

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    // nlohmann reports byte offsets; recover the line number for the
    // diagnostic.
    std::ifstream again(path);
    std::string text((std::istreambuf_iterator<char>(again)),
                     std::istreambuf_iterator<char>());
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError("JSON parse error in " + path + " at line " +
                      std::to_string(line) + ": " + e.what());
  }
}

json run_scenario(const json& config, const RunOptions& options) {
  const auto t_start = std::chrono::steady_clock::now();
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  const std::string scenario = need(config, "scenario", "/").get<std::string>();
  if (kScenarios.count(scenario) == 0)
    config_fail("/scenario", "unknown scenario '" + scenario + "'");

  std::uint64_t seed = config.value("seed", std::uint64_t{7});
  if (options.seed_override) seed = *options.seed_override;
  const std::string out_dir = !options.output_dir.empty()
                                  ? options.output_dir
                                  : config.value("output_dir", std::string("out"));
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output dir " + dir.string());

  const Setup s = parse_setup(config, seed);
  const int threads = std::max(1, options.threads);

  json result;
  if (scenario == "spectrum") result = run_spectrum(s, config, dir);
  else if (scenario == "correlations") result = run_correlations(s, config, dir);
  else if (scenario == "rates") result = run_rates(s, config, dir, threads);
  else if (scenario == "evolve") result = run_evolve(s, config, dir, threads);
  else if (scenario == "compare") result = run_compare(s, config, dir, threads);
  else if (scenario == "stationary") result = run_stationary(s, config, dir, threads);
  else if (scenario == "mutualinfo") result = run_mutualinfo(s, config, dir, threads);
  else result = run_validate(s, config, dir, threads);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  json meta{{"schema_version", 1},
            {"library_version", kVersion},
            {"scenario", scenario},
            {"seed", seed},
            {"threads", threads},
            {"prng", "mt19937_64+box-muller"},
            {"config", config},
            {"realized", {{"zeeman", s.bath.zeeman},
                          {"couplings", s.bath.couplings},
                          {"sigma_n", s.bath.sigma_n()}}},
            {"result", result},
            {"wall_time_s", wall}};
  std::ofstream out(dir / "metadata.json");
  out << meta.dump(2) << '\n';
  return meta;
}

}  // namespace finitebath
