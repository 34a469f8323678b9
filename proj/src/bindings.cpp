// Python bindings for the main operations: bath sampling and ensembles,
// measurement kernels, correlation functions and rates, the master-equation
// hierarchy, stationary states and the exact small-bath oracle.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "finitebath/bath.hpp"
#include "finitebath/correlation.hpp"
#include "finitebath/dynamics.hpp"
#include "finitebath/kernel.hpp"
#include "finitebath/oracle.hpp"
#include "finitebath/scenario.hpp"
#include "finitebath/system.hpp"
#include "finitebath/version.hpp"

namespace py = pybind11;
using namespace finitebath;

namespace {

MeasurementKernel make_kernel(const std::string& kind, double delta_e,
                              double e_max) {
  if (kind == "indicator") return MeasurementKernel::indicator(delta_e, e_max);
  if (kind == "gaussian") return MeasurementKernel::gaussian(delta_e, e_max);
  throw std::invalid_argument("kernel kind must be 'indicator' or 'gaussian'");
}

RateMode parse_mode(const std::string& mode) {
  if (mode == "continuum") return RateMode::Continuum;
  if (mode == "oracle") return RateMode::Oracle;
  throw std::invalid_argument("rate mode must be 'continuum' or 'oracle'");
}

py::dict trajectory_to_dict(const Trajectory& tr) {
  py::dict d;
  const std::size_t n = tr.points.size();
  Eigen::VectorXd t(n), u_s(n), u_b(n), u(n), q(n), bs(n), mi(n), cl(n);
  py::list sys_pops, bath_pops;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pt = tr.points[i];
    t[static_cast<Eigen::Index>(i)] = pt.t;
    u_s[static_cast<Eigen::Index>(i)] = pt.obs.u_s;
    u_b[static_cast<Eigen::Index>(i)] = pt.obs.u_b;
    u[static_cast<Eigen::Index>(i)] = pt.obs.u_tot;
    q[static_cast<Eigen::Index>(i)] = pt.obs.q_dot;
    bs[static_cast<Eigen::Index>(i)] = pt.obs.beta_star;
    mi[static_cast<Eigen::Index>(i)] = pt.obs.mutual_info;
    cl[static_cast<Eigen::Index>(i)] = pt.obs.clausius_rate;
    sys_pops.append(pt.system_populations);
    bath_pops.append(pt.bath_populations);
  }
  d["t"] = t;
  d["u_s"] = u_s;
  d["u_b"] = u_b;
  d["u_tot"] = u;
  d["q_dot"] = q;
  d["beta_star"] = bs;
  d["mutual_info"] = mi;
  d["clausius_rate"] = cl;
  d["system_populations"] = sys_pops;
  d["bath_populations"] = bath_pops;
  d["grid"] = tr.grid;
  py::list joints;
  for (const auto& j : tr.joint_states) joints.append(j);
  d["joint_states"] = joints;
  return d;
}

}  // namespace

PYBIND11_MODULE(_finitebath, m) {
  m.doc() = "Master-equation hierarchy for open systems coupled to finite spin baths";
  m.attr("__version__") = kVersion;

  py::class_<ZeemanDistribution>(m, "ZeemanDistribution")
      .def(py::init<double, double>(), py::arg("mean"), py::arg("std"))
      .def_readwrite("mean", &ZeemanDistribution::mean)
      .def_readwrite("std", &ZeemanDistribution::std);

  py::class_<BathSpec>(m, "BathSpec")
      .def_readonly("n_spins", &BathSpec::n_spins)
      .def_readonly("zeeman", &BathSpec::zeeman)
      .def_readonly("couplings", &BathSpec::couplings)
      .def_readonly("seed", &BathSpec::seed)
      .def_property_readonly("sigma_n", &BathSpec::sigma_n)
      .def_property_readonly("max_total_energy", &BathSpec::max_total_energy)
      .def("to_json", [](const BathSpec& b) { return b.to_json().dump(); })
      .def_static("from_json", [](const std::string& s) {
        return BathSpec::from_json(nlohmann::json::parse(s));
      });

  m.def("sample_bath", &sample_bath, py::arg("n_spins"), py::arg("dist"),
        py::arg("coupling") = 1.0, py::arg("seed") = 7);
  m.def("enumerate_spectrum", &enumerate_spectrum);

  py::class_<MeasurementKernel>(m, "MeasurementKernel")
      .def(py::init(&make_kernel), py::arg("kind"), py::arg("delta_e"),
           py::arg("e_max"))
      .def_readonly("delta_e", &MeasurementKernel::delta_e)
      .def_readonly("grid", &MeasurementKernel::grid)
      .def("weight", &MeasurementKernel::weight, py::arg("e_out"), py::arg("e_in"))
      .def("bin_index", &MeasurementKernel::bin_index)
      .def("bias", py::overload_cast<>(&MeasurementKernel::bias, py::const_))
      .def("bias",
           py::overload_cast<const std::vector<double>&>(
               &MeasurementKernel::bias, py::const_),
           py::arg("probes"));

  m.def("volume", &volume, py::arg("e"), py::arg("kernel"), py::arg("bath"));
  m.def("volume_exact", &volume_exact, py::arg("e"), py::arg("kernel"), py::arg("bath"));
  m.def("log_volume", &log_volume);
  m.def("boltzmann_entropy", &boltzmann_entropy);
  m.def("boltzmann_beta", &boltzmann_beta);
  m.def("boltzmann_beta_linear", &boltzmann_beta_linear);
  m.def("microcanonical_heat_capacity", &microcanonical_heat_capacity);
  m.def("canonical_energy", &canonical_energy, py::arg("beta"), py::arg("bath"));
  m.def("canonical_energy_grid", &canonical_energy_grid);
  m.def("log_partition", &log_partition);
  m.def("heat_capacity", &heat_capacity);
  m.def("solve_beta_star", &solve_beta_star, py::arg("target_energy"), py::arg("bath"));
  m.def("lindeberg_check", [](const BathSpec& b) {
    const auto rep = lindeberg_check(b);
    py::dict d;
    d["ratio"] = rep.ratio;
    d["ks_statistic"] = rep.ks_statistic;
    return d;
  });

  py::class_<SystemSpec>(m, "SystemSpec")
      .def(py::init([](double spin, double omega_s) {
             SystemSpec s{spin, omega_s};
             s.validate();
             return s;
           }),
           py::arg("spin"), py::arg("omega_s"))
      .def_readonly("spin", &SystemSpec::spin)
      .def_readonly("omega_s", &SystemSpec::omega_s)
      .def_property_readonly("dimension", &SystemSpec::dimension)
      .def("level", &SystemSpec::level);
  m.def("coupling_element", &coupling_element);
  m.def("bohr_frequencies", [](const SystemSpec& s) {
    py::list out;
    for (const auto& g : bohr_frequencies(s)) {
      py::dict d;
      d["omega"] = g.omega;
      d["transitions"] = g.transitions;
      out.append(d);
    }
    return out;
  });

  py::class_<SpectralDensity>(m, "SpectralDensity")
      .def_readonly("lambda_", &SpectralDensity::lambda)
      .def_readonly("c0", &SpectralDensity::c0)
      .def("j_value", &SpectralDensity::j_value);
  m.def("make_spectral_density", &make_spectral_density, py::arg("bath"),
        py::arg("lambda_"), py::arg("c0") = 1.0, py::arg("continuum") = true);

  m.def("f_exact", &f_exact, py::arg("e"), py::arg("e_prime"), py::arg("r"),
        py::arg("bath"), py::arg("kernel"));
  m.def("f_approx", &f_approx, py::arg("e"), py::arg("e_prime"),
        py::arg("omega"), py::arg("bath"), py::arg("kernel"));
  m.def(
      "gamma1",
      [](double e, double ep, double w, const SpectralDensity& s,
         const BathSpec& b, const MeasurementKernel& k, const std::string& mode) {
        return gamma1(e, ep, w, s, b, k, parse_mode(mode));
      },
      py::arg("e"), py::arg("e_prime"), py::arg("omega"), py::arg("spectral"),
      py::arg("bath"), py::arg("kernel"), py::arg("mode") = "continuum");
  m.def(
      "kappa",
      [](double e, double w, const SpectralDensity& s, const BathSpec& b,
         const MeasurementKernel& k, const std::string& mode) {
        return kappa(e, w, s, b, k, parse_mode(mode));
      },
      py::arg("e"), py::arg("omega"), py::arg("spectral"), py::arg("bath"),
      py::arg("kernel"), py::arg("mode") = "continuum");
  m.def("kappa_beta", &kappa_beta);
  m.def("kappa_p_averaged", &kappa_p_averaged);
  m.def("correlation_time_domain", [](double tau, double e, double ep,
                                      const BathSpec& b,
                                      const MeasurementKernel& k) {
    const auto c = correlation_time_domain(tau, e, ep, b, k);
    return py::make_tuple(c.real(), c.imag());
  });
  m.def("kms_residual", &kms_residual);
  m.def("reduced_microcanonical_state",
        [](int r, double e, const BathSpec& b, const MeasurementKernel& k) {
          const auto st = reduced_microcanonical_state(r, e, b, k);
          py::dict d;
          d["p_exact"] = std::vector<double>{st.p_exact[0], st.p_exact[1]};
          d["p_canonical"] =
              std::vector<double>{st.p_canonical[0], st.p_canonical[1]};
          return d;
        });

  py::class_<RateMatrix>(m, "RateMatrix")
      .def_readonly("grid", &RateMatrix::grid)
      .def_readonly("exact_blocks", &RateMatrix::exact_blocks)
      .def_readonly("shell_key", &RateMatrix::shell_key)
      .def_property_readonly("matrix",
                             [](const RateMatrix& rm) { return rm.lambda; });
  m.def(
      "build_rate_matrix",
      [](const SystemSpec& sys, const BathSpec& b, const MeasurementKernel& k,
         const SpectralDensity& s, const std::string& mode, int threads) {
        return build_rate_matrix(sys, b, k, s, parse_mode(mode), threads);
      },
      py::arg("system"), py::arg("bath"), py::arg("kernel"), py::arg("spectral"),
      py::arg("mode") = "continuum", py::arg("threads") = 1);

  py::class_<JointDistribution>(m, "JointDistribution")
      .def_readonly("grid", &JointDistribution::grid)
      .def_readonly("d_s", &JointDistribution::d_s)
      .def_property_readonly("p", [](const JointDistribution& j) { return j.p; })
      .def("system_marginal", &JointDistribution::system_marginal)
      .def("bath_marginal", &JointDistribution::bath_marginal)
      .def("total", &JointDistribution::total);
  m.def("canonical_bath_populations", &canonical_bath_populations);
  m.def("product_state", &product_state);
  m.def("mutual_information", &mutual_information);

  m.def(
      "evolve_emme",
      [](const RateMatrix& rm, const JointDistribution& p0,
         const std::vector<double>& times, const BathSpec& bath,
         const std::string& method) {
        const auto tr = evolve_emme(rm, p0, times, bath,
                                    method == "rk45" ? EvolveMethod::Rk45
                                                     : EvolveMethod::Expm);
        return trajectory_to_dict(tr);
      },
      py::arg("rate_matrix"), py::arg("p0"), py::arg("times"), py::arg("bath"),
      py::arg("method") = "expm");

  py::class_<KappaGrid>(m, "KappaGrid")
      .def_readonly("grid", &KappaGrid::grid)
      .def_readonly("kappa_pos", &KappaGrid::kappa_pos)
      .def_readonly("kappa_neg", &KappaGrid::kappa_neg)
      .def("average_beta", &KappaGrid::average_beta);
  m.def("build_kappa_grid", &build_kappa_grid);

  m.def(
      "evolve_bms_fixed",
      [](const SystemSpec& sys, double beta0, const Eigen::VectorXd& p0,
         const std::vector<double>& times, const KappaGrid& kg,
         const BathSpec& bath) {
        return trajectory_to_dict(
            evolve_bms_fixed(sys, beta0, p0, times, kg, bath));
      },
      py::arg("system"), py::arg("beta0"), py::arg("p_s0"), py::arg("times"),
      py::arg("kappa_grid"), py::arg("bath"));
  m.def(
      "evolve_bms_adaptive",
      [](const SystemSpec& sys, double beta0, const Eigen::VectorXd& p0,
         const std::vector<double>& times, const KappaGrid& kg,
         const BathSpec& bath, const std::string& update) {
        return trajectory_to_dict(evolve_bms_adaptive(
            sys, beta0, p0, times, kg, bath,
            update == "ode" ? BetaUpdate::Ode : BetaUpdate::Resolve));
      },
      py::arg("system"), py::arg("beta0"), py::arg("p_s0"), py::arg("times"),
      py::arg("kappa_grid"), py::arg("bath"), py::arg("update") = "resolve");

  m.def("stationary_distribution",
        [](const RateMatrix& rm, const JointDistribution& p0) {
          auto res = stationary_distribution(rm, p0);
          py::dict d;
          d["distribution"] = res.distribution;
          d["degenerate_shells"] = res.degenerate_shells;
          return d;
        });

  // Exact oracle (tiny instances).
  py::class_<ExactPropagator>(m, "ExactPropagator")
      .def(py::init<const SystemSpec&, const BathSpec&, double>(),
           py::arg("system"), py::arg("bath"), py::arg("lambda_"))
      .def("measured_joint",
           [](const ExactPropagator& prop, const Eigen::MatrixXcd& rho0,
              double t, const MeasurementKernel& k,
              const std::vector<double>& grid) {
             return measure_joint(prop.evolve(rho0, t), k, grid);
           });
  m.def("microcanonical_product_state", &microcanonical_product_state);
  m.def("thermal_product_state", &thermal_product_state);

  m.def(
      "run_scenario",
      [](const std::string& config_json, const std::string& output_dir,
         int threads) {
        RunOptions opt;
        opt.output_dir = output_dir;
        opt.threads = threads;
        return run_scenario(nlohmann::json::parse(config_json), opt).dump();
      },
      py::arg("config_json"), py::arg("output_dir") = "", py::arg("threads") = 1);

  py::register_exception<ConfigError>(m, "ConfigError");
}
