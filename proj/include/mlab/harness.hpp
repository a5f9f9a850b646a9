#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "mlab/config.hpp"
#include "mlab/morawetz.hpp"

namespace mlab {

// (int_t ||P_k u||_{L^q}^p dt)^{1/p}; p = inf gives the sup over slices.
// Requires 2/p + n/q = n/2, p >= 2 and finite q.
double strichartz_norm(const Trajectory& traj, double p, double q, std::optional<int> shell = {});
bool is_admissible_pair(int n, double p, double q);

struct BilinearReport {
  double norm = 0.0;   // ||u conj(v^{x0})||_{L^2_{t,x}}
  double ratio = 0.0;  // norm / (mu^{(n-1)/2} lambda^{-1/2} ||u(0)|| ||v(0)||)
};
// lambda and mu are the frequency magnitudes of u and v; shells, when given,
// project both trajectories first.
BilinearReport bilinear_L2(const Trajectory& u, const Trajectory& v, const RVec& x0, double lambda,
                           double mu, std::optional<int> ku = {}, std::optional<int> kv = {});

// d_k^2 = sup_{m} ||P_m u(0)||^2 + sup_{m,l,x0} ||P_m u f_l^{x0}||_{L^1_{t,x}}, with m, l over
// k-1, k, k+1 and f_l the shell-l paradifferential source. x0 = 0 is always included.
double d_lambda(const Trajectory& traj, int k, const std::vector<RVec>& x0s);

Field make_data(const ExperimentConfig& c, std::uint64_t seed, bool second = false);
Trajectory make_trajectory(const ExperimentConfig& c, const Field& u0);

// Experiments: coercivity, noncoercive-demo, morawetz-audit, bilinear-transversal,
// envelope-propagation, resonance-atlas, strichartz-probe.
const std::vector<std::string>& experiment_names();

struct ExperimentResult {
  int exit_code = 0;  // 0 ok, 1 invariant failure
  nlohmann::json summary;
  std::vector<std::string> failures;
  std::map<std::string, std::string> csv;  // file name -> contents
};

// Pure computation; throws ConfigError for an unknown experiment.
ExperimentResult compute_experiment(const ExperimentConfig& c);
// Runs and writes CSVs, summary.json and manifest.json under c.output.
ExperimentResult run_experiment(const ExperimentConfig& c, const std::string& config_text = "");

// Worker count from MLAB_THREADS, defaulting to the hardware concurrency.
int worker_count();
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace mlab
