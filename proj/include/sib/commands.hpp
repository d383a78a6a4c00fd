#pragma once

// Command implementations behind the `sib` executable. Each returns the
// process exit status and writes only to the given streams / output paths,
// so tests can drive them directly.

#include "sib/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sib::cli {

/// Seed used when none is given on the command line: $SIB_SEED if set, else 0.
/// Throws Error(Errc::usage) when SIB_SEED is not an unsigned integer.
std::uint64_t default_seed();

/// Runs `body`, mapping sib::Error to its exit code with the message on `err`.
template <class F>
int guarded(std::ostream& err, F&& body);

int cmd_validate(const std::string& config_path, std::ostream& out, std::ostream& err);

struct Fig2Options {
  char panel = 'a';                  // a: Delta_2 fixed, b: Delta_1 fixed
  std::vector<double> sigma_si;      // one curve per value
  std::optional<double> fixed_delta; // default 2 (panel a) or 1.5 (panel b)
  std::optional<double> paired_delta; // other stage's target for the range check (1.5 / 2)
  double sigma_x = 3.0;
  double sigma_0 = 1.0;
  double gamma = 0.25;
  std::size_t points = 200;
  double r_max = 4.0;
  std::string out_path;              // "-" or empty: stdout
  std::string gnuplot_path;          // optional plot script
};
/// CSV `sigma_si,R,delta`. Throws Errc::sigma_out_of_range and frontier errors.
void write_fig2_csv(const Fig2Options& opt, std::ostream& csv);
int cmd_fig2(const Fig2Options& opt, std::ostream& out, std::ostream& err);

struct OracleOptions {
  std::string config_path;
  std::vector<double> omegas;  // scalar shorthand: Omega_t = w_t * I (overrides config chain)
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 0;
  std::string out_path;
};
/// CSV `quantity,theorem,exact,mc,stderr,pass`. Returns true when all rows pass.
bool write_oracle_csv(const RunConfig& cfg, const OracleOptions& opt, std::ostream& csv,
                      std::ostream& err);
int cmd_oracle(const OracleOptions& opt, std::ostream& out, std::ostream& err);

struct DiscreteCheckOptions {
  std::uint64_t seed = 0;
  int n_instances = 100;
  int q_draws = 1000;
};
int cmd_discrete_check(const DiscreteCheckOptions& opt, std::ostream& out, std::ostream& err);

struct EquivalenceOptions {
  std::uint64_t seed = 0;
  int n_instances = 100;
  std::string out_path;
};
/// CSV `instance,m,T,stage,quantity,theorem,exact,abs_error,tolerance,pass`.
int cmd_equivalence(const EquivalenceOptions& opt, std::ostream& out, std::ostream& err);

struct FisherOptions {
  std::vector<int> dims{1, 2, 3};
  int seeds = 20;
  std::uint64_t first_seed = 0;
  std::string out_path;
};
/// CSV `instance,m,seed,fisher_mmse,sandwich,error_cov,estimator,uninverted_p2,tolerance,pass`.
int cmd_fisher(const FisherOptions& opt, std::ostream& out, std::ostream& err);

/// Region boundary point for the config's chain: CSV `stage,delta_bound,cum_rate`.
int cmd_region(const std::string& config_path, const std::vector<double>& omegas, std::ostream& out,
               std::ostream& err);

struct MinRateOptions {
  std::string config_path;
  std::vector<double> targets;
  int starts = 8;
  std::uint64_t seed = 0;
};
/// Vector boundary solver: CSV `stage,target,relevance,cum_rate,stage_rate`.
int cmd_min_rate(const MinRateOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace sib::cli

#include "sib/error.hpp"

#include <ostream>

template <class F>
int sib::cli::guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code(e.code());
  }
}
