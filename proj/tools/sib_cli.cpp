// sib: region, frontier and verification commands for the scalable Gaussian IB.

#include "sib/commands.hpp"
#include "sib/error.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> out;
  std::string token;
  std::istringstream ss(text);
  while (std::getline(ss, token, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < token.size() && std::isspace(static_cast<unsigned char>(token[used]))) ++used;
    if (used != token.size() || token.empty())
      throw sib::Error(sib::Errc::usage, "not a number list: '" + text + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sib::cli;

  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const sib::Error& e) {
    std::cerr << e.what() << '\n';
    return sib::exit_code(e.code());
  }

  CLI::App app{"Scalable vector Gaussian information bottleneck: regions, frontiers, oracles"};
  app.require_subcommand(1);

  std::string config;

  auto* validate = app.add_subcommand("validate", "Load a config and check the model invariants");
  validate->add_option("config", config, "Config file")->required();

  Fig2Options fig2;
  std::string panel = "a", sigma_list;
  double fixed_delta = 0.0;
  auto* fig2_cmd = app.add_subcommand("fig2", "Two-stage symmetric-rate tradeoff curves (CSV)");
  fig2_cmd->add_option("--panel", panel, "a: Delta_2 fixed, b: Delta_1 fixed")->check(CLI::IsMember({"a", "b"}));
  fig2_cmd->add_option("--sigma-si", sigma_list, "Comma-separated side-information noise levels")->required();
  fig2_cmd->add_option("--delta", fixed_delta, "Fixed relevance (default 2 for a, 1.5 for b)");
  fig2_cmd->add_option("--sigma-x", fig2.sigma_x, "Source variance")->capture_default_str();
  fig2_cmd->add_option("--sigma-0", fig2.sigma_0, "Observation noise variance")->capture_default_str();
  fig2_cmd->add_option("--gamma", fig2.gamma, "Correlation factor, Sigma_0t = gamma Sigma_t")->capture_default_str();
  fig2_cmd->add_option("--points", fig2.points, "Points per curve")->capture_default_str();
  fig2_cmd->add_option("--r-max", fig2.r_max, "Largest symmetric rate")->capture_default_str();
  fig2_cmd->add_option("--out", fig2.out_path, "Output CSV (default stdout)");
  fig2_cmd->add_option("--gnuplot", fig2.gnuplot_path, "Also write a gnuplot script");

  OracleOptions oracle;
  std::string omega_list;
  auto* oracle_cmd = app.add_subcommand("oracle", "Closed-form values vs explicit covariance and Monte Carlo (CSV)");
  oracle_cmd->add_option("config", oracle.config_path, "Config file")->required();
  oracle_cmd->add_option("--omega", omega_list, "Comma-separated scalar chain Omega_t = w_t I");
  oracle_cmd->add_option("--samples", oracle.samples, "Monte Carlo samples")->capture_default_str();
  oracle_cmd->add_option("--seed", oracle.seed, "Seed (default $SIB_SEED or 0)");
  oracle_cmd->add_option("--out", oracle.out_path, "Output CSV (default stdout)");

  DiscreteCheckOptions discrete;
  auto* discrete_cmd = app.add_subcommand("discrete-check", "Variational bound checks on random discrete instances");
  discrete_cmd->add_option("--seed", discrete.seed, "Seed (default $SIB_SEED or 0)");
  discrete_cmd->add_option("--n-instances", discrete.n_instances, "Instances")->capture_default_str();
  discrete_cmd->add_option("--q-draws", discrete.q_draws, "Random Q per instance")->capture_default_str();

  EquivalenceOptions equiv;
  auto* equiv_cmd = app.add_subcommand("equivalence", "Region formulas vs log-det oracle on random instances (CSV)");
  equiv_cmd->add_option("--seed", equiv.seed, "First seed (default $SIB_SEED or 0)");
  equiv_cmd->add_option("--n-instances", equiv.n_instances, "Instances")->capture_default_str();
  equiv_cmd->add_option("--out", equiv.out_path, "Output CSV (default stdout)");

  FisherOptions fisher;
  auto* fisher_cmd = app.add_subcommand("fisher", "Fisher information / MMSE identity residuals (CSV)");
  fisher_cmd->add_option("--m", fisher.dims, "Dimensions")->delimiter(',')->capture_default_str();
  fisher_cmd->add_option("--seeds", fisher.seeds, "Seeds per dimension")->capture_default_str();
  fisher_cmd->add_option("--seed", fisher.first_seed, "First seed (default $SIB_SEED or 0)");
  fisher_cmd->add_option("--out", fisher.out_path, "Output CSV (default stdout)");

  std::string region_omega;
  auto* region_cmd = app.add_subcommand("region", "Boundary point of the region for a chain (CSV)");
  region_cmd->add_option("config", config, "Config file")->required();
  region_cmd->add_option("--omega", region_omega, "Comma-separated scalar chain Omega_t = w_t I");

  MinRateOptions min_rate;
  std::string targets;
  auto* min_rate_cmd = app.add_subcommand("min-rate", "Minimal cumulative rates for relevance targets (CSV)");
  min_rate_cmd->add_option("config", min_rate.config_path, "Config file")->required();
  min_rate_cmd->add_option("--targets", targets, "Comma-separated Delta_t targets")->required();
  min_rate_cmd->add_option("--starts", min_rate.starts, "Solver starts")->capture_default_str();
  min_rate_cmd->add_option("--seed", min_rate.seed, "Solver seed (default $SIB_SEED or 0)");

  oracle.seed = discrete.seed = equiv.seed = fisher.first_seed = min_rate.seed = seed;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sib::exit_code(sib::Errc::usage);
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  try {
    if (*validate) return cmd_validate(config, out, err);
    if (*fig2_cmd) {
      fig2.panel = panel[0];
      fig2.sigma_si = split_numbers(sigma_list);
      if (fig2_cmd->count("--delta")) fig2.fixed_delta = fixed_delta;
      return cmd_fig2(fig2, out, err);
    }
    if (*oracle_cmd) {
      if (!omega_list.empty()) oracle.omegas = split_numbers(omega_list);
      return cmd_oracle(oracle, out, err);
    }
    if (*discrete_cmd) return cmd_discrete_check(discrete, out, err);
    if (*equiv_cmd) return cmd_equivalence(equiv, out, err);
    if (*fisher_cmd) return cmd_fisher(fisher, out, err);
    if (*region_cmd)
      return cmd_region(config, region_omega.empty() ? std::vector<double>{} : split_numbers(region_omega),
                        out, err);
    if (*min_rate_cmd) {
      min_rate.targets = split_numbers(targets);
      return cmd_min_rate(min_rate, out, err);
    }
  } catch (const sib::Error& e) {
    err << e.what() << '\n';
    return sib::exit_code(e.code());
  }
  return sib::exit_code(sib::Errc::usage);
}
