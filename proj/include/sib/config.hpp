#pragma once

// Run configuration: one `key = value` per line, `#` starts a comment.
//
//   model.m = 1                      # dimension (default 1)
//   model.T = 2                      # number of stages
//   model.sigma_x = 3                # scalar s -> s*I, or m*m row-major values
//   model.sigma_0 = 1, 0.2; 0.2, 1   # ';' may separate rows
//   model.stages[1].sigma_t = ...
//   model.stages[1].sigma_0t = ...   # or model.stages[1].gamma = g (sigma_0t = g*sigma_t)
//   model.sigma_si = 2               # shorthand: sigma_t = s*I for every stage (or one value per stage)
//   model.gamma = 0.25               # shorthand: default gamma for every stage
//   chain.omegas[1] = 0.555          # optional Omega chain, same matrix syntax
//   run.<name> = <value>             # free-form command parameters

#include "sib/model.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace sib {

struct RunConfig {
  ModelSpec spec;
  std::optional<OmegaChain> chain;
  std::map<std::string, std::string> run;

  /// run.<name> as a positive number, or `fallback` when absent.
  /// Throws Error(Errc::parse) when present but not a positive number.
  double run_positive(const std::string& name, double fallback) const;
};

/// Throws Error(Errc::parse) with line number and key on malformed input.
/// The model is not validated here (see validate_model).
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Parses the matrix syntax above for an m x m matrix.
Matrix parse_matrix(const std::string& text, Index m);

}  // namespace sib
