#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sib {

enum class Errc {
  usage,
  parse,
  validation,
  dimension_mismatch,
  infeasible_chain,
  relevance_exceeds_bound,
  delta_infeasible,
  infeasible_pair,
  delta1_infeasible,
  delta2_infeasible,
  empty_range,
  sigma_out_of_range,
  target_infeasible,
  non_convergence,
  chain_not_strictly_interior,
  descriptions_not_degraded,
  singular_conditioning,
  verification_failed,
  internal,
};

/// Name used in reports, e.g. "InfeasibleChain".
std::string_view to_string(Errc code);

/// Process exit status for a failure of this kind:
/// 1 usage/parse, 2 validation, 3 infeasibility, 4 verification failure.
int exit_code(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sib
