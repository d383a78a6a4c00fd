#include "sib/error.hpp"

namespace sib {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::usage: return "UsageError";
    case Errc::parse: return "ParseError";
    case Errc::validation: return "ValidationError";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::infeasible_chain: return "InfeasibleChain";
    case Errc::relevance_exceeds_bound: return "RelevanceExceedsBound";
    case Errc::delta_infeasible: return "DeltaInfeasible";
    case Errc::infeasible_pair: return "InfeasiblePair";
    case Errc::delta1_infeasible: return "Delta1Infeasible";
    case Errc::delta2_infeasible: return "Delta2Infeasible";
    case Errc::empty_range: return "EmptyRange";
    case Errc::sigma_out_of_range: return "SigmaOutOfRange";
    case Errc::target_infeasible: return "TargetInfeasible";
    case Errc::non_convergence: return "NonConvergence";
    case Errc::chain_not_strictly_interior: return "ChainNotStrictlyInterior";
    case Errc::descriptions_not_degraded: return "DescriptionsNotDegraded";
    case Errc::singular_conditioning: return "SingularConditioning";
    case Errc::verification_failed: return "VerificationFailed";
    case Errc::internal: return "InternalError";
  }
  return "UnknownError";
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::usage:
    case Errc::parse:
      return 1;
    case Errc::validation:
    case Errc::dimension_mismatch:
      return 2;
    case Errc::verification_failed:
    case Errc::internal:
      return 4;
    default:
      return 3;
  }
}

}  // namespace sib
