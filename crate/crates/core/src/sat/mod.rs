// SPDX-License-Identifier: Apache-2.0

//! CNF construction, a built-in CDCL solver, an external-solver fallback and
//! miter equivalence checks.

mod cnf;
mod encode;
mod equiv;
mod external;
mod solver;

pub use cnf::{ClauseSink, CnfFormula, Lit, Var};
pub use encode::{
    blocking_clause, conjoin, encode_distance_ball, encode_pit_offset, encode_search, mismatch_lit,
    mismatch_lits, solve, solve_with_budget, IncrementalSolve, SatOutcome, SearchSpace, SeqCounter,
};
pub use equiv::{
    check_equivalence, check_equivalence_with_budget, check_outputs_equivalent, encode_miter,
    Equivalence,
};
pub use external::{parse_output, ExternalSolver, SOLVER_ENV};
pub use solver::{SolveResult, Solver, SolverStats};
