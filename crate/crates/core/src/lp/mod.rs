//! Linear-programming machinery: a small simplex solver, witness matrices
//! for equimajorization, and independent oracles for the Type II error.

mod oracles;
mod simplex;
mod witness;

pub use oracles::{bruteforce_type2_error, dual_certificate, DualCertificate, BRUTEFORCE_MAX_DIM};
pub use simplex::{solve_lp, solve_lp_exact, LpOutcome, LpProblem, LP_TOL, MAX_ITERATIONS, MAX_VARIABLES};
pub use witness::{find_witness, verify_witness, StochasticWitness, CLAMP_TOL, WITNESS_TOL};
