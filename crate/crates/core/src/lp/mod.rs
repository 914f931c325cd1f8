//! Exact rational linear programming: the basic relaxation of a CSP instance,
//! a deterministic simplex solver, half-integrality checks, and randomized
//! rounding for the directed-cut and 2SAT families.

mod basic;
mod simplex;

pub use basic::{
    build_basic_lp, check_half_integral, lp_value, lp_value_components, round_dicut, round_2sat,
    solve_basic_lp, verify_basic_solution, LpSolution, RoundingOutcome,
};
pub use simplex::{solve_lp_exact, SimplexSolution};

use crate::ratio::Rational;
use std::fmt;

/// A linear program in equality form: maximize `objective . x` subject to
/// `A x = b`, `x >= 0`. Rows and the objective are sparse (index, coefficient)
/// lists; repeated indices accumulate.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<(usize, Rational)>,
    pub eq_constraints: Vec<(Vec<(usize, Rational)>, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    Unbounded,
    BadIndex(String),
    NotOptimal(String),
    NotHalfIntegral,
    WrongFamily(String),
    EmptyInstance,
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::Infeasible => write!(f, "linear program is infeasible"),
            LpError::Unbounded => write!(f, "linear program is unbounded"),
            LpError::BadIndex(msg) => write!(f, "bad index: {msg}"),
            LpError::NotOptimal(msg) => write!(f, "solution is not optimal: {msg}"),
            LpError::NotHalfIntegral => {
                write!(f, "solution has coordinates outside {{0, 1/2, 1}}")
            }
            LpError::WrongFamily(msg) => write!(f, "unsupported predicate family: {msg}"),
            LpError::EmptyInstance => write!(f, "instance has no constraints"),
        }
    }
}

impl std::error::Error for LpError {}

impl LinearProgram {
    pub fn validate(&self) -> Result<(), LpError> {
        for (j, _) in &self.objective {
            if *j >= self.num_vars {
                return Err(LpError::BadIndex(format!("objective index {j}")));
            }
        }
        for (r, (row, _)) in self.eq_constraints.iter().enumerate() {
            for (j, _) in row {
                if *j >= self.num_vars {
                    return Err(LpError::BadIndex(format!("row {r} index {j}")));
                }
            }
        }
        Ok(())
    }
}
