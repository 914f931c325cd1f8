//! The basic LP relaxation of a CSP instance and operations on its solutions.
//!
//! For an instance with m constraints over variables V and alphabet S, the
//! program has one variable `x[v][s]` per (variable, symbol) and one variable
//! `z[i][b]` per (constraint, symbol tuple), and reads
//!
//! ```text
//! maximize   (1/m) * sum_i sum_b f_i(b) z[i][b]
//! subject to sum_s x[v][s] = 1                      for every v
//!            sum_{b : b_j = s} z[i][b] = x[v_ij][s]  for every i, j, s
//!            x, z >= 0
//! ```
//!
//! The uniform point is always feasible, the objective lies in [0, 1], and
//! any integral assignment induces a feasible point of the same value, so the
//! optimum upper-bounds the integral value.

use super::simplex::solve_lp_exact;
use super::{LinearProgram, LpError};
use crate::csp::{Assignment, Instance};
use crate::ratio::{rat, rat_usize, Rational};
use crate::rng::Rng;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// A feasible (normally optimal) point of the basic LP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpSolution {
    /// `x[v][s]`: label distribution per variable.
    #[serde(with = "crate::ratio::vec2_serde")]
    pub x: Vec<Vec<Rational>>,
    /// `z[i][t]`: local assignment distribution per constraint, indexed by
    /// tuple index.
    #[serde(with = "crate::ratio::vec2_serde")]
    pub z: Vec<Vec<Rational>>,
    #[serde(with = "crate::ratio")]
    pub objective_value: Rational,
}

impl LpSolution {
    /// LP mass each constraint puts on its satisfying assignments.
    pub fn constraint_mass(&self, instance: &Instance, i: usize) -> Rational {
        let fam = instance.family();
        let pred = instance.constraints()[i].predicate;
        let mut mass = Rational::zero();
        for (t, &sat) in fam.table(pred).iter().enumerate() {
            if sat {
                mass = &mass + &self.z[i][t];
            }
        }
        mass
    }
}

/// Variable layout of the basic LP for an instance.
pub(crate) struct BasicLayout {
    sigma: usize,
    tuples: usize,
    num_x: usize,
}

impl BasicLayout {
    pub(crate) fn new(instance: &Instance) -> Self {
        let sigma = instance.family().alphabet_size();
        let tuples = instance.family().tuple_count();
        BasicLayout { sigma, tuples, num_x: instance.num_vars() * sigma }
    }

    pub(crate) fn x(&self, v: usize, s: usize) -> usize {
        v * self.sigma + s
    }

    pub(crate) fn z(&self, i: usize, t: usize) -> usize {
        self.num_x + i * self.tuples + t
    }
}

/// Builds the basic LP of a nonempty instance.
pub fn build_basic_lp(instance: &Instance) -> LinearProgram {
    assert!(!instance.is_empty(), "basic LP of an empty instance");
    let fam = instance.family();
    let k = fam.arity();
    let sigma = fam.alphabet_size();
    let tuples = fam.tuple_count();
    let m = instance.num_constraints();
    let layout = BasicLayout::new(instance);
    let num_vars = layout.num_x + m * tuples;

    let inv_m = Rational::new(BigInt::one(), BigInt::from(m));
    let mut objective = Vec::new();
    for (i, c) in instance.constraints().iter().enumerate() {
        for (t, &sat) in fam.table(c.predicate).iter().enumerate() {
            if sat {
                objective.push((layout.z(i, t), inv_m.clone()));
            }
        }
    }

    let mut eq_constraints = Vec::new();
    for v in 0..instance.num_vars() {
        let row: Vec<(usize, Rational)> =
            (0..sigma).map(|s| (layout.x(v, s), Rational::one())).collect();
        eq_constraints.push((row, Rational::one()));
    }
    // Marginal consistency: sum of z over tuples with b_j = s equals x[v][s].
    for (i, c) in instance.constraints().iter().enumerate() {
        for j in 0..k {
            for s in 0..sigma {
                let mut row = Vec::new();
                for t in 0..tuples {
                    if fam.tuple_at(t)[j] == s {
                        row.push((layout.z(i, t), Rational::one()));
                    }
                }
                row.push((layout.x(c.scope[j], s), -Rational::one()));
                eq_constraints.push((row, Rational::zero()));
            }
        }
    }

    LinearProgram { num_vars, objective, eq_constraints }
}

/// Builds and solves the basic LP, returning the unpacked optimum.
pub fn solve_basic_lp(instance: &Instance) -> Result<LpSolution, LpError> {
    if instance.is_empty() {
        return Err(LpError::EmptyInstance);
    }
    let lp = build_basic_lp(instance);
    let sol = solve_lp_exact(&lp)?;
    let layout = BasicLayout::new(instance);
    let sigma = instance.family().alphabet_size();
    let tuples = instance.family().tuple_count();
    let x = (0..instance.num_vars())
        .map(|v| (0..sigma).map(|s| sol.values[layout.x(v, s)].clone()).collect())
        .collect();
    let z = (0..instance.num_constraints())
        .map(|i| (0..tuples).map(|t| sol.values[layout.z(i, t)].clone()).collect())
        .collect();
    Ok(LpSolution { x, z, objective_value: sol.objective_value })
}

/// The optimal LP value of the instance.
pub fn lp_value(instance: &Instance) -> Result<Rational, LpError> {
    Ok(solve_basic_lp(instance)?.objective_value)
}

/// Same value as [`lp_value`], computed per connected component of the
/// constraint hypergraph. Much faster on sparse blow-ups; the two paths are
/// cross-checked in tests.
pub fn lp_value_components(instance: &Instance) -> Result<Rational, LpError> {
    if instance.is_empty() {
        return Err(LpError::EmptyInstance);
    }
    let n = instance.num_vars();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for c in instance.constraints() {
        let r = find(&mut parent, c.scope[0]);
        for &v in &c.scope[1..] {
            let rv = find(&mut parent, v);
            parent[rv] = r;
        }
    }
    let mut comp_cons: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, c) in instance.constraints().iter().enumerate() {
        comp_cons[find(&mut parent, c.scope[0])].push(i);
    }

    let mut satisfied_mass = Rational::zero();
    for cons in comp_cons.iter().filter(|c| !c.is_empty()) {
        // Reindex the component's variables compactly.
        let mut var_map = std::collections::BTreeMap::new();
        for &i in cons {
            for &v in &instance.constraints()[i].scope {
                let next = var_map.len();
                var_map.entry(v).or_insert(next);
            }
        }
        let sub_cons: Vec<crate::csp::Constraint> = cons
            .iter()
            .map(|&i| {
                let c = &instance.constraints()[i];
                crate::csp::Constraint {
                    scope: c.scope.iter().map(|v| var_map[v]).collect(),
                    predicate: c.predicate,
                }
            })
            .collect();
        let sub =
            Instance::new(var_map.len(), instance.family().clone(), sub_cons).unwrap();
        let sub_value = lp_value(&sub)?;
        satisfied_mass = &satisfied_mass + &(&sub_value * &rat_usize(cons.len()));
    }
    Ok(satisfied_mass / rat_usize(instance.num_constraints()))
}

/// Verifies the feasibility identities and, optionally, the objective
/// bookkeeping of a solution with exact arithmetic.
pub fn verify_basic_solution(instance: &Instance, sol: &LpSolution) -> Result<(), LpError> {
    let fam = instance.family();
    let sigma = fam.alphabet_size();
    let k = fam.arity();
    let tuples = fam.tuple_count();
    if sol.x.len() != instance.num_vars() || sol.z.len() != instance.num_constraints() {
        return Err(LpError::BadIndex("solution shape mismatch".into()));
    }
    for (v, row) in sol.x.iter().enumerate() {
        if row.len() != sigma {
            return Err(LpError::BadIndex(format!("x[{v}] length")));
        }
        let mut sum = Rational::zero();
        for val in row {
            if val.is_negative() {
                return Err(LpError::NotOptimal(format!("x[{v}] has a negative entry")));
            }
            sum = &sum + val;
        }
        if !sum.is_one() {
            return Err(LpError::NotOptimal(format!("x[{v}] does not sum to 1")));
        }
    }
    let mut objective = Rational::zero();
    for (i, c) in instance.constraints().iter().enumerate() {
        let zrow = &sol.z[i];
        if zrow.len() != tuples {
            return Err(LpError::BadIndex(format!("z[{i}] length")));
        }
        for val in zrow {
            if val.is_negative() {
                return Err(LpError::NotOptimal(format!("z[{i}] has a negative entry")));
            }
        }
        for j in 0..k {
            for s in 0..sigma {
                let mut sum = Rational::zero();
                for t in 0..tuples {
                    if fam.tuple_at(t)[j] == s {
                        sum = &sum + &zrow[t];
                    }
                }
                if sum != sol.x[c.scope[j]][s] {
                    return Err(LpError::NotOptimal(format!(
                        "marginal of z[{i}] at position {j}, symbol {s} disagrees with x"
                    )));
                }
            }
        }
        objective = &objective + &sol.constraint_mass(instance, i);
    }
    objective /= rat_usize(instance.num_constraints());
    if objective != sol.objective_value {
        return Err(LpError::NotOptimal("objective bookkeeping disagrees".into()));
    }
    if sol.objective_value.is_negative() || sol.objective_value > Rational::one() {
        return Err(LpError::NotOptimal("objective outside [0, 1]".into()));
    }
    Ok(())
}

fn is_half_integral(v: &Rational) -> bool {
    v.is_zero() || v.is_one() || *v == rat(1, 2)
}

/// Whether every x and z entry lies in {0, 1/2, 1}.
pub fn check_half_integral(sol: &LpSolution) -> bool {
    sol.x.iter().flatten().all(is_half_integral) && sol.z.iter().flatten().all(is_half_integral)
}

#[derive(Debug, Clone)]
pub struct RoundingOutcome {
    pub assignment: Assignment,
    /// Exact expected value of the rounded assignment (closed form, not
    /// Monte-Carlo).
    pub expectation: Rational,
}

fn sample_bernoulli(rng: &mut Rng, p: &Rational) -> bool {
    if p.is_zero() {
        return false;
    }
    if p.is_one() {
        return true;
    }
    let den = p.denom().to_u64().expect("rounding probability denominator fits u64");
    let num = p.numer().to_u64().expect("rounding probability numerator fits u64");
    rng.below(den) < num
}

fn round_independently(sol: &LpSolution, seed: u64) -> Assignment {
    let mut rng = Rng::derive(seed, &[0x726e64]);
    let values = sol
        .x
        .iter()
        .map(|row| if sample_bernoulli(&mut rng, &row[1]) { 1 } else { 0 })
        .collect();
    Assignment::new(values)
}

fn require_half_integral(sol: &LpSolution) -> Result<(), LpError> {
    if check_half_integral(sol) {
        Ok(())
    } else {
        Err(LpError::NotHalfIntegral)
    }
}

/// Independent rounding for directed-cut instances: each variable becomes 1
/// with probability `x[v][1]`. The expectation `(1/m) sum_i x1 (1 - x2)` is
/// returned exactly; it satisfies `expectation >= 3/2 * objective - 1/2` for
/// every half-integral optimum.
pub fn round_dicut(
    instance: &Instance,
    sol: &LpSolution,
    seed: u64,
) -> Result<RoundingOutcome, LpError> {
    let fam = instance.family();
    let dicut = crate::csp::PredicateFamily::dicut();
    if fam.arity() != 2 || fam.alphabet_size() != 2 {
        return Err(LpError::WrongFamily("directed-cut rounding needs k=2, sigma=2".into()));
    }
    for c in instance.constraints() {
        if fam.table(c.predicate) != dicut.table(0) {
            return Err(LpError::WrongFamily(
                "directed-cut rounding needs every predicate to be the (1,0) cut".into(),
            ));
        }
    }
    require_half_integral(sol)?;

    let mut expectation = Rational::zero();
    for c in instance.constraints() {
        let p1 = &sol.x[c.scope[0]][1];
        let p2 = &sol.x[c.scope[1]][1];
        expectation = &expectation + &(p1 * &(Rational::one() - p2));
    }
    expectation /= rat_usize(instance.num_constraints());
    Ok(RoundingOutcome { assignment: round_independently(sol, seed), expectation })
}

/// Identifies a binary predicate table within the 2SAT family.
enum TwoSatKind {
    /// True iff the first argument equals b.
    Literal(usize),
    /// False iff the arguments equal (b1, b2).
    Clause(usize, usize),
}

fn classify_two_sat(table: &[bool]) -> Option<TwoSatKind> {
    let family = crate::csp::PredicateFamily::two_sat();
    for b in 0..2 {
        if table == family.table(family.predicate_by_name(&format!("lit_{b}")).unwrap()) {
            return Some(TwoSatKind::Literal(b));
        }
    }
    for b1 in 0..2 {
        for b2 in 0..2 {
            let name = format!("or_{b1}{b2}");
            if table == family.table(family.predicate_by_name(&name).unwrap()) {
                return Some(TwoSatKind::Clause(b1, b2));
            }
        }
    }
    None
}

fn match_prob(b: usize, x1: &Rational) -> Rational {
    // Probability that a variable rounded to 1 with probability x1 equals b.
    if b == 1 {
        x1.clone()
    } else {
        Rational::one() - x1
    }
}

/// Independent rounding for 2SAT instances. The exact expectation
/// `(1/m) sum_i g_i` is returned, where a clause false only on (b1, b2)
/// succeeds with probability `1 - P[first = b1] P[second = b2]` and a
/// first-argument literal succeeds with probability `P[first = b]`. For every
/// half-integral optimum, `expectation >= 1/2 * objective + 1/4`.
pub fn round_2sat(
    instance: &Instance,
    sol: &LpSolution,
    seed: u64,
) -> Result<RoundingOutcome, LpError> {
    let fam = instance.family();
    if fam.arity() != 2 || fam.alphabet_size() != 2 {
        return Err(LpError::WrongFamily("2SAT rounding needs k=2, sigma=2".into()));
    }
    let kinds: Result<Vec<TwoSatKind>, LpError> = instance
        .constraints()
        .iter()
        .map(|c| {
            classify_two_sat(fam.table(c.predicate)).ok_or_else(|| {
                LpError::WrongFamily("predicate outside the 2SAT family".into())
            })
        })
        .collect();
    let kinds = kinds?;
    require_half_integral(sol)?;

    let mut expectation = Rational::zero();
    for (c, kind) in instance.constraints().iter().zip(&kinds) {
        let x1 = &sol.x[c.scope[0]][1];
        let x2 = &sol.x[c.scope[1]][1];
        let g = match kind {
            TwoSatKind::Literal(b) => match_prob(*b, x1),
            TwoSatKind::Clause(b1, b2) => {
                Rational::one() - &(&match_prob(*b1, x1) * &match_prob(*b2, x2))
            }
        };
        expectation = &expectation + &g;
    }
    expectation /= rat_usize(instance.num_constraints());
    Ok(RoundingOutcome { assignment: round_independently(sol, seed), expectation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{brute_force_value, Constraint, PredicateFamily};
    use crate::ratio::rat_int;
    use std::sync::Arc;

    fn single_dicut() -> Instance {
        Instance::new(
            2,
            Arc::new(PredicateFamily::dicut()),
            vec![Constraint { scope: vec![0, 1], predicate: 0 }],
        )
        .unwrap()
    }

    #[test]
    fn basic_lp_shape_for_single_constraint() {
        let lp = build_basic_lp(&single_dicut());
        assert_eq!(lp.num_vars, 2 * 2 + 1 * 4);
        assert_eq!(lp.eq_constraints.len(), 2 + 4);
    }

    #[test]
    fn uniform_point_is_feasible_with_objective_in_unit_interval() {
        let inst = Instance::dicut_complete_bidirectional(4);
        let m = inst.num_constraints();
        let uniform = LpSolution {
            x: vec![vec![rat(1, 2), rat(1, 2)]; 4],
            z: vec![vec![rat(1, 4); 4]; m],
            objective_value: rat(1, 4),
        };
        verify_basic_solution(&inst, &uniform).unwrap();
    }

    #[test]
    fn integral_assignment_objective_matches_value() {
        let inst = Instance::dicut_complete_bidirectional(4);
        let tau = Assignment::new(vec![1, 1, 0, 0]);
        // The induced LP point: x = indicator rows, z = indicator tuples.
        let fam = inst.family();
        let x: Vec<Vec<Rational>> = tau
            .values
            .iter()
            .map(|&s| {
                (0..2).map(|t| if t == s { rat_int(1) } else { rat_int(0) }).collect()
            })
            .collect();
        let z: Vec<Vec<Rational>> = inst
            .constraints()
            .iter()
            .map(|c| {
                let tuple: Vec<usize> = c.scope.iter().map(|&v| tau.values[v]).collect();
                let idx = fam.tuple_index(&tuple);
                (0..4).map(|t| if t == idx { rat_int(1) } else { rat_int(0) }).collect()
            })
            .collect();
        let sol = LpSolution { x, z, objective_value: inst.value(&tau).unwrap() };
        verify_basic_solution(&inst, &sol).unwrap();
    }

    #[test]
    fn single_dicut_solves_to_one() {
        let sol = solve_basic_lp(&single_dicut()).unwrap();
        assert_eq!(sol.objective_value, rat_int(1));
        assert_eq!(sol.x[0][1], rat_int(1));
        assert_eq!(sol.x[1][0], rat_int(1));
        verify_basic_solution(&single_dicut(), &sol).unwrap();
    }

    #[test]
    fn i4_lp_value_is_half() {
        assert_eq!(lp_value(&Instance::dicut_complete_bidirectional(4)).unwrap(), rat(1, 2));
    }

    #[test]
    fn contradictory_literals_lp_value_is_half() {
        let fam = Arc::new(PredicateFamily::two_sat());
        let lit = |b: usize| fam.predicate_by_name(&format!("lit_{b}")).unwrap();
        let inst = Instance::new(
            2,
            fam.clone(),
            vec![
                Constraint { scope: vec![0, 1], predicate: lit(0) },
                Constraint { scope: vec![0, 1], predicate: lit(1) },
            ],
        )
        .unwrap();
        assert_eq!(lp_value(&inst).unwrap(), rat(1, 2));
        assert_eq!(brute_force_value(&inst).unwrap().value, rat(1, 2));
    }

    #[test]
    fn e2sat_all_clauses_lp_value_is_one() {
        let inst = Instance::e2sat_all_clauses(4);
        assert_eq!(lp_value(&inst).unwrap(), rat_int(1));
        assert_eq!(brute_force_value(&inst).unwrap().value, rat(3, 4));
    }

    #[test]
    fn component_decomposition_matches_direct_solve() {
        // Two disjoint blocks: a fully satisfiable arc and a 2-cycle.
        let fam = Arc::new(PredicateFamily::dicut());
        let inst = Instance::new(
            4,
            fam,
            vec![
                Constraint { scope: vec![0, 1], predicate: 0 },
                Constraint { scope: vec![2, 3], predicate: 0 },
                Constraint { scope: vec![3, 2], predicate: 0 },
            ],
        )
        .unwrap();
        assert_eq!(lp_value(&inst).unwrap(), lp_value_components(&inst).unwrap());
    }

    #[test]
    fn half_integral_detection() {
        let sol = LpSolution {
            x: vec![vec![rat(1, 2), rat(1, 2)]],
            z: vec![],
            objective_value: rat_int(0),
        };
        assert!(check_half_integral(&sol));
        let bad = LpSolution {
            x: vec![vec![rat(1, 3), rat(2, 3)]],
            z: vec![],
            objective_value: rat_int(0),
        };
        assert!(!check_half_integral(&bad));
    }

    #[test]
    fn dicut_rounding_all_half_expects_quarter() {
        let inst = Instance::dicut_complete_bidirectional(4);
        let sol = solve_basic_lp(&inst).unwrap();
        assert!(check_half_integral(&sol));
        let out = round_dicut(&inst, &sol, 7).unwrap();
        // Every variable at 1/2 yields (1/2)(1/2) per constraint.
        assert_eq!(out.expectation, rat(1, 4));
        // The stated lower bound: 3/2 * 1/2 - 1/2 = 1/4.
        assert!(out.expectation >= rat(3, 2) * sol.objective_value - rat(1, 2));
    }

    #[test]
    fn dicut_rounding_integral_point_expects_one() {
        let inst = single_dicut();
        let sol = solve_basic_lp(&inst).unwrap();
        let out = round_dicut(&inst, &sol, 7).unwrap();
        assert_eq!(out.expectation, rat_int(1));
        assert_eq!(out.assignment.values, vec![1, 0]);
    }

    #[test]
    fn rounding_rejects_non_half_integral() {
        let inst = single_dicut();
        let sol = LpSolution {
            x: vec![vec![rat(2, 3), rat(1, 3)], vec![rat(1, 3), rat(2, 3)]],
            z: vec![vec![rat(1, 3); 4]],
            objective_value: rat(1, 3),
        };
        assert_eq!(round_dicut(&inst, &sol, 1).unwrap_err(), LpError::NotHalfIntegral);
    }

    #[test]
    fn two_sat_clause_at_half_expects_three_quarters() {
        let fam = Arc::new(PredicateFamily::two_sat());
        let or00 = fam.predicate_by_name("or_00").unwrap();
        let or11 = fam.predicate_by_name("or_11").unwrap();
        // Opposing clauses force the all-half optimum.
        let inst = Instance::new(
            2,
            fam.clone(),
            vec![
                Constraint { scope: vec![0, 1], predicate: or00 },
                Constraint { scope: vec![0, 1], predicate: or11 },
            ],
        )
        .unwrap();
        let sol = solve_basic_lp(&inst).unwrap();
        assert!(check_half_integral(&sol));
        let out = round_2sat(&inst, &sol, 3).unwrap();
        if sol.x[0][1] == rat(1, 2) && sol.x[1][1] == rat(1, 2) {
            assert_eq!(out.expectation, rat(3, 4));
        }
        assert!(out.expectation >= rat(1, 2) * &sol.objective_value + rat(1, 4));
    }

    #[test]
    fn unary_literal_at_one_expects_one() {
        let fam = Arc::new(PredicateFamily::two_sat());
        let lit1 = fam.predicate_by_name("lit_1").unwrap();
        let inst = Instance::new(
            2,
            fam.clone(),
            vec![Constraint { scope: vec![0, 1], predicate: lit1 }],
        )
        .unwrap();
        let sol = solve_basic_lp(&inst).unwrap();
        let out = round_2sat(&inst, &sol, 3).unwrap();
        assert_eq!(out.expectation, rat_int(1));
    }

    #[test]
    fn lp_upper_bounds_integral_value_on_random_instances() {
        let mut rng = Rng::new(2024);
        for trial in 0..100 {
            let fam = if trial % 2 == 0 {
                Arc::new(PredicateFamily::dicut())
            } else {
                Arc::new(PredicateFamily::two_sat())
            };
            let n = 2 + rng.below_usize(4);
            let m = 1 + rng.below_usize(6);
            let mut constraints = Vec::new();
            for _ in 0..m {
                let a = rng.below_usize(n);
                let mut b = rng.below_usize(n);
                while b == a {
                    b = rng.below_usize(n);
                }
                constraints.push(Constraint {
                    scope: vec![a, b],
                    predicate: rng.below_usize(fam.num_predicates()),
                });
            }
            let inst = Instance::new(n, fam, constraints).unwrap();
            let lp = lp_value(&inst).unwrap();
            let bf = brute_force_value(&inst).unwrap();
            assert!(lp >= bf.value, "LP must relax the integral value");
        }
    }

    #[test]
    fn solver_output_verifies_exactly() {
        let inst = Instance::e2sat_all_clauses(3);
        let sol = solve_basic_lp(&inst).unwrap();
        verify_basic_solution(&inst, &sol).unwrap();
    }
}
