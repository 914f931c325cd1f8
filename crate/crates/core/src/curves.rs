//! Approximability threshold curves.
//!
//! For the directed-cut and 2SAT families the curve is known in closed form;
//! for arbitrary families the module searches small instances for empirical
//! upper bounds on the infimum of the integral value over instances with LP
//! value at least c.

use crate::csp::{brute_force_value, Constraint, Instance, PredicateFamily};
use crate::lp::lp_value;
use crate::ratio::{rat, Rational};
use crate::rng::Rng;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Directed-cut threshold: c on [0, 1/4]; 1/4 on (1/4, 1/2]; (3c-1)/2 above.
pub fn theta_dicut(c: &Rational) -> Result<Rational, String> {
    check_unit(c)?;
    Ok(if *c <= rat(1, 4) {
        c.clone()
    } else if *c <= rat(1, 2) {
        rat(1, 4)
    } else {
        (rat(3, 1) * c - Rational::one()) / rat(2, 1)
    })
}

/// 2SAT threshold: c on [0, 1/2]; (2c+1)/4 above.
pub fn theta_2sat(c: &Rational) -> Result<Rational, String> {
    check_unit(c)?;
    Ok(if *c <= rat(1, 2) { c.clone() } else { (rat(2, 1) * c + Rational::one()) / rat(4, 1) })
}

fn check_unit(c: &Rational) -> Result<(), String> {
    if c.is_negative() || *c > Rational::one() {
        Err(format!("completeness parameter {} outside [0, 1]", crate::ratio::display(c)))
    } else {
        Ok(())
    }
}

/// A point of a threshold curve: either a closed-form value or an empirical
/// interval with the instance witnessing the upper bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    #[serde(with = "crate::ratio")]
    pub c: Rational,
    #[serde(with = "crate::ratio")]
    pub lower: Rational,
    #[serde(with = "crate::ratio")]
    pub upper: Rational,
    #[serde(skip)]
    pub witness: Option<Instance>,
    /// Whether the search found any instance with LP value at least c.
    pub found: bool,
}

impl CurvePoint {
    pub fn closed_form(c: Rational, theta: Rational) -> Self {
        CurvePoint { c, lower: theta.clone(), upper: theta, witness: None, found: true }
    }
}

/// Random search (plus deterministically injected extremal constructions) for
/// an upper bound on the threshold at completeness c: the minimum brute-force
/// value among generated instances whose LP value is at least c. When no
/// instance qualifies within the budget, the trivial bound 1 is reported with
/// `found: false`.
pub fn empirical_theta_upper(
    family: &Arc<PredicateFamily>,
    c: &Rational,
    budget: usize,
    seed: u64,
) -> Result<CurvePoint, String> {
    check_unit(c)?;
    let mut best: Option<(Rational, Instance)> = None;
    let consider = |inst: Instance, best: &mut Option<(Rational, Instance)>| {
        let lp = match lp_value(&inst) {
            Ok(v) => v,
            Err(_) => return,
        };
        if lp < *c {
            return;
        }
        let value = match brute_force_value(&inst) {
            Ok(r) => r.value,
            Err(_) => return,
        };
        let better = match best {
            None => true,
            Some((cur, _)) => value < *cur,
        };
        if better {
            *best = Some((value, inst));
        }
    };

    for inst in extremal_candidates(family) {
        consider(inst, &mut best);
    }

    let mut rng = Rng::derive(seed, &[0x637576]);
    let k = family.arity();
    for _ in 0..budget {
        let n = k.max(2 + rng.below_usize(7)); // up to 8 variables
        let m = 1 + rng.below_usize(24);
        let mut constraints = Vec::new();
        for _ in 0..m {
            let mut scope = Vec::with_capacity(k);
            while scope.len() < k {
                let v = rng.below_usize(n);
                if !scope.contains(&v) {
                    scope.push(v);
                }
            }
            constraints.push(Constraint {
                scope,
                predicate: rng.below_usize(family.num_predicates()),
            });
        }
        let inst = match Instance::new(n, family.clone(), constraints) {
            Ok(i) => i,
            Err(_) => continue,
        };
        consider(inst, &mut best);
    }

    Ok(match best {
        Some((value, witness)) => CurvePoint {
            c: c.clone(),
            lower: Rational::zero(),
            upper: value,
            witness: Some(witness),
            found: true,
        },
        None => CurvePoint {
            c: c.clone(),
            lower: Rational::zero(),
            upper: Rational::one(),
            witness: None,
            found: false,
        },
    })
}

/// Deterministic extremal constructions injected into the search: complete
/// bidirectional single-predicate instances, contradictory predicate pairs on
/// one scope, and all-predicates-per-pair instances. These realize the known
/// infima for the directed-cut and 2SAT families.
fn extremal_candidates(family: &Arc<PredicateFamily>) -> Vec<Instance> {
    let mut out = Vec::new();
    let k = family.arity();
    if k != 2 {
        return out;
    }
    for p in 0..family.num_predicates() {
        for n in 2..=6usize {
            let mut constraints = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    constraints.push(Constraint { scope: vec![i, j], predicate: p });
                    constraints.push(Constraint { scope: vec![j, i], predicate: p });
                }
            }
            if let Ok(inst) = Instance::new(n, family.clone(), constraints) {
                out.push(inst);
            }
        }
    }
    for p in 0..family.num_predicates() {
        for q in (p + 1)..family.num_predicates() {
            let constraints = vec![
                Constraint { scope: vec![0, 1], predicate: p },
                Constraint { scope: vec![0, 1], predicate: q },
            ];
            if let Ok(inst) = Instance::new(2, family.clone(), constraints) {
                out.push(inst);
            }
        }
    }
    // Every-predicate-of-a-subset on every pair; subsets enumerate fully for
    // families of up to six predicates (the all-clauses constructions live
    // here), and fall back to the full family otherwise.
    let subsets: Vec<Vec<usize>> = if family.num_predicates() <= 6 {
        (1..(1usize << family.num_predicates()))
            .map(|mask| (0..family.num_predicates()).filter(|p| mask >> p & 1 == 1).collect())
            .collect()
    } else {
        vec![(0..family.num_predicates()).collect()]
    };
    for subset in &subsets {
        for n in [2usize, 4] {
            let mut constraints = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    for &p in subset {
                        constraints.push(Constraint { scope: vec![i, j], predicate: p });
                    }
                }
            }
            if let Ok(inst) = Instance::new(n, family.clone(), constraints) {
                out.push(inst);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeReport {
    pub sorted: bool,
    pub monotone_ok: bool,
    pub convex_ok: bool,
    pub below_diagonal_ok: bool,
    pub violations: Vec<String>,
}

impl ShapeReport {
    pub fn ok(&self) -> bool {
        self.sorted && self.monotone_ok && self.convex_ok && self.below_diagonal_ok
    }
}

/// Verifies monotonicity, the theta <= c bound, and discrete convexity on the
/// region where the curve lies strictly below the diagonal (there the curve
/// coincides with the infimum curve, which is convex). Points must be sorted
/// by c; upper bounds are used for empirical points.
pub fn check_curve_shape(points: &[CurvePoint]) -> Result<ShapeReport, String> {
    for w in points.windows(2) {
        if w[0].c >= w[1].c {
            return Err("points must be strictly sorted by c".into());
        }
    }
    let mut report = ShapeReport {
        sorted: true,
        monotone_ok: true,
        convex_ok: true,
        below_diagonal_ok: true,
        violations: Vec::new(),
    };
    for (idx, p) in points.iter().enumerate() {
        if p.upper > p.c {
            report.below_diagonal_ok = false;
            report.violations.push(format!(
                "point {idx}: theta {} exceeds c {}",
                crate::ratio::display(&p.upper),
                crate::ratio::display(&p.c)
            ));
        }
    }
    for (idx, w) in points.windows(2).enumerate() {
        if w[1].upper < w[0].upper {
            report.monotone_ok = false;
            report.violations.push(format!("points {idx}..{}: theta decreases", idx + 1));
        }
    }
    // Convexity on the strict sub-diagonal region, extended one point left to
    // include the kink where the curve departs from the diagonal.
    let first_strict = points.iter().position(|p| p.upper < p.c);
    if let Some(pos) = first_strict {
        let region = &points[pos.saturating_sub(1)..];
        for (idx, w) in region.windows(3).enumerate() {
            let left = (&w[1].upper - &w[0].upper) / (&w[1].c - &w[0].c);
            let right = (&w[2].upper - &w[1].upper) / (&w[2].c - &w[1].c);
            if right < left {
                report.convex_ok = false;
                report.violations.push(format!(
                    "infimum-curve region around index {}: slope decreases",
                    pos.saturating_sub(1) + idx + 1
                ));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat_int;

    #[test]
    fn dicut_curve_named_values() {
        assert_eq!(theta_dicut(&rat(1, 2)).unwrap(), rat(1, 4));
        assert_eq!(theta_dicut(&rat(3, 4)).unwrap(), rat(5, 8));
        assert_eq!(theta_dicut(&rat(1, 8)).unwrap(), rat(1, 8));
        assert_eq!(theta_dicut(&rat_int(1)).unwrap(), rat_int(1));
    }

    #[test]
    fn two_sat_curve_named_values() {
        assert_eq!(theta_2sat(&rat_int(1)).unwrap(), rat(3, 4));
        assert_eq!(theta_2sat(&rat(1, 2)).unwrap(), rat(1, 2));
        assert_eq!(theta_2sat(&rat(3, 4)).unwrap(), rat(5, 8));
    }

    #[test]
    fn curves_reject_out_of_range() {
        assert!(theta_dicut(&rat(9, 8)).is_err());
        assert!(theta_2sat(&rat(-1, 8)).is_err());
    }

    #[test]
    fn closed_form_grids_have_valid_shape() {
        for theta in [theta_dicut as fn(&Rational) -> Result<Rational, String>, theta_2sat] {
            let points: Vec<CurvePoint> = (0..=64)
                .map(|i| {
                    let c = rat(i, 64);
                    CurvePoint::closed_form(c.clone(), theta(&c).unwrap())
                })
                .collect();
            let report = check_curve_shape(&points).unwrap();
            assert!(report.ok(), "{:?}", report.violations);
        }
    }

    #[test]
    fn corrupted_point_is_reported() {
        let mut points: Vec<CurvePoint> = (0..=8)
            .map(|i| {
                let c = rat(i, 8);
                CurvePoint::closed_form(c.clone(), theta_dicut(&c).unwrap())
            })
            .collect();
        points[5].upper = rat_int(1); // above the diagonal and non-convex
        let report = check_curve_shape(&points).unwrap();
        assert!(!report.ok());
        assert!(!report.violations.is_empty());
    }

    #[test]
    fn empirical_dicut_at_half_reaches_known_bound() {
        let family = Arc::new(PredicateFamily::dicut());
        let point = empirical_theta_upper(&family, &rat(1, 2), 40, 7).unwrap();
        assert!(point.found);
        // The n=6 bidirectional construction achieves 3/10; the search must
        // do at least as well and never undercut the true threshold.
        assert!(point.upper <= rat(3, 10));
        assert!(point.upper >= theta_dicut(&rat(1, 2)).unwrap());
    }

    #[test]
    fn empirical_2sat_at_half_reaches_half() {
        let family = Arc::new(PredicateFamily::two_sat());
        let point = empirical_theta_upper(&family, &rat(1, 2), 40, 7).unwrap();
        assert!(point.found);
        assert_eq!(point.upper, rat(1, 2));
    }

    #[test]
    fn impossible_completeness_reports_not_found() {
        // No instance of the always-at-least-one-satisfying family reaches
        // LP value above 1, so c = 1 is only reachable by satisfiable
        // instances; the dicut family finds those. Use c slightly above 1 is
        // rejected, so probe c = 1 with budget 0 and no extremal hit instead.
        let family = Arc::new(PredicateFamily::dicut());
        let point = empirical_theta_upper(&family, &rat_int(1), 0, 7).unwrap();
        // Single-arc instances are injected deterministically and are
        // satisfiable, so this still finds an upper bound of 1.
        assert!(point.found);
        assert_eq!(point.upper, rat_int(1));
    }
}
