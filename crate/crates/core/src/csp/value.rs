//! Exact and heuristic value oracles.

use super::{Assignment, CspError, Instance};
use crate::ratio::{rat_usize, Rational};
use crate::rng::Rng;

/// Default enumeration budget: 2^24 assignments.
pub const DEFAULT_ASSIGNMENT_CAP: u64 = 1 << 24;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub value: Rational,
    pub witness: Assignment,
    pub satisfied: usize,
}

/// Exact maximum over all assignments by mixed-radix enumeration, using the
/// default cap.
pub fn brute_force_value(instance: &Instance) -> Result<BruteForceResult, CspError> {
    brute_force_value_capped(instance, DEFAULT_ASSIGNMENT_CAP)
}

/// Exact maximum over all `|alphabet|^num_vars` assignments. Errors when the
/// enumeration would exceed `cap` assignments.
pub fn brute_force_value_capped(
    instance: &Instance,
    cap: u64,
) -> Result<BruteForceResult, CspError> {
    if instance.is_empty() {
        return Err(CspError::EmptyInstance);
    }
    let sigma = instance.family().alphabet_size();
    let n = instance.num_vars();
    let total = (sigma as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(CspError::AssignmentCapExceeded { needed: total, cap });
    }

    let mut tau = Assignment::constant(n, 0);
    let mut best = instance.count_satisfied(&tau);
    let mut witness = tau.clone();
    'outer: loop {
        // Next assignment in mixed-radix order, least-significant digit last.
        let mut pos = n;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            tau.values[pos] += 1;
            if tau.values[pos] < sigma {
                break;
            }
            tau.values[pos] = 0;
        }
        let sat = instance.count_satisfied(&tau);
        if sat > best {
            best = sat;
            witness = tau.clone();
        }
    }
    Ok(BruteForceResult {
        value: rat_usize(best) / rat_usize(instance.num_constraints()),
        witness,
        satisfied: best,
    })
}

/// Exact maximum computed by max-sum variable elimination over each connected
/// component of the constraint hypergraph. Produces the same value as
/// [`brute_force_value`] (cross-checked in tests) but handles the sparse
/// many-variable instances that blow-ups produce: work scales with
/// `|alphabet|^(induced width)` instead of `|alphabet|^num_vars`. The cap
/// bounds the total number of table entries materialized.
pub fn component_value(instance: &Instance, cap: u64) -> Result<BruteForceResult, CspError> {
    if instance.is_empty() {
        return Err(CspError::EmptyInstance);
    }
    let n = instance.num_vars();
    let sigma = instance.family().alphabet_size();
    let fam = instance.family();

    // Initial factors: one 0/1 table per constraint over its sorted scope.
    let mut factors: Vec<Factor> = Vec::with_capacity(instance.num_constraints());
    let mut work: u128 = 0;
    for c in instance.constraints() {
        let mut vars: Vec<usize> = c.scope.clone();
        vars.sort_unstable();
        let size = sigma.pow(vars.len() as u32);
        work += size as u128;
        if work > cap as u128 {
            return Err(CspError::AssignmentCapExceeded { needed: work, cap });
        }
        let mut table = vec![0u32; size];
        let mut local = vec![0usize; vars.len()];
        for (idx, entry) in table.iter_mut().enumerate() {
            decode_mixed_radix(idx, sigma, &mut local);
            let tuple: Vec<usize> = c
                .scope
                .iter()
                .map(|v| local[vars.binary_search(v).unwrap()])
                .collect();
            *entry = fam.eval(c.predicate, &tuple) as u32;
        }
        factors.push(Factor { vars, table });
    }

    let mut active: Vec<bool> = vec![true; factors.len()];
    let mut holds: Vec<Vec<usize>> = vec![Vec::new(); n]; // factor ids per variable
    for (fi, f) in factors.iter().enumerate() {
        for &v in &f.vars {
            holds[v].push(fi);
        }
    }
    let mut alive: Vec<bool> = (0..n).map(|v| !holds[v].is_empty()).collect();

    // Minimum-resulting-scope elimination order, lowest variable id on ties.
    let mut records: Vec<EliminationRecord> = Vec::new();
    loop {
        let mut choice: Option<(usize, usize)> = None; // (scope size, var)
        for v in 0..n {
            if !alive[v] {
                continue;
            }
            let mut scope: Vec<usize> = Vec::new();
            for &fi in &holds[v] {
                if active[fi] {
                    for &u in &factors[fi].vars {
                        if u != v && alive[u] && !scope.contains(&u) {
                            scope.push(u);
                        }
                    }
                }
            }
            let key = (scope.len(), v);
            if choice.is_none() || key < choice.unwrap() {
                choice = Some(key);
            }
        }
        let Some((_, v)) = choice else { break };

        let gathered: Vec<usize> =
            holds[v].iter().copied().filter(|&fi| active[fi]).collect();
        let mut scope: Vec<usize> = Vec::new();
        for &fi in &gathered {
            for &u in &factors[fi].vars {
                if u != v && !scope.contains(&u) {
                    scope.push(u);
                }
            }
        }
        scope.sort_unstable();
        let size = sigma.pow(scope.len() as u32);
        work += (size * sigma) as u128;
        if work > cap as u128 {
            return Err(CspError::AssignmentCapExceeded { needed: work, cap });
        }

        let mut table = vec![0u32; size];
        let mut argmax = vec![0u8; size];
        let mut local = vec![0usize; scope.len()];
        let mut full = vec![0usize; n];
        for idx in 0..size {
            decode_mixed_radix(idx, sigma, &mut local);
            for (slot, &u) in scope.iter().enumerate() {
                full[u] = local[slot];
            }
            let mut best = 0u32;
            let mut best_s = 0u8;
            for s in 0..sigma {
                full[v] = s;
                let mut acc = 0u32;
                for &fi in &gathered {
                    acc += factors[fi].lookup(&full, sigma);
                }
                if s == 0 || acc > best {
                    best = acc;
                    best_s = s as u8;
                }
            }
            table[idx] = best;
            argmax[idx] = best_s;
        }

        for &fi in &gathered {
            active[fi] = false;
        }
        let new_fi = factors.len();
        factors.push(Factor { vars: scope.clone(), table });
        active.push(true);
        for &u in &scope {
            holds[u].push(new_fi);
        }
        alive[v] = false;
        records.push(EliminationRecord { var: v, scope, argmax });
    }

    let satisfied_total: u32 = factors
        .iter()
        .zip(&active)
        .filter(|(f, &a)| a && f.vars.is_empty())
        .map(|(f, _)| f.table[0])
        .sum();

    // Witness recovery: later-eliminated variables first, so every record's
    // context is already assigned.
    let mut witness = Assignment::constant(n, 0);
    for rec in records.iter().rev() {
        let mut idx = 0usize;
        for &u in &rec.scope {
            idx = idx * sigma + witness.values[u];
        }
        witness.values[rec.var] = rec.argmax[idx] as usize;
    }

    Ok(BruteForceResult {
        value: rat_usize(satisfied_total as usize) / rat_usize(instance.num_constraints()),
        witness,
        satisfied: satisfied_total as usize,
    })
}

struct Factor {
    vars: Vec<usize>,
    table: Vec<u32>,
}

impl Factor {
    fn lookup(&self, full: &[usize], sigma: usize) -> u32 {
        let mut idx = 0usize;
        for &u in &self.vars {
            idx = idx * sigma + full[u];
        }
        self.table[idx]
    }
}

struct EliminationRecord {
    var: usize,
    scope: Vec<usize>,
    argmax: Vec<u8>,
}

fn decode_mixed_radix(mut index: usize, sigma: usize, out: &mut [usize]) {
    for pos in (0..out.len()).rev() {
        out[pos] = index % sigma;
        index /= sigma;
    }
}

/// Best value found by single-flip hill climbing with seeded random restarts.
/// Never exceeds the exact maximum; deterministic given the seed. Among
/// equally improving flips the lowest (variable, symbol) pair wins.
pub fn local_search_value(
    instance: &Instance,
    restarts: usize,
    seed: u64,
) -> Result<(Rational, Assignment), CspError> {
    if instance.is_empty() {
        return Err(CspError::EmptyInstance);
    }
    let n = instance.num_vars();
    let sigma = instance.family().alphabet_size();
    let m = instance.num_constraints();

    // Constraints touching each variable, so a flip only re-evaluates those.
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, c) in instance.constraints().iter().enumerate() {
        for &v in &c.scope {
            touching[v].push(i);
        }
    }

    let mut best_sat = 0usize;
    let mut best_tau = Assignment::constant(n, 0);
    let mut first = true;
    for restart in 0..restarts.max(1) {
        let mut rng = Rng::derive(seed, &[0x6c73, restart as u64]);
        let mut tau = Assignment::new((0..n).map(|_| rng.below_usize(sigma)).collect());
        let mut sat_mask: Vec<bool> = (0..m)
            .map(|i| instance.evaluate_constraint(i, &tau).unwrap())
            .collect();
        let mut sat = sat_mask.iter().filter(|&&b| b).count();
        loop {
            let mut best_gain = 0isize;
            let mut best_flip: Option<(usize, usize)> = None;
            for v in 0..n {
                let old = tau.values[v];
                for s in 0..sigma {
                    if s == old {
                        continue;
                    }
                    tau.values[v] = s;
                    let mut gain = 0isize;
                    for &i in &touching[v] {
                        let now = instance.evaluate_constraint(i, &tau).unwrap();
                        gain += now as isize - sat_mask[i] as isize;
                    }
                    if gain > best_gain {
                        best_gain = gain;
                        best_flip = Some((v, s));
                    }
                    tau.values[v] = old;
                }
            }
            match best_flip {
                Some((v, s)) => {
                    tau.values[v] = s;
                    for &i in &touching[v] {
                        sat_mask[i] = instance.evaluate_constraint(i, &tau).unwrap();
                    }
                    sat = (sat as isize + best_gain) as usize;
                }
                None => break,
            }
        }
        if first || sat > best_sat {
            best_sat = sat;
            best_tau = tau;
            first = false;
        }
    }
    Ok((rat_usize(best_sat) / rat_usize(m), best_tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{Constraint, PredicateFamily};
    use crate::ratio::rat;
    use std::sync::Arc;

    #[test]
    fn single_constraint_is_satisfiable() {
        let fam = Arc::new(PredicateFamily::dicut());
        let inst =
            Instance::new(2, fam, vec![Constraint { scope: vec![0, 1], predicate: 0 }]).unwrap();
        let r = brute_force_value(&inst).unwrap();
        assert_eq!(r.value, rat(1, 1));
        assert_eq!(inst.value(&r.witness).unwrap(), rat(1, 1));
    }

    #[test]
    fn complete_bidirectional_values() {
        // floor(n/2)*ceil(n/2) / (2 * C(n,2)) for the bidirectional family.
        let r4 = brute_force_value(&Instance::dicut_complete_bidirectional(4)).unwrap();
        assert_eq!(r4.value, rat(1, 3));
        let r6 = brute_force_value(&Instance::dicut_complete_bidirectional(6)).unwrap();
        assert_eq!(r6.value, rat(3, 10));
    }

    #[test]
    fn witness_attains_value() {
        let inst = Instance::dicut_complete_bidirectional(5);
        let r = brute_force_value(&inst).unwrap();
        assert_eq!(inst.value(&r.witness).unwrap(), r.value);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = Instance::dicut_complete_bidirectional(4);
        let err = brute_force_value_capped(&inst, 8);
        assert!(matches!(err, Err(CspError::AssignmentCapExceeded { .. })));
    }

    #[test]
    fn component_value_matches_brute_force() {
        let mut rng = Rng::new(99);
        let fam = Arc::new(PredicateFamily::two_sat());
        for _ in 0..60 {
            let n = 2 + rng.below_usize(6);
            let m = 1 + rng.below_usize(10);
            let mut constraints = Vec::new();
            for _ in 0..m {
                let a = rng.below_usize(n);
                let mut b = rng.below_usize(n);
                while b == a {
                    b = rng.below_usize(n);
                }
                constraints
                    .push(Constraint { scope: vec![a, b], predicate: rng.below_usize(6) });
            }
            let inst = Instance::new(n, fam.clone(), constraints).unwrap();
            let bf = brute_force_value(&inst).unwrap();
            let cv = component_value(&inst, DEFAULT_ASSIGNMENT_CAP).unwrap();
            assert_eq!(bf.value, cv.value);
            assert_eq!(inst.value(&cv.witness).unwrap(), cv.value);
        }
    }

    #[test]
    fn component_value_matches_brute_force_at_higher_arity() {
        // A 3-ary family: satisfied unless all three symbols agree.
        let table: Vec<bool> = (0..8).map(|idx| idx != 0 && idx != 7).collect();
        let fam = Arc::new(
            PredicateFamily::new(3, 2, vec![table], Some(vec!["nae".into()])).unwrap(),
        );
        let mut rng = Rng::new(321);
        for _ in 0..30 {
            let n = 3 + rng.below_usize(4);
            let m = 1 + rng.below_usize(8);
            let mut constraints = Vec::new();
            for _ in 0..m {
                let mut scope = Vec::new();
                while scope.len() < 3 {
                    let v = rng.below_usize(n);
                    if !scope.contains(&v) {
                        scope.push(v);
                    }
                }
                constraints.push(Constraint { scope, predicate: 0 });
            }
            let inst = Instance::new(n, fam.clone(), constraints).unwrap();
            let bf = brute_force_value(&inst).unwrap();
            let cv = component_value(&inst, DEFAULT_ASSIGNMENT_CAP).unwrap();
            assert_eq!(bf.value, cv.value);
            assert_eq!(inst.value(&cv.witness).unwrap(), cv.value);
        }
    }

    #[test]
    fn local_search_single_constraint() {
        let fam = Arc::new(PredicateFamily::dicut());
        let inst =
            Instance::new(2, fam, vec![Constraint { scope: vec![0, 1], predicate: 0 }]).unwrap();
        let (v, _) = local_search_value(&inst, 1, 3).unwrap();
        assert_eq!(v, rat(1, 1));
    }

    #[test]
    fn local_search_reaches_i4_optimum() {
        let inst = Instance::dicut_complete_bidirectional(4);
        let (v, _) = local_search_value(&inst, 32, 11).unwrap();
        assert_eq!(v, rat(1, 3));
    }

    #[test]
    fn local_search_solves_unique_2sat() {
        // Clauses forcing the unique solution (1, 1, 1, 1): for each pair,
        // forbid assignments with a zero in it.
        let fam = Arc::new(PredicateFamily::two_sat());
        let or = |n: &str| fam.predicate_by_name(n).unwrap();
        let mut cons = Vec::new();
        for i in 0..4usize {
            for j in (i + 1)..4 {
                cons.push(Constraint { scope: vec![i, j], predicate: or("or_00") });
                cons.push(Constraint { scope: vec![i, j], predicate: or("or_01") });
                cons.push(Constraint { scope: vec![i, j], predicate: or("or_10") });
            }
        }
        let inst = Instance::new(4, fam.clone(), cons).unwrap();
        let bf = brute_force_value(&inst).unwrap();
        assert_eq!(bf.value, rat(1, 1));
        assert_eq!(bf.witness.values, vec![1, 1, 1, 1]);
        let (v, tau) = local_search_value(&inst, 64, 17).unwrap();
        assert_eq!(v, rat(1, 1));
        assert_eq!(tau.values, vec![1, 1, 1, 1]);
    }

    #[test]
    fn local_search_never_beats_brute_force() {
        let mut rng = Rng::new(5);
        for trial in 0..100 {
            let fam = if trial % 2 == 0 {
                Arc::new(PredicateFamily::dicut())
            } else {
                Arc::new(PredicateFamily::two_sat())
            };
            let n = 2 + rng.below_usize(6);
            let m = 1 + rng.below_usize(12);
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
            let bf = brute_force_value(&inst).unwrap();
            let (ls, _) = local_search_value(&inst, 8, trial as u64).unwrap();
            assert!(ls <= bf.value, "local search exceeded brute force");
        }
    }

    #[test]
    fn local_search_is_deterministic() {
        let inst = Instance::dicut_complete_bidirectional(5);
        let a = local_search_value(&inst, 4, 123).unwrap();
        let b = local_search_value(&inst, 4, 123).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
