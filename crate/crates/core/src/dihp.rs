//! Hard-distribution machinery: k-partite labeled matchings, the masking
//! Markov kernel, distribution-labeled gap graphs built from exact LP optima,
//! correlated (yes) and independent (no) multi-player input samplers, and the
//! reduction back to a constraint stream.
//!
//! The pipeline: an exact rational optimum of the basic LP turns into a graph
//! whose edges carry one-wise independent label distributions over `Z_N^k`
//! (N clears every denominator). Blowing each vertex up into n copies gives
//! one k-universe per edge; each of K players per edge receives a labeled
//! matching there. Yes-inputs mask a shared hidden vector by kernel noise,
//! no-inputs are independent and uniform. Keeping exactly the zero-labeled
//! edges of every player yields a CSP instance whose value tracks the LP
//! value (yes case, via the lifted assignment) or the integral value (no
//! case) as the parameters grow.

use crate::csp::{Assignment, Constraint, CspError, Instance, PredicateFamily};
use crate::lp::{lp_value, verify_basic_solution, LpError, LpSolution};
use crate::ratio::{rat_usize, Rational};
use crate::rng::Rng;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub enum DihpError {
    Lp(LpError),
    Csp(CspError),
    BadParams(String),
}

impl fmt::Display for DihpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DihpError::Lp(e) => write!(f, "{e}"),
            DihpError::Csp(e) => write!(f, "{e}"),
            DihpError::BadParams(msg) => write!(f, "bad parameters: {msg}"),
        }
    }
}

impl std::error::Error for DihpError {}

impl From<LpError> for DihpError {
    fn from(e: LpError) -> Self {
        DihpError::Lp(e)
    }
}

impl From<CspError> for DihpError {
    fn from(e: CspError) -> Self {
        DihpError::Csp(e)
    }
}

/// k pairwise-disjoint vertex parts of equal cardinality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KUniverse {
    pub parts: Vec<Vec<u64>>,
}

impl KUniverse {
    pub fn new(parts: Vec<Vec<u64>>) -> Result<Self, DihpError> {
        if parts.is_empty() {
            return Err(DihpError::BadParams("universe needs at least one part".into()));
        }
        let size = parts[0].len();
        let mut seen = std::collections::BTreeSet::new();
        for part in &parts {
            if part.len() != size {
                return Err(DihpError::BadParams("universe parts must have equal size".into()));
            }
            for &v in part {
                if !seen.insert(v) {
                    return Err(DihpError::BadParams(format!("vertex {v} in two parts")));
                }
            }
        }
        Ok(KUniverse { parts })
    }

    pub fn arity(&self) -> usize {
        self.parts.len()
    }

    /// Common part cardinality.
    pub fn cardinality(&self) -> usize {
        self.parts[0].len()
    }

    pub fn all_vertices(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.parts.iter().flatten().copied().collect();
        out.sort_unstable();
        out
    }
}

/// A matching of labeled hyperedges: every edge takes one vertex per part and
/// no vertex repeats; labels live in `Z_N^k`. Edges are kept sorted by tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledMatching {
    pub edges: Vec<(Vec<u64>, Vec<u32>)>,
}

impl LabeledMatching {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Support is a matching: no vertex appears twice.
    pub fn is_matching(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        for (edge, _) in &self.edges {
            for &v in edge {
                if !seen.insert(v) {
                    return false;
                }
            }
        }
        true
    }
}

/// A distribution over `Z_N^k` stored as exact rational point masses indexed
/// by tuple index (first coordinate most significant).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneWiseDistribution {
    pub modulus: u32,
    pub arity: usize,
    #[serde(with = "crate::ratio::vec_serde")]
    pub pmf: Vec<Rational>,
}

impl OneWiseDistribution {
    pub fn new(modulus: u32, arity: usize, pmf: Vec<Rational>) -> Result<Self, DihpError> {
        let size = (modulus as usize).pow(arity as u32);
        if pmf.len() != size {
            return Err(DihpError::BadParams(format!(
                "pmf has {} entries, expected {size}",
                pmf.len()
            )));
        }
        let mut total = Rational::zero();
        for p in &pmf {
            if p.is_negative() {
                return Err(DihpError::BadParams("negative probability".into()));
            }
            total = &total + p;
        }
        if !total.is_one() {
            return Err(DihpError::BadParams("pmf does not sum to 1".into()));
        }
        Ok(OneWiseDistribution { modulus, arity, pmf })
    }

    pub fn uniform(modulus: u32, arity: usize) -> Self {
        let size = (modulus as usize).pow(arity as u32);
        let p = Rational::new(BigInt::one(), BigInt::from(size));
        OneWiseDistribution { modulus, arity, pmf: vec![p; size] }
    }

    /// Uniform over the diagonal tuples (t, ..., t).
    pub fn diagonal(modulus: u32, arity: usize) -> Self {
        let size = (modulus as usize).pow(arity as u32);
        let mut pmf = vec![Rational::zero(); size];
        let p = Rational::new(BigInt::one(), BigInt::from(modulus));
        for t in 0..modulus as usize {
            let mut idx = 0usize;
            for _ in 0..arity {
                idx = idx * modulus as usize + t;
            }
            pmf[idx] = p.clone();
        }
        OneWiseDistribution { modulus, arity, pmf }
    }

    /// All mass on one tuple.
    pub fn point_mass(modulus: u32, tuple: &[u32]) -> Self {
        let arity = tuple.len();
        let size = (modulus as usize).pow(arity as u32);
        let mut pmf = vec![Rational::zero(); size];
        pmf[tuple_index(modulus, tuple)] = Rational::one();
        OneWiseDistribution { modulus, arity, pmf }
    }

    pub fn mass(&self, tuple: &[u32]) -> &Rational {
        &self.pmf[tuple_index(self.modulus, tuple)]
    }

    /// Exact draw from the pmf.
    pub fn sample(&self, rng: &mut Rng) -> Vec<u32> {
        let denom = crate::ratio::lcm_denominators(self.pmf.iter());
        let weights: Vec<u64> = self
            .pmf
            .iter()
            .map(|p| {
                ((p.numer() * &denom) / p.denom())
                    .to_u64()
                    .expect("pmf weight fits in u64 at desk scale")
            })
            .collect();
        let total: u64 = weights.iter().sum();
        let mut draw = rng.below(total);
        for (idx, &w) in weights.iter().enumerate() {
            if draw < w {
                return tuple_at(self.modulus, self.arity, idx);
            }
            draw -= w;
        }
        unreachable!("weights sum to the draw bound")
    }
}

pub fn tuple_index(modulus: u32, tuple: &[u32]) -> usize {
    let mut idx = 0usize;
    for &t in tuple {
        debug_assert!(t < modulus);
        idx = idx * modulus as usize + t as usize;
    }
    idx
}

pub fn tuple_at(modulus: u32, arity: usize, mut index: usize) -> Vec<u32> {
    let mut tuple = vec![0u32; arity];
    for pos in (0..arity).rev() {
        tuple[pos] = (index % modulus as usize) as u32;
        index /= modulus as usize;
    }
    tuple
}

/// Exact check that every single-coordinate marginal is uniform.
pub fn check_one_wise_independent(mu: &OneWiseDistribution) -> bool {
    let n = mu.modulus as usize;
    let target = Rational::new(BigInt::one(), BigInt::from(n));
    for coord in 0..mu.arity {
        for residue in 0..n as u32 {
            let mut marginal = Rational::zero();
            for (idx, p) in mu.pmf.iter().enumerate() {
                if tuple_at(mu.modulus, mu.arity, idx)[coord] == residue {
                    marginal = &marginal + p;
                }
            }
            if marginal != target {
                return false;
            }
        }
    }
    true
}

/// The pre-blow-up gap graph: instance structure plus exact label
/// distributions and per-vertex interval maps derived from an LP optimum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionLabeledGraph {
    pub num_vertices: usize,
    /// One hyperedge per constraint, in constraint order.
    pub edges: Vec<Vec<usize>>,
    pub predicates: Vec<usize>,
    #[serde(skip, default = "default_family")]
    pub family: Arc<PredicateFamily>,
    pub modulus: u32,
    pub mu: Vec<OneWiseDistribution>,
    /// Per vertex: cumulative interval boundaries of length sigma + 1; residue
    /// r maps to the symbol s with `bounds[s] <= r < bounds[s+1]`.
    pub q_bounds: Vec<Vec<u32>>,
    /// Per edge: the LP mass its constraint puts on satisfying assignments.
    #[serde(with = "crate::ratio::vec_serde")]
    pub p_star: Vec<Rational>,
}

fn default_family() -> Arc<PredicateFamily> {
    Arc::new(PredicateFamily::dicut())
}

impl DistributionLabeledGraph {
    pub fn symbol_of(&self, vertex: usize, residue: u32) -> usize {
        let bounds = &self.q_bounds[vertex];
        for s in 0..bounds.len() - 1 {
            if bounds[s] <= residue && residue < bounds[s + 1] {
                return s;
            }
        }
        unreachable!("residue {residue} below modulus {}", self.modulus)
    }

    /// The blown-up k-universe of an edge: part t holds the n copies of the
    /// edge's t-th vertex, with copy (v, l) carrying the global id v * n + l.
    pub fn blowup_universe(&self, edge: usize, n: usize) -> KUniverse {
        let parts = self.edges[edge]
            .iter()
            .map(|&v| (0..n).map(|l| (v * n + l) as u64).collect())
            .collect();
        KUniverse { parts }
    }
}

/// Blow-up and player-count parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DihpParams {
    pub n: usize,
    #[serde(with = "crate::ratio")]
    pub alpha: Rational,
    pub copies_per_edge: u64,
    pub certified: bool,
}

impl DihpParams {
    pub fn new(
        n: usize,
        alpha: Rational,
        copies_per_edge: u64,
        certified: bool,
        arity: usize,
    ) -> Result<Self, DihpError> {
        if !alpha.is_positive() || alpha >= Rational::one() {
            return Err(DihpError::BadParams("alpha must lie in (0, 1)".into()));
        }
        let scaled = &alpha * &rat_usize(n);
        if !scaled.denom().is_one() {
            return Err(DihpError::BadParams("alpha * n must be an integer".into()));
        }
        if certified {
            let k3 = rat_usize(arity.pow(3));
            let cap = Rational::new(BigInt::one(), BigInt::from(100_000_000u64)) / k3;
            if alpha > cap {
                return Err(DihpError::BadParams(
                    "certified mode requires alpha <= 1e-8 / k^3".into(),
                ));
            }
        }
        Ok(DihpParams { n, alpha, copies_per_edge, certified })
    }

    pub fn matched_edges(&self) -> usize {
        (&self.alpha * &rat_usize(self.n)).numer().to_usize().expect("alpha n fits usize")
    }
}

/// Certified player count for a target distinguishing error, reported for
/// reference: `100 / (alpha eps^2) * N^(2k) * |V| * ln sigma`.
pub fn certified_copies(graph: &DistributionLabeledGraph, alpha: &Rational, eps: &Rational) -> f64 {
    let k = graph.family.arity() as u32;
    let n2k = (graph.modulus as f64).powi(2 * k as i32);
    let sigma = graph.family.alphabet_size() as f64;
    100.0 / (crate::ratio::to_f64(alpha) * crate::ratio::to_f64(eps).powi(2))
        * n2k
        * graph.num_vertices as f64
        * sigma.ln().max(f64::MIN_POSITIVE)
}

/// Builds the gap graph from an exact optimum of the instance's basic LP.
/// The solution is re-verified (feasibility identities and optimality) before
/// any construction happens.
pub fn build_gap_graph(
    instance: &Instance,
    sol: &LpSolution,
) -> Result<DistributionLabeledGraph, DihpError> {
    verify_basic_solution(instance, sol)?;
    let best = lp_value(instance)?;
    if best != sol.objective_value {
        return Err(DihpError::Lp(LpError::NotOptimal(format!(
            "objective {} differs from the optimum {}",
            crate::ratio::display(&sol.objective_value),
            crate::ratio::display(&best)
        ))));
    }

    let fam = instance.family();
    let sigma = fam.alphabet_size();
    let k = fam.arity();
    let all_values = sol.x.iter().flatten().chain(sol.z.iter().flatten());
    let modulus_big = crate::ratio::lcm_denominators(all_values);
    let modulus = modulus_big.to_u32().ok_or_else(|| {
        DihpError::BadParams("common denominator exceeds u32 at desk scale".into())
    })?;

    // Interval maps: consecutive blocks of length N * x[v][s] under the
    // natural symbol order.
    let mut q_bounds = Vec::with_capacity(instance.num_vars());
    for v in 0..instance.num_vars() {
        let mut bounds = Vec::with_capacity(sigma + 1);
        let mut acc = Rational::zero();
        bounds.push(0u32);
        for s in 0..sigma {
            acc = &acc + &sol.x[v][s];
            let scaled = &acc * &Rational::from_integer(BigInt::from(modulus));
            debug_assert!(scaled.denom().is_one());
            bounds.push(scaled.numer().to_u32().expect("interval boundary fits u32"));
        }
        debug_assert_eq!(*bounds.last().unwrap(), modulus);
        q_bounds.push(bounds);
    }

    let mut edges = Vec::new();
    let mut predicates = Vec::new();
    let mut mu = Vec::new();
    let mut p_star = Vec::new();
    let size = (modulus as usize).pow(k as u32);
    for (i, c) in instance.constraints().iter().enumerate() {
        edges.push(c.scope.clone());
        predicates.push(c.predicate);
        // mu(w) = z*[b(w)] / prod_t (N * x*[v_t][b_t]) where b(w) applies the
        // interval maps coordinate-wise.
        let mut pmf = Vec::with_capacity(size);
        for idx in 0..size {
            let w = tuple_at(modulus, k, idx);
            let mut symbol_tuple = Vec::with_capacity(k);
            for (t, &res) in w.iter().enumerate() {
                let v = c.scope[t];
                let bounds = &q_bounds[v];
                let s = (0..sigma)
                    .find(|&s| bounds[s] <= res && res < bounds[s + 1])
                    .expect("residue inside some interval");
                symbol_tuple.push(s);
            }
            let z = &sol.z[i][fam.tuple_index(&symbol_tuple)];
            if z.is_zero() {
                pmf.push(Rational::zero());
                continue;
            }
            let mut denom = Rational::one();
            for (t, &s) in symbol_tuple.iter().enumerate() {
                let v = c.scope[t];
                let width = q_bounds[v][s + 1] - q_bounds[v][s];
                denom = &denom * &rat_usize(width as usize);
            }
            pmf.push(z / &denom);
        }
        let dist = OneWiseDistribution::new(modulus, k, pmf)?;
        debug_assert!(check_one_wise_independent(&dist));
        mu.push(dist);
        p_star.push(sol.constraint_mass(instance, i));
    }

    Ok(DistributionLabeledGraph {
        num_vertices: instance.num_vars(),
        edges,
        predicates,
        family: fam.clone(),
        modulus,
        mu,
        q_bounds,
        p_star,
    })
}

/// Uniform matching with `edge_count` edges: a uniform injection per part,
/// read off row by row.
pub fn sample_uniform_matching(
    universe: &KUniverse,
    edge_count: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<u64>>, DihpError> {
    if edge_count > universe.cardinality() {
        return Err(DihpError::BadParams(format!(
            "cannot match {edge_count} edges in a universe of cardinality {}",
            universe.cardinality()
        )));
    }
    let mut selections = Vec::with_capacity(universe.arity());
    for part in &universe.parts {
        let mut pool = part.clone();
        let mut chosen = Vec::with_capacity(edge_count);
        for _ in 0..edge_count {
            let idx = rng.below_usize(pool.len());
            chosen.push(pool.swap_remove(idx));
        }
        selections.push(chosen);
    }
    let mut edges: Vec<Vec<u64>> = (0..edge_count)
        .map(|r| selections.iter().map(|sel| sel[r]).collect())
        .collect();
    edges.sort_unstable();
    Ok(edges)
}

/// One kernel transition: a uniform matching whose edge e is labeled
/// `x restricted to e, minus a fresh mask drawn from mu` in `Z_N^k`.
pub fn markov_sample(
    universe: &KUniverse,
    edge_count: usize,
    mu: &OneWiseDistribution,
    x: &dyn Fn(u64) -> u32,
    rng: &mut Rng,
) -> Result<LabeledMatching, DihpError> {
    if mu.arity != universe.arity() {
        return Err(DihpError::BadParams("distribution arity mismatch".into()));
    }
    let support = sample_uniform_matching(universe, edge_count, rng)?;
    let modulus = mu.modulus;
    let edges = support
        .into_iter()
        .map(|edge| {
            let mask = mu.sample(rng);
            let label: Vec<u32> =
                edge.iter().zip(&mask).map(|(&v, &w)| (x(v) + modulus - w) % modulus).collect();
            (edge, label)
        })
        .collect();
    Ok(LabeledMatching { edges })
}

/// The joint input to all players, ordered by (edge index, copy index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointInput {
    pub players: Vec<PlayerInput>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerInput {
    pub edge: usize,
    pub copy: u64,
    pub matching: LabeledMatching,
}

/// Correlated inputs: a hidden uniform vector over the blown-up vertex set is
/// masked independently for every player through its edge's kernel.
pub fn sample_yes(
    graph: &DistributionLabeledGraph,
    params: &DihpParams,
    seed: u64,
) -> Result<(Vec<u32>, JointInput), DihpError> {
    let n = params.n;
    let edge_count = params.matched_edges();
    let mut rng = Rng::derive(seed, &[0x7965_7300, 0]);
    let hidden: Vec<u32> = (0..graph.num_vertices * n)
        .map(|_| rng.below(graph.modulus as u64) as u32)
        .collect();
    let mut players = Vec::new();
    for edge in 0..graph.edges.len() {
        let universe = graph.blowup_universe(edge, n);
        for copy in 0..params.copies_per_edge {
            let mut prng = Rng::derive(seed, &[0x7965_7300, 1, edge as u64, copy]);
            let matching = markov_sample(
                &universe,
                edge_count,
                &graph.mu[edge],
                &|v| hidden[v as usize],
                &mut prng,
            )?;
            players.push(PlayerInput { edge, copy, matching });
        }
    }
    Ok((hidden, JointInput { players }))
}

/// Independent inputs: every player draws a uniform labeled matching.
pub fn sample_no(
    graph: &DistributionLabeledGraph,
    params: &DihpParams,
    seed: u64,
) -> Result<JointInput, DihpError> {
    let n = params.n;
    let edge_count = params.matched_edges();
    let k = graph.family.arity();
    let mut players = Vec::new();
    for edge in 0..graph.edges.len() {
        let universe = graph.blowup_universe(edge, n);
        for copy in 0..params.copies_per_edge {
            let mut prng = Rng::derive(seed, &[0x6e6f_0000, edge as u64, copy]);
            let support = sample_uniform_matching(&universe, edge_count, &mut prng)?;
            let edges = support
                .into_iter()
                .map(|e| {
                    let label: Vec<u32> =
                        (0..k).map(|_| prng.below(graph.modulus as u64) as u32).collect();
                    (e, label)
                })
                .collect();
            players.push(PlayerInput { edge, copy, matching: LabeledMatching { edges } });
        }
    }
    Ok(JointInput { players })
}

/// Keeps every zero-labeled edge of every player as one constraint. Segments
/// concatenate in player order; within a segment constraints follow the edge
/// tuple order. The result may be empty (callers resample).
pub fn reduce_to_instance(
    joint: &JointInput,
    graph: &DistributionLabeledGraph,
    n: usize,
) -> Result<Instance, DihpError> {
    let mut constraints = Vec::new();
    for player in &joint.players {
        for (edge, label) in &player.matching.edges {
            if label.iter().all(|&r| r == 0) {
                constraints.push(Constraint {
                    scope: edge.iter().map(|&v| v as usize).collect(),
                    predicate: graph.predicates[player.edge],
                });
            }
        }
    }
    Ok(Instance::new(graph.num_vertices * n, graph.family.clone(), constraints)?)
}

/// Applies the interval maps coordinate-wise to a hidden vector.
pub fn lifted_assignment(
    hidden: &[u32],
    graph: &DistributionLabeledGraph,
    n: usize,
) -> Assignment {
    let values = hidden
        .iter()
        .enumerate()
        .map(|(idx, &res)| graph.symbol_of(idx / n, res))
        .collect();
    Assignment::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::PredicateFamily;
    use crate::lp::solve_basic_lp;
    use crate::ratio::rat;

    fn single_dicut() -> Instance {
        Instance::new(
            2,
            Arc::new(PredicateFamily::dicut()),
            vec![Constraint { scope: vec![0, 1], predicate: 0 }],
        )
        .unwrap()
    }

    #[test]
    fn one_wise_checks() {
        assert!(check_one_wise_independent(&OneWiseDistribution::uniform(3, 2)));
        assert!(check_one_wise_independent(&OneWiseDistribution::diagonal(4, 2)));
        let point = OneWiseDistribution::point_mass(2, &[1, 0]);
        assert!(!check_one_wise_independent(&point));
        // Z_1 is degenerate: the point mass at 0 is trivially one-wise.
        assert!(check_one_wise_independent(&OneWiseDistribution::point_mass(1, &[0, 0])));
    }

    #[test]
    fn gap_graph_of_satisfiable_singleton_is_trivial() {
        let inst = single_dicut();
        let sol = solve_basic_lp(&inst).unwrap();
        let graph = build_gap_graph(&inst, &sol).unwrap();
        assert_eq!(graph.modulus, 1);
        assert_eq!(graph.p_star, vec![rat(1, 1)]);
        assert_eq!(graph.mu[0].pmf, vec![rat(1, 1)]);
        // Constant interval maps.
        assert_eq!(graph.symbol_of(0, 0), 1);
        assert_eq!(graph.symbol_of(1, 0), 0);
    }

    #[test]
    fn gap_graph_of_bidirectional_triangle() {
        let inst = Instance::dicut_complete_bidirectional(3);
        let sol = solve_basic_lp(&inst).unwrap();
        let graph = build_gap_graph(&inst, &sol).unwrap();
        assert_eq!(graph.modulus, 2);
        for mu in &graph.mu {
            assert!(check_one_wise_independent(mu));
        }
        for p in &graph.p_star {
            assert_eq!(*p, rat(1, 2));
        }
    }

    #[test]
    fn gap_graph_of_e2sat_has_unit_masses() {
        let inst = Instance::e2sat_all_clauses(3);
        let sol = solve_basic_lp(&inst).unwrap();
        let graph = build_gap_graph(&inst, &sol).unwrap();
        for p in &graph.p_star {
            assert_eq!(*p, rat(1, 1));
        }
    }

    #[test]
    fn gap_graph_rejects_non_optimal_solutions() {
        let inst = Instance::dicut_complete_bidirectional(3);
        let mut sol = solve_basic_lp(&inst).unwrap();
        // The uniform point is feasible but not optimal.
        sol.x = vec![vec![rat(1, 2), rat(1, 2)]; 3];
        sol.z = vec![vec![rat(1, 4); 4]; 6];
        sol.objective_value = rat(1, 4);
        assert!(build_gap_graph(&inst, &sol).is_err());
    }

    #[test]
    fn empty_matching_and_full_matching() {
        let universe =
            KUniverse::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let mut rng = Rng::new(5);
        assert!(sample_uniform_matching(&universe, 0, &mut rng).unwrap().is_empty());
        let full = sample_uniform_matching(&universe, 2, &mut rng).unwrap();
        assert_eq!(full.len(), 2);
        assert!(sample_uniform_matching(&universe, 3, &mut rng).is_err());
    }

    #[test]
    fn perfect_matching_frequencies_are_uniform() {
        // |U| = 2, k = 2: exactly two perfect matchings.
        let universe = KUniverse::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let mut rng = Rng::new(77);
        let draws = 10_000;
        let mut straight = 0u32;
        for _ in 0..draws {
            let m = sample_uniform_matching(&universe, 2, &mut rng).unwrap();
            if m == vec![vec![0, 2], vec![1, 3]] {
                straight += 1;
            } else {
                assert_eq!(m, vec![vec![0, 3], vec![1, 2]]);
            }
        }
        let p = straight as f64 / draws as f64;
        let sigma = (0.25f64 / draws as f64).sqrt();
        assert!((p - 0.5).abs() <= 3.0 * sigma, "p = {p}");
    }

    #[test]
    fn point_mass_kernel_reveals_restriction() {
        let universe = KUniverse::new(vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let mu = OneWiseDistribution::point_mass(1, &[0, 0]);
        let mut rng = Rng::new(3);
        let x = |v: u64| (v % 1) as u32;
        let y = markov_sample(&universe, 2, &mu, &x, &mut rng).unwrap();
        for (_, label) in &y.edges {
            assert_eq!(label, &vec![0, 0]);
        }
        // With modulus 2 and a zero mask, labels equal the restriction of x.
        let mu2 = OneWiseDistribution::point_mass(2, &[0, 0]);
        let x2 = |v: u64| (v % 2) as u32;
        let y2 = markov_sample(&universe, 2, &mu2, &x2, &mut rng).unwrap();
        for (edge, label) in &y2.edges {
            assert_eq!(label[0], x2(edge[0]));
            assert_eq!(label[1], x2(edge[1]));
        }
    }

    #[test]
    fn yes_samples_are_deterministic_and_well_shaped() {
        let inst = Instance::dicut_complete_bidirectional(3);
        let sol = solve_basic_lp(&inst).unwrap();
        let graph = build_gap_graph(&inst, &sol).unwrap();
        let params = DihpParams::new(4, rat(1, 4), 3, false, 2).unwrap();
        let (h1, j1) = sample_yes(&graph, &params, 9).unwrap();
        let (h2, j2) = sample_yes(&graph, &params, 9).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(j1, j2);
        assert_eq!(j1.players.len(), 6 * 3);
        for p in &j1.players {
            assert_eq!(p.matching.len(), 1);
            assert!(p.matching.is_matching());
        }
    }

    #[test]
    fn no_samples_have_uniform_labels() {
        let inst = Instance::dicut_complete_bidirectional(3);
        let sol = solve_basic_lp(&inst).unwrap();
        let graph = build_gap_graph(&inst, &sol).unwrap();
        let params = DihpParams::new(2, rat(1, 2), 2, false, 2).unwrap();
        let mut counts = [0u32; 4];
        let draws = 4000;
        for seed in 0..draws {
            let joint = sample_no(&graph, &params, seed).unwrap();
            let (_, label) = &joint.players[0].matching.edges[0];
            counts[(label[0] * 2 + label[1]) as usize] += 1;
        }
        let expect = draws as f64 / 4.0;
        for &c in &counts {
            assert!((c as f64 - expect).abs() < 4.0 * expect.sqrt(), "{counts:?}");
        }
    }

    #[test]
    fn alpha_n_must_be_integral() {
        assert!(DihpParams::new(5, rat(1, 2), 1, false, 2).is_err());
        assert!(DihpParams::new(6, rat(1, 2), 1, false, 2).is_ok());
        // Certified mode rejects large alpha.
        assert!(DihpParams::new(6, rat(1, 2), 1, true, 2).is_err());
    }

    #[test]
    fn reduction_keeps_exactly_zero_labels() {
        let inst = single_dicut();
        let sol = solve_basic_lp(&inst).unwrap();
        let graph = build_gap_graph(&inst, &sol).unwrap();
        // Modulus 1: every label is zero, so every matched edge becomes a
        // constraint.
        let params = DihpParams::new(3, rat(1, 3), 2, false, 2).unwrap();
        let (_, joint) = sample_yes(&graph, &params, 4).unwrap();
        let reduced = reduce_to_instance(&joint, &graph, 3).unwrap();
        assert_eq!(reduced.num_constraints(), 2);
        assert_eq!(reduced.num_vars(), 6);

        // Force all labels nonzero: empty instance is reported, not an error.
        let inst2 = Instance::dicut_complete_bidirectional(3);
        let sol2 = solve_basic_lp(&inst2).unwrap();
        let graph2 = build_gap_graph(&inst2, &sol2).unwrap();
        let mut joint2 = sample_no(&graph2, &DihpParams::new(2, rat(1, 2), 1, false, 2).unwrap(), 1)
            .unwrap();
        for p in &mut joint2.players {
            for (_, label) in &mut p.matching.edges {
                label[0] = 1;
            }
        }
        let reduced2 = reduce_to_instance(&joint2, &graph2, 2).unwrap();
        assert!(reduced2.is_empty());
    }

    #[test]
    fn lifted_assignment_saturates_perfectly_complete_graphs() {
        // LP value 1: every placed constraint is satisfied by the lifted
        // assignment, on every sample.
        let inst = Instance::e2sat_all_clauses(3);
        let sol = solve_basic_lp(&inst).unwrap();
        let graph = build_gap_graph(&inst, &sol).unwrap();
        let params = DihpParams::new(4, rat(1, 2), 2, false, 2).unwrap();
        for seed in 0..30u64 {
            let (hidden, joint) = sample_yes(&graph, &params, seed).unwrap();
            let reduced = reduce_to_instance(&joint, &graph, 4).unwrap();
            if reduced.is_empty() {
                continue;
            }
            let tau = lifted_assignment(&hidden, &graph, 4);
            assert_eq!(reduced.value(&tau).unwrap(), rat(1, 1));
        }
    }
}
