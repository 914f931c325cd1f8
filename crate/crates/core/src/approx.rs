//! Local LP estimation and the sampling-based gap decider.
//!
//! A CSP instance is viewed as a bipartite graph between variables and
//! constraints (edges labeled by scope position). The radius-r ball around a
//! constraint is extracted, the basic LP restricted to that ball is solved
//! exactly, and the root's local assignment distribution is read off. Scope
//! positions of frontier constraints that point outside the ball are modeled
//! as fresh anonymous variables, which only relaxes the program.
//!
//! Averaging the root mass over uniformly sampled constraint copies of a
//! bounded-degree blow-up estimates the blow-up's LP value. The whole
//! estimator runs as a multi-pass streaming algorithm: one pass to learn the
//! stream length, then three passes per fresh oracle query (cached queries
//! replay for free), so a run uses exactly `1 + 3 * fresh_queries` passes.

use crate::blowup::{resolve_answer, BlowupParams, OracleAnswer, OracleState, SlotRef};
use crate::csp::{Constraint, CspError, Instance, PredicateFamily};
use crate::lp::{solve_basic_lp, LpError};
use crate::ratio::{rat_usize, Rational};
use crate::rng::Rng;
use crate::stream::{run_multipass, PassOutcome, SpaceBound, StreamOutput, StreamRun, StreamingAlgorithm};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub enum ApproxError {
    Stream(crate::stream::StreamError),
    Lp(LpError),
    Csp(CspError),
    BadParameter(String),
}

impl fmt::Display for ApproxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxError::Stream(e) => write!(f, "{e}"),
            ApproxError::Lp(e) => write!(f, "{e}"),
            ApproxError::Csp(e) => write!(f, "{e}"),
            ApproxError::BadParameter(msg) => write!(f, "bad parameter: {msg}"),
        }
    }
}

impl std::error::Error for ApproxError {}

impl From<crate::stream::StreamError> for ApproxError {
    fn from(e: crate::stream::StreamError) -> Self {
        ApproxError::Stream(e)
    }
}

impl From<LpError> for ApproxError {
    fn from(e: LpError) -> Self {
        ApproxError::Lp(e)
    }
}

impl From<CspError> for ApproxError {
    fn from(e: CspError) -> Self {
        ApproxError::Csp(e)
    }
}

/// A radius-r ball in the variable/constraint bipartite graph, rooted at a
/// constraint. Variables and constraints carry canonical tags so that two
/// extractions of the same subgraph produce identical structures regardless
/// of the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub radius: u32,
    pub family: Arc<PredicateFamily>,
    /// Canonical variable tags, sorted.
    pub variables: Vec<u64>,
    /// Member constraints, sorted by tag.
    pub constraints: Vec<NeighborhoodConstraint>,
    /// Index of the root in `constraints`.
    pub root: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodConstraint {
    pub tag: u64,
    pub predicate: usize,
    /// Position -> index into `variables`; None when the scope variable lies
    /// outside the ball (possible only for constraints on the frontier).
    pub scope: Vec<Option<usize>>,
}

impl Neighborhood {
    /// Vertices plus edges, for size sanity checks.
    pub fn size(&self) -> usize {
        self.variables.len()
            + self.constraints.len()
            + self
                .constraints
                .iter()
                .map(|c| c.scope.iter().filter(|s| s.is_some()).count())
                .sum::<usize>()
    }
}

/// Extracts the radius-r ball around constraint `root` by breadth-first
/// search. Variable tags are variable ids; constraint tags are constraint
/// indices.
pub fn extract_neighborhood(
    instance: &Instance,
    root: usize,
    radius: u32,
) -> Result<Neighborhood, CspError> {
    if root >= instance.num_constraints() {
        return Err(CspError::IndexOutOfRange(format!("constraint {root}")));
    }
    if radius < 1 {
        return Err(CspError::IndexOutOfRange("radius must be at least 1".into()));
    }
    let positions = crate::blowup::positions_by_variable(instance);
    let mut cons_dist: BTreeMap<usize, u32> = BTreeMap::new();
    let mut var_dist: BTreeMap<usize, u32> = BTreeMap::new();
    let mut queue: VecDeque<(bool, usize)> = VecDeque::new(); // (is_constraint, id)
    cons_dist.insert(root, 0);
    queue.push_back((true, root));
    while let Some((is_cons, id)) = queue.pop_front() {
        if is_cons {
            let d = cons_dist[&id];
            if d + 1 > radius {
                continue;
            }
            for &v in &instance.constraints()[id].scope {
                if let std::collections::btree_map::Entry::Vacant(e) = var_dist.entry(v) {
                    e.insert(d + 1);
                    queue.push_back((false, v));
                }
            }
        } else {
            let d = var_dist[&id];
            if d + 1 > radius {
                continue;
            }
            for &(ci, _) in &positions[id] {
                if let std::collections::btree_map::Entry::Vacant(e) = cons_dist.entry(ci) {
                    e.insert(d + 1);
                    queue.push_back((true, ci));
                }
            }
        }
    }

    let variables: Vec<u64> = var_dist.keys().map(|&v| v as u64).collect();
    let var_index: BTreeMap<u64, usize> =
        variables.iter().enumerate().map(|(idx, &tag)| (tag, idx)).collect();
    let mut constraints = Vec::new();
    for &ci in cons_dist.keys() {
        let c = &instance.constraints()[ci];
        let scope = c
            .scope
            .iter()
            .map(|&v| var_index.get(&(v as u64)).copied())
            .collect();
        constraints.push(NeighborhoodConstraint { tag: ci as u64, predicate: c.predicate, scope });
    }
    let root_idx = constraints.iter().position(|c| c.tag == root as u64).unwrap();
    Ok(Neighborhood {
        radius,
        family: instance.family().clone(),
        variables,
        constraints,
        root: root_idx,
    })
}

/// Solves the basic LP restricted to the ball and returns the root's local
/// assignment distribution (one entry per symbol tuple). Out-of-ball scope
/// positions become fresh anonymous variables. Deterministic: depends only on
/// the canonical structure of the ball.
pub fn local_lp_estimate(nbhd: &Neighborhood) -> Result<Vec<Rational>, LpError> {
    let mut next_var = nbhd.variables.len();
    let mut constraints = Vec::with_capacity(nbhd.constraints.len());
    for c in &nbhd.constraints {
        let scope = c
            .scope
            .iter()
            .map(|slot| match slot {
                Some(idx) => *idx,
                None => {
                    let id = next_var;
                    next_var += 1;
                    id
                }
            })
            .collect();
        constraints.push(Constraint { scope, predicate: c.predicate });
    }
    let sub = Instance::new(next_var, nbhd.family.clone(), constraints)
        .map_err(|e| LpError::BadIndex(e.to_string()))?;
    let sol = solve_basic_lp(&sub)?;
    Ok(sol.z[nbhd.root].clone())
}

/// LP mass the estimate puts on the root's satisfying assignments.
pub fn estimate_mass(family: &PredicateFamily, predicate: usize, z: &[Rational]) -> Rational {
    let mut mass = Rational::zero();
    for (t, &sat) in family.table(predicate).iter().enumerate() {
        if sat {
            mass = &mass + &z[t];
        }
    }
    mass
}

/// Average of the local root mass over every constraint of the instance.
/// When the radius covers each constraint's whole connected component this
/// equals the LP value exactly.
pub fn local_estimate_average(instance: &Instance, radius: u32) -> Result<Rational, ApproxError> {
    let mut acc = Rational::zero();
    for i in 0..instance.num_constraints() {
        let nbhd = extract_neighborhood(instance, i, radius)?;
        let z = local_lp_estimate(&nbhd)?;
        acc = &acc + &estimate_mass(instance.family(), instance.constraints()[i].predicate, &z);
    }
    Ok(acc / rat_usize(instance.num_constraints()))
}

// ---------------------------------------------------------------------------
// Streaming estimator
// ---------------------------------------------------------------------------

/// Ball under construction over blow-up copies. Copy tags are
/// `round * m + constraint`; slot tags pack (variable, slot).
struct BallBuilder {
    radius: u32,
    m: usize,
    arity: usize,
    root_tag: u64,
    copies: BTreeMap<u64, CopyInfo>,
    slots: BTreeMap<u64, u32>,
    expanded: BTreeSet<u64>,
}

struct CopyInfo {
    dist: u32,
    predicate: Option<usize>,
    scope: Vec<Option<SlotRef>>,
}

fn slot_tag(s: &SlotRef) -> u64 {
    ((s.var as u64) << 32) | s.slot as u64
}

impl BallBuilder {
    fn new(radius: u32, m: usize, arity: usize, root: (usize, u64)) -> Self {
        let root_tag = root.1 * m as u64 + root.0 as u64;
        let mut copies = BTreeMap::new();
        copies.insert(
            root_tag,
            CopyInfo { dist: 0, predicate: None, scope: vec![None; arity] },
        );
        let mut expanded = BTreeSet::new();
        expanded.insert(root_tag);
        BallBuilder { radius, m, arity, root_tag, copies, slots: BTreeMap::new(), expanded }
    }

    /// Digests one oracle answer; returns copies that must be expanded next.
    fn apply(&mut self, i: usize, round: u64, t: usize, ans: &OracleAnswer) -> Vec<(usize, u64)> {
        let copy = round * self.m as u64 + i as u64;
        let copy_dist = self.copies.get(&copy).map(|c| c.dist).expect("queried copy in ball");
        let stag = slot_tag(&ans.root);
        let slot_dist = *self.slots.entry(stag).or_insert(copy_dist + 1);
        if let Some(info) = self.copies.get_mut(&copy) {
            info.scope[t] = Some(ans.root);
        }
        let mut fresh = Vec::new();
        if slot_dist + 1 > self.radius {
            // Incident copies would fall outside the ball; keep only edges to
            // copies already inside it.
            for inc in &ans.incident {
                let tag = inc.round * self.m as u64 + inc.constraint as u64;
                if let Some(info) = self.copies.get_mut(&tag) {
                    info.scope[inc.position] = Some(ans.root);
                    info.predicate.get_or_insert(inc.predicate);
                }
            }
            return fresh;
        }
        for inc in &ans.incident {
            let tag = inc.round * self.m as u64 + inc.constraint as u64;
            let entry = self.copies.entry(tag).or_insert_with(|| CopyInfo {
                dist: slot_dist + 1,
                predicate: None,
                scope: vec![None; self.arity],
            });
            entry.scope[inc.position] = Some(ans.root);
            entry.predicate.get_or_insert(inc.predicate);
            if entry.dist < self.radius && self.expanded.insert(tag) {
                fresh.push((inc.constraint, inc.round));
            }
        }
        fresh
    }

    fn assemble(&self, family: &Arc<PredicateFamily>) -> Neighborhood {
        let variables: Vec<u64> = self.slots.keys().copied().collect();
        let var_index: BTreeMap<u64, usize> =
            variables.iter().enumerate().map(|(idx, &tag)| (tag, idx)).collect();
        let mut constraints = Vec::new();
        for (&tag, info) in self.copies.iter() {
            let scope = info
                .scope
                .iter()
                .map(|s| s.as_ref().and_then(|r| var_index.get(&slot_tag(r)).copied()))
                .collect();
            constraints.push(NeighborhoodConstraint {
                tag,
                predicate: info.predicate.expect("predicate observed"),
                scope,
            });
        }
        let root = constraints.iter().position(|c| c.tag == self.root_tag).unwrap();
        Neighborhood { radius: self.radius, family: family.clone(), variables, constraints, root }
    }

    fn bits(&self) -> u64 {
        (self.copies.len() as u64) * (128 + 96 * self.arity as u64)
            + (self.slots.len() as u64) * 96
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    CountStream,
    FetchVariable,
    CountDegree,
    AssembleNeighborhood,
    Finished,
}

/// Per-pass scratch for the query being resolved.
#[derive(Default)]
struct Gather {
    var: Option<usize>,
    degree: usize,
    positions: Vec<(usize, usize)>,
    predicates: Vec<usize>,
}

/// The streaming LP-value estimator: uniformly samples `samples` constraint
/// copies of the blow-up, recovers each copy's radius-r ball through the lazy
/// oracle, applies the local LP estimator, and averages the root masses.
pub struct ApproxLpAlgorithm {
    family: Arc<PredicateFamily>,
    params: BlowupParams,
    samples: u64,
    radius: u32,
    seed: u64,
    oracle: OracleState,
    m: usize,
    phase: Phase,
    iteration: u64,
    acc: Rational,
    ball: Option<BallBuilder>,
    pending: VecDeque<(usize, u64, usize)>,
    scan_index: usize,
    gather: Gather,
    pub estimate_error: Option<LpError>,
}

impl ApproxLpAlgorithm {
    pub fn new(
        family: Arc<PredicateFamily>,
        params: BlowupParams,
        samples: u64,
        radius: u32,
    ) -> Self {
        assert!(samples >= 1 && radius >= 1);
        ApproxLpAlgorithm {
            family,
            oracle: OracleState::new(params.clone(), 0),
            params,
            samples,
            radius,
            seed: 0,
            m: 0,
            phase: Phase::CountStream,
            iteration: 0,
            acc: Rational::zero(),
            ball: None,
            pending: VecDeque::new(),
            scan_index: 0,
            gather: Gather::default(),
        estimate_error: None,
        }
    }

    pub fn fresh_queries(&self) -> u64 {
        self.oracle.fresh_queries
    }

    fn start_iteration(&mut self) {
        let mut rng = Rng::derive(self.seed, &[0x726f_6f74, self.iteration]);
        let i = rng.below_usize(self.m);
        let round = rng.below(self.params.rounds);
        let k = self.family.arity();
        self.ball = Some(BallBuilder::new(self.radius, self.m, k, (i, round)));
        self.pending.clear();
        for t in 0..k {
            self.pending.push_back((i, round, t));
        }
    }

    fn finish_iteration(&mut self) {
        let ball = self.ball.take().expect("ball in progress");
        let nbhd = ball.assemble(&self.family);
        match local_lp_estimate(&nbhd) {
            Ok(z) => {
                let pred = nbhd.constraints[nbhd.root].predicate;
                self.acc = &self.acc + &estimate_mass(&self.family, pred, &z);
            }
            Err(e) => {
                self.estimate_error.get_or_insert(e);
            }
        }
        self.iteration += 1;
    }

    /// Replays cached answers and finished iterations until a fresh query
    /// needs stream passes, or the whole run is complete.
    fn advance(&mut self) -> PassOutcome {
        loop {
            while let Some(&(i, round, t)) = self.pending.front() {
                match self.oracle.cached(i, round, t).cloned() {
                    Some(ans) => {
                        self.pending.pop_front();
                        let fresh = self
                            .ball
                            .as_mut()
                            .expect("ball in progress")
                            .apply(i, round, t, &ans);
                        for (fi, fr) in fresh {
                            for ft in 0..self.family.arity() {
                                self.pending.push_back((fi, fr, ft));
                            }
                        }
                    }
                    None => {
                        self.phase = Phase::FetchVariable;
                        self.gather = Gather::default();
                        return PassOutcome::Continue;
                    }
                }
            }
            self.finish_iteration();
            if self.iteration >= self.samples {
                self.phase = Phase::Finished;
                return PassOutcome::Done;
            }
            self.start_iteration();
        }
    }
}

impl StreamingAlgorithm for ApproxLpAlgorithm {
    fn init(&mut self, seed: u64, _num_vars: usize) {
        self.seed = seed;
        // The oracle shares the run seed: the implicit blow-up it reveals is
        // exactly the instance the full sampler materializes from this seed.
        self.oracle = OracleState::new(self.params.clone(), seed);
        self.m = 0;
        self.phase = Phase::CountStream;
        self.iteration = 0;
        self.acc = Rational::zero();
        self.ball = None;
        self.pending.clear();
        self.estimate_error = None;
    }

    fn begin_pass(&mut self, _pass: u64) {
        self.scan_index = 0;
    }

    fn process(&mut self, constraint: &Constraint) {
        let idx = self.scan_index;
        self.scan_index += 1;
        match self.phase {
            Phase::CountStream => {}
            Phase::FetchVariable => {
                let &(i, _, t) = self.pending.front().expect("pending query");
                if idx == i {
                    self.gather.var = Some(constraint.scope[t]);
                }
            }
            Phase::CountDegree => {
                let v = self.gather.var.expect("variable fetched");
                self.gather.degree +=
                    constraint.scope.iter().filter(|&&u| u == v).count();
            }
            Phase::AssembleNeighborhood => {
                let v = self.gather.var.expect("variable fetched");
                for (t, &u) in constraint.scope.iter().enumerate() {
                    if u == v {
                        self.gather.positions.push((idx, t));
                        self.gather.predicates.push(constraint.predicate);
                    }
                }
            }
            Phase::Finished => {}
        }
    }

    fn end_pass(&mut self) -> PassOutcome {
        match self.phase {
            Phase::CountStream => {
                self.m = self.scan_index;
                self.start_iteration();
                self.advance()
            }
            Phase::FetchVariable => {
                self.phase = Phase::CountDegree;
                PassOutcome::Continue
            }
            Phase::CountDegree => {
                self.phase = Phase::AssembleNeighborhood;
                PassOutcome::Continue
            }
            Phase::AssembleNeighborhood => {
                let &(i, round, t) = self.pending.front().expect("pending query");
                debug_assert_eq!(self.gather.positions.len(), self.gather.degree);
                let ans = resolve_answer(
                    self.oracle.seed,
                    &self.params,
                    self.gather.var.expect("variable fetched"),
                    &self.gather.positions,
                    &self.gather.predicates,
                    i,
                    round,
                    t,
                );
                self.oracle.record(i, round, t, ans);
                self.advance()
            }
            Phase::Finished => PassOutcome::Done,
        }
    }

    fn output(&self) -> StreamOutput {
        let done = self.iteration.max(1);
        StreamOutput::Estimate(self.acc.clone() / rat_usize(done as usize))
    }

    fn declared_space_bits(&self) -> SpaceBound {
        SpaceBound::Unbounded
    }

    fn tracked_bits(&self) -> u64 {
        let ball_bits = self.ball.as_ref().map_or(0, |b| b.bits());
        let gather_bits = 128 * self.gather.positions.len() as u64 + 128;
        self.oracle.cache_bits() + ball_bits + gather_bits + 256
    }
}

#[derive(Debug, Clone)]
pub struct ApproxOutcome {
    pub estimate: Rational,
    pub run: StreamRun,
    pub fresh_queries: u64,
}

/// Runs the streaming estimator on the given stream. The estimate targets the
/// LP value of the blow-up that `sample_bounded_instance` would materialize
/// from the same seed.
pub fn approx_lp(
    instance: &Instance,
    params: &BlowupParams,
    samples: u64,
    radius: u32,
    seed: u64,
) -> Result<ApproxOutcome, ApproxError> {
    let mut alg =
        ApproxLpAlgorithm::new(instance.family().clone(), params.clone(), samples, radius);
    let run = run_multipass(&mut alg, instance, seed)?;
    if let Some(e) = alg.estimate_error.take() {
        return Err(ApproxError::Lp(e));
    }
    let estimate = match &run.output {
        StreamOutput::Estimate(v) => v.clone(),
        StreamOutput::Decision(_) => unreachable!("estimator outputs estimates"),
    };
    Ok(ApproxOutcome { estimate, fresh_queries: alg.fresh_queries(), run })
}

/// Sample count needed for additive error `eps0` with high probability.
pub fn derived_sample_count(eps0: &Rational) -> u64 {
    crate::ratio::ceil_u64(&(crate::ratio::rat_int(10) / (eps0 * eps0)))
}

#[derive(Debug, Clone)]
pub struct GapDecision {
    pub accept: bool,
    pub threshold: Rational,
    pub estimate: Rational,
    pub passes: u64,
    pub fresh_queries: u64,
}

/// Accepts when the streamed LP estimate reaches the threshold placed at
/// `c + eps/2` (the midpoint of the prescribed window between
/// `c + 2 eps / 5` and `c + 3 eps / 5`).
pub fn gap_decider(
    instance: &Instance,
    c: &Rational,
    epsilon: &Rational,
    params: &BlowupParams,
    samples: u64,
    radius: u32,
    seed: u64,
) -> Result<GapDecision, ApproxError> {
    if !c.is_positive() || *c >= Rational::one() {
        return Err(ApproxError::BadParameter("completeness must lie in (0, 1)".into()));
    }
    if !epsilon.is_positive() || *epsilon >= Rational::one() {
        return Err(ApproxError::BadParameter("error parameter must lie in (0, 1)".into()));
    }
    let threshold = c + &(epsilon / &crate::ratio::rat_int(2));
    debug_assert!(threshold >= c + &(epsilon * &crate::ratio::rat(2, 5)));
    debug_assert!(threshold <= c + &(epsilon * &crate::ratio::rat(3, 5)));
    let outcome = approx_lp(instance, params, samples, radius, seed)?;
    Ok(GapDecision {
        accept: outcome.estimate >= threshold,
        threshold,
        estimate: outcome.estimate,
        passes: outcome.run.passes_used,
        fresh_queries: outcome.fresh_queries,
    })
}

/// The certified (non-surrogate) parameter plan for a target error: the
/// internal error budget, the sample count, and the blow-up parameters. The
/// locality radius has no closed form here and stays a tunable.
#[derive(Debug, Clone)]
pub struct CertifiedPlan {
    pub eps0: Rational,
    pub samples: u64,
    pub blowup: BlowupParams,
}

pub fn certified_plan(epsilon: &Rational, family: &PredicateFamily) -> CertifiedPlan {
    let eps0 = epsilon / &crate::ratio::rat_int(6);
    CertifiedPlan {
        samples: derived_sample_count(&eps0),
        blowup: crate::blowup::choose_params(&eps0, family),
        eps0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::PredicateFamily;
    use crate::lp::lp_value;
    use crate::ratio::{rat, rat_int};
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
    fn isolated_constraint_is_a_star() {
        let inst = single_dicut();
        let nbhd = extract_neighborhood(&inst, 0, 1).unwrap();
        assert_eq!(nbhd.variables.len(), 2);
        assert_eq!(nbhd.constraints.len(), 1);
        // k labeled edges, all present.
        assert_eq!(nbhd.constraints[0].scope, vec![Some(0), Some(1)]);
        assert_eq!(nbhd.size(), 2 + 1 + 2);
    }

    #[test]
    fn ball_size_respects_degree_bound() {
        let mut rng = Rng::new(4);
        let fam = Arc::new(PredicateFamily::two_sat());
        let mut cons = Vec::new();
        for _ in 0..12 {
            let a = rng.below_usize(6);
            let mut b = rng.below_usize(6);
            while b == a {
                b = rng.below_usize(6);
            }
            cons.push(Constraint { scope: vec![a, b], predicate: rng.below_usize(6) });
        }
        let inst = Instance::new(6, fam, cons).unwrap();
        let (blown, _) = crate::blowup::sample_bounded_instance(
            &inst,
            &BlowupParams::surrogate(4, 4),
            7,
        )
        .unwrap();
        let bound = blown.max_degree().max(2); // max(B, k)
        for radius in 1..=3u32 {
            let nbhd = extract_neighborhood(&blown, 0, radius).unwrap();
            assert!(nbhd.size() <= 2 * bound.pow(radius) + 1);
        }
    }

    #[test]
    fn full_radius_covers_component() {
        let inst = Instance::dicut_complete_bidirectional(4);
        let nbhd = extract_neighborhood(&inst, 0, 8).unwrap();
        assert_eq!(nbhd.variables.len(), 4);
        assert_eq!(nbhd.constraints.len(), 12);
    }

    #[test]
    fn isolated_dicut_estimate_puts_mass_one() {
        let inst = single_dicut();
        let nbhd = extract_neighborhood(&inst, 0, 1).unwrap();
        let z = local_lp_estimate(&nbhd).unwrap();
        let fam = inst.family();
        assert_eq!(estimate_mass(fam, 0, &z), rat_int(1));
        assert_eq!(z[fam.tuple_index(&[1, 0])], rat_int(1));
    }

    #[test]
    fn covering_radius_average_equals_lp_value() {
        // Connected instances: with the ball covering the whole component,
        // every root sees the same canonical LP, so the average telescopes to
        // the LP value exactly.
        let mut rng = Rng::new(21);
        for trial in 0..20 {
            let fam: Arc<PredicateFamily> = if trial % 2 == 0 {
                Arc::new(PredicateFamily::dicut())
            } else {
                Arc::new(PredicateFamily::two_sat())
            };
            let n = 2 + rng.below_usize(3);
            // A connected backbone plus random extras.
            let mut cons = Vec::new();
            for v in 1..n {
                cons.push(Constraint {
                    scope: vec![v - 1, v],
                    predicate: rng.below_usize(fam.num_predicates()),
                });
            }
            for _ in 0..rng.below_usize(4) {
                let a = rng.below_usize(n);
                let mut b = rng.below_usize(n);
                while b == a {
                    b = rng.below_usize(n);
                }
                cons.push(Constraint {
                    scope: vec![a, b],
                    predicate: rng.below_usize(fam.num_predicates()),
                });
            }
            let inst = Instance::new(n, fam, cons).unwrap();
            let radius = 2 * (inst.num_constraints() as u32 + 1);
            let avg = local_estimate_average(&inst, radius).unwrap();
            assert_eq!(avg, lp_value(&inst).unwrap());
        }
    }

    #[test]
    fn local_average_upper_bounds_lp_value() {
        // Restricting to a ball only drops constraints, so local masses can
        // only grow.
        let inst = Instance::dicut_complete_bidirectional(4);
        let lp = lp_value(&inst).unwrap();
        for radius in 1..=4u32 {
            let avg = local_estimate_average(&inst, radius).unwrap();
            assert!(avg >= lp, "radius {radius}");
        }
    }

    #[test]
    fn streaming_estimator_on_satisfiable_singleton() {
        let inst = single_dicut();
        let out = approx_lp(&inst, &BlowupParams::surrogate(2, 2), 5, 2, 11).unwrap();
        assert_eq!(out.estimate, rat_int(1));
        assert_eq!(out.run.passes_used, 1 + 3 * out.fresh_queries);
    }

    #[test]
    fn pass_accounting_matches_fresh_queries() {
        let inst = Instance::dicut_complete_bidirectional(3);
        let out = approx_lp(&inst, &BlowupParams::surrogate(3, 3), 12, 2, 5).unwrap();
        assert_eq!(out.run.passes_used, 1 + 3 * out.fresh_queries);
        assert!(out.estimate >= rat_int(0) && out.estimate <= rat_int(1));
    }

    #[test]
    fn streaming_estimate_is_deterministic() {
        let inst = Instance::dicut_complete_bidirectional(3);
        let a = approx_lp(&inst, &BlowupParams::surrogate(3, 2), 8, 2, 77).unwrap();
        let b = approx_lp(&inst, &BlowupParams::surrogate(3, 2), 8, 2, 77).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.run, b.run);
    }

    #[test]
    fn streaming_ball_matches_offline_extraction() {
        // Recover each sampled ball against the materialized blow-up: the
        // estimates must agree with running the offline estimator there.
        let inst = Instance::dicut_complete_bidirectional(3);
        let params = BlowupParams::surrogate(3, 2);
        for radius in 1..=3u32 {
            for seed in 0..4u64 {
                let (blown, _) =
                    crate::blowup::sample_bounded_instance(&inst, &params, seed).unwrap();
                let m = inst.num_constraints();
                let mut offline_acc = Rational::zero();
                let samples = 6u64;
                for iter in 0..samples {
                    let mut rng = Rng::derive(seed, &[0x726f_6f74, iter]);
                    let i = rng.below_usize(m);
                    let round = rng.below(params.rounds);
                    let copy = (round as usize) * m + i;
                    let nbhd = extract_neighborhood(&blown, copy, radius).unwrap();
                    let z = local_lp_estimate(&nbhd).unwrap();
                    offline_acc = &offline_acc
                        + &estimate_mass(inst.family(), blown.constraints()[copy].predicate, &z);
                }
                let offline = offline_acc / rat_usize(samples as usize);
                let online = approx_lp(&inst, &params, samples, radius, seed).unwrap();
                assert_eq!(online.estimate, offline, "radius {radius} seed {seed}");
            }
        }
    }

    #[test]
    fn decider_threshold_sits_in_window() {
        let c = rat(45, 100);
        let eps = rat(1, 10);
        let inst = single_dicut();
        let d = gap_decider(&inst, &c, &eps, &BlowupParams::surrogate(2, 2), 4, 2, 3).unwrap();
        assert!(d.threshold >= &c + &(&eps * &rat(2, 5)));
        assert!(d.threshold <= &c + &(&eps * &rat(3, 5)));
        // A satisfiable singleton estimates 1 and is accepted.
        assert!(d.accept);
    }

    #[test]
    fn certified_plan_reports_formula_values() {
        let plan = certified_plan(&rat(3, 5), &PredicateFamily::dicut());
        assert_eq!(plan.eps0, rat(1, 10));
        assert_eq!(plan.samples, 1000);
        assert_eq!(plan.blowup.slots_per_degree, 200);
    }
}
