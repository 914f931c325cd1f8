//! Matching-space Fourier diagnostics, all by exhaustive enumeration on tiny
//! universes.
//!
//! Two arithmetic modes are used: exact rationals wherever the quantities are
//! rational (kernel entries, containment probabilities, densities), and
//! complex doubles with 1e-10 tolerances for anything involving roots of
//! unity. Enumeration caps abort loudly; no sampling fallback exists inside
//! exactness checks. Certified-regime preconditions are never silently
//! waived: every report labels itself certified or desk-scale.

use crate::dihp::{KUniverse, LabeledMatching, OneWiseDistribution};
use crate::ratio::{rat_usize, Rational};
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const DEFAULT_ENUM_CAP: usize = 1_000_000;
pub const TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum FourierError {
    CapExceeded { needed: u128, cap: usize },
    BadParams(String),
}

impl fmt::Display for FourierError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FourierError::CapExceeded { needed, cap } => {
                write!(f, "enumeration needs {needed} elements, cap is {cap}")
            }
            FourierError::BadParams(msg) => write!(f, "bad parameters: {msg}"),
        }
    }
}

impl std::error::Error for FourierError {}

/// Containment probability of a fixed d-edge matching inside a uniform
/// m-edge matching of a cardinality-n k-universe, evaluated exactly from the
/// recursion psi(n, m, 0) = 1, psi(n, m, d) = m n^-k psi(n-1, m-1, d-1).
pub fn psi_prob(arity: usize, n: usize, m: usize, d: usize) -> Result<Rational, FourierError> {
    if !(n >= m && m >= d) {
        return Err(FourierError::BadParams(format!(
            "need n >= m >= d >= 0, got n={n} m={m} d={d}"
        )));
    }
    if d == 0 {
        return Ok(Rational::one());
    }
    let tail = psi_prob(arity, n - 1, m - 1, d - 1)?;
    let nk = rat_usize(n.pow(arity as u32));
    Ok(rat_usize(m) / nk * tail)
}

/// Exhaustive enumeration of the labeled matching space of a universe: all
/// m-edge matchings in canonical order, each combined with every label
/// configuration. Labels pack base N with edge 0 (lowest part-0 vertex) most
/// significant and, within an edge, the first coordinate most significant.
pub struct MatchingSpace {
    pub universe: KUniverse,
    pub matched: usize,
    pub modulus: u32,
    matchings: Vec<Vec<Vec<u64>>>,
    support_index: BTreeMap<Vec<Vec<u64>>, usize>,
    labels_per_matching: usize,
}

impl MatchingSpace {
    pub fn new(
        universe: KUniverse,
        matched: usize,
        modulus: u32,
        cap: usize,
    ) -> Result<Self, FourierError> {
        if matched > universe.cardinality() {
            return Err(FourierError::BadParams("more edges than the cardinality".into()));
        }
        if modulus == 0 {
            return Err(FourierError::BadParams("modulus must be positive".into()));
        }
        let matchings = enumerate_matchings(&universe, matched);
        let k = universe.arity();
        let labels_per_matching = (modulus as usize).pow((k * matched) as u32);
        let total = matchings.len() as u128 * labels_per_matching as u128;
        if total > cap as u128 {
            return Err(FourierError::CapExceeded { needed: total, cap });
        }
        let support_index =
            matchings.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        Ok(MatchingSpace { universe, matched, modulus, matchings, support_index, labels_per_matching })
    }

    pub fn len(&self) -> usize {
        self.matchings.len() * self.labels_per_matching
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_matchings(&self) -> usize {
        self.matchings.len()
    }

    pub fn matchings(&self) -> &[Vec<Vec<u64>>] {
        &self.matchings
    }

    pub fn decode(&self, index: usize) -> LabeledMatching {
        let (mi, mut li) = (index / self.labels_per_matching, index % self.labels_per_matching);
        let support = &self.matchings[mi];
        let k = self.universe.arity();
        let n = self.modulus as usize;
        let mut labels = vec![vec![0u32; k]; self.matched];
        for digit in (0..self.matched * k).rev() {
            let edge = digit / k;
            let coord = digit % k;
            labels[edge][coord] = (li % n) as u32;
            li /= n;
        }
        LabeledMatching {
            edges: support.iter().cloned().zip(labels).collect(),
        }
    }

    pub fn encode(&self, lm: &LabeledMatching) -> Option<usize> {
        let support: Vec<Vec<u64>> = lm.edges.iter().map(|(e, _)| e.clone()).collect();
        let mi = *self.support_index.get(&support)?;
        let n = self.modulus as usize;
        let mut li = 0usize;
        for (_, label) in &lm.edges {
            for &digit in label {
                li = li * n + digit as usize;
            }
        }
        Some(mi * self.labels_per_matching + li)
    }

    /// Label of edge `e` in element `index`, if the edge is present.
    pub fn label_of(&self, index: usize, edge: &[u64]) -> Option<Vec<u32>> {
        let lm = self.decode(index);
        lm.edges.iter().find(|(e, _)| e == edge).map(|(_, l)| l.clone())
    }
}

fn enumerate_matchings(universe: &KUniverse, matched: usize) -> Vec<Vec<Vec<u64>>> {
    let combos = combinations(&universe.parts[0], matched);
    let mut rest: Vec<Vec<Vec<u64>>> = vec![Vec::new()];
    for part in &universe.parts[1..] {
        let perms = permutations(part, matched);
        let mut next = Vec::with_capacity(rest.len() * perms.len());
        for prefix in &rest {
            for perm in &perms {
                let mut item = prefix.clone();
                item.push(perm.clone());
                next.push(item);
            }
        }
        rest = next;
    }
    let mut out = Vec::new();
    for combo in &combos {
        for tail in &rest {
            let edges: Vec<Vec<u64>> = (0..matched)
                .map(|r| {
                    let mut e = Vec::with_capacity(universe.arity());
                    e.push(combo[r]);
                    for sel in tail {
                        e.push(sel[r]);
                    }
                    e
                })
                .collect();
            out.push(edges);
        }
    }
    out
}

fn combinations(items: &[u64], m: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(m);
    fn rec(items: &[u64], m: usize, start: usize, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if current.len() == m {
            out.push(current.clone());
            return;
        }
        for i in start..items.len() {
            current.push(items[i]);
            rec(items, m, i + 1, current, out);
            current.pop();
        }
    }
    rec(items, m, 0, &mut current, &mut out);
    out
}

fn permutations(items: &[u64], m: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(m);
    let mut used = vec![false; items.len()];
    fn rec(
        items: &[u64],
        m: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if current.len() == m {
            out.push(current.clone());
            return;
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                current.push(items[i]);
                rec(items, m, used, current, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(items, m, &mut used, &mut current, &mut out);
    out
}

/// The group Z_N^Lambda over the universe's vertices (sorted), enumerated
/// with the first vertex most significant.
pub struct GroupSpace {
    pub vertices: Vec<u64>,
    pub modulus: u32,
    position: BTreeMap<u64, usize>,
}

impl GroupSpace {
    pub fn new(universe: &KUniverse, modulus: u32) -> Self {
        let vertices = universe.all_vertices();
        let position = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        GroupSpace { vertices, modulus, position }
    }

    pub fn len(&self) -> usize {
        (self.modulus as usize).pow(self.vertices.len() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn decode(&self, mut index: usize) -> Vec<u32> {
        let n = self.modulus as usize;
        let mut out = vec![0u32; self.vertices.len()];
        for pos in (0..self.vertices.len()).rev() {
            out[pos] = (index % n) as u32;
            index /= n;
        }
        out
    }

    pub fn value_at(&self, x: &[u32], vertex: u64) -> u32 {
        x[self.position[&vertex]]
    }

    /// chi_b(x) = exp(2 pi i / N * sum_v b_v x_v).
    pub fn character(&self, b: &[u32], x: &[u32]) -> Complex64 {
        let n = self.modulus as u64;
        let mut phase = 0u64;
        for (bv, xv) in b.iter().zip(x) {
            phase = (phase + (*bv as u64) * (*xv as u64)) % n;
        }
        let angle = 2.0 * std::f64::consts::PI * phase as f64 / n as f64;
        Complex64::new(angle.cos(), angle.sin())
    }

    pub fn support_size(&self, b: &[u32]) -> usize {
        b.iter().filter(|&&v| v != 0).count()
    }
}

/// A character index on the labeled matching space: a partial matching with a
/// nonzero label per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterIndex {
    pub edges: Vec<Vec<u64>>,
    pub labels: Vec<Vec<u32>>,
}

impl CharacterIndex {
    pub fn validate(&self, modulus: u32) -> Result<(), FourierError> {
        if self.edges.len() != self.labels.len() {
            return Err(FourierError::BadParams("one label per edge".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            for &v in e {
                if !seen.insert(v) {
                    return Err(FourierError::BadParams("index support is not a matching".into()));
                }
            }
        }
        for l in &self.labels {
            if l.iter().all(|&d| d == 0) {
                return Err(FourierError::BadParams("labels must be nonzero".into()));
            }
            if l.iter().any(|&d| d >= modulus) {
                return Err(FourierError::BadParams("label digit out of range".into()));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.edges.len()
    }
}

/// psi_{M,a}(y) = psi(|U|, m, |M|)^(-1/2) * prod chi_{a(e)}(y(e)), taking the
/// value 0 whenever an indexed edge is absent from y's support.
pub fn character_eval(
    idx: &CharacterIndex,
    y: &LabeledMatching,
    space: &MatchingSpace,
) -> Result<Complex64, FourierError> {
    idx.validate(space.modulus)?;
    let n = space.universe.cardinality();
    let psi = psi_prob(space.universe.arity(), n, space.matched, idx.order())?;
    let scale = 1.0 / crate::ratio::to_f64(&psi).sqrt();
    let mut acc = Complex64::new(scale, 0.0);
    let modulus = space.modulus as u64;
    for (e, a) in idx.edges.iter().zip(&idx.labels) {
        match y.edges.iter().find(|(ye, _)| ye == e) {
            None => return Ok(Complex64::new(0.0, 0.0)),
            Some((_, label)) => {
                let mut phase = 0u64;
                for (av, lv) in a.iter().zip(label) {
                    phase = (phase + (*av as u64) * (*lv as u64)) % modulus;
                }
                let angle = 2.0 * std::f64::consts::PI * phase as f64 / modulus as f64;
                acc *= Complex64::new(angle.cos(), angle.sin());
            }
        }
    }
    Ok(acc)
}

/// All character indices of order at most `max_order`.
pub fn enumerate_character_indices(
    space: &MatchingSpace,
    max_order: usize,
) -> Vec<CharacterIndex> {
    let mut out = vec![CharacterIndex { edges: vec![], labels: vec![] }];
    let k = space.universe.arity();
    let n = space.modulus;
    let nonzero_labels: Vec<Vec<u32>> = (1..(n as usize).pow(k as u32))
        .map(|idx| crate::dihp::tuple_at(n, k, idx))
        .collect();
    for d in 1..=max_order.min(space.matched) {
        for support in enumerate_matchings(&space.universe, d) {
            let mut stack: Vec<Vec<Vec<u32>>> = vec![Vec::new()];
            for _ in 0..d {
                let mut next = Vec::new();
                for prefix in &stack {
                    for label in &nonzero_labels {
                        let mut item = prefix.clone();
                        item.push(label.clone());
                        next.push(item);
                    }
                }
                stack = next;
            }
            for labels in stack {
                out.push(CharacterIndex { edges: support.clone(), labels });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrthonormalReport {
    pub indices: usize,
    pub worst_defect: f64,
    pub pass: bool,
}

/// Exhaustively verifies that the characters of order at most `max_order`
/// form an orthonormal set under the uniform inner product on the space.
pub fn check_orthonormal(
    space: &MatchingSpace,
    max_order: usize,
) -> Result<OrthonormalReport, FourierError> {
    let indices = enumerate_character_indices(space, max_order);
    let total = space.len();
    // Tabulate each character over the whole space once.
    let mut tables: Vec<Vec<Complex64>> = Vec::with_capacity(indices.len());
    for idx in &indices {
        let mut table = Vec::with_capacity(total);
        for yi in 0..total {
            table.push(character_eval(idx, &space.decode(yi), space)?);
        }
        tables.push(table);
    }
    let mut worst: f64 = 0.0;
    for a in 0..indices.len() {
        for b in a..indices.len() {
            let mut inner = Complex64::new(0.0, 0.0);
            for yi in 0..total {
                inner += tables[a][yi] * tables[b][yi].conj();
            }
            inner /= total as f64;
            let expected = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((inner - Complex64::new(expected, 0.0)).norm());
        }
    }
    Ok(OrthonormalReport { indices: indices.len(), worst_defect: worst, pass: worst <= TOL })
}

/// The exact kernel matrix: row x, column y, entry
/// `(1/#matchings) * prod over supp(y) of mu(x restricted to e, minus y(e))`.
pub fn kernel_matrix(
    space: &MatchingSpace,
    group: &GroupSpace,
    mu: &OneWiseDistribution,
) -> Result<Vec<Vec<Rational>>, FourierError> {
    if mu.modulus != space.modulus || mu.arity != space.universe.arity() {
        return Err(FourierError::BadParams("distribution shape mismatch".into()));
    }
    let norm = rat_usize(space.num_matchings());
    let mut rows = Vec::with_capacity(group.len());
    for xi in 0..group.len() {
        let x = group.decode(xi);
        let mut row = Vec::with_capacity(space.len());
        for yi in 0..space.len() {
            let y = space.decode(yi);
            let mut p = Rational::one();
            for (e, label) in &y.edges {
                let diff: Vec<u32> = e
                    .iter()
                    .zip(label)
                    .map(|(&v, &l)| (group.value_at(&x, v) + space.modulus - l) % space.modulus)
                    .collect();
                p = &p * mu.mass(&diff);
                if p.is_zero() {
                    break;
                }
            }
            row.push(p / &norm);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// A dense function on one of the two exhaustively enumerated domains.
#[derive(Debug, Clone)]
pub struct DenseDensity {
    pub domain: DomainTag,
    pub values: DensityValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTag {
    LabeledMatchings,
    Group,
}

#[derive(Debug, Clone)]
pub enum DensityValues {
    Rational(Vec<Rational>),
    Complex(Vec<Complex64>),
}

impl DenseDensity {
    pub fn len(&self) -> usize {
        match &self.values {
            DensityValues::Rational(v) => v.len(),
            DensityValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Density of the uniform distribution on a subset, |domain| / |A| on A.
    pub fn uniform_on(space_len: usize, subset: &[usize]) -> Self {
        assert!(!subset.is_empty(), "empty subset has no density");
        let scale = rat_usize(space_len) / rat_usize(subset.len());
        let mut values = vec![Rational::zero(); space_len];
        for &i in subset {
            values[i] = scale.clone();
        }
        DenseDensity { domain: DomainTag::LabeledMatchings, values: DensityValues::Rational(values) }
    }

    pub fn mean(&self) -> Option<Rational> {
        match &self.values {
            DensityValues::Rational(v) => {
                let mut acc = Rational::zero();
                for x in v {
                    acc = &acc + x;
                }
                Some(acc / rat_usize(v.len()))
            }
            DensityValues::Complex(_) => None,
        }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match &self.values {
            DensityValues::Rational(v) => {
                v.iter().map(|r| Complex64::new(crate::ratio::to_f64(r), 0.0)).collect()
            }
            DensityValues::Complex(v) => v.clone(),
        }
    }
}

/// P[f](x) = sum_y P(x, y) f(y): pulls a function on labeled matchings back
/// to the group. Exact in rational mode.
pub fn kernel_pullback(
    space: &MatchingSpace,
    group: &GroupSpace,
    mu: &OneWiseDistribution,
    f: &DenseDensity,
) -> Result<DenseDensity, FourierError> {
    if f.domain != DomainTag::LabeledMatchings || f.len() != space.len() {
        return Err(FourierError::BadParams("pullback input must live on the matching space".into()));
    }
    let kernel = kernel_matrix(space, group, mu)?;
    let values = match &f.values {
        DensityValues::Rational(v) => {
            let out = kernel
                .iter()
                .map(|row| {
                    let mut acc = Rational::zero();
                    for (p, fv) in row.iter().zip(v) {
                        if !p.is_zero() && !fv.is_zero() {
                            acc = &acc + &(p * fv);
                        }
                    }
                    acc
                })
                .collect();
            DensityValues::Rational(out)
        }
        DensityValues::Complex(v) => {
            let out = kernel
                .iter()
                .map(|row| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (p, fv) in row.iter().zip(v) {
                        acc += Complex64::new(crate::ratio::to_f64(p), 0.0) * fv;
                    }
                    acc
                })
                .collect();
            DensityValues::Complex(out)
        }
    };
    Ok(DenseDensity { domain: DomainTag::Group, values })
}

/// A restriction: a labeled partial matching that pins the labels of its
/// support. Subsumption extends the support without changing pinned labels.
pub type Restriction = LabeledMatching;

fn agrees(y: &LabeledMatching, z: &Restriction) -> bool {
    z.edges.iter().all(|(e, l)| {
        y.edges.iter().any(|(ye, yl)| ye == e && yl == l)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalReport {
    pub global: bool,
    pub worst_ratio: f64,
    pub violations: usize,
}

/// Checks the density-growth bound of a set under every restriction subsuming
/// `z`: restricting by extra pinned edges may grow the relative density by at
/// most a factor of 2 per edge.
pub fn check_global_set(
    space: &MatchingSpace,
    set: &[usize],
    z: &Restriction,
) -> Result<GlobalReport, FourierError> {
    let decoded: Vec<LabeledMatching> = (0..space.len()).map(|i| space.decode(i)).collect();
    let in_set = {
        let mut mask = vec![false; space.len()];
        for &i in set {
            if i >= space.len() {
                return Err(FourierError::BadParams("set index out of range".into()));
            }
            mask[i] = true;
        }
        mask
    };
    for &i in set {
        if !agrees(&decoded[i], z) {
            return Err(FourierError::BadParams(
                "set member disagrees with the base restriction".into(),
            ));
        }
    }
    let base_members: Vec<usize> =
        (0..space.len()).filter(|&i| agrees(&decoded[i], z)).collect();
    let base_hits = base_members.iter().filter(|&&i| in_set[i]).count();
    if base_members.is_empty() || base_hits == 0 {
        return Err(FourierError::BadParams("base restriction region is empty".into()));
    }
    let base_density = base_hits as f64 / base_members.len() as f64;

    // All restrictions with support of size up to m whose pinned edges extend z.
    let mut worst: f64 = 1.0;
    let mut violations = 0usize;
    for d in z.edges.len()..=space.matched {
        for support in enumerate_matchings(&space.universe, d) {
            if !z.edges.iter().all(|(e, _)| support.contains(e)) {
                continue;
            }
            // Enumerate labels of the new edges; pinned ones are fixed.
            let free: Vec<&Vec<u64>> = support
                .iter()
                .filter(|e| !z.edges.iter().any(|(ze, _)| &ze == e))
                .collect();
            let k = space.universe.arity();
            let label_count = (space.modulus as usize).pow((free.len() * k) as u32);
            for li in 0..label_count {
                let mut z_ext = z.clone();
                let mut rest = li;
                for e in &free {
                    let mut label = vec![0u32; k];
                    for digit in (0..k).rev() {
                        label[digit] = (rest % space.modulus as usize) as u32;
                        rest /= space.modulus as usize;
                    }
                    z_ext.edges.push(((*e).clone(), label));
                }
                z_ext.edges.sort();
                let members: Vec<usize> =
                    (0..space.len()).filter(|&i| agrees(&decoded[i], &z_ext)).collect();
                if members.is_empty() {
                    continue;
                }
                let hits = members.iter().filter(|&&i| in_set[i]).count();
                let density = hits as f64 / members.len() as f64;
                let allowance =
                    2f64.powi((z_ext.edges.len() - z.edges.len()) as i32) * base_density;
                let ratio = density / allowance;
                if ratio > worst {
                    worst = ratio;
                }
                if density > allowance + TOL {
                    violations += 1;
                }
            }
        }
    }
    Ok(GlobalReport { global: violations == 0, worst_ratio: worst, violations })
}

/// The per-level weight ceiling for decaying densities:
/// `(w/n)^(l/2)` up to level w, `(l/8n)^(l/2) 4^w` up to n, zero beyond.
pub fn decay_bound(n: usize, level: usize, w: f64) -> f64 {
    let nf = n as f64;
    let lf = level as f64;
    if lf <= w {
        (w / nf).powf(lf / 2.0)
    } else if level <= n {
        (lf / (8.0 * nf)).powf(lf / 2.0) * 4f64.powf(w)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayLevel {
    pub level: usize,
    pub weight: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub log_density: f64,
    pub certified: bool,
    pub levels: Vec<DecayLevel>,
    pub high_levels_vanish: bool,
    pub pass: bool,
    pub worst_ratio: f64,
}

/// Computes every level weight of the pulled-back density of the uniform
/// distribution on `set` and compares against the decay ceiling at
/// `w = log2(|domain| / |set|)`. The certified flag records whether the
/// preconditions `|U| >= 1e8 k^3 m` and `m >= 2(w+1)` hold; at desk scale
/// they never do and the report is an observation, not an assertion.
pub fn fourier_decay_check(
    space: &MatchingSpace,
    group: &GroupSpace,
    mu: &OneWiseDistribution,
    set: &[usize],
) -> Result<DecayReport, FourierError> {
    if set.is_empty() {
        return Err(FourierError::BadParams("empty set".into()));
    }
    let w = (space.len() as f64 / set.len() as f64).log2();
    let density = DenseDensity::uniform_on(space.len(), set);
    let pulled = kernel_pullback(space, group, mu, &density)?;
    let g = pulled.to_complex();
    let total = group.len();
    let vertex_count = group.vertices.len();
    let cardinality = space.universe.cardinality();
    let k = space.universe.arity();

    let mut level_weights = vec![0.0f64; vertex_count + 1];
    for bi in 0..total {
        let b = group.decode(bi);
        let level = group.support_size(&b);
        if level == 0 {
            continue;
        }
        let mut inner = Complex64::new(0.0, 0.0);
        for xi in 0..total {
            let x = group.decode(xi);
            inner += g[xi] * group.character(&b, &x).conj();
        }
        inner /= total as f64;
        level_weights[level] += inner.norm_sqr();
    }

    let certified = cardinality as f64 >= 1e8 * (k as f64).powi(3) * space.matched as f64
        && space.matched as f64 >= 2.0 * (w + 1.0);
    let mut levels = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut pass = true;
    for (level, &weight) in level_weights.iter().enumerate().skip(1) {
        let bound = decay_bound(cardinality, level, w);
        let ok = weight <= bound + TOL;
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(weight / bound);
        } else if weight > TOL {
            worst_ratio = f64::INFINITY;
        }
        if !ok {
            pass = false;
        }
        levels.push(DecayLevel { level, weight, bound, pass: ok });
    }
    // Pullbacks carry no frequencies above k * m: each kernel column depends
    // on at most k m coordinates.
    let high_levels_vanish = level_weights
        .iter()
        .enumerate()
        .skip(k * space.matched + 1)
        .all(|(_, &wt)| wt <= TOL);
    Ok(DecayReport { log_density: w, certified, levels, high_levels_vanish, pass, worst_ratio })
}

/// The adjoint image of a group character in the matching space:
/// `chi~_b(y) = |domain| * mean over x of P(x, y) chi_b(x)`.
pub fn adjoint_character(
    space: &MatchingSpace,
    group: &GroupSpace,
    mu: &OneWiseDistribution,
    b: &[u32],
) -> Result<Vec<Complex64>, FourierError> {
    if b.len() != group.vertices.len() {
        return Err(FourierError::BadParams("frequency vector length mismatch".into()));
    }
    let kernel = kernel_matrix(space, group, mu)?;
    let total = group.len();
    let mut out = vec![Complex64::new(0.0, 0.0); space.len()];
    for xi in 0..total {
        let x = group.decode(xi);
        let chi = group.character(b, &x);
        for (yi, item) in out.iter_mut().enumerate() {
            let p = crate::ratio::to_f64(&kernel[xi][yi]);
            if p != 0.0 {
                *item += p * chi;
            }
        }
    }
    let scale = space.len() as f64 / total as f64;
    for item in &mut out {
        *item *= scale;
    }
    Ok(out)
}

fn matching_inner(space: &MatchingSpace, f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in f.iter().zip(g) {
        acc += a * b.conj();
    }
    acc / space.len() as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvdReport {
    pub level: usize,
    pub norm_sq: f64,
    /// Residual after projecting onto characters of order at most level/2.
    pub span_defect: f64,
    pub norm_bound: Option<f64>,
    pub certified: bool,
    pub pass: bool,
}

/// Structure checks on the adjoint image of one group character: it vanishes
/// for single-coordinate frequencies (one-wise independence), is constant for
/// the zero frequency, lies in the span of characters of order at most
/// level/2, and obeys the certified norm bound when `|U| > 100 k m`.
pub fn svd_structure_check(
    space: &MatchingSpace,
    group: &GroupSpace,
    mu: &OneWiseDistribution,
    b: &[u32],
) -> Result<SvdReport, FourierError> {
    let chi_tilde = adjoint_character(space, group, mu, b)?;
    let level = group.support_size(b);
    let norm_sq = matching_inner(space, &chi_tilde, &chi_tilde).re;

    let max_order = (level / 2).min(space.matched);
    let indices = enumerate_character_indices(space, max_order);
    let mut residual = chi_tilde.clone();
    for idx in &indices {
        let mut table = Vec::with_capacity(space.len());
        for yi in 0..space.len() {
            table.push(character_eval(idx, &space.decode(yi), space)?);
        }
        let coef = matching_inner(space, &chi_tilde, &table);
        for (r, t) in residual.iter_mut().zip(&table) {
            *r -= coef * t;
        }
    }
    // For the zero frequency the projection onto the constant character (the
    // empty index) captures everything, so the defect doubles as the
    // constancy check.
    let span_defect = matching_inner(space, &residual, &residual).re.sqrt();

    let cardinality = space.universe.cardinality();
    let k = space.universe.arity();
    let certified = cardinality > 100 * k * space.matched;
    let norm_bound = if level >= 1 {
        let base = 100.0 * (k as f64).powi(3) * space.matched as f64 * level as f64
            / (cardinality as f64).powi(2);
        Some(base.powf(level as f64 / 2.0))
    } else {
        None
    };
    let mut pass = span_defect <= TOL;
    if level == 0 {
        // chi~_0 must be the constant 1.
        let defect: f64 = chi_tilde
            .iter()
            .map(|v| (v - Complex64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max);
        pass = pass && defect <= TOL;
    }
    if level == 1 {
        pass = pass && norm_sq <= TOL;
    }
    if certified {
        if let Some(bound) = norm_bound {
            pass = pass && norm_sq <= bound + TOL;
        }
    }
    Ok(SvdReport { level, norm_sq, span_defect, norm_bound, certified, pass })
}

/// |<chi~_b, chi~_b'>| for distinct frequencies; orthogonality demands this
/// vanish.
pub fn svd_orthogonality(
    space: &MatchingSpace,
    group: &GroupSpace,
    mu: &OneWiseDistribution,
    b1: &[u32],
    b2: &[u32],
) -> Result<f64, FourierError> {
    let f1 = adjoint_character(space, group, mu, b1)?;
    let f2 = adjoint_character(space, group, mu, b2)?;
    Ok(matching_inner(space, &f1, &f2).norm())
}

/// Uniform report wrapper emitted by the command-line interface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub params: serde_json::Value,
    pub certified: bool,
    pub pass: bool,
    pub worst_ratio: f64,
}
