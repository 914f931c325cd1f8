//! CSP data model: truth-tabled predicate families, instances with an ordered
//! constraint stream, and exact value oracles.
//!
//! Tuple indexing convention used everywhere in this crate: a tuple
//! `b = (b_1, ..., b_k)` over an alphabet of size `s` maps to the index
//! `b_1 * s^(k-1) + b_2 * s^(k-2) + ... + b_k` — lexicographic order with the
//! first scope coordinate most significant.

mod io;
mod value;

pub use io::{parse_instance, parse_instance_json, render_instance, render_instance_json};
pub use value::{
    brute_force_value, brute_force_value_capped, component_value, local_search_value,
    BruteForceResult, DEFAULT_ASSIGNMENT_CAP,
};

use crate::ratio::{rat_usize, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CspError {
    BadArity(usize),
    BadAlphabet(usize),
    DegenerateFamily,
    BadTableLength { predicate: usize, expected: usize, got: usize },
    BadScope(String),
    IndexOutOfRange(String),
    EmptyInstance,
    AssignmentCapExceeded { needed: u128, cap: u64 },
    Parse(String),
}

impl fmt::Display for CspError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CspError::BadArity(k) => write!(f, "arity must be at least 1, got {k}"),
            CspError::BadAlphabet(s) => write!(f, "alphabet size must be at least 2, got {s}"),
            CspError::DegenerateFamily => {
                write!(f, "every predicate is unsatisfiable; family rejected")
            }
            CspError::BadTableLength { predicate, expected, got } => write!(
                f,
                "predicate {predicate}: truth table has {got} entries, expected {expected}"
            ),
            CspError::BadScope(msg) => write!(f, "bad scope: {msg}"),
            CspError::IndexOutOfRange(msg) => write!(f, "index out of range: {msg}"),
            CspError::EmptyInstance => write!(f, "instance has no constraints"),
            CspError::AssignmentCapExceeded { needed, cap } => {
                write!(f, "enumeration needs {needed} assignments, cap is {cap}")
            }
            CspError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for CspError {}

/// A family of k-ary predicates over a finite alphabet, stored as dense truth
/// tables of length `alphabet_size^arity`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateFamily {
    arity: usize,
    alphabet_size: usize,
    tables: Vec<Vec<bool>>,
    names: Vec<String>,
}

impl PredicateFamily {
    pub fn new(
        arity: usize,
        alphabet_size: usize,
        tables: Vec<Vec<bool>>,
        names: Option<Vec<String>>,
    ) -> Result<Self, CspError> {
        if arity < 1 {
            return Err(CspError::BadArity(arity));
        }
        if alphabet_size < 2 {
            return Err(CspError::BadAlphabet(alphabet_size));
        }
        let expected = alphabet_size.checked_pow(arity as u32).expect("table size overflow");
        for (i, t) in tables.iter().enumerate() {
            if t.len() != expected {
                return Err(CspError::BadTableLength {
                    predicate: i,
                    expected,
                    got: t.len(),
                });
            }
        }
        if !tables.iter().any(|t| t.iter().any(|&b| b)) {
            return Err(CspError::DegenerateFamily);
        }
        let names = match names {
            Some(n) => {
                assert_eq!(n.len(), tables.len(), "one name per predicate");
                n
            }
            None => (0..tables.len()).map(|i| format!("p{i}")).collect(),
        };
        Ok(PredicateFamily { arity, alphabet_size, tables, names })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn num_predicates(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, predicate: usize) -> &[bool] {
        &self.tables[predicate]
    }

    pub fn name(&self, predicate: usize) -> &str {
        &self.names[predicate]
    }

    pub fn predicate_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Number of entries in each truth table (`alphabet_size^arity`).
    pub fn tuple_count(&self) -> usize {
        self.tables[0].len()
    }

    /// Lexicographic index of a symbol tuple, first coordinate most significant.
    pub fn tuple_index(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.arity);
        let mut idx = 0;
        for &s in tuple {
            debug_assert!(s < self.alphabet_size);
            idx = idx * self.alphabet_size + s;
        }
        idx
    }

    /// Inverse of [`tuple_index`].
    pub fn tuple_at(&self, mut index: usize) -> Vec<usize> {
        let mut tuple = vec![0usize; self.arity];
        for pos in (0..self.arity).rev() {
            tuple[pos] = index % self.alphabet_size;
            index /= self.alphabet_size;
        }
        tuple
    }

    pub fn eval(&self, predicate: usize, tuple: &[usize]) -> bool {
        self.tables[predicate][self.tuple_index(tuple)]
    }

    /// The directed-cut family: binary alphabet, single predicate satisfied
    /// only by the tuple (1, 0).
    pub fn dicut() -> Self {
        let mut table = vec![false; 4];
        table[2] = true; // tuple (1,0)
        PredicateFamily::new(2, 2, vec![table], Some(vec!["dicut".into()])).unwrap()
    }

    /// The 2SAT family: the four clause predicates `or_b1b2` (false exactly on
    /// `(b1, b2)`) plus the two effectively-unary predicates `lit_b` (true iff
    /// the first argument equals `b`).
    pub fn two_sat() -> Self {
        let mut tables = Vec::new();
        let mut names = Vec::new();
        for b in 0..2usize {
            let table: Vec<bool> = (0..4).map(|idx| idx >> 1 == b).collect();
            tables.push(table);
            names.push(format!("lit_{b}"));
        }
        for b1 in 0..2usize {
            for b2 in 0..2usize {
                let bad = b1 * 2 + b2;
                let table: Vec<bool> = (0..4).map(|idx| idx != bad).collect();
                tables.push(table);
                names.push(format!("or_{b1}{b2}"));
            }
        }
        PredicateFamily::new(2, 2, tables, Some(names)).unwrap()
    }

    /// The exact-2SAT family: only the four clause predicates.
    pub fn e2_sat() -> Self {
        let mut tables = Vec::new();
        let mut names = Vec::new();
        for b1 in 0..2usize {
            for b2 in 0..2usize {
                let bad = b1 * 2 + b2;
                let table: Vec<bool> = (0..4).map(|idx| idx != bad).collect();
                tables.push(table);
                names.push(format!("or_{b1}{b2}"));
            }
        }
        PredicateFamily::new(2, 2, tables, Some(names)).unwrap()
    }
}

/// One constraint: a scope of pairwise-distinct variable ids plus a predicate
/// index into the family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub scope: Vec<usize>,
    pub predicate: usize,
}

/// A CSP instance. Constraint order is significant: it is the stream order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    num_vars: usize,
    family: Arc<PredicateFamily>,
    constraints: Vec<Constraint>,
}

impl Instance {
    pub fn new(
        num_vars: usize,
        family: Arc<PredicateFamily>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, CspError> {
        for (i, c) in constraints.iter().enumerate() {
            if c.scope.len() != family.arity() {
                return Err(CspError::BadScope(format!(
                    "constraint {i}: scope has {} variables, arity is {}",
                    c.scope.len(),
                    family.arity()
                )));
            }
            for (a, &v) in c.scope.iter().enumerate() {
                if v >= num_vars {
                    return Err(CspError::BadScope(format!(
                        "constraint {i}: variable {v} out of range (num_vars {num_vars})"
                    )));
                }
                if c.scope[..a].contains(&v) {
                    return Err(CspError::BadScope(format!(
                        "constraint {i}: variable {v} repeated in scope"
                    )));
                }
            }
            if c.predicate >= family.num_predicates() {
                return Err(CspError::IndexOutOfRange(format!(
                    "constraint {i}: predicate {} (family has {})",
                    c.predicate,
                    family.num_predicates()
                )));
            }
        }
        Ok(Instance { num_vars, family, constraints })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn family(&self) -> &Arc<PredicateFamily> {
        &self.family
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Number of pairs (constraint, position) in which `v` occurs.
    pub fn degree(&self, v: usize) -> Result<usize, CspError> {
        if v >= self.num_vars {
            return Err(CspError::IndexOutOfRange(format!(
                "variable {v} (num_vars {})",
                self.num_vars
            )));
        }
        Ok(self
            .constraints
            .iter()
            .map(|c| c.scope.iter().filter(|&&u| u == v).count())
            .sum())
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.num_vars];
        for c in &self.constraints {
            for &v in &c.scope {
                deg[v] += 1;
            }
        }
        deg.into_iter().max().unwrap_or(0)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.num_vars];
        for c in &self.constraints {
            for &v in &c.scope {
                deg[v] += 1;
            }
        }
        deg
    }

    /// Whether assignment `tau` satisfies constraint `i`.
    pub fn evaluate_constraint(&self, i: usize, tau: &Assignment) -> Result<bool, CspError> {
        let c = self
            .constraints
            .get(i)
            .ok_or_else(|| CspError::IndexOutOfRange(format!("constraint {i}")))?;
        assert_eq!(tau.values.len(), self.num_vars, "assignment length mismatch");
        let tuple: Vec<usize> = c.scope.iter().map(|&v| tau.values[v]).collect();
        Ok(self.family.eval(c.predicate, &tuple))
    }

    /// Exact fraction of constraints satisfied by `tau`.
    pub fn value(&self, tau: &Assignment) -> Result<Rational, CspError> {
        if self.constraints.is_empty() {
            return Err(CspError::EmptyInstance);
        }
        let satisfied = (0..self.constraints.len())
            .filter(|&i| self.evaluate_constraint(i, tau).unwrap())
            .count();
        Ok(rat_usize(satisfied) / rat_usize(self.constraints.len()))
    }

    pub fn count_satisfied(&self, tau: &Assignment) -> usize {
        (0..self.constraints.len())
            .filter(|&i| self.evaluate_constraint(i, tau).unwrap())
            .count()
    }

    /// The complete bidirectional directed-cut instance on `n` vertices: both
    /// arcs `(i, j)` and `(j, i)` for every pair.
    pub fn dicut_complete_bidirectional(n: usize) -> Instance {
        let family = Arc::new(PredicateFamily::dicut());
        let mut constraints = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                constraints.push(Constraint { scope: vec![i, j], predicate: 0 });
                constraints.push(Constraint { scope: vec![j, i], predicate: 0 });
            }
        }
        Instance::new(n, family, constraints).unwrap()
    }

    /// All four clause predicates on every pair of `n` variables. LP value 1,
    /// integral value exactly 3/4 (each pair loses one of its four clauses).
    pub fn e2sat_all_clauses(n: usize) -> Instance {
        let family = Arc::new(PredicateFamily::e2_sat());
        let mut constraints = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for p in 0..4 {
                    constraints.push(Constraint { scope: vec![i, j], predicate: p });
                }
            }
        }
        Instance::new(n, family, constraints).unwrap()
    }
}

/// A total assignment of symbols to variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: Vec<usize>,
}

impl Assignment {
    pub fn new(values: Vec<usize>) -> Self {
        Assignment { values }
    }

    pub fn constant(num_vars: usize, symbol: usize) -> Self {
        Assignment { values: vec![symbol; num_vars] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;

    #[test]
    fn dicut_truth_table() {
        let fam = PredicateFamily::dicut();
        assert!(fam.eval(0, &[1, 0]));
        assert!(!fam.eval(0, &[0, 0]));
        assert!(!fam.eval(0, &[0, 1]));
        assert!(!fam.eval(0, &[1, 1]));
    }

    #[test]
    fn two_sat_clause_false_only_on_its_tuple() {
        let fam = PredicateFamily::two_sat();
        let p = fam.predicate_by_name("or_00").unwrap();
        assert!(!fam.eval(p, &[0, 0]));
        assert!(fam.eval(p, &[0, 1]));
        assert!(fam.eval(p, &[1, 0]));
        assert!(fam.eval(p, &[1, 1]));
        let lit1 = fam.predicate_by_name("lit_1").unwrap();
        assert!(fam.eval(lit1, &[1, 0]));
        assert!(!fam.eval(lit1, &[0, 1]));
    }

    #[test]
    fn evaluate_single_dicut_constraint() {
        let fam = Arc::new(PredicateFamily::dicut());
        let inst =
            Instance::new(2, fam, vec![Constraint { scope: vec![0, 1], predicate: 0 }]).unwrap();
        assert!(inst.evaluate_constraint(0, &Assignment::new(vec![1, 0])).unwrap());
        assert!(!inst.evaluate_constraint(0, &Assignment::new(vec![0, 0])).unwrap());
        assert!(inst.evaluate_constraint(1, &Assignment::new(vec![1, 0])).is_err());
        assert_eq!(inst.value(&Assignment::new(vec![1, 0])).unwrap(), rat(1, 1));
    }

    #[test]
    fn i4_value_of_balanced_cut() {
        let inst = Instance::dicut_complete_bidirectional(4);
        assert_eq!(inst.num_constraints(), 12);
        let v = inst.value(&Assignment::new(vec![1, 1, 0, 0])).unwrap();
        assert_eq!(v, rat(1, 3));
    }

    #[test]
    fn constant_assignment_counts_constant_tuples() {
        let inst = Instance::dicut_complete_bidirectional(4);
        // (0,0) and (1,1) never satisfy the directed-cut predicate.
        assert_eq!(inst.value(&Assignment::constant(4, 0)).unwrap(), rat(0, 1));
        assert_eq!(inst.value(&Assignment::constant(4, 1)).unwrap(), rat(0, 1));
    }

    #[test]
    fn degree_counting() {
        let fam = Arc::new(PredicateFamily::dicut());
        let inst =
            Instance::new(3, fam, vec![Constraint { scope: vec![0, 1], predicate: 0 }]).unwrap();
        assert_eq!(inst.degree(0).unwrap(), 1);
        assert_eq!(inst.degree(2).unwrap(), 0);
        assert!(inst.degree(3).is_err());

        let i4 = Instance::dicut_complete_bidirectional(4);
        for v in 0..4 {
            assert_eq!(i4.degree(v).unwrap(), 6);
        }
        // Degree sum equals arity times the number of constraints.
        let total: usize = (0..4).map(|v| i4.degree(v).unwrap()).sum();
        assert_eq!(total, 2 * i4.num_constraints());
    }

    #[test]
    fn duplicate_scope_variables_rejected() {
        let fam = Arc::new(PredicateFamily::dicut());
        let err = Instance::new(2, fam, vec![Constraint { scope: vec![1, 1], predicate: 0 }]);
        assert!(matches!(err, Err(CspError::BadScope(_))));
    }

    #[test]
    fn degenerate_family_rejected() {
        let err = PredicateFamily::new(2, 2, vec![vec![false; 4]], None);
        assert!(matches!(err, Err(CspError::DegenerateFamily)));
    }
}
