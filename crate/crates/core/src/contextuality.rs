//! Binary versus intensive valuations on families of orthonormal contexts.
//!
//! A binary (Kochen-Specker) valuation assigns 0 or 1 to every vector so that
//! each context contains exactly one 1, with shared vectors valued once
//! globally. Some families admit no such assignment, while every state still
//! assigns intensities that sum to one on each context.

use std::fmt;

use crate::error::{Error, Result};
use crate::isa::{intensity, GivTable, IntensiveState, Power};
use crate::tensor::{UnitVector, PREDICATE_TOL};

/// `|<u|v>| >= 1 - PHASE_TOL` marks `u` and `v` as the same ray.
pub const PHASE_TOL: f64 = 1e-9;

/// Vectors of `C^dim` grouped into contexts (tuples of vector indices that
/// should form orthonormal bases).
#[derive(Debug, Clone, PartialEq)]
pub struct ContextFamily {
    dim: usize,
    vectors: Vec<UnitVector>,
    contexts: Vec<Vec<usize>>,
}

impl ContextFamily {
    /// Structural checks only: every vector lives in `C^dim` and every context
    /// index names a vector. Geometry is checked by
    /// [`validate_context_family`].
    pub fn new(dim: usize, vectors: Vec<UnitVector>, contexts: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        for (c, ctx) in contexts.iter().enumerate() {
            if let Some(&bad) = ctx.iter().find(|&&i| i >= vectors.len()) {
                return Err(Error::IndexOutOfRange(format!(
                    "context {c} names vector {bad}, family has {}",
                    vectors.len()
                )));
            }
        }
        Ok(Self {
            dim,
            vectors,
            contexts,
        })
    }

    /// The 18-vector, 9-context set in `C^4` of Cabello, Estebaranz and
    /// García-Alcaine. Every vector lies in exactly two contexts, so a
    /// valuation would need 9 ones counted twice: an even number equal to 9.
    pub fn cabello_18() -> Self {
        const RAW: [[f64; 4]; 18] = [
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [1.0, -1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 1.0, 0.0],
            [1.0, 0.0, -1.0, 0.0],
            [1.0, -1.0, 1.0, -1.0],
            [1.0, -1.0, -1.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
            [1.0, 1.0, 1.0, 1.0],
            [0.0, 1.0, 0.0, -1.0],
            [1.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, -1.0],
            [0.0, 1.0, -1.0, 0.0],
            [1.0, 1.0, -1.0, 1.0],
            [1.0, 1.0, 1.0, -1.0],
            [-1.0, 1.0, 1.0, 1.0],
        ];
        let contexts = vec![
            vec![0, 1, 2, 3],
            vec![0, 4, 5, 6],
            vec![7, 8, 2, 9],
            vec![7, 10, 6, 11],
            vec![1, 4, 12, 13],
            vec![8, 10, 13, 14],
            vec![15, 16, 3, 9],
            vec![15, 17, 5, 11],
            vec![16, 17, 12, 14],
        ];
        let vectors = RAW
            .iter()
            .map(|r| UnitVector::from_real(r).expect("non-zero literal"))
            .collect();
        Self::new(4, vectors, contexts).expect("literal family is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[UnitVector] {
        &self.vectors
    }

    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    /// Applies the same unitary to every vector.
    pub fn rotated(&self, u: &crate::tensor::ComplexMatrix) -> Result<Self> {
        if u.rows() != self.dim || u.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.rows(),
            });
        }
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                let comps = (0..self.dim)
                    .map(|i| (0..self.dim).map(|j| u.get(i, j) * v.components()[j]).sum())
                    .collect();
                UnitVector::normalized(comps)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim, vectors, self.contexts.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyViolation {
    WrongContextSize {
        context: usize,
        size: usize,
    },
    RepeatedInContext {
        context: usize,
        vector: usize,
    },
    NotOrthogonal {
        context: usize,
        first: usize,
        second: usize,
        overlap: f64,
    },
    DuplicateVectors {
        first: usize,
        second: usize,
    },
}

impl fmt::Display for FamilyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyViolation::WrongContextSize { context, size } => {
                write!(f, "context {context} has {size} vectors")
            }
            FamilyViolation::RepeatedInContext { context, vector } => {
                write!(f, "context {context} repeats vector {vector}")
            }
            FamilyViolation::NotOrthogonal {
                context,
                first,
                second,
                overlap,
            } => write!(
                f,
                "context {context}: vectors {first} and {second} overlap by {overlap:e}"
            ),
            FamilyViolation::DuplicateVectors { first, second } => {
                write!(f, "vectors {first} and {second} are the same ray")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FamilyReport {
    pub violations: Vec<FamilyViolation>,
}

impl FamilyReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that each context is an orthonormal basis of `C^dim` and that no
/// two listed vectors are the same ray.
pub fn validate_context_family(f: &ContextFamily) -> FamilyReport {
    let mut violations = Vec::new();
    for (c, ctx) in f.contexts().iter().enumerate() {
        if ctx.len() != f.dim() {
            violations.push(FamilyViolation::WrongContextSize {
                context: c,
                size: ctx.len(),
            });
        }
        for (a, &i) in ctx.iter().enumerate() {
            for &j in &ctx[a + 1..] {
                if i == j {
                    violations.push(FamilyViolation::RepeatedInContext {
                        context: c,
                        vector: i,
                    });
                    continue;
                }
                let overlap = f.vectors()[i].inner(&f.vectors()[j]).norm();
                if overlap > PREDICATE_TOL {
                    violations.push(FamilyViolation::NotOrthogonal {
                        context: c,
                        first: i,
                        second: j,
                        overlap,
                    });
                }
            }
        }
    }
    for (i, u) in f.vectors().iter().enumerate() {
        for (j, v) in f.vectors().iter().enumerate().skip(i + 1) {
            if u.inner(v).norm() >= 1.0 - PHASE_TOL {
                violations.push(FamilyViolation::DuplicateVectors {
                    first: i,
                    second: j,
                });
            }
        }
    }
    FamilyReport { violations }
}

/// A global 0/1 assignment, one value per vector of the family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryValuation {
    values: Vec<bool>,
}

impl BinaryValuation {
    pub fn new(values: Vec<bool>) -> Self {
        Self { values }
    }

    pub fn value(&self, vector: usize) -> u8 {
        u8::from(self.values[vector])
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// Every context holds exactly one 1.
    pub fn satisfies(&self, f: &ContextFamily) -> bool {
        self.values.len() == f.vectors().len()
            && f.contexts()
                .iter()
                .all(|ctx| ctx.iter().filter(|&&i| self.values[i]).count() == 1)
    }
}

/// Search-tree statistics. For an unsatisfiable family they certify that the
/// whole tree was explored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub nodes: u64,
    pub dead_ends: u64,
    pub max_depth: usize,
    pub contexts: usize,
    pub vectors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValuationSearch {
    Found {
        valuation: BinaryValuation,
        stats: SearchStats,
    },
    /// No valuation exists; the statistics describe the exhausted tree.
    Exhausted(SearchStats),
}

impl ValuationSearch {
    pub fn valuation(&self) -> Option<&BinaryValuation> {
        match self {
            ValuationSearch::Found { valuation, .. } => Some(valuation),
            ValuationSearch::Exhausted(_) => None,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            ValuationSearch::Found { stats, .. } | ValuationSearch::Exhausted(stats) => stats,
        }
    }
}

struct Search<'a> {
    family: &'a ContextFamily,
    /// Contexts containing each vector.
    member_of: Vec<Vec<usize>>,
    values: Vec<Option<bool>>,
    stats: SearchStats,
}

impl<'a> Search<'a> {
    fn new(family: &'a ContextFamily) -> Self {
        let mut member_of = vec![Vec::new(); family.vectors().len()];
        for (c, ctx) in family.contexts().iter().enumerate() {
            for &i in ctx {
                if !member_of[i].contains(&c) {
                    member_of[i].push(c);
                }
            }
        }
        Self {
            family,
            member_of,
            values: vec![None; family.vectors().len()],
            stats: SearchStats {
                contexts: family.contexts().len(),
                vectors: family.vectors().len(),
                ..SearchStats::default()
            },
        }
    }

    /// Sets `v = 1` and its context-mates to 0. Returns the vectors changed,
    /// or `None` (with nothing changed) on conflict.
    fn assign_one(&mut self, v: usize) -> Option<Vec<usize>> {
        let mut changed = vec![v];
        self.values[v] = Some(true);
        for &c in &self.member_of[v] {
            let ctx = &self.family.contexts()[c];
            if ctx.iter().filter(|&&i| i == v).count() > 1 {
                self.undo(&changed);
                return None;
            }
            for &mate in ctx {
                if mate == v {
                    continue;
                }
                match self.values[mate] {
                    Some(true) => {
                        self.undo(&changed);
                        return None;
                    }
                    Some(false) => {}
                    None => {
                        self.values[mate] = Some(false);
                        changed.push(mate);
                    }
                }
            }
        }
        // Forward check: every context must still be able to take a 1.
        let alive = self
            .family
            .contexts()
            .iter()
            .all(|ctx| ctx.iter().any(|&i| self.values[i] != Some(false)));
        if alive {
            Some(changed)
        } else {
            self.undo(&changed);
            None
        }
    }

    fn undo(&mut self, changed: &[usize]) {
        for &i in changed {
            self.values[i] = None;
        }
    }

    /// Depth-first over contexts in order; `visit` is called on every
    /// complete valuation and returns whether to keep searching.
    fn run(
        &mut self,
        next: usize,
        depth: usize,
        visit: &mut dyn FnMut(&[Option<bool>]) -> bool,
    ) -> bool {
        self.stats.nodes += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);
        let family = self.family;
        let Some(c) = (next..family.contexts().len()).find(|&c| {
            !family.contexts()[c]
                .iter()
                .any(|&i| self.values[i] == Some(true))
        }) else {
            return visit(&self.values);
        };
        let candidates: Vec<usize> = family.contexts()[c]
            .iter()
            .copied()
            .filter(|&i| self.values[i].is_none())
            .collect();
        let mut tried = Vec::new();
        let mut any = false;
        for v in candidates {
            if tried.contains(&v) {
                continue;
            }
            tried.push(v);
            if let Some(changed) = self.assign_one(v) {
                any = true;
                let keep_going = self.run(c + 1, depth + 1, visit);
                self.undo(&changed);
                if !keep_going {
                    return false;
                }
            }
        }
        if !any {
            self.stats.dead_ends += 1;
        }
        true
    }
}

fn complete(values: &[Option<bool>]) -> BinaryValuation {
    BinaryValuation::new(values.iter().map(|v| v.unwrap_or(false)).collect())
}

/// Backtracking search for a valuation with exactly one 1 per context.
/// Deterministic for a fixed family; vectors outside every context get 0.
pub fn find_binary_valuation(f: &ContextFamily) -> ValuationSearch {
    let mut search = Search::new(f);
    let mut found = None;
    search.run(0, 0, &mut |values| {
        let candidate = complete(values);
        if candidate.satisfies(f) {
            found = Some(candidate);
            false
        } else {
            true
        }
    });
    match found {
        Some(valuation) => ValuationSearch::Found {
            valuation,
            stats: search.stats,
        },
        None => ValuationSearch::Exhausted(search.stats),
    }
}

/// Number of valuations over all `2^n` assignments; vectors in no context
/// are free and double the count each.
pub fn count_binary_valuations(f: &ContextFamily) -> u128 {
    let mut search = Search::new(f);
    let mut count: u128 = 0;
    search.run(0, 0, &mut |values| {
        if complete(values).satisfies(f) {
            count += 1;
        }
        true
    });
    let free = search.member_of.iter().filter(|m| m.is_empty()).count();
    count << free
}

/// The intensity of every vector's rank-one power under `isa`.
pub fn intensive_valuation_table(f: &ContextFamily, isa: &IntensiveState) -> Result<GivTable> {
    if isa.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: isa.dim(),
        });
    }
    let powers: Vec<Power> = f.vectors().iter().map(Power::from_vector).collect();
    let values = powers
        .iter()
        .map(|p| intensity(isa, p))
        .collect::<Result<Vec<_>>>()?;
    GivTable::new(powers, values)
}

/// Per-context sums of a table built by [`intensive_valuation_table`].
pub fn context_sums(f: &ContextFamily, table: &GivTable) -> Vec<f64> {
    f.contexts()
        .iter()
        .map(|ctx| ctx.iter().map(|&i| table.intensity(i)).sum())
        .collect()
}

#[derive(Debug, Clone)]
pub struct ContextualityReport {
    pub validation: FamilyReport,
    pub binary: ValuationSearch,
    pub table: GivTable,
    pub context_sums: Vec<f64>,
    /// `max |Σ_context Ψ - 1|`, zero for an empty family.
    pub max_context_deviation: f64,
    /// The family has no contexts, so both sides hold trivially.
    pub vacuous: bool,
}

impl ContextualityReport {
    pub fn binary_exists(&self) -> bool {
        self.binary.valuation().is_some()
    }

    pub fn intensive_consistent(&self) -> bool {
        self.intensive_consistent_within(PREDICATE_TOL)
    }

    pub fn intensive_consistent_within(&self, tol: f64) -> bool {
        self.max_context_deviation <= tol
    }
}

/// Runs the binary search and the intensive valuation side by side.
pub fn contextuality_report(
    f: &ContextFamily,
    isa: &IntensiveState,
) -> Result<ContextualityReport> {
    let validation = validate_context_family(f);
    let binary = find_binary_valuation(f);
    let table = intensive_valuation_table(f, isa)?;
    let context_sums = context_sums(f, &table);
    let max_context_deviation = context_sums
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ContextualityReport {
        validation,
        binary,
        table,
        context_sums,
        max_context_deviation,
        vacuous: f.contexts().is_empty(),
    })
}
