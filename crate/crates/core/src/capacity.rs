//! Capacities on the atoms of a finite event algebra.
//!
//! A capacity stores one value per union of atoms, indexed by the atom
//! bitmask. Two Choquet integrals are provided (sorted layers and the
//! shifted level-set integral) and cross-checked on every call.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::Value;

use crate::instance::EventAlgebra;
use crate::lp::{self, LinearProgram, LpError, LpOutcome, Relation, Sense, VarId};
use crate::rational::{dyadic, format_rational, int, parse_rational, Rational};

pub const MAX_ATOMS: usize = 6;
pub const DEFAULT_ATOM_CAP: usize = 6;
/// Vertex enumeration of the core is offered up to this many atoms.
pub const MAX_VERTEX_ATOMS: usize = 5;

/// A union of atoms as a bitmask over atom indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AtomSet(pub u32);

impl AtomSet {
    pub const EMPTY: AtomSet = AtomSet(0);

    pub fn full(n: usize) -> Self {
        AtomSet((1u32 << n) - 1)
    }

    /// Every subset of `0..n`, in bitmask order.
    pub fn all(n: usize) -> impl Iterator<Item = AtomSet> {
        (0..1u32 << n).map(AtomSet)
    }

    pub fn singleton(i: usize) -> Self {
        AtomSet(1 << i)
    }

    pub fn with(self, i: usize) -> Self {
        AtomSet(self.0 | 1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn union(self, other: AtomSet) -> Self {
        AtomSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AtomSet) -> Self {
        AtomSet(self.0 & other.0)
    }

    pub fn minus(self, other: AtomSet) -> Self {
        AtomSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: AtomSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |i| self.0 >> i & 1 == 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CapacityError {
    #[error("{count} atoms exceed the cap of {cap}")]
    TooManyAtoms { count: usize, cap: usize },
    #[error("expected {expected} set values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("capacity must vanish on the empty set and equal 1 on the whole space (got {empty} and {full})")]
    NotNormalized { empty: String, full: String },
    #[error("capacity is not monotone: {smaller} ⊆ {larger} but {smaller_value} > {larger_value}")]
    NonMonotone {
        smaller: String,
        larger: String,
        smaller_value: String,
        larger_value: String,
    },
    #[error("profile has {got} entries but the algebra has {expected} atoms")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("capacity file: {0}")]
    Parse(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("internal contradiction: {0}")]
    InternalContradiction(String),
}

/// Set function on the algebra with `γ(∅) = 0` and `γ(Ω) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capacity {
    algebra: EventAlgebra,
    values: Vec<Rational>,
}

impl Capacity {
    /// Checks normalization and monotonicity.
    pub fn new(algebra: EventAlgebra, values: Vec<Rational>) -> Result<Self, CapacityError> {
        let cap = Self::normalized(algebra, values)?;
        if let Some((a, b)) = cap.monotonicity_violation() {
            return Err(CapacityError::NonMonotone {
                smaller: cap.algebra.describe(a),
                larger: cap.algebra.describe(b),
                smaller_value: format_rational(cap.value(a)),
                larger_value: format_rational(cap.value(b)),
            });
        }
        Ok(cap)
    }

    /// Checks normalization only. Set functions read off an instance that
    /// fails the structure clauses need not be monotone.
    pub fn normalized(algebra: EventAlgebra, values: Vec<Rational>) -> Result<Self, CapacityError> {
        let n = algebra.atom_count();
        if n > MAX_ATOMS {
            return Err(CapacityError::TooManyAtoms { count: n, cap: MAX_ATOMS });
        }
        if values.len() != 1 << n {
            return Err(CapacityError::WrongLength {
                expected: 1 << n,
                got: values.len(),
            });
        }
        let empty = &values[0];
        let full = &values[(1 << n) - 1];
        if !empty.is_zero() || !full.is_one() {
            return Err(CapacityError::NotNormalized {
                empty: format_rational(empty),
                full: format_rational(full),
            });
        }
        Ok(Self { algebra, values })
    }

    pub fn from_fn(algebra: EventAlgebra, f: impl Fn(AtomSet) -> Rational) -> Result<Self, CapacityError> {
        let values = algebra.members().map(f).collect();
        Self::new(algebra, values)
    }

    /// The capacity `A ↦ Σ_{a∈A} p(a)`.
    pub fn additive(algebra: EventAlgebra, weights: &[Rational]) -> Result<Self, CapacityError> {
        Self::from_fn(algebra, |set| set.iter().map(|i| weights[i].clone()).sum())
    }

    pub fn algebra(&self) -> &EventAlgebra {
        &self.algebra
    }

    pub fn atom_count(&self) -> usize {
        self.algebra.atom_count()
    }

    pub fn full(&self) -> AtomSet {
        AtomSet::full(self.atom_count())
    }

    pub fn value(&self, set: AtomSet) -> &Rational {
        &self.values[set.0 as usize]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn members(&self) -> impl Iterator<Item = AtomSet> {
        AtomSet::all(self.atom_count())
    }

    /// A pair `A ⊂ A ∪ {a}` with `γ(A) > γ(A ∪ {a})`, if any.
    pub fn monotonicity_violation(&self) -> Option<(AtomSet, AtomSet)> {
        let n = self.atom_count();
        for a in self.members() {
            for i in 0..n {
                let b = a.with(i);
                if b != a && self.value(a) > self.value(b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violation().is_none()
    }

    pub fn is_additive(&self) -> bool {
        self.members().all(|set| {
            let sum: Rational = set.iter().map(|i| self.value(AtomSet::singleton(i)).clone()).sum();
            &sum == self.value(set)
        })
    }

    /// Atoms `a` with `γ({a}) > 0`.
    pub fn non_null_atoms(&self) -> AtomSet {
        (0..self.atom_count())
            .filter(|i| self.value(AtomSet::singleton(*i)).is_positive())
            .fold(AtomSet::EMPTY, AtomSet::with)
    }

    fn check_profile(&self, profile: &[Rational]) -> Result<(), CapacityError> {
        if profile.len() != self.atom_count() {
            return Err(CapacityError::DimensionMismatch {
                expected: self.atom_count(),
                got: profile.len(),
            });
        }
        Ok(())
    }

    /// `{a : profile(a) ≥ t}`.
    pub fn upper_set(profile: &[Rational], t: &Rational) -> AtomSet {
        profile
            .iter()
            .enumerate()
            .filter(|(_, v)| *v >= t)
            .fold(AtomSet::EMPTY, |s, (i, _)| s.with(i))
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for set in self.members() {
            writeln!(f, "{:<16} {}", self.algebra.describe(set), format_rational(self.value(set)))?;
        }
        Ok(())
    }
}

/// Sorted-layer sum `Σ (v_i − v_{i+1}) γ(U_i) + v_r γ(Ω)` over the distinct
/// levels `v_1 > … > v_r`.
pub fn choquet_layers(capacity: &Capacity, profile: &[Rational]) -> Result<Rational, CapacityError> {
    capacity.check_profile(profile)?;
    let mut levels: Vec<&Rational> = profile.iter().collect();
    levels.sort_by(|a, b| b.cmp(a));
    levels.dedup();
    let mut total = Rational::zero();
    for w in levels.windows(2) {
        let upper = Capacity::upper_set(profile, w[0]);
        total += (w[0] - w[1]) * capacity.value(upper);
    }
    if let Some(last) = levels.last() {
        total += *last * capacity.value(capacity.full());
    }
    Ok(total)
}

/// `∫_{−k}^{k} γ(profile ≥ t) dt − k` with `k = max |profile|`, integrated
/// exactly between consecutive breakpoints.
pub fn choquet_shifted(capacity: &Capacity, profile: &[Rational]) -> Result<Rational, CapacityError> {
    capacity.check_profile(profile)?;
    let k = profile.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
    let mut points: Vec<Rational> = profile.to_vec();
    points.push(-k.clone());
    points.push(k.clone());
    points.sort();
    points.dedup();
    let mut integral = Rational::zero();
    for w in points.windows(2) {
        // On (w0, w1] the upper set {profile ≥ t} is that of t = w1.
        let set = Capacity::upper_set(profile, &w[1]);
        integral += (&w[1] - &w[0]) * capacity.value(set);
    }
    Ok(integral - k)
}

/// Choquet integral of a profile over atoms. Both algorithms run and must agree.
pub fn choquet_integral(capacity: &Capacity, profile: &[Rational]) -> Result<Rational, CapacityError> {
    let layers = choquet_layers(capacity, profile)?;
    let shifted = choquet_shifted(capacity, profile)?;
    if layers != shifted {
        return Err(CapacityError::InternalContradiction(format!(
            "layer sum {} and shifted integral {} disagree",
            format_rational(&layers),
            format_rational(&shifted)
        )));
    }
    Ok(layers)
}

/// Right-endpoint Riemann sum `Σ_{i=1}^{k·2^{n+1}} 2^{−n} γ(profile ≥ i·2^{−n} − k) − k`.
pub fn choquet_grid(capacity: &Capacity, profile: &[Rational], n: u32, k: u64) -> Result<Rational, CapacityError> {
    capacity.check_profile(profile)?;
    let kr = Rational::from_integer(k.into());
    assert!(
        profile.iter().all(|v| v.abs() <= kr),
        "grid bound k must dominate the profile"
    );
    let step = dyadic(n);
    let count = k << (n + 1);
    let mut sum = Rational::zero();
    let mut t = -kr.clone();
    for _ in 0..count {
        t += &step;
        sum += capacity.value(Capacity::upper_set(profile, &t));
    }
    Ok(sum * step - kr)
}

/// A pair with `γ(A∪B) + γ(A∩B) < γ(A) + γ(B)`, if any.
pub fn convexity_violation(capacity: &Capacity) -> Option<(AtomSet, AtomSet)> {
    for a in capacity.members() {
        for b in capacity.members().filter(|b| b.0 > a.0) {
            let lhs = capacity.value(a.union(b)) + capacity.value(a.intersection(b));
            if lhs < capacity.value(a) + capacity.value(b) {
                return Some((a, b));
            }
        }
    }
    None
}

pub fn is_convex(capacity: &Capacity) -> bool {
    convexity_violation(capacity).is_none()
}

/// `{λ ≥ 0 : λ(Ω) = 1, λ(A) ≥ γ(A) for all A}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorePolytope {
    pub atom_count: usize,
    /// `λ(A) ≥ bound` for every nonempty proper `A`.
    pub constraints: Vec<(AtomSet, Rational)>,
    pub vertices: Option<Vec<Vec<Rational>>>,
}

impl CorePolytope {
    pub fn contains(&self, lambda: &[Rational]) -> bool {
        lambda.len() == self.atom_count
            && lambda.iter().all(|x| !x.is_negative())
            && lambda.iter().sum::<Rational>().is_one()
            && self
                .constraints
                .iter()
                .all(|(set, bound)| &set.iter().map(|i| lambda[i].clone()).sum::<Rational>() >= bound)
    }
}

pub fn core_polytope(capacity: &Capacity, enumerate_vertices: bool) -> Result<CorePolytope, CapacityError> {
    let n = capacity.atom_count();
    let full = capacity.full();
    let constraints: Vec<(AtomSet, Rational)> = capacity
        .members()
        .filter(|s| !s.is_empty() && *s != full)
        .map(|s| (s, capacity.value(s).clone()))
        .collect();
    let mut polytope = CorePolytope {
        atom_count: n,
        constraints,
        vertices: None,
    };
    if enumerate_vertices {
        if n > MAX_VERTEX_ATOMS {
            return Err(CapacityError::TooManyAtoms { count: n, cap: MAX_VERTEX_ATOMS });
        }
        polytope.vertices = Some(core_vertices(&polytope));
    }
    Ok(polytope)
}

/// Vertices of `{λ ≥ 0 : Σλ = 1, row·λ ≥ bound for each row}`: every choice
/// of `n − 1` tight inequalities next to `Σλ = 1` with a unique feasible solution.
pub(crate) fn simplex_vertices(n: usize, rows: &[(Vec<Rational>, Rational)]) -> Vec<Vec<Rational>> {
    let mut all: Vec<(Vec<Rational>, Rational)> = (0..n)
        .map(|i| {
            let mut row = vec![Rational::zero(); n];
            row[i] = Rational::one();
            (row, Rational::zero())
        })
        .collect();
    all.extend(rows.iter().cloned());
    let feasible = |p: &[Rational]| {
        p.iter().all(|x| !x.is_negative())
            && rows
                .iter()
                .all(|(r, b)| &r.iter().zip(p).map(|(a, x)| a * x).sum::<Rational>() >= b)
    };
    let mut found: Vec<Vec<Rational>> = Vec::new();
    let mut chosen = Vec::with_capacity(n);
    choose(all.len(), n.saturating_sub(1), 0, &mut chosen, &mut |idx| {
        let mut system: Vec<(Vec<Rational>, Rational)> = vec![(vec![Rational::one(); n], Rational::one())];
        system.extend(idx.iter().map(|&r| all[r].clone()));
        if let Some(point) = solve_square(system) {
            if feasible(&point) && !found.contains(&point) {
                found.push(point);
            }
        }
    });
    found.sort();
    found
}

fn core_vertices(core: &CorePolytope) -> Vec<Vec<Rational>> {
    let n = core.atom_count;
    let rows: Vec<(Vec<Rational>, Rational)> = core
        .constraints
        .iter()
        .map(|(set, bound)| {
            let row = (0..n)
                .map(|i| if set.contains(i) { Rational::one() } else { Rational::zero() })
                .collect();
            (row, bound.clone())
        })
        .collect();
    simplex_vertices(n, &rows)
}

fn choose(total: usize, k: usize, start: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for i in start..total {
        if total - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        choose(total, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

/// Gauss–Jordan on a square system; `None` when singular.
fn solve_square(mut system: Vec<(Vec<Rational>, Rational)>) -> Option<Vec<Rational>> {
    let n = system.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !system[r].0[col].is_zero())?;
        system.swap(col, pivot);
        let inv = Rational::one() / &system[col].0[col];
        let (row, rhs) = system[col].clone();
        let row: Vec<Rational> = row.iter().map(|a| a * &inv).collect();
        let rhs = rhs * &inv;
        for r in 0..n {
            if r != col && !system[r].0[col].is_zero() {
                let factor = system[r].0[col].clone();
                for c in 0..n {
                    let delta = &factor * &row[c];
                    system[r].0[c] -= delta;
                }
                system[r].1 -= &factor * &rhs;
            }
        }
        system[col] = (row, rhs);
    }
    Some(system.into_iter().map(|(_, b)| b).collect())
}

/// `min λ·profile` over the core by linear programming; `None` when the core is empty.
pub fn core_minimum(capacity: &Capacity, profile: &[Rational]) -> Result<Option<(Rational, Vec<Rational>)>, CapacityError> {
    capacity.check_profile(profile)?;
    let n = capacity.atom_count();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let vars: Vec<VarId> = (0..n).map(|i| lp.add_nonneg(format!("lambda_{i}"))).collect();
    lp.set_objective(vars.iter().zip(profile).map(|(v, p)| (*v, p.clone())).collect());
    lp.add_constraint(vars.iter().map(|v| (*v, Rational::one())).collect(), Relation::Eq, Rational::one());
    let full = capacity.full();
    for set in capacity.members().filter(|s| !s.is_empty() && *s != full) {
        lp.add_constraint(
            set.iter().map(|i| (vars[i], Rational::one())).collect(),
            Relation::Ge,
            capacity.value(set).clone(),
        );
    }
    match lp::solve_lp(&lp)? {
        LpOutcome::Optimal(sol) => Ok(Some((sol.value, sol.primal))),
        LpOutcome::Infeasible(_) => Ok(None),
        LpOutcome::Unbounded(_) => Err(CapacityError::InternalContradiction(
            "core minimum unbounded over a simplex".into(),
        )),
    }
}

/// An order-equivalent submeasure and the strict-order margin it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmeasureWitness {
    pub submeasure: Capacity,
    pub margin: Rational,
}

/// Finds `γ_*` with `γ_*(∅) = 0`, monotone, subadditive, `γ_*(Ω) = 1`, and
/// `γ(A) > γ(B) ⇔ γ_*(A) > γ_*(B)`, maximizing the smallest strict gap.
pub fn submeasure_equivalent(capacity: &Capacity, atom_cap: usize) -> Result<SubmeasureWitness, CapacityError> {
    let n = capacity.atom_count();
    if n > atom_cap {
        return Err(CapacityError::TooManyAtoms { count: n, cap: atom_cap });
    }
    let sets: Vec<AtomSet> = capacity.members().collect();
    let mut lp = LinearProgram::new(Sense::Maximize);
    let g: Vec<VarId> = sets
        .iter()
        .map(|s| lp.add_variable(format!("g{}", s.0), Some(Rational::zero()), Some(Rational::one())))
        .collect();
    let eps = lp.add_variable("margin", None, Some(Rational::one()));
    lp.set_objective(vec![(eps, Rational::one())]);
    let one = Rational::one;
    lp.add_constraint(vec![(g[0], one())], Relation::Eq, Rational::zero());
    lp.add_constraint(vec![(g[sets.len() - 1], one())], Relation::Eq, one());
    for a in &sets {
        for i in 0..n {
            let b = a.with(i);
            if b != *a {
                lp.add_constraint(vec![(g[b.0 as usize], one()), (g[a.0 as usize], -one())], Relation::Ge, Rational::zero());
            }
        }
    }
    for a in &sets {
        for b in sets.iter().filter(|b| b.0 > a.0) {
            let u = a.union(*b);
            if u == *a || u == *b {
                continue;
            }
            lp.add_constraint(
                vec![(g[a.0 as usize], one()), (g[b.0 as usize], one()), (g[u.0 as usize], -one())],
                Relation::Ge,
                Rational::zero(),
            );
        }
    }
    // Sort by γ; consecutive sets are tied or strictly ordered, which pins the whole order.
    let mut chain = sets.clone();
    chain.sort_by(|a, b| capacity.value(*a).cmp(capacity.value(*b)).then(a.cmp(b)));
    for w in chain.windows(2) {
        let (lo, hi) = (g[w[0].0 as usize], g[w[1].0 as usize]);
        if capacity.value(w[0]) == capacity.value(w[1]) {
            lp.add_constraint(vec![(hi, one()), (lo, -one())], Relation::Eq, Rational::zero());
        } else {
            lp.add_constraint(vec![(hi, one()), (lo, -one()), (eps, -one())], Relation::Ge, Rational::zero());
        }
    }
    let contradiction = |why: String| {
        CapacityError::InternalContradiction(format!(
            "no order-equivalent submeasure exists ({why}); capacity:\n{capacity}"
        ))
    };
    let sol = match lp::solve_lp(&lp)? {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Infeasible(_) => return Err(contradiction("order constraints are infeasible".into())),
        LpOutcome::Unbounded(_) => return Err(contradiction("margin unbounded".into())),
    };
    let has_strict = chain.windows(2).any(|w| capacity.value(w[0]) != capacity.value(w[1]));
    if has_strict && !sol.value.is_positive() {
        return Err(contradiction(format!("best margin is {}", format_rational(&sol.value))));
    }
    let values: Vec<Rational> = g.iter().map(|v| sol.primal[v.0].clone()).collect();
    let submeasure = Capacity::new(capacity.algebra().clone(), values)
        .map_err(|e| contradiction(format!("witness rejected: {e}")))?;
    verify_submeasure(capacity, &submeasure).map_err(contradiction)?;
    Ok(SubmeasureWitness {
        submeasure,
        margin: sol.value,
    })
}

/// Exhaustive check of the submeasure axioms and the strict-order biconditional.
pub fn verify_submeasure(original: &Capacity, candidate: &Capacity) -> Result<(), String> {
    if original.algebra() != candidate.algebra() {
        return Err("different algebras".into());
    }
    let alg = candidate.algebra();
    if !candidate.value(AtomSet::EMPTY).is_zero() {
        return Err("nonzero on the empty set".into());
    }
    for a in candidate.members() {
        for b in candidate.members() {
            let (ga, gb) = (candidate.value(a), candidate.value(b));
            if a.is_subset(b) && ga > gb {
                return Err(format!("not monotone on {} ⊆ {}", alg.describe(a), alg.describe(b)));
            }
            if candidate.value(a.union(b)) > &(ga + gb) {
                return Err(format!("not subadditive on {}, {}", alg.describe(a), alg.describe(b)));
            }
            if (original.value(a) > original.value(b)) != (ga > gb) {
                return Err(format!("order differs on {}, {}", alg.describe(a), alg.describe(b)));
            }
        }
    }
    Ok(())
}

/// Per set `B` with `γ(B) > 0`: the least `N` such that every partition of
/// `Ω` into at least `N` nonempty cells has a cell `A` with `γ(B∖A) > γ(A)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionWitness {
    pub set: AtomSet,
    pub threshold: usize,
    /// No partition has `threshold` or more cells, so the condition holds emptily.
    pub vacuous: bool,
    /// A partition with `threshold − 1` cells that fails, when `threshold > 1`.
    pub failing_partition: Option<Vec<AtomSet>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionReport {
    pub holds: bool,
    pub holds_non_vacuously: bool,
    pub witnesses: Vec<PartitionWitness>,
}

/// Every partition of `0..n` into nonempty blocks, grouped by block count.
pub fn set_partitions(n: usize) -> Vec<Vec<AtomSet>> {
    fn rec(i: usize, n: usize, blocks: &mut Vec<AtomSet>, out: &mut Vec<Vec<AtomSet>>) {
        if i == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b] = blocks[b].with(i);
            rec(i + 1, n, blocks, out);
            blocks[b] = AtomSet(blocks[b].0 & !(1 << i));
        }
        blocks.push(AtomSet::singleton(i));
        rec(i + 1, n, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(0, n, &mut Vec::new(), &mut out);
    }
    out
}

pub fn partition_axiom_check(capacity: &Capacity, atom_cap: usize) -> Result<PartitionReport, CapacityError> {
    let n = capacity.atom_count();
    if n > atom_cap {
        return Err(CapacityError::TooManyAtoms { count: n, cap: atom_cap });
    }
    let partitions = set_partitions(n);
    let mut witnesses = Vec::new();
    for b in capacity.members().filter(|b| capacity.value(*b).is_positive()) {
        let passes = |p: &Vec<AtomSet>| p.iter().any(|a| capacity.value(b.minus(*a)) > capacity.value(*a));
        // Largest size with a failing partition; every larger size passes.
        let failing = partitions
            .iter()
            .filter(|p| !passes(p))
            .max_by_key(|p| p.len());
        let threshold = failing.map_or(1, |p| p.len() + 1);
        witnesses.push(PartitionWitness {
            set: b,
            threshold,
            vacuous: threshold > n,
            failing_partition: failing.cloned(),
        });
    }
    Ok(PartitionReport {
        holds: true,
        holds_non_vacuously: witnesses.iter().all(|w| !w.vacuous),
        witnesses,
    })
}

/// Uniform probability on the non-null atoms, provided it has exactly the
/// null sets of `γ`; `None` when some non-null set consists of null atoms.
pub fn null_equivalent_probability(capacity: &Capacity) -> Option<Vec<Rational>> {
    let support = capacity.non_null_atoms();
    for set in capacity.members() {
        let p_null = set.intersection(support).is_empty();
        let g_null = capacity.value(set).is_zero();
        if p_null != g_null {
            return None;
        }
    }
    let weight = Rational::one() / int(support.len() as i64);
    Some(
        (0..capacity.atom_count())
            .map(|i| if support.contains(i) { weight.clone() } else { Rational::zero() })
            .collect(),
    )
}

/// Reads `{"atoms": [..], "values": {key: "p/q"}}` where each key is a
/// decimal bitmask or a comma list of atom names (optionally in braces).
pub fn parse_capacity(text: &str) -> Result<Capacity, CapacityError> {
    let err = |m: String| CapacityError::Parse(m);
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| err(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let obj = doc.as_object().ok_or_else(|| err("top level must be an object".into()))?;
    if let Some(k) = obj.keys().find(|k| *k != "atoms" && *k != "values") {
        return Err(err(format!("unknown key {k:?}")));
    }
    let atoms: Vec<String> = obj
        .get("atoms")
        .and_then(Value::as_array)
        .ok_or_else(|| err("\"atoms\" must be an array of strings".into()))?
        .iter()
        .map(|a| a.as_str().map(str::to_string).ok_or_else(|| err("atom names must be strings".into())))
        .collect::<Result<_, _>>()?;
    let n = atoms.len();
    if n == 0 {
        return Err(err("at least one atom is required".into()));
    }
    if n > MAX_ATOMS {
        return Err(CapacityError::TooManyAtoms { count: n, cap: MAX_ATOMS });
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = atoms.iter().find(|a| !seen.insert(*a)) {
        return Err(err(format!("duplicate atom {dup:?}")));
    }
    let raw = obj
        .get("values")
        .and_then(Value::as_object)
        .ok_or_else(|| err("\"values\" must be an object".into()))?;
    let mut values: BTreeMap<u32, Rational> = BTreeMap::new();
    for (key, v) in raw {
        let set = parse_set_key(key, &atoms).map_err(err)?;
        let text = v.as_str().ok_or_else(|| err(format!("values.{key}: expected a \"p/q\" string")))?;
        let q = parse_rational(text).map_err(|e| err(format!("values.{key}: {e}")))?;
        if values.insert(set.0, q).is_some() {
            return Err(err(format!("values.{key}: set given twice")));
        }
    }
    let mut dense = Vec::with_capacity(1 << n);
    for mask in 0..1u32 << n {
        let algebra_labels = &atoms;
        match values.remove(&mask) {
            Some(v) => dense.push(v),
            None => {
                let names: Vec<&str> = AtomSet(mask).iter().map(|i| algebra_labels[i].as_str()).collect();
                return Err(err(format!("no value for the set {{{}}}", names.join(","))));
            }
        }
    }
    Capacity::new(EventAlgebra::discrete(atoms), dense)
}

fn parse_set_key(key: &str, atoms: &[String]) -> Result<AtomSet, String> {
    let n = atoms.len();
    if !key.is_empty() && key.bytes().all(|b| b.is_ascii_digit()) {
        let mask: u32 = key.parse().map_err(|_| format!("bad bitmask {key:?}"))?;
        if mask >= 1 << n {
            return Err(format!("bitmask {mask} has bits beyond {n} atoms"));
        }
        return Ok(AtomSet(mask));
    }
    let inner = key.trim();
    let inner = inner
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .unwrap_or(inner);
    let mut set = AtomSet::EMPTY;
    for name in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let i = atoms
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| format!("unknown atom {name:?} in set key {key:?}"))?;
        set = set.with(i);
    }
    Ok(set)
}

/// Inverse of [`parse_capacity`], keyed by set lists.
pub fn capacity_to_json(capacity: &Capacity) -> Value {
    let labels = capacity.algebra().labels();
    let values: serde_json::Map<String, Value> = capacity
        .members()
        .map(|s| {
            let names: Vec<&str> = s.iter().map(|i| labels[i].as_str()).collect();
            (format!("{{{}}}", names.join(",")), Value::String(format_rational(capacity.value(s))))
        })
        .collect();
    serde_json::json!({ "atoms": labels, "values": values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn labels(n: usize) -> EventAlgebra {
        EventAlgebra::discrete((1..=n).map(|i| i.to_string()).collect())
    }

    fn squared_thirds() -> Capacity {
        Capacity::from_fn(labels(3), |s| ratio((s.len() * s.len()) as i64, 9)).unwrap()
    }

    fn two_atom(a: Rational, b: Rational) -> Capacity {
        Capacity::new(labels(2), vec![int(0), a, b, int(1)]).unwrap()
    }

    #[test]
    fn rejects_bad_capacities() {
        assert!(matches!(
            Capacity::new(labels(2), vec![int(0), int(1), int(1)]),
            Err(CapacityError::WrongLength { .. })
        ));
        assert!(matches!(
            Capacity::new(labels(1), vec![int(0), ratio(1, 2)]),
            Err(CapacityError::NotNormalized { .. })
        ));
        assert!(matches!(
            Capacity::new(labels(2), vec![int(0), int(2), int(0), int(1)]),
            Err(CapacityError::NonMonotone { .. })
        ));
    }

    #[test]
    fn choquet_basics() {
        let cap = squared_thirds();
        let h1 = [int(1), ratio(1, 2), int(0)];
        assert_eq!(choquet_integral(&cap, &h1).unwrap(), ratio(5, 18));
        let c = vec![ratio(-2, 3); 3];
        assert_eq!(choquet_integral(&cap, &c).unwrap(), ratio(-2, 3));
        let indicator = [int(0), int(1), int(1)];
        assert_eq!(choquet_integral(&cap, &indicator).unwrap(), ratio(4, 9));
        let signed = [int(-1), int(2), ratio(1, 3)];
        assert_eq!(choquet_layers(&cap, &signed).unwrap(), choquet_shifted(&cap, &signed).unwrap());
        assert!(matches!(
            choquet_integral(&cap, &[int(1)]),
            Err(CapacityError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn grid_sum_on_dyadic_levels() {
        let cap = squared_thirds();
        let h1 = [int(1), ratio(1, 2), int(0)];
        assert_eq!(choquet_grid(&cap, &h1, 1, 1).unwrap(), ratio(5, 18));
        assert_eq!(choquet_grid(&cap, &vec![int(0); 3], 3, 2).unwrap(), int(0));
        let p = [ratio(3, 8), ratio(-5, 4), int(1)];
        assert_eq!(choquet_grid(&cap, &p, 3, 2).unwrap(), choquet_integral(&cap, &p).unwrap());
    }

    #[test]
    fn convexity() {
        assert!(is_convex(&squared_thirds()));
        assert!(is_convex(&two_atom(ratio(1, 4), ratio(3, 4))));
        let bad = two_atom(ratio(6, 10), ratio(6, 10));
        assert_eq!(convexity_violation(&bad), Some((AtomSet(0b01), AtomSet(0b10))));
    }

    #[test]
    fn core_of_squared_thirds() {
        let cap = squared_thirds();
        let core = core_polytope(&cap, true).unwrap();
        let vertices = core.vertices.as_ref().unwrap();
        // Marginal vectors of a strictly convex symmetric capacity: all permutations of (1/9, 3/9, 5/9).
        assert_eq!(vertices.len(), 6);
        assert!(vertices.contains(&vec![ratio(1, 9), ratio(1, 3), ratio(5, 9)]));
        let (min, _) = core_minimum(&cap, &[int(1), ratio(1, 2), int(0)]).unwrap().unwrap();
        assert_eq!(min, ratio(5, 18));
    }

    #[test]
    fn core_of_additive_is_a_point() {
        let p = [ratio(3, 10), ratio(7, 10)];
        let cap = Capacity::additive(labels(2), &p).unwrap();
        let core = core_polytope(&cap, true).unwrap();
        assert_eq!(core.vertices.unwrap(), vec![p.to_vec()]);
    }

    #[test]
    fn nonconvex_core_minimum_exceeds_choquet() {
        let cap = two_atom(ratio(6, 10), ratio(6, 10));
        assert!(core_minimum(&cap, &[int(1), int(0)]).unwrap().is_none());
        let cap = two_atom(ratio(1, 10), ratio(1, 5));
        assert!(is_convex(&cap));
    }

    #[test]
    fn submeasure_of_superadditive_capacity() {
        let cap = two_atom(ratio(1, 10), ratio(1, 5));
        let w = submeasure_equivalent(&cap, DEFAULT_ATOM_CAP).unwrap();
        assert!(w.margin.is_positive());
        verify_submeasure(&cap, &w.submeasure).unwrap();
    }

    #[test]
    fn submeasure_keeps_ties() {
        let cap = two_atom(ratio(1, 3), ratio(1, 3));
        let w = submeasure_equivalent(&cap, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(w.submeasure.value(AtomSet(0b01)), w.submeasure.value(AtomSet(0b10)));
    }

    #[test]
    fn submeasure_fails_when_null_atoms_fill_the_space() {
        let cap = two_atom(int(0), int(0));
        assert!(matches!(
            submeasure_equivalent(&cap, DEFAULT_ATOM_CAP),
            Err(CapacityError::InternalContradiction(_))
        ));
    }

    #[test]
    fn partitions_are_counted_by_bell_numbers() {
        let counts: Vec<usize> = (1..=5).map(|n| set_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52]);
    }

    #[test]
    fn partition_axiom_degenerate_two_atoms() {
        let report = partition_axiom_check(&two_atom(int(0), int(0)), DEFAULT_ATOM_CAP).unwrap();
        assert!(report.holds);
        assert!(!report.holds_non_vacuously);
        let omega = report.witnesses.iter().find(|w| w.set == AtomSet(0b11)).unwrap();
        assert_eq!(omega.threshold, 3);
        assert!(omega.vacuous);

        let single = Capacity::new(labels(1), vec![int(0), int(1)]).unwrap();
        let report = partition_axiom_check(&single, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(report.witnesses[0].threshold, 2);
        assert!(report.witnesses[0].vacuous);
    }

    #[test]
    fn null_equivalence() {
        let p = null_equivalent_probability(&squared_thirds()).unwrap();
        assert_eq!(p, vec![ratio(1, 3); 3]);
        assert!(null_equivalent_probability(&two_atom(int(0), int(0))).is_none());
        let additive = Capacity::additive(labels(3), &[int(0), ratio(1, 4), ratio(3, 4)]).unwrap();
        assert_eq!(
            null_equivalent_probability(&additive).unwrap(),
            vec![int(0), ratio(1, 2), ratio(1, 2)]
        );
    }

    #[test]
    fn json_round_trip() {
        let cap = squared_thirds();
        let text = capacity_to_json(&cap).to_string();
        assert_eq!(parse_capacity(&text).unwrap(), cap);
        let by_mask = r#"{"atoms":["a","b"],"values":{"0":"0","1":"1/4","2":"1/2","3":"1"}}"#;
        assert_eq!(parse_capacity(by_mask).unwrap().value(AtomSet(1)), &ratio(1, 4));
        let missing = r#"{"atoms":["a","b"],"values":{"0":"0","1":"1/4","3":"1"}}"#;
        assert!(matches!(parse_capacity(missing), Err(CapacityError::Parse(_))));
        let decimal = r#"{"atoms":["a"],"values":{"{}":"0","{a}":"1.0"}}"#;
        assert!(parse_capacity(decimal).is_err());
    }
}
