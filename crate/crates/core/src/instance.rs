//! Finite decision instances: states, outcomes with utilities `u`, acts with
//! values `V`, and the two constant reference acts `x̄` (low) and `ȳ` (high).
//!
//! Everything that is derived directly from an instance lives here too:
//! structural validation, the event algebra of `ȳ/x̄` splices, the joint
//! normalization of `u` and `V`, the subjective capacity, and truncations.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::capacity::{AtomSet, Capacity, CapacityError};
use crate::rational::{format_rational, Rational};

pub const MAX_STATES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActId(pub usize);

/// A set of states as a bitmask over state indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct StateSet(pub u64);

impl StateSet {
    pub fn full(n: usize) -> Self {
        if n == 64 {
            StateSet(u64::MAX)
        } else {
            StateSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, s: StateId) -> bool {
        self.0 >> s.0 & 1 == 1
    }

    pub fn insert(&mut self, s: StateId) {
        self.0 |= 1 << s.0;
    }

    pub fn complement(self, n: usize) -> Self {
        StateSet(!self.0 & Self::full(n).0)
    }

    pub fn is_subset(self, other: StateSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn states(self) -> impl Iterator<Item = StateId> {
        (0..64).filter(move |i| self.0 >> i & 1 == 1).map(StateId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub id: String,
    pub utility: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Act {
    pub id: String,
    /// Outcome for each state, in state order.
    pub map: Vec<OutcomeId>,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("instance must have at least one state")]
    NoStates,
    #[error("at most {MAX_STATES} states are supported, got {0}")]
    TooManyStates(usize),
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("act {act:?} maps state {state:?} to unknown outcome {outcome:?}")]
    UnknownOutcome { act: String, state: String, outcome: String },
    #[error("act {act:?} has no outcome for state {state:?}")]
    MissingState { act: String, state: String },
    #[error("act {act:?} maps unknown state {state:?}")]
    UnknownState { act: String, state: String },
    #[error("acts {first:?} and {second:?} have the same state-to-outcome map")]
    DuplicateAct { first: String, second: String },
    #[error("reference act {0:?} is not listed")]
    UnknownReference(String),
    #[error("reference act {0:?} is not constant")]
    NonConstantReference(String),
    #[error("ref_low and ref_high must be different acts")]
    IdenticalReferences,
    #[error("structure violated: {0}")]
    Structure(String),
    #[error("normalization needs u(ȳ) > u(x̄) and V(ȳ) > V(x̄)")]
    DegenerateReferences,
    #[error(
        "boundary mismatch: u(x̄)·(V(ȳ)−V(x̄)) = {lhs} differs from V(x̄)·(u(ȳ)−u(x̄)) = {rhs}; \
         u cannot be an affine image of V at the reference acts, so full coherence is impossible"
    )]
    BoundaryMismatch { lhs: String, rhs: String, boundary: Box<Boundary> },
    #[error("spliced act {description} is not among the listed acts")]
    MissingAct { description: String },
    #[error(transparent)]
    Capacity(#[from] CapacityError),
}

/// Utilities and values of the two reference acts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundary {
    pub u_low: Rational,
    pub u_high: Rational,
    pub v_low: Rational,
    pub v_high: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionInstance {
    states: Vec<String>,
    outcomes: Vec<Outcome>,
    acts: Vec<Act>,
    ref_low: ActId,
    ref_high: ActId,
    by_map: HashMap<Vec<OutcomeId>, ActId>,
}

/// Act description by string ids, in state order.
#[derive(Debug, Clone)]
pub struct ActSpec {
    pub id: String,
    pub outcomes: Vec<String>,
    pub value: Rational,
}

impl DecisionInstance {
    /// Builds an instance from string ids. Acts list their outcome per state in state order.
    pub fn new(
        states: Vec<String>,
        outcomes: Vec<Outcome>,
        acts: Vec<ActSpec>,
        ref_low: &str,
        ref_high: &str,
    ) -> Result<Self, InstanceError> {
        if states.is_empty() {
            return Err(InstanceError::NoStates);
        }
        if states.len() > MAX_STATES {
            return Err(InstanceError::TooManyStates(states.len()));
        }
        check_unique("state", states.iter())?;
        check_unique("outcome", outcomes.iter().map(|o| &o.id))?;
        check_unique("act", acts.iter().map(|a| &a.id))?;
        let outcome_index: HashMap<&str, OutcomeId> = outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| (o.id.as_str(), OutcomeId(i)))
            .collect();

        let mut built: Vec<Act> = Vec::with_capacity(acts.len());
        let mut by_map: HashMap<Vec<OutcomeId>, ActId> = HashMap::new();
        for (idx, spec) in acts.into_iter().enumerate() {
            if spec.outcomes.len() != states.len() {
                let state = states.get(spec.outcomes.len()).cloned().unwrap_or_default();
                return Err(InstanceError::MissingState { act: spec.id, state });
            }
            let map = spec
                .outcomes
                .iter()
                .zip(&states)
                .map(|(o, s)| {
                    outcome_index.get(o.as_str()).copied().ok_or_else(|| InstanceError::UnknownOutcome {
                        act: spec.id.clone(),
                        state: s.clone(),
                        outcome: o.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(prev) = by_map.get(&map) {
                return Err(InstanceError::DuplicateAct {
                    first: built[prev.0].id.clone(),
                    second: spec.id,
                });
            }
            by_map.insert(map.clone(), ActId(idx));
            built.push(Act {
                id: spec.id,
                map,
                value: spec.value,
            });
        }

        let lookup = |name: &str| {
            built
                .iter()
                .position(|a| a.id == name)
                .map(ActId)
                .ok_or_else(|| InstanceError::UnknownReference(name.to_string()))
        };
        let low = lookup(ref_low)?;
        let high = lookup(ref_high)?;
        if low == high {
            return Err(InstanceError::IdenticalReferences);
        }
        for r in [low, high] {
            let map = &built[r.0].map;
            if map.iter().any(|o| *o != map[0]) {
                return Err(InstanceError::NonConstantReference(built[r.0].id.clone()));
            }
        }
        Ok(Self {
            states,
            outcomes,
            acts: built,
            ref_low: low,
            ref_high: high,
            by_map,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn acts(&self) -> &[Act] {
        &self.acts
    }

    pub fn act_ids(&self) -> impl Iterator<Item = ActId> {
        (0..self.acts.len()).map(ActId)
    }

    pub fn act(&self, id: ActId) -> &Act {
        &self.acts[id.0]
    }

    pub fn act_by_name(&self, name: &str) -> Option<ActId> {
        self.acts.iter().position(|a| a.id == name).map(ActId)
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(StateId)
    }

    pub fn ref_low(&self) -> ActId {
        self.ref_low
    }

    pub fn ref_high(&self) -> ActId {
        self.ref_high
    }

    pub fn value(&self, id: ActId) -> &Rational {
        &self.acts[id.0].value
    }

    pub fn outcome_utility(&self, o: OutcomeId) -> &Rational {
        &self.outcomes[o.0].utility
    }

    /// `u(f(ω))`.
    pub fn utility(&self, act: ActId, state: StateId) -> &Rational {
        self.outcome_utility(self.acts[act.0].map[state.0])
    }

    pub fn profile(&self, act: ActId) -> UtilityProfile {
        UtilityProfile {
            act,
            values: self.acts[act.0]
                .map
                .iter()
                .map(|o| self.outcome_utility(*o).clone())
                .collect(),
        }
    }

    pub fn find_act(&self, map: &[OutcomeId]) -> Option<ActId> {
        self.by_map.get(map).copied()
    }

    pub fn is_constant(&self, act: ActId) -> bool {
        let map = &self.acts[act.0].map;
        map.iter().all(|o| *o == map[0])
    }

    pub fn boundary(&self) -> Boundary {
        Boundary {
            u_low: self.utility(self.ref_low, StateId(0)).clone(),
            u_high: self.utility(self.ref_high, StateId(0)).clone(),
            v_low: self.value(self.ref_low).clone(),
            v_high: self.value(self.ref_high).clone(),
        }
    }

    /// `first` on `set`, `rest` elsewhere.
    pub fn splice(&self, first: ActId, set: StateSet, rest: ActId) -> Vec<OutcomeId> {
        let a = &self.acts[first.0].map;
        let b = &self.acts[rest.0].map;
        (0..self.states.len())
            .map(|s| if set.contains(StateId(s)) { a[s] } else { b[s] })
            .collect()
    }

    /// Readable form of a state→outcome map, e.g. `(x1, x0)`.
    pub fn describe_map(&self, map: &[OutcomeId]) -> String {
        let parts: Vec<&str> = map.iter().map(|o| self.outcomes[o.0].id.as_str()).collect();
        format!("({})", parts.join(", "))
    }

    pub fn describe_set(&self, set: StateSet) -> String {
        let parts: Vec<&str> = set.states().map(|s| self.states[s.0].as_str()).collect();
        format!("{{{}}}", parts.join(","))
    }

    /// The set `{ω : u(f(ω)) > t}`.
    pub fn upper_set(&self, act: ActId, t: &Rational) -> StateSet {
        let mut set = StateSet::default();
        for s in 0..self.states.len() {
            if self.utility(act, StateId(s)) > t {
                set.insert(StateId(s));
            }
        }
        set
    }

    /// The generating family `R_u`: every `{u(f) > t}` and its complement,
    /// with `t` ranging over the levels each act attains.
    pub fn generating_sets(&self) -> Vec<StateSet> {
        let n = self.states.len();
        let mut family = BTreeSet::new();
        for f in self.act_ids() {
            let levels: BTreeSet<&Rational> = (0..n).map(|s| self.utility(f, StateId(s))).collect();
            for t in levels {
                let set = self.upper_set(f, t);
                family.insert(set);
                family.insert(set.complement(n));
            }
        }
        family.into_iter().collect()
    }

    /// Returns a copy with some acts removed (by predicate on the act).
    pub fn retain_acts(&self, mut keep: impl FnMut(ActId, &Act) -> bool) -> Result<Self, InstanceError> {
        let specs = self
            .act_ids()
            .filter(|id| keep(*id, self.act(*id)))
            .map(|id| self.act_spec(id))
            .collect();
        Self::new(
            self.states.clone(),
            self.outcomes.clone(),
            specs,
            &self.acts[self.ref_low.0].id,
            &self.acts[self.ref_high.0].id,
        )
    }

    /// Returns a copy with the value of one act replaced.
    pub fn with_value(&self, act: ActId, value: Rational) -> Self {
        let mut copy = self.clone();
        copy.acts[act.0].value = value;
        copy
    }

    /// Returns a copy with every act value replaced by `values[act]`.
    pub fn with_values(&self, values: &[Rational]) -> Self {
        let mut copy = self.clone();
        for (a, v) in copy.acts.iter_mut().zip(values) {
            a.value = v.clone();
        }
        copy
    }

    pub fn act_spec(&self, id: ActId) -> ActSpec {
        let a = &self.acts[id.0];
        ActSpec {
            id: a.id.clone(),
            outcomes: a.map.iter().map(|o| self.outcomes[o.0].id.clone()).collect(),
            value: a.value.clone(),
        }
    }

    /// Returns a copy with extra acts appended.
    pub fn with_extra_acts(&self, extra: Vec<ActSpec>) -> Result<Self, InstanceError> {
        let mut specs: Vec<ActSpec> = self.act_ids().map(|id| self.act_spec(id)).collect();
        specs.extend(extra);
        Self::new(
            self.states.clone(),
            self.outcomes.clone(),
            specs,
            &self.acts[self.ref_low.0].id,
            &self.acts[self.ref_high.0].id,
        )
    }
}

fn check_unique<'a>(kind: &'static str, ids: impl Iterator<Item = &'a String>) -> Result<(), InstanceError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(InstanceError::DuplicateId { kind, id: id.clone() });
        }
    }
    Ok(())
}

/// The vector `u(f(ω))` over states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtilityProfile {
    pub act: ActId,
    pub values: Vec<Rational>,
}

/// `I_V(f) = {h : V(h) ≤ V(f)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderInterval {
    pub anchor: ActId,
    pub members: BTreeSet<ActId>,
}

pub fn order_interval(instance: &DecisionInstance, anchor: ActId) -> OrderInterval {
    let bound = instance.value(anchor);
    OrderInterval {
        anchor,
        members: instance.act_ids().filter(|h| instance.value(*h) <= bound).collect(),
    }
}

/// `I_u(y) = {x : u(x) ≤ u(y)}` over outcomes.
pub fn outcome_interval(instance: &DecisionInstance, anchor: OutcomeId) -> BTreeSet<OutcomeId> {
    let bound = instance.outcome_utility(anchor);
    (0..instance.outcomes().len())
        .map(OutcomeId)
        .filter(|o| instance.outcome_utility(*o) <= bound)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Reference {
    Low,
    High,
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reference::Low => "ref_low",
            Reference::High => "ref_high",
        })
    }
}

/// A mixture `ȳAf` or `x̄Af` required by the structure clauses but absent from the acts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMixture {
    pub set: StateSet,
    pub act: ActId,
    pub reference: Reference,
}

/// A present pair with `V(ȳAf) < V(x̄Af)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixtureViolation {
    pub set: StateSet,
    pub act: ActId,
    pub high_mixture: ActId,
    pub low_mixture: ActId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// `V(ȳ) > V(x̄)`.
    pub references_ordered: bool,
    pub missing: Vec<MissingMixture>,
    pub violations: Vec<MixtureViolation>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.references_ordered && self.missing.is_empty() && self.violations.is_empty()
    }
}

pub fn validate_structure(instance: &DecisionInstance) -> ValidationReport {
    let low = instance.ref_low();
    let high = instance.ref_high();
    let mut missing = Vec::new();
    let mut violations = Vec::new();
    for set in instance.generating_sets() {
        for f in instance.act_ids() {
            let hi = instance.find_act(&instance.splice(high, set, f));
            let lo = instance.find_act(&instance.splice(low, set, f));
            if hi.is_none() {
                missing.push(MissingMixture { set, act: f, reference: Reference::High });
            }
            if lo.is_none() {
                missing.push(MissingMixture { set, act: f, reference: Reference::Low });
            }
            if let (Some(h), Some(l)) = (hi, lo) {
                if instance.value(h) < instance.value(l) {
                    violations.push(MixtureViolation {
                        set,
                        act: f,
                        high_mixture: h,
                        low_mixture: l,
                    });
                }
            }
        }
    }
    ValidationReport {
        references_ordered: instance.value(high) > instance.value(low),
        missing,
        violations,
    }
}

/// Partition of the states into atoms; its members are all unions of atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventAlgebra {
    state_count: usize,
    atoms: Vec<StateSet>,
    labels: Vec<String>,
}

impl EventAlgebra {
    /// Atoms must be nonempty, disjoint and cover `0..state_count`.
    pub fn from_atoms(state_count: usize, atoms: Vec<StateSet>, labels: Vec<String>) -> Result<Self, String> {
        if atoms.len() != labels.len() {
            return Err("one label per atom required".into());
        }
        let mut seen = StateSet::default();
        for a in &atoms {
            if a.0 == 0 {
                return Err("empty atom".into());
            }
            if a.0 & seen.0 != 0 {
                return Err("atoms overlap".into());
            }
            seen.0 |= a.0;
        }
        if seen != StateSet::full(state_count) {
            return Err("atoms do not cover every state".into());
        }
        Ok(Self { state_count, atoms, labels })
    }

    /// One atom per label, each a single state.
    pub fn discrete(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self {
            state_count: n,
            atoms: (0..n).map(|i| StateSet(1 << i)).collect(),
            labels,
        }
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[StateSet] {
        &self.atoms
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn atom_of(&self, s: StateId) -> usize {
        self.atoms.iter().position(|a| a.contains(s)).expect("atoms cover every state")
    }

    pub fn to_states(&self, set: AtomSet) -> StateSet {
        StateSet(
            self.atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| set.contains(*i))
                .fold(0, |acc, (_, a)| acc | a.0),
        )
    }

    /// The atom set whose union is `states`, if `states` is measurable.
    pub fn to_atoms(&self, states: StateSet) -> Option<AtomSet> {
        let mut out = AtomSet::EMPTY;
        let mut covered = 0u64;
        for (i, a) in self.atoms.iter().enumerate() {
            if a.0 & states.0 != 0 {
                out = out.with(i);
                covered |= a.0;
            }
        }
        (covered == states.0).then_some(out)
    }

    pub fn full(&self) -> AtomSet {
        AtomSet::full(self.atoms.len())
    }

    /// Every member of the algebra, as atom sets `0..2^atoms`.
    pub fn members(&self) -> impl Iterator<Item = AtomSet> {
        AtomSet::all(self.atoms.len())
    }

    pub fn describe(&self, set: AtomSet) -> String {
        let parts: Vec<&str> = set.iter().map(|i| self.labels[i].as_str()).collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// The family `{A : ȳAx̄ ∈ acts}`.
pub fn splice_family(instance: &DecisionInstance) -> BTreeSet<StateSet> {
    let low = instance.ref_low();
    let high = instance.ref_high();
    let hi_o = instance.act(high).map[0];
    let lo_o = instance.act(low).map[0];
    let mut family = BTreeSet::new();
    for f in instance.act_ids() {
        let map = &instance.act(f).map;
        if map.iter().all(|o| *o == hi_o || *o == lo_o) {
            let mut set = StateSet::default();
            for (s, o) in map.iter().enumerate() {
                if *o == hi_o {
                    set.insert(StateId(s));
                }
            }
            family.insert(set);
        }
    }
    family
}

/// Atoms of the algebra generated by the splice family, after checking that
/// every generating set `{u(f) > t}` is itself a splice set.
pub fn derive_event_algebra(instance: &DecisionInstance) -> Result<EventAlgebra, InstanceError> {
    let n = instance.state_count();
    let family = splice_family(instance);
    for set in instance.generating_sets() {
        if !family.contains(&set) {
            return Err(InstanceError::Structure(format!(
                "generating set {} has no splice ȳAx̄ among the acts",
                instance.describe_set(set)
            )));
        }
    }
    // States with identical membership across the family share an atom.
    let mut atoms: Vec<StateSet> = Vec::new();
    let mut signatures: Vec<Vec<bool>> = Vec::new();
    for s in 0..n {
        let sig: Vec<bool> = family.iter().map(|a| a.contains(StateId(s))).collect();
        match signatures.iter().position(|x| *x == sig) {
            Some(i) => atoms[i].insert(StateId(s)),
            None => {
                signatures.push(sig);
                let mut a = StateSet::default();
                a.insert(StateId(s));
                atoms.push(a);
            }
        }
    }
    let labels = atoms
        .iter()
        .map(|a| a.states().map(|s| instance.states()[s.0].as_str()).collect::<Vec<_>>().join("+"))
        .collect();
    Ok(EventAlgebra::from_atoms(n, atoms, labels).expect("membership classes partition the states"))
}

/// Affine maps `u ↦ shift + scale·u` and `V ↦ shift + rate·scale·V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineTransform {
    pub shift: Rational,
    pub scale: Rational,
    pub rate: Rational,
}

#[derive(Debug, Clone)]
pub struct Normalization {
    pub instance: DecisionInstance,
    pub transform: AffineTransform,
}

/// Rescales `u` and `V` jointly so that both vanish at `x̄` and equal one at `ȳ`.
pub fn normalize(instance: &DecisionInstance) -> Result<Normalization, InstanceError> {
    let b = instance.boundary();
    let du = &b.u_high - &b.u_low;
    let dv = &b.v_high - &b.v_low;
    if !du.is_positive() || !dv.is_positive() {
        return Err(InstanceError::DegenerateReferences);
    }
    let lhs = &b.u_low * &dv;
    let rhs = &b.v_low * &du;
    if lhs != rhs {
        return Err(InstanceError::BoundaryMismatch {
            lhs: format_rational(&lhs),
            rhs: format_rational(&rhs),
            boundary: Box::new(b),
        });
    }
    let scale = Rational::one() / &du;
    let shift = -(&b.u_low * &scale);
    let rate = &du / &dv;
    let mut out = instance.clone();
    for o in &mut out.outcomes {
        o.utility = &shift + &scale * &o.utility;
    }
    let v_scale = &rate * &scale;
    for a in &mut out.acts {
        a.value = &shift + &v_scale * &a.value;
    }
    Ok(Normalization {
        instance: out,
        transform: AffineTransform { shift, scale, rate },
    })
}

pub fn is_normalized(instance: &DecisionInstance) -> bool {
    let b = instance.boundary();
    b.u_low.is_zero() && b.v_low.is_zero() && b.u_high.is_one() && b.v_high.is_one()
}

/// `γ_V(A) = (V(ȳAx̄) − V(x̄)) / (V(ȳ) − V(x̄))` on every member of the algebra.
/// Monotone whenever the structure clauses hold; not checked here.
pub fn subjective_capacity(instance: &DecisionInstance, algebra: &EventAlgebra) -> Result<Capacity, InstanceError> {
    let low = instance.ref_low();
    let high = instance.ref_high();
    let v_low = instance.value(low);
    let spread = instance.value(high) - v_low;
    if !spread.is_positive() {
        return Err(InstanceError::DegenerateReferences);
    }
    let mut values = Vec::with_capacity(1 << algebra.atom_count());
    for set in algebra.members() {
        let states = algebra.to_states(set);
        let map = instance.splice(high, states, low);
        let act = instance.find_act(&map).ok_or_else(|| {
            InstanceError::Structure(format!(
                "splice ȳAx̄ for A = {} is missing: {}",
                instance.describe_set(states),
                instance.describe_map(&map)
            ))
        })?;
        values.push((instance.value(act) - v_low) / &spread);
    }
    Ok(Capacity::normalized(algebra.clone(), values)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationMode {
    /// `f` on `{u(f) ≤ k}`, `x̄` elsewhere.
    Upper,
    /// `f` on `{u(f) > −k}`, `x̄` elsewhere.
    Lower,
    /// `f` on `{−k < u(f) ≤ k}`, `x̄` elsewhere.
    TwoSided,
}

impl TruncationMode {
    pub fn name(self) -> &'static str {
        match self {
            TruncationMode::Upper => "upper",
            TruncationMode::Lower => "lower",
            TruncationMode::TwoSided => "two_sided",
        }
    }
}

/// The set on which a truncation keeps `f`.
pub fn truncation_set(instance: &DecisionInstance, f: ActId, k: &Rational, mode: TruncationMode) -> StateSet {
    let neg_k = -k.clone();
    let mut set = StateSet::default();
    for s in 0..instance.state_count() {
        let u = instance.utility(f, StateId(s));
        let keep = match mode {
            TruncationMode::Upper => u <= k,
            TruncationMode::Lower => *u > neg_k,
            TruncationMode::TwoSided => *u > neg_k && u <= k,
        };
        if keep {
            set.insert(StateId(s));
        }
    }
    set
}

pub fn truncation_map(instance: &DecisionInstance, f: ActId, k: &Rational, mode: TruncationMode) -> Vec<OutcomeId> {
    instance.splice(f, truncation_set(instance, f, k, mode), instance.ref_low())
}

pub fn truncate(
    instance: &DecisionInstance,
    f: ActId,
    k: &Rational,
    mode: TruncationMode,
) -> Result<ActId, InstanceError> {
    assert!(!k.is_negative(), "truncation level must be nonnegative");
    let map = truncation_map(instance, f, k, mode);
    instance.find_act(&map).ok_or_else(|| InstanceError::MissingAct {
        description: format!(
            "{} ({} truncation of {} at {})",
            instance.describe_map(&map),
            mode.name(),
            instance.act(f).id,
            format_rational(k)
        ),
    })
}

/// Finite surrogate of the continuity axiom: on every `γ_V`-null set `A`,
/// each present splice `f A^c x̄` keeps the value of `f`.
pub fn check_continuity_surrogate(instance: &DecisionInstance, capacity: &Capacity) -> bool {
    let algebra = capacity.algebra();
    let n = instance.state_count();
    for set in algebra.members() {
        if !capacity.value(set).is_zero() || set.is_empty() {
            continue;
        }
        let keep = algebra.to_states(set).complement(n);
        for f in instance.act_ids() {
            let map = instance.splice(f, keep, instance.ref_low());
            if let Some(g) = instance.find_act(&map) {
                if instance.value(g) != instance.value(f) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    #[test]
    fn e1_passes_structure() {
        let report = validate_structure(&fixtures::e1());
        assert!(report.passes(), "{report:?}");
    }

    #[test]
    fn deleting_a_splice_reports_missing_mixtures() {
        let e1 = fixtures::e1();
        let f = e1.act_by_name("f").unwrap();
        let cut = e1.retain_acts(|id, _| id != f).unwrap();
        let report = validate_structure(&cut);
        assert!(!report.passes());
        assert!(report.references_ordered);
        let ybar = cut.act_by_name("ybar").unwrap();
        let xbar = cut.act_by_name("xbar").unwrap();
        let w1 = StateSet(0b01);
        let w2 = StateSet(0b10);
        // ȳ{ω1}x̄ = (x1, x0) and x̄{ω2}ȳ = (x1, x0) are exactly the deleted map.
        let expected = [
            MissingMixture { set: w1, act: xbar, reference: Reference::High },
            MissingMixture { set: w2, act: ybar, reference: Reference::Low },
        ];
        for m in &expected {
            assert!(report.missing.contains(m), "{m:?} not in {:?}", report.missing);
        }
        assert_eq!(report.missing.len(), expected.len());
    }

    #[test]
    fn equal_reference_values_fail_clause_a() {
        let e1 = fixtures::e1();
        let y = e1.act_by_name("ybar").unwrap();
        let flat = e1.with_value(y, int(0));
        let report = validate_structure(&flat);
        assert!(!report.references_ordered);
        assert!(!report.passes());
    }

    #[test]
    fn algebra_of_fixtures() {
        let e1 = derive_event_algebra(&fixtures::e1()).unwrap();
        assert_eq!(e1.atoms(), &[StateSet(0b01), StateSet(0b10)]);
        let e4 = derive_event_algebra(&fixtures::e4()).unwrap();
        assert_eq!(e4.atoms(), &[StateSet(0b001), StateSet(0b010), StateSet(0b100)]);
    }

    #[test]
    fn constants_only_give_single_atom() {
        let e1 = fixtures::e1();
        let consts = e1.retain_acts(|id, _| e1.is_constant(id)).unwrap();
        let alg = derive_event_algebra(&consts).unwrap();
        assert_eq!(alg.atoms(), &[StateSet(0b11)]);
    }

    #[test]
    fn missing_generating_splice_is_a_structure_error() {
        // Drop ȳ{ω1}x̄ but keep x̄{ω1}ȳ: {u(g) > 0} = {ω2} is fine, {ω1} is not a splice set.
        let e1 = fixtures::e1();
        let f = e1.act_by_name("f").unwrap();
        let cut = e1.retain_acts(|id, _| id != f).unwrap();
        assert!(matches!(derive_event_algebra(&cut), Err(InstanceError::Structure(_))));
    }

    #[test]
    fn normalize_worked_example() {
        // u(x̄)=4, u(ȳ)=10, V(x̄)=2, V(ȳ)=5: B = 1/6, t = 2.
        let inst = fixtures::boundary_instance(int(4), int(10), int(2), int(5));
        let n = normalize(&inst).unwrap();
        assert_eq!(n.transform.scale, ratio(1, 6));
        assert_eq!(n.transform.rate, int(2));
        assert_eq!(n.transform.shift, ratio(-2, 3));
        let b = n.instance.boundary();
        assert_eq!((b.u_low, b.u_high, b.v_low, b.v_high), (int(0), int(1), int(0), int(1)));
    }

    #[test]
    fn normalize_fixed_point_and_mismatch() {
        let n = normalize(&fixtures::e1()).unwrap();
        assert_eq!(
            n.transform,
            AffineTransform { shift: int(0), scale: int(1), rate: int(1) }
        );
        assert_eq!(n.instance, fixtures::e1());
        let bad = fixtures::boundary_instance(int(0), int(1), ratio(1, 2), int(1));
        match normalize(&bad) {
            Err(InstanceError::BoundaryMismatch { lhs, rhs, .. }) => {
                assert_eq!(lhs, "0");
                assert_eq!(rhs, "1/2");
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn capacity_of_fixtures() {
        let e1 = fixtures::e1();
        let alg = derive_event_algebra(&e1).unwrap();
        let cap = subjective_capacity(&e1, &alg).unwrap();
        assert_eq!(cap.value(AtomSet(0b01)), &ratio(3, 10));
        assert_eq!(cap.value(AtomSet(0b10)), &ratio(7, 10));
        assert_eq!(cap.value(AtomSet(0b11)), &int(1));
        assert_eq!(cap.value(AtomSet(0)), &int(0));

        let e4 = fixtures::e4();
        let cap = subjective_capacity(&e4, &derive_event_algebra(&e4).unwrap()).unwrap();
        for set in cap.algebra().members() {
            let expected = match set.len() {
                0 => int(0),
                1 => ratio(1, 9),
                2 => ratio(4, 9),
                _ => int(1),
            };
            assert_eq!(cap.value(set), &expected);
        }
    }

    #[test]
    fn truncations() {
        let e4 = fixtures::e4();
        let h1 = e4.act_by_name("h1").unwrap();
        // k above every |u| keeps f.
        assert_eq!(truncate(&e4, h1, &int(1), TruncationMode::TwoSided).unwrap(), h1);
        // (1, 1/2, 0) cut at 1/2 from above is (0, 1/2, 0), present in the closed fixture.
        let cut = truncate(&e4, h1, &ratio(1, 2), TruncationMode::Upper).unwrap();
        assert_eq!(e4.profile(cut).values, vec![int(0), ratio(1, 2), int(0)]);
        let bare = fixtures::e4_unclosed();
        let h1 = bare.act_by_name("h1").unwrap();
        assert!(matches!(
            truncate(&bare, h1, &ratio(1, 2), TruncationMode::Upper),
            Err(InstanceError::MissingAct { .. })
        ));
        // k = 0, upper: states with positive utility go to x̄.
        let e1 = fixtures::e1();
        let f = e1.act_by_name("f").unwrap();
        assert_eq!(truncate(&e1, f, &int(0), TruncationMode::Upper).unwrap(), e1.ref_low());
    }

    #[test]
    fn continuity_surrogate() {
        let e1 = fixtures::e1();
        let cap = subjective_capacity(&e1, &derive_event_algebra(&e1).unwrap()).unwrap();
        assert!(check_continuity_surrogate(&e1, &cap));

        // γ({ω2}) = V(g) = 0, yet ȳ{ω1}x̄ = f is worth 9/10 against V(ȳ) = 1.
        let null = e1
            .with_value(e1.act_by_name("g").unwrap(), int(0))
            .with_value(e1.act_by_name("f").unwrap(), ratio(9, 10));
        let cap = subjective_capacity(&null, &derive_event_algebra(&null).unwrap()).unwrap();
        assert!(!check_continuity_surrogate(&null, &cap));
    }

    #[test]
    fn order_intervals() {
        let e1 = fixtures::e1();
        let f = e1.act_by_name("f").unwrap();
        let iv = order_interval(&e1, f);
        assert!(iv.members.contains(&f));
        assert_eq!(iv.members.len(), 2);
        let top = outcome_interval(&e1, OutcomeId(1));
        assert_eq!(top.len(), 2);
    }
}
