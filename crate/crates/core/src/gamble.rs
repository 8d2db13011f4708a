//! Gambles: finitely supported, nonnegative weightings of acts
//! with total mass at most one, and signed positions over acts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::Value;

use crate::instance::{ActId, DecisionInstance, StateId};
use crate::rational::{format_rational, parse_rational, Rational};

pub const DEFAULT_CLIQUE_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GambleError {
    #[error("weight on {act:?} must be positive, got {weight}")]
    NonPositiveWeight { act: String, weight: String },
    #[error("total mass {0} exceeds 1")]
    MassExceeded(String),
    #[error("zero weight on {0:?}")]
    ZeroWeight(String),
    #[error("unknown act {0:?}")]
    UnknownAct(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("more than {cap} maximal comonotone cliques")]
    CliqueExplosion { cap: usize },
    #[error("gamble literal: {0}")]
    Parse(String),
}

/// Read access to a sparse weight map over acts.
pub trait Weighted {
    fn weights(&self) -> &BTreeMap<ActId, Rational>;
}

/// An element of `Θ`: positive weights, total mass at most one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Gamble {
    weights: BTreeMap<ActId, Rational>,
}

impl Gamble {
    /// Drops zero entries; rejects negative weights and mass above one.
    pub fn new(weights: impl IntoIterator<Item = (ActId, Rational)>) -> Result<Self, GambleError> {
        let mut map: BTreeMap<ActId, Rational> = BTreeMap::new();
        for (a, w) in weights {
            if w.is_negative() {
                return Err(GambleError::NonPositiveWeight {
                    act: format!("#{}", a.0),
                    weight: format_rational(&w),
                });
            }
            *map.entry(a).or_insert_with(Rational::zero) += w;
        }
        map.retain(|_, w| !w.is_zero());
        let g = Self { weights: map };
        if g.total_mass() > Rational::one() {
            return Err(GambleError::MassExceeded(format_rational(&g.total_mass())));
        }
        Ok(g)
    }

    pub fn dirac(act: ActId) -> Self {
        Self {
            weights: BTreeMap::from([(act, Rational::one())]),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a gamble from act names, checking each against the instance.
    pub fn from_names(instance: &DecisionInstance, weights: &[(&str, Rational)]) -> Result<Self, GambleError> {
        let mut resolved = Vec::with_capacity(weights.len());
        for (name, w) in weights {
            let id = instance
                .act_by_name(name)
                .ok_or_else(|| GambleError::UnknownAct(name.to_string()))?;
            if !w.is_positive() {
                return Err(GambleError::NonPositiveWeight {
                    act: name.to_string(),
                    weight: format_rational(w),
                });
            }
            resolved.push((id, w.clone()));
        }
        Self::new(resolved)
    }

    pub fn total_mass(&self) -> Rational {
        self.weights.values().sum()
    }

    pub fn support(&self) -> BTreeSet<ActId> {
        self.weights.keys().copied().collect()
    }

    /// `t·θ`, which stays in `Θ` for `0 ≤ t ≤ 1/‖θ‖`.
    pub fn scaled(&self, t: &Rational) -> Result<Self, GambleError> {
        Self::new(self.weights.iter().map(|(a, w)| (*a, w * t)))
    }

    pub fn to_signed(&self) -> SignedPosition {
        SignedPosition {
            weights: self.weights.clone(),
        }
    }

    pub fn describe(&self, instance: &DecisionInstance) -> String {
        describe_weights(instance, &self.weights)
    }
}

impl Weighted for Gamble {
    fn weights(&self) -> &BTreeMap<ActId, Rational> {
        &self.weights
    }
}

/// A finitely supported signed weighting of acts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SignedPosition {
    weights: BTreeMap<ActId, Rational>,
}

impl SignedPosition {
    pub fn new(weights: impl IntoIterator<Item = (ActId, Rational)>) -> Self {
        let mut map: BTreeMap<ActId, Rational> = BTreeMap::new();
        for (a, w) in weights {
            *map.entry(a).or_insert_with(Rational::zero) += w;
        }
        map.retain(|_, w| !w.is_zero());
        Self { weights: map }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, act: ActId) -> Rational {
        self.weights.get(&act).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, other: &SignedPosition) -> SignedPosition {
        Self::new(self.weights.iter().chain(&other.weights).map(|(a, w)| (*a, w.clone())))
    }

    pub fn sub(&self, other: &SignedPosition) -> SignedPosition {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> SignedPosition {
        Self::new(self.weights.iter().map(|(a, w)| (*a, -w)))
    }

    pub fn scale(&self, t: &Rational) -> SignedPosition {
        Self::new(self.weights.iter().map(|(a, w)| (*a, w * t)))
    }

    /// `δ_b − δ_a`.
    pub fn difference(b: ActId, a: ActId) -> SignedPosition {
        Self::new([(b, Rational::one()), (a, -Rational::one())])
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn describe(&self, instance: &DecisionInstance) -> String {
        describe_weights(instance, &self.weights)
    }
}

impl Weighted for SignedPosition {
    fn weights(&self) -> &BTreeMap<ActId, Rational> {
        &self.weights
    }
}

fn describe_weights(instance: &DecisionInstance, weights: &BTreeMap<ActId, Rational>) -> String {
    if weights.is_empty() {
        return "0".into();
    }
    let parts: Vec<String> = weights
        .iter()
        .map(|(a, w)| format!("{}·δ[{}]", format_rational(w), instance.act(*a).id))
        .collect();
    parts.join(" + ")
}

impl fmt::Display for Gamble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .weights
            .iter()
            .map(|(a, w)| format!("{}·δ#{}", format_rational(w), a.0))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// `h ↦ Σ_f θ(f)·[V(h) ≤ V(f)]`, one entry per act.
pub fn payoff(instance: &DecisionInstance, theta: &impl Weighted) -> Vec<Rational> {
    instance
        .act_ids()
        .map(|h| {
            theta
                .weights()
                .iter()
                .filter(|(f, _)| instance.value(h) <= instance.value(**f))
                .map(|(_, w)| w.clone())
                .sum()
        })
        .collect()
}

/// `Σ_f θ(f)·V(f)`.
pub fn value(instance: &DecisionInstance, theta: &impl Weighted) -> Rational {
    theta.weights().iter().map(|(f, w)| w * instance.value(*f)).sum()
}

/// `u(θ|ω) = Σ_f θ(f)·u(f(ω))`.
pub fn conditional_value(instance: &DecisionInstance, theta: &impl Weighted, state: StateId) -> Rational {
    theta
        .weights()
        .iter()
        .map(|(f, w)| w * instance.utility(*f, state))
        .sum()
}

pub fn conditional_value_by_name(
    instance: &DecisionInstance,
    theta: &impl Weighted,
    state: &str,
) -> Result<Rational, GambleError> {
    let s = instance
        .state_by_name(state)
        .ok_or_else(|| GambleError::UnknownState(state.to_string()))?;
    Ok(conditional_value(instance, theta, s))
}

/// Conditional values at every state.
pub fn conditional_profile(instance: &DecisionInstance, theta: &impl Weighted) -> Vec<Rational> {
    (0..instance.state_count())
        .map(|s| conditional_value(instance, theta, StateId(s)))
        .collect()
}

/// `θ ≥_u η`: the conditional value of `θ` is at least that of `η` in every state.
pub fn dominates(instance: &DecisionInstance, theta: &impl Weighted, eta: &impl Weighted) -> bool {
    (0..instance.state_count())
        .all(|s| conditional_value(instance, theta, StateId(s)) >= conditional_value(instance, eta, StateId(s)))
}

/// Equal total weight on every `V`-indifference class.
pub fn equivalence_check(instance: &DecisionInstance, theta: &Gamble, other: &Gamble) -> bool {
    let mut totals: BTreeMap<&Rational, Rational> = BTreeMap::new();
    for (f, w) in &theta.weights {
        *totals.entry(instance.value(*f)).or_insert_with(Rational::zero) += w;
    }
    for (f, w) in &other.weights {
        *totals.entry(instance.value(*f)).or_insert_with(Rational::zero) -= w;
    }
    totals.values().all(Zero::is_zero)
}

/// The classes of dominating gambles a coherence grade quantifies over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GambleClass {
    All,
    /// Support inside `{f, ȳ}` for a single act `f`.
    Theta0,
    /// Pairwise comonotone support.
    Theta1,
    /// Support inside one of the listed act sets.
    Clique(Vec<BTreeSet<ActId>>),
}

impl GambleClass {
    pub fn name(&self) -> &'static str {
        match self {
            GambleClass::All => "ALL",
            GambleClass::Theta0 => "THETA0",
            GambleClass::Theta1 => "THETA1",
            GambleClass::Clique(_) => "CLIQUE",
        }
    }
}

/// `(u(f(ω)) − u(f(ω')))·(u(g(ω)) − u(g(ω'))) ≥ 0` for all state pairs.
pub fn comonotone(instance: &DecisionInstance, f: ActId, g: ActId) -> bool {
    let n = instance.state_count();
    for s in 0..n {
        for t in s + 1..n {
            let df = instance.utility(f, StateId(s)) - instance.utility(f, StateId(t));
            let dg = instance.utility(g, StateId(s)) - instance.utility(g, StateId(t));
            if (df * dg).is_negative() {
                return false;
            }
        }
    }
    true
}

pub fn class_membership(instance: &DecisionInstance, theta: &Gamble, class: &GambleClass) -> bool {
    let support = theta.support();
    match class {
        GambleClass::All => true,
        GambleClass::Theta0 => support.iter().filter(|a| **a != instance.ref_high()).count() <= 1,
        GambleClass::Theta1 => support
            .iter()
            .all(|f| support.iter().all(|g| f >= g || comonotone(instance, *f, *g))),
        GambleClass::Clique(sets) => sets.iter().any(|c| support.is_subset(c)),
    }
}

/// Maximal pairwise-comonotone act sets (Bron–Kerbosch with pivoting).
pub fn comonotone_cliques(instance: &DecisionInstance, cap: usize) -> Result<Vec<BTreeSet<ActId>>, GambleError> {
    let acts: Vec<ActId> = instance.act_ids().collect();
    let neighbours: Vec<BTreeSet<ActId>> = acts
        .iter()
        .map(|f| acts.iter().filter(|g| *g != f && comonotone(instance, *f, **g)).copied().collect())
        .collect();
    let mut out = Vec::new();
    bron_kerbosch(
        &neighbours,
        BTreeSet::new(),
        acts.iter().copied().collect(),
        BTreeSet::new(),
        cap,
        &mut out,
    )?;
    out.sort();
    Ok(out)
}

fn bron_kerbosch(
    nbr: &[BTreeSet<ActId>],
    r: BTreeSet<ActId>,
    mut p: BTreeSet<ActId>,
    mut x: BTreeSet<ActId>,
    cap: usize,
    out: &mut Vec<BTreeSet<ActId>>,
) -> Result<(), GambleError> {
    if p.is_empty() && x.is_empty() {
        if out.len() >= cap {
            return Err(GambleError::CliqueExplosion { cap });
        }
        out.push(r);
        return Ok(());
    }
    let pivot = p
        .union(&x)
        .max_by_key(|u| nbr[u.0].intersection(&p).count())
        .copied()
        .expect("p or x is nonempty");
    let candidates: Vec<ActId> = p.difference(&nbr[pivot.0]).copied().collect();
    for v in candidates {
        let mut r2 = r.clone();
        r2.insert(v);
        let p2 = p.intersection(&nbr[v.0]).copied().collect();
        let x2 = x.intersection(&nbr[v.0]).copied().collect();
        bron_kerbosch(nbr, r2, p2, x2, cap, out)?;
        p.remove(&v);
        x.insert(v);
    }
    Ok(())
}

/// Reads `{"weights": {actId: "p/q"}}`.
pub fn parse_gamble(instance: &DecisionInstance, text: &str) -> Result<Gamble, GambleError> {
    let err = |m: String| GambleError::Parse(m);
    let doc: Value = serde_json::from_str(text).map_err(|e| err(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let obj = doc.as_object().ok_or_else(|| err("top level must be an object".into()))?;
    if let Some(k) = obj.keys().find(|k| *k != "weights") {
        return Err(err(format!("unknown key {k:?}")));
    }
    let weights = obj
        .get("weights")
        .and_then(Value::as_object)
        .ok_or_else(|| err("\"weights\" must be an object".into()))?;
    let mut parsed = Vec::with_capacity(weights.len());
    for (name, v) in weights {
        let text = v.as_str().ok_or_else(|| err(format!("weights.{name}: expected a \"p/q\" string")))?;
        let w = parse_rational(text).map_err(|e| err(format!("weights.{name}: {e}")))?;
        if w.is_zero() {
            return Err(GambleError::ZeroWeight(name.clone()));
        }
        parsed.push((name.as_str(), w));
    }
    Gamble::from_names(instance, &parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    fn id(inst: &DecisionInstance, name: &str) -> ActId {
        inst.act_by_name(name).unwrap()
    }

    fn half_f_half_g(inst: &DecisionInstance) -> Gamble {
        Gamble::from_names(inst, &[("f", ratio(1, 2)), ("g", ratio(1, 2))]).unwrap()
    }

    #[test]
    fn construction_rules() {
        let e1 = fixtures::e1();
        assert!(matches!(
            Gamble::from_names(&e1, &[("f", ratio(3, 4)), ("g", ratio(1, 2))]),
            Err(GambleError::MassExceeded(_))
        ));
        assert!(matches!(
            Gamble::from_names(&e1, &[("f", ratio(-1, 4))]),
            Err(GambleError::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            Gamble::from_names(&e1, &[("nope", ratio(1, 4))]),
            Err(GambleError::UnknownAct(_))
        ));
        let g = Gamble::new([(ActId(1), int(0)), (ActId(2), ratio(1, 3))]).unwrap();
        assert_eq!(g.support().len(), 1);
    }

    #[test]
    fn payoff_and_value() {
        let e1 = fixtures::e1();
        let theta = half_f_half_g(&e1);
        // Acts in order xbar, f, g, ybar.
        assert_eq!(payoff(&e1, &theta), vec![int(1), int(1), ratio(1, 2), int(0)]);
        assert_eq!(value(&e1, &theta), ratio(1, 2));
        assert_eq!(value(&fixtures::e2(), &half_f_half_g(&fixtures::e2())), ratio(7, 20));
        assert_eq!(payoff(&e1, &Gamble::empty()), vec![int(0); 4]);
        let f = id(&e1, "f");
        assert_eq!(value(&e1, &Gamble::dirac(f)), ratio(3, 10));
        let dirac_payoff = payoff(&e1, &Gamble::dirac(f));
        assert_eq!(dirac_payoff, vec![int(1), int(1), int(0), int(0)]);
    }

    #[test]
    fn conditional_values_and_dominance() {
        let e1 = fixtures::e1();
        let theta = half_f_half_g(&e1);
        assert_eq!(conditional_value_by_name(&e1, &theta, "w1").unwrap(), ratio(1, 2));
        let half_y = Gamble::from_names(&e1, &[("ybar", ratio(1, 2))]).unwrap();
        assert_eq!(conditional_profile(&e1, &half_y), vec![ratio(1, 2); 2]);
        assert!(dominates(&e1, &theta, &half_y));
        assert!(dominates(&e1, &half_y, &theta));
        assert!(dominates(&e1, &theta, &theta));
        let x = Gamble::dirac(e1.ref_low());
        let y = Gamble::dirac(e1.ref_high());
        assert!(!dominates(&e1, &x, &y));
        assert!(matches!(
            conditional_value_by_name(&e1, &theta, "w9"),
            Err(GambleError::UnknownState(_))
        ));
    }

    #[test]
    fn equivalence_by_value_class() {
        let e1 = fixtures::e1();
        let theta = half_f_half_g(&e1);
        assert!(equivalence_check(&e1, &theta, &theta));
        assert!(!equivalence_check(&e1, &Gamble::dirac(id(&e1, "f")), &Gamble::dirac(id(&e1, "g"))));
        let e3 = fixtures::e3();
        let f = Gamble::dirac(id(&e3, "f"));
        let g = Gamble::dirac(id(&e3, "g"));
        assert!(equivalence_check(&e3, &f, &g));
        assert!(equivalence_check(&e3, &half_f_half_g(&e3), &f));
    }

    #[test]
    fn classes() {
        let e1 = fixtures::e1();
        let f = id(&e1, "f");
        assert!(class_membership(&e1, &Gamble::dirac(f), &GambleClass::Theta1));
        assert!(!class_membership(&e1, &half_f_half_g(&e1), &GambleClass::Theta1));
        assert!(!class_membership(&e1, &half_f_half_g(&e1), &GambleClass::Theta0));
        let e4 = fixtures::e4();
        let splice = Gamble::from_names(&e4, &[("ybar", ratio(1, 2)), ("s12", ratio(1, 2))]).unwrap();
        assert!(class_membership(&e4, &splice, &GambleClass::Theta0));
        assert!(class_membership(&e4, &splice, &GambleClass::Theta1));
        assert!(class_membership(&e1, &half_f_half_g(&e1), &GambleClass::All));
    }

    #[test]
    fn cliques_of_e1() {
        let e1 = fixtures::e1();
        let cliques = comonotone_cliques(&e1, DEFAULT_CLIQUE_CAP).unwrap();
        let names: Vec<BTreeSet<&str>> = cliques
            .iter()
            .map(|c| c.iter().map(|a| e1.act(*a).id.as_str()).collect())
            .collect();
        assert_eq!(names.len(), 2);
        assert!(names.contains(&BTreeSet::from(["xbar", "ybar", "f"])));
        assert!(names.contains(&BTreeSet::from(["xbar", "ybar", "g"])));
        assert!(matches!(
            comonotone_cliques(&e1, 1),
            Err(GambleError::CliqueExplosion { cap: 1 })
        ));
    }

    #[test]
    fn constants_form_one_clique() {
        let e1 = fixtures::e1();
        let consts = e1.retain_acts(|a, _| e1.is_constant(a)).unwrap();
        assert_eq!(comonotone_cliques(&consts, 10).unwrap().len(), 1);
    }

    #[test]
    fn cliques_of_e4_are_comonotone_and_cover_h1() {
        let e4 = fixtures::e4();
        let cliques = comonotone_cliques(&e4, DEFAULT_CLIQUE_CAP).unwrap();
        let h1 = id(&e4, "h1");
        for c in &cliques {
            for f in c {
                for g in c {
                    assert!(comonotone(&e4, *f, *g));
                }
            }
        }
        // (1, 1/2, 0) is co-ordered with the chain ∅ ⊂ {1} ⊂ {1,2} ⊂ Ω.
        let chain = ["xbar", "s1", "s12", "ybar", "h1"].map(|n| id(&e4, n));
        assert!(cliques.iter().any(|c| chain.iter().all(|a| c.contains(a))));
        assert!(cliques.iter().filter(|c| c.contains(&h1)).count() >= 1);
    }

    #[test]
    fn literal_parsing() {
        let e1 = fixtures::e1();
        let g = parse_gamble(&e1, r#"{"weights": {"f": "1/2", "g": "1/2"}}"#).unwrap();
        assert_eq!(g, half_f_half_g(&e1));
        assert!(parse_gamble(&e1, r#"{"weights": {"f": "0"}}"#).is_err());
        assert!(parse_gamble(&e1, r#"{"weights": {"f": "0.5"}}"#).is_err());
        assert!(parse_gamble(&e1, r#"{"weights": {"f": "1", "g": "1"}}"#).is_err());
        assert!(parse_gamble(&e1, r#"{"weights": {}, "x": 1}"#).is_err());
    }

    #[test]
    fn signed_positions() {
        let e1 = fixtures::e1();
        let (f, g, y) = (id(&e1, "f"), id(&e1, "g"), e1.ref_high());
        let z = SignedPosition::new([(f, int(1)), (g, int(1)), (y, int(-1))]);
        assert_eq!(conditional_profile(&e1, &z), vec![int(0), int(0)]);
        assert!(z.sub(&z).is_zero());
        assert_eq!(SignedPosition::difference(g, f).get(f), int(-1));
    }
}
