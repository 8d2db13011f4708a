//! Coherence grades and the representations that go with them.
//!
//! Every decision is a sign test on the optimum of
//! `max value(η) − value(θ)` over `θ ≥_u η`, with `θ` restricted to the
//! class under test and `η` ranging over all of `Θ`. A positive optimum
//! yields a violating pair read off the optimal vertex.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::capacity::{choquet_integral, convexity_violation, simplex_vertices, AtomSet, Capacity, CapacityError};
use crate::gamble::{
    class_membership, comonotone_cliques, conditional_profile, dominates, value, Gamble, GambleClass, GambleError,
};
use crate::instance::{derive_event_algebra, is_normalized, subjective_capacity, validate_structure, ActId, DecisionInstance, EventAlgebra, InstanceError, StateId};
use crate::lp::{self, FarkasCertificate, LinearProgram, LpError, LpOutcome, Relation, Sense, VarId};
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Grade {
    None,
    Simple,
    Theta0,
    Theta1,
    Full,
}

impl Grade {
    pub fn name(self) -> &'static str {
        match self {
            Grade::None => "NONE",
            Grade::Simple => "SIMPLE",
            Grade::Theta0 => "THETA0",
            Grade::Theta1 => "THETA1",
            Grade::Full => "FULL",
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoherenceError {
    #[error("instance is not normalized: need u(x̄) = V(x̄) = 0 and u(ȳ) = V(ȳ) = 1")]
    NotNormalized,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Gamble(#[from] GambleError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error("no representation: {0}")]
    NotRepresentable(String),
    #[error("internal contradiction: {0}")]
    InternalContradiction(String),
}

/// `θ ≥_u η` with `value(θ) < value(η)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationPair {
    pub theta: Gamble,
    pub eta: Gamble,
    /// `value(η) − value(θ)`.
    pub gap: Rational,
}

/// Re-checks a violating pair by direct evaluation.
pub fn verify_violation(instance: &DecisionInstance, pair: &ViolationPair, class: &GambleClass) -> Result<(), String> {
    if !dominates(instance, &pair.theta, &pair.eta) {
        return Err("θ does not dominate η".into());
    }
    let gap = value(instance, &pair.eta) - value(instance, &pair.theta);
    if !gap.is_positive() {
        return Err(format!("value gap {} is not positive", format_rational(&gap)));
    }
    if gap != pair.gap {
        return Err("reported gap differs from the recomputed one".into());
    }
    if !class_membership(instance, &pair.theta, class) {
        return Err(format!("θ is not in class {}", class.name()));
    }
    Ok(())
}

/// Expected utility with prior `m` on the atoms; the bubble term is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeuRepresentation {
    pub atoms: Vec<String>,
    pub prior: Vec<Rational>,
}

/// `λ·u(g) ≥ V(g)`, one row of the canonical prior set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorConstraint {
    pub act: ActId,
    pub profile: Vec<Rational>,
    pub bound: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActMinimum {
    pub act: ActId,
    pub minimum: Rational,
    pub witness: Vec<Rational>,
}

/// The canonical prior set `Λ* = {λ ∈ Δ(atoms) : λ·u(g) ≥ V(g) ∀g}` and the
/// per-act minima over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeuRepresentation {
    pub atoms: Vec<String>,
    pub constraints: Vec<PriorConstraint>,
    /// Empty when `Λ*` is empty.
    pub minima: Vec<ActMinimum>,
    pub infeasibility: Option<FarkasCertificate>,
    pub mismatches: Vec<ActId>,
    pub positive: bool,
}

impl MeuRepresentation {
    pub fn is_empty(&self) -> bool {
        self.infeasibility.is_some()
    }

    /// Vertices of `Λ*`.
    pub fn vertices(&self) -> Vec<Vec<Rational>> {
        let rows: Vec<(Vec<Rational>, Rational)> =
            self.constraints.iter().map(|c| (c.profile.clone(), c.bound.clone())).collect();
        simplex_vertices(self.atoms.len(), &rows)
    }

    pub fn contains(&self, lambda: &[Rational]) -> bool {
        lambda.len() == self.atoms.len()
            && lambda.iter().all(|x| !x.is_negative())
            && lambda.iter().sum::<Rational>().is_one()
            && self.constraints.iter().all(|c| dot(&c.profile, lambda) >= c.bound)
    }
}

/// `γ_V` with its convexity and the Choquet integral of every act.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CeuRepresentation {
    pub capacity: Capacity,
    pub monotone: bool,
    pub convex: bool,
    pub convexity_violation: Option<(AtomSet, AtomSet)>,
    pub choquet: Vec<Rational>,
    pub mismatches: Vec<ActId>,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    /// No pair of acts violates dominance.
    PairScan,
    /// The decision LPs all have optimum zero.
    ZeroOptimum { programs: usize },
    Seu(SeuRepresentation),
    Violation(ViolationPair),
    /// Positive verdict but no representation can be read off, with the reason.
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoherenceVerdict {
    /// The grade that was tested.
    pub grade: Grade,
    pub holds: bool,
    pub certificate: Certificate,
}

impl CoherenceVerdict {
    pub fn violation(&self) -> Option<&ViolationPair> {
        match &self.certificate {
            Certificate::Violation(v) => Some(v),
            _ => None,
        }
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn require_normalized(instance: &DecisionInstance) -> Result<(), CoherenceError> {
    if is_normalized(instance) {
        Ok(())
    } else {
        Err(CoherenceError::NotNormalized)
    }
}

/// `u(f)` on each atom. Generating sets are unions of atoms, so `u(f)` is constant on atoms.
pub fn atom_profile(instance: &DecisionInstance, algebra: &EventAlgebra, act: ActId) -> Vec<Rational> {
    algebra
        .atoms()
        .iter()
        .map(|a| {
            let s = a.states().next().expect("atoms are nonempty");
            instance.utility(act, s).clone()
        })
        .collect()
}

/// Scans all act pairs for `f ≥_u g` with `V(f) < V(g)`.
pub fn check_simple_coherence(instance: &DecisionInstance) -> Result<CoherenceVerdict, CoherenceError> {
    require_normalized(instance)?;
    let n = instance.state_count();
    for f in instance.act_ids() {
        for g in instance.act_ids() {
            if instance.value(f) >= instance.value(g) {
                continue;
            }
            let pointwise = (0..n).all(|s| instance.utility(f, StateId(s)) >= instance.utility(g, StateId(s)));
            if pointwise {
                let pair = ViolationPair {
                    theta: Gamble::dirac(f),
                    eta: Gamble::dirac(g),
                    gap: instance.value(g) - instance.value(f),
                };
                return Ok(CoherenceVerdict {
                    grade: Grade::Simple,
                    holds: false,
                    certificate: Certificate::Violation(pair),
                });
            }
        }
    }
    Ok(CoherenceVerdict {
        grade: Grade::Simple,
        holds: true,
        certificate: Certificate::PairScan,
    })
}

struct DominanceProgram {
    lp: LinearProgram,
    theta: Vec<(ActId, VarId)>,
    eta: Vec<(ActId, VarId)>,
}

/// `max value(η) − value(θ)` subject to `u(θ|ω) ≥ u(η|ω)` for all `ω`,
/// `θ` supported on `support`, masses at most one (exactly one with `unit_mass`).
fn dominance_program(instance: &DecisionInstance, support: &[ActId], unit_mass: bool) -> DominanceProgram {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let theta: Vec<(ActId, VarId)> = support
        .iter()
        .map(|a| (*a, lp.add_nonneg(format!("theta[{}]", instance.act(*a).id))))
        .collect();
    let eta: Vec<(ActId, VarId)> = instance
        .act_ids()
        .map(|a| (a, lp.add_nonneg(format!("eta[{}]", instance.act(a).id))))
        .collect();
    let mut objective: Vec<(VarId, Rational)> = eta.iter().map(|(a, v)| (*v, instance.value(*a).clone())).collect();
    objective.extend(theta.iter().map(|(a, v)| (*v, -instance.value(*a).clone())));
    lp.set_objective(objective);
    for s in 0..instance.state_count() {
        let mut row: Vec<(VarId, Rational)> = theta
            .iter()
            .map(|(a, v)| (*v, instance.utility(*a, StateId(s)).clone()))
            .collect();
        row.extend(eta.iter().map(|(a, v)| (*v, -instance.utility(*a, StateId(s)).clone())));
        lp.add_constraint(row, Relation::Ge, Rational::zero());
    }
    let mass = if unit_mass { Relation::Eq } else { Relation::Le };
    lp.add_constraint(theta.iter().map(|(_, v)| (*v, Rational::one())).collect(), mass, Rational::one());
    lp.add_constraint(eta.iter().map(|(_, v)| (*v, Rational::one())).collect(), mass, Rational::one());
    DominanceProgram { lp, theta, eta }
}

/// Solves one dominance program; `Some(pair)` when its optimum is positive.
fn solve_dominance(
    instance: &DecisionInstance,
    support: &[ActId],
    unit_mass: bool,
    class: &GambleClass,
) -> Result<Option<ViolationPair>, CoherenceError> {
    let prog = dominance_program(instance, support, unit_mass);
    let sol = match lp::solve_lp(&prog.lp)? {
        LpOutcome::Optimal(sol) => sol,
        other => {
            return Err(CoherenceError::InternalContradiction(format!(
                "dominance program over a compact polytope returned {:?}",
                other.status()
            )))
        }
    };
    if !sol.value.is_positive() {
        return Ok(None);
    }
    let read = |vars: &[(ActId, VarId)]| Gamble::new(vars.iter().map(|(a, v)| (*a, sol.primal[v.0].clone())));
    let pair = ViolationPair {
        theta: read(&prog.theta)?,
        eta: read(&prog.eta)?,
        gap: sol.value.clone(),
    };
    verify_violation(instance, &pair, class)
        .map_err(|e| CoherenceError::InternalContradiction(format!("violating pair failed re-verification: {e}")))?;
    Ok(Some(pair))
}

/// Decides full coherence; a positive verdict carries the expected-utility prior.
pub fn check_full_coherence(instance: &DecisionInstance) -> Result<CoherenceVerdict, CoherenceError> {
    require_normalized(instance)?;
    let all: Vec<ActId> = instance.act_ids().collect();
    if let Some(pair) = solve_dominance(instance, &all, false, &GambleClass::All)? {
        return Ok(CoherenceVerdict {
            grade: Grade::Full,
            holds: false,
            certificate: Certificate::Violation(pair),
        });
    }
    let certificate = match derive_event_algebra(instance) {
        Err(e) => Certificate::Unavailable(e.to_string()),
        Ok(algebra) => match seu_from_algebra(instance, &algebra) {
            Ok(rep) => Certificate::Seu(rep),
            Err(CoherenceError::Instance(e)) => Certificate::Unavailable(e.to_string()),
            Err(CoherenceError::NotRepresentable(why)) => {
                return Err(CoherenceError::InternalContradiction(format!(
                    "full coherence holds but no prior represents V: {why}"
                )))
            }
            Err(e) => return Err(e),
        },
    };
    Ok(CoherenceVerdict {
        grade: Grade::Full,
        holds: true,
        certificate,
    })
}

/// Diagnostic variant of the full check with `‖θ‖ = ‖η‖ = 1`.
pub fn check_full_coherence_unit_mass(instance: &DecisionInstance) -> Result<CoherenceVerdict, CoherenceError> {
    require_normalized(instance)?;
    let all: Vec<ActId> = instance.act_ids().collect();
    let pair = solve_dominance(instance, &all, true, &GambleClass::All)?;
    Ok(CoherenceVerdict {
        grade: Grade::Full,
        holds: pair.is_none(),
        certificate: pair.map_or(Certificate::ZeroOptimum { programs: 1 }, Certificate::Violation),
    })
}

fn seu_from_algebra(instance: &DecisionInstance, algebra: &EventAlgebra) -> Result<SeuRepresentation, CoherenceError> {
    let gamma = subjective_capacity(instance, algebra)?;
    let prior: Vec<Rational> = (0..algebra.atom_count())
        .map(|i| gamma.value(AtomSet::singleton(i)).clone())
        .collect();
    if let Some(i) = prior.iter().position(Signed::is_negative) {
        return Err(CoherenceError::NotRepresentable(format!(
            "γ_V of atom {} is negative",
            algebra.labels()[i]
        )));
    }
    if !gamma.is_additive() {
        return Err(CoherenceError::NotRepresentable("γ_V is not additive".into()));
    }
    for f in instance.act_ids() {
        let expected = dot(&prior, &atom_profile(instance, algebra, f));
        if &expected != instance.value(f) {
            return Err(CoherenceError::NotRepresentable(format!(
                "V({}) = {} but the prior gives {}",
                instance.act(f).id,
                format_rational(instance.value(f)),
                format_rational(&expected)
            )));
        }
    }
    Ok(SeuRepresentation {
        atoms: algebra.labels().to_vec(),
        prior,
    })
}

/// `m = γ_V` on atoms, checked for additivity and for `V(f) = Σ m·u(f)`.
pub fn extract_seu(instance: &DecisionInstance) -> Result<SeuRepresentation, CoherenceError> {
    require_normalized(instance)?;
    let algebra = derive_event_algebra(instance)?;
    seu_from_algebra(instance, &algebra)
}

/// Decides coherence relative to a class of dominating gambles.
pub fn check_relative_coherence(
    instance: &DecisionInstance,
    class: &GambleClass,
    clique_cap: usize,
) -> Result<CoherenceVerdict, CoherenceError> {
    require_normalized(instance)?;
    let (grade, supports): (Grade, Vec<Vec<ActId>>) = match class {
        GambleClass::All => return check_full_coherence(instance),
        GambleClass::Theta0 => {
            let high = instance.ref_high();
            let supports = instance
                .act_ids()
                .filter(|f| *f != high)
                .map(|f| vec![f, high])
                .collect();
            (Grade::Theta0, supports)
        }
        GambleClass::Theta1 => {
            let cliques = comonotone_cliques(instance, clique_cap)?;
            (Grade::Theta1, cliques.into_iter().map(|c| c.into_iter().collect()).collect())
        }
        GambleClass::Clique(sets) => (Grade::Theta1, sets.iter().map(|c| c.iter().copied().collect()).collect()),
    };
    for support in &supports {
        if let Some(pair) = solve_dominance(instance, support, false, class)? {
            return Ok(CoherenceVerdict {
                grade,
                holds: false,
                certificate: Certificate::Violation(pair),
            });
        }
    }
    Ok(CoherenceVerdict {
        grade,
        holds: true,
        certificate: Certificate::ZeroOptimum {
            programs: supports.len(),
        },
    })
}

/// Builds `Λ*` and minimizes `λ·u(f)` over it for every act.
pub fn extract_meu(instance: &DecisionInstance) -> Result<MeuRepresentation, CoherenceError> {
    require_normalized(instance)?;
    let algebra = derive_event_algebra(instance)?;
    let n = algebra.atom_count();
    let constraints: Vec<PriorConstraint> = instance
        .act_ids()
        .map(|g| PriorConstraint {
            act: g,
            profile: atom_profile(instance, &algebra, g),
            bound: instance.value(g).clone(),
        })
        .collect();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let lambda: Vec<VarId> = (0..n).map(|i| lp.add_nonneg(format!("lambda[{}]", algebra.labels()[i]))).collect();
    lp.add_constraint(lambda.iter().map(|v| (*v, Rational::one())).collect(), Relation::Eq, Rational::one());
    for c in &constraints {
        let row = lambda.iter().zip(&c.profile).map(|(v, u)| (*v, u.clone())).collect();
        lp.add_constraint(row, Relation::Ge, c.bound.clone());
    }
    let mut minima = Vec::with_capacity(constraints.len());
    let mut mismatches = Vec::new();
    for c in &constraints {
        lp.set_objective(lambda.iter().zip(&c.profile).map(|(v, u)| (*v, u.clone())).collect());
        match lp::solve_lp(&lp)? {
            LpOutcome::Optimal(sol) => {
                if sol.value != c.bound {
                    mismatches.push(c.act);
                }
                minima.push(ActMinimum {
                    act: c.act,
                    minimum: sol.value,
                    witness: sol.primal,
                });
            }
            LpOutcome::Infeasible(cert) => {
                return Ok(MeuRepresentation {
                    atoms: algebra.labels().to_vec(),
                    constraints,
                    minima: Vec::new(),
                    infeasibility: Some(cert),
                    mismatches: Vec::new(),
                    positive: false,
                })
            }
            LpOutcome::Unbounded(_) => {
                return Err(CoherenceError::InternalContradiction(
                    "minimum over a simplex is unbounded".into(),
                ))
            }
        }
    }
    Ok(MeuRepresentation {
        atoms: algebra.labels().to_vec(),
        constraints,
        positive: mismatches.is_empty(),
        minima,
        infeasibility: None,
        mismatches,
    })
}

/// `γ_V`, its convexity, and the Choquet integral of every act.
pub fn extract_ceu(instance: &DecisionInstance) -> Result<CeuRepresentation, CoherenceError> {
    require_normalized(instance)?;
    let algebra = derive_event_algebra(instance)?;
    let capacity = subjective_capacity(instance, &algebra)?;
    let monotone = capacity.is_monotone();
    let violation = convexity_violation(&capacity);
    let mut choquet = Vec::with_capacity(instance.acts().len());
    let mut mismatches = Vec::new();
    for f in instance.act_ids() {
        let c = choquet_integral(&capacity, &atom_profile(instance, &algebra, f))?;
        if &c != instance.value(f) {
            mismatches.push(f);
        }
        choquet.push(c);
    }
    Ok(CeuRepresentation {
        positive: monotone && violation.is_none() && mismatches.is_empty(),
        capacity,
        monotone,
        convex: violation.is_none(),
        convexity_violation: violation,
        choquet,
        mismatches,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ladder {
    pub grade: Grade,
    pub simple: CoherenceVerdict,
    pub theta0: CoherenceVerdict,
    pub theta1: CoherenceVerdict,
    pub full: CoherenceVerdict,
    pub meu: Option<MeuRepresentation>,
    pub ceu: Option<CeuRepresentation>,
    /// Why the representations could not be built, when they could not.
    pub representation_error: Option<String>,
}

impl Ladder {
    pub fn verdict(&self, grade: Grade) -> Option<&CoherenceVerdict> {
        match grade {
            Grade::None => None,
            Grade::Simple => Some(&self.simple),
            Grade::Theta0 => Some(&self.theta0),
            Grade::Theta1 => Some(&self.theta1),
            Grade::Full => Some(&self.full),
        }
    }

    pub fn seu(&self) -> Option<&SeuRepresentation> {
        match &self.full.certificate {
            Certificate::Seu(rep) => Some(rep),
            _ => None,
        }
    }
}

/// Runs every grade, returns the strongest one that holds, and checks that
/// `FULL ⇒ THETA1 ⇒ THETA0 ⇒ SIMPLE`. On instances passing
/// [`validate_structure`] it also checks that each representation agrees
/// with its decision procedure.
pub fn coherence_ladder(instance: &DecisionInstance, clique_cap: usize) -> Result<Ladder, CoherenceError> {
    let simple = check_simple_coherence(instance)?;
    let theta0 = check_relative_coherence(instance, &GambleClass::Theta0, clique_cap)?;
    let theta1 = check_relative_coherence(instance, &GambleClass::Theta1, clique_cap)?;
    let full = check_full_coherence(instance)?;
    let chain = [&full, &theta1, &theta0, &simple];
    for w in chain.windows(2) {
        if w[0].holds && !w[1].holds {
            return Err(CoherenceError::InternalContradiction(format!(
                "{} holds but {} fails",
                w[0].grade, w[1].grade
            )));
        }
    }
    let grade = chain.iter().find(|v| v.holds).map_or(Grade::None, |v| v.grade);

    let (meu, ceu, representation_error) = match (extract_meu(instance), extract_ceu(instance)) {
        (Ok(m), Ok(c)) => {
            let checked = validate_structure(instance).passes();
            if checked && m.positive != theta0.holds {
                return Err(CoherenceError::InternalContradiction(format!(
                    "THETA0 decision ({}) and maxmin representation ({}) disagree",
                    theta0.holds, m.positive
                )));
            }
            if checked && c.positive != theta1.holds {
                return Err(CoherenceError::InternalContradiction(format!(
                    "THETA1 decision ({}) and Choquet representation ({}) disagree",
                    theta1.holds, c.positive
                )));
            }
            (Some(m), Some(c), None)
        }
        (Err(CoherenceError::Instance(e)), _) | (_, Err(CoherenceError::Instance(e))) => (None, None, Some(e.to_string())),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    Ok(Ladder {
        grade,
        simple,
        theta0,
        theta1,
        full,
        meu,
        ceu,
        representation_error,
    })
}

/// One sampled check of `c*(tθ) ≤ t·c*(θ)` for the canonical cost
/// `c*(θ) = max(0, sup{value(η) − value(θ) : θ ≥_u η})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalingSample {
    pub theta: Gamble,
    pub t: Rational,
    pub cost: Rational,
    pub scaled_cost: Rational,
    pub holds: bool,
}

/// `c*(θ)` by linear programming over `η`.
pub fn canonical_cost(instance: &DecisionInstance, theta: &Gamble) -> Result<Rational, CoherenceError> {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let eta: Vec<(ActId, VarId)> = instance
        .act_ids()
        .map(|a| (a, lp.add_nonneg(format!("eta[{}]", instance.act(a).id))))
        .collect();
    lp.set_objective(eta.iter().map(|(a, v)| (*v, instance.value(*a).clone())).collect());
    let bound = conditional_profile(instance, theta);
    for (s, b) in bound.into_iter().enumerate() {
        let row = eta.iter().map(|(a, v)| (*v, instance.utility(*a, StateId(s)).clone())).collect();
        lp.add_constraint(row, Relation::Le, b);
    }
    lp.add_constraint(eta.iter().map(|(_, v)| (*v, Rational::one())).collect(), Relation::Le, Rational::one());
    match lp::solve_lp(&lp)? {
        LpOutcome::Optimal(sol) => {
            let gap = sol.value - value(instance, theta);
            Ok(if gap.is_positive() { gap } else { Rational::zero() })
        }
        LpOutcome::Infeasible(_) => Ok(Rational::zero()),
        LpOutcome::Unbounded(_) => Err(CoherenceError::InternalContradiction("canonical cost unbounded".into())),
    }
}

pub fn scaling_sample(instance: &DecisionInstance, theta: Gamble, t: Rational) -> Result<ScalingSample, CoherenceError> {
    let cost = canonical_cost(instance, &theta)?;
    let scaled_cost = canonical_cost(instance, &theta.scaled(&t)?)?;
    Ok(ScalingSample {
        holds: scaled_cost <= &t * &cost,
        theta,
        t,
        cost,
        scaled_cost,
    })
}

/// Acts a class contains, as listed supports. Used by reports.
pub fn class_supports(instance: &DecisionInstance, clique_cap: usize) -> Result<Vec<BTreeSet<ActId>>, CoherenceError> {
    Ok(comonotone_cliques(instance, clique_cap)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::gamble::DEFAULT_CLIQUE_CAP;
    use crate::rational::{int, ratio};

    fn id(inst: &DecisionInstance, name: &str) -> ActId {
        inst.act_by_name(name).unwrap()
    }

    #[test]
    fn simple_coherence() {
        assert!(check_simple_coherence(&fixtures::e1()).unwrap().holds);
        let e1 = fixtures::e1();
        let bad = e1.with_value(id(&e1, "f"), ratio(-1, 10));
        let v = check_simple_coherence(&bad).unwrap();
        assert!(!v.holds);
        let pair = v.violation().unwrap();
        assert_eq!(pair.theta, Gamble::dirac(id(&bad, "f")));
        assert_eq!(pair.eta, Gamble::dirac(bad.ref_low()));
        let refs = e1.retain_acts(|a, _| e1.is_constant(a)).unwrap();
        assert!(check_simple_coherence(&refs).unwrap().holds);
    }

    #[test]
    fn full_coherence_of_e1_gives_its_prior() {
        let v = check_full_coherence(&fixtures::e1()).unwrap();
        assert!(v.holds);
        match v.certificate {
            Certificate::Seu(rep) => assert_eq!(rep.prior, vec![ratio(3, 10), ratio(7, 10)]),
            other => panic!("expected a prior, got {other:?}"),
        }
    }

    #[test]
    fn e2_violation_has_gap_three_twentieths() {
        let e2 = fixtures::e2();
        let v = check_full_coherence(&e2).unwrap();
        assert!(!v.holds);
        let pair = v.violation().unwrap();
        verify_violation(&e2, pair, &GambleClass::All).unwrap();
        // The LP maximizes the gap; ½δ_ȳ ≥_u ½δ_f + ½δ_g reaches 3/20 but is not optimal.
        assert!(pair.gap >= ratio(3, 20));
        let witness = ViolationPair {
            theta: Gamble::from_names(&e2, &[("ybar", ratio(1, 2))]).unwrap(),
            eta: Gamble::from_names(&e2, &[("f", ratio(1, 2)), ("g", ratio(1, 2))]).unwrap(),
            gap: ratio(-3, 20),
        };
        assert!(verify_violation(&e2, &witness, &GambleClass::All).is_err());
    }

    #[test]
    fn references_only_is_full() {
        let e1 = fixtures::e1();
        let refs = e1.retain_acts(|a, _| e1.is_constant(a)).unwrap();
        let v = check_full_coherence(&refs).unwrap();
        assert!(v.holds);
        match v.certificate {
            Certificate::Seu(rep) => assert_eq!(rep.prior, vec![int(1)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn extract_seu_rejects_e4() {
        assert!(matches!(extract_seu(&fixtures::e4()), Err(CoherenceError::NotRepresentable(_))));
    }

    #[test]
    fn e3_maxmin() {
        let e3 = fixtures::e3();
        assert!(check_relative_coherence(&e3, &GambleClass::Theta0, DEFAULT_CLIQUE_CAP).unwrap().holds);
        let meu = extract_meu(&e3).unwrap();
        assert!(meu.positive);
        let vertices = meu.vertices();
        assert_eq!(
            vertices,
            vec![vec![ratio(3, 10), ratio(7, 10)], vec![ratio(7, 10), ratio(3, 10)]]
        );
        let f = meu.minima.iter().find(|m| m.act == id(&e3, "f")).unwrap();
        assert_eq!(f.minimum, ratio(3, 10));
        assert_eq!(f.witness, vec![ratio(3, 10), ratio(7, 10)]);
        let g = meu.minima.iter().find(|m| m.act == id(&e3, "g")).unwrap();
        assert_eq!(g.witness, vec![ratio(7, 10), ratio(3, 10)]);
    }

    #[test]
    fn e1_maxmin_is_a_point() {
        let meu = extract_meu(&fixtures::e1()).unwrap();
        assert!(meu.positive);
        assert_eq!(meu.vertices(), vec![vec![ratio(3, 10), ratio(7, 10)]]);
    }

    #[test]
    fn empty_prior_set() {
        let e1 = fixtures::e1();
        let high = e1.with_value(id(&e1, "f"), ratio(11, 10));
        let meu = extract_meu(&high).unwrap();
        assert!(!meu.positive);
        assert!(meu.is_empty());
    }

    #[test]
    fn e2_is_comonotone_coherent() {
        let e2 = fixtures::e2();
        assert!(check_relative_coherence(&e2, &GambleClass::Theta1, DEFAULT_CLIQUE_CAP).unwrap().holds);
    }

    #[test]
    fn choquet_representations() {
        let e4 = fixtures::e4();
        let ceu = extract_ceu(&e4).unwrap();
        assert!(ceu.positive);
        assert_eq!(ceu.choquet[id(&e4, "h1").0], ratio(5, 18));
        assert!(extract_ceu(&fixtures::e1()).unwrap().positive);
        let off = e4.with_value(id(&e4, "h1"), ratio(1, 3));
        let ceu = extract_ceu(&off).unwrap();
        assert!(!ceu.positive);
        assert_eq!(ceu.mismatches, vec![id(&off, "h1")]);
    }

    #[test]
    fn ladders() {
        let e1 = fixtures::e1();
        assert_eq!(coherence_ladder(&e1, DEFAULT_CLIQUE_CAP).unwrap().grade, Grade::Full);
        let e3 = coherence_ladder(&fixtures::e3(), DEFAULT_CLIQUE_CAP).unwrap();
        assert_eq!(e3.grade, Grade::Theta1);
        assert!(e3.theta0.holds);
        assert!(!e3.full.holds);
        let e4 = coherence_ladder(&fixtures::e4(), DEFAULT_CLIQUE_CAP).unwrap();
        assert_eq!(e4.grade, Grade::Theta1);
        let bad = e1.with_value(id(&e1, "f"), ratio(-1, 10));
        assert_eq!(coherence_ladder(&bad, DEFAULT_CLIQUE_CAP).unwrap().grade, Grade::None);
    }

    #[test]
    fn unnormalized_input_is_refused() {
        let inst = fixtures::boundary_instance(int(4), int(10), int(2), int(5));
        assert!(matches!(check_full_coherence(&inst), Err(CoherenceError::NotNormalized)));
    }

    #[test]
    fn canonical_cost_vanishes_on_coherent_instances() {
        let e1 = fixtures::e1();
        let theta = Gamble::from_names(&e1, &[("f", ratio(1, 2)), ("g", ratio(1, 4))]).unwrap();
        assert_eq!(canonical_cost(&e1, &theta).unwrap(), int(0));
        let e2 = fixtures::e2();
        let mix = Gamble::from_names(&e2, &[("f", ratio(1, 2)), ("g", ratio(1, 2))]).unwrap();
        let s = scaling_sample(&e2, mix, ratio(1, 2)).unwrap();
        assert_eq!(s.cost, ratio(3, 20));
        assert_eq!(s.scaled_cost, ratio(3, 40));
        assert!(s.holds);
    }
}
