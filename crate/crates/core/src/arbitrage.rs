//! Cone formulation of simple coherence and the max-margin repair.

use num_traits::{One, Signed, Zero};

use crate::coherence::{atom_profile, check_full_coherence, CoherenceError};
use crate::gamble::{conditional_profile, SignedPosition};
use crate::instance::{derive_event_algebra, is_normalized, ActId, DecisionInstance, EventAlgebra, StateId};
use crate::lp::{self, FarkasCertificate, LinearProgram, LpOutcome, Relation, Sense, VarId};
use crate::rational::{format_rational, Rational};

/// Ordered act pair `(a, b)`, read as the direction `δ_b − δ_a`.
pub type ActPair = (ActId, ActId);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeSystem {
    /// `u(·|ω)` for every act, one row per state.
    pub zu_constraints: Vec<Vec<Rational>>,
    /// `V(b) ≥ V(a)`, `a ≠ b`.
    pub weak_pairs: Vec<ActPair>,
    /// `V(b) > V(a)`.
    pub strict_pairs: Vec<ActPair>,
}

impl ConeSystem {
    pub fn new(instance: &DecisionInstance) -> Self {
        let zu_constraints = (0..instance.state_count())
            .map(|s| instance.act_ids().map(|a| instance.utility(a, StateId(s)).clone()).collect())
            .collect();
        let mut weak_pairs = Vec::new();
        let mut strict_pairs = Vec::new();
        for a in instance.act_ids() {
            for b in instance.act_ids() {
                if a == b {
                    continue;
                }
                if instance.value(b) >= instance.value(a) {
                    weak_pairs.push((a, b));
                }
                if instance.value(b) > instance.value(a) {
                    strict_pairs.push((a, b));
                }
            }
        }
        ConeSystem {
            zu_constraints,
            weak_pairs,
            strict_pairs,
        }
    }
}

/// `0 ≥_u ζ`.
pub fn in_zu(instance: &DecisionInstance, zeta: &SignedPosition) -> bool {
    conditional_profile(instance, zeta).iter().all(|x| !x.is_positive())
}

/// `ζ = ρ + π` with `ζ ∈ Z_u`, `ρ` in the weak cone and `π` a unit-mass
/// strict-cone element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbitrageDecomposition {
    pub zeta: SignedPosition,
    pub rho: Vec<(ActPair, Rational)>,
    pub pi: Vec<(ActPair, Rational)>,
}

fn combine(pairs: &[(ActPair, Rational)]) -> SignedPosition {
    pairs.iter().fold(SignedPosition::zero(), |acc, ((a, b), w)| {
        acc.add(&SignedPosition::difference(*b, *a).scale(w))
    })
}

/// Independent re-check of a decomposition against the instance.
pub fn verify_decomposition(instance: &DecisionInstance, d: &ArbitrageDecomposition) -> Result<(), String> {
    if !in_zu(instance, &d.zeta) {
        return Err("ζ has a positive conditional value".into());
    }
    for &((a, b), ref w) in &d.rho {
        if w.is_negative() {
            return Err("negative weak-pair weight".into());
        }
        if instance.value(b) < instance.value(a) {
            return Err(format!(
                "ρ uses ({}, {}) which is not a weak pair",
                instance.act(a).id,
                instance.act(b).id
            ));
        }
    }
    let mut mass = Rational::zero();
    for &((a, b), ref w) in &d.pi {
        if w.is_negative() {
            return Err("negative strict-pair weight".into());
        }
        if instance.value(b) <= instance.value(a) {
            return Err(format!(
                "π uses ({}, {}) which is not a strict pair",
                instance.act(a).id,
                instance.act(b).id
            ));
        }
        mass += w;
    }
    if !mass.is_one() {
        return Err(format!("strict weights sum to {}", format_rational(&mass)));
    }
    if d.zeta.sub(&combine(&d.rho)) != combine(&d.pi) {
        return Err("ζ − ρ differs from π".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArbitrageCertificate {
    /// The arbitrage program is infeasible.
    NoArbitrage(FarkasCertificate),
    Arbitrage(ArbitrageDecomposition),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbitrageVerdict {
    pub ok: bool,
    pub certificate: ArbitrageCertificate,
}

pub struct ArbitrageProgram {
    pub lp: LinearProgram,
    pub rho: Vec<(ActPair, VarId)>,
    pub pi: Vec<(ActPair, VarId)>,
}

/// Feasibility program over `ρ, π ≥ 0` with `Σπ = 1` and `u(ρ + π|ω) ≤ 0`.
pub fn arbitrage_program(instance: &DecisionInstance, system: &ConeSystem) -> ArbitrageProgram {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let name = |tag: &str, (a, b): ActPair| format!("{tag}[{},{}]", instance.act(a).id, instance.act(b).id);
    let rho: Vec<(ActPair, VarId)> = system.weak_pairs.iter().map(|p| (*p, lp.add_nonneg(name("rho", *p)))).collect();
    let pi: Vec<(ActPair, VarId)> = system.strict_pairs.iter().map(|p| (*p, lp.add_nonneg(name("pi", *p)))).collect();
    for row in &system.zu_constraints {
        let coeffs = rho
            .iter()
            .chain(&pi)
            .map(|((a, b), v)| (*v, &row[b.0] - &row[a.0]))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        lp.add_constraint(coeffs, Relation::Le, Rational::zero());
    }
    lp.add_constraint(pi.iter().map(|(_, v)| (*v, Rational::one())).collect(), Relation::Eq, Rational::one());
    ArbitrageProgram { lp, rho, pi }
}

pub fn check_no_arbitrage(instance: &DecisionInstance) -> Result<ArbitrageVerdict, CoherenceError> {
    let system = ConeSystem::new(instance);
    let prog = arbitrage_program(instance, &system);
    match lp::solve_lp(&prog.lp)? {
        LpOutcome::Infeasible(cert) => Ok(ArbitrageVerdict {
            ok: true,
            certificate: ArbitrageCertificate::NoArbitrage(cert),
        }),
        LpOutcome::Optimal(sol) => {
            let read = |vars: &[(ActPair, VarId)]| -> Vec<(ActPair, Rational)> {
                vars.iter()
                    .filter(|(_, v)| !sol.primal[v.0].is_zero())
                    .map(|(p, v)| (*p, sol.primal[v.0].clone()))
                    .collect()
            };
            let rho = read(&prog.rho);
            let pi = read(&prog.pi);
            let zeta = combine(&rho).add(&combine(&pi));
            let d = ArbitrageDecomposition { zeta, rho, pi };
            verify_decomposition(instance, &d)
                .map_err(|e| CoherenceError::InternalContradiction(format!("arbitrage decomposition: {e}")))?;
            Ok(ArbitrageVerdict {
                ok: false,
                certificate: ArbitrageCertificate::Arbitrage(d),
            })
        }
        LpOutcome::Unbounded(_) => Err(CoherenceError::InternalContradiction(
            "feasibility program with zero objective is unbounded".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairStatus {
    Repaired,
    Impossible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepairCertificate {
    Infeasible(FarkasCertificate),
    /// Dual multipliers bounding the margin by a nonpositive number.
    NonPositiveMargin { optimum: Rational, dual: Vec<Rational> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairResult {
    pub status: RepairStatus,
    pub atoms: Vec<String>,
    pub prior: Vec<Rational>,
    pub new_values: Vec<Rational>,
    pub gap: Rational,
    pub certificate: Option<RepairCertificate>,
}

pub struct RepairProgram {
    pub lp: LinearProgram,
    pub mass: Vec<VarId>,
    pub margin: VarId,
    pub profiles: Vec<Vec<Rational>>,
}

/// Acts sorted by value; consecutive strict gaps get margin `ε`, ties are equalities.
/// Chaining consecutive pairs implies every strict pair of the order.
pub fn repair_program(instance: &DecisionInstance, algebra: &EventAlgebra) -> RepairProgram {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let mass: Vec<VarId> = algebra.labels().iter().map(|l| lp.add_nonneg(format!("m[{l}]"))).collect();
    let margin = lp.add_free("eps");
    lp.set_objective(vec![(margin, Rational::one())]);
    let profiles: Vec<Vec<Rational>> = instance.act_ids().map(|a| atom_profile(instance, algebra, a)).collect();
    let diff = |a: ActId, b: ActId| -> Vec<(VarId, Rational)> {
        mass.iter()
            .enumerate()
            .map(|(i, v)| (*v, &profiles[b.0][i] - &profiles[a.0][i]))
            .filter(|(_, c)| !c.is_zero())
            .collect()
    };
    let mut order: Vec<ActId> = instance.act_ids().collect();
    order.sort_by(|a, b| instance.value(*a).cmp(instance.value(*b)));
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut row = diff(a, b);
        if instance.value(a) == instance.value(b) {
            lp.add_constraint(row, Relation::Eq, Rational::zero());
        } else {
            row.push((margin, -Rational::one()));
            lp.add_constraint(row, Relation::Ge, Rational::zero());
        }
    }
    lp.add_constraint(diff(instance.ref_low(), instance.ref_high()), Relation::Eq, Rational::one());
    RepairProgram {
        lp,
        mass,
        margin,
        profiles,
    }
}

fn same_order(a: &[Rational], b: &[Rational]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| a[i].cmp(&a[j]) == b[i].cmp(&b[j])))
}

/// Searches for a prior whose expected utility ranks acts exactly as `V` does.
/// Uses the event algebra when it can be derived and single states otherwise.
pub fn repair_representation(instance: &DecisionInstance) -> Result<RepairResult, CoherenceError> {
    if !is_normalized(instance) {
        return Err(CoherenceError::NotNormalized);
    }
    let algebra = derive_event_algebra(instance)
        .unwrap_or_else(|_| EventAlgebra::discrete(instance.states().to_vec()));
    let prog = repair_program(instance, &algebra);
    let impossible = |certificate| RepairResult {
        status: RepairStatus::Impossible,
        atoms: algebra.labels().to_vec(),
        prior: Vec::new(),
        new_values: Vec::new(),
        gap: Rational::zero(),
        certificate: Some(certificate),
    };
    let sol = match lp::solve_lp(&prog.lp)? {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Infeasible(cert) => return Ok(impossible(RepairCertificate::Infeasible(cert))),
        LpOutcome::Unbounded(_) => {
            return Err(CoherenceError::InternalContradiction("repair margin is unbounded".into()))
        }
    };
    if !sol.value.is_positive() {
        let mut r = impossible(RepairCertificate::NonPositiveMargin {
            optimum: sol.value.clone(),
            dual: sol.dual.clone(),
        });
        r.gap = sol.value;
        return Ok(r);
    }
    let prior: Vec<Rational> = prog.mass.iter().map(|v| sol.primal[v.0].clone()).collect();
    let new_values: Vec<Rational> = prog.profiles.iter().map(|p| p.iter().zip(&prior).map(|(u, m)| u * m).sum()).collect();
    let old: Vec<Rational> = instance.act_ids().map(|a| instance.value(a).clone()).collect();
    if !same_order(&old, &new_values) {
        return Err(CoherenceError::InternalContradiction(
            "repaired values do not reproduce the order of V".into(),
        ));
    }
    let repaired = instance.with_values(&new_values);
    if !check_full_coherence(&repaired)?.holds {
        return Err(CoherenceError::InternalContradiction(
            "repaired instance is not fully coherent".into(),
        ));
    }
    Ok(RepairResult {
        status: RepairStatus::Repaired,
        atoms: algebra.labels().to_vec(),
        prior,
        new_values,
        gap: sol.value,
        certificate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::check_simple_coherence;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    fn id(inst: &DecisionInstance, name: &str) -> ActId {
        inst.act_by_name(name).unwrap()
    }

    #[test]
    fn zu_membership() {
        let e1 = fixtures::e1();
        let (lo, hi) = (e1.ref_low(), e1.ref_high());
        assert!(in_zu(&e1, &SignedPosition::difference(lo, hi)));
        assert!(!in_zu(&e1, &SignedPosition::new([(hi, int(1))])));
        let z = SignedPosition::new([(id(&e1, "f"), int(1)), (id(&e1, "g"), int(1)), (hi, int(-1))]);
        assert!(in_zu(&e1, &z));
    }

    #[test]
    fn cone_system_pairs() {
        let sys = ConeSystem::new(&fixtures::e3());
        // f and g tie, so both orders are weak pairs.
        assert_eq!(sys.weak_pairs.len(), 7);
        assert_eq!(sys.strict_pairs.len(), 5);
        assert_eq!(sys.zu_constraints.len(), 2);
    }

    #[test]
    fn e1_has_no_arbitrage() {
        let e1 = fixtures::e1();
        let v = check_no_arbitrage(&e1).unwrap();
        assert!(v.ok);
        let ArbitrageCertificate::NoArbitrage(cert) = v.certificate else { panic!() };
        let prog = arbitrage_program(&e1, &ConeSystem::new(&e1));
        lp::verify_farkas(&prog.lp, &cert).unwrap();
    }

    #[test]
    fn dominated_act_valued_below_zero() {
        let e1 = fixtures::e1();
        let bad = e1.with_value(id(&e1, "f"), ratio(-1, 10));
        let v = check_no_arbitrage(&bad).unwrap();
        assert!(!v.ok);
        let ArbitrageCertificate::Arbitrage(d) = v.certificate else { panic!() };
        verify_decomposition(&bad, &d).unwrap();
    }

    #[test]
    fn references_only() {
        let e1 = fixtures::e1();
        let refs = e1.retain_acts(|a, _| e1.is_constant(a)).unwrap();
        assert!(check_no_arbitrage(&refs).unwrap().ok);
    }

    #[test]
    fn ties_against_dominance_are_arbitrage_but_simple() {
        // V(f) = V(g) = 0: δ_ȳ − δ_f and δ_x̄ − δ_g are strict and weak, and their sum has zero profile.
        let inst = fixtures::two_state(int(0), int(0));
        assert!(check_simple_coherence(&inst).unwrap().holds);
        assert!(!check_no_arbitrage(&inst).unwrap().ok);
        assert_eq!(repair_representation(&inst).unwrap().status, RepairStatus::Impossible);
    }

    #[test]
    fn repair_e2() {
        let e2 = fixtures::e2();
        let r = repair_representation(&e2).unwrap();
        assert_eq!(r.status, RepairStatus::Repaired);
        assert!(r.gap.is_positive());
        let (f, g) = (id(&e2, "f"), id(&e2, "g"));
        assert!(r.new_values[f.0] < r.new_values[g.0]);
        assert_eq!(r.prior.iter().sum::<Rational>(), int(1));
    }

    #[test]
    fn repair_e1_keeps_order() {
        let e1 = fixtures::e1();
        let r = repair_representation(&e1).unwrap();
        assert_eq!(r.status, RepairStatus::Repaired);
        // Maximizing the smallest consecutive gap of 0 < m1 < m2 < 1 gives thirds.
        assert_eq!(r.prior, vec![ratio(1, 3), ratio(2, 3)]);
    }

    #[test]
    fn repair_e3_preserves_the_tie() {
        let e3 = fixtures::e3();
        let r = repair_representation(&e3).unwrap();
        assert_eq!(r.status, RepairStatus::Repaired);
        assert_eq!(r.prior, vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn repair_refuses_dominated_order() {
        let e1 = fixtures::e1();
        let bad = e1.with_value(id(&e1, "f"), ratio(-1, 10));
        let r = repair_representation(&bad).unwrap();
        assert_eq!(r.status, RepairStatus::Impossible);
        assert!(r.certificate.is_some());
    }
}
