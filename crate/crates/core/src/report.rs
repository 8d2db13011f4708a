//! Analysis pipeline and the JSON / text reports built from it.
//!
//! JSON objects come out with sorted keys and every number as a `"p/q"`
//! string, so equal inputs give byte-identical output.

use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::arbitrage::{check_no_arbitrage, ArbitrageCertificate, ArbitrageVerdict, RepairCertificate, RepairResult, RepairStatus};
use crate::capacity::{
    capacity_to_json, choquet_grid, choquet_integral, choquet_layers, choquet_shifted, convexity_violation,
    core_minimum, core_polytope, null_equivalent_probability, partition_axiom_check, submeasure_equivalent,
    verify_submeasure, AtomSet, Capacity, CapacityError, MAX_VERTEX_ATOMS,
};
use crate::coherence::{
    check_full_coherence_unit_mass, coherence_ladder, scaling_sample, Certificate, CeuRepresentation, CoherenceError,
    CoherenceVerdict, Grade, Ladder, MeuRepresentation, ScalingSample, SeuRepresentation, ViolationPair,
};
use crate::gamble::{conditional_value, Weighted};
use crate::generate::random_gamble;
use crate::instance::{
    check_continuity_surrogate, derive_event_algebra, normalize, subjective_capacity, truncation_map, validate_structure,
    ActSpec, AffineTransform, DecisionInstance, EventAlgebra, StateId, TruncationMode, ValidationReport,
};
use crate::io::instance_digest;
use crate::lp::FarkasCertificate;
use crate::rational::{format_rational, ratio, Rational};

pub const SCHEMA: &str = "coherence-lab/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest atom count for which `Λ*` vertices are listed.
const LISTED_VERTEX_ATOMS: usize = 4;
const SCALING_SAMPLES: usize = 16;

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub digest: Option<String>,
    pub body: Value,
    pub text: String,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "version": VERSION,
            "command": self.command,
            "instance_digest": self.digest,
            "report": self.body,
        })
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut s = format!("coherence-lab {VERSION} ({SCHEMA})\ncommand: {}\n", self.command);
        if let Some(d) = &self.digest {
            let _ = writeln!(s, "instance sha256: {d}");
        }
        s.push('\n');
        s.push_str(&self.text);
        if !s.ends_with('\n') {
            s.push('\n');
        }
        s
    }
}

pub fn q(x: &Rational) -> Value {
    Value::String(format_rational(x))
}

fn qs(xs: &[Rational]) -> Value {
    Value::Array(xs.iter().map(q).collect())
}

fn fmt_vec(xs: &[Rational]) -> String {
    let parts: Vec<String> = xs.iter().map(format_rational).collect();
    format!("({})", parts.join(", "))
}

fn weights_json(instance: &DecisionInstance, w: &impl Weighted) -> Value {
    let map: Map<String, Value> = w
        .weights()
        .iter()
        .map(|(a, x)| (instance.act(*a).id.clone(), q(x)))
        .collect();
    Value::Object(map)
}

fn farkas_json(cert: &FarkasCertificate) -> Value {
    json!({
        "constraint_multipliers": qs(&cert.constraint_multipliers),
        "lower_multipliers": qs(&cert.lower_multipliers),
        "upper_multipliers": qs(&cert.upper_multipliers),
    })
}

fn describe_atoms(algebra: &EventAlgebra, set: AtomSet) -> String {
    algebra.describe(set)
}

pub fn violation_json(instance: &DecisionInstance, pair: &ViolationPair) -> Value {
    let per_state: Map<String, Value> = instance
        .states()
        .iter()
        .enumerate()
        .map(|(s, name)| {
            (
                name.clone(),
                json!({
                    "theta": q(&conditional_value(instance, &pair.theta, StateId(s))),
                    "eta": q(&conditional_value(instance, &pair.eta, StateId(s))),
                }),
            )
        })
        .collect();
    json!({
        "theta": weights_json(instance, &pair.theta),
        "eta": weights_json(instance, &pair.eta),
        "gap": q(&pair.gap),
        "conditional_values": per_state,
    })
}

pub fn violation_text(instance: &DecisionInstance, pair: &ViolationPair) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "  theta = {}", pair.theta.describe(instance));
    let _ = writeln!(s, "  eta   = {}", pair.eta.describe(instance));
    let _ = writeln!(s, "  value(eta) - value(theta) = {}", format_rational(&pair.gap));
    let _ = writeln!(s, "  {:<12} {:>12} {:>12}", "state", "u(theta|w)", "u(eta|w)");
    for (i, name) in instance.states().iter().enumerate() {
        let _ = writeln!(
            s,
            "  {:<12} {:>12} {:>12}",
            name,
            format_rational(&conditional_value(instance, &pair.theta, StateId(i))),
            format_rational(&conditional_value(instance, &pair.eta, StateId(i)))
        );
    }
    s
}

pub fn seu_json(rep: &SeuRepresentation) -> Value {
    let prior: Map<String, Value> = rep.atoms.iter().cloned().zip(rep.prior.iter().map(q)).collect();
    json!({"atoms": rep.atoms, "prior": prior, "bubble": "0"})
}

pub fn seu_text(rep: &SeuRepresentation) -> String {
    let mut s = String::from("SEU prior:\n");
    for (a, m) in rep.atoms.iter().zip(&rep.prior) {
        let _ = writeln!(s, "  {:<16} {}", a, format_rational(m));
    }
    s.push_str("  bubble term: 0\n");
    s
}

pub fn meu_json(instance: &DecisionInstance, rep: &MeuRepresentation) -> Value {
    let constraints: Vec<Value> = rep
        .constraints
        .iter()
        .map(|c| json!({"act": instance.act(c.act).id, "profile": qs(&c.profile), "bound": q(&c.bound)}))
        .collect();
    let minima: Map<String, Value> = rep
        .minima
        .iter()
        .map(|m| {
            (
                instance.act(m.act).id.clone(),
                json!({"minimum": q(&m.minimum), "witness": qs(&m.witness)}),
            )
        })
        .collect();
    let vertices = if rep.atoms.len() <= LISTED_VERTEX_ATOMS && !rep.is_empty() {
        Value::Array(rep.vertices().iter().map(|v| qs(v)).collect())
    } else {
        Value::Null
    };
    json!({
        "positive": rep.positive,
        "atoms": rep.atoms,
        "constraints": constraints,
        "vertices": vertices,
        "minima": minima,
        "mismatches": rep.mismatches.iter().map(|a| instance.act(*a).id.clone()).collect::<Vec<_>>(),
        "infeasibility": rep.infeasibility.as_ref().map(farkas_json),
    })
}

pub fn meu_text(instance: &DecisionInstance, rep: &MeuRepresentation) -> String {
    let mut s = format!(
        "Maxmin representation over Λ*: {}\n",
        if rep.positive { "yes" } else { "no" }
    );
    if rep.is_empty() {
        s.push_str("  Λ* is empty (infeasibility certificate in JSON output)\n");
        return s;
    }
    let _ = writeln!(s, "  atoms: {}", rep.atoms.join(", "));
    if rep.atoms.len() <= LISTED_VERTEX_ATOMS {
        s.push_str("  vertices of Λ*:\n");
        for v in rep.vertices() {
            let _ = writeln!(s, "    {}", fmt_vec(&v));
        }
    }
    s.push_str("  per-act minima:\n");
    for m in &rep.minima {
        let _ = writeln!(
            s,
            "    {:<12} min {:<8} V {:<8} at {}",
            instance.act(m.act).id,
            format_rational(&m.minimum),
            format_rational(instance.value(m.act)),
            fmt_vec(&m.witness)
        );
    }
    s
}

pub fn ceu_json(instance: &DecisionInstance, rep: &CeuRepresentation) -> Value {
    let algebra = rep.capacity.algebra();
    let choquet: Map<String, Value> = instance
        .acts()
        .iter()
        .zip(&rep.choquet)
        .map(|(a, c)| (a.id.clone(), q(c)))
        .collect();
    json!({
        "positive": rep.positive,
        "monotone": rep.monotone,
        "convex": rep.convex,
        "convexity_violation": rep.convexity_violation.map(|(a, b)| vec![describe_atoms(algebra, a), describe_atoms(algebra, b)]),
        "capacity": capacity_to_json(&rep.capacity),
        "choquet": choquet,
        "mismatches": rep.mismatches.iter().map(|a| instance.act(*a).id.clone()).collect::<Vec<_>>(),
    })
}

pub fn ceu_text(instance: &DecisionInstance, rep: &CeuRepresentation) -> String {
    let mut s = format!(
        "Choquet representation: {} (monotone {}, convex {})\n  capacity:\n",
        if rep.positive { "yes" } else { "no" },
        rep.monotone,
        rep.convex
    );
    for line in rep.capacity.to_string().lines() {
        let _ = writeln!(s, "    {line}");
    }
    if let Some((a, b)) = rep.convexity_violation {
        let alg = rep.capacity.algebra();
        let _ = writeln!(s, "  supermodularity fails at A = {}, B = {}", alg.describe(a), alg.describe(b));
    }
    s.push_str("  Choquet integral per act:\n");
    for (a, c) in instance.acts().iter().zip(&rep.choquet) {
        let _ = writeln!(s, "    {:<12} {:<8} V {}", a.id, format_rational(c), format_rational(&a.value));
    }
    s
}

fn certificate_json(instance: &DecisionInstance, cert: &Certificate) -> Value {
    match cert {
        Certificate::PairScan => json!({"kind": "pair_scan"}),
        Certificate::ZeroOptimum { programs } => json!({"kind": "zero_optimum", "programs": programs}),
        Certificate::Seu(rep) => json!({"kind": "seu", "seu": seu_json(rep)}),
        Certificate::Violation(v) => json!({"kind": "violation", "violation": violation_json(instance, v)}),
        Certificate::Unavailable(why) => json!({"kind": "unavailable", "reason": why}),
    }
}

pub fn verdict_json(instance: &DecisionInstance, v: &CoherenceVerdict) -> Value {
    json!({
        "grade": v.grade.name(),
        "holds": v.holds,
        "certificate": certificate_json(instance, &v.certificate),
    })
}

fn verdict_text(instance: &DecisionInstance, v: &CoherenceVerdict) -> String {
    let mut s = format!("  {:<7} {}\n", v.grade.name(), if v.holds { "holds" } else { "fails" });
    if let Certificate::Violation(pair) = &v.certificate {
        for line in violation_text(instance, pair).lines() {
            let _ = writeln!(s, "  {line}");
        }
    }
    s
}

pub fn validation_json(instance: &DecisionInstance, r: &ValidationReport) -> Value {
    let missing: Vec<Value> = r
        .missing
        .iter()
        .map(|m| json!({"set": instance.describe_set(m.set), "act": instance.act(m.act).id, "reference": m.reference.to_string()}))
        .collect();
    let violations: Vec<Value> = r
        .violations
        .iter()
        .map(|v| {
            json!({
                "set": instance.describe_set(v.set),
                "act": instance.act(v.act).id,
                "high_mixture": instance.act(v.high_mixture).id,
                "low_mixture": instance.act(v.low_mixture).id,
            })
        })
        .collect();
    json!({
        "passes": r.passes(),
        "references_ordered": r.references_ordered,
        "missing_mixtures": missing,
        "mixture_violations": violations,
    })
}

fn validation_text(instance: &DecisionInstance, r: &ValidationReport) -> String {
    let mut s = format!("Structure: {}\n", if r.passes() { "PASS" } else { "FAIL" });
    let _ = writeln!(s, "  (a) V(ref_high) > V(ref_low): {}", r.references_ordered);
    let _ = writeln!(s, "  (b) missing mixtures: {}", r.missing.len());
    for m in &r.missing {
        let _ = writeln!(s, "      A = {}, f = {}, with {}", instance.describe_set(m.set), instance.act(m.act).id, m.reference);
    }
    let _ = writeln!(s, "  (c) mixture order violations: {}", r.violations.len());
    for v in &r.violations {
        let _ = writeln!(
            s,
            "      A = {}, f = {}: V({}) < V({})",
            instance.describe_set(v.set),
            instance.act(v.act).id,
            instance.act(v.high_mixture).id,
            instance.act(v.low_mixture).id
        );
    }
    s
}

fn transform_json(t: &AffineTransform) -> Value {
    json!({"shift": q(&t.shift), "scale": q(&t.scale), "rate": q(&t.rate)})
}

/// Adds every missing truncation of every act at every attained level, valued
/// by the Choquet integral against `γ_V`. Needs the event algebra.
pub fn synthesize_truncations(instance: &DecisionInstance) -> Result<(DecisionInstance, Vec<String>), CoherenceError> {
    let algebra = derive_event_algebra(instance)?;
    let gamma = subjective_capacity(instance, &algebra)?;
    let mut extra: Vec<ActSpec> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for f in instance.act_ids() {
        let mut levels: Vec<Rational> = (0..instance.state_count())
            .map(|s| instance.utility(f, StateId(s)).abs())
            .collect();
        levels.push(Rational::zero());
        levels.sort();
        levels.dedup();
        for k in &levels {
            for mode in [TruncationMode::Upper, TruncationMode::Lower, TruncationMode::TwoSided] {
                let map = truncation_map(instance, f, k, mode);
                if instance.find_act(&map).is_some() || !seen.insert(map.clone()) {
                    continue;
                }
                let profile: Vec<Rational> = algebra
                    .atoms()
                    .iter()
                    .map(|a| {
                        let s = a.states().next().expect("atoms are nonempty");
                        instance.outcome_utility(map[s.0]).clone()
                    })
                    .collect();
                let value = choquet_integral(&gamma, &profile)?;
                extra.push(ActSpec {
                    id: format!("{}~{}@{}", instance.act(f).id, mode.name(), format_rational(k)),
                    outcomes: map.iter().map(|o| instance.outcomes()[o.0].id.clone()).collect(),
                    value,
                });
            }
        }
    }
    let names = extra.iter().map(|a| a.id.clone()).collect();
    Ok((instance.with_extra_acts(extra)?, names))
}

/// The instance every analysis runs on: normalized, and extended with
/// synthesized truncations when asked.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub instance: DecisionInstance,
    pub transform: AffineTransform,
    pub synthesized: Vec<String>,
}

pub fn prepare(instance: &DecisionInstance, synthesize: bool) -> Result<Prepared, CoherenceError> {
    let n = normalize(instance)?;
    let (instance, synthesized) = if synthesize {
        synthesize_truncations(&n.instance)?
    } else {
        (n.instance, Vec::new())
    };
    Ok(Prepared {
        instance,
        transform: n.transform,
        synthesized,
    })
}

fn prepared_json(p: &Prepared) -> Value {
    json!({"transform": transform_json(&p.transform), "synthesized_acts": p.synthesized})
}

fn prepared_text(p: &Prepared) -> String {
    let t = &p.transform;
    let mut s = format!(
        "Normalization: u -> {} + {}·u, V -> {} + {}·V\n",
        format_rational(&t.shift),
        format_rational(&t.scale),
        format_rational(&t.shift),
        format_rational(&(&t.rate * &t.scale))
    );
    if !p.synthesized.is_empty() {
        let _ = writeln!(s, "Synthesized truncations: {}", p.synthesized.join(", "));
    }
    s
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub clique_cap: usize,
    pub seed: u64,
    pub synthesize_truncations: bool,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub prepared: Prepared,
    pub validation: ValidationReport,
    pub ladder: Ladder,
    pub continuity: Option<bool>,
    pub unit_mass: CoherenceVerdict,
    pub scaling: Vec<ScalingSample>,
}

pub fn analyze(instance: &DecisionInstance, opts: AnalysisOptions) -> Result<Analysis, CoherenceError> {
    let prepared = prepare(instance, opts.synthesize_truncations)?;
    let inst = &prepared.instance;
    let validation = validate_structure(inst);
    let ladder = coherence_ladder(inst, opts.clique_cap)?;
    let continuity = ladder.ceu.as_ref().map(|c| check_continuity_surrogate(inst, &c.capacity));
    let unit_mass = check_full_coherence_unit_mass(inst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut scaling = Vec::with_capacity(SCALING_SAMPLES);
    for i in 0..SCALING_SAMPLES {
        let theta = random_gamble(&mut rng, inst, 3);
        let t = ratio(1 + (i % 4) as i64, 4);
        scaling.push(scaling_sample(inst, theta, t)?);
    }
    Ok(Analysis {
        prepared,
        validation,
        ladder,
        continuity,
        unit_mass,
        scaling,
    })
}

fn ladder_certificate(inst: &DecisionInstance, ladder: &Ladder) -> Value {
    match ladder.grade {
        Grade::Full => certificate_json(inst, &ladder.full.certificate),
        Grade::Theta1 => match &ladder.ceu {
            Some(c) => json!({"kind": "ceu", "ceu": ceu_json(inst, c)}),
            None => certificate_json(inst, &ladder.theta1.certificate),
        },
        Grade::Theta0 => match &ladder.meu {
            Some(m) => json!({"kind": "meu", "meu": meu_json(inst, m)}),
            None => certificate_json(inst, &ladder.theta0.certificate),
        },
        Grade::Simple => certificate_json(inst, &ladder.simple.certificate),
        Grade::None => certificate_json(inst, &ladder.simple.certificate),
    }
}

pub fn analysis_report(original: &DecisionInstance, a: &Analysis) -> Report {
    let inst = &a.prepared.instance;
    let l = &a.ladder;
    let verdicts = [&l.simple, &l.theta0, &l.theta1, &l.full];
    let violations: Vec<Value> = verdicts
        .iter()
        .filter_map(|v| v.violation().map(|p| json!({"grade": v.grade.name(), "pair": violation_json(inst, p)})))
        .collect();
    let ladder: Map<String, Value> = verdicts
        .iter()
        .map(|v| (v.grade.name().to_string(), verdict_json(inst, v)))
        .collect();
    let scaling_failures: Vec<Value> = a
        .scaling
        .iter()
        .filter(|s| !s.holds)
        .map(|s| {
            json!({
                "theta": weights_json(inst, &s.theta),
                "t": q(&s.t),
                "cost": q(&s.cost),
                "scaled_cost": q(&s.scaled_cost),
            })
        })
        .collect();
    let body = json!({
        "grade": l.grade.name(),
        "certificate": ladder_certificate(inst, l),
        "violations": violations,
        "ladder": ladder,
        "representations": {
            "seu": l.seu().map(seu_json),
            "meu": l.meu.as_ref().map(|m| meu_json(inst, m)),
            "ceu": l.ceu.as_ref().map(|c| ceu_json(inst, c)),
            "unavailable": l.representation_error,
        },
        "normalization": prepared_json(&a.prepared),
        "validation": validation_json(inst, &a.validation),
        "diagnostics": {
            "continuity_surrogate": a.continuity,
            "unit_mass_full_coherence": a.unit_mass.holds,
            "scaling_samples": a.scaling.len(),
            "scaling_failures": scaling_failures,
        },
        "instance": crate::io::instance_to_json(inst),
    });

    let mut s = format!("Grade: {}\n\n", l.grade.name());
    s.push_str("Grade ladder:\n");
    for v in verdicts.iter().rev() {
        s.push_str(&verdict_text(inst, v));
    }
    s.push('\n');
    if let Some(seu) = l.seu() {
        s.push_str(&seu_text(seu));
        s.push('\n');
    }
    if let Some(m) = &l.meu {
        s.push_str(&meu_text(inst, m));
        s.push('\n');
    }
    if let Some(c) = &l.ceu {
        s.push_str(&ceu_text(inst, c));
        s.push('\n');
    }
    if let Some(why) = &l.representation_error {
        let _ = writeln!(s, "Representations unavailable: {why}\n");
    }
    s.push_str(&prepared_text(&a.prepared));
    s.push_str(&validation_text(inst, &a.validation));
    let _ = writeln!(
        s,
        "Diagnostics: continuity surrogate {}, unit-mass full coherence {}, scaling clause {}/{} samples hold",
        a.continuity.map_or("n/a".to_string(), |b| b.to_string()),
        a.unit_mass.holds,
        a.scaling.iter().filter(|x| x.holds).count(),
        a.scaling.len()
    );
    Report {
        command: "analyze".into(),
        digest: Some(instance_digest(original)),
        body,
        text: s,
    }
}

pub fn validate_report(instance: &DecisionInstance) -> Report {
    let r = validate_structure(instance);
    let algebra = derive_event_algebra(instance);
    let normalized = normalize(instance);
    let continuity = algebra.as_ref().ok().and_then(|alg| {
        let n = normalized.as_ref().ok()?;
        let cap = subjective_capacity(&n.instance, alg).ok()?;
        Some(check_continuity_surrogate(&n.instance, &cap))
    });
    let body = json!({
        "structure": validation_json(instance, &r),
        "atoms": algebra.as_ref().ok().map(|a| a.labels().to_vec()),
        "algebra_error": algebra.as_ref().err().map(ToString::to_string),
        "normalization": match &normalized {
            Ok(n) => json!({"transform": transform_json(&n.transform)}),
            Err(e) => json!({"error": e.to_string()}),
        },
        "continuity_surrogate": continuity,
        "instance": crate::io::instance_to_json(instance),
    });
    let mut s = validation_text(instance, &r);
    match &algebra {
        Ok(a) => {
            let _ = writeln!(s, "Event algebra atoms: {}", a.labels().join(" "));
        }
        Err(e) => {
            let _ = writeln!(s, "Event algebra: {e}");
        }
    }
    match &normalized {
        Ok(n) => {
            let t = &n.transform;
            let _ = writeln!(
                s,
                "Normalization: shift {}, scale {}, rate {}",
                format_rational(&t.shift),
                format_rational(&t.scale),
                format_rational(&t.rate)
            );
        }
        Err(e) => {
            let _ = writeln!(s, "Normalization: {e}");
        }
    }
    if let Some(c) = continuity {
        let _ = writeln!(s, "Continuity surrogate: {c}");
    }
    Report {
        command: "validate".into(),
        digest: Some(instance_digest(instance)),
        body,
        text: s,
    }
}

fn with_prepared(command: &str, original: &DecisionInstance, p: &Prepared, mut body: Value, mut text: String) -> Report {
    body["normalization"] = prepared_json(p);
    text.push('\n');
    text.push_str(&prepared_text(p));
    Report {
        command: command.into(),
        digest: Some(instance_digest(original)),
        body,
        text,
    }
}

pub fn seu_report(original: &DecisionInstance, p: &Prepared) -> Result<Report, CoherenceError> {
    let inst = &p.instance;
    let verdict = crate::coherence::check_full_coherence(inst)?;
    let (body, text) = match &verdict.certificate {
        Certificate::Seu(rep) => (json!({"representable": true, "seu": seu_json(rep)}), seu_text(rep)),
        Certificate::Violation(pair) => (
            json!({"representable": false, "violation": violation_json(inst, pair)}),
            format!("No expected-utility representation; full coherence fails:\n{}", violation_text(inst, pair)),
        ),
        other => (
            json!({"representable": verdict.holds, "certificate": certificate_json(inst, other)}),
            format!("Full coherence {}; no prior could be read off\n", if verdict.holds { "holds" } else { "fails" }),
        ),
    };
    Ok(with_prepared("seu", original, p, body, text))
}

pub fn meu_report(original: &DecisionInstance, p: &Prepared) -> Result<Report, CoherenceError> {
    let rep = crate::coherence::extract_meu(&p.instance)?;
    Ok(with_prepared("meu", original, p, meu_json(&p.instance, &rep), meu_text(&p.instance, &rep)))
}

pub fn ceu_report(original: &DecisionInstance, p: &Prepared) -> Result<Report, CoherenceError> {
    let rep = crate::coherence::extract_ceu(&p.instance)?;
    Ok(with_prepared("ceu", original, p, ceu_json(&p.instance, &rep), ceu_text(&p.instance, &rep)))
}

fn pair_list(instance: &DecisionInstance, pairs: &[((crate::instance::ActId, crate::instance::ActId), Rational)]) -> Value {
    Value::Array(
        pairs
            .iter()
            .map(|((a, b), w)| json!({"from": instance.act(*a).id, "to": instance.act(*b).id, "weight": q(w)}))
            .collect(),
    )
}

pub fn arbitrage_json(instance: &DecisionInstance, v: &ArbitrageVerdict) -> Value {
    match &v.certificate {
        ArbitrageCertificate::NoArbitrage(cert) => json!({"ok": true, "farkas": farkas_json(cert)}),
        ArbitrageCertificate::Arbitrage(d) => json!({
            "ok": false,
            "decomposition": {
                "zeta": weights_json(instance, &d.zeta),
                "rho": pair_list(instance, &d.rho),
                "pi": pair_list(instance, &d.pi),
            }
        }),
    }
}

pub fn arbitrage_report(original: &DecisionInstance, p: &Prepared) -> Result<Report, CoherenceError> {
    let inst = &p.instance;
    let v = check_no_arbitrage(inst)?;
    let mut s = String::new();
    match &v.certificate {
        ArbitrageCertificate::NoArbitrage(_) => s.push_str("No arbitrage: the cone program is infeasible (Farkas certificate in JSON output)\n"),
        ArbitrageCertificate::Arbitrage(d) => {
            s.push_str("Arbitrage found: zeta = rho + pi with 0 ≥_u zeta\n");
            let _ = writeln!(s, "  zeta = {}", d.zeta.describe(inst));
            for (label, pairs) in [("rho", &d.rho), ("pi", &d.pi)] {
                for ((a, b), w) in pairs.iter() {
                    let _ = writeln!(s, "  {label}: {} · (δ_{} − δ_{})", format_rational(w), inst.act(*b).id, inst.act(*a).id);
                }
            }
        }
    }
    Ok(with_prepared("arbitrage", original, p, arbitrage_json(inst, &v), s))
}

pub fn repair_json(instance: &DecisionInstance, r: &RepairResult) -> Value {
    let certificate = match &r.certificate {
        None => Value::Null,
        Some(RepairCertificate::Infeasible(c)) => json!({"kind": "infeasible", "farkas": farkas_json(c)}),
        Some(RepairCertificate::NonPositiveMargin { optimum, dual }) => {
            json!({"kind": "non_positive_margin", "optimum": q(optimum), "dual": qs(dual)})
        }
    };
    let new_values: Map<String, Value> = instance
        .acts()
        .iter()
        .zip(&r.new_values)
        .map(|(a, v)| (a.id.clone(), q(v)))
        .collect();
    let prior: Map<String, Value> = r.atoms.iter().cloned().zip(r.prior.iter().map(q)).collect();
    json!({
        "status": match r.status { RepairStatus::Repaired => "repaired", RepairStatus::Impossible => "impossible" },
        "prior": prior,
        "new_values": new_values,
        "gap": q(&r.gap),
        "certificate": certificate,
    })
}

pub fn repair_report(original: &DecisionInstance, p: &Prepared) -> Result<Report, CoherenceError> {
    let inst = &p.instance;
    let r = crate::arbitrage::repair_representation(inst)?;
    let mut s = String::new();
    match r.status {
        RepairStatus::Repaired => {
            let _ = writeln!(s, "Repaired with margin {}", format_rational(&r.gap));
            s.push_str("  prior:\n");
            for (a, m) in r.atoms.iter().zip(&r.prior) {
                let _ = writeln!(s, "    {:<16} {}", a, format_rational(m));
            }
            s.push_str("  values:\n");
            for (a, v) in inst.acts().iter().zip(&r.new_values) {
                let _ = writeln!(s, "    {:<12} {:<8} was {}", a.id, format_rational(v), format_rational(&a.value));
            }
        }
        RepairStatus::Impossible => {
            let _ = writeln!(s, "No order-equivalent expected-utility repair (best margin {})", format_rational(&r.gap));
        }
    }
    Ok(with_prepared("repair", original, p, repair_json(inst, &r), s))
}

pub fn capacity_report(cap: &Capacity, atom_cap: usize) -> Result<Report, CapacityError> {
    let alg = cap.algebra();
    let n = cap.atom_count();
    let core = core_polytope(cap, n <= MAX_VERTEX_ATOMS)?;
    let partition = partition_axiom_check(cap, atom_cap)?;
    let null_p = null_equivalent_probability(cap);
    let violation = convexity_violation(cap);
    let witnesses: Vec<Value> = partition
        .witnesses
        .iter()
        .map(|w| {
            json!({
                "set": alg.describe(w.set),
                "threshold": w.threshold,
                "vacuous": w.vacuous,
                "failing_partition": w.failing_partition.as_ref().map(|p| p.iter().map(|c| alg.describe(*c)).collect::<Vec<_>>()),
            })
        })
        .collect();
    let body = json!({
        "capacity": capacity_to_json(cap),
        "additive": cap.is_additive(),
        "convex": violation.is_none(),
        "convexity_violation": violation.map(|(a, b)| vec![alg.describe(a), alg.describe(b)]),
        "core": {
            "constraints": core.constraints.len(),
            "vertices": core.vertices.as_ref().map(|vs| vs.iter().map(|v| qs(v)).collect::<Vec<_>>()),
        },
        "partition_axiom": {
            "holds": partition.holds,
            "holds_non_vacuously": partition.holds_non_vacuously,
            "witnesses": witnesses,
        },
        "null_equivalent_probability": null_p.as_ref().map(|p| qs(p)),
    });
    let mut s = String::from("Capacity:\n");
    for line in cap.to_string().lines() {
        let _ = writeln!(s, "  {line}");
    }
    let _ = writeln!(s, "additive: {}, convex: {}", cap.is_additive(), violation.is_none());
    match &core.vertices {
        Some(vs) if vs.is_empty() => s.push_str("core: empty\n"),
        Some(vs) => {
            let _ = writeln!(s, "core vertices ({}):", vs.len());
            for v in vs {
                let _ = writeln!(s, "  {}", fmt_vec(v));
            }
        }
        None => {
            let _ = writeln!(s, "core: {} constraints (vertices not enumerated)", core.constraints.len());
        }
    }
    let _ = writeln!(
        s,
        "partition axiom: holds {} (non-vacuously {})",
        partition.holds, partition.holds_non_vacuously
    );
    for w in &partition.witnesses {
        let _ = writeln!(
            s,
            "  B = {:<12} every partition with ≥ {} cells passes{}",
            alg.describe(w.set),
            w.threshold,
            if w.vacuous { " (vacuously)" } else { "" }
        );
    }
    match &null_p {
        Some(p) => {
            let _ = writeln!(s, "null-equivalent probability: {}", fmt_vec(p));
        }
        None => s.push_str("null-equivalent probability: none\n"),
    }
    Ok(Report {
        command: "capacity".into(),
        digest: None,
        body,
        text: s,
    })
}

/// Smallest integer bounding `|profile|`.
fn integer_bound(profile: &[Rational]) -> u64 {
    profile
        .iter()
        .map(|x| x.abs().ceil().to_integer())
        .max()
        .and_then(|b| u64::try_from(b).ok())
        .unwrap_or(0)
        .max(1)
}

pub fn choquet_report(cap: &Capacity, profile: &[Rational], grid_exponent: u32) -> Result<Report, CapacityError> {
    let value = choquet_integral(cap, profile)?;
    let layers = choquet_layers(cap, profile)?;
    let shifted = choquet_shifted(cap, profile)?;
    let k = integer_bound(profile);
    let grid = choquet_grid(cap, profile, grid_exponent, k)?;
    let convex = convexity_violation(cap).is_none();
    let core_min = if convex { core_minimum(cap, profile)? } else { None };
    let body = json!({
        "profile": qs(profile),
        "choquet": q(&value),
        "layers": q(&layers),
        "shifted": q(&shifted),
        "grid": {"n": grid_exponent, "k": k, "value": q(&grid), "error": q(&(&value - &grid))},
        "convex": convex,
        "core_minimum": core_min.as_ref().map(|(v, w)| json!({"value": q(v), "witness": qs(w)})),
    });
    let mut s = format!("Choquet integral of {}: {}\n", fmt_vec(profile), format_rational(&value));
    let _ = writeln!(s, "  sorted layers {}, shifted form {}", format_rational(&layers), format_rational(&shifted));
    let _ = writeln!(s, "  grid sum (n = {grid_exponent}, k = {k}): {}", format_rational(&grid));
    if let Some((v, w)) = &core_min {
        let _ = writeln!(s, "  core minimum {} at {}", format_rational(v), fmt_vec(w));
    }
    Ok(Report {
        command: "choquet".into(),
        digest: None,
        body,
        text: s,
    })
}

pub fn submeasure_report(cap: &Capacity, atom_cap: usize) -> Result<Report, CapacityError> {
    let w = submeasure_equivalent(cap, atom_cap)?;
    let verified = verify_submeasure(cap, &w.submeasure);
    let body = json!({
        "submeasure": capacity_to_json(&w.submeasure),
        "margin": q(&w.margin),
        "verified": verified.is_ok(),
        "verification_error": verified.as_ref().err(),
    });
    let mut s = format!("Order-equivalent submeasure (margin {}):\n", format_rational(&w.margin));
    for line in w.submeasure.to_string().lines() {
        let _ = writeln!(s, "  {line}");
    }
    let _ = writeln!(s, "re-verified: {}", verified.is_ok());
    Ok(Report {
        command: "submeasure".into(),
        digest: None,
        body,
        text: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::gamble::DEFAULT_CLIQUE_CAP;
    use crate::rational::int;

    fn opts() -> AnalysisOptions {
        AnalysisOptions {
            clique_cap: DEFAULT_CLIQUE_CAP,
            seed: 0,
            synthesize_truncations: false,
        }
    }

    #[test]
    fn e1_report_has_prior() {
        let e1 = fixtures::e1();
        let a = analyze(&e1, opts()).unwrap();
        let r = analysis_report(&e1, &a);
        assert_eq!(r.body["grade"], "FULL");
        assert_eq!(r.body["certificate"]["seu"]["prior"]["w1"], "3/10");
        assert!(r.render_text().contains("SEU prior:"));
    }

    #[test]
    fn e2_text_shows_the_violation() {
        let e2 = fixtures::e2();
        let a = analyze(&e2, opts()).unwrap();
        let text = analysis_report(&e2, &a).render_text();
        assert!(text.contains("u(theta|w)"));
        assert!(text.contains("FULL    fails"));
    }

    #[test]
    fn json_is_deterministic() {
        let e3 = fixtures::e3();
        let a = analysis_report(&e3, &analyze(&e3, opts()).unwrap()).render_json();
        let b = analysis_report(&e3, &analyze(&e3, opts()).unwrap()).render_json();
        assert_eq!(a, b);
        assert!(a.contains("\"schema\": \"coherence-lab/1\""));
    }

    #[test]
    fn truncations_are_synthesized_from_the_capacity() {
        let e4 = fixtures::e4_unclosed();
        let (ext, names) = synthesize_truncations(&e4).unwrap();
        // h1 = (1, 1/2, 0): upper at 1/2 gives (0, 1/2, 0), valued γ({2})/2 = 1/18.
        let id = ext.act_by_name("h1~upper@1/2").unwrap();
        assert_eq!(*ext.value(id), ratio(1, 18));
        assert!(names.contains(&"h1~upper@1/2".to_string()));
        assert!(synthesize_truncations(&fixtures::e1()).unwrap().1.is_empty());
    }

    #[test]
    fn unnormalized_instances_are_rescaled() {
        let inst = fixtures::boundary_instance(int(4), int(10), int(2), int(5));
        let p = prepare(&inst, false).unwrap();
        assert_eq!(p.transform.scale, ratio(1, 6));
        assert_eq!(p.transform.rate, int(2));
    }
}
