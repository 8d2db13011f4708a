//! Small hand-built instances shared by tests, examples and the CLI docs.

use crate::instance::{ActSpec, DecisionInstance, Outcome};
use crate::rational::{int, ratio, Rational};

fn outcome(id: &str, u: Rational) -> Outcome {
    Outcome {
        id: id.to_string(),
        utility: u,
    }
}

fn act(id: &str, outcomes: &[&str], value: Rational) -> ActSpec {
    ActSpec {
        id: id.to_string(),
        outcomes: outcomes.iter().map(|s| s.to_string()).collect(),
        value,
    }
}

/// Two states, two outcomes, all four acts; `V(f) = vf`, `V(g) = vg`.
pub fn two_state(vf: Rational, vg: Rational) -> DecisionInstance {
    DecisionInstance::new(
        vec!["w1".into(), "w2".into()],
        vec![outcome("x0", int(0)), outcome("x1", int(1))],
        vec![
            act("xbar", &["x0", "x0"], int(0)),
            act("f", &["x1", "x0"], vf),
            act("g", &["x0", "x1"], vg),
            act("ybar", &["x1", "x1"], int(1)),
        ],
        "xbar",
        "ybar",
    )
    .expect("two-state fixture is well formed")
}

/// Additive: `V(f) = 3/10`, `V(g) = 7/10`.
pub fn e1() -> DecisionInstance {
    two_state(ratio(3, 10), ratio(7, 10))
}

/// `V(f) + V(g) = 7/10 < 1`.
pub fn e2() -> DecisionInstance {
    two_state(ratio(3, 10), ratio(2, 5))
}

/// `V(f) = V(g) = 3/10`.
pub fn e3() -> DecisionInstance {
    two_state(ratio(3, 10), ratio(3, 10))
}

const E4_STATES: [&str; 3] = ["1", "2", "3"];

fn e4_outcomes() -> Vec<Outcome> {
    vec![outcome("x0", int(0)), outcome("xh", ratio(1, 2)), outcome("x1", int(1))]
}

fn e4_splices() -> Vec<ActSpec> {
    (0u32..8)
        .map(|mask| {
            let map: Vec<&str> = (0..3).map(|s| if mask >> s & 1 == 1 { "x1" } else { "x0" }).collect();
            let k = mask.count_ones() as i64;
            let id = match mask {
                0 => "xbar".to_string(),
                7 => "ybar".to_string(),
                _ => {
                    let members: String = (0..3).filter(|s| mask >> s & 1 == 1).map(|s| E4_STATES[s]).collect();
                    format!("s{members}")
                }
            };
            act(&id, &map, ratio(k * k, 9))
        })
        .collect()
}

fn e4_build(acts: Vec<ActSpec>) -> DecisionInstance {
    DecisionInstance::new(
        E4_STATES.iter().map(|s| s.to_string()).collect(),
        e4_outcomes(),
        acts,
        "xbar",
        "ybar",
    )
    .expect("E4 fixture is well formed")
}

/// Three states, `γ_V(A) = (|A|/3)²`, and `h1 = (1, 1/2, 0)` valued at its Choquet
/// integral. The three other `(a, 1/2, b)` acts are included so that every
/// mixture `ȳAf`, `x̄Af` is present.
pub fn e4() -> DecisionInstance {
    let mut acts = e4_splices();
    acts.push(act("h1", &["x1", "xh", "x0"], ratio(5, 18)));
    acts.push(act("m00", &["x0", "xh", "x0"], ratio(1, 18)));
    acts.push(act("m01", &["x0", "xh", "x1"], ratio(5, 18)));
    acts.push(act("m11", &["x1", "xh", "x1"], ratio(13, 18)));
    e4_build(acts)
}

/// The eight splices and `h1` only.
pub fn e4_unclosed() -> DecisionInstance {
    let mut acts = e4_splices();
    acts.push(act("h1", &["x1", "xh", "x0"], ratio(5, 18)));
    e4_build(acts)
}

/// One state and the two reference acts with the given boundary utilities and values.
pub fn boundary_instance(u_low: Rational, u_high: Rational, v_low: Rational, v_high: Rational) -> DecisionInstance {
    DecisionInstance::new(
        vec!["w".into()],
        vec![outcome("lo", u_low), outcome("hi", u_high)],
        vec![act("xbar", &["lo"], v_low), act("ybar", &["hi"], v_high)],
        "xbar",
        "ybar",
    )
    .expect("boundary fixture is well formed")
}

/// The 121 two-state instances with `V(f), V(g) ∈ {0, 1/10, …, 1}`.
pub fn tenths_grid() -> Vec<(Rational, Rational, DecisionInstance)> {
    let mut out = Vec::with_capacity(121);
    for i in 0..=10 {
        for j in 0..=10 {
            let (vf, vg) = (ratio(i, 10), ratio(j, 10));
            out.push((vf.clone(), vg.clone(), two_state(vf, vg)));
        }
    }
    out
}
