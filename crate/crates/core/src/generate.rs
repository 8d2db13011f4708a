//! Seeded random instances, capacities, profiles and gambles for property checks.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::capacity::{choquet_integral, AtomSet, Capacity};
use crate::gamble::{Gamble, Weighted};
use crate::instance::{validate_structure, ActId, ActSpec, DecisionInstance, EventAlgebra, Outcome};
use crate::rational::{int, ratio, Rational};

/// Utility levels used by generated instances: `x0 ↦ 0`, `xh ↦ 1/2`, `x1 ↦ 1`.
const LEVELS: [&str; 3] = ["x0", "xh", "x1"];

fn level_utility(l: u8) -> Rational {
    ratio(l as i64, 2)
}

#[derive(Debug, Clone, Copy)]
pub struct InstanceShape {
    pub max_states: usize,
    /// Seed acts beyond the splices; each is closed under `ȳA·` and `x̄A·`.
    pub max_extra: usize,
}

/// How `V` was produced, kept for logging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMode {
    Expected,
    Maxmin,
    Choquet,
    Monotone,
    Rough,
    Perturbed,
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: DecisionInstance,
    pub mode: ValueMode,
}

fn state_count(rng: &mut impl Rng, max: usize) -> usize {
    let max = max.max(1);
    if max == 1 || rng.gen_ratio(1, 10) {
        1
    } else {
        rng.gen_range(2..=max)
    }
}

/// Splices, the seed acts, and every map agreeing with one seed off a set
/// where it is replaced by `x0` or `x1`.
fn act_maps(rng: &mut impl Rng, n: usize, extra: usize) -> Vec<Vec<u8>> {
    let mut maps: BTreeSet<Vec<u8>> = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        maps.insert((0..n).map(|s| if mask >> s & 1 == 1 { 2 } else { 0 }).collect());
    }
    for _ in 0..extra {
        let mut seed: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        if !seed.contains(&1) {
            let s = rng.gen_range(0..n);
            seed[s] = 1;
        }
        let mut layer = vec![Vec::new()];
        for &l in &seed {
            let choices: Vec<u8> = if l == 1 { vec![0, 1, 2] } else { vec![0, 2] };
            layer = layer
                .into_iter()
                .flat_map(|p: Vec<u8>| {
                    choices.iter().map(move |c| {
                        let mut q = p.clone();
                        q.push(*c);
                        q
                    })
                })
                .collect();
        }
        maps.extend(layer);
    }
    let mut out: Vec<Vec<u8>> = maps.into_iter().collect();
    // Keep references first so their names are stable.
    out.sort_by_key(|m| (m.iter().map(|l| *l as u32).sum::<u32>(), m.clone()));
    out
}

fn act_name(map: &[u8]) -> String {
    if map.iter().all(|l| *l == 0) {
        "xbar".into()
    } else if map.iter().all(|l| *l == 2) {
        "ybar".into()
    } else {
        let digits: String = map.iter().map(|l| char::from(b'0' + l)).collect();
        format!("a{digits}")
    }
}

/// Random prior on `n` points with weights on the grid of sixths, zeros allowed.
pub fn random_prior(rng: &mut impl Rng, n: usize) -> Vec<Rational> {
    loop {
        let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=6)).collect();
        let total: i64 = raw.iter().sum();
        if total > 0 {
            return raw.into_iter().map(|r| ratio(r, total)).collect();
        }
    }
}

fn discrete_algebra(n: usize) -> EventAlgebra {
    EventAlgebra::discrete((1..=n).map(|i| i.to_string()).collect())
}

/// Monotone normalized capacity on `n` atoms with values on the grid `1/denom`.
/// A quarter of the sets copy their largest subset value, so null and flat sets occur.
pub fn random_monotone_capacity(rng: &mut impl Rng, n: usize, denom: i64) -> Capacity {
    let full = (1u32 << n) - 1;
    let mut values = vec![Rational::zero(); 1 << n];
    let mut order: Vec<u32> = (1..=full).collect();
    order.sort_by_key(|m| m.count_ones());
    for mask in order {
        if mask == full {
            values[mask as usize] = int(1);
            continue;
        }
        let lb = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| values[(mask & !(1 << i)) as usize].clone())
            .max()
            .unwrap_or_else(Rational::zero);
        values[mask as usize] = if rng.gen_ratio(1, 4) {
            lb
        } else {
            let lo = (&lb * int(denom)).ceil().to_integer();
            let k: i64 = rng.gen_range(lo.try_into().unwrap_or(0)..=denom);
            ratio(k, denom)
        };
    }
    Capacity::new(discrete_algebra(n), values).expect("generated capacity is monotone and normalized")
}

/// Belief function from random nonnegative Möbius masses; always convex.
pub fn random_convex_capacity(rng: &mut impl Rng, n: usize) -> Capacity {
    let sets: Vec<AtomSet> = AtomSet::all(n).filter(|s| !s.is_empty()).collect();
    let masses = loop {
        let raw: Vec<i64> = sets.iter().map(|_| if rng.gen_bool(0.5) { 0 } else { rng.gen_range(1..=4) }).collect();
        let total: i64 = raw.iter().sum();
        if total > 0 {
            break raw.into_iter().map(|r| ratio(r, total)).collect::<Vec<_>>();
        }
    };
    Capacity::from_fn(discrete_algebra(n), |a| {
        sets.iter()
            .zip(&masses)
            .filter(|(b, _)| b.is_subset(a))
            .map(|(_, m)| m.clone())
            .sum()
    })
    .expect("belief functions are capacities")
}

fn expected(prior: &[Rational], profile: &[Rational]) -> Rational {
    prior.iter().zip(profile).map(|(m, u)| m * u).sum()
}

fn assign_values(rng: &mut impl Rng, n: usize, profiles: &[Vec<Rational>]) -> (ValueMode, Vec<Rational>) {
    let roll = rng.gen_range(0..100);
    let mode = match roll {
        0..=19 => ValueMode::Expected,
        20..=39 => ValueMode::Maxmin,
        40..=59 => ValueMode::Choquet,
        60..=74 => ValueMode::Monotone,
        75..=84 => ValueMode::Rough,
        _ => ValueMode::Perturbed,
    };
    let values = match mode {
        ValueMode::Expected => {
            let p = random_prior(rng, n);
            profiles.iter().map(|u| expected(&p, u)).collect()
        }
        ValueMode::Maxmin => {
            let priors: Vec<Vec<Rational>> = (0..rng.gen_range(1..=3)).map(|_| random_prior(rng, n)).collect();
            profiles
                .iter()
                .map(|u| priors.iter().map(|p| expected(p, u)).min().expect("at least one prior"))
                .collect()
        }
        ValueMode::Choquet => {
            let cap = random_monotone_capacity(rng, n, 6);
            profiles
                .iter()
                .map(|u| choquet_integral(&cap, u).expect("profile matches the atoms"))
                .collect()
        }
        ValueMode::Monotone => monotone_values(rng, profiles),
        ValueMode::Rough => profiles
            .iter()
            .map(|u| {
                if u.iter().all(Zero::is_zero) {
                    int(0)
                } else if u.iter().all(|x| *x == int(1)) {
                    int(1)
                } else {
                    ratio(rng.gen_range(0..=6), 6)
                }
            })
            .collect(),
        ValueMode::Perturbed => {
            let p = random_prior(rng, n);
            let mut v: Vec<Rational> = profiles.iter().map(|u| expected(&p, u)).collect();
            let movable: Vec<usize> = (0..profiles.len())
                .filter(|i| !profiles[*i].iter().all(Zero::is_zero) && !profiles[*i].iter().all(|x| *x == int(1)))
                .collect();
            if let Some(&i) = movable.choose(rng) {
                let step = if rng.gen_bool(0.5) { ratio(1, 6) } else { ratio(-1, 6) };
                v[i] += step;
            }
            v
        }
    };
    (mode, values)
}

/// Values on the grid of sixths that never decrease along pointwise dominance.
fn monotone_values(rng: &mut impl Rng, profiles: &[Vec<Rational>]) -> Vec<Rational> {
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by_key(|i| profiles[*i].iter().sum::<Rational>());
    let mut values = vec![Rational::zero(); profiles.len()];
    let mut done: Vec<usize> = Vec::new();
    for i in order {
        let is_top = profiles[i].iter().all(|x| *x == int(1));
        let lb = done
            .iter()
            .filter(|j| profiles[**j].iter().zip(&profiles[i]).all(|(a, b)| a <= b))
            .map(|j| values[*j].clone())
            .max()
            .unwrap_or_else(Rational::zero);
        values[i] = if profiles[i].iter().all(Zero::is_zero) {
            int(0)
        } else if is_top {
            int(1)
        } else {
            let lo: i64 = (&lb * int(6)).ceil().to_integer().try_into().unwrap_or(0);
            ratio(rng.gen_range(lo..=6), 6)
        };
        done.push(i);
    }
    values
}

/// A normalized instance over outcomes with utilities `{0, 1/2, 1}` that
/// passes [`validate_structure`]. Draws are repeated until one passes.
pub fn random_instance(rng: &mut impl Rng, shape: InstanceShape) -> GeneratedInstance {
    loop {
        let n = state_count(rng, shape.max_states);
        let extra = rng.gen_range(0..=shape.max_extra);
        let maps = act_maps(rng, n, extra);
        let profiles: Vec<Vec<Rational>> = maps.iter().map(|m| m.iter().map(|l| level_utility(*l)).collect()).collect();
        let (mode, values) = assign_values(rng, n, &profiles);
        let specs = maps
            .iter()
            .zip(values)
            .map(|(m, v)| ActSpec {
                id: act_name(m),
                outcomes: m.iter().map(|l| LEVELS[*l as usize].to_string()).collect(),
                value: v,
            })
            .collect();
        let outcomes = LEVELS
            .iter()
            .enumerate()
            .map(|(i, id)| Outcome {
                id: id.to_string(),
                utility: level_utility(i as u8),
            })
            .collect();
        let states = (1..=n).map(|i| format!("w{i}")).collect();
        let instance = DecisionInstance::new(states, outcomes, specs, "xbar", "ybar")
            .expect("generated instance is well formed");
        if validate_structure(&instance).passes() {
            return GeneratedInstance { instance, mode };
        }
    }
}

/// Profile on `n` atoms with entries `k/denom`, `|k| ≤ range·denom`.
pub fn random_profile(rng: &mut impl Rng, n: usize, denom: i64, range: i64) -> Vec<Rational> {
    (0..n)
        .map(|_| ratio(rng.gen_range(-range * denom..=range * denom), denom))
        .collect()
}

/// Gamble on up to `max_support` acts with total mass `j/12`, `1 ≤ j ≤ 12`.
pub fn random_gamble(rng: &mut impl Rng, instance: &DecisionInstance, max_support: usize) -> Gamble {
    let ids: Vec<ActId> = instance.act_ids().collect();
    let k = rng.gen_range(1..=max_support.clamp(1, ids.len()));
    let support: Vec<ActId> = ids.choose_multiple(rng, k).copied().collect();
    let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
    let total: i64 = raw.iter().sum();
    let mass = ratio(rng.gen_range(1..=12), 12);
    Gamble::new(support.into_iter().zip(raw).map(|(a, r)| (a, ratio(r, total) * &mass)))
        .expect("weights are positive with mass at most one")
}

/// Moves weight between acts of equal value, which leaves the payoff unchanged.
pub fn redistribute(rng: &mut impl Rng, instance: &DecisionInstance, theta: &Gamble) -> Gamble {
    let mut classes: BTreeMap<Rational, Rational> = BTreeMap::new();
    for (a, w) in theta.weights() {
        *classes.entry(instance.value(*a).clone()).or_insert_with(Rational::zero) += w;
    }
    let mut weights = Vec::new();
    for (v, mass) in classes {
        let members: Vec<ActId> = instance.act_ids().filter(|a| *instance.value(*a) == v).collect();
        let k = rng.gen_range(1..=members.len());
        let chosen: Vec<ActId> = members.choose_multiple(rng, k).copied().collect();
        let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=5)).collect();
        let total: i64 = raw.iter().sum();
        weights.extend(chosen.into_iter().zip(raw).map(|(a, r)| (a, ratio(r, total) * &mass)));
    }
    Gamble::new(weights).expect("redistribution keeps the mass")
}
