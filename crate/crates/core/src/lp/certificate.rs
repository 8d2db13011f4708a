//! Substitution checks for solver certificates.
//!
//! Nothing here looks at the tableau; every check works directly on the
//! [`LinearProgram`] as the caller stated it.

use num_traits::{Signed, Zero};

use super::{FarkasCertificate, LinearProgram, OptimalSolution, Relation, Sense, UnboundedRay};
use crate::rational::{format_rational, Rational};

fn fail(msg: impl Into<String>) -> Result<(), String> {
    Err(msg.into())
}

/// Every row and bound holds exactly at `point`.
pub fn verify_feasible(lp: &LinearProgram, point: &[Rational]) -> Result<(), String> {
    if point.len() != lp.variables.len() {
        return fail("point has the wrong dimension");
    }
    for (j, var) in lp.variables.iter().enumerate() {
        if var.lower.as_ref().is_some_and(|l| &point[j] < l) {
            return fail(format!("variable {} below its lower bound", var.name));
        }
        if var.upper.as_ref().is_some_and(|u| &point[j] > u) {
            return fail(format!("variable {} above its upper bound", var.name));
        }
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        let lhs = LinearProgram::dot(&c.coeffs, point);
        let ok = match c.relation {
            Relation::Le => lhs <= c.rhs,
            Relation::Ge => lhs >= c.rhs,
            Relation::Eq => lhs == c.rhs,
        };
        if !ok {
            return fail(format!(
                "constraint {i} violated: lhs {} vs rhs {}",
                format_rational(&lhs),
                format_rational(&c.rhs)
            ));
        }
    }
    Ok(())
}

/// Sign a multiplier must carry in the maximization convention:
/// `Some(true)` for `≥ 0`, `Some(false)` for `≤ 0`, `None` when free.
fn max_sign(relation: Relation) -> Option<bool> {
    match relation {
        Relation::Le => Some(true),
        Relation::Ge => Some(false),
        Relation::Eq => None,
    }
}

fn sign_ok(value: &Rational, nonneg: Option<bool>) -> bool {
    match nonneg {
        None => true,
        Some(true) => !value.is_negative(),
        Some(false) => !value.is_positive(),
    }
}

/// Combines the rows with the given multipliers: returns the coefficient
/// vector `Σ y_i a_i` (bounds included) and the combined right-hand side.
fn combine(
    lp: &LinearProgram,
    rows: &[Rational],
    lower: &[Rational],
    upper: &[Rational],
) -> Result<(Vec<Rational>, Rational), String> {
    let n = lp.variables.len();
    if rows.len() != lp.constraints.len() || lower.len() != n || upper.len() != n {
        return Err("multiplier vector has the wrong dimension".into());
    }
    let mut coeffs = vec![Rational::zero(); n];
    let mut rhs = Rational::zero();
    for (c, y) in lp.constraints.iter().zip(rows) {
        if y.is_zero() {
            continue;
        }
        for (v, a) in &c.coeffs {
            coeffs[v.0] += a * y;
        }
        rhs += &c.rhs * y;
    }
    for (j, var) in lp.variables.iter().enumerate() {
        match &var.lower {
            Some(l) => {
                coeffs[j] += &lower[j];
                rhs += l * &lower[j];
            }
            None if !lower[j].is_zero() => return Err(format!("multiplier on absent lower bound of {}", var.name)),
            None => {}
        }
        match &var.upper {
            Some(u) => {
                coeffs[j] += &upper[j];
                rhs += u * &upper[j];
            }
            None if !upper[j].is_zero() => return Err(format!("multiplier on absent upper bound of {}", var.name)),
            None => {}
        }
    }
    Ok((coeffs, rhs))
}

fn check_signs(
    lp: &LinearProgram,
    rows: &[Rational],
    lower: &[Rational],
    upper: &[Rational],
    flip: bool,
) -> Result<(), String> {
    let adjust = |s: Option<bool>| s.map(|b| b ^ flip);
    for (i, (c, y)) in lp.constraints.iter().zip(rows).enumerate() {
        if !sign_ok(y, adjust(max_sign(c.relation))) {
            return fail(format!("multiplier of constraint {i} has the wrong sign"));
        }
    }
    for j in 0..lp.variables.len() {
        if !sign_ok(&lower[j], adjust(Some(false))) || !sign_ok(&upper[j], adjust(Some(true))) {
            return fail(format!("bound multiplier of variable {j} has the wrong sign"));
        }
    }
    Ok(())
}

/// Primal feasibility, dual feasibility, and equal primal and dual values.
pub fn verify_optimal(lp: &LinearProgram, sol: &OptimalSolution) -> Result<(), String> {
    verify_feasible(lp, &sol.primal)?;
    if lp.objective_at(&sol.primal) != sol.value {
        return fail("reported value differs from the objective at the primal point");
    }
    let flip = lp.sense == Sense::Minimize;
    check_signs(lp, &sol.dual, &sol.lower_duals, &sol.upper_duals, flip)?;
    let (coeffs, rhs) = combine(lp, &sol.dual, &sol.lower_duals, &sol.upper_duals)?;
    let mut objective = vec![Rational::zero(); lp.variables.len()];
    for (v, c) in &lp.objective {
        objective[v.0] += c;
    }
    if coeffs != objective {
        return fail("dual combination of rows does not reproduce the objective");
    }
    if rhs != sol.value {
        return fail(format!(
            "duality gap: primal {} vs dual {}",
            format_rational(&sol.value),
            format_rational(&rhs)
        ));
    }
    Ok(())
}

/// The combined row reads `0·x ≤ b` with `b < 0`.
pub fn verify_farkas(lp: &LinearProgram, cert: &FarkasCertificate) -> Result<(), String> {
    check_signs(
        lp,
        &cert.constraint_multipliers,
        &cert.lower_multipliers,
        &cert.upper_multipliers,
        false,
    )?;
    let (coeffs, rhs) = combine(
        lp,
        &cert.constraint_multipliers,
        &cert.lower_multipliers,
        &cert.upper_multipliers,
    )?;
    if coeffs.iter().any(|c| !c.is_zero()) {
        return fail("Farkas combination leaves a nonzero coefficient");
    }
    if !rhs.is_negative() {
        return fail("Farkas combination does not produce a negative right-hand side");
    }
    Ok(())
}

/// The point is feasible, the direction stays feasible and strictly improves the objective.
pub fn verify_ray(lp: &LinearProgram, ray: &UnboundedRay) -> Result<(), String> {
    verify_feasible(lp, &ray.point)?;
    let d = &ray.direction;
    if d.len() != lp.variables.len() {
        return fail("direction has the wrong dimension");
    }
    for (j, var) in lp.variables.iter().enumerate() {
        if var.lower.is_some() && d[j].is_negative() {
            return fail(format!("direction leaves the lower bound of {}", var.name));
        }
        if var.upper.is_some() && d[j].is_positive() {
            return fail(format!("direction leaves the upper bound of {}", var.name));
        }
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        let lhs = LinearProgram::dot(&c.coeffs, d);
        let ok = match c.relation {
            Relation::Le => !lhs.is_positive(),
            Relation::Ge => !lhs.is_negative(),
            Relation::Eq => lhs.is_zero(),
        };
        if !ok {
            return fail(format!("direction leaves constraint {i}"));
        }
    }
    let gain = lp.objective_at(d);
    let improving = match lp.sense {
        Sense::Maximize => gain.is_positive(),
        Sense::Minimize => gain.is_negative(),
    };
    if !improving {
        return fail("direction does not improve the objective");
    }
    Ok(())
}
