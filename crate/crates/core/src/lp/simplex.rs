use num_traits::{One, Signed, Zero};

use super::certificate::{verify_farkas, verify_optimal, verify_ray};
use super::{
    FarkasCertificate, LinearProgram, LpError, LpOutcome, OptimalSolution, Relation, Sense,
    UnboundedRay,
};
use crate::rational::Rational;

/// How a user variable is expressed through nonnegative tableau columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// `x = lower + c`
    Shifted { col: usize, lower: Rational },
    /// `x = upper - c`
    Reflected { col: usize, upper: Rational },
    /// `x = pos - neg`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy)]
enum RowOrigin {
    Constraint(usize),
    Upper(usize),
}

/// Equality standard form `A c = b, c ≥ 0, b ≥ 0`, maximizing `cost·c + offset`.
struct StandardForm {
    vars: Vec<VarMap>,
    rows: Vec<RowOrigin>,
    /// Row `i` of the tableau equals `sign[i]` times the substituted user row.
    sign: Vec<bool>,
    matrix: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    cost: Vec<Rational>,
    offset: Rational,
    /// Column index of the unit column each row starts with (slack or artificial).
    initial_basis: Vec<usize>,
    artificial_start: usize,
    width: usize,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let maximize = lp.sense == Sense::Maximize;
        let mut user_cost = vec![Rational::zero(); lp.variables.len()];
        for (v, c) in &lp.objective {
            user_cost[v.0] += c;
        }
        if !maximize {
            for c in &mut user_cost {
                *c = -c.clone();
            }
        }

        let mut vars = Vec::with_capacity(lp.variables.len());
        let mut struct_cols = 0usize;
        for var in &lp.variables {
            let map = match (&var.lower, &var.upper) {
                (Some(l), _) => VarMap::Shifted { col: struct_cols, lower: l.clone() },
                (None, Some(u)) => VarMap::Reflected { col: struct_cols, upper: u.clone() },
                (None, None) => {
                    struct_cols += 1;
                    VarMap::Split { pos: struct_cols - 1, neg: struct_cols }
                }
            };
            struct_cols += 1;
            vars.push(map);
        }

        // User rows: the constraints, then `x_j ≤ u_j` for shifted variables with an upper bound.
        let mut user_rows: Vec<(RowOrigin, Vec<(usize, Rational)>, Relation, Rational)> = lp
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (
                    RowOrigin::Constraint(i),
                    c.coeffs.iter().map(|(v, a)| (v.0, a.clone())).collect(),
                    c.relation,
                    c.rhs.clone(),
                )
            })
            .collect();
        for (j, var) in lp.variables.iter().enumerate() {
            if let (Some(_), Some(u)) = (&var.lower, &var.upper) {
                user_rows.push((RowOrigin::Upper(j), vec![(j, Rational::one())], Relation::Le, u.clone()));
            }
        }

        let m = user_rows.len();
        let slack_count = user_rows.iter().filter(|r| r.2 != Relation::Eq).count();
        let slack_start = struct_cols;
        let artificial_start = slack_start + slack_count;

        let mut matrix = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut sign = Vec::with_capacity(m);
        let mut rows = Vec::with_capacity(m);
        let mut slack_of_row = Vec::with_capacity(m);
        let mut next_slack = slack_start;
        for (origin, coeffs, relation, b) in user_rows {
            let mut row = vec![Rational::zero(); artificial_start];
            let mut b = b;
            for (j, a) in coeffs {
                match &vars[j] {
                    VarMap::Shifted { col, lower } => {
                        b -= &a * lower;
                        row[*col] += a;
                    }
                    VarMap::Reflected { col, upper } => {
                        b -= &a * upper;
                        row[*col] -= a;
                    }
                    VarMap::Split { pos, neg } => {
                        row[*neg] -= &a;
                        row[*pos] += a;
                    }
                }
            }
            let slack = match relation {
                Relation::Le => {
                    row[next_slack] = Rational::one();
                    next_slack += 1;
                    Some(next_slack - 1)
                }
                Relation::Ge => {
                    row[next_slack] = -Rational::one();
                    next_slack += 1;
                    Some(next_slack - 1)
                }
                Relation::Eq => None,
            };
            let positive = !b.is_negative();
            if !positive {
                b = -b;
                for a in &mut row {
                    *a = -a.clone();
                }
            }
            slack_of_row.push(slack);
            matrix.push(row);
            rhs.push(b);
            sign.push(positive);
            rows.push(origin);
        }

        // Rows whose slack already reads +1 start with it in the basis.
        let mut initial_basis = Vec::with_capacity(m);
        let mut artificial = artificial_start;
        for (i, slack) in slack_of_row.iter().enumerate() {
            match slack {
                Some(s) if matrix[i][*s].is_positive() => initial_basis.push(*s),
                _ => {
                    initial_basis.push(artificial);
                    artificial += 1;
                }
            }
        }
        let width = artificial;
        for (i, row) in matrix.iter_mut().enumerate() {
            row.resize(width, Rational::zero());
            if initial_basis[i] >= artificial_start {
                row[initial_basis[i]] = Rational::one();
            }
        }

        let mut cost = vec![Rational::zero(); width];
        let mut offset = Rational::zero();
        for (j, map) in vars.iter().enumerate() {
            let c = &user_cost[j];
            match map {
                VarMap::Shifted { col, lower } => {
                    cost[*col] = c.clone();
                    offset += c * lower;
                }
                VarMap::Reflected { col, upper } => {
                    cost[*col] = -c.clone();
                    offset += c * upper;
                }
                VarMap::Split { pos, neg } => {
                    cost[*pos] = c.clone();
                    cost[*neg] = -c.clone();
                }
            }
        }

        Self {
            vars,
            rows,
            sign,
            matrix,
            rhs,
            cost,
            offset,
            initial_basis,
            artificial_start,
            width,
        }
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
}

enum PhaseEnd {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Rational::one() / &self.rows[r][c];
        for a in self.rows[r].iter_mut() {
            if !a.is_zero() {
                *a *= &inv;
            }
        }
        self.rhs[r] *= &inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let factor = self.rows[i][c].clone();
            for (a, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *a -= &factor * p;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        let mut d = cost[j].clone();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if !cb.is_zero() && !row[j].is_zero() {
                d -= cb * &row[j];
            }
        }
        d
    }

    /// Maximizes `cost·x` over the columns `< allowed`, Bland's rule throughout.
    fn run(&mut self, cost: &[Rational], allowed: usize) -> PhaseEnd {
        loop {
            let entering = (0..allowed)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(cost, j).is_positive());
            let Some(q) = entering else {
                return PhaseEnd::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][q];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((r, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*r]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, q),
                None => return PhaseEnd::Unbounded(q),
            }
        }
    }

    fn objective(&self, cost: &[Rational]) -> Rational {
        self.basis
            .iter()
            .zip(&self.rhs)
            .fold(Rational::zero(), |acc, (b, v)| acc + &cost[*b] * v)
    }

    /// Row multipliers `y = c_B B⁻¹`, read off the columns that started as the identity.
    fn multipliers(&self, cost: &[Rational], initial_basis: &[usize]) -> Vec<Rational> {
        initial_basis
            .iter()
            .map(|&col| {
                self.rows
                    .iter()
                    .zip(&self.basis)
                    .fold(Rational::zero(), |acc, (row, b)| acc + &cost[*b] * &row[col])
            })
            .collect()
    }

    fn column_values(&self, width: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); width];
        for (b, v) in self.basis.iter().zip(&self.rhs) {
            x[*b] = v.clone();
        }
        x
    }
}

/// Multipliers expressed on the user's rows and bounds, in the maximization convention.
struct UserMultipliers {
    rows: Vec<Rational>,
    lower: Vec<Rational>,
    upper: Vec<Rational>,
}

fn to_user_multipliers(
    lp: &LinearProgram,
    sf: &StandardForm,
    y: &[Rational],
    user_cost: &[Rational],
) -> UserMultipliers {
    let n = lp.variables.len();
    let mut rows = vec![Rational::zero(); lp.constraints.len()];
    let mut lower = vec![Rational::zero(); n];
    let mut upper = vec![Rational::zero(); n];
    // Σ_i z_i a_ij over every tableau row, including explicit upper-bound rows.
    let mut column_sum = vec![Rational::zero(); n];
    for (i, origin) in sf.rows.iter().enumerate() {
        let z = if sf.sign[i] { y[i].clone() } else { -y[i].clone() };
        match *origin {
            RowOrigin::Constraint(k) => {
                for (v, a) in &lp.constraints[k].coeffs {
                    column_sum[v.0] += a * &z;
                }
                rows[k] = z;
            }
            RowOrigin::Upper(j) => {
                column_sum[j] += &z;
                upper[j] = z;
            }
        }
    }
    for (j, map) in sf.vars.iter().enumerate() {
        let gap = &user_cost[j] - &column_sum[j];
        match map {
            VarMap::Shifted { .. } => lower[j] = gap,
            VarMap::Reflected { .. } => upper[j] = gap,
            VarMap::Split { .. } => {}
        }
    }
    UserMultipliers { rows, lower, upper }
}

fn to_user_point(sf: &StandardForm, cols: &[Rational], with_offset: bool) -> Vec<Rational> {
    sf.vars
        .iter()
        .map(|map| match map {
            VarMap::Shifted { col, lower } => {
                if with_offset {
                    lower + &cols[*col]
                } else {
                    cols[*col].clone()
                }
            }
            VarMap::Reflected { col, upper } => {
                if with_offset {
                    upper - &cols[*col]
                } else {
                    -cols[*col].clone()
                }
            }
            VarMap::Split { pos, neg } => &cols[*pos] - &cols[*neg],
        })
        .collect()
}

/// Solves `lp` exactly. The returned certificate has been re-verified.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.check_dimensions()?;
    let sf = StandardForm::build(lp);
    let mut tab = Tableau {
        rows: sf.matrix.clone(),
        rhs: sf.rhs.clone(),
        basis: sf.initial_basis.clone(),
    };

    // Phase one: maximize minus the sum of artificials.
    let mut phase_one_cost = vec![Rational::zero(); sf.width];
    for c in phase_one_cost.iter_mut().skip(sf.artificial_start) {
        *c = -Rational::one();
    }
    if sf.width > sf.artificial_start {
        if let PhaseEnd::Unbounded(_) = tab.run(&phase_one_cost, sf.width) {
            unreachable!("phase one objective is bounded above by zero");
        }
        if tab.objective(&phase_one_cost).is_negative() {
            let y = tab.multipliers(&phase_one_cost, &sf.initial_basis);
            let zero_cost = vec![Rational::zero(); lp.variables.len()];
            let z = to_user_multipliers(lp, &sf, &y, &zero_cost);
            // Phase-one duals combine the rows into `0·x ≤ (phase-one optimum) < 0`.
            let cert = FarkasCertificate {
                constraint_multipliers: z.rows,
                lower_multipliers: z.lower,
                upper_multipliers: z.upper,
            };
            verify_farkas(lp, &cert).map_err(LpError::CertificateRejected)?;
            return Ok(LpOutcome::Infeasible(cert));
        }
        // Drive zero-valued artificials out of the basis where a real column can replace them.
        for r in 0..tab.rows.len() {
            if tab.basis[r] < sf.artificial_start {
                continue;
            }
            if let Some(c) = (0..sf.artificial_start).find(|&c| !tab.rows[r][c].is_zero() && !tab.basis.contains(&c)) {
                tab.pivot(r, c);
            }
        }
    }

    let mut user_cost = vec![Rational::zero(); lp.variables.len()];
    for (v, c) in &lp.objective {
        user_cost[v.0] += c;
    }
    let maximize = lp.sense == Sense::Maximize;
    let max_cost: Vec<Rational> = if maximize {
        user_cost.clone()
    } else {
        user_cost.iter().map(|c| -c.clone()).collect()
    };

    match tab.run(&sf.cost, sf.artificial_start) {
        PhaseEnd::Unbounded(q) => {
            let mut dir_cols = vec![Rational::zero(); sf.width];
            dir_cols[q] = Rational::one();
            for (i, b) in tab.basis.iter().enumerate() {
                dir_cols[*b] = -tab.rows[i][q].clone();
            }
            let ray = UnboundedRay {
                point: to_user_point(&sf, &tab.column_values(sf.width), true),
                direction: to_user_point(&sf, &dir_cols, false),
            };
            verify_ray(lp, &ray).map_err(LpError::CertificateRejected)?;
            Ok(LpOutcome::Unbounded(ray))
        }
        PhaseEnd::Optimal => {
            let primal = to_user_point(&sf, &tab.column_values(sf.width), true);
            let y = tab.multipliers(&sf.cost, &sf.initial_basis);
            let z = to_user_multipliers(lp, &sf, &y, &max_cost);
            let flip = |v: Vec<Rational>| -> Vec<Rational> {
                if maximize {
                    v
                } else {
                    v.into_iter().map(|x| -x).collect()
                }
            };
            let max_value = tab.objective(&sf.cost) + &sf.offset;
            let sol = OptimalSolution {
                value: if maximize { max_value } else { -max_value },
                primal,
                dual: flip(z.rows),
                lower_duals: flip(z.lower),
                upper_duals: flip(z.upper),
            };
            verify_optimal(lp, &sol).map_err(LpError::CertificateRejected)?;
            Ok(LpOutcome::Optimal(sol))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LpStatus, VarId};
    use crate::rational::{int, ratio};

    #[test]
    fn single_binding_constraint() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        lp.set_objective(vec![(x, int(1))]);
        lp.add_constraint(vec![(x, int(1))], Relation::Le, ratio(3, 2));
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.value(), Some(&ratio(3, 2)));
        assert_eq!(out.optimal().unwrap().dual, vec![int(1)]);
    }

    #[test]
    fn contradictory_bounds_give_farkas_row() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        lp.set_objective(vec![(x, int(1))]);
        lp.add_constraint(vec![(x, int(1))], Relation::Le, int(1));
        lp.add_constraint(vec![(x, int(1))], Relation::Ge, int(2));
        match solve_lp(&lp).unwrap() {
            LpOutcome::Infeasible(cert) => {
                // x ≤ 1 plus -(x ≥ 2) reads 0 ≤ -1.
                assert_eq!(cert.constraint_multipliers, vec![int(1), int(-1)]);
                assert_eq!(cert.lower_multipliers, vec![int(0)]);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn no_upper_bound_is_unbounded() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        lp.set_objective(vec![(x, int(1))]);
        lp.add_constraint(vec![(x, int(1))], Relation::Ge, int(0));
        match solve_lp(&lp).unwrap() {
            LpOutcome::Unbounded(ray) => assert_eq!(ray.direction, vec![int(1)]),
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn free_and_boxed_variables_minimize() {
        // min x - y, -2 ≤ x ≤ 5 free-standing box, y ≤ 3 only, x + y = 1.
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_variable("x", Some(int(-2)), Some(int(5)));
        let y = lp.add_variable("y", None, Some(int(3)));
        lp.set_objective(vec![(x, int(1)), (y, int(-1))]);
        lp.add_constraint(vec![(x, int(1)), (y, int(1))], Relation::Eq, int(1));
        let out = solve_lp(&lp).unwrap();
        // y = 3 forces x = -2: objective -5.
        assert_eq!(out.value(), Some(&int(-5)));
        assert_eq!(out.optimal().unwrap().primal, vec![int(-2), int(3)]);
    }

    #[test]
    fn free_variable_split() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_free("x");
        lp.set_objective(vec![(x, int(-1))]);
        lp.add_constraint(vec![(x, int(1))], Relation::Ge, ratio(-7, 3));
        assert_eq!(solve_lp(&lp).unwrap().value(), Some(&ratio(7, 3)));
    }

    #[test]
    fn redundant_equalities_keep_artificial_basic() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        let y = lp.add_nonneg("y");
        lp.set_objective(vec![(x, int(2)), (y, int(1))]);
        lp.add_constraint(vec![(x, int(1)), (y, int(1))], Relation::Eq, int(1));
        lp.add_constraint(vec![(x, int(2)), (y, int(2))], Relation::Eq, int(2));
        assert_eq!(solve_lp(&lp).unwrap().value(), Some(&int(2)));
    }

    #[test]
    fn ragged_row_rejected() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        lp.add_nonneg("x");
        lp.add_constraint(vec![(VarId(3), int(1))], Relation::Le, int(1));
        assert!(matches!(solve_lp(&lp), Err(LpError::DimensionMismatch { .. })));
        assert_eq!(
            solve_lp(&LinearProgram::new(Sense::Maximize)).unwrap_err(),
            LpError::NoVariables
        );
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the textbook rule; Bland's rule must terminate.
        let mut lp = LinearProgram::new(Sense::Maximize);
        let v: Vec<_> = (0..4).map(|i| lp.add_nonneg(format!("x{i}"))).collect();
        lp.set_objective(vec![(v[0], ratio(3, 4)), (v[1], int(-150)), (v[2], ratio(1, 50)), (v[3], int(-6))]);
        lp.add_constraint(
            vec![(v[0], ratio(1, 4)), (v[1], int(-60)), (v[2], ratio(-1, 25)), (v[3], int(9))],
            Relation::Le,
            int(0),
        );
        lp.add_constraint(
            vec![(v[0], ratio(1, 2)), (v[1], int(-90)), (v[2], ratio(-1, 50)), (v[3], int(3))],
            Relation::Le,
            int(0),
        );
        lp.add_constraint(vec![(v[2], int(1))], Relation::Le, int(1));
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status(), LpStatus::Optimal);
        assert_eq!(out.value(), Some(&ratio(1, 20)));
    }
}
