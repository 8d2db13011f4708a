//! Exact rational linear programming.
//!
//! Problems are stated over named variables with optional lower and upper
//! bounds and a list of sparse rows `a·x (≤|=|≥) b`. [`solve_lp`] runs a
//! dense two-phase tableau simplex with Bland's rule and returns an
//! [`LpOutcome`] whose certificate has already been re-checked by plain
//! substitution (see [`certificate`]).
//!
//! Multiplier sign conventions, for a maximization problem:
//!
//! * `≤` rows and upper-bound rows carry multipliers `≥ 0`,
//! * `≥` rows and lower-bound rows carry multipliers `≤ 0`,
//! * `=` rows are free.
//!
//! For a minimization problem every dual multiplier is negated. Farkas
//! multipliers always use the maximization convention.

pub mod certificate;
mod simplex;

use crate::rational::Rational;

pub use certificate::{verify_farkas, verify_feasible, verify_optimal, verify_ray};
pub use simplex::solve_lp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(VarId, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub objective: Vec<(VarId, Rational)>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("linear program has no variables")]
    NoVariables,
    #[error("row {row} references variable {var} but only {count} variables exist")]
    DimensionMismatch { row: String, var: usize, count: usize },
    #[error("solver produced a certificate that failed re-verification: {0}")]
    CertificateRejected(String),
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            variables: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: Option<Rational>,
        upper: Option<Rational>,
    ) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        VarId(self.variables.len() - 1)
    }

    /// Shorthand for a variable bounded below by zero.
    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_variable(name, Some(Rational::from_integer(0.into())), None)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> VarId {
        self.add_variable(name, None, None)
    }

    pub fn set_objective(&mut self, coeffs: Vec<(VarId, Rational)>) {
        self.objective = coeffs;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(VarId, Rational)>, relation: Relation, rhs: Rational) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub(crate) fn check_dimensions(&self) -> Result<(), LpError> {
        if self.variables.is_empty() {
            return Err(LpError::NoVariables);
        }
        let count = self.variables.len();
        let check = |row: String, coeffs: &[(VarId, Rational)]| {
            coeffs
                .iter()
                .find(|(v, _)| v.0 >= count)
                .map_or(Ok(()), |(v, _)| {
                    Err(LpError::DimensionMismatch { row, var: v.0, count })
                })
        };
        check("objective".into(), &self.objective)?;
        for (i, c) in self.constraints.iter().enumerate() {
            check(format!("constraint {i}"), &c.coeffs)?;
        }
        Ok(())
    }

    /// Evaluates a sparse row at a dense point.
    pub fn dot(coeffs: &[(VarId, Rational)], point: &[Rational]) -> Rational {
        coeffs
            .iter()
            .fold(Rational::from_integer(0.into()), |acc, (v, a)| acc + a * &point[v.0])
    }

    pub fn objective_at(&self, point: &[Rational]) -> Rational {
        Self::dot(&self.objective, point)
    }
}

/// Optimal vertex with its dual certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimalSolution {
    pub value: Rational,
    pub primal: Vec<Rational>,
    /// One multiplier per constraint row.
    pub dual: Vec<Rational>,
    /// Multiplier of the row `x_j ≥ lower_j`; zero when the variable has no lower bound.
    pub lower_duals: Vec<Rational>,
    /// Multiplier of the row `x_j ≤ upper_j`; zero when the variable has no upper bound.
    pub upper_duals: Vec<Rational>,
}

/// Nonnegative combination of rows proving that no point satisfies them all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub constraint_multipliers: Vec<Rational>,
    pub lower_multipliers: Vec<Rational>,
    pub upper_multipliers: Vec<Rational>,
}

/// A feasible point and a recession direction along which the objective improves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnboundedRay {
    pub point: Vec<Rational>,
    pub direction: Vec<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal(OptimalSolution),
    Infeasible(FarkasCertificate),
    Unbounded(UnboundedRay),
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal(_) => LpStatus::Optimal,
            LpOutcome::Infeasible(_) => LpStatus::Infeasible,
            LpOutcome::Unbounded(_) => LpStatus::Unbounded,
        }
    }

    pub fn optimal(&self) -> Option<&OptimalSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<&Rational> {
        self.optimal().map(|s| &s.value)
    }
}
