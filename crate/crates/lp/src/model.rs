use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Handle to a variable inside a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for ConstraintSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintSense::Le => "<=",
            ConstraintSense::Ge => ">=",
            ConstraintSense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("invalid name `{0}`: names must match [A-Za-z][A-Za-z0-9_]{{0,254}}")]
    InvalidName(String),
    #[error("variable `{name}` has inconsistent bounds [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("`{0}` references an undeclared variable")]
    UnknownVariable(String),
    #[error("`{0}` contains a non-finite coefficient or right-hand side")]
    NonFinite(String),
}

/// A minimisation MILP with named variables and constraints.
///
/// Variables and constraints keep their insertion order, which is also the
/// order used by [`crate::emit_lp_file`] and by the solver backends.
#[derive(Debug, Clone, Default)]
pub struct LinearModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(VarId, f64)>,
    var_index: HashMap<String, VarId>,
    con_names: HashMap<String, usize>,
}

pub fn is_valid_name(name: &str) -> bool {
    let bytes = name.as_bytes();
    !bytes.is_empty()
        && bytes.len() <= 255
        && bytes[0].is_ascii_alphabetic()
        && bytes.iter().all(|b| b.is_ascii_alphanumeric() || *b == b'_')
}

/// Merge repeated variables and drop zero coefficients, keeping first-seen order.
fn normalize_terms(terms: impl IntoIterator<Item = (VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut out: Vec<(VarId, f64)> = Vec::new();
    let mut pos: HashMap<VarId, usize> = HashMap::new();
    for (v, c) in terms {
        match pos.get(&v) {
            Some(&k) => out[k].1 += c,
            None => {
                pos.insert(v, out.len());
                out.push((v, c));
            }
        }
    }
    out.retain(|(_, c)| *c != 0.0);
    out
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if !is_valid_name(&name) {
            return Err(ModelError::InvalidName(name));
        }
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(ModelError::InvalidBounds { name, lower, upper });
        }
        if self.var_index.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let id = VarId(self.variables.len());
        self.var_index.insert(name.clone(), id);
        self.variables.push(Variable { name, lower, upper, kind });
        Ok(id)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId, ModelError> {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: ConstraintSense,
        rhs: f64,
    ) -> Result<(), ModelError> {
        let name = name.into();
        if !is_valid_name(&name) {
            return Err(ModelError::InvalidName(name));
        }
        if self.con_names.contains_key(&name) {
            return Err(ModelError::DuplicateConstraint(name));
        }
        let terms = normalize_terms(terms);
        if terms.iter().any(|(v, _)| v.0 >= self.variables.len()) {
            return Err(ModelError::UnknownVariable(name));
        }
        if !rhs.is_finite() || terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(ModelError::NonFinite(name));
        }
        self.con_names.insert(name.clone(), self.constraints.len());
        self.constraints.push(Constraint { name, terms, sense, rhs });
        Ok(())
    }

    /// Replace the (minimised) objective.
    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (VarId, f64)>) -> Result<(), ModelError> {
        let terms = normalize_terms(terms);
        if terms.iter().any(|(v, _)| v.0 >= self.variables.len()) {
            return Err(ModelError::UnknownVariable("objective".into()));
        }
        if terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(ModelError::NonFinite("objective".into()));
        }
        self.objective = terms;
        Ok(())
    }

    /// Pin a variable to a value by collapsing its bounds.
    pub fn fix(&mut self, var: VarId, value: f64) {
        let v = &mut self.variables[var.0];
        v.lower = value;
        v.upper = value;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.variables[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Objective value of an assignment of all variables.
    pub fn objective_at(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    /// Largest violation of bounds, integrality and constraints at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
            if v.kind == VarKind::Binary {
                worst = worst.max((x - x.round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(v, k)| k * values[v.0]).sum();
            let viol = match c.sense {
                ConstraintSense::Le => lhs - c.rhs,
                ConstraintSense::Ge => c.rhs - lhs,
                ConstraintSense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Full structural check: names, bounds, references, finiteness.
    pub fn validate(&self) -> Result<(), ModelError> {
        for v in &self.variables {
            if !is_valid_name(&v.name) {
                return Err(ModelError::InvalidName(v.name.clone()));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::InvalidBounds { name: v.name.clone(), lower: v.lower, upper: v.upper });
            }
        }
        for c in &self.constraints {
            if !is_valid_name(&c.name) {
                return Err(ModelError::InvalidName(c.name.clone()));
            }
            if c.terms.iter().any(|(v, _)| v.0 >= self.variables.len()) {
                return Err(ModelError::UnknownVariable(c.name.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_lp_rules() {
        assert!(is_valid_name("x_1_2"));
        assert!(is_valid_name("a"));
        assert!(!is_valid_name("1x"));
        assert!(!is_valid_name("_x"));
        assert!(!is_valid_name("x-y"));
        assert!(!is_valid_name(""));
        assert!(is_valid_name(&"a".repeat(255)));
        assert!(!is_valid_name(&"a".repeat(256)));
    }

    #[test]
    fn duplicates_rejected() {
        let mut m = LinearModel::new();
        m.add_continuous("x", 0.0, 1.0).unwrap();
        assert_eq!(m.add_continuous("x", 0.0, 1.0), Err(ModelError::DuplicateVariable("x".into())));
        m.add_constraint("c", [], ConstraintSense::Le, 0.0).unwrap();
        assert!(m.add_constraint("c", [], ConstraintSense::Le, 0.0).is_err());
    }

    #[test]
    fn terms_are_merged() {
        let mut m = LinearModel::new();
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        let y = m.add_continuous("y", 0.0, 1.0).unwrap();
        m.add_constraint("c", [(x, 1.0), (y, 2.0), (x, 2.0), (y, -2.0)], ConstraintSense::Ge, 1.0)
            .unwrap();
        assert_eq!(m.constraints()[0].terms, vec![(x, 3.0)]);
    }

    #[test]
    fn bad_bounds_and_refs() {
        let mut m = LinearModel::new();
        assert!(m.add_continuous("x", 2.0, 1.0).is_err());
        assert!(m.add_constraint("c", [(VarId(3), 1.0)], ConstraintSense::Le, 0.0).is_err());
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        assert!(m.add_constraint("d", [(x, f64::NAN)], ConstraintSense::Le, 0.0).is_err());
    }

    #[test]
    fn violation_measure() {
        let mut m = LinearModel::new();
        let x = m.add_binary("x").unwrap();
        let y = m.add_continuous("y", 0.0, 10.0).unwrap();
        m.add_constraint("c", [(x, 1.0), (y, 1.0)], ConstraintSense::Ge, 3.0).unwrap();
        assert_eq!(m.max_violation(&[1.0, 2.0]), 0.0);
        assert!((m.max_violation(&[0.5, 2.0]) - 0.5).abs() < 1e-12);
    }
}
