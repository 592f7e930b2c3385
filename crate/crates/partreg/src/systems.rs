//! Homogeneous linear systems, generated equation families, and exact
//! solution checking.
//!
//! A [`LinearSystem`] is a rational matrix together with named variables;
//! a solution is an [`Assignment`] of *nonzero* rationals to all variables
//! making every row sum to zero exactly.
//!
//! Three families of systems are generated programmatically from a
//! coefficient sequence `c`:
//!
//! * **System A** — equation `i` reads `x_{i,1} + … + x_{i,i} + c(i)·y =
//!   z_{i,1} + … + z_{i,i}` (conventionally `c(i) = 2^i`);
//! * **System B** — same shape with `c(i) = 2^-i`, intended over the dyadic
//!   rationals;
//! * **System C** — equation `i` reads `x_{i,1} + … + x_{i,i} + c(i)·y =
//!   z_i` with a single right-hand variable.
//!
//! In addition, [`generate_difference_system`] produces the classical
//! difference family `x_i − z_i = i·y`, and [`generate_image_system`] the
//! image-form expression list used by image partition regularity checks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{RatMatrix, RatVector};
use crate::rational::Rational;

/// Which family a system belongs to. `Custom` covers parsed/ad-hoc systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    SystemA,
    SystemB,
    SystemC,
    Difference,
    Image,
    Custom,
}

impl FamilyTag {
    /// Short lowercase name used in CLI flags and artifacts.
    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::SystemA => "a",
            FamilyTag::SystemB => "b",
            FamilyTag::SystemC => "c",
            FamilyTag::Difference => "difference",
            FamilyTag::Image => "image",
            FamilyTag::Custom => "custom",
        }
    }
}

/// A coefficient sequence `c(1), c(2), …` for the generated families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientSequence {
    /// `c(n) = 2^n`.
    PowersOfTwo,
    /// `c(n) = 2^-n`.
    InversePowersOfTwo,
    /// Explicit finite sequence; `c(n) = values[n-1]`.
    Custom { values: Vec<Rational> },
}

impl CoefficientSequence {
    /// Builds a custom sequence, rejecting zero entries up front.
    pub fn custom(values: Vec<Rational>) -> Result<Self> {
        if let Some(idx) = values.iter().position(Rational::is_zero) {
            return Err(Error::ZeroCoefficient { n: idx + 1 });
        }
        Ok(CoefficientSequence::Custom { values })
    }

    /// `c(n)` for `n ≥ 1`. Fails on zero coefficients and on indices beyond
    /// a custom sequence's length.
    pub fn coefficient(&self, n: usize) -> Result<Rational> {
        if n == 0 {
            return Err(Error::CoefficientOutOfRange { n, len: 0 });
        }
        match self {
            CoefficientSequence::PowersOfTwo => Ok(Rational::pow2(n as i64)),
            CoefficientSequence::InversePowersOfTwo => Ok(Rational::pow2(-(n as i64))),
            CoefficientSequence::Custom { values } => {
                let c = values
                    .get(n - 1)
                    .ok_or(Error::CoefficientOutOfRange { n, len: values.len() })?;
                if c.is_zero() {
                    return Err(Error::ZeroCoefficient { n });
                }
                Ok(c.clone())
            }
        }
    }

    /// Human-readable description for traces.
    pub fn describe(&self) -> String {
        match self {
            CoefficientSequence::PowersOfTwo => "c(n) = 2^n".to_string(),
            CoefficientSequence::InversePowersOfTwo => "c(n) = 2^-n".to_string(),
            CoefficientSequence::Custom { values } => {
                let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                format!("c = [{}]", vals.join(", "))
            }
        }
    }
}

/// A homogeneous linear system with named variables.
///
/// Invariants enforced by [`LinearSystem::new`]: at least one equation;
/// variable names unique and exactly one per matrix column; every row and
/// every column contains a nonzero coefficient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearSystem {
    matrix: RatMatrix,
    variables: Vec<String>,
    family: FamilyTag,
}

impl LinearSystem {
    /// Builds a system, enforcing all invariants.
    pub fn new(matrix: RatMatrix, variables: Vec<String>, family: FamilyTag) -> Result<Self> {
        let sys = Self::with_lenient_shape(matrix, variables, family)?;
        for r in 0..sys.matrix.rows() {
            if sys.matrix.row(r).iter().all(Rational::is_zero) {
                return Err(Error::ZeroRow { row: r + 1 });
            }
        }
        for c in 0..sys.matrix.cols() {
            if (0..sys.matrix.rows()).all(|r| sys.matrix.entry(r, c).is_zero()) {
                return Err(Error::ZeroColumn { var: sys.variables[c].clone() });
            }
        }
        Ok(sys)
    }

    /// Builds a system checking only shape and name uniqueness, allowing
    /// zero rows/columns. Used by exhaustive desk-scale scans over raw
    /// matrices, where degenerate entries are part of the enumeration.
    pub fn with_lenient_shape(
        matrix: RatMatrix,
        variables: Vec<String>,
        family: FamilyTag,
    ) -> Result<Self> {
        if variables.len() != matrix.cols() {
            return Err(Error::DimensionMismatch { expected: matrix.cols(), got: variables.len() });
        }
        let mut seen = std::collections::HashSet::new();
        for v in &variables {
            if !seen.insert(v.as_str()) {
                return Err(Error::DuplicateVariable { var: v.clone() });
            }
        }
        Ok(LinearSystem { matrix, variables, family })
    }

    /// The coefficient matrix.
    pub fn matrix(&self) -> &RatMatrix {
        &self.matrix
    }

    /// Variable names, one per column, in column order.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Column index of a variable.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// The family tag.
    pub fn family(&self) -> FamilyTag {
        self.family
    }

    /// Number of equations.
    pub fn equations(&self) -> usize {
        self.matrix.rows()
    }

    /// Renders the system in the equation syntax accepted by
    /// [`crate::dsl::parse_system`]: one equation per line, positive terms on
    /// the left, negated terms (as positives) on the right.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in 0..self.matrix.rows() {
            if r > 0 {
                out.push('\n');
            }
            let mut lhs: Vec<String> = Vec::new();
            let mut rhs: Vec<String> = Vec::new();
            for (c, var) in self.variables.iter().enumerate() {
                let coeff = self.matrix.entry(r, c);
                if coeff.is_zero() {
                    continue;
                }
                let mag = coeff.abs();
                let term = if mag == Rational::one() {
                    var.clone()
                } else {
                    format!("{mag}{var}")
                };
                if coeff.is_positive() {
                    lhs.push(term);
                } else {
                    rhs.push(term);
                }
            }
            let side = |terms: Vec<String>| {
                if terms.is_empty() {
                    "0".to_string()
                } else {
                    terms.join(" + ")
                }
            };
            let _ = write!(out, "{} = {}", side(lhs), side(rhs));
        }
        out
    }
}

/// An assignment of nonzero rational values to named variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<String, Rational>);

impl Assignment {
    /// Builds an assignment; rejects zero values and duplicate names.
    pub fn new(pairs: impl IntoIterator<Item = (String, Rational)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (var, value) in pairs {
            if value.is_zero() {
                return Err(Error::ZeroValue { var });
            }
            if map.insert(var.clone(), value).is_some() {
                return Err(Error::DuplicateVariable { var });
            }
        }
        Ok(Assignment(map))
    }

    /// The value of a variable, if assigned.
    pub fn get(&self, var: &str) -> Option<&Rational> {
        self.0.get(var)
    }

    /// Number of assigned variables.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True iff nothing is assigned.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Iterates in variable-name order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Rational)> {
        self.0.iter()
    }

    /// All values, in variable-name order.
    pub fn values(&self) -> impl Iterator<Item = &Rational> {
        self.0.values()
    }
}

/// The outcome of checking an assignment against a system: one exact
/// residual per equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionCheck {
    /// `Σ coefficient · value` per equation, in equation order.
    pub residuals: Vec<Rational>,
    /// True iff every residual is exactly zero.
    pub all_zero: bool,
}

/// Evaluates every equation of `system` at `assignment` exactly.
///
/// Fails if the assignment misses any variable the system mentions.
/// Zero values cannot occur ([`Assignment`] rejects them at construction).
pub fn check_solution(system: &LinearSystem, assignment: &Assignment) -> Result<SolutionCheck> {
    let mut values = Vec::with_capacity(system.variables().len());
    for var in system.variables() {
        let v = assignment
            .get(var)
            .ok_or_else(|| Error::MissingVariable { var: var.clone() })?;
        values.push(v.clone());
    }
    let residuals = system
        .matrix()
        .mul_vector(&RatVector(values))?
        .0;
    let all_zero = residuals.iter().all(Rational::is_zero);
    Ok(SolutionCheck { residuals, all_zero })
}

/// Generates the first `n` equations of a family (A, B or C) with the given
/// coefficient sequence.
///
/// Variable order is `y`, then per equation `i` the block
/// `x{i}_1 … x{i}_i` followed by its `z` variables — so the truncation to the
/// first `k` equations uses exactly a prefix of the variable list.
pub fn generate_prefix(
    family: FamilyTag,
    n: usize,
    seq: &CoefficientSequence,
) -> Result<LinearSystem> {
    if n == 0 {
        return Err(Error::EmptyFamily);
    }
    let single_z = match family {
        FamilyTag::SystemA | FamilyTag::SystemB => false,
        FamilyTag::SystemC => true,
        other => {
            return Err(Error::Precondition(format!(
                "generate_prefix expects family a, b or c, got {}",
                other.name()
            )))
        }
    };
    let mut variables = vec!["y".to_string()];
    let mut blocks = Vec::with_capacity(n); // (x column indices, z column indices) per equation
    for i in 1..=n {
        let mut xs = Vec::with_capacity(i);
        for j in 1..=i {
            xs.push(variables.len());
            variables.push(format!("x{i}_{j}"));
        }
        let mut zs = Vec::new();
        if single_z {
            zs.push(variables.len());
            variables.push(format!("z{i}"));
        } else {
            for j in 1..=i {
                zs.push(variables.len());
                variables.push(format!("z{i}_{j}"));
            }
        }
        blocks.push((xs, zs));
    }
    let cols = variables.len();
    let mut rows = Vec::with_capacity(n);
    for i in 1..=n {
        let mut row = vec![Rational::zero(); cols];
        row[0] = seq.coefficient(i)?;
        let (xs, zs) = &blocks[i - 1];
        for &c in xs {
            row[c] = Rational::one();
        }
        for &c in zs {
            row[c] = -Rational::one();
        }
        rows.push(row);
    }
    LinearSystem::new(RatMatrix::from_rows(rows)?, variables, family)
}

/// Generates the difference family `x_i − z_i = i·y` for `i = 1..=n`.
pub fn generate_difference_system(n: usize) -> Result<LinearSystem> {
    if n == 0 {
        return Err(Error::EmptyFamily);
    }
    let mut variables = vec!["y".to_string()];
    for i in 1..=n {
        variables.push(format!("x{i}"));
        variables.push(format!("z{i}"));
    }
    let cols = variables.len();
    let mut rows = Vec::with_capacity(n);
    for i in 1..=n {
        let mut row = vec![Rational::zero(); cols];
        row[0] = Rational::from_int(-(i as i64));
        row[1 + 2 * (i - 1)] = Rational::one(); // x_i
        row[2 + 2 * (i - 1)] = -Rational::one(); // z_i
        rows.push(row);
    }
    LinearSystem::new(RatMatrix::from_rows(rows)?, variables, FamilyTag::Difference)
}

/// One named expression of the image form: a label and its coefficient
/// vector over the free variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageExpression {
    /// Human-readable label, e.g. `"x1_1 + 2y"` or `"y"`.
    pub label: String,
    /// Names of the free variables, in order.
    pub free_variables: Vec<String>,
    /// Coefficients over `free_variables`.
    pub coefficients: Vec<Rational>,
}

/// Generates the image-form expression list for the first `n` equations of
/// System A: the free variables are `y` and the `x{i}_j`, and the expressions
/// are, per equation, the compound `x{i}_1 + … + x{i}_i + c(i)·y` followed by
/// the identity expressions for the equation's `x` variables, with `y` itself
/// listed once after the first compound.
pub fn generate_image_system(n: usize, seq: &CoefficientSequence) -> Result<Vec<ImageExpression>> {
    if n == 0 {
        return Err(Error::EmptyFamily);
    }
    let mut free = vec!["y".to_string()];
    for i in 1..=n {
        for j in 1..=i {
            free.push(format!("x{i}_{j}"));
        }
    }
    let dim = free.len();
    let mut exprs = Vec::new();
    let mut col = 1usize; // next x column
    for i in 1..=n {
        let c = seq.coefficient(i)?;
        let mut coeffs = vec![Rational::zero(); dim];
        coeffs[0] = c.clone();
        let mut label_terms = Vec::new();
        for j in 1..=i {
            coeffs[col + j - 1] = Rational::one();
            label_terms.push(format!("x{i}_{j}"));
        }
        let label = format!("{} + {}y", label_terms.join(" + "), c);
        exprs.push(ImageExpression {
            label,
            free_variables: free.clone(),
            coefficients: coeffs,
        });
        if i == 1 {
            let mut ycoeffs = vec![Rational::zero(); dim];
            ycoeffs[0] = Rational::one();
            exprs.push(ImageExpression {
                label: "y".to_string(),
                free_variables: free.clone(),
                coefficients: ycoeffs,
            });
        }
        for j in 1..=i {
            let mut xcoeffs = vec![Rational::zero(); dim];
            xcoeffs[col + j - 1] = Rational::one();
            exprs.push(ImageExpression {
                label: format!("x{i}_{j}"),
                free_variables: free.clone(),
                coefficients: xcoeffs,
            });
        }
        col += i;
    }
    Ok(exprs)
}

impl<'de> Deserialize<'de> for LinearSystem {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            matrix: RatMatrix,
            variables: Vec<String>,
            family: FamilyTag,
        }
        let raw = Raw::deserialize(deserializer)?;
        LinearSystem::with_lenient_shape(raw.matrix, raw.variables, raw.family)
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ri(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn generate_system_a_n1() {
        let sys = generate_prefix(FamilyTag::SystemA, 1, &CoefficientSequence::PowersOfTwo).unwrap();
        assert_eq!(sys.variables(), &["y", "x1_1", "z1_1"]);
        assert_eq!(sys.render(), "2y + x1_1 = z1_1");
        assert_eq!(sys.matrix().rows(), 1);
        assert_eq!(sys.matrix().entry(0, 0), &ri(2));
        assert_eq!(sys.matrix().entry(0, 1), &ri(1));
        assert_eq!(sys.matrix().entry(0, 2), &ri(-1));
    }

    #[test]
    fn generate_system_b_coefficients() {
        let sys =
            generate_prefix(FamilyTag::SystemB, 2, &CoefficientSequence::InversePowersOfTwo)
                .unwrap();
        // Row 2 carries c(2) = 1/4 on y.
        assert_eq!(sys.matrix().entry(1, 0), &Rational::new(1, 4).unwrap());
        assert_eq!(
            sys.variables(),
            &["y", "x1_1", "z1_1", "x2_1", "x2_2", "z2_1", "z2_2"]
        );
    }

    #[test]
    fn generate_system_c_variable_count() {
        let sys = generate_prefix(FamilyTag::SystemC, 3, &CoefficientSequence::PowersOfTwo).unwrap();
        // y + (1 x + 1 z) + (2 x + 1 z) + (3 x + 1 z) = 10 variables.
        assert_eq!(sys.variables().len(), 10);
        assert_eq!(sys.variables()[0], "y");
        assert!(sys.var_index("z3").is_some());
        assert!(sys.var_index("z3_1").is_none());
    }

    #[test]
    fn truncation_uses_variable_prefix() {
        let seq = CoefficientSequence::PowersOfTwo;
        let big = generate_prefix(FamilyTag::SystemA, 4, &seq).unwrap();
        let small = generate_prefix(FamilyTag::SystemA, 2, &seq).unwrap();
        assert_eq!(
            &big.variables()[..small.variables().len()],
            small.variables()
        );
    }

    #[test]
    fn difference_system_solution() {
        // x_i = z_i + i·y. With y = 2, z_i = i: x = (3, 6, 9) wait x_i = i + 2i = 3i.
        let sys = generate_difference_system(3).unwrap();
        let a = Assignment::new(
            [
                ("y".to_string(), ri(2)),
                ("x1".to_string(), ri(3)),
                ("z1".to_string(), ri(1)),
                ("x2".to_string(), ri(6)),
                ("z2".to_string(), ri(2)),
                ("x3".to_string(), ri(9)),
                ("z3".to_string(), ri(3)),
            ],
        )
        .unwrap();
        let check = check_solution(&sys, &a).unwrap();
        assert!(check.all_zero, "residuals: {:?}", check.residuals);
    }

    #[test]
    fn schur_triple_checks() {
        // x + y = z as a custom system.
        let m = RatMatrix::from_int_rows(&[&[1, 1, -1]]).unwrap();
        let sys = LinearSystem::new(
            m,
            vec!["x".into(), "y".into(), "z".into()],
            FamilyTag::Custom,
        )
        .unwrap();
        let good = Assignment::new([
            ("x".to_string(), ri(1)),
            ("y".to_string(), ri(2)),
            ("z".to_string(), ri(3)),
        ])
        .unwrap();
        assert!(check_solution(&sys, &good).unwrap().all_zero);
        let bad = Assignment::new([
            ("x".to_string(), ri(1)),
            ("y".to_string(), ri(2)),
            ("z".to_string(), ri(4)),
        ])
        .unwrap();
        let chk = check_solution(&sys, &bad).unwrap();
        assert!(!chk.all_zero);
        assert_eq!(chk.residuals, vec![ri(-1)]);
    }

    #[test]
    fn check_rejects_missing_variable() {
        let sys = generate_prefix(FamilyTag::SystemA, 1, &CoefficientSequence::PowersOfTwo).unwrap();
        let partial = Assignment::new([("y".to_string(), ri(1))]).unwrap();
        assert!(matches!(
            check_solution(&sys, &partial),
            Err(Error::MissingVariable { .. })
        ));
    }

    #[test]
    fn assignment_rejects_zero_and_duplicates() {
        assert!(matches!(
            Assignment::new([("y".to_string(), ri(0))]),
            Err(Error::ZeroValue { .. })
        ));
        assert!(matches!(
            Assignment::new([("y".to_string(), ri(1)), ("y".to_string(), ri(2))]),
            Err(Error::DuplicateVariable { .. })
        ));
    }

    #[test]
    fn system_invariants() {
        // Zero row rejected.
        let m = RatMatrix::from_int_rows(&[&[1, -1], &[0, 0]]).unwrap();
        assert!(matches!(
            LinearSystem::new(m.clone(), vec!["a".into(), "b".into()], FamilyTag::Custom),
            Err(Error::ZeroRow { row: 2 })
        ));
        // Zero column rejected.
        let m = RatMatrix::from_int_rows(&[&[1, 0], &[2, 0]]).unwrap();
        assert!(matches!(
            LinearSystem::new(m, vec!["a".into(), "b".into()], FamilyTag::Custom),
            Err(Error::ZeroColumn { .. })
        ));
        // Lenient shape allows both.
        let m = RatMatrix::from_int_rows(&[&[1, 0], &[0, 0]]).unwrap();
        assert!(LinearSystem::with_lenient_shape(
            m,
            vec!["a".into(), "b".into()],
            FamilyTag::Custom
        )
        .is_ok());
    }

    #[test]
    fn custom_sequence_bounds_and_zeros() {
        let seq = CoefficientSequence::custom(vec![ri(1), ri(-3)]).unwrap();
        assert_eq!(seq.coefficient(2).unwrap(), ri(-3));
        assert!(matches!(
            seq.coefficient(3),
            Err(Error::CoefficientOutOfRange { n: 3, len: 2 })
        ));
        assert!(matches!(
            CoefficientSequence::custom(vec![ri(1), ri(0)]),
            Err(Error::ZeroCoefficient { n: 2 })
        ));
        assert!(seq.coefficient(0).is_err());
    }

    #[test]
    fn image_expressions_n2() {
        let exprs = generate_image_system(2, &CoefficientSequence::PowersOfTwo).unwrap();
        let labels: Vec<&str> = exprs.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(
            labels,
            vec![
                "x1_1 + 2y",
                "y",
                "x1_1",
                "x2_1 + x2_2 + 4y",
                "x2_1",
                "x2_2",
            ]
        );
        // Every expression shares the free-variable list [y, x1_1, x2_1, x2_2].
        assert_eq!(exprs[0].free_variables, vec!["y", "x1_1", "x2_1", "x2_2"]);
    }

    #[test]
    fn render_parses_back() {
        let seq = CoefficientSequence::InversePowersOfTwo;
        let sys = generate_prefix(FamilyTag::SystemB, 3, &seq).unwrap();
        let text = sys.render();
        assert!(text.contains("1/8y"));
        let reparsed = crate::dsl::parse_system(&text).unwrap();
        assert_eq!(reparsed.matrix(), sys.matrix());
        assert_eq!(reparsed.variables(), sys.variables());
    }
}
