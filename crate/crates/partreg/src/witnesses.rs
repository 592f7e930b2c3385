//! Verifiers for two explicit counterexamples: the mod-3 residue class that
//! solves no equation of the `2^n`-coefficient family, and the sign-colouring
//! argument that the image expressions cannot stay monochromatic inside
//! `(-δ, δ) \ {0}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::colouring::{Colouring, ColourRule};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::search::find_mono_solution;
use crate::systems::{
    check_solution, generate_image_system, generate_prefix, Assignment, CoefficientSequence,
    FamilyTag,
};

/// Modular rendering of the residue argument for one equation: with every
/// value `≡ 1 (mod 3)`, equation `n` forces `2^n·y ≡ 0 (mod 3)`, but
/// `2^n·1 mod 3` is never zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularEntry {
    pub n: u32,
    /// `2^n mod 3`.
    pub pow2_mod3: i64,
    /// `2^n · y mod 3` with `y ≡ 1`: must be nonzero for the obstruction.
    pub forced_term_mod3: i64,
    pub nonzero: bool,
}

/// One exhaustive-search confirmation: no monochromatic solution of the
/// first `n` equations with values `≡ 1 (mod 3)` inside `[1, window]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveEntry {
    pub n: u32,
    pub window: i64,
    pub found: bool,
}

/// Two independent proofs that the class `{t ≡ 1 (mod 3)}` contains no
/// solution to any prefix of the `2^n` family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub n_max: u32,
    pub window: i64,
    pub modular: Vec<ModularEntry>,
    pub exhaustive: Vec<ExhaustiveEntry>,
    /// True iff every modular entry is nonzero and no exhaustive search
    /// found a solution.
    pub obstructed: bool,
}

/// The single residue class `{t ≡ residue (mod 3)}` as a one-colour partial
/// colouring of `[1, window]`.
pub fn mod3_class_colouring(residue: i64, window: i64) -> Result<Colouring> {
    let map: BTreeMap<i64, u8> = [(residue.rem_euclid(3), 1u8)].into_iter().collect();
    Colouring::new(0, 1, window, 1, ColourRule::ResidueMod { q: 3, map })
}

/// Checks, two ways, that `{t ≡ 1 (mod 3)}` solves no prefix of the `2^n`
/// family up to `n_max`: an exact modular computation per equation, and an
/// exhaustive search over `[1, window]` per prefix.
pub fn verify_mod3_obstruction(n_max: u32, window: i64) -> Result<ObstructionReport> {
    if n_max < 1 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    if window < 9 {
        return Err(Error::Precondition(format!(
            "window bound {window} leaves no room for candidate values"
        )));
    }
    let col = mod3_class_colouring(1, window)?;
    let mut modular = Vec::with_capacity(n_max as usize);
    let mut pow = 1i64;
    for n in 1..=n_max {
        pow = (pow * 2) % 3;
        let forced = pow; // y ≡ 1, so 2^n·y ≡ 2^n (mod 3)
        modular.push(ModularEntry {
            n,
            pow2_mod3: pow,
            forced_term_mod3: forced,
            nonzero: forced != 0,
        });
    }
    let mut exhaustive = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let system =
            generate_prefix(FamilyTag::SystemA, n as usize, &CoefficientSequence::PowersOfTwo)?;
        let found = find_mono_solution(&system, &col, window, false)?.is_some();
        exhaustive.push(ExhaustiveEntry { n, window, found });
    }
    let obstructed =
        modular.iter().all(|e| e.nonzero) && exhaustive.iter().all(|e| !e.found);
    Ok(ObstructionReport { n_max, window, modular, exhaustive, obstructed })
}

/// The `x` values feeding the image expressions: one shared value, or
/// explicit rows (`rows[n-1][j-1]` is `x{n}_{j}`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XValues {
    Uniform { value: Rational },
    Rows { rows: Vec<Vec<Rational>> },
}

/// Input to [`verify_iprnz`]: a value for `y` and values for the `x`'s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IprnzAssignment {
    pub y: Rational,
    pub xs: XValues,
}

impl IprnzAssignment {
    pub fn uniform(y: Rational, x: Rational) -> Self {
        IprnzAssignment { y, xs: XValues::Uniform { value: x } }
    }

    fn x_at(&self, n: u32, j: u32) -> Result<Rational> {
        match &self.xs {
            XValues::Uniform { value } => Ok(value.clone()),
            XValues::Rows { rows } => rows
                .get((n - 1) as usize)
                .and_then(|row| row.get((j - 1) as usize))
                .cloned()
                .ok_or_else(|| {
                    Error::Precondition(format!(
                        "assignment rows do not cover x{n}_{j} (needed for equation {n})"
                    ))
                }),
        }
    }

    /// Every provided value with a label, for validation and sign reports.
    fn labelled_values(&self) -> Vec<(String, Rational)> {
        let mut out = vec![("y".to_string(), self.y.clone())];
        match &self.xs {
            XValues::Uniform { value } => out.push(("x".to_string(), value.clone())),
            XValues::Rows { rows } => {
                for (i, row) in rows.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        out.push((format!("x{}_{}", i + 1, j + 1), v.clone()));
                    }
                }
            }
        }
        out
    }

    fn negated(&self) -> IprnzAssignment {
        let xs = match &self.xs {
            XValues::Uniform { value } => XValues::Uniform { value: -value },
            XValues::Rows { rows } => XValues::Rows {
                rows: rows.iter().map(|r| r.iter().map(|v| -v).collect()).collect(),
            },
        };
        IprnzAssignment { y: -&self.y, xs }
    }
}

/// `x{n}_1 + … + x{n}_n + 2^n·y` for the given assignment.
pub fn expression_value(assignment: &IprnzAssignment, n: u32) -> Result<Rational> {
    let mut v = Rational::pow2(n as i64) * &assignment.y;
    for j in 1..=n {
        v = v + assignment.x_at(n, j)?;
    }
    Ok(v)
}

/// Outcome of [`verify_iprnz`]: either the sign colouring already splits the
/// values, or the least expression forced outside `(-δ, δ)` is exhibited.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ViolationReport {
    /// The values are not monochromatic under the sign colouring.
    SignSplit { positive: Vec<String>, negative: Vec<String> },
    /// Expression `n` escapes the interval: for positive values it exceeds
    /// `delta` (driven by `2^n·y > delta`); for all-negative values the
    /// mirrored bound applies and the expression lies below `-delta`.
    Violation {
        n: u32,
        /// `2^n·y` with the original signs.
        scaled_y: Rational,
        /// Full expression value with the original signs.
        expression: Rational,
        /// The bound escaped: `delta`, or `-delta` when mirrored.
        bound: Rational,
        mirrored: bool,
    },
}

/// Shows that nonzero values inside `(-δ, δ)` cannot keep every image
/// expression inside the same sign class of `(-δ, δ) \ {0}`: mixed signs are
/// a sign split, and uniform signs force expression `n` out of the interval
/// as soon as `2^n·|y| > δ`.
pub fn verify_iprnz(delta: &Rational, assignment: &IprnzAssignment) -> Result<ViolationReport> {
    if !delta.is_positive() {
        return Err(Error::Precondition(format!("delta must be positive, got {delta}")));
    }
    let labelled = assignment.labelled_values();
    for (label, v) in &labelled {
        if v.is_zero() {
            return Err(Error::Precondition(format!(
                "{label} is zero; all values must be nonzero"
            )));
        }
        let abs = v.abs();
        if abs >= *delta {
            return Err(Error::Precondition(format!(
                "|{label}| = {abs} is not below delta = {delta}"
            )));
        }
    }
    let positive: Vec<String> =
        labelled.iter().filter(|(_, v)| v.is_positive()).map(|(l, _)| l.clone()).collect();
    let negative: Vec<String> =
        labelled.iter().filter(|(_, v)| !v.is_positive()).map(|(l, _)| l.clone()).collect();
    if !positive.is_empty() && !negative.is_empty() {
        return Ok(ViolationReport::SignSplit { positive, negative });
    }
    let mirrored = positive.is_empty();
    let work = if mirrored { assignment.negated() } else { assignment.clone() };

    // Least n with 2^n·y > delta; existence is guaranteed since y > 0.
    let mut n = 1u32;
    while &(Rational::pow2(n as i64) * &work.y) <= delta {
        n += 1;
        if n > 4096 {
            return Err(Error::CapExceeded(
                "threshold index exceeds 4096; delta/y is implausibly large".into(),
            ));
        }
    }
    let expr_pos = expression_value(&work, n)?;
    if &expr_pos <= delta {
        return Err(Error::Invariant(
            "expression at the threshold index failed to exceed delta".into(),
        ));
    }
    let (scaled_y, expression, bound) = if mirrored {
        (-(Rational::pow2(n as i64) * &work.y), -expr_pos, -delta)
    } else {
        (Rational::pow2(n as i64) * &work.y, expr_pos, delta.clone())
    };
    Ok(ViolationReport::Violation { n, scaled_y, expression, bound, mirrored })
}

/// Evaluates every image expression up to row `n` and confirms the compound
/// values solve the single-`z` family when bound to the `z` variables.
pub fn image_expressions(
    n: usize,
    assignment: &Assignment,
) -> Result<Vec<(String, Rational)>> {
    let exprs = generate_image_system(n, &CoefficientSequence::PowersOfTwo)?;
    let mut out = Vec::with_capacity(exprs.len());
    for e in &exprs {
        let mut v = Rational::zero();
        for (var, c) in e.free_variables.iter().zip(&e.coefficients) {
            if c.is_zero() {
                continue;
            }
            let val = assignment.get(var).ok_or_else(|| {
                Error::Precondition(format!("assignment is missing {var}"))
            })?;
            v = v + c * val;
        }
        out.push((e.label.clone(), v));
    }
    // The compounds are exactly the z-values of the single-z family.
    let system = generate_prefix(FamilyTag::SystemC, n, &CoefficientSequence::PowersOfTwo)?;
    let mut pairs: Vec<(String, Rational)> = Vec::new();
    for var in system.variables() {
        if let Some(v) = assignment.get(var) {
            pairs.push((var.clone(), v.clone()));
        }
    }
    for i in 1..=n {
        let mut v = Rational::pow2(i as i64)
            * assignment
                .get("y")
                .ok_or_else(|| Error::Precondition("assignment is missing y".into()))?;
        for j in 1..=i {
            let var = format!("x{i}_{j}");
            let x = assignment
                .get(&var)
                .ok_or_else(|| Error::Precondition(format!("assignment is missing {var}")))?;
            v += x;
        }
        if v.is_zero() {
            return Err(Error::Precondition(format!(
                "compound expression for row {i} evaluates to zero"
            )));
        }
        pairs.push((format!("z{i}"), v));
    }
    let check = check_solution(&system, &Assignment::new(pairs)?)?;
    if !check.all_zero {
        return Err(Error::Invariant(
            "image expressions failed to solve the single-z family".into(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obstruction_smallest_case() {
        let report = verify_mod3_obstruction(1, 100).unwrap();
        assert!(report.obstructed);
        assert_eq!(report.modular[0].pow2_mod3, 2);
        assert!(report.modular[0].nonzero);
        assert!(!report.exhaustive[0].found);
    }

    #[test]
    fn obstruction_checks_agree_to_depth_four() {
        let report = verify_mod3_obstruction(4, 200).unwrap();
        assert!(report.obstructed);
        assert_eq!(report.modular.len(), 4);
        assert_eq!(report.exhaustive.len(), 4);
        for (m, e) in report.modular.iter().zip(&report.exhaustive) {
            assert_eq!(m.nonzero, !e.found);
        }
        // 2^n mod 3 alternates 2, 1, 2, 1.
        let pows: Vec<i64> = report.modular.iter().map(|m| m.pow2_mod3).collect();
        assert_eq!(pows, vec![2, 1, 2, 1]);
    }

    #[test]
    fn zero_class_admits_solutions() {
        let col = mod3_class_colouring(0, 100).unwrap();
        let system =
            generate_prefix(FamilyTag::SystemA, 1, &CoefficientSequence::PowersOfTwo).unwrap();
        let report = find_mono_solution(&system, &col, 100, false).unwrap().unwrap();
        let get = |v: &str| report.assignment.get(v).unwrap().to_i64().unwrap();
        assert_eq!((get("y"), get("x1_1"), get("z1_1")), (3, 3, 9));
    }

    fn rat(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    #[test]
    fn iprnz_textbook_case() {
        let delta = rat(1, 2);
        let a = IprnzAssignment::uniform(rat(1, 8), rat(1, 8));
        match verify_iprnz(&delta, &a).unwrap() {
            ViolationReport::Violation { n, scaled_y, expression, bound, mirrored } => {
                assert_eq!(n, 3);
                assert_eq!(scaled_y, rat(1, 1));
                assert_eq!(expression, rat(11, 8));
                assert_eq!(bound, rat(1, 2));
                assert!(!mirrored);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn iprnz_threshold_eleven() {
        let delta = rat(1, 1);
        let a = IprnzAssignment::uniform(rat(1, 1024), rat(1, 1024));
        match verify_iprnz(&delta, &a).unwrap() {
            ViolationReport::Violation { n, .. } => assert_eq!(n, 11),
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn iprnz_sign_split() {
        let delta = rat(1, 2);
        let a = IprnzAssignment {
            y: rat(1, 8),
            xs: XValues::Rows { rows: vec![vec![rat(-1, 8)]] },
        };
        match verify_iprnz(&delta, &a).unwrap() {
            ViolationReport::SignSplit { positive, negative } => {
                assert_eq!(positive, vec!["y"]);
                assert_eq!(negative, vec!["x1_1"]);
            }
            other => panic!("expected a sign split, got {other:?}"),
        }
    }

    #[test]
    fn iprnz_all_negative_mirrors() {
        let delta = rat(1, 2);
        let a = IprnzAssignment::uniform(rat(-1, 8), rat(-1, 8));
        match verify_iprnz(&delta, &a).unwrap() {
            ViolationReport::Violation { n, expression, bound, mirrored, .. } => {
                assert_eq!(n, 3);
                assert_eq!(expression, rat(-11, 8));
                assert_eq!(bound, rat(-1, 2));
                assert!(mirrored);
            }
            other => panic!("expected a mirrored violation, got {other:?}"),
        }
    }

    #[test]
    fn iprnz_rejects_bad_values() {
        let delta = rat(1, 2);
        assert!(verify_iprnz(&delta, &IprnzAssignment::uniform(rat(1, 2), rat(1, 8))).is_err());
        assert!(
            verify_iprnz(&delta, &IprnzAssignment::uniform(rat(0, 1), rat(1, 8))).is_err()
        );
        assert!(verify_iprnz(&rat(-1, 2), &IprnzAssignment::uniform(rat(1, 8), rat(1, 8)))
            .is_err());
    }

    #[test]
    fn iprnz_below_threshold_expressions_stay_inside() {
        // With y = 1/1024 and tiny x's, every expression below the threshold
        // index stays within (0, delta].
        let delta = rat(1, 1);
        let a = IprnzAssignment::uniform(rat(1, 1024), rat(1, 2048));
        for n in 1..10 {
            let v = expression_value(&a, n).unwrap();
            assert!(v.is_positive());
            assert!(v <= delta, "n = {n}: {v}");
        }
        match verify_iprnz(&delta, &a).unwrap() {
            ViolationReport::Violation { n, .. } => assert_eq!(n, 11),
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn image_expression_values() {
        let assignment = Assignment::new(
            [("y", 1i64), ("x1_1", 1)]
                .into_iter()
                .map(|(v, n)| (v.to_string(), Rational::from(n))),
        )
        .unwrap();
        let out = image_expressions(1, &assignment).unwrap();
        let as_pairs: Vec<(String, String)> =
            out.iter().map(|(l, v)| (l.clone(), v.to_string())).collect();
        assert_eq!(
            as_pairs,
            vec![
                ("x1_1 + 2y".to_string(), "3".to_string()),
                ("y".to_string(), "1".to_string()),
                ("x1_1".to_string(), "1".to_string()),
            ]
        );
    }

    #[test]
    fn image_expressions_solve_single_z_family() {
        let assignment = Assignment::new(
            [("y", 1i64), ("x1_1", 1), ("x2_1", 1), ("x2_2", 1)]
                .into_iter()
                .map(|(v, n)| (v.to_string(), Rational::from(n))),
        )
        .unwrap();
        let out = image_expressions(2, &assignment).unwrap();
        // Row-2 compound: 1 + 1 + 4 = 6.
        let compound2 = out.iter().find(|(l, _)| l.starts_with("x2_1")).unwrap();
        assert_eq!(compound2.1.to_string(), "6");
        // Missing variable is reported.
        let partial = Assignment::new(
            [("y", 1i64), ("x1_1", 1)]
                .into_iter()
                .map(|(v, n)| (v.to_string(), Rational::from(n))),
        )
        .unwrap();
        assert!(image_expressions(2, &partial).is_err());
    }
}
