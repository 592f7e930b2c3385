//! Rado columns-property certificates.
//!
//! A rational matrix `M` with columns `c_0 … c_{n-1}` has the *columns
//! property* when the column indices can be partitioned into nonempty parts
//! `I_1, …, I_s` such that
//!
//! * the columns of `I_1` sum to the zero vector, and
//! * for every `t ≥ 2`, the sum of the columns of `I_t` lies in the rational
//!   span of all columns belonging to `I_1 ∪ … ∪ I_{t-1}`.
//!
//! [`columns_property`] searches for such a partition deterministically
//! (candidate parts enumerated by size, then lexicographically) and returns
//! a [`PartitionCertificate`] carrying, for each later part, an explicit
//! span witness: the earlier columns used and their exact rational
//! coefficients. Certificates are independently checkable with
//! [`verify_certificate`], which recombines every witness with exact
//! arithmetic.
//!
//! The search is exponential in the worst case; a column cap (default
//! [`DEFAULT_COLUMN_CAP`]) guards against runaway inputs and can be raised
//! explicitly via [`columns_property_with_cap`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{RatMatrix, RatVector, SpanBasis};
use crate::rational::Rational;

/// Default cap on the number of matrix columns accepted by
/// [`columns_property`].
pub const DEFAULT_COLUMN_CAP: usize = 20;

/// An exact span witness for one part: the sum of the part's columns equals
/// `Σ coefficients[i] · column(columns[i])`, where every referenced column
/// belongs to an earlier part. Columns with zero coefficient are omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanWitness {
    /// Indices of earlier columns with nonzero coefficient, ascending.
    pub columns: Vec<usize>,
    /// Coefficients parallel to `columns`.
    pub coefficients: Vec<Rational>,
}

/// A columns-property certificate: an ordered partition of the column
/// indices plus one span witness per part after the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionCertificate {
    /// The ordered parts `I_1, …, I_s`; each part lists column indices in
    /// ascending order.
    pub parts: Vec<Vec<usize>>,
    /// `witnesses[t-1]` certifies part `t` (0-based part index `t ≥ 1`).
    pub witnesses: Vec<SpanWitness>,
}

/// Searches for a columns-property certificate under the default column cap.
///
/// Returns `Ok(None)` when the matrix provably has no such partition,
/// `Ok(Some(certificate))` with exact witnesses when it does.
pub fn columns_property(m: &RatMatrix) -> Result<Option<PartitionCertificate>> {
    columns_property_with_cap(m, DEFAULT_COLUMN_CAP)
}

/// As [`columns_property`] with an explicit column cap.
pub fn columns_property_with_cap(
    m: &RatMatrix,
    cap: usize,
) -> Result<Option<PartitionCertificate>> {
    let n = m.cols();
    if n > cap {
        return Err(Error::CapExceeded(format!(
            "matrix has {n} columns; the columns-property search cap is {cap}"
        )));
    }
    let cols = m.columns();
    let dim = m.rows();
    let all: Vec<usize> = (0..n).collect();
    // Enumerate candidates for the zero-sum first part by (size, lex).
    for size in 1..=n {
        let mut combo = Combinations::new(n, size);
        while let Some(first) = combo.next() {
            let mut sum = RatVector::zeros(dim);
            for &c in first {
                sum = sum.add(&cols[c])?;
            }
            if !sum.is_zero() {
                continue;
            }
            let mut basis = SpanBasis::new(dim);
            for &c in first {
                basis.insert(c, &cols[c])?;
            }
            let remaining: Vec<usize> =
                all.iter().copied().filter(|c| !first.contains(c)).collect();
            if let Some(mut tail) = extend_partition(&cols, &basis, &remaining)? {
                let mut parts = vec![first.to_vec()];
                parts.append(&mut tail);
                let witnesses = compute_witnesses(&cols, dim, &parts)?;
                return Ok(Some(PartitionCertificate { parts, witnesses }));
            }
        }
    }
    Ok(None)
}

/// Recursively extends a partial partition. `basis` spans the columns of all
/// parts chosen so far; `remaining` is sorted ascending.
fn extend_partition(
    cols: &[RatVector],
    basis: &SpanBasis,
    remaining: &[usize],
) -> Result<Option<Vec<Vec<usize>>>> {
    if remaining.is_empty() {
        return Ok(Some(Vec::new()));
    }
    // Shortcut: when every remaining column already lies in the span, the
    // (size, lex) search would pick them as ascending singletons anyway.
    let mut all_in_span = true;
    for &c in remaining {
        if !basis.contains(&cols[c])? {
            all_in_span = false;
            break;
        }
    }
    if all_in_span {
        return Ok(Some(remaining.iter().map(|&c| vec![c]).collect()));
    }
    let dim = cols.first().map(RatVector::dim).unwrap_or(0);
    for size in 1..=remaining.len() {
        let mut combo = Combinations::new(remaining.len(), size);
        while let Some(positions) = combo.next() {
            let part: Vec<usize> = positions.iter().map(|&p| remaining[p]).collect();
            let mut sum = RatVector::zeros(dim);
            for &c in &part {
                sum = sum.add(&cols[c])?;
            }
            if !basis.contains(&sum)? {
                continue;
            }
            let mut next_basis = basis.clone();
            for &c in &part {
                next_basis.insert(c, &cols[c])?;
            }
            let rest: Vec<usize> =
                remaining.iter().copied().filter(|c| !part.contains(c)).collect();
            if let Some(mut tail) = extend_partition(cols, &next_basis, &rest)? {
                let mut out = vec![part];
                out.append(&mut tail);
                return Ok(Some(out));
            }
        }
    }
    Ok(None)
}

/// Rebuilds the span witnesses for a known-good partition.
fn compute_witnesses(
    cols: &[RatVector],
    dim: usize,
    parts: &[Vec<usize>],
) -> Result<Vec<SpanWitness>> {
    let mut basis = SpanBasis::new(dim);
    let mut witnesses = Vec::with_capacity(parts.len().saturating_sub(1));
    for (t, part) in parts.iter().enumerate() {
        if t > 0 {
            let mut sum = RatVector::zeros(dim);
            for &c in part {
                sum = sum.add(&cols[c])?;
            }
            let expr = basis.express(&sum)?.ok_or_else(|| {
                Error::Invariant(format!(
                    "search accepted part {} but its sum is outside the earlier span",
                    t + 1
                ))
            })?;
            let (columns, coefficients) = expr.into_iter().unzip();
            witnesses.push(SpanWitness { columns, coefficients });
        }
        for &c in part {
            basis.insert(c, &cols[c])?;
        }
    }
    Ok(witnesses)
}

/// Checks a certificate against a matrix with exact arithmetic.
///
/// Verifies, in order: the parts are nonempty, in range, disjoint and cover
/// every column; the first part sums to zero; there is exactly one witness
/// per later part; every witness references only columns from strictly
/// earlier parts; and every witness recombines exactly to its part's column
/// sum. The error names the first violated invariant.
pub fn verify_certificate(m: &RatMatrix, cert: &PartitionCertificate) -> Result<()> {
    let n = m.cols();
    let dim = m.rows();
    if cert.parts.is_empty() {
        return Err(Error::Invariant("certificate has no parts".into()));
    }
    let mut seen = vec![false; n];
    for (t, part) in cert.parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Invariant(format!("part {} is empty", t + 1)));
        }
        for &c in part {
            if c >= n {
                return Err(Error::Invariant(format!(
                    "part {} references column {c}, but the matrix has {n} columns",
                    t + 1
                )));
            }
            if seen[c] {
                return Err(Error::Invariant(format!(
                    "column {c} appears in more than one part"
                )));
            }
            seen[c] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::Invariant(format!(
            "column {missing} is missing from the partition"
        )));
    }
    let cols = m.columns();
    let mut sum = RatVector::zeros(dim);
    for &c in &cert.parts[0] {
        sum = sum.add(&cols[c])?;
    }
    if !sum.is_zero() {
        return Err(Error::Invariant("first part does not sum to zero".into()));
    }
    if cert.witnesses.len() + 1 != cert.parts.len() {
        return Err(Error::Invariant(format!(
            "expected {} witnesses for {} parts, found {}",
            cert.parts.len() - 1,
            cert.parts.len(),
            cert.witnesses.len()
        )));
    }
    let mut earlier = vec![false; n];
    for &c in &cert.parts[0] {
        earlier[c] = true;
    }
    for (t, part) in cert.parts.iter().enumerate().skip(1) {
        let witness = &cert.witnesses[t - 1];
        if witness.columns.len() != witness.coefficients.len() {
            return Err(Error::Invariant(format!(
                "witness for part {} has {} columns but {} coefficients",
                t + 1,
                witness.columns.len(),
                witness.coefficients.len()
            )));
        }
        let mut part_sum = RatVector::zeros(dim);
        for &c in part {
            part_sum = part_sum.add(&cols[c])?;
        }
        let mut combo = RatVector::zeros(dim);
        for (&c, coeff) in witness.columns.iter().zip(&witness.coefficients) {
            if c >= n {
                return Err(Error::Invariant(format!(
                    "witness for part {} references column {c}, but the matrix has {n} columns",
                    t + 1
                )));
            }
            if !earlier[c] {
                return Err(Error::Invariant(format!(
                    "witness for part {} references column {c} outside the earlier parts",
                    t + 1
                )));
            }
            combo = combo.add(&cols[c].scale(coeff))?;
        }
        if combo != part_sum {
            return Err(Error::Invariant(format!(
                "witness for part {} does not recombine to the part's column sum",
                t + 1
            )));
        }
        for &c in part {
            earlier[c] = true;
        }
    }
    Ok(())
}

/// Lexicographic fixed-size combination enumerator over `0..n`.
struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
    fresh: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let state = if k <= n && k > 0 { Some((0..k).collect()) } else { None };
        Combinations { n, k, state, fresh: true }
    }

    fn next(&mut self) -> Option<&[usize]> {
        let idx = self.state.as_mut()?;
        if self.fresh {
            self.fresh = false;
            return self.state.as_deref();
        }
        // Advance: find the rightmost position that can still move right.
        let k = self.k;
        let n = self.n;
        let mut i = k;
        loop {
            if i == 0 {
                self.state = None;
                return None;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
        self.state.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{generate_prefix, CoefficientSequence, FamilyTag};

    #[test]
    fn combinations_are_size_then_lex() {
        let mut c = Combinations::new(4, 2);
        let mut all = Vec::new();
        while let Some(s) = c.next() {
            all.push(s.to_vec());
        }
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let mut c = Combinations::new(3, 3);
        assert_eq!(c.next(), Some(&[0, 1, 2][..]));
        assert!(c.next().is_none());
        let mut c = Combinations::new(2, 3);
        assert!(c.next().is_none());
    }

    #[test]
    fn schur_row_has_certificate() {
        // x + y = z: columns (1, 1, -1). {0, 2} sums to zero, {1} in span.
        let m = RatMatrix::from_int_rows(&[&[1, 1, -1]]).unwrap();
        let cert = columns_property(&m).unwrap().expect("certificate");
        assert_eq!(cert.parts, vec![vec![0, 2], vec![1]]);
        assert_eq!(cert.witnesses.len(), 1);
        verify_certificate(&m, &cert).unwrap();
    }

    #[test]
    fn no_zero_sum_subset_means_no_certificate() {
        // (1, 1, -3): no nonempty subset sums to zero.
        let m = RatMatrix::from_int_rows(&[&[1, 1, -3]]).unwrap();
        assert!(columns_property(&m).unwrap().is_none());
    }

    #[test]
    fn single_column_zero_matrix() {
        let m = RatMatrix::from_int_rows(&[&[0]]).unwrap();
        let cert = columns_property(&m).unwrap().expect("zero column is a zero-sum part");
        assert_eq!(cert.parts, vec![vec![0]]);
        verify_certificate(&m, &cert).unwrap();
    }

    #[test]
    fn cap_is_enforced() {
        let row = vec![1i64; 21];
        let refs: Vec<&[i64]> = vec![&row];
        let m = RatMatrix::from_int_rows(&refs).unwrap();
        assert!(matches!(columns_property(&m), Err(Error::CapExceeded(_))));
        // Raising the cap succeeds (and finds nothing for all-ones).
        assert!(columns_property_with_cap(&m, 21).unwrap().is_none());
    }

    #[test]
    fn generated_family_prefixes_have_certificates() {
        // Each equation contributes cancelling x/z column pairs, and the
        // coefficient column ends up inside the accumulated span, so every
        // prefix should certify. Verified end to end with exact recombination.
        for n in 1..=6 {
            let sys =
                generate_prefix(FamilyTag::SystemA, n, &CoefficientSequence::PowersOfTwo).unwrap();
            let cert = columns_property_with_cap(sys.matrix(), 64)
                .unwrap()
                .unwrap_or_else(|| panic!("prefix n={n} should certify"));
            verify_certificate(sys.matrix(), &cert).unwrap();
        }
        for n in 1..=4 {
            let sys =
                generate_prefix(FamilyTag::SystemC, n, &CoefficientSequence::PowersOfTwo).unwrap();
            let cert = columns_property_with_cap(sys.matrix(), 64)
                .unwrap()
                .unwrap_or_else(|| panic!("prefix n={n} should certify"));
            verify_certificate(sys.matrix(), &cert).unwrap();
        }
    }

    #[test]
    fn difference_family_certifies_per_truncation() {
        // Finite truncations pair x_i with z_i (columns cancel), after which
        // the y column lies in the span of the unit vectors.
        for n in 1..=4 {
            let sys = crate::systems::generate_difference_system(n).unwrap();
            let cert = columns_property_with_cap(sys.matrix(), 64).unwrap().unwrap();
            verify_certificate(sys.matrix(), &cert).unwrap();
        }
    }

    #[test]
    fn verify_rejects_tampered_certificates() {
        let m = RatMatrix::from_int_rows(&[&[1, 1, -1]]).unwrap();
        let cert = columns_property(&m).unwrap().unwrap();

        // Drop a column from the partition.
        let mut bad = cert.clone();
        bad.parts[1].clear();
        let err = verify_certificate(&m, &bad).unwrap_err();
        assert!(err.to_string().contains("empty"), "{err}");

        // Duplicate a column.
        let mut bad = cert.clone();
        bad.parts[1] = vec![0];
        let err = verify_certificate(&m, &bad).unwrap_err();
        assert!(err.to_string().contains("more than one part"), "{err}");

        // Break the zero sum.
        let mut bad = cert.clone();
        bad.parts.swap(0, 1);
        let err = verify_certificate(&m, &bad).unwrap_err();
        assert!(
            err.to_string().contains("does not sum to zero")
                || err.to_string().contains("witness"),
            "{err}"
        );

        // Corrupt a witness coefficient.
        let mut bad = cert.clone();
        bad.witnesses[0].coefficients[0] = Rational::from_int(7);
        let err = verify_certificate(&m, &bad).unwrap_err();
        assert!(err.to_string().contains("recombine"), "{err}");

        // Witness referencing a non-earlier column.
        let mut bad = cert.clone();
        bad.witnesses[0] = SpanWitness {
            columns: vec![1],
            coefficients: vec![Rational::one()],
        };
        let err = verify_certificate(&m, &bad).unwrap_err();
        assert!(err.to_string().contains("outside the earlier parts"), "{err}");
    }

    #[test]
    fn single_equation_matches_zero_sum_subset_rule() {
        // For one equation with all coefficients nonzero, the columns
        // property is equivalent to "some nonempty subset of coefficients
        // sums to zero" (the zero-sum subset spans the line, so the rest
        // split into singletons).
        let cases: Vec<Vec<i64>> = vec![
            vec![1, 1, -1],
            vec![1, 1, -3],
            vec![2, -1, -1],
            vec![3, -2, 5],
            vec![2, 2, -4, 7],
            vec![1, -1],
            vec![5],
            vec![-2, 1, 1, 1, -1],
        ];
        for coeffs in cases {
            let has_zero_subset = (1u32..(1 << coeffs.len())).any(|mask| {
                coeffs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &c)| c)
                    .sum::<i64>()
                    == 0
            });
            let refs: Vec<&[i64]> = vec![&coeffs];
            let m = RatMatrix::from_int_rows(&refs).unwrap();
            let cert = columns_property(&m).unwrap();
            assert_eq!(
                cert.is_some(),
                has_zero_subset,
                "coefficients {coeffs:?}"
            );
            if let Some(c) = cert {
                verify_certificate(&m, &c).unwrap();
            }
        }
    }

    #[test]
    fn deterministic_partition_order() {
        // First part is found by (size, lex): for (1, -1, 2, -2) the pair
        // {0, 1} beats {2, 3}.
        let m = RatMatrix::from_int_rows(&[&[1, -1, 2, -2]]).unwrap();
        let cert = columns_property(&m).unwrap().unwrap();
        assert_eq!(cert.parts[0], vec![0, 1]);
        verify_certificate(&m, &cert).unwrap();
    }

    #[test]
    fn column_permutation_preserves_existence() {
        let base = [vec![1i64, 2, -3], vec![0, 1, -1]];
        let perms: Vec<Vec<usize>> =
            vec![vec![0, 1, 2], vec![2, 1, 0], vec![1, 2, 0], vec![2, 0, 1]];
        let mut verdicts = Vec::new();
        for p in &perms {
            let rows: Vec<Vec<i64>> =
                base.iter().map(|r| p.iter().map(|&i| r[i]).collect()).collect();
            let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
            let m = RatMatrix::from_int_rows(&refs).unwrap();
            let cert = columns_property(&m).unwrap();
            if let Some(c) = &cert {
                verify_certificate(&m, c).unwrap();
            }
            verdicts.push(cert.is_some());
        }
        assert!(verdicts.iter().all(|&v| v == verdicts[0]), "{verdicts:?}");
    }
}
