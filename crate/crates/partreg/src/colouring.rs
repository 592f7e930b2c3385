//! Finite colourings of integer and dyadic windows.
//!
//! A [`Colouring`] partitions a window of `2^-scale`-scaled numbers into
//! colour classes `1..=r` according to a [`ColourRule`]. Dyadic rules apply
//! to the *canonical* form of a value (numerator made odd by reducing the
//! level), so they colour each rational once, not per representation.
//!
//! Colour `0` is never a class label; `colour_* -> None` means the value is
//! uncoloured (outside the rule's reach), which makes a colouring *partial*
//! and fails [`verify_colouring_partition`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::systems::{check_solution, Assignment, LinearSystem, SolutionCheck};
use crate::windows::WindowSet;

/// Residue maps serialize as explicit `[residue, colour]` pairs: JSON maps
/// take string keys, which the buffering used by flattened/tagged containers
/// would not convert back to integers.
mod residue_map_serde {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<i64, u8>, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(i64, u8)> = map.iter().map(|(&k, &v)| (k, v)).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<i64, u8>, D::Error> {
        Ok(Vec::<(i64, u8)>::deserialize(d)?.into_iter().collect())
    }
}

/// Rule assigning colours to window elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ColourRule {
    /// Colour of `t` is `values[t - lo]`; `0` entries mean uncoloured.
    ExplicitArray { lo: i64, values: Vec<u8> },
    /// Colour by `t mod q` (euclidean); residues missing from the map are
    /// uncoloured. Applies to integers only.
    ResidueMod {
        q: i64,
        #[serde(with = "residue_map_serde")]
        map: BTreeMap<i64, u8>,
    },
    /// Positive → 1, negative → 2, zero uncoloured. Any scale.
    Sign,
    /// Colour by the canonical numerator modulo `q` (level-independent).
    DyadicNumeratorMod {
        q: i64,
        #[serde(with = "residue_map_serde")]
        map: BTreeMap<i64, u8>,
    },
    /// Colour by the parity of the canonical level: even → 1, odd → 2.
    DyadicLevelParity,
}

/// An `r`-colouring of the window `{t·2^-scale : t ∈ [lo, hi]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Colouring {
    scale: u32,
    lo: i64,
    hi: i64,
    r: u8,
    rule: ColourRule,
}

/// Reduces `(numer, level)` so the numerator is odd or the level is zero.
fn canonicalize(mut numer: i64, mut level: u32) -> (i64, u32) {
    while level > 0 && numer != 0 && numer % 2 == 0 {
        numer /= 2;
        level -= 1;
    }
    (numer, level)
}

impl Colouring {
    pub fn new(scale: u32, lo: i64, hi: i64, r: u8, rule: ColourRule) -> Result<Self> {
        if lo > hi {
            return Err(Error::BadWindow { lo, hi });
        }
        if r == 0 {
            return Err(Error::Precondition("a colouring needs at least one colour".into()));
        }
        let check_map = |map: &BTreeMap<i64, u8>, q: i64| -> Result<()> {
            if q < 1 {
                return Err(Error::Precondition(format!("modulus must be >= 1, got {q}")));
            }
            for (&res, &c) in map {
                if res < 0 || res >= q {
                    return Err(Error::Precondition(format!(
                        "residue {res} out of range for modulus {q}"
                    )));
                }
                if c < 1 || c > r {
                    return Err(Error::Precondition(format!(
                        "colour {c} for residue {res} outside 1..={r}"
                    )));
                }
            }
            Ok(())
        };
        match &rule {
            ColourRule::ExplicitArray { values, .. } => {
                if let Some(&c) = values.iter().find(|&&c| c > r) {
                    return Err(Error::Precondition(format!(
                        "explicit colour {c} outside 1..={r}"
                    )));
                }
            }
            ColourRule::ResidueMod { q, map } | ColourRule::DyadicNumeratorMod { q, map } => {
                check_map(map, *q)?;
            }
            ColourRule::Sign | ColourRule::DyadicLevelParity => {
                if r < 2 {
                    return Err(Error::Precondition(
                        "this rule produces two colours; r must be >= 2".into(),
                    ));
                }
            }
        }
        Ok(Colouring { scale, lo, hi, r, rule })
    }

    /// The identity residue colouring: `t mod q` gets colour `(t mod q) + 1`.
    pub fn residue_identity(q: i64, lo: i64, hi: i64) -> Result<Self> {
        if !(1..=255).contains(&q) {
            return Err(Error::Precondition(format!("modulus {q} outside 1..=255")));
        }
        let map = (0..q).map(|a| (a, (a + 1) as u8)).collect();
        Colouring::new(0, lo, hi, q as u8, ColourRule::ResidueMod { q, map })
    }

    /// The odd/even colouring: evens → 1, odds → 2.
    pub fn parity(lo: i64, hi: i64) -> Result<Self> {
        Colouring::residue_identity(2, lo, hi)
    }

    /// Sign colouring of a symmetric window.
    pub fn sign(scale: u32, lo: i64, hi: i64) -> Result<Self> {
        Colouring::new(scale, lo, hi, 2, ColourRule::Sign)
    }

    /// Dyadic colouring by canonical numerator mod `q` (identity labels).
    pub fn numerator_identity(q: i64, scale: u32, lo: i64, hi: i64) -> Result<Self> {
        if !(1..=255).contains(&q) {
            return Err(Error::Precondition(format!("modulus {q} outside 1..=255")));
        }
        let map = (0..q).map(|a| (a, (a + 1) as u8)).collect();
        Colouring::new(scale, lo, hi, q as u8, ColourRule::DyadicNumeratorMod { q, map })
    }

    /// Dyadic colouring by canonical level parity.
    pub fn level_parity(scale: u32, lo: i64, hi: i64) -> Result<Self> {
        Colouring::new(scale, lo, hi, 2, ColourRule::DyadicLevelParity)
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    /// Number of colours.
    pub fn r(&self) -> u8 {
        self.r
    }

    pub fn rule(&self) -> &ColourRule {
        &self.rule
    }

    /// Colour of the value `numer · 2^-level`, ignoring domain bounds.
    pub fn colour_at_level(&self, numer: i64, level: u32) -> Option<u8> {
        let (cn, cl) = canonicalize(numer, level);
        let colour = match &self.rule {
            ColourRule::ExplicitArray { lo, values } => {
                if cl != 0 {
                    return None;
                }
                let idx = cn.checked_sub(*lo)?;
                if idx < 0 || idx as usize >= values.len() {
                    return None;
                }
                match values[idx as usize] {
                    0 => return None,
                    c => c,
                }
            }
            ColourRule::ResidueMod { q, map } => {
                if cl != 0 {
                    return None;
                }
                *map.get(&cn.rem_euclid(*q))?
            }
            ColourRule::Sign => match cn.signum() {
                1 => 1,
                -1 => 2,
                _ => return None,
            },
            ColourRule::DyadicNumeratorMod { q, map } => {
                if cn == 0 {
                    return None;
                }
                *map.get(&cn.rem_euclid(*q))?
            }
            ColourRule::DyadicLevelParity => {
                if cn == 0 {
                    return None;
                }
                1 + (cl % 2) as u8
            }
        };
        Some(colour)
    }

    /// Colour of an integer.
    pub fn colour_int(&self, t: i64) -> Option<u8> {
        self.colour_at_level(t, 0)
    }

    /// Colour of an exact rational value (must be dyadic).
    pub fn colour_value(&self, v: &Rational) -> Option<u8> {
        let (numer, level) = v.dyadic_parts()?;
        let numer = i64::try_from(numer).ok()?;
        self.colour_at_level(numer, level)
    }

    /// True iff `numer · 2^-level` lies in the declared domain window.
    pub fn in_domain(&self, numer: i64, level: u32) -> bool {
        let (cn, cl) = canonicalize(numer, level);
        if cl > self.scale {
            return false;
        }
        // Compare at the domain scale: value = cn · 2^(scale - cl) · 2^-scale.
        let shift = self.scale - cl;
        if shift >= 63 {
            return cn == 0 && self.lo <= 0 && 0 <= self.hi;
        }
        match cn.checked_mul(1i64 << shift) {
            Some(t) => self.lo <= t && t <= self.hi,
            None => false,
        }
    }

    /// True iff an exact rational lies in the domain.
    pub fn value_in_domain(&self, v: &Rational) -> bool {
        match v.dyadic_parts() {
            Some((numer, level)) => match i64::try_from(numer) {
                Ok(n) => self.in_domain(n, level),
                Err(_) => false,
            },
            None => false,
        }
    }

    /// The colour-`c` elements among integers `[lo, hi]`, as a scale-0 set.
    /// Domain bounds are respected: out-of-domain elements are excluded.
    pub fn class_set_int(&self, colour: u8, lo: i64, hi: i64) -> Result<WindowSet> {
        self.class_set_level(colour, 0, lo, hi)
    }

    /// The colour-`c` numerators at `level` within `[lo, hi]`.
    pub fn class_set_level(&self, colour: u8, level: u32, lo: i64, hi: i64) -> Result<WindowSet> {
        WindowSet::from_fn(level, lo, hi, |t| {
            self.colour_at_level(t, level) == Some(colour) && self.in_domain(t, level)
        })
    }
}

/// True iff the rule yields a total function into `{1..r}` over the
/// declared domain window.
pub fn verify_colouring_partition(col: &Colouring) -> bool {
    (col.lo..=col.hi).all(|t| match col.colour_at_level(t, col.scale) {
        Some(c) => c >= 1 && c <= col.r,
        None => false,
    })
}

/// A monochromatic solution together with its verification data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionReport {
    pub assignment: Assignment,
    pub colour: u8,
    pub check: SolutionCheck,
}

/// Independent re-verification of a [`SolutionReport`]: residuals are
/// recomputed from scratch, every value must wear the reported colour, and
/// every value must lie in the colouring's domain.
pub fn verify_solution_report(
    system: &LinearSystem,
    col: &Colouring,
    report: &SolutionReport,
) -> Result<()> {
    let check = check_solution(system, &report.assignment)?;
    if !check.all_zero {
        return Err(Error::Invariant(format!(
            "solution has a nonzero residual: {:?}",
            check.residuals
        )));
    }
    for (var, value) in report.assignment.iter() {
        match col.colour_value(value) {
            Some(c) if c == report.colour => {}
            Some(c) => {
                return Err(Error::Invariant(format!(
                    "variable {var} = {value} has colour {c}, expected {}",
                    report.colour
                )));
            }
            None => {
                return Err(Error::Invariant(format!(
                    "variable {var} = {value} is uncoloured"
                )));
            }
        }
        if !col.value_in_domain(value) {
            return Err(Error::Invariant(format!(
                "variable {var} = {value} lies outside the colouring domain"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_identity_is_total() {
        let col = Colouring::residue_identity(3, 1, 100).unwrap();
        assert!(verify_colouring_partition(&col));
        assert_eq!(col.colour_int(9), Some(1));
        assert_eq!(col.colour_int(10), Some(2));
        assert_eq!(col.colour_int(11), Some(3));
    }

    #[test]
    fn missing_residue_fails_partition() {
        let map: BTreeMap<i64, u8> = [(0i64, 1u8), (1, 2)].into_iter().collect();
        let col =
            Colouring::new(0, 1, 100, 2, ColourRule::ResidueMod { q: 3, map }).unwrap();
        assert!(!verify_colouring_partition(&col));
        assert_eq!(col.colour_int(2), None);
        assert_eq!(col.colour_int(3), Some(1));
    }

    #[test]
    fn sign_colouring_and_zero() {
        let with_zero = Colouring::sign(0, -10, 10).unwrap();
        assert!(!verify_colouring_partition(&with_zero));
        assert_eq!(with_zero.colour_int(5), Some(1));
        assert_eq!(with_zero.colour_int(-5), Some(2));
        assert_eq!(with_zero.colour_int(0), None);
        let punctured = Colouring::sign(0, 1, 10).unwrap();
        assert!(verify_colouring_partition(&punctured));
    }

    #[test]
    fn explicit_array_bounds() {
        let col = Colouring::new(
            0,
            1,
            4,
            2,
            ColourRule::ExplicitArray { lo: 1, values: vec![1, 2, 2, 1] },
        )
        .unwrap();
        assert!(verify_colouring_partition(&col));
        assert_eq!(col.colour_int(1), Some(1));
        assert_eq!(col.colour_int(4), Some(1));
        assert_eq!(col.colour_int(5), None);
        assert_eq!(col.colour_int(0), None);
        assert!(Colouring::new(
            0,
            1,
            2,
            1,
            ColourRule::ExplicitArray { lo: 1, values: vec![1, 2] }
        )
        .is_err());
    }

    #[test]
    fn dyadic_numerator_mod_is_level_independent() {
        let col = Colouring::numerator_identity(3, 24, 1, 1 << 40).unwrap();
        // 6/4 = 3/2 canonically: numerator 3 ≡ 0 (mod 3) → colour 1.
        assert_eq!(col.colour_at_level(6, 2), Some(1));
        assert_eq!(col.colour_at_level(3, 1), Some(1));
        // 5/8: numerator 5 ≡ 2 → colour 3.
        assert_eq!(col.colour_at_level(5, 3), Some(3));
        // Same value at a deeper representation: 10/16.
        assert_eq!(col.colour_at_level(10, 4), Some(3));
        // Rational entry point.
        let v = Rational::new(5, 8).unwrap();
        assert_eq!(col.colour_value(&v), Some(3));
        assert_eq!(col.colour_value(&Rational::new(1, 3).unwrap()), None);
    }

    #[test]
    fn level_parity_uses_canonical_level() {
        let col = Colouring::level_parity(24, 1, 1 << 40).unwrap();
        assert_eq!(col.colour_at_level(4, 2), Some(1)); // 4/4 = 1, level 0
        assert_eq!(col.colour_at_level(3, 1), Some(2)); // 3/2, level 1
        assert_eq!(col.colour_at_level(6, 2), Some(2)); // 3/2 again
        assert_eq!(col.colour_at_level(3, 2), Some(1)); // 3/4, level 2
        assert_eq!(col.colour_at_level(0, 5), None);
    }

    #[test]
    fn class_sets_and_nesting() {
        let col = Colouring::numerator_identity(3, 24, 1, 1 << 40).unwrap();
        // Class 1 (canonical numerator ≡ 0 mod 3) at any level is exactly the
        // multiples of 3 (the odd part is divisible by 3 iff t is).
        for level in [0u32, 3, 7] {
            let s = col.class_set_level(1, level, 1, 300).unwrap();
            let expect = WindowSet::residue_class(level, 1, 300, 3, 0).unwrap();
            assert!(s.equal_on(&expect, 1, 300).unwrap(), "level {level}");
        }
        // Nesting: membership of t at level j matches 2t at level j+1.
        let j2 = col.class_set_level(2, 2, 1, 300).unwrap();
        let j3 = col.class_set_level(2, 3, 1, 600).unwrap();
        for t in 1..=300 {
            assert_eq!(j2.contains(t), j3.contains(2 * t), "t = {t}");
        }
    }

    #[test]
    fn domain_checks() {
        let col = Colouring::numerator_identity(3, 4, 1, 160).unwrap();
        // Domain values: t/16 for t in [1, 160], i.e. (0, 10].
        assert!(col.in_domain(5, 4));
        assert!(col.in_domain(10, 0)); // 10 = 160/16
        assert!(!col.in_domain(11, 0));
        assert!(!col.in_domain(5, 5)); // level too deep
        assert!(col.value_in_domain(&Rational::new(3, 8).unwrap()));
        assert!(!col.value_in_domain(&Rational::new(1, 32).unwrap()));
        assert!(!col.value_in_domain(&Rational::new(1, 3).unwrap()));
    }

    #[test]
    fn class_sets_respect_domain() {
        let col = Colouring::residue_identity(2, 1, 10).unwrap();
        let evens = col.class_set_int(1, 1, 20).unwrap();
        // Elements beyond the domain bound 10 are excluded.
        assert_eq!(evens.iter().collect::<Vec<_>>(), vec![2, 4, 6, 8, 10]);
    }

    #[test]
    fn solution_report_verification() {
        use crate::dsl::parse_system;
        let system = parse_system("x + y = z").unwrap();
        let col = Colouring::residue_identity(2, 1, 20).unwrap();
        let assignment = Assignment::new(
            [("x", 2i64), ("y", 2), ("z", 4)]
                .into_iter()
                .map(|(v, n)| (v.to_string(), Rational::from(n))),
        )
        .unwrap();
        let check = check_solution(&system, &assignment).unwrap();
        let report = SolutionReport { assignment, colour: 1, check };
        verify_solution_report(&system, &col, &report).unwrap();
        // Wrong colour claim is caught.
        let mut bad = report.clone();
        bad.colour = 2;
        assert!(verify_solution_report(&system, &col, &bad).is_err());
        // Out-of-domain value is caught.
        let wide = Assignment::new(
            [("x", 12i64), ("y", 12), ("z", 24)]
                .into_iter()
                .map(|(v, n)| (v.to_string(), Rational::from(n))),
        )
        .unwrap();
        let check = check_solution(&system, &wide).unwrap();
        let report = SolutionReport { assignment: wide, colour: 1, check };
        assert!(verify_solution_report(&system, &col, &report).is_err());
    }
}
