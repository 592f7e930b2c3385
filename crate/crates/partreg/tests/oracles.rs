//! End-to-end frozen values: each test pins a quantity that was derived
//! independently of the code under test (by a hand argument recorded in the
//! comment, or by exhaustive enumeration small enough to redo on paper), so
//! regressions show up as changed numbers rather than changed behaviour.

use partreg::colouring::{verify_solution_report, Colouring};
use partreg::rational::Rational;
use partreg::solver::{solve_system_a, solve_system_c, SolveOutcome, SolverConfig};
use partreg::stabilize::{
    dyadic_dstar, stabilize_dyadic, stabilize_symmetric, DyadicOutcome, StabilizeConfig,
    StabilizeOutcome,
};
use partreg::systems::{generate_prefix, CoefficientSequence, FamilyTag};
use partreg::windows::{difference, iterate_sumset, sumset, WindowSet};

fn small_cfg() -> SolverConfig {
    SolverConfig {
        window_hi: 50_000,
        stab_window: 20_000,
        dyadic_window: 10_000,
        witness_cap: 200_000,
        ..SolverConfig::default()
    }
}

/// Perfect squares on [1, 10^4]: count(1..n) = floor(sqrt(n)), so the
/// density sweep maximizes floor(sqrt(n))/n over n in [5000, 10^4]. Inside
/// a run between consecutive squares the ratio decays, and at n = k^2 it is
/// 1/k, so the maximum sits at the first square past 5000: 71^2 = 5041,
/// giving exactly 1/71 (comfortably below 1/50).
#[test]
fn squares_density_on_ten_thousand_is_one_seventy_first() {
    let squares = WindowSet::from_fn(0, 1, 10_000, |t| {
        let r = (t as f64).sqrt() as i64;
        r * r == t || (r + 1) * (r + 1) == t
    })
    .unwrap();
    let d = squares.window_density().unwrap();
    assert_eq!(d, Rational::new(1, 71).unwrap());
    assert!(d <= Rational::new(1, 50).unwrap());
}

/// Odd + odd = even, and every even x strictly inside the doubled window
/// splits as x = a + b with both parts odd and in range, so the sumset is
/// the even numbers everywhere except the two corners ±2w, which would need
/// both summands at the (even) window endpoints. The certified region spans
/// the full doubled window because both inputs carry full-window
/// certificates.
#[test]
fn odds_plus_odds_is_exactly_the_evens() {
    let w = 10_000i64;
    let odds = WindowSet::from_fn(0, -w, w, |t| t.rem_euclid(2) == 1).unwrap();
    let sum = sumset(&odds, &odds).unwrap();
    let (lo, hi) = sum.certified().expect("full-window inputs certify their sum");
    assert_eq!((lo, hi), (-2 * w, 2 * w));
    assert!(!sum.contains(lo) && !sum.contains(hi));
    for t in lo + 2..=hi - 2 {
        assert_eq!(sum.contains(t), t.rem_euclid(2) == 0, "parity mismatch at {t}");
    }
}

/// For A = {n ≡ 1 mod 3}, the spread S = (A − A) ∪ {0} is every multiple of
/// three the window allows, which is already closed under addition (x + 0
/// re-derives each element), so stabilization certifies m = 3 at K = 1 and
/// the two-fold sumset still equals 3·Z on its certified region.
#[test]
fn one_mod_three_spread_stabilizes_to_multiples_of_three() {
    let a = WindowSet::from_fn(0, 1, 3000, |t| t.rem_euclid(3) == 1).unwrap();
    let mut s = difference(&a, &a).unwrap();
    s.insert(0).unwrap();
    let out = stabilize_symmetric(&s, &StabilizeConfig::default()).unwrap();
    let StabilizeOutcome::Stabilized { report, stable } = out else {
        panic!("spread of a full residue class must stabilize");
    };
    assert!(report.certified);
    assert_eq!(report.m, 3);
    assert_eq!(report.k, 1);
    let (cl, ch) = report.claim;
    for t in cl..=ch {
        assert_eq!(stable.contains(t), t.rem_euclid(3) == 0);
    }

    let twice = iterate_sumset(&s, 2).unwrap();
    let (tl, th) = twice.certified().expect("sumset of a certified window certifies");
    assert!(tl < 0 && th > 0);
    for t in tl..=th {
        assert_eq!(twice.contains(t), t.rem_euclid(3) == 0);
    }
}

/// For A = odds on [1, 10^4] the spread is the even numbers plus 0, whose
/// window density is exactly 1/2 (attained at n = 5000), so the iteration
/// bound is ceil(2 / (1/2)) = 4; the spread is already a fixpoint (x + 0),
/// so K = 1 with modulus 2.
#[test]
fn odds_spread_has_modulus_two_within_bound_four() {
    let a = WindowSet::from_fn(0, 1, 10_000, |t| t.rem_euclid(2) == 1).unwrap();
    let mut s = difference(&a, &a).unwrap();
    s.insert(0).unwrap();
    let out = stabilize_symmetric(&s, &StabilizeConfig::default()).unwrap();
    let StabilizeOutcome::Stabilized { report, .. } = out else {
        panic!("spread of the odds must stabilize");
    };
    assert!(report.certified);
    assert_eq!(report.m, 2);
    assert_eq!(report.bound_k, 4);
    assert_eq!(report.k, 1);
    assert!(report.k <= report.bound_k);
}

/// The integer solver does not depend on the coefficient sequence being
/// powers of two: with c = (3, 5, 7) and a mod-2 colouring it still returns
/// a verified monochromatic solution to the three-equation prefix.
#[test]
fn custom_coefficients_three_five_seven_solve_mod_two() {
    let seq = CoefficientSequence::Custom {
        values: vec![
            Rational::from(3i64),
            Rational::from(5i64),
            Rational::from(7i64),
        ],
    };
    let col = Colouring::residue_identity(2, 1, 50_000).unwrap();
    let outcome = solve_system_a(&col, 3, &seq, &small_cfg()).unwrap();
    let SolveOutcome::Solved { report, .. } = outcome else {
        panic!("mod-2 with custom coefficients must solve");
    };
    let sys = generate_prefix(FamilyTag::SystemA, 3, &seq).unwrap();
    verify_solution_report(&sys, &col, &report).unwrap();
}

/// Under the mod-3 identity colouring the single-z family resolves inside
/// one residue class: stabilization finds modulus 3, and every value in the
/// reported solution is a positive multiple of 3.
#[test]
fn single_z_family_mod_three_solution_is_multiples_of_three() {
    let seq = CoefficientSequence::PowersOfTwo;
    let col = Colouring::residue_identity(3, 1, 50_000).unwrap();
    let outcome = solve_system_c(&col, 4, &seq, &small_cfg()).unwrap();
    let SolveOutcome::Solved { report, .. } = outcome else {
        panic!("mod-3 single-z run must solve");
    };
    let sys = generate_prefix(FamilyTag::SystemC, 4, &seq).unwrap();
    verify_solution_report(&sys, &col, &report).unwrap();
    for (var, value) in report.assignment.iter() {
        let v = value.to_i64().unwrap_or_else(|| panic!("{var} is not an integer"));
        assert!(v > 0 && v % 3 == 0, "{var} = {v} is not a positive multiple of 3");
    }
}

/// Six dyadic levels all carrying the numerator class 1 mod 3 on [1, 6000]:
/// each level density is the sweep maximum (n + 2)/(3n) at the first
/// admissible n ≡ 1 mod 3 past 3000, namely 1001/3001 (one element above
/// 1/3); every level spread is the full multiples of 3, so the vote is
/// unanimous at m = 3, K = 1, and bound_k = ceil(4 · 3001/1001) = 12.
#[test]
fn dyadic_numerator_class_mod_three_votes_modulus_three() {
    let levels: Vec<WindowSet> = (0u32..6)
        .map(|j| WindowSet::from_fn(j, 1, 6000, |t| t.rem_euclid(3) == 1).unwrap())
        .collect();
    let dstar = dyadic_dstar(&levels).unwrap();
    assert_eq!(dstar, Rational::new(1001, 3001).unwrap());
    let third = Rational::new(1, 3).unwrap();
    let slack = Rational::new(1, 3000).unwrap();
    assert!(&dstar - &third < slack);

    let out = stabilize_dyadic(&levels, &StabilizeConfig::default()).unwrap();
    let DyadicOutcome::Stabilized { report } = out else {
        panic!("uniform residue levels must stabilize");
    };
    assert!(report.certified);
    assert_eq!(report.m, 3);
    assert_eq!(report.k, 1);
    assert_eq!(report.bound_k, 12);
    assert_eq!(report.dstar, dstar);
    assert_eq!(report.levels.len(), 6);
    assert!(report.levels.iter().all(|l| l.qualifying));
}
