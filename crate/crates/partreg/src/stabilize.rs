//! Stabilization of iterated sumsets on finite windows.
//!
//! Three variants of the same phenomenon are detected here:
//!
//! * [`stabilize_symmetric`]: for a symmetric set `S` (with `0 ∈ S`) the
//!   iterates `S, 2S, 3S, …` clipped to the window form an increasing chain,
//!   so they reach a fixpoint `KS = (K+1)S`. The fixpoint is compared
//!   bit-for-bit against `mℤ` (with `m` the gcd of its elements) on an
//!   interior *claim region*, away from the window boundary where clipping
//!   bites.
//! * [`stabilize_asymmetric`]: for a set `A` of positive integers, the
//!   difference sets `X_k = A − kA` eventually become unions of cosets of
//!   `mℤ`, where `m` is the stabilized modulus of `(A − A) ∪ {0}`. The
//!   residue lists per `k` are reported.
//! * [`stabilize_dyadic`]: for a family of sets at increasing dyadic scales,
//!   each sufficiently dense level stabilizes on its own, and the level
//!   moduli are combined by majority vote.
//!
//! A search that exhausts its iteration budget without observing the event
//! returns an `Inconclusive` outcome — that is a report, not an error;
//! errors are reserved for malformed inputs.
//!
//! How many iterations can be needed is tied to the density of the set: if
//! `|S ∩ [1, n]| ≥ δ·n` for some `n` in the top half of the window, the
//! fixpoint arrives within about `2/δ` steps, so the budget is `⌈2/δ⌉` plus
//! configurable slack (`⌈4/δ⌉` in the dyadic case, where levels interact).

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::windows::{difference, difference_windowed, sumset_windowed, WindowSet};

/// Tuning knobs for the stabilization searches.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizeConfig {
    /// The claim region leaves a margin of `window span / margin_div` at
    /// each end of the window.
    pub margin_div: i64,
    /// Extra iterations beyond the density bound.
    pub slack: u32,
    /// Hard cap on the number of iterations.
    pub k_cap: u32,
}

impl Default for StabilizeConfig {
    fn default() -> Self {
        StabilizeConfig { margin_div: 32, slack: 3, k_cap: 64 }
    }
}

impl StabilizeConfig {
    fn k_limit(&self, bound_k: u32, floor: u32) -> u32 {
        bound_k.saturating_add(self.slack).max(floor).min(self.k_cap)
    }
}

/// `⌈c / d⌉` for a positive rational `d`, saturating.
fn ceil_bound(c: i64, d: &Rational) -> u32 {
    let p = d.numer().to_i128().unwrap_or(i128::MAX);
    let q = d.denom().to_i128().unwrap_or(i128::MAX);
    if p <= 0 {
        return u32::MAX;
    }
    let v = ((c as i128) * q + p - 1) / p;
    v.clamp(1, u32::MAX as i128) as u32
}

/// Certificate data for a stabilized symmetric iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizationReport {
    pub scale: u32,
    /// Window of the iterated set.
    pub window: (i64, i64),
    /// Least `k` observed with `(k+1)S = kS` on the window.
    pub k: u32,
    /// Density-derived iteration bound `⌈2/δ⌉`.
    pub bound_k: u32,
    /// Gcd of the fixpoint's elements.
    pub m: i64,
    /// Density of the positive part of `S`.
    pub density: Rational,
    /// Interior region on which the fixpoint was compared against `mℤ`.
    pub claim: (i64, i64),
    /// True iff the fixpoint equals `mℤ` bit-for-bit on the claim region.
    pub certified: bool,
}

/// Outcome of [`stabilize_symmetric`].
#[derive(Clone, Debug)]
pub enum StabilizeOutcome {
    /// The chain reached a fixpoint; `stable` is `KS`.
    Stabilized { report: StabilizationReport, stable: WindowSet },
    /// The iteration budget was exhausted before a fixpoint appeared.
    Inconclusive { tested_up_to: u32, reason: String },
}

/// Iterates `S, 2S, 3S, …` (clipped to the window of `S`) until two
/// consecutive iterates are equal, then factors the fixpoint as `mℤ`.
///
/// Preconditions: the window is symmetric with a positive part, `0 ∈ S`,
/// `S = −S`, and `S` has at least one positive element. Because `0 ∈ S`
/// the chain is increasing, so a fixpoint stays fixed forever; reaching one
/// is conclusive.
pub fn stabilize_symmetric(s: &WindowSet, cfg: &StabilizeConfig) -> Result<StabilizeOutcome> {
    if s.lo() != -s.hi() || s.hi() < 1 {
        return Err(Error::Precondition(format!(
            "symmetric stabilization needs a symmetric window with a positive part, got [{}, {}]",
            s.lo(),
            s.hi()
        )));
    }
    if !s.contains(0) {
        return Err(Error::Precondition("symmetric stabilization needs 0 ∈ S".into()));
    }
    if !s.is_symmetric() {
        return Err(Error::Precondition("symmetric stabilization needs S = −S".into()));
    }
    if s.count_in(1, s.hi()) == 0 {
        return Err(Error::Precondition(
            "symmetric stabilization needs a positive element".into(),
        ));
    }
    let density = s.window_density()?;
    let bound_k = ceil_bound(2, &density);
    let k_limit = cfg.k_limit(bound_k, 4);
    let margin = (s.hi() - s.lo()) / cfg.margin_div;
    let claim = (s.lo() + margin, s.hi() - margin);

    let mut prev = s.clone();
    for k in 2..=k_limit {
        let cur = sumset_windowed(&prev, s, s.lo(), s.hi())?;
        if cur == prev {
            let m = prev.gcd_abs_in(s.lo(), s.hi());
            debug_assert!(m >= 1);
            let pattern = WindowSet::residue_class(s.scale(), claim.0, claim.1, m, 0)?;
            let certified = prev.equal_on(&pattern, claim.0, claim.1)?;
            let report = StabilizationReport {
                scale: s.scale(),
                window: (s.lo(), s.hi()),
                k: k - 1,
                bound_k,
                m,
                density,
                claim,
                certified,
            };
            return Ok(StabilizeOutcome::Stabilized { report, stable: prev });
        }
        prev = cur;
    }
    Ok(StabilizeOutcome::Inconclusive {
        tested_up_to: k_limit,
        reason: format!(
            "no fixpoint within {k_limit} iterations (density bound {bound_k} plus slack, \
             capped at {})",
            cfg.k_cap
        ),
    })
}

/// Coset decomposition of a stable difference set modulo `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosetReport {
    pub m: i64,
    /// Residues `r` such that the set equals `⋃ (r + mℤ)` on the claim region.
    pub residues: Vec<i64>,
    pub contains_zero_coset: bool,
}

/// Certificate data for a stabilized family `X_k = A − kA`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymmetricReport {
    pub scale: u32,
    /// Window of `A`.
    pub window: (i64, i64),
    /// Stabilized modulus of `(A − A) ∪ {0}`.
    pub m: i64,
    /// Least `k` from which every tested `X_k` is a union of cosets of `mℤ`
    /// on the claim region.
    pub k: u32,
    /// Density-derived bound `⌈2/δ⌉` on the `k` that need testing.
    pub bound_k: u32,
    pub density: Rational,
    /// Claim region for the coset comparisons (inside `[−W, W]`).
    pub claim: (i64, i64),
    /// Residues of `X_k` modulo `m` on the claim region, for each tested `k`.
    pub residues_by_k: Vec<(u32, Vec<i64>)>,
    /// Residues at `k = K` (the stabilized ones).
    pub residues: Vec<i64>,
    /// Report for the symmetric stabilization of `(A − A) ∪ {0}`.
    pub symmetric: StabilizationReport,
    /// True iff the symmetric phase certified and every tested `k ≥ K`
    /// matched its coset pattern bit-for-bit.
    pub certified: bool,
}

impl AsymmetricReport {
    /// The coset decomposition of the stable set `X_K`.
    pub fn coset_report(&self) -> CosetReport {
        CosetReport {
            m: self.m,
            residues: self.residues.clone(),
            contains_zero_coset: self.residues.contains(&0),
        }
    }

    /// The coset residues of `X_k` for a tested `k`, if within range.
    pub fn residues_at(&self, k: u32) -> Option<&[i64]> {
        self.residues_by_k
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, r)| r.as_slice())
    }
}

/// Outcome of [`stabilize_asymmetric`].
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)] // constructed once per run; boxing buys nothing
pub enum AsymmetricOutcome {
    /// `stable` is `X_K = A − KA` on the window `[−W, W]`.
    Stabilized { report: AsymmetricReport, stable: WindowSet },
    Inconclusive { tested_up_to: u32, reason: String },
}

/// Stabilizes the difference family `X_k = A − kA` for a set `A` of
/// positive integers.
///
/// `kA` is accumulated on the window `[1, 2W]` (`W` the window bound of
/// `A`), which loses nothing relevant: any `x ∈ X_k ∩ [−W, W]` is `a − s`
/// with `s = a − x ≤ 2W`, and partial sums of positive terms never exceed
/// their total.
pub fn stabilize_asymmetric(a: &WindowSet, cfg: &StabilizeConfig) -> Result<AsymmetricOutcome> {
    if a.lo() < 0 {
        return Err(Error::Precondition(format!(
            "asymmetric stabilization needs a window of positive integers, got lo = {}",
            a.lo()
        )));
    }
    if a.is_empty() || a.min_element() == Some(0) {
        return Err(Error::Precondition(
            "asymmetric stabilization needs a nonempty set of positive integers".into(),
        ));
    }
    let w = a.hi();
    if w < 2 {
        return Err(Error::Precondition(format!("window bound {w} is too small")));
    }

    // Phase 1: modulus of the symmetric closure.
    let mut spread = difference(a, a)?;
    spread.insert(0)?;
    let symmetric = match stabilize_symmetric(&spread, cfg)? {
        StabilizeOutcome::Stabilized { report, .. } => report,
        StabilizeOutcome::Inconclusive { tested_up_to, reason } => {
            return Ok(AsymmetricOutcome::Inconclusive {
                tested_up_to,
                reason: format!("difference set did not stabilize: {reason}"),
            });
        }
    };
    let m = symmetric.m;

    // Phase 2: coset structure of X_k = A − kA.
    let density = a.window_density()?;
    let bound_k = ceil_bound(2, &density);
    let k_limit = cfg.k_limit(bound_k, 2);
    let margin = (2 * w) / cfg.margin_div;
    let claim = (-w + margin, w - margin);
    if claim.0 > claim.1 {
        return Ok(AsymmetricOutcome::Inconclusive {
            tested_up_to: 0,
            reason: "window too small for a nonempty claim region".into(),
        });
    }

    let mut ka = a.restrict(1, 2 * w)?;
    let mut xs: Vec<WindowSet> = Vec::new();
    let mut residues_by_k: Vec<(u32, Vec<i64>)> = Vec::new();
    let mut conforming: Vec<bool> = Vec::new();
    for k in 1..=k_limit {
        if k > 1 {
            ka = sumset_windowed(&ka, a, 1, 2 * w)?;
        }
        let x = difference_windowed(a, &ka, -w, w)?;
        match x.certified() {
            Some((cl, ch)) if cl <= claim.0 && ch >= claim.1 => {}
            _ => {
                return Ok(AsymmetricOutcome::Inconclusive {
                    tested_up_to: k,
                    reason: format!(
                        "certified region of A − {k}A does not cover the claim region"
                    ),
                });
            }
        }
        let residues = x.residues_mod_in(m, claim.0, claim.1)?;
        let pattern =
            WindowSet::union_of_residues(x.scale(), claim.0, claim.1, m, &residues)?;
        conforming.push(x.equal_on(&pattern, claim.0, claim.1)?);
        residues_by_k.push((k, residues));
        xs.push(x);
    }
    // Least K with every tested k ≥ K conforming.
    if !conforming.last().copied().unwrap_or(false) {
        return Ok(AsymmetricOutcome::Inconclusive {
            tested_up_to: k_limit,
            reason: format!(
                "A − {k_limit}A is not a union of cosets of {m}ℤ on the claim region"
            ),
        });
    }
    let mut k_stable = k_limit as usize;
    while k_stable > 1 && conforming[k_stable - 2] {
        k_stable -= 1;
    }
    let stable = xs[k_stable - 1].clone();
    let residues = residues_by_k[k_stable - 1].1.clone();
    let certified = symmetric.certified;
    let report = AsymmetricReport {
        scale: a.scale(),
        window: (a.lo(), a.hi()),
        m,
        k: k_stable as u32,
        bound_k,
        density,
        claim,
        residues_by_k,
        residues,
        symmetric,
        certified,
    };
    Ok(AsymmetricOutcome::Stabilized { report, stable })
}

/// Per-level record inside a [`DyadicReport`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicLevelReport {
    pub scale: u32,
    pub density: Rational,
    /// True iff this level's density exceeds half the deep-level maximum.
    pub qualifying: bool,
    /// Symmetric stabilization of `(A_j − A_j) ∪ {0}`, when attempted and
    /// conclusive.
    pub report: Option<StabilizationReport>,
    /// Present when the level was attempted but inconclusive.
    pub inconclusive: Option<String>,
}

/// Certificate data for a stabilized dyadic family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicReport {
    /// Maximum density over the deeper half of the levels.
    pub dstar: Rational,
    /// Majority modulus over conclusive qualifying levels (ties take the
    /// smaller modulus).
    pub m: i64,
    /// Maximum stabilization step over the voting levels.
    pub k: u32,
    /// Iteration bound `⌈4/d*⌉`.
    pub bound_k: u32,
    /// True iff at least three levels were conclusive and every conclusive
    /// level certified its residue pattern.
    pub certified: bool,
    pub levels: Vec<DyadicLevelReport>,
}

/// Outcome of [`stabilize_dyadic`].
#[derive(Clone, Debug)]
pub enum DyadicOutcome {
    Stabilized { report: DyadicReport },
    Inconclusive { reason: String },
}

/// Per-level density `d_j` (zero when the level has no positive part).
pub fn dyadic_level_density(level: &WindowSet) -> Rational {
    level.window_density().unwrap_or_else(|_| Rational::zero())
}

/// The `d*` proxy: maximum level density over the deeper half of the
/// provided levels.
pub fn dyadic_dstar(levels: &[WindowSet]) -> Result<Rational> {
    if levels.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let densities: Vec<Rational> = levels.iter().map(dyadic_level_density).collect();
    let deep_from = levels.len() / 2;
    Ok(densities[deep_from..]
        .iter()
        .cloned()
        .max()
        .unwrap_or_else(Rational::zero))
}

/// Stabilizes a family of sets at strictly increasing dyadic scales by
/// stabilizing `(A_j − A_j) ∪ {0}` per level and voting on the modulus.
pub fn stabilize_dyadic(levels: &[WindowSet], cfg: &StabilizeConfig) -> Result<DyadicOutcome> {
    if levels.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for pair in levels.windows(2) {
        if pair[1].scale() <= pair[0].scale() {
            return Err(Error::Precondition(format!(
                "level scales must be strictly increasing, got {} then {}",
                pair[0].scale(),
                pair[1].scale()
            )));
        }
    }
    let densities: Vec<Rational> = levels.iter().map(dyadic_level_density).collect();
    let dstar = dyadic_dstar(levels)?;
    if dstar.is_zero() {
        return Ok(DyadicOutcome::Inconclusive {
            reason: "no elements in the deeper half of the levels".into(),
        });
    }
    let half = &dstar * &Rational::new(1, 2).expect("1/2");
    let mut level_reports: Vec<DyadicLevelReport> = Vec::with_capacity(levels.len());
    let mut votes: Vec<(i64, u32)> = Vec::new(); // (m_j, K_j) of conclusive levels
    let mut all_certified = true;
    let mut qualifying_count = 0usize;
    for (a, density) in levels.iter().zip(&densities) {
        let qualifying = *density > half;
        let mut entry = DyadicLevelReport {
            scale: a.scale(),
            density: density.clone(),
            qualifying,
            report: None,
            inconclusive: None,
        };
        if qualifying {
            qualifying_count += 1;
            let mut spread = difference(a, a)?;
            spread.insert(0)?;
            match stabilize_symmetric(&spread, cfg)? {
                StabilizeOutcome::Stabilized { report, .. } => {
                    votes.push((report.m, report.k));
                    all_certified &= report.certified;
                    entry.report = Some(report);
                }
                StabilizeOutcome::Inconclusive { reason, .. } => {
                    entry.inconclusive = Some(reason);
                }
            }
        }
        level_reports.push(entry);
    }
    if qualifying_count < 3 {
        return Ok(DyadicOutcome::Inconclusive {
            reason: format!("fewer than 3 qualifying levels ({qualifying_count})"),
        });
    }
    if votes.is_empty() {
        return Ok(DyadicOutcome::Inconclusive {
            reason: "no qualifying level stabilized".into(),
        });
    }
    // Majority modulus; ties take the smaller modulus.
    let mut counts: std::collections::BTreeMap<i64, usize> = std::collections::BTreeMap::new();
    for &(m, _) in &votes {
        *counts.entry(m).or_insert(0) += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let m = counts
        .iter()
        .find(|&(_, &c)| c == best)
        .map(|(&m, _)| m)
        .expect("votes nonempty");
    let k = votes
        .iter()
        .filter(|&&(mj, _)| mj == m)
        .map(|&(_, kj)| kj)
        .max()
        .expect("winning modulus has at least one vote");
    let bound_k = ceil_bound(4, &dstar);
    let certified = votes.len() >= 3 && all_certified;
    Ok(DyadicOutcome::Stabilized {
        report: DyadicReport { dstar, m, k, bound_k, certified, levels: level_reports },
    })
}
