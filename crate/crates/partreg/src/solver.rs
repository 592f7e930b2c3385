//! Constructive solvers for the three generated families.
//!
//! Each solver turns a colouring into an explicit monochromatic solution of
//! the first `n_target` equations, in four steps:
//!
//! 1. **Classify** — build the colour-class sets on a finite window and keep
//!    the dense ones.
//! 2. **Stabilize** — run the appropriate iterated-sumset stabilization per
//!    dense class, yielding a per-class modulus and step; take `m = lcm`,
//!    `K = max` (clipped to at least 2).
//! 3. **Truncate** — solve the first `min(K-1, n_target)` equations inside
//!    an arithmetic progression `(m·d)·{1..l}` by exhaustive search, trying
//!    increasing `l`.
//! 4. **Extend** — for each remaining equation, pick the least witness sums
//!    out of iterated class sumsets and decompose them greedily into class
//!    elements.
//!
//! Every step feeds the [`SolverTrace`]; the assembled solution is
//! re-verified from scratch (residuals, colours, domain) before it is
//! returned. A step that runs out of window or levels produces
//! [`SolveOutcome::Inconclusive`] rather than an error: the input was legal,
//! the search space was just too small.

use serde::{Deserialize, Serialize};

use crate::colouring::{verify_solution_report, Colouring, ColourRule, SolutionReport};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::search::search_in_classes;
use crate::stabilize::{
    stabilize_asymmetric, stabilize_dyadic, stabilize_symmetric, AsymmetricOutcome,
    AsymmetricReport, DyadicOutcome, DyadicReport, StabilizationReport, StabilizeConfig,
    StabilizeOutcome,
};
use crate::systems::{
    check_solution, generate_prefix, Assignment, CoefficientSequence, FamilyTag, LinearSystem,
};
use crate::windows::{
    difference_windowed, find_progression, least_with_shift, sumset_windowed, ProgressionOutcome,
    ProgressionWitness, WindowSet,
};

/// Tuning knobs for the solvers. The defaults fit the shipped acceptance
/// runs; larger windows buy conclusiveness at the cost of time.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Cap on the integer window used for class sets and witnesses.
    pub window_hi: i64,
    /// Window bound for the stabilization phase.
    pub stab_window: i64,
    /// Per-level window bound for dyadic stabilization.
    pub dyadic_window: i64,
    /// A class is dense when its window density reaches this.
    pub dense_threshold: Rational,
    /// First progression length tried.
    pub l_start: u32,
    /// Largest progression length tried (doubling from `l_start`).
    pub l_max: u32,
    /// Deepest dyadic level considered.
    pub max_levels: u32,
    /// Cap on the witness window for extension sums.
    pub witness_cap: i64,
    pub stab: StabilizeConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            window_hi: 2_000_000,
            stab_window: 100_000,
            dyadic_window: 40_000,
            dense_threshold: Rational::new(1, 64).expect("nonzero denominator"),
            l_start: 8,
            l_max: 256,
            max_levels: 24,
            witness_cap: 8_000_000,
            stab: StabilizeConfig::default(),
        }
    }
}

/// Density bookkeeping for one colour class.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassDensity {
    pub colour: u8,
    pub density: Rational,
    pub dense: bool,
}

/// Stabilization evidence for one dense class.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ClassStabilization {
    Symmetric { colour: u8, report: StabilizationReport },
    Asymmetric { colour: u8, report: AsymmetricReport },
    Dyadic { colour: u8, report: DyadicReport },
}

/// Witness for one extended equation: `Σx + c(n)·y = Σz` with every part in
/// the chosen class.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtensionWitness {
    pub n: u32,
    pub coefficient: Rational,
    /// Dyadic level the witness numerators live at (family B only).
    pub level: Option<u32>,
    pub x: Vec<Rational>,
    pub z: Vec<Rational>,
}

/// A colour class dropped by recursing into the multiples of `modulus`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DroppedClass {
    pub depth: u32,
    pub colour: u8,
    pub modulus: i64,
}

/// The solved truncated system and its assignment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruncatedPart {
    pub equations: u32,
    pub values: Vec<(String, Rational)>,
}

/// Full derivation record for a solve; serialized into artifacts so the
/// result can be re-verified without rerunning the pipeline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverTrace {
    pub family: FamilyTag,
    pub n_target: u32,
    pub seq: CoefficientSequence,
    /// Integer window the class analysis ran on.
    pub window: (i64, i64),
    /// Colour of the returned solution.
    pub colour: u8,
    pub class_densities: Vec<ClassDensity>,
    pub stabilizations: Vec<ClassStabilization>,
    /// Combined modulus (lcm over dense classes).
    pub m: i64,
    /// Effective stabilization step (max over dense classes, at least 2).
    pub k: u32,
    pub progression: Option<ProgressionWitness>,
    /// Dyadic level hosting the progression (family B only).
    pub progression_level: Option<u32>,
    pub l_used: Option<u32>,
    pub truncated: Option<TruncatedPart>,
    pub extensions: Vec<ExtensionWitness>,
    pub recursion_depth: u32,
    pub dropped: Vec<DroppedClass>,
    pub notes: Vec<String>,
}

/// Result of a solve: either a verified solution with its derivation, or an
/// honest report of which step starved.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)] // constructed once per run; boxing buys nothing
pub enum SolveOutcome {
    Solved { report: SolutionReport, trace: SolverTrace },
    Inconclusive { step: String, detail: String },
}

fn lcm_i64(a: i64, b: i64) -> Result<i64> {
    let g = num_integer::gcd(a, b);
    if g == 0 {
        return Ok(0);
    }
    (a / g)
        .checked_mul(b)
        .ok_or_else(|| Error::Overflow("lcm of class moduli".into()))
}

struct ClassInfo {
    colour: u8,
    set: WindowSet,
    density: Rational,
    dense: bool,
}

/// Class sets over `[1, w]` with densities and dense flags.
fn integer_classes(
    col: &Colouring,
    w: i64,
    threshold: &Rational,
) -> Result<(Vec<ClassInfo>, Vec<ClassDensity>)> {
    let mut infos = Vec::new();
    let mut densities = Vec::new();
    for colour in 1..=col.r() {
        let set = col.class_set_int(colour, 1, w)?;
        let density =
            if set.is_empty() { Rational::zero() } else { set.window_density()? };
        let dense = density >= *threshold;
        densities.push(ClassDensity { colour, density: density.clone(), dense });
        infos.push(ClassInfo { colour, set, density, dense });
    }
    Ok((infos, densities))
}

fn require_dense(infos: &[ClassInfo]) -> Result<()> {
    if infos.iter().any(|c| c.dense) {
        Ok(())
    } else {
        Err(Error::Invariant(
            "no colour class is dense on the window; a total colouring always has one".into(),
        ))
    }
}

/// Dense colours ordered by descending density (ties by colour).
fn dense_order(infos: &[ClassInfo]) -> Vec<u8> {
    let mut order: Vec<&ClassInfo> = infos.iter().filter(|c| c.dense).collect();
    order.sort_by(|a, b| b.density.cmp(&a.density).then(a.colour.cmp(&b.colour)));
    order.iter().map(|c| c.colour).collect()
}

struct TruncatedSolution {
    witness: ProgressionWitness,
    l: u32,
    colour: u8,
    values: Vec<i64>,
}

enum TruncatedOutcome {
    Found(TruncatedSolution),
    Starved { detail: String },
}

/// Searches for a monochromatic solution of `p_system` with all values in
/// the progression `(m·d)·{1..l}`, doubling `l` until `cfg.l_max`.
fn solve_truncated(
    p_system: &LinearSystem,
    good: &WindowSet,
    colour_of: &dyn Fn(i64) -> Option<u8>,
    dense_colours: &[u8],
    m: i64,
    cfg: &SolverConfig,
) -> Result<TruncatedOutcome> {
    let mut l = cfg.l_start.max(2);
    loop {
        if m.checked_mul(l as i64).is_none_or(|span| span > good.hi()) {
            return Ok(TruncatedOutcome::Starved {
                detail: format!(
                    "window [{}, {}] cannot host an {l}-term progression with gap {m}",
                    good.lo(),
                    good.hi()
                ),
            });
        }
        match find_progression(good, l, m)? {
            ProgressionOutcome::Found(witness) => {
                let step = witness.m * witness.d;
                let mut classes: Vec<(u8, Vec<i64>)> =
                    dense_colours.iter().map(|&c| (c, Vec::new())).collect();
                for i in 1..=l as i64 {
                    let v = step * i;
                    if let Some(c) = colour_of(v) {
                        if let Some(slot) = classes.iter_mut().find(|(cc, _)| *cc == c) {
                            slot.1.push(v);
                        }
                    }
                }
                if let Some((colour, values)) = search_in_classes(p_system, &classes, false)? {
                    return Ok(TruncatedOutcome::Found(TruncatedSolution {
                        witness,
                        l,
                        colour,
                        values,
                    }));
                }
            }
            ProgressionOutcome::NotFound { d_max } => {
                return Ok(TruncatedOutcome::Starved {
                    detail: format!(
                        "no progression of length {l} with gap divisible by {m} in the \
                         union of dense classes (gaps searched up to {m}·{d_max})"
                    ),
                });
            }
        }
        if l >= cfg.l_max {
            return Ok(TruncatedOutcome::Starved {
                detail: format!(
                    "no monochromatic truncated solution inside progressions up to length {l}"
                ),
            });
        }
        l = (l * 2).min(cfg.l_max);
    }
}

/// `layers[j-1] = jA` clipped to `[1, cap]`. Lossless for positive sets:
/// partial sums of positive terms never exceed their total, so every sum
/// `≤ cap` keeps a full decomposition chain inside the window.
fn build_layers(a: &WindowSet, depth: u32, cap: i64) -> Result<Vec<WindowSet>> {
    let base = a.restrict(1, cap)?;
    let mut layers = vec![base];
    for _ in 2..=depth {
        let next = sumset_windowed(layers.last().expect("nonempty"), &layers[0], 1, cap)?;
        layers.push(next);
    }
    Ok(layers)
}

/// Splits `s ∈ depth·A` into `depth` class elements, greedily taking the
/// least usable element at each step.
fn decompose(s: i64, depth: u32, layers: &[WindowSet]) -> Result<Vec<i64>> {
    let mut parts = Vec::with_capacity(depth as usize);
    let mut rem = s;
    for j in (2..=depth).rev() {
        let prev = &layers[(j - 2) as usize];
        let mut chosen = None;
        for a in layers[0].iter() {
            if a >= rem {
                break;
            }
            if prev.contains(rem - a) {
                chosen = Some(a);
                break;
            }
        }
        let a = chosen.ok_or_else(|| {
            Error::Invariant(format!("no decomposition step for {rem} at depth {j}"))
        })?;
        parts.push(a);
        rem -= a;
    }
    if !layers[0].contains(rem) {
        return Err(Error::Invariant(format!(
            "decomposition remainder {rem} is not a class element"
        )));
    }
    parts.push(rem);
    Ok(parts)
}

fn to_rationals(values: &[i64]) -> Vec<Rational> {
    values.iter().map(|&v| Rational::from(v)).collect()
}

/// Builds the full assignment from the truncated solution plus extension
/// witnesses, then re-verifies it against the full system and colouring.
#[allow(clippy::too_many_arguments)]
fn assemble_and_verify(
    full: &LinearSystem,
    p_system: &LinearSystem,
    col: &Colouring,
    truncated_values: &[i64],
    value_scale: u32,
    extensions: &[ExtensionWitness],
    single_z: bool,
    colour: u8,
) -> Result<SolutionReport> {
    let unit = Rational::pow2(-(value_scale as i64));
    let mut pairs: Vec<(String, Rational)> = p_system
        .variables()
        .iter()
        .zip(truncated_values)
        .map(|(var, &v)| (var.clone(), Rational::from(v) * &unit))
        .collect();
    for w in extensions {
        for (j, x) in w.x.iter().enumerate() {
            pairs.push((format!("x{}_{}", w.n, j + 1), x.clone()));
        }
        if single_z {
            pairs.push((format!("z{}", w.n), w.z[0].clone()));
        } else {
            for (j, z) in w.z.iter().enumerate() {
                pairs.push((format!("z{}_{}", w.n, j + 1), z.clone()));
            }
        }
    }
    let assignment = Assignment::new(pairs)?;
    let check = check_solution(full, &assignment)?;
    if !check.all_zero {
        return Err(Error::Invariant(format!(
            "assembled solution has nonzero residuals: {:?}",
            check.residuals
        )));
    }
    let report = SolutionReport { assignment, colour, check };
    verify_solution_report(full, col, &report)?;
    Ok(report)
}

fn truncated_part(p_system: &LinearSystem, values: &[i64], value_scale: u32) -> TruncatedPart {
    let unit = Rational::pow2(-(value_scale as i64));
    TruncatedPart {
        equations: p_system.matrix().rows() as u32,
        values: p_system
            .variables()
            .iter()
            .zip(values)
            .map(|(var, &v)| (var.clone(), Rational::from(v) * &unit))
            .collect(),
    }
}

/// Solves the first `n_target` equations of family A for `col`.
pub fn solve_system_a(
    col: &Colouring,
    n_target: u32,
    seq: &CoefficientSequence,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    precheck_integer(col, n_target)?;
    let w = col.hi().min(cfg.window_hi);
    let (infos, class_densities) = integer_classes(col, w, &cfg.dense_threshold)?;
    require_dense(&infos)?;
    let dense_colours = dense_order(&infos);

    // Symmetric stabilization of (A − A) ∪ {0} per dense class.
    let sw = w.min(cfg.stab_window);
    let mut stabilizations = Vec::new();
    let mut m = 1i64;
    let mut k_max = 1u32;
    for &colour in &dense_colours {
        let a = col.class_set_int(colour, 1, sw)?;
        let mut s = difference_windowed(&a, &a, -sw, sw)?;
        s.insert(0)?;
        match stabilize_symmetric(&s, &cfg.stab)? {
            StabilizeOutcome::Stabilized { report, .. } => {
                if !report.certified {
                    return Ok(SolveOutcome::Inconclusive {
                        step: "stabilize".into(),
                        detail: format!(
                            "class {colour}: fixpoint does not match a single modulus on \
                             the claim region"
                        ),
                    });
                }
                m = lcm_i64(m, report.m)?;
                k_max = k_max.max(report.k);
                stabilizations.push(ClassStabilization::Symmetric { colour, report });
            }
            StabilizeOutcome::Inconclusive { tested_up_to, reason } => {
                return Ok(SolveOutcome::Inconclusive {
                    step: "stabilize".into(),
                    detail: format!(
                        "class {colour} did not stabilize within {tested_up_to} iterations: \
                         {reason}"
                    ),
                });
            }
        }
    }

    let k_eff = k_max.max(2);
    let p_n = (k_eff - 1).min(n_target);
    let p_system = generate_prefix(FamilyTag::SystemA, p_n as usize, seq)?;

    let good = union_dense(&infos)?;
    let colour_of = |v: i64| col.colour_int(v);
    let truncated =
        match solve_truncated(&p_system, &good, &colour_of, &dense_colours, m, cfg)? {
            TruncatedOutcome::Found(t) => t,
            TruncatedOutcome::Starved { detail } => {
                return Ok(SolveOutcome::Inconclusive { step: "truncated system".into(), detail })
            }
        };
    let colour = truncated.colour;
    let y_idx = p_system.var_index("y").ok_or_else(|| Error::Invariant("missing y".into()))?;
    let y = truncated.values[y_idx];

    // Extension witnesses out of iterated class sumsets.
    let mut extensions = Vec::new();
    if p_n < n_target {
        let wit_hi = col.hi().min(cfg.witness_cap);
        let a_star = col.class_set_int(colour, 1, wit_hi)?;
        let layers = build_layers(&a_star, n_target, wit_hi)?;
        for n in (p_n + 1)..=n_target {
            let c_n = seq.coefficient(n as usize)?;
            let t_rat = &c_n * &Rational::from(y);
            let t = match t_rat.to_i64() {
                Some(t) => t,
                None => {
                    return Ok(SolveOutcome::Inconclusive {
                        step: format!("extension n={n}"),
                        detail: format!("c({n})·y = {t_rat} is not an i64 integer"),
                    })
                }
            };
            let ln = &layers[(n - 1) as usize];
            let s_x = match least_with_shift(ln, ln, t) {
                Some(s) => s,
                None => {
                    return Ok(SolveOutcome::Inconclusive {
                        step: format!("extension n={n}"),
                        detail: format!(
                            "no s ∈ {n}·class with s + {t} ∈ {n}·class within [1, {wit_hi}]; \
                             use a larger window"
                        ),
                    })
                }
            };
            let x = decompose(s_x, n, &layers)?;
            let z = decompose(s_x + t, n, &layers)?;
            extensions.push(ExtensionWitness {
                n,
                coefficient: c_n,
                level: None,
                x: to_rationals(&x),
                z: to_rationals(&z),
            });
        }
    }

    let full = generate_prefix(FamilyTag::SystemA, n_target as usize, seq)?;
    let report = assemble_and_verify(
        &full,
        &p_system,
        col,
        &truncated.values,
        0,
        &extensions,
        false,
        colour,
    )?;
    let trace = SolverTrace {
        family: FamilyTag::SystemA,
        n_target,
        seq: seq.clone(),
        window: (1, w),
        colour,
        class_densities,
        stabilizations,
        m,
        k: k_eff,
        progression: Some(truncated.witness.clone()),
        progression_level: None,
        l_used: Some(truncated.l),
        truncated: Some(truncated_part(&p_system, &truncated.values, 0)),
        extensions,
        recursion_depth: 0,
        dropped: Vec::new(),
        notes: Vec::new(),
    };
    Ok(SolveOutcome::Solved { report, trace })
}

fn precheck_integer(col: &Colouring, n_target: u32) -> Result<()> {
    if n_target < 1 {
        return Err(Error::Precondition("n_target must be at least 1".into()));
    }
    if col.scale() != 0 {
        return Err(Error::Precondition(
            "this family needs an integer (scale-0) colouring".into(),
        ));
    }
    if col.lo() > 1 {
        return Err(Error::Precondition(
            "the colouring domain must start at 1 or below".into(),
        ));
    }
    if col.hi() < 100 {
        return Err(Error::Precondition(format!(
            "colouring window [{}, {}] is too small to solve in",
            col.lo(),
            col.hi()
        )));
    }
    Ok(())
}

fn union_dense(infos: &[ClassInfo]) -> Result<WindowSet> {
    let mut dense = infos.iter().filter(|c| c.dense);
    let first = dense.next().expect("require_dense ran");
    let mut good = first.set.clone();
    for c in dense {
        good = good.union(&c.set)?;
    }
    Ok(good)
}

/// Solves the first `n_target` equations of family C for `col`, recursing
/// into `m·ℕ` whenever a colour class misses `m·ℤ` entirely.
pub fn solve_system_c(
    col: &Colouring,
    n_target: u32,
    seq: &CoefficientSequence,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    solve_c_inner(col, n_target, seq, cfg, 0, col.r())
}

fn solve_c_inner(
    col: &Colouring,
    n_target: u32,
    seq: &CoefficientSequence,
    cfg: &SolverConfig,
    depth: u32,
    r0: u8,
) -> Result<SolveOutcome> {
    precheck_integer(col, n_target)?;
    let w = col.hi().min(cfg.window_hi);
    let (infos, class_densities) = integer_classes(col, w, &cfg.dense_threshold)?;
    require_dense(&infos)?;
    let dense_colours = dense_order(&infos);

    // Asymmetric stabilization of X_k = A − kA per dense class.
    let sw = w.min(cfg.stab_window);
    let mut stabilizations = Vec::new();
    let mut m = 1i64;
    let mut k_max = 1u32;
    for &colour in &dense_colours {
        let a = col.class_set_int(colour, 1, sw)?;
        match stabilize_asymmetric(&a, &cfg.stab)? {
            AsymmetricOutcome::Stabilized { report, .. } => {
                if !report.certified {
                    return Ok(SolveOutcome::Inconclusive {
                        step: "stabilize".into(),
                        detail: format!(
                            "class {colour}: difference family is not a clean union of \
                             cosets on the claim region"
                        ),
                    });
                }
                m = lcm_i64(m, report.m)?;
                k_max = k_max.max(report.k);
                stabilizations.push(ClassStabilization::Asymmetric { colour, report });
            }
            AsymmetricOutcome::Inconclusive { tested_up_to, reason } => {
                return Ok(SolveOutcome::Inconclusive {
                    step: "stabilize".into(),
                    detail: format!(
                        "class {colour} did not stabilize within {tested_up_to} steps: {reason}"
                    ),
                });
            }
        }
    }

    // Recursion: if any nonempty class misses all multiples of a candidate
    // modulus, the solution must be sought among those multiples.
    let mut candidates: Vec<i64> = stabilizations
        .iter()
        .filter_map(|s| match s {
            ClassStabilization::Asymmetric { report, .. } => Some(report.m),
            _ => None,
        })
        .chain(std::iter::once(m))
        .filter(|&q| q >= 2)
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    for q in candidates {
        for info in infos.iter().filter(|i| !i.set.is_empty()) {
            if class_meets_multiples(&info.set, q) {
                continue;
            }
            if depth + 1 > r0 as u32 {
                return Err(Error::RecursionDepth { depth: depth + 1, r: r0 });
            }
            let inner_hi = col.hi().min(cfg.witness_cap) / q;
            let induced = induced_colouring(col, q, inner_hi)?;
            return match solve_c_inner(&induced, n_target, seq, cfg, depth + 1, r0)? {
                SolveOutcome::Solved { report, mut trace } => {
                    let full = generate_prefix(FamilyTag::SystemC, n_target as usize, seq)?;
                    let scaled = scale_report(&full, col, &report, q)?;
                    // Keep the trace's numeric witnesses at the outer scale
                    // so they stay consistent with the returned assignment.
                    let factor = Rational::from(q);
                    for w in &mut trace.extensions {
                        for v in w.x.iter_mut().chain(w.z.iter_mut()) {
                            *v = &*v * &factor;
                        }
                    }
                    if let Some(part) = &mut trace.truncated {
                        for (_, v) in part.values.iter_mut() {
                            *v = &*v * &factor;
                        }
                    }
                    trace.recursion_depth += 1;
                    trace.dropped.insert(
                        0,
                        DroppedClass { depth: depth + 1, colour: info.colour, modulus: q },
                    );
                    trace.notes.push(format!(
                        "solved inside {q}·N (class {} misses {q}·Z); solution scaled by {q}",
                        info.colour
                    ));
                    Ok(SolveOutcome::Solved { report: scaled, trace })
                }
                inconclusive => Ok(inconclusive),
            };
        }
    }

    let k_eff = k_max.max(2);
    let p_n = (k_eff - 1).min(n_target);
    let p_system = generate_prefix(FamilyTag::SystemC, p_n as usize, seq)?;
    let good = union_dense(&infos)?;
    let colour_of = |v: i64| col.colour_int(v);
    let truncated =
        match solve_truncated(&p_system, &good, &colour_of, &dense_colours, m, cfg)? {
            TruncatedOutcome::Found(t) => t,
            TruncatedOutcome::Starved { detail } => {
                return Ok(SolveOutcome::Inconclusive { step: "truncated system".into(), detail })
            }
        };
    let colour = truncated.colour;

    // The chosen class meets every candidate modulus (or we would have
    // recursed), so its difference family keeps the zero coset at every k.
    if let Some(ClassStabilization::Asymmetric { report, .. }) = stabilizations
        .iter()
        .find(|s| matches!(s, ClassStabilization::Asymmetric { colour: c, .. } if *c == colour))
    {
        if !report.coset_report().contains_zero_coset {
            return Ok(SolveOutcome::Inconclusive {
                step: "zero coset".into(),
                detail: format!(
                    "class {colour} stabilized without the zero coset mod {}",
                    report.m
                ),
            });
        }
    }

    let y_idx = p_system.var_index("y").ok_or_else(|| Error::Invariant("missing y".into()))?;
    let y = truncated.values[y_idx];

    let mut extensions = Vec::new();
    if p_n < n_target {
        let wit_hi = col.hi().min(cfg.witness_cap);
        let a_star = col.class_set_int(colour, 1, wit_hi)?;
        let layers = build_layers(&a_star, n_target, wit_hi)?;
        for n in (p_n + 1)..=n_target {
            let c_n = seq.coefficient(n as usize)?;
            let t_rat = &c_n * &Rational::from(y);
            let t = match t_rat.to_i64() {
                Some(t) => t,
                None => {
                    return Ok(SolveOutcome::Inconclusive {
                        step: format!("extension n={n}"),
                        detail: format!("c({n})·y = {t_rat} is not an i64 integer"),
                    })
                }
            };
            let ln = &layers[(n - 1) as usize];
            // z is a single class element: z = s_x + c(n)·y ∈ A.
            let s_x = match least_with_shift(ln, &layers[0], t) {
                Some(s) => s,
                None => {
                    return Ok(SolveOutcome::Inconclusive {
                        step: format!("extension n={n}"),
                        detail: format!(
                            "no s ∈ {n}·class with s + {t} in the class within [1, {wit_hi}]; \
                             use a larger window"
                        ),
                    })
                }
            };
            let x = decompose(s_x, n, &layers)?;
            extensions.push(ExtensionWitness {
                n,
                coefficient: c_n,
                level: None,
                x: to_rationals(&x),
                z: vec![Rational::from(s_x + t)],
            });
        }
    }

    let full = generate_prefix(FamilyTag::SystemC, n_target as usize, seq)?;
    let report = assemble_and_verify(
        &full,
        &p_system,
        col,
        &truncated.values,
        0,
        &extensions,
        true,
        colour,
    )?;
    let trace = SolverTrace {
        family: FamilyTag::SystemC,
        n_target,
        seq: seq.clone(),
        window: (1, w),
        colour,
        class_densities,
        stabilizations,
        m,
        k: k_eff,
        progression: Some(truncated.witness.clone()),
        progression_level: None,
        l_used: Some(truncated.l),
        truncated: Some(truncated_part(&p_system, &truncated.values, 0)),
        extensions,
        recursion_depth: 0,
        dropped: Vec::new(),
        notes: Vec::new(),
    };
    Ok(SolveOutcome::Solved { report, trace })
}

/// True iff the class contains a multiple of `q` within its window.
fn class_meets_multiples(set: &WindowSet, q: i64) -> bool {
    let lo = set.lo().max(1);
    let mut t = q.max((lo + q - 1) / q * q);
    while t <= set.hi() {
        if set.contains(t) {
            return true;
        }
        t += q;
    }
    false
}

/// The colouring of `q·ℕ` read through `col`, with original labels.
fn induced_colouring(col: &Colouring, q: i64, hi: i64) -> Result<Colouring> {
    if hi < 1 {
        return Err(Error::Precondition(format!(
            "window too small to recurse into multiples of {q}"
        )));
    }
    let values: Vec<u8> =
        (1..=hi).map(|t| col.colour_int(q * t).unwrap_or(0)).collect();
    Colouring::new(0, 1, hi, col.r(), ColourRule::ExplicitArray { lo: 1, values })
}

/// Scales every value of an inner solution by `q` (homogeneity) and
/// re-verifies against the outer system and colouring.
fn scale_report(
    full: &LinearSystem,
    col: &Colouring,
    inner: &SolutionReport,
    q: i64,
) -> Result<SolutionReport> {
    let factor = Rational::from(q);
    let assignment = Assignment::new(
        inner.assignment.iter().map(|(var, v)| (var.clone(), v * &factor)),
    )?;
    let check = check_solution(full, &assignment)?;
    if !check.all_zero {
        return Err(Error::Invariant("scaled solution has nonzero residuals".into()));
    }
    let report = SolutionReport { assignment, colour: inner.colour, check };
    verify_solution_report(full, col, &report)?;
    Ok(report)
}

/// Solves the first `n_target` equations of family B (coefficients `2^-n`)
/// for a dyadic colouring.
pub fn solve_system_b(col: &Colouring, n_target: u32, cfg: &SolverConfig) -> Result<SolveOutcome> {
    if n_target < 1 {
        return Err(Error::Precondition("n_target must be at least 1".into()));
    }
    let seq = CoefficientSequence::InversePowersOfTwo;
    let levels_max = cfg.max_levels.min(col.scale());
    if levels_max < n_target {
        return Ok(SolveOutcome::Inconclusive {
            step: "levels".into(),
            detail: format!(
                "witnesses for n = {n_target} need at least {n_target} levels below the \
                 progression, only {levels_max} available"
            ),
        });
    }
    let w_dy = cfg.dyadic_window;

    // Level sets per class, for levels 0..=levels_max.
    let mut class_levels: Vec<Vec<WindowSet>> = Vec::with_capacity(col.r() as usize);
    for colour in 1..=col.r() {
        let sets: Result<Vec<WindowSet>> = (0..=levels_max)
            .map(|j| col.class_set_level(colour, j, 1, w_dy))
            .collect();
        class_levels.push(sets?);
    }
    let mut class_densities = Vec::new();
    let mut dense_pairs: Vec<(u8, Rational)> = Vec::new();
    for (idx, sets) in class_levels.iter().enumerate() {
        let colour = (idx + 1) as u8;
        let dstar = crate::stabilize::dyadic_dstar(sets)?;
        let dense = dstar >= cfg.dense_threshold;
        class_densities.push(ClassDensity { colour, density: dstar.clone(), dense });
        if dense {
            dense_pairs.push((colour, dstar));
        }
    }
    if dense_pairs.is_empty() {
        return Ok(SolveOutcome::Inconclusive {
            step: "density".into(),
            detail: "no colour class is dense across the dyadic levels".into(),
        });
    }
    dense_pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let dense_colours: Vec<u8> = dense_pairs.iter().map(|(c, _)| *c).collect();

    let mut stabilizations = Vec::new();
    let mut m = 1i64;
    let mut k_max = 1u32;
    for &colour in &dense_colours {
        match stabilize_dyadic(&class_levels[(colour - 1) as usize], &cfg.stab)? {
            DyadicOutcome::Stabilized { report } => {
                if !report.certified {
                    return Ok(SolveOutcome::Inconclusive {
                        step: "dyadic stabilization".into(),
                        detail: format!("class {colour} stabilized without certification"),
                    });
                }
                m = lcm_i64(m, report.m)?;
                k_max = k_max.max(report.k);
                stabilizations.push(ClassStabilization::Dyadic { colour, report });
            }
            DyadicOutcome::Inconclusive { reason } => {
                return Ok(SolveOutcome::Inconclusive {
                    step: "dyadic stabilization".into(),
                    detail: format!("class {colour}: {reason}"),
                });
            }
        }
    }

    let k_eff = k_max.max(2);
    let p_n = (k_eff - 1).min(n_target);
    let p_system = generate_prefix(FamilyTag::SystemB, p_n as usize, &seq)?;

    // Progression level: rank levels 0..=levels_max - n_target by the size
    // of the dense-class union there.
    let mut level_rank: Vec<(u32, u64)> = (0..=(levels_max - n_target))
        .map(|j| {
            let count: u64 = dense_colours
                .iter()
                .map(|&c| class_levels[(c - 1) as usize][j as usize].count_in(1, w_dy))
                .sum();
            (j, count)
        })
        .collect();
    level_rank.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut found = None;
    let mut last_detail = String::new();
    for &(j, _) in &level_rank {
        let mut dense_iter =
            dense_colours.iter().map(|&c| &class_levels[(c - 1) as usize][j as usize]);
        let mut good = dense_iter.next().expect("dense classes exist").clone();
        for s in dense_iter {
            good = good.union(s)?;
        }
        let colour_of = |v: i64| col.colour_at_level(v, j);
        match solve_truncated(&p_system, &good, &colour_of, &dense_colours, m, cfg)? {
            TruncatedOutcome::Found(t) => {
                found = Some((j, t));
                break;
            }
            TruncatedOutcome::Starved { detail } => {
                last_detail = format!("level {j}: {detail}");
            }
        }
    }
    let (j_star, truncated) = match found {
        Some(f) => f,
        None => {
            return Ok(SolveOutcome::Inconclusive {
                step: "truncated system".into(),
                detail: last_detail,
            })
        }
    };
    let colour = truncated.colour;
    let y_idx = p_system.var_index("y").ok_or_else(|| Error::Invariant("missing y".into()))?;
    let y_num = truncated.values[y_idx];

    // Extensions at levels deep enough to write 2^-n·y with an integer
    // numerator; when a level is too thin, retry one level deeper.
    let mut extensions = Vec::new();
    'next_n: for n in (p_n + 1)..=n_target {
        let base = j_star + n;
        for level in base..=levels_max {
            let shift = level - base;
            if shift >= 40 {
                break;
            }
            let t_num = match y_num.checked_mul(1i64 << shift) {
                Some(t) if t <= cfg.witness_cap => t,
                _ => break,
            };
            let win = (4 * t_num.max(w_dy)).min(cfg.witness_cap);
            let a_level = col.class_set_level(colour, level, 1, win)?;
            if a_level.is_empty() {
                continue;
            }
            let layers = build_layers(&a_level, n, win)?;
            let ln = &layers[(n - 1) as usize];
            if let Some(s_x) = least_with_shift(ln, ln, t_num) {
                let unit = Rational::pow2(-(level as i64));
                let x = decompose(s_x, n, &layers)?;
                let z = decompose(s_x + t_num, n, &layers)?;
                extensions.push(ExtensionWitness {
                    n,
                    coefficient: seq.coefficient(n as usize)?,
                    level: Some(level),
                    x: x.iter().map(|&v| Rational::from(v) * &unit).collect(),
                    z: z.iter().map(|&v| Rational::from(v) * &unit).collect(),
                });
                continue 'next_n;
            }
        }
        return Ok(SolveOutcome::Inconclusive {
            step: format!("extension n={n}"),
            detail: format!(
                "level exhaustion: no witness for 2^-{n}·y up to level {levels_max}; \
                 allow deeper levels"
            ),
        });
    }

    let full = generate_prefix(FamilyTag::SystemB, n_target as usize, &seq)?;
    let report = assemble_and_verify(
        &full,
        &p_system,
        col,
        &truncated.values,
        j_star,
        &extensions,
        false,
        colour,
    )?;
    let trace = SolverTrace {
        family: FamilyTag::SystemB,
        n_target,
        seq,
        window: (1, w_dy),
        colour,
        class_densities,
        stabilizations,
        m,
        k: k_eff,
        progression: Some(truncated.witness.clone()),
        progression_level: Some(j_star),
        l_used: Some(truncated.l),
        truncated: Some(truncated_part(&p_system, &truncated.values, j_star)),
        extensions,
        recursion_depth: 0,
        dropped: Vec::new(),
        notes: Vec::new(),
    };
    Ok(SolveOutcome::Solved { report, trace })
}

/// Re-verifies a solve artifact from its parts: rebuilds the system from the
/// trace, re-checks residuals, colours and domain, and sanity-checks the
/// trace's structural fields.
pub fn verify_solve_artifact(
    col: &Colouring,
    report: &SolutionReport,
    trace: &SolverTrace,
) -> Result<()> {
    let system = generate_prefix(trace.family, trace.n_target as usize, &trace.seq)?;
    verify_solution_report(&system, col, report)?;
    if report.colour != trace.colour {
        return Err(Error::Invariant("trace and report disagree on the colour".into()));
    }
    if trace.k < 2 {
        return Err(Error::Invariant("effective stabilization step below 2".into()));
    }
    if trace.m < 1 {
        return Err(Error::Invariant("combined modulus below 1".into()));
    }
    if let Some(p) = &trace.progression {
        if p.d < 1 || p.l < 1 || p.m != trace.m {
            return Err(Error::Invariant("malformed progression witness".into()));
        }
    }
    for w in &trace.extensions {
        if w.x.len() != w.n as usize {
            return Err(Error::Invariant(format!(
                "extension witness n={} has {} x-parts",
                w.n,
                w.x.len()
            )));
        }
        let sum_x: Rational = w.x.iter().fold(Rational::zero(), |a, b| a + b);
        let sum_z: Rational = w.z.iter().fold(Rational::zero(), |a, b| a + b);
        let y = report
            .assignment
            .get("y")
            .ok_or_else(|| Error::Invariant("assignment lacks y".into()))?;
        if sum_x + &w.coefficient * y != sum_z {
            return Err(Error::Invariant(format!(
                "extension witness n={} does not balance",
                w.n
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_small() -> SolverConfig {
        SolverConfig {
            window_hi: 50_000,
            stab_window: 20_000,
            dyadic_window: 10_000,
            witness_cap: 200_000,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn family_a_mod3_reproduces_known_solution() {
        let col = Colouring::residue_identity(3, 1, 50_000).unwrap();
        let outcome = solve_system_a(
            &col,
            4,
            &CoefficientSequence::PowersOfTwo,
            &cfg_small(),
        )
        .unwrap();
        let (report, trace) = match outcome {
            SolveOutcome::Solved { report, trace } => (report, trace),
            SolveOutcome::Inconclusive { step, detail } => {
                panic!("inconclusive at {step}: {detail}")
            }
        };
        assert_eq!(trace.m, 3);
        assert_eq!(trace.k, 2);
        let get = |v: &str| report.assignment.get(v).unwrap().to_i64().unwrap();
        assert_eq!(get("y"), 3);
        assert_eq!(get("x1_1"), 3);
        assert_eq!(get("z1_1"), 9);
        // Extension z-parts follow the greedy least-first decomposition.
        assert_eq!(
            trace.extensions.iter().map(|w| w.n).collect::<Vec<_>>(),
            vec![2, 3, 4]
        );
        let zs = |n: usize| {
            trace.extensions[n]
                .z
                .iter()
                .map(|v| v.to_i64().unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(zs(0), vec![3, 15]);
        assert_eq!(zs(1), vec![3, 3, 27]);
        assert_eq!(zs(2), vec![3, 3, 3, 51]);
        verify_solve_artifact(&col, &report, &trace).unwrap();
    }

    #[test]
    fn family_c_parity_recurses_and_scales() {
        let col = Colouring::parity(1, 50_000).unwrap();
        let outcome = solve_system_c(
            &col,
            3,
            &CoefficientSequence::PowersOfTwo,
            &cfg_small(),
        )
        .unwrap();
        let (report, trace) = match outcome {
            SolveOutcome::Solved { report, trace } => (report, trace),
            SolveOutcome::Inconclusive { step, detail } => {
                panic!("inconclusive at {step}: {detail}")
            }
        };
        assert_eq!(trace.recursion_depth, 1);
        assert_eq!(trace.dropped.len(), 1);
        assert_eq!(trace.dropped[0].colour, 2); // odds miss 2·Z
        assert_eq!(trace.dropped[0].modulus, 2);
        let get = |v: &str| report.assignment.get(v).unwrap().to_i64().unwrap();
        assert_eq!(get("y"), 2);
        assert_eq!(get("z1"), 6);
        assert_eq!(get("z2"), 12);
        assert_eq!(get("z3"), 22);
        assert_eq!(report.colour, 1); // even class
        verify_solve_artifact(&col, &report, &trace).unwrap();
    }

    #[test]
    fn family_b_numerator_mod3_reproduces_known_witnesses() {
        let col = Colouring::numerator_identity(3, 24, 1, (200_000i64) << 24).unwrap();
        let outcome = solve_system_b(&col, 3, &cfg_small()).unwrap();
        let (report, trace) = match outcome {
            SolveOutcome::Solved { report, trace } => (report, trace),
            SolveOutcome::Inconclusive { step, detail } => {
                panic!("inconclusive at {step}: {detail}")
            }
        };
        assert_eq!(trace.progression_level, Some(0));
        // Classes 1 mod 3 and 2 mod 3 live on two residues mod 6 at every
        // level >= 1, so their spreads take three rounds to close: K = 3 and
        // the truncated part covers n = 1, 2. The least admissible y is then
        // 12 (y = 6 leaves equation 2 asking for a gap of 3/2 inside 3*Z).
        assert_eq!(trace.k, 3);
        let y = report.assignment.get("y").unwrap();
        assert_eq!(y.to_i64(), Some(12));
        assert_eq!(report.colour, 1); // multiples of three
        assert_eq!(trace.truncated.as_ref().unwrap().equations, 2);
        // One extension witness, for n = 3: t = 12 at level 3, least shiftable
        // sum 9/8 with 9 = 3+3+3 and 21 = 3+3+15.
        assert_eq!(trace.extensions.len(), 1);
        let w3 = &trace.extensions[0];
        assert_eq!(w3.n, 3);
        assert_eq!(w3.level, Some(3));
        let eighths =
            |vs: &[Rational]| vs.iter().map(|v| (v * &Rational::from(8)).to_i64().unwrap())
                .collect::<Vec<_>>();
        assert_eq!(eighths(&w3.x), vec![3, 3, 3]);
        assert_eq!(eighths(&w3.z), vec![3, 3, 15]);
        // All denominators are powers of two within the level budget.
        for (_, v) in report.assignment.iter() {
            let (_, level) = v.dyadic_parts().unwrap();
            assert!(level <= 24);
        }
        verify_solve_artifact(&col, &report, &trace).unwrap();
    }

    #[test]
    fn family_b_integer_colouring_is_inconclusive() {
        let col = Colouring::residue_identity(3, 1, 50_000).unwrap();
        // Scale-0 colouring offers no dyadic levels at all.
        let outcome = solve_system_b(&col, 3, &cfg_small()).unwrap();
        match outcome {
            SolveOutcome::Inconclusive { .. } => {}
            SolveOutcome::Solved { .. } => panic!("expected inconclusive"),
        }
    }

    #[test]
    fn family_a_single_colour_solves_directly() {
        let col = Colouring::residue_identity(1, 1, 10_000).unwrap();
        let outcome = solve_system_a(
            &col,
            2,
            &CoefficientSequence::PowersOfTwo,
            &cfg_small(),
        )
        .unwrap();
        match outcome {
            SolveOutcome::Solved { report, trace } => {
                assert_eq!(trace.m, 1);
                verify_solve_artifact(&col, &report, &trace).unwrap();
            }
            SolveOutcome::Inconclusive { step, detail } => {
                panic!("inconclusive at {step}: {detail}")
            }
        }
    }

    #[test]
    fn window_too_small_is_an_error() {
        let col = Colouring::residue_identity(3, 1, 50).unwrap();
        assert!(matches!(
            solve_system_a(&col, 2, &CoefficientSequence::PowersOfTwo, &cfg_small()),
            Err(Error::Precondition(_))
        ));
    }
}
