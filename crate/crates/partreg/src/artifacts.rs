//! Versioned JSON artifacts. Every command emits one envelope, and every
//! envelope re-verifies from its own contents: inputs are embedded in a
//! self-contained form (systems as equation text, colourings and witness
//! values inline), so acceptance never depends on files that produced them.

use std::fs;

use serde::{Deserialize, Serialize};

use crate::colouring::{
    verify_colouring_partition, verify_solution_report, ColourRule, Colouring, SolutionReport,
};
use crate::columns::{columns_property, verify_certificate, PartitionCertificate};
use crate::dsl::parse_system;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::search::{find_mono_solution, search_bad_colouring};
use crate::solver::{verify_solve_artifact, SolverTrace};
use crate::stabilize::{
    stabilize_asymmetric, stabilize_dyadic, stabilize_symmetric, AsymmetricOutcome,
    AsymmetricReport, CosetReport, DyadicOutcome, DyadicReport, StabilizationReport,
    StabilizeConfig, StabilizeOutcome,
};
use crate::windows::{difference, WindowSet};
use crate::witnesses::{
    verify_iprnz, verify_mod3_obstruction, IprnzAssignment, ObstructionReport, ViolationReport,
};

/// Current artifact schema version.
pub const SCHEMA: &str = "v1";

/// Top-level JSON document: a schema tag plus one kind-tagged artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub schema: String,
    #[serde(flatten)]
    pub artifact: Artifact,
}

impl Envelope {
    pub fn new(artifact: Artifact) -> Self {
        Envelope { schema: SCHEMA.to_string(), artifact }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("artifact serialization");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Envelope> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            col: e.column(),
            msg: format!("invalid artifact JSON: {e}"),
        })
    }
}

/// One verifiable result, tagged by kind.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    Columns(ColumnsArtifact),
    BadColouring(BadColouringArtifact),
    MonoSolution(MonoSolutionArtifact),
    Stabilization(StabilizationArtifact),
    Solve(SolveArtifact),
    Obstruction(ObstructionArtifact),
    Iprnz(IprnzArtifact),
}

/// `check-columns` result: the system (equation text) and, when the columns
/// property holds, the partition certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnsArtifact {
    pub system: String,
    pub has_property: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<PartitionCertificate>,
}

/// `search-bad` result over `[1, n]` with `r` colours.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BadColouringArtifact {
    pub system: String,
    pub r: u8,
    pub n: i64,
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub colouring: Option<Colouring>,
}

/// `find-solution` result: least monochromatic solution within the bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonoSolutionArtifact {
    pub system: String,
    pub colouring: Colouring,
    pub bound: i64,
    pub distinct: bool,
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionReport>,
}

/// How the input set of a stabilization run is reconstructed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SetSource {
    /// `{t ≡ a (mod q)}` within the window (numerators, for dyadic levels).
    Residue { q: i64, a: i64 },
    /// Explicit elements; anything outside the window is ignored.
    Elements { elements: Vec<i64> },
}

impl SetSource {
    /// The set on a concrete window at a dyadic scale.
    pub fn materialize(&self, scale: u32, lo: i64, hi: i64) -> Result<WindowSet> {
        match self {
            SetSource::Residue { q, a } => WindowSet::residue_class(scale, lo, hi, *q, *a),
            SetSource::Elements { elements } => WindowSet::from_elements(
                scale,
                lo,
                hi,
                elements.iter().copied().filter(|t| (lo..=hi).contains(t)),
            ),
        }
    }
}

/// Which stabilization pipeline ran.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabMode {
    Symmetric,
    Asymmetric,
    Dyadic,
}

/// `sumset-stabilize` result: the full input description plus whichever
/// reports the mode produces. `conclusive` is false when the run was
/// starved or the certified region check failed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizationArtifact {
    pub mode: StabMode,
    /// Window bound `W`: the base set lives on `[1, W]`.
    pub window: i64,
    /// Deepest dyadic level (dyadic mode only; levels are `0..=levels`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    pub set: SetSource,
    pub config: StabilizeConfig,
    pub conclusive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<StabilizationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymmetric: Option<AsymmetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coset: Option<CosetReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyadic: Option<DyadicReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inconclusive: Option<String>,
}

/// `solve` result. Conclusive runs carry the solution and its derivation
/// trace; inconclusive runs record which step starved and why.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveArtifact {
    pub colouring: Colouring,
    pub conclusive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<SolutionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<SolverTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// `verify-counterexample mod3` result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObstructionArtifact {
    pub report: ObstructionReport,
}

/// `verify-counterexample iprnz` result, with its full input.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IprnzArtifact {
    pub delta: Rational,
    pub assignment: IprnzAssignment,
    pub report: ViolationReport,
}

/// Runs the requested stabilization mode on a reconstructed input and
/// packages the result. Shared by the emitting command and re-verification,
/// so both sides of a round-trip execute identical code.
pub fn run_stabilization(
    mode: StabMode,
    window: i64,
    levels: Option<u32>,
    set: &SetSource,
    cfg: &StabilizeConfig,
) -> Result<StabilizationArtifact> {
    if window < 2 {
        return Err(Error::Precondition(format!("window bound {window} is too small")));
    }
    let mut art = StabilizationArtifact {
        mode,
        window,
        levels,
        set: set.clone(),
        config: cfg.clone(),
        conclusive: false,
        symmetric: None,
        asymmetric: None,
        coset: None,
        dyadic: None,
        inconclusive: None,
    };
    match mode {
        StabMode::Symmetric => {
            let a = set.materialize(0, 1, window)?;
            let mut s = difference(&a, &a)?;
            s.insert(0)?;
            match stabilize_symmetric(&s, cfg)? {
                StabilizeOutcome::Stabilized { report, .. } => {
                    art.conclusive = report.certified;
                    if !report.certified {
                        art.inconclusive = Some(
                            "stabilized, but the m·Z pattern is not certified on the claim region"
                                .to_string(),
                        );
                    }
                    art.symmetric = Some(report);
                }
                StabilizeOutcome::Inconclusive { tested_up_to, reason } => {
                    art.inconclusive = Some(format!("no fixpoint for k <= {tested_up_to}: {reason}"));
                }
            }
        }
        StabMode::Asymmetric => {
            let a = set.materialize(0, 1, window)?;
            match stabilize_asymmetric(&a, cfg)? {
                AsymmetricOutcome::Stabilized { report, .. } => {
                    art.conclusive = report.certified;
                    if !report.certified {
                        art.inconclusive = Some(
                            "stabilized, but the coset pattern is not certified on the claim region"
                                .to_string(),
                        );
                    }
                    art.coset = Some(report.coset_report());
                    art.asymmetric = Some(report);
                }
                AsymmetricOutcome::Inconclusive { tested_up_to, reason } => {
                    art.inconclusive = Some(format!("no fixpoint for k <= {tested_up_to}: {reason}"));
                }
            }
        }
        StabMode::Dyadic => {
            let deepest = levels.ok_or_else(|| {
                Error::Precondition("dyadic stabilization needs --levels".into())
            })?;
            let mut level_sets = Vec::with_capacity(deepest as usize + 1);
            for scale in 0..=deepest {
                level_sets.push(set.materialize(scale, 1, window)?);
            }
            match stabilize_dyadic(&level_sets, cfg)? {
                DyadicOutcome::Stabilized { report } => {
                    art.conclusive = report.certified;
                    if !report.certified {
                        art.inconclusive =
                            Some("levels stabilized without a certified common modulus".to_string());
                    }
                    art.dyadic = Some(report);
                }
                DyadicOutcome::Inconclusive { reason } => {
                    art.inconclusive = Some(reason);
                }
            }
        }
    }
    Ok(art)
}

/// Re-verifies an envelope from its own contents. `Ok` carries a short
/// description of what was checked; any mismatch is an [`Error::Invariant`]
/// naming the violated claim.
pub fn verify_envelope(env: &Envelope) -> Result<String> {
    if env.schema != SCHEMA {
        return Err(Error::Precondition(format!(
            "unsupported artifact schema {:?}; this build reads {SCHEMA:?}",
            env.schema
        )));
    }
    match &env.artifact {
        Artifact::Columns(a) => verify_columns_art(a),
        Artifact::BadColouring(a) => verify_bad_colouring_art(a),
        Artifact::MonoSolution(a) => verify_mono_solution_art(a),
        Artifact::Stabilization(a) => verify_stabilization_art(a),
        Artifact::Solve(a) => verify_solve_art(a),
        Artifact::Obstruction(a) => verify_obstruction_art(a),
        Artifact::Iprnz(a) => verify_iprnz_art(a),
    }
}

fn verify_columns_art(a: &ColumnsArtifact) -> Result<String> {
    let system = parse_system(&a.system)?;
    match (a.has_property, &a.certificate) {
        (true, Some(cert)) => {
            verify_certificate(system.matrix(), cert)?;
            Ok("columns-property certificate re-verified against the matrix".to_string())
        }
        (true, None) => Err(Error::Invariant(
            "artifact claims the columns property but carries no certificate".into(),
        )),
        (false, Some(_)) => Err(Error::Invariant(
            "artifact carries a certificate but claims the property fails".into(),
        )),
        (false, None) => match columns_property(system.matrix())? {
            None => Ok("absence of the columns property re-confirmed exhaustively".to_string()),
            Some(_) => Err(Error::Invariant(
                "a columns-property certificate exists but the artifact claims none".into(),
            )),
        },
    }
}

fn verify_bad_colouring_art(a: &BadColouringArtifact) -> Result<String> {
    let system = parse_system(&a.system)?;
    if a.found {
        let col = a.colouring.as_ref().ok_or_else(|| {
            Error::Invariant("artifact claims a bad colouring but carries none".into())
        })?;
        if col.scale() != 0 || col.lo() != 1 || col.hi() != a.n || col.r() != a.r {
            return Err(Error::Invariant(format!(
                "colouring domain/colour-count ({}, [{}, {}], r = {}) does not match the claim ([1, {}], r = {})",
                col.scale(),
                col.lo(),
                col.hi(),
                col.r(),
                a.n,
                a.r
            )));
        }
        if !verify_colouring_partition(col) {
            return Err(Error::Invariant(
                "the claimed bad colouring does not totally colour its window".into(),
            ));
        }
        if find_mono_solution(&system, col, a.n, false)?.is_some() {
            return Err(Error::Invariant(
                "a monochromatic solution exists under the claimed bad colouring".into(),
            ));
        }
        Ok(format!(
            "bad colouring re-verified: total on [1, {}] and admits no monochromatic solution",
            a.n
        ))
    } else {
        match search_bad_colouring(&system, a.r, a.n)? {
            None => Ok(format!(
                "absence re-confirmed: every {}-colouring of [1, {}] has a monochromatic solution",
                a.r, a.n
            )),
            Some(_) => Err(Error::Invariant(
                "a bad colouring exists but the artifact claims none".into(),
            )),
        }
    }
}

fn verify_mono_solution_art(a: &MonoSolutionArtifact) -> Result<String> {
    let system = parse_system(&a.system)?;
    if a.found {
        let sol = a.solution.as_ref().ok_or_else(|| {
            Error::Invariant("artifact claims a solution but carries none".into())
        })?;
        verify_solution_report(&system, &a.colouring, sol)?;
        Ok(format!("monochromatic solution re-verified (colour {})", sol.colour))
    } else {
        match find_mono_solution(&system, &a.colouring, a.bound, a.distinct)? {
            None => Ok(format!(
                "absence re-confirmed: no monochromatic solution within [1, {}]",
                a.bound
            )),
            Some(_) => Err(Error::Invariant(
                "a monochromatic solution exists but the artifact claims none".into(),
            )),
        }
    }
}

fn verify_stabilization_art(a: &StabilizationArtifact) -> Result<String> {
    let rerun = run_stabilization(a.mode, a.window, a.levels, &a.set, &a.config)?;
    let want = serde_json::to_value(a).expect("artifact serialization");
    let got = serde_json::to_value(&rerun).expect("artifact serialization");
    if want == got {
        Ok("stabilization re-run reproduces the artifact bit-for-bit".to_string())
    } else {
        Err(Error::Invariant(
            "re-running the stabilization disagrees with the recorded artifact".into(),
        ))
    }
}

fn verify_solve_art(a: &SolveArtifact) -> Result<String> {
    if a.conclusive {
        let report = a.report.as_ref().ok_or_else(|| {
            Error::Invariant("conclusive solve artifact lacks a solution report".into())
        })?;
        let trace = a.trace.as_ref().ok_or_else(|| {
            Error::Invariant("conclusive solve artifact lacks a derivation trace".into())
        })?;
        verify_solve_artifact(&a.colouring, report, trace)?;
        Ok(format!(
            "solution re-verified: family {}, n = {}, colour {}",
            trace.family.name(),
            trace.n_target,
            trace.colour
        ))
    } else {
        if a.step.is_none() || a.detail.is_none() {
            return Err(Error::Invariant(
                "inconclusive solve artifact must record the starved step and a reason".into(),
            ));
        }
        Ok("inconclusive solve artifact: recorded starvation accepted as-is".to_string())
    }
}

fn verify_obstruction_art(a: &ObstructionArtifact) -> Result<String> {
    let rerun = verify_mod3_obstruction(a.report.n_max, a.report.window)?;
    if rerun != a.report {
        return Err(Error::Invariant(
            "re-running the obstruction checks disagrees with the recorded artifact".into(),
        ));
    }
    Ok(format!(
        "obstruction re-verified to n = {} on [1, {}]: modular and exhaustive checks agree",
        a.report.n_max, a.report.window
    ))
}

fn verify_iprnz_art(a: &IprnzArtifact) -> Result<String> {
    let rerun = verify_iprnz(&a.delta, &a.assignment)?;
    if rerun != a.report {
        return Err(Error::Invariant(
            "re-running the interval check disagrees with the recorded artifact".into(),
        ));
    }
    Ok("interval counterexample re-verified from the recorded assignment".to_string())
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

/// Parses a set spec: `mod:q,a` (residue class), `file:<path>` (one integer
/// per line, `#` comments allowed), or `expr:<list>` (comma-separated
/// integers and inclusive ranges `a..b`).
pub fn parse_set_spec(spec: &str) -> Result<SetSource> {
    if let Some(rest) = spec.strip_prefix("mod:") {
        let (q, a) = rest
            .split_once(',')
            .ok_or_else(|| spec_err(format!("set spec {spec:?}: expected mod:q,a")))?;
        let q: i64 = q
            .trim()
            .parse()
            .map_err(|_| spec_err(format!("set spec {spec:?}: bad modulus {q:?}")))?;
        let a: i64 = a
            .trim()
            .parse()
            .map_err(|_| spec_err(format!("set spec {spec:?}: bad residue {a:?}")))?;
        if q < 1 {
            return Err(spec_err(format!("set spec {spec:?}: modulus must be positive")));
        }
        Ok(SetSource::Residue { q, a: a.rem_euclid(q) })
    } else if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path)
            .map_err(|e| spec_err(format!("cannot read set file {path:?}: {e}")))?;
        let mut elements = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let t: i64 = line.parse().map_err(|_| {
                spec_err(format!("set file {path:?} line {}: bad integer {line:?}", i + 1))
            })?;
            elements.push(t);
        }
        if elements.is_empty() {
            return Err(spec_err(format!("set file {path:?} contains no elements")));
        }
        Ok(SetSource::Elements { elements })
    } else if let Some(list) = spec.strip_prefix("expr:") {
        const CAP: usize = 2_000_000;
        let mut elements = Vec::new();
        for part in list.split(',') {
            let part = part.trim();
            if part.is_empty() {
                return Err(spec_err(format!("set spec {spec:?}: empty entry")));
            }
            if let Some((lo, hi)) = part.split_once("..") {
                let lo: i64 = lo.trim().parse().map_err(|_| {
                    spec_err(format!("set spec {spec:?}: bad range start {lo:?}"))
                })?;
                let hi: i64 = hi.trim().parse().map_err(|_| {
                    spec_err(format!("set spec {spec:?}: bad range end {hi:?}"))
                })?;
                if lo > hi {
                    return Err(spec_err(format!("set spec {spec:?}: empty range {lo}..{hi}")));
                }
                if (hi - lo) as usize >= CAP || elements.len() + (hi - lo) as usize >= CAP {
                    return Err(Error::CapExceeded(format!(
                        "set spec expands past {CAP} elements"
                    )));
                }
                elements.extend(lo..=hi);
            } else {
                let t: i64 = part
                    .parse()
                    .map_err(|_| spec_err(format!("set spec {spec:?}: bad integer {part:?}")))?;
                elements.push(t);
            }
        }
        Ok(SetSource::Elements { elements })
    } else {
        Err(spec_err(format!(
            "set spec {spec:?} must start with mod:, file:, or expr:"
        )))
    }
}

/// Parses `a1=c1,a2=c2,…` into a residue → colour map, returning the map
/// and the largest colour.
fn parse_residue_map(text: &str, q: i64, spec: &str) -> Result<(std::collections::BTreeMap<i64, u8>, u8)> {
    let mut map = std::collections::BTreeMap::new();
    let mut r = 1u8;
    for entry in text.split(',') {
        let entry = entry.trim();
        let (a, c) = entry
            .split_once('=')
            .ok_or_else(|| spec_err(format!("colouring spec {spec:?}: expected a=c, got {entry:?}")))?;
        let a: i64 = a
            .trim()
            .parse()
            .map_err(|_| spec_err(format!("colouring spec {spec:?}: bad residue {a:?}")))?;
        let c: u8 = c
            .trim()
            .parse()
            .map_err(|_| spec_err(format!("colouring spec {spec:?}: bad colour {c:?}")))?;
        if c == 0 {
            return Err(spec_err(format!(
                "colouring spec {spec:?}: colours are 1-based; 0 means uncoloured"
            )));
        }
        if map.insert(a.rem_euclid(q), c).is_some() {
            return Err(spec_err(format!(
                "colouring spec {spec:?}: residue {a} listed twice"
            )));
        }
        r = r.max(c);
    }
    Ok((map, r))
}

/// Parses a colouring spec onto the window `[lo, hi]`:
///
/// * `mod:q` — residues mod `q` with identity labels (integers, scale 0);
/// * `mod:q:a1=c1,…` — explicit residue → colour map, possibly partial;
/// * `sign` — positive/negative (zero uncoloured);
/// * `numermod:q[:a1=c1,…]` — canonical dyadic numerator mod `q` at `scale`;
/// * `levelparity` — parity of the canonical dyadic level at `scale`;
/// * `file:<path>` — one colour index per line for `1, 2, …` (0 = uncoloured);
///   the file length fixes the window.
pub fn parse_colouring_spec(spec: &str, scale: u32, lo: i64, hi: i64) -> Result<Colouring> {
    if spec == "sign" {
        return Colouring::sign(scale, lo, hi);
    }
    if spec == "levelparity" {
        return Colouring::level_parity(scale, lo, hi);
    }
    if let Some(rest) = spec.strip_prefix("mod:") {
        let (q_text, map_text) = match rest.split_once(':') {
            Some((q, m)) => (q, Some(m)),
            None => (rest, None),
        };
        let q: i64 = q_text
            .trim()
            .parse()
            .map_err(|_| spec_err(format!("colouring spec {spec:?}: bad modulus {q_text:?}")))?;
        return match map_text {
            None => Colouring::residue_identity(q, lo, hi),
            Some(text) => {
                if q < 1 {
                    return Err(spec_err(format!(
                        "colouring spec {spec:?}: modulus must be positive"
                    )));
                }
                let (map, r) = parse_residue_map(text, q, spec)?;
                Colouring::new(0, lo, hi, r, ColourRule::ResidueMod { q, map })
            }
        };
    }
    if let Some(rest) = spec.strip_prefix("numermod:") {
        let (q_text, map_text) = match rest.split_once(':') {
            Some((q, m)) => (q, Some(m)),
            None => (rest, None),
        };
        let q: i64 = q_text
            .trim()
            .parse()
            .map_err(|_| spec_err(format!("colouring spec {spec:?}: bad modulus {q_text:?}")))?;
        return match map_text {
            None => Colouring::numerator_identity(q, scale, lo, hi),
            Some(text) => {
                if q < 1 {
                    return Err(spec_err(format!(
                        "colouring spec {spec:?}: modulus must be positive"
                    )));
                }
                let (map, r) = parse_residue_map(text, q, spec)?;
                Colouring::new(scale, lo, hi, r, ColourRule::DyadicNumeratorMod { q, map })
            }
        };
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path)
            .map_err(|e| spec_err(format!("cannot read colouring file {path:?}: {e}")))?;
        let mut values = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let c: u8 = line.parse().map_err(|_| {
                spec_err(format!("colouring file {path:?} line {}: bad colour {line:?}", i + 1))
            })?;
            values.push(c);
        }
        if values.is_empty() {
            return Err(spec_err(format!("colouring file {path:?} contains no colours")));
        }
        let r = values.iter().copied().max().unwrap_or(0).max(1);
        let hi = values.len() as i64;
        return Colouring::new(0, 1, hi, r, ColourRule::ExplicitArray { lo: 1, values });
    }
    Err(spec_err(format!(
        "colouring spec {spec:?} must be mod:…, numermod:…, sign, levelparity, or file:…"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{generate_prefix, CoefficientSequence, FamilyTag};
    use std::io::Write;

    #[test]
    fn columns_artifact_round_trips() {
        let text = "x + y = z";
        let system = parse_system(text).unwrap();
        let cert = columns_property(system.matrix()).unwrap().unwrap();
        let env = Envelope::new(Artifact::Columns(ColumnsArtifact {
            system: text.to_string(),
            has_property: true,
            certificate: Some(cert),
        }));
        let parsed = Envelope::from_json(&env.to_json()).unwrap();
        assert!(verify_envelope(&parsed).is_ok());
    }

    #[test]
    fn columns_absence_is_rechecked() {
        let text = "x + y = 3z";
        let env = Envelope::new(Artifact::Columns(ColumnsArtifact {
            system: text.to_string(),
            has_property: false,
            certificate: None,
        }));
        assert!(verify_envelope(&env).is_ok());
        // Claiming the property without evidence is rejected.
        let bogus = Envelope::new(Artifact::Columns(ColumnsArtifact {
            system: text.to_string(),
            has_property: true,
            certificate: None,
        }));
        assert!(matches!(verify_envelope(&bogus), Err(Error::Invariant(_))));
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let env = Envelope {
            schema: "v0".to_string(),
            artifact: Artifact::Columns(ColumnsArtifact {
                system: "x + y = z".to_string(),
                has_property: false,
                certificate: None,
            }),
        };
        assert!(matches!(verify_envelope(&env), Err(Error::Precondition(_))));
    }

    #[test]
    fn mono_solution_artifact_detects_tampering() {
        let system = parse_system("x + y = z").unwrap();
        let col = Colouring::residue_identity(3, 1, 40).unwrap();
        let sol = find_mono_solution(&system, &col, 40, false).unwrap().unwrap();
        let mut art = MonoSolutionArtifact {
            system: "x + y = z".to_string(),
            colouring: col,
            bound: 40,
            distinct: false,
            found: true,
            solution: Some(sol),
        };
        let env = Envelope::new(Artifact::MonoSolution(art.clone()));
        let parsed = Envelope::from_json(&env.to_json()).unwrap();
        assert!(verify_envelope(&parsed).is_ok());

        art.solution.as_mut().unwrap().colour += 1;
        let bad = Envelope::new(Artifact::MonoSolution(art));
        assert!(verify_envelope(&bad).is_err());
    }

    #[test]
    fn bad_colouring_artifact_round_trips() {
        let system_text = "x + y = z";
        let system = parse_system(system_text).unwrap();
        let col = search_bad_colouring(&system, 2, 4).unwrap().unwrap();
        let env = Envelope::new(Artifact::BadColouring(BadColouringArtifact {
            system: system_text.to_string(),
            r: 2,
            n: 4,
            found: true,
            colouring: Some(col),
        }));
        assert!(verify_envelope(&env).is_ok());
        // And the absence claim at N = 5 is re-confirmed exhaustively.
        let none = Envelope::new(Artifact::BadColouring(BadColouringArtifact {
            system: system_text.to_string(),
            r: 2,
            n: 5,
            found: false,
            colouring: None,
        }));
        assert!(verify_envelope(&none).is_ok());
        // Swapping the claims is caught both ways.
        let lie = Envelope::new(Artifact::BadColouring(BadColouringArtifact {
            system: system_text.to_string(),
            r: 2,
            n: 4,
            found: false,
            colouring: None,
        }));
        assert!(matches!(verify_envelope(&lie), Err(Error::Invariant(_))));
    }

    #[test]
    fn stabilization_artifact_round_trips_and_detects_tampering() {
        let set = SetSource::Residue { q: 3, a: 0 };
        let art =
            run_stabilization(StabMode::Symmetric, 4000, None, &set, &StabilizeConfig::default())
                .unwrap();
        assert!(art.conclusive);
        assert_eq!(art.symmetric.as_ref().unwrap().m, 3);
        let env = Envelope::new(Artifact::Stabilization(art.clone()));
        let parsed = Envelope::from_json(&env.to_json()).unwrap();
        assert!(verify_envelope(&parsed).is_ok());

        let mut bad = art;
        bad.symmetric.as_mut().unwrap().m = 6;
        let env = Envelope::new(Artifact::Stabilization(bad));
        assert!(matches!(verify_envelope(&env), Err(Error::Invariant(_))));
    }

    #[test]
    fn solve_artifact_round_trips() {
        use crate::solver::{solve_system_a, SolveOutcome, SolverConfig};
        let cfg = SolverConfig {
            window_hi: 50_000,
            stab_window: 20_000,
            dyadic_window: 10_000,
            witness_cap: 200_000,
            ..SolverConfig::default()
        };
        let col = Colouring::residue_identity(3, 1, cfg.window_hi).unwrap();
        let outcome =
            solve_system_a(&col, 2, &CoefficientSequence::PowersOfTwo, &cfg).unwrap();
        let SolveOutcome::Solved { report, trace } = outcome else {
            panic!("expected a solution");
        };
        let mut art = SolveArtifact {
            colouring: col,
            conclusive: true,
            report: Some(report),
            trace: Some(trace),
            step: None,
            detail: None,
        };
        let env = Envelope::new(Artifact::Solve(art.clone()));
        let parsed = Envelope::from_json(&env.to_json()).unwrap();
        assert!(verify_envelope(&parsed).is_ok());

        art.trace.as_mut().unwrap().colour += 1;
        let bad = Envelope::new(Artifact::Solve(art));
        assert!(verify_envelope(&bad).is_err());
    }

    #[test]
    fn obstruction_and_iprnz_artifacts_round_trip() {
        let report = verify_mod3_obstruction(2, 60).unwrap();
        let env = Envelope::new(Artifact::Obstruction(ObstructionArtifact { report }));
        let parsed = Envelope::from_json(&env.to_json()).unwrap();
        assert!(verify_envelope(&parsed).is_ok());
        let Artifact::Obstruction(mut tampered) = parsed.artifact else { unreachable!() };
        tampered.report.modular[0].pow2_mod3 = 0;
        let bad = Envelope::new(Artifact::Obstruction(tampered));
        assert!(matches!(verify_envelope(&bad), Err(Error::Invariant(_))));

        let delta = Rational::new(1, 2).unwrap();
        let assignment = IprnzAssignment::uniform(
            Rational::new(1, 8).unwrap(),
            Rational::new(1, 8).unwrap(),
        );
        let report = verify_iprnz(&delta, &assignment).unwrap();
        let env = Envelope::new(Artifact::Iprnz(IprnzArtifact { delta, assignment, report }));
        let parsed = Envelope::from_json(&env.to_json()).unwrap();
        assert!(verify_envelope(&parsed).is_ok());
    }

    #[test]
    fn set_specs_parse() {
        assert_eq!(parse_set_spec("mod:3,1").unwrap(), SetSource::Residue { q: 3, a: 1 });
        assert_eq!(parse_set_spec("mod:3,-2").unwrap(), SetSource::Residue { q: 3, a: 1 });
        assert_eq!(
            parse_set_spec("expr:1, 2, 10..12").unwrap(),
            SetSource::Elements { elements: vec![1, 2, 10, 11, 12] }
        );
        assert!(parse_set_spec("mod:3").is_err());
        assert!(parse_set_spec("mod:0,1").is_err());
        assert!(parse_set_spec("expr:5..1").is_err());
        assert!(parse_set_spec("raw:1,2").is_err());

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "3 # first\n6\n\n9").unwrap();
        let spec = format!("file:{}", f.path().display());
        assert_eq!(
            parse_set_spec(&spec).unwrap(),
            SetSource::Elements { elements: vec![3, 6, 9] }
        );
    }

    #[test]
    fn set_source_materializes_with_window_clip() {
        let s = SetSource::Elements { elements: vec![-5, 2, 4, 99] };
        let w = s.materialize(0, 1, 10).unwrap();
        assert_eq!(w.iter().collect::<Vec<i64>>(), vec![2, 4]);
        let r = SetSource::Residue { q: 4, a: 1 }.materialize(0, 1, 10).unwrap();
        assert_eq!(r.iter().collect::<Vec<i64>>(), vec![1, 5, 9]);
    }

    #[test]
    fn colouring_specs_parse() {
        let c = parse_colouring_spec("mod:3", 0, 1, 30).unwrap();
        assert_eq!((c.r(), c.scale()), (3, 0));
        assert_eq!(c.colour_int(5), Some(3));

        let c = parse_colouring_spec("mod:3:1=1", 0, 1, 30).unwrap();
        assert_eq!(c.r(), 1);
        assert_eq!(c.colour_int(4), Some(1));
        assert_eq!(c.colour_int(3), None);

        let c = parse_colouring_spec("sign", 0, -10, 10).unwrap();
        assert_eq!(c.colour_int(-4), Some(2));

        let c = parse_colouring_spec("numermod:3", 4, 1, 160).unwrap();
        assert_eq!((c.r(), c.scale()), (3, 4));

        let c = parse_colouring_spec("levelparity", 3, 1, 80).unwrap();
        assert_eq!(c.r(), 2);

        assert!(parse_colouring_spec("mod:3:1=0", 0, 1, 30).is_err());
        assert!(parse_colouring_spec("mod:3:1=1,1=2", 0, 1, 30).is_err());
        assert!(parse_colouring_spec("chess", 0, 1, 30).is_err());

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "1\n2\n2\n1").unwrap();
        let spec = format!("file:{}", f.path().display());
        let c = parse_colouring_spec(&spec, 0, 1, 999).unwrap();
        assert_eq!((c.lo(), c.hi(), c.r()), (1, 4, 2));
        assert_eq!(c.colour_int(3), Some(2));
    }

    #[test]
    fn solve_family_prefix_round_trips_through_text() {
        // The equation-text renderer and parser agree on generated systems,
        // which is what keeps system-carrying artifacts self-contained.
        for n in 1..=3 {
            let sys =
                generate_prefix(FamilyTag::SystemA, n, &CoefficientSequence::PowersOfTwo).unwrap();
            let back = parse_system(&sys.render()).unwrap();
            assert_eq!(back.matrix(), sys.matrix());
            assert_eq!(back.variables(), sys.variables());
        }
    }
}
