//! Exhaustive search for monochromatic solutions and for colourings
//! avoiding them.
//!
//! Both searches share one backtracking engine over integer-scaled equation
//! rows. Whenever an equation has a single unassigned variable left, that
//! variable's value is forced (or the branch dies), so systems whose
//! equations each introduce one fresh variable cost only one branching
//! variable per equation. Branch variables follow system order and values
//! ascend, so the first solution found is the lexicographically least.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use crate::colouring::{Colouring, SolutionReport};
use crate::error::{Error, Result};
use crate::rational::{bigint_lcm, Rational};
use crate::systems::{check_solution, Assignment, LinearSystem};
use crate::windows::WindowSet;

/// Most variables any exhaustive search will take on.
pub const MAX_SEARCH_VARS: usize = 25;
/// Most variables allowed when *enumerating all* solutions.
const MAX_ENUM_VARS: usize = 8;
/// Colouring-search cap: `r^(N-1)` may not exceed this.
const MAX_COLOURINGS: u128 = 1 << 28;
/// Enumeration cap on `N^vars`.
const MAX_ENUM_NODES: u128 = 100_000_000;

/// Equation rows cleared of denominators, with a var → equations index.
pub(crate) struct ScaledSystem {
    rows: Vec<Vec<i128>>,
    var_eqs: Vec<Vec<usize>>,
    vars: usize,
}

impl ScaledSystem {
    pub(crate) fn new(system: &LinearSystem) -> Result<Self> {
        let vars = system.variables().len();
        let matrix = system.matrix();
        let mut rows = Vec::with_capacity(matrix.rows());
        for r in 0..matrix.rows() {
            let row = matrix.row(r);
            let mut l = num_bigint::BigInt::from(1);
            for c in row.iter() {
                l = bigint_lcm(&l, c.denom());
            }
            let mut scaled = Vec::with_capacity(vars);
            for c in row.iter() {
                let v = (c.numer() * &l) / c.denom();
                scaled.push(v.to_i128().ok_or_else(|| {
                    Error::Overflow("equation coefficients too large for scaled search".into())
                })?);
            }
            rows.push(scaled);
        }
        let mut var_eqs = vec![Vec::new(); vars];
        for (eq, row) in rows.iter().enumerate() {
            for (v, &c) in row.iter().enumerate() {
                if c != 0 {
                    var_eqs[v].push(eq);
                }
            }
        }
        Ok(ScaledSystem { rows, var_eqs, vars })
    }
}

struct SearchState<'a> {
    sys: &'a ScaledSystem,
    member: &'a WindowSet,
    distinct: bool,
    values: Vec<Option<i64>>,
    partial: Vec<i128>,
    open: Vec<usize>,
    used: Vec<i64>,
    assigned: usize,
}

impl<'a> SearchState<'a> {
    fn new(sys: &'a ScaledSystem, member: &'a WindowSet, distinct: bool) -> Self {
        SearchState {
            sys,
            member,
            distinct,
            values: vec![None; sys.vars],
            partial: vec![0; sys.rows.len()],
            open: sys.rows.iter().map(|r| r.iter().filter(|&&c| c != 0).count()).collect(),
            used: Vec::new(),
            assigned: 0,
        }
    }

    /// Assigns `var = val` and propagates forced values. Returns false on
    /// contradiction; `trail` records applied assignments either way so the
    /// caller can undo them.
    fn try_assign(&mut self, var: usize, val: i64, trail: &mut Vec<usize>) -> bool {
        let mut queue = vec![(var, val)];
        while let Some((v, x)) = queue.pop() {
            if let Some(cur) = self.values[v] {
                if cur == x {
                    continue;
                }
                return false;
            }
            if !self.member.contains(x) {
                return false;
            }
            if self.distinct && self.used.contains(&x) {
                return false;
            }
            self.values[v] = Some(x);
            if self.distinct {
                self.used.push(x);
            }
            self.assigned += 1;
            trail.push(v);
            // Apply every equation update for `v` even after a contradiction
            // is detected: `undo` reverses all of them, so stopping half-way
            // would desynchronize the open counts.
            let mut ok = true;
            for &eq in &self.sys.var_eqs[v] {
                self.partial[eq] += self.sys.rows[eq][v] * x as i128;
                self.open[eq] -= 1;
                if !ok {
                    continue;
                }
                match self.open[eq] {
                    0 => {
                        if self.partial[eq] != 0 {
                            ok = false;
                        }
                    }
                    1 => {
                        let row = &self.sys.rows[eq];
                        let u = (0..self.sys.vars)
                            .find(|&u| row[u] != 0 && self.values[u].is_none())
                            .expect("an open variable must exist");
                        let c = row[u];
                        let needed = -self.partial[eq];
                        if needed % c != 0 {
                            ok = false;
                        } else {
                            let forced = needed / c;
                            if forced < i64::MIN as i128 || forced > i64::MAX as i128 {
                                ok = false;
                            } else {
                                queue.push((u, forced as i64));
                            }
                        }
                    }
                    _ => {}
                }
            }
            if !ok {
                return false;
            }
        }
        true
    }

    fn undo(&mut self, trail: &[usize]) {
        for &v in trail {
            let x = self.values[v].take().expect("trail entries are assigned");
            if self.distinct {
                let pos =
                    self.used.iter().rposition(|&u| u == x).expect("used entries match trail");
                self.used.swap_remove(pos);
            }
            self.assigned -= 1;
            for &eq in &self.sys.var_eqs[v] {
                self.partial[eq] -= self.sys.rows[eq][v] * x as i128;
                self.open[eq] += 1;
            }
        }
    }

    fn first_unassigned(&self) -> Option<usize> {
        self.values.iter().position(Option::is_none)
    }
}

fn dfs(state: &mut SearchState, candidates: &[i64]) -> bool {
    let var = match state.first_unassigned() {
        Some(v) => v,
        None => return true,
    };
    for &val in candidates {
        let mut trail = Vec::new();
        if state.try_assign(var, val, &mut trail) && dfs(state, candidates) {
            return true;
        }
        state.undo(&trail);
    }
    false
}

/// Finds the lexicographically least assignment of values (drawn from
/// `candidates`, membership checked against `member`) solving the system,
/// or `None`.
pub(crate) fn search_assignment(
    sys: &ScaledSystem,
    candidates: &[i64],
    member: &WindowSet,
    distinct: bool,
) -> Option<Vec<i64>> {
    if sys.vars == 0 || candidates.is_empty() {
        return None;
    }
    let mut state = SearchState::new(sys, member, distinct);
    if dfs(&mut state, candidates) {
        Some(state.values.iter().map(|v| v.expect("complete assignment")).collect())
    } else {
        None
    }
}

/// Runs [`search_assignment`] against per-class candidate pools, returning
/// the first class (in the given order) admitting a solution.
pub(crate) fn search_in_classes(
    system: &LinearSystem,
    classes: &[(u8, Vec<i64>)],
    distinct: bool,
) -> Result<Option<(u8, Vec<i64>)>> {
    let scaled = ScaledSystem::new(system)?;
    for (colour, candidates) in classes {
        if candidates.is_empty() {
            continue;
        }
        let lo = *candidates.iter().min().expect("nonempty");
        let hi = *candidates.iter().max().expect("nonempty");
        let member = WindowSet::from_elements(0, lo, hi, candidates.iter().copied())?;
        if let Some(values) = search_assignment(&scaled, candidates, &member, distinct) {
            return Ok(Some((*colour, values)));
        }
    }
    Ok(None)
}

fn values_to_assignment(system: &LinearSystem, values: &[i64]) -> Result<Assignment> {
    Assignment::new(
        system
            .variables()
            .iter()
            .zip(values)
            .map(|(var, &v)| (var.clone(), Rational::from(v))),
    )
}

/// Searches `[1, bound]` (and, for windows reaching below zero, the mirrored
/// negative range) for a monochromatic solution of `system` under `col`.
///
/// Classes are tried in descending order of size; within a class, values are
/// tried ascending (by absolute value when negatives participate), so the
/// returned solution is the lexicographically least in its class. Requires a
/// scale-0 colouring and `bound` within the colouring domain.
pub fn find_mono_solution(
    system: &LinearSystem,
    col: &Colouring,
    bound: i64,
    distinct: bool,
) -> Result<Option<SolutionReport>> {
    if col.scale() != 0 {
        return Err(Error::Precondition(
            "exhaustive search requires an integer (scale-0) colouring".into(),
        ));
    }
    if bound < 1 {
        return Err(Error::Precondition(format!("search bound must be >= 1, got {bound}")));
    }
    if bound > col.hi() {
        return Err(Error::Precondition(format!(
            "search bound {bound} exceeds the colouring domain [{}, {}]",
            col.lo(),
            col.hi()
        )));
    }
    let vars = system.variables().len();
    if vars > MAX_SEARCH_VARS {
        return Err(Error::CapExceeded(format!(
            "{vars} variables exceeds the search cap of {MAX_SEARCH_VARS}"
        )));
    }
    let neg_lo = col.lo().max(-bound);
    let candidates: Vec<i64> = if neg_lo >= 0 {
        (1..=bound).collect()
    } else {
        // Ascending |v|, positive before negative: 1, -1, 2, -2, ...
        let mut out = Vec::new();
        for a in 1..=bound {
            out.push(a);
            if -a >= neg_lo {
                out.push(-a);
            }
        }
        out
    };
    let mut classes: Vec<(u8, Vec<i64>)> = (1..=col.r())
        .map(|c| {
            let pool: Vec<i64> =
                candidates.iter().copied().filter(|&t| col.colour_int(t) == Some(c)).collect();
            (c, pool)
        })
        .collect();
    classes.sort_by_key(|(c, pool)| (std::cmp::Reverse(pool.len()), *c));
    match search_in_classes(system, &classes, distinct)? {
        Some((colour, values)) => {
            let assignment = values_to_assignment(system, &values)?;
            let check = check_solution(system, &assignment)?;
            if !check.all_zero {
                return Err(Error::Invariant("search produced a non-solution".into()));
            }
            Ok(Some(SolutionReport { assignment, colour, check }))
        }
        None => Ok(None),
    }
}

/// Enumerates every solution of `system` with values in `[1, n]`, returned
/// as sorted, deduplicated value sets.
pub fn enumerate_solution_sets(system: &LinearSystem, n: i64) -> Result<Vec<Vec<i64>>> {
    let vars = system.variables().len();
    if vars == 0 {
        return Ok(Vec::new());
    }
    if vars > MAX_ENUM_VARS {
        return Err(Error::CapExceeded(format!(
            "{vars} variables exceeds the enumeration cap of {MAX_ENUM_VARS}"
        )));
    }
    if n < 1 {
        return Err(Error::Precondition(format!("enumeration bound must be >= 1, got {n}")));
    }
    let nodes = (n as u128).checked_pow(vars as u32).unwrap_or(u128::MAX);
    if nodes > MAX_ENUM_NODES {
        return Err(Error::CapExceeded(format!(
            "{n}^{vars} assignments exceeds the enumeration cap of {MAX_ENUM_NODES}"
        )));
    }
    let scaled = ScaledSystem::new(system)?;
    let member = WindowSet::from_fn(0, 1, n, |_| true)?;
    let candidates: Vec<i64> = (1..=n).collect();
    let mut state = SearchState::new(&scaled, &member, false);
    let mut sets: Vec<Vec<i64>> = Vec::new();
    fn walk(state: &mut SearchState, candidates: &[i64], sets: &mut Vec<Vec<i64>>) {
        let var = match state.first_unassigned() {
            Some(v) => v,
            None => {
                let mut set: Vec<i64> =
                    state.values.iter().map(|v| v.expect("complete")).collect();
                set.sort_unstable();
                set.dedup();
                sets.push(set);
                return;
            }
        };
        for &val in candidates {
            let mut trail = Vec::new();
            if state.try_assign(var, val, &mut trail) {
                walk(state, candidates, sets);
            }
            state.undo(&trail);
        }
    }
    walk(&mut state, &candidates, &mut sets);
    sets.sort_unstable();
    sets.dedup();
    Ok(sets)
}

/// Searches for an `r`-colouring of `[1, n]` with no monochromatic solution
/// of `system`. Solutions are pre-enumerated and grouped by their largest
/// value, so each candidate colour for `t` is vetted against exactly the
/// solutions it completes. Colour 1 is pinned on `t = 1` (label symmetry).
///
/// Returns the first admissible colouring in lexicographic colour order, or
/// `None` when every colouring admits a monochromatic solution.
pub fn search_bad_colouring(
    system: &LinearSystem,
    r: u8,
    n: i64,
) -> Result<Option<Colouring>> {
    if r < 1 {
        return Err(Error::Precondition("need at least one colour".into()));
    }
    if n < 1 {
        return Err(Error::Precondition(format!("window bound must be >= 1, got {n}")));
    }
    let space = (r as u128).checked_pow((n - 1).min(u32::MAX as i64) as u32).unwrap_or(u128::MAX);
    if space > MAX_COLOURINGS {
        return Err(Error::CapExceeded(format!(
            "{r}^{} colourings exceeds the cap of 2^28",
            n - 1
        )));
    }
    let sets = enumerate_solution_sets(system, n)?;
    let mut by_max: BTreeMap<i64, Vec<Vec<i64>>> = BTreeMap::new();
    for set in sets {
        let &max = set.last().expect("solution sets are nonempty");
        by_max.entry(max).or_default().push(set);
    }
    let mut colours: Vec<u8> = vec![0; (n + 1) as usize];
    let empty: Vec<Vec<i64>> = Vec::new();
    fn place(
        t: i64,
        n: i64,
        r: u8,
        colours: &mut Vec<u8>,
        by_max: &BTreeMap<i64, Vec<Vec<i64>>>,
        empty: &Vec<Vec<i64>>,
    ) -> bool {
        if t > n {
            return true;
        }
        let closing = by_max.get(&t).unwrap_or(empty);
        let options: std::ops::RangeInclusive<u8> = if t == 1 { 1..=1 } else { 1..=r };
        for c in options {
            let mono = closing.iter().any(|set| {
                set.iter().all(|&v| if v == t { true } else { colours[v as usize] == c })
            });
            if mono {
                continue;
            }
            colours[t as usize] = c;
            if place(t + 1, n, r, colours, by_max, empty) {
                return true;
            }
            colours[t as usize] = 0;
        }
        false
    }
    if !place(1, n, r, &mut colours, &by_max, &empty) {
        return Ok(None);
    }
    let values: Vec<u8> = colours[1..=n as usize].to_vec();
    let col = Colouring::new(0, 1, n, r, crate::colouring::ColourRule::ExplicitArray {
        lo: 1,
        values,
    })?;
    // Independent confirmation: no class may contain a solution.
    if system.variables().len() <= MAX_SEARCH_VARS {
        if let Some(report) = find_mono_solution(system, &col, n, false)? {
            return Err(Error::Invariant(format!(
                "colouring search returned a colouring with a monochromatic solution in colour {}",
                report.colour
            )));
        }
    }
    Ok(Some(col))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_system;

    fn schur() -> LinearSystem {
        parse_system("x + y = z").unwrap()
    }

    #[test]
    fn lexicographically_least_solution() {
        let col = Colouring::residue_identity(1, 1, 10).unwrap();
        let report = find_mono_solution(&schur(), &col, 10, false).unwrap().unwrap();
        let vals: Vec<String> =
            report.assignment.iter().map(|(_, v)| v.to_string()).collect();
        assert_eq!(vals, vec!["1", "1", "2"]);
        assert_eq!(report.colour, 1);
    }

    #[test]
    fn distinct_flag_excludes_repeats() {
        let col = Colouring::residue_identity(1, 1, 10).unwrap();
        let report = find_mono_solution(&schur(), &col, 10, true).unwrap().unwrap();
        let vals: Vec<String> =
            report.assignment.iter().map(|(_, v)| v.to_string()).collect();
        assert_eq!(vals, vec!["1", "2", "3"]);
    }

    #[test]
    fn parity_colouring_has_even_schur_triple() {
        let col = Colouring::parity(1, 20).unwrap();
        let report = find_mono_solution(&schur(), &col, 20, false).unwrap().unwrap();
        assert_eq!(report.colour, 1); // classes tie in size; colour order breaks the tie
        for (_, v) in report.assignment.iter() {
            assert_eq!(v.to_i64().unwrap() % 2, 0);
        }
    }

    #[test]
    fn no_solution_below_threshold() {
        // x + y = z with x,y,z in [1,1]: 1+1=2 out of range.
        let col = Colouring::residue_identity(1, 1, 1).unwrap();
        assert!(find_mono_solution(&schur(), &col, 1, false).unwrap().is_none());
    }

    #[test]
    fn bound_must_fit_domain() {
        let col = Colouring::residue_identity(1, 1, 5).unwrap();
        assert!(find_mono_solution(&schur(), &col, 6, false).is_err());
    }

    #[test]
    fn enumerate_schur_sets() {
        let sets = enumerate_solution_sets(&schur(), 4).unwrap();
        assert_eq!(
            sets,
            vec![vec![1, 2], vec![1, 2, 3], vec![1, 3, 4], vec![2, 4]],
        );
    }

    #[test]
    fn schur_bad_colouring_up_to_four() {
        let col = search_bad_colouring(&schur(), 2, 4).unwrap().unwrap();
        let values: Vec<u8> = (1..=4).map(|t| col.colour_int(t).unwrap()).collect();
        assert_eq!(values, vec![1, 2, 2, 1]);
        assert!(crate::colouring::verify_colouring_partition(&col));
    }

    #[test]
    fn schur_has_no_bad_colouring_at_five() {
        assert!(search_bad_colouring(&schur(), 2, 5).unwrap().is_none());
    }

    #[test]
    fn four_point_system_threshold_is_seventeen() {
        // {a, b, a+b, 2a+b} is partition regular (its columns have the
        // columns property), but the extra fourth point lets bad
        // 2-colourings survive far longer than Schur triples: exhaustive
        // enumeration over all 2^N colourings leaves 18 bad colourings at
        // N = 12, two at N = 16, and none at N = 17.
        let sys = parse_system("w = x + y\nz = x + w").unwrap();
        let col = search_bad_colouring(&sys, 2, 16).unwrap().unwrap();
        assert!(crate::colouring::verify_colouring_partition(&col));
        assert!(search_bad_colouring(&sys, 2, 17).unwrap().is_none());
    }

    #[test]
    fn negative_window_search() {
        // x + y = z over a sign colouring: positives give (1, 1, 2).
        let col = Colouring::sign(0, -10, 10).unwrap();
        let report = find_mono_solution(&schur(), &col, 10, false).unwrap().unwrap();
        let vals: Vec<String> =
            report.assignment.iter().map(|(_, v)| v.to_string()).collect();
        assert_eq!(vals, vec!["1", "1", "2"]);
    }

    #[test]
    fn caps_are_enforced() {
        assert!(matches!(
            search_bad_colouring(&schur(), 2, 40),
            Err(Error::CapExceeded(_))
        ));
    }
}
