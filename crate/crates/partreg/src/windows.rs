//! Windowed sets of scaled integers, with certified regions.
//!
//! A [`WindowSet`] stores a finite set of numerators `t` over a window
//! `[lo, hi]` (inclusive, `i64` coordinates) as a bitset; the represented
//! values are `t · 2^-scale`, so `scale = 0` is plain integers and larger
//! scales are dyadic levels.
//!
//! Every set carries a *certified region*: the sub-window on which its bits
//! are guaranteed to agree with the ideal (unwindowed) result of the
//! operations that produced it, given operands that were themselves exact on
//! their certified regions. Freshly constructed sets are certified on their
//! full window. The sumset of `a` and `b` is certified on
//! `[a.cert_lo + b.cert_lo, a.cert_hi + b.cert_hi]` intersected with the
//! output window; derived operations compose this rule.
//!
//! Iterated sumsets ([`iterate_sumset`]) clip every step back to the base
//! window. For windows of the form `[1, W]` (all-positive) and `[-W, W]`
//! (symmetric) this clipping is *lossless*: any sum landing inside the
//! window is reachable with all partial sums inside the window (positives
//! only grow; for the symmetric case, signed terms can be reordered greedily
//! so partial sums never exceed `max(|terms|, |total|)`). Successive
//! addition is used rather than doubling because halves of a decomposition
//! need not stay inside the window even when a full reordering does.
//!
//! Performance: sumsets run in `O(pop(smaller side) × words)` generally, but
//! when one operand is (mostly) an arithmetic progression — detected as a
//! long constant-gap run plus few leftovers — the progression part is folded
//! in with `O(log(run length))` whole-window OR passes via prefix doubling.
//! Residue classes, stabilized iterates and dense interval cores all hit
//! this fast path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest |coordinate| accepted for window bounds.
pub const MAX_COORD: i64 = 1 << 40;
/// Largest window width, in bits.
pub const MAX_BITS: i64 = 1 << 28;

/// Minimum run length for the arithmetic-progression fast path.
const CORE_MIN_RUN: u64 = 128;
/// Leftover-element budget for the fast path.
const CORE_MAX_LEFTOVERS: usize = 4096;

/// A finite set of scaled integers over an explicit window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowSet {
    scale: u32,
    lo: i64,
    hi: i64,
    /// Certified region (within the window), or `None` when empty.
    cert: Option<(i64, i64)>,
    words: Vec<u64>,
}

fn check_window(lo: i64, hi: i64) -> Result<()> {
    if lo > hi || lo.abs() > MAX_COORD || hi.abs() > MAX_COORD {
        return Err(Error::BadWindow { lo, hi });
    }
    let bits = hi - lo + 1;
    if bits > MAX_BITS {
        return Err(Error::CapExceeded(format!(
            "window [{lo}, {hi}] needs {bits} bits; the cap is {MAX_BITS}"
        )));
    }
    Ok(())
}

/// Bits `[a, b]` (inclusive, within `0..=63`) of a word.
fn word_mask(a: u32, b: u32) -> u64 {
    debug_assert!(a <= b && b < 64);
    let width = b - a + 1;
    if width == 64 {
        u64::MAX
    } else {
        ((1u64 << width) - 1) << a
    }
}

/// 64 bits of `words` starting at (possibly negative) bit index `start`.
/// Out-of-range source bits read as zero.
fn gather(words: &[u64], start: i64) -> u64 {
    let q = start.div_euclid(64);
    let r = start.rem_euclid(64) as u32;
    let get = |i: i64| -> u64 {
        if i < 0 || i as usize >= words.len() {
            0
        } else {
            words[i as usize]
        }
    };
    let w0 = get(q);
    if r == 0 {
        w0
    } else {
        (w0 >> r) | (get(q + 1) << (64 - r))
    }
}

impl WindowSet {
    /// An empty set on the given window, certified on the whole window.
    pub fn new_empty(scale: u32, lo: i64, hi: i64) -> Result<Self> {
        check_window(lo, hi)?;
        let nwords = ((hi - lo + 1) as usize).div_ceil(64);
        Ok(WindowSet { scale, lo, hi, cert: Some((lo, hi)), words: vec![0; nwords] })
    }

    /// Builds a set from explicit elements; all must lie in the window.
    pub fn from_elements(
        scale: u32,
        lo: i64,
        hi: i64,
        elements: impl IntoIterator<Item = i64>,
    ) -> Result<Self> {
        let mut s = Self::new_empty(scale, lo, hi)?;
        for t in elements {
            s.insert(t)?;
        }
        Ok(s)
    }

    /// Builds a set by testing every window element with `f`.
    pub fn from_fn(scale: u32, lo: i64, hi: i64, mut f: impl FnMut(i64) -> bool) -> Result<Self> {
        let mut s = Self::new_empty(scale, lo, hi)?;
        for t in lo..=hi {
            if f(t) {
                s.set_bit(t);
            }
        }
        Ok(s)
    }

    /// The window elements congruent to `a` modulo `q` (`q ≥ 1`).
    pub fn residue_class(scale: u32, lo: i64, hi: i64, q: i64, a: i64) -> Result<Self> {
        Self::union_of_residues(scale, lo, hi, q, &[a])
    }

    /// The window elements whose residue modulo `q` appears in `residues`.
    pub fn union_of_residues(
        scale: u32,
        lo: i64,
        hi: i64,
        q: i64,
        residues: &[i64],
    ) -> Result<Self> {
        if q < 1 {
            return Err(Error::Precondition(format!("modulus must be >= 1, got {q}")));
        }
        let mut s = Self::new_empty(scale, lo, hi)?;
        for &a in residues {
            let a = a.rem_euclid(q);
            // First t >= lo with t ≡ a (mod q).
            let mut t = lo + (a - lo).rem_euclid(q);
            while t <= hi {
                s.set_bit(t);
                t += q;
            }
        }
        Ok(s)
    }

    /// Scale (values are `t · 2^-scale`).
    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Window lower bound.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Window upper bound.
    pub fn hi(&self) -> i64 {
        self.hi
    }

    /// Certified region, or `None` if it has shrunk to nothing.
    pub fn certified(&self) -> Option<(i64, i64)> {
        self.cert
    }

    /// Certified region, or [`Error::CertifiedEmpty`].
    pub fn certified_or_err(&self, context: &str) -> Result<(i64, i64)> {
        self.cert.ok_or_else(|| Error::CertifiedEmpty { context: context.to_string() })
    }

    pub(crate) fn set_certified(&mut self, cert: Option<(i64, i64)>) {
        self.cert = cert.and_then(|(a, b)| {
            let a = a.max(self.lo);
            let b = b.min(self.hi);
            if a <= b {
                Some((a, b))
            } else {
                None
            }
        });
    }

    fn bit_index(&self, t: i64) -> usize {
        (t - self.lo) as usize
    }

    fn set_bit(&mut self, t: i64) {
        let i = self.bit_index(t);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    /// Membership; `false` outside the window.
    pub fn contains(&self, t: i64) -> bool {
        if t < self.lo || t > self.hi {
            return false;
        }
        let i = self.bit_index(t);
        self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    /// Inserts an element (must lie inside the window). Intended for
    /// constructing fresh sets; the certified region is left unchanged.
    pub fn insert(&mut self, t: i64) -> Result<()> {
        if t < self.lo || t > self.hi {
            return Err(Error::OutOfWindow { t, lo: self.lo, hi: self.hi });
        }
        self.set_bit(t);
        Ok(())
    }

    /// Removes an element if present (no-op outside the window).
    pub fn remove(&mut self, t: i64) {
        if t < self.lo || t > self.hi {
            return;
        }
        let i = self.bit_index(t);
        self.words[i / 64] &= !(1u64 << (i % 64));
    }

    /// Number of elements.
    pub fn len(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// True iff no elements.
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Iterates elements in ascending order.
    pub fn iter(&self) -> Elements<'_> {
        Elements { set: self, word_idx: 0, current: self.words.first().copied().unwrap_or(0) }
    }

    /// Iterates elements of `self ∩ [from, to]` in ascending order.
    pub fn iter_range(&self, from: i64, to: i64) -> impl Iterator<Item = i64> + '_ {
        let from = from.max(self.lo);
        let to = to.min(self.hi);
        self.iter().skip_while(move |&t| t < from).take_while(move |&t| t <= to)
    }

    /// Least element.
    pub fn min_element(&self) -> Option<i64> {
        self.iter().next()
    }

    /// Greatest element.
    pub fn max_element(&self) -> Option<i64> {
        for (w, &word) in self.words.iter().enumerate().rev() {
            if word != 0 {
                let bit = 63 - word.leading_zeros() as i64;
                return Some(self.lo + (w as i64) * 64 + bit);
            }
        }
        None
    }

    /// Number of elements in `self ∩ [from, to]`.
    pub fn count_in(&self, from: i64, to: i64) -> u64 {
        let from = from.max(self.lo);
        let to = to.min(self.hi);
        if from > to {
            return 0;
        }
        let a = self.bit_index(from);
        let b = self.bit_index(to);
        let (wa, wb) = (a / 64, b / 64);
        if wa == wb {
            return (self.words[wa] & word_mask((a % 64) as u32, (b % 64) as u32)).count_ones()
                as u64;
        }
        let mut n = (self.words[wa] & word_mask((a % 64) as u32, 63)).count_ones() as u64;
        for w in wa + 1..wb {
            n += self.words[w].count_ones() as u64;
        }
        n += (self.words[wb] & word_mask(0, (b % 64) as u32)).count_ones() as u64;
        n
    }

    /// True iff `self` and `other` agree bit-for-bit on `[from, to]`.
    /// Both windows must contain the region.
    pub fn equal_on(&self, other: &WindowSet, from: i64, to: i64) -> Result<bool> {
        if self.scale != other.scale {
            return Err(Error::ScaleMismatch { a: self.scale, b: other.scale });
        }
        if from > to {
            return Err(Error::BadWindow { lo: from, hi: to });
        }
        if from < self.lo || to > self.hi || from < other.lo || to > other.hi {
            return Err(Error::Precondition(format!(
                "comparison region [{from}, {to}] not contained in both windows"
            )));
        }
        let a0 = self.bit_index(from);
        let off = (from - other.lo) - (from - self.lo); // other_index - self_index
        let b = self.bit_index(to);
        let (wa, wb) = (a0 / 64, b / 64);
        for w in wa..=wb {
            let lo_bit = if w == wa { (a0 % 64) as u32 } else { 0 };
            let hi_bit = if w == wb { (b % 64) as u32 } else { 63 };
            let mask = word_mask(lo_bit, hi_bit);
            let mine = self.words[w] & mask;
            let theirs = gather(&other.words, (w as i64) * 64 + off) & mask;
            if mine != theirs {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// True iff the window is symmetric and `t ∈ S ⟺ -t ∈ S`.
    pub fn is_symmetric(&self) -> bool {
        if self.lo != -self.hi {
            return false;
        }
        self.iter().all(|t| self.contains(-t))
    }

    /// The mirrored set `{-t : t ∈ S}` on the window `[-hi, -lo]`.
    pub fn negate(&self) -> WindowSet {
        let mut out = WindowSet::new_empty(self.scale, -self.hi, -self.lo)
            .expect("mirrored window is valid when the original is");
        for t in self.iter() {
            out.set_bit(-t);
        }
        out.cert = self.cert.map(|(a, b)| (-b, -a));
        out
    }

    /// A copy restricted to `[lo, hi]`; bits and certified region intersect.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<WindowSet> {
        let mut out = WindowSet::new_empty(self.scale, lo, hi)?;
        or_shift(&mut out, self, 0);
        out.cert = intersect_region(self.cert, Some((lo, hi)));
        Ok(out)
    }

    /// Union; the output window spans both inputs, and the certified region
    /// is the intersection of the operands' certified regions.
    pub fn union(&self, other: &WindowSet) -> Result<WindowSet> {
        if self.scale != other.scale {
            return Err(Error::ScaleMismatch { a: self.scale, b: other.scale });
        }
        let mut out =
            WindowSet::new_empty(self.scale, self.lo.min(other.lo), self.hi.max(other.hi))?;
        or_shift(&mut out, self, 0);
        or_shift(&mut out, other, 0);
        out.cert = intersect_region(self.cert, other.cert);
        if let Some(c) = out.cert {
            out.set_certified(Some(c));
        } else {
            out.cert = None;
        }
        Ok(out)
    }

    /// Greatest common divisor of `|t|` over nonzero elements of
    /// `self ∩ [from, to]`; `0` when there are none.
    pub fn gcd_abs_in(&self, from: i64, to: i64) -> i64 {
        let mut g: i64 = 0;
        for t in self.iter_range(from, to) {
            if t == 0 {
                continue;
            }
            g = gcd_i64(g, t.abs());
            if g == 1 {
                break;
            }
        }
        g
    }

    /// Sorted distinct residues of elements of `self ∩ [from, to]` modulo `m`.
    pub fn residues_mod_in(&self, m: i64, from: i64, to: i64) -> Result<Vec<i64>> {
        if m < 1 {
            return Err(Error::Precondition(format!("modulus must be >= 1, got {m}")));
        }
        let mut seen = vec![false; m as usize];
        let mut found = 0usize;
        for t in self.iter_range(from, to) {
            let r = t.rem_euclid(m) as usize;
            if !seen[r] {
                seen[r] = true;
                found += 1;
                if found == m as usize {
                    break;
                }
            }
        }
        Ok((0..m).filter(|&r| seen[r as usize]).collect())
    }

    /// Detects a long constant-gap run: the largest set of consecutive
    /// elements `first, first+step, …` (at least `min_run` long) such that
    /// all other elements (the leftovers) number at most `max_leftovers`.
    fn periodic_core(&self, min_run: u64, max_leftovers: usize) -> Option<PeriodicCore> {
        let mut iter = self.iter();
        let first = iter.next()?;
        let mut best: Option<(i64, i64, u64)> = None; // (start, step, count)
        let mut run_start = first;
        let mut prev = first;
        let mut run_step: i64 = 0;
        let mut run_len: u64 = 1;
        let mut total: u64 = 1;
        for t in iter {
            total += 1;
            let d = t - prev;
            if run_step == 0 {
                run_step = d;
                run_len = 2;
            } else if d == run_step {
                run_len += 1;
            } else {
                if best.is_none_or(|(_, _, c)| run_len > c) {
                    best = Some((run_start, run_step, run_len));
                }
                run_start = prev;
                run_step = d;
                run_len = 2;
            }
            prev = t;
        }
        if run_step != 0 && best.is_none_or(|(_, _, c)| run_len > c) {
            best = Some((run_start, run_step, run_len));
        }
        let (start, step, count) = best?;
        if count < min_run {
            return None;
        }
        let leftover_count = (total - count) as usize;
        if leftover_count > max_leftovers {
            return None;
        }
        let end = start + step * (count as i64 - 1);
        let leftovers: Vec<i64> =
            self.iter().filter(|&t| t < start || t > end).collect();
        debug_assert_eq!(leftovers.len(), leftover_count);
        Some(PeriodicCore { start, step, count, leftovers })
    }

    /// Exact density on the positive part: the maximum of
    /// `|S ∩ [1, n]| / n` over `n` from `⌈hi/2⌉` to `hi`, as an exact
    /// rational (ties keep the smallest `n`). Fails when the window has no
    /// positive part.
    pub fn window_density(&self) -> Result<Rational> {
        if self.hi < 1 {
            return Err(Error::EmptyWindow);
        }
        let n0 = (self.hi + 1) / 2;
        let n0 = n0.max(1);
        let mut cnt = self.count_in(1, n0);
        let mut best_cnt = cnt;
        let mut best_n = n0;
        let mut n = n0;
        while n < self.hi {
            n += 1;
            if self.contains(n) {
                cnt += 1;
            }
            // cnt/n > best_cnt/best_n  ⟺  cnt·best_n > best_cnt·n
            if (cnt as u128) * (best_n as u128) > (best_cnt as u128) * (n as u128) {
                best_cnt = cnt;
                best_n = n;
            }
        }
        if best_cnt == 0 {
            return Ok(Rational::zero());
        }
        Rational::new(best_cnt as i64, best_n)
    }
}

/// Ascending element iterator.
pub struct Elements<'a> {
    set: &'a WindowSet,
    word_idx: usize,
    current: u64,
}

impl Iterator for Elements<'_> {
    type Item = i64;

    fn next(&mut self) -> Option<i64> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros();
                self.current &= self.current - 1;
                return Some(self.set.lo + (self.word_idx as i64) * 64 + bit as i64);
            }
            self.word_idx += 1;
            if self.word_idx >= self.set.words.len() {
                return None;
            }
            self.current = self.set.words[self.word_idx];
        }
    }
}

struct PeriodicCore {
    start: i64,
    step: i64,
    count: u64,
    leftovers: Vec<i64>,
}

fn intersect_region(a: Option<(i64, i64)>, b: Option<(i64, i64)>) -> Option<(i64, i64)> {
    let (al, ah) = a?;
    let (bl, bh) = b?;
    let lo = al.max(bl);
    let hi = ah.min(bh);
    if lo <= hi {
        Some((lo, hi))
    } else {
        None
    }
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `dst |= (src + delta) ∩ dst.window`, word-at-a-time.
fn or_shift(dst: &mut WindowSet, src: &WindowSet, delta: i64) {
    let t_lo = dst.lo.max(src.lo + delta);
    let t_hi = dst.hi.min(src.hi + delta);
    if t_lo > t_hi {
        return;
    }
    let l_lo = (t_lo - dst.lo) as usize;
    let l_hi = (t_hi - dst.lo) as usize;
    // dst local bit L maps to src local bit L + off.
    let off = dst.lo - delta - src.lo;
    for w in l_lo / 64..=l_hi / 64 {
        let lo_bit = if w == l_lo / 64 { (l_lo % 64) as u32 } else { 0 };
        let hi_bit = if w == l_hi / 64 { (l_hi % 64) as u32 } else { 63 };
        let mask = word_mask(lo_bit, hi_bit);
        let gathered = gather(&src.words, (w as i64) * 64 + off);
        dst.words[w] |= gathered & mask;
    }
}

/// `set |= (set + delta) ∩ window`, in place. Word iteration order is chosen
/// so every read sees pre-pass bits only.
fn or_shift_in_place(set: &mut WindowSet, delta: i64) {
    if delta == 0 {
        return;
    }
    let t_lo = set.lo.max(set.lo + delta);
    let t_hi = set.hi.min(set.hi + delta);
    if t_lo > t_hi {
        return;
    }
    let l_lo = (t_lo - set.lo) as usize;
    let l_hi = (t_hi - set.lo) as usize;
    let off = -delta;
    let w_lo = l_lo / 64;
    let w_hi = l_hi / 64;
    let apply = |set: &mut WindowSet, w: usize| {
        let lo_bit = if w == w_lo { (l_lo % 64) as u32 } else { 0 };
        let hi_bit = if w == w_hi { (l_hi % 64) as u32 } else { 63 };
        let mask = word_mask(lo_bit, hi_bit);
        let gathered = gather(&set.words, (w as i64) * 64 + off);
        set.words[w] |= gathered & mask;
    };
    if delta > 0 {
        // Reads look at lower word indices; process descending.
        for w in (w_lo..=w_hi).rev() {
            apply(set, w);
        }
    } else {
        // Reads look at higher word indices; process ascending.
        for w in w_lo..=w_hi {
            apply(set, w);
        }
    }
}

/// ORs `⋃_{i<count} (base + start + i·step)` into `dst` via prefix doubling:
/// `O(log count)` whole-window passes plus one pass per binary digit.
/// `dst` must be large enough to hold every intermediate prefix union
/// (callers use the full Minkowski window of the two operands).
fn ap_or(dst: &mut WindowSet, base: &WindowSet, start: i64, step: i64, count: u64) {
    debug_assert!(step >= 1 && count >= 1);
    or_shift(dst, base, start);
    if count == 1 {
        return;
    }
    let bits = 64 - count.leading_zeros();
    let mut c: u64 = 1;
    for i in (0..bits - 1).rev() {
        // Double the prefix: ∪_{i<c} → ∪_{i<2c}.
        or_shift_in_place(dst, step * c as i64);
        c *= 2;
        if count & (1 << i) != 0 {
            or_shift(dst, base, start + step * c as i64);
            c += 1;
        }
    }
    debug_assert_eq!(c, count);
}

/// The sumset `A + B` on the full Minkowski window
/// `[a.lo + b.lo, a.hi + b.hi]`.
pub fn sumset(a: &WindowSet, b: &WindowSet) -> Result<WindowSet> {
    sumset_windowed(a, b, a.lo + b.lo, a.hi + b.hi)
}

/// The sumset `A + B`, clipped to the window `[out_lo, out_hi]`.
///
/// The certified region is `[a.cert_lo + b.cert_lo, a.cert_hi + b.cert_hi]`
/// intersected with the output window (empty if either operand's is empty).
pub fn sumset_windowed(
    a: &WindowSet,
    b: &WindowSet,
    out_lo: i64,
    out_hi: i64,
) -> Result<WindowSet> {
    if a.scale != b.scale {
        return Err(Error::ScaleMismatch { a: a.scale, b: b.scale });
    }
    let mut out = WindowSet::new_empty(a.scale, out_lo, out_hi)?;
    let cert = match (a.cert, b.cert) {
        (Some((al, ah)), Some((bl, bh))) => intersect_region(
            Some((al + bl, ah + bh)),
            Some((out_lo, out_hi)),
        ),
        _ => None,
    };
    out.cert = cert;
    if a.is_empty() || b.is_empty() {
        return Ok(out);
    }
    // Fast path: one side is (mostly) an arithmetic progression.
    let core_a = a.periodic_core(CORE_MIN_RUN, CORE_MAX_LEFTOVERS);
    let core_b = if core_a.as_ref().is_none_or(|c| c.count < a.len()) {
        b.periodic_core(CORE_MIN_RUN, CORE_MAX_LEFTOVERS)
    } else {
        None
    };
    let pick_b = match (&core_a, &core_b) {
        (Some(ca), Some(cb)) => cb.count > ca.count,
        (None, Some(_)) => true,
        _ => false,
    };
    let (core, shifts_side, base) = if pick_b {
        (core_b, b, a)
    } else {
        (core_a, a, b)
    };
    let _ = shifts_side;
    if let Some(core) = core {
        // Build exactly on the full Minkowski window so intermediate prefix
        // unions are never clipped, then fold into the requested window.
        if let Ok(mut scratch) =
            WindowSet::new_empty(a.scale, a.lo + b.lo, a.hi + b.hi)
        {
            ap_or(&mut scratch, base, core.start, core.step, core.count);
            for &t in &core.leftovers {
                or_shift(&mut scratch, base, t);
            }
            or_shift(&mut out, &scratch, 0);
            return Ok(out);
        }
        // Scratch window over cap: fall through to the elementwise path.
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    for t in small.iter() {
        or_shift(&mut out, large, t);
    }
    Ok(out)
}

/// The difference set `A − B` on the full Minkowski window.
pub fn difference(a: &WindowSet, b: &WindowSet) -> Result<WindowSet> {
    sumset(a, &b.negate())
}

/// The difference set `A − B`, clipped to `[out_lo, out_hi]`.
pub fn difference_windowed(
    a: &WindowSet,
    b: &WindowSet,
    out_lo: i64,
    out_hi: i64,
) -> Result<WindowSet> {
    sumset_windowed(a, &b.negate(), out_lo, out_hi)
}

/// The iterated sumset `kS`, clipped to `S`'s window at every step.
///
/// Clipping is lossless for all-positive and symmetric windows (see the
/// module docs); `k = 1` returns a copy of `S`. Fails when the certified
/// region contracts to nothing — the window is too small for that `k`.
pub fn iterate_sumset(s: &WindowSet, k: u32) -> Result<WindowSet> {
    if k == 0 {
        return Err(Error::Precondition("iterated sumset needs k >= 1".into()));
    }
    let mut acc = s.clone();
    for step in 2..=k {
        acc = sumset_windowed(&acc, s, s.lo, s.hi)?;
        if acc.certified().is_none() {
            return Err(Error::CertifiedEmpty {
                context: format!(
                    "iterated sumset at k = {step} on window [{}, {}]; use a larger window",
                    s.lo, s.hi
                ),
            });
        }
    }
    Ok(acc)
}

/// Least `t ∈ a` with `t + delta ∈ b`, if any.
pub fn least_with_shift(a: &WindowSet, b: &WindowSet, delta: i64) -> Option<i64> {
    for (w, &word) in a.words.iter().enumerate() {
        if word == 0 {
            continue;
        }
        let t0 = a.lo + (w as i64) * 64;
        let off = t0 + delta - b.lo; // b's local bit index for a's bit 0 of this word
        let g = gather(&b.words, off);
        let m = word & g;
        if m != 0 {
            return Some(t0 + m.trailing_zeros() as i64);
        }
    }
    None
}

/// A found arithmetic progression `{m·d·i : 1 ≤ i ≤ l}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressionWitness {
    pub scale: u32,
    pub m: i64,
    pub d: i64,
    pub l: u32,
}

impl ProgressionWitness {
    /// The progression's elements, ascending.
    pub fn elements(&self) -> Vec<i64> {
        (1..=self.l as i64).map(|i| self.m * self.d * i).collect()
    }
}

/// Outcome of [`find_progression`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ProgressionOutcome {
    Found(ProgressionWitness),
    /// No progression with gap multiplier up to `d_max` fits.
    NotFound { d_max: i64 },
}

/// Finds the least `d ≥ 1` with `{m·d, 2·m·d, …, l·m·d} ⊆ good`, scanning
/// `d` up to the largest value the window can contain.
pub fn find_progression(good: &WindowSet, l: u32, m: i64) -> Result<ProgressionOutcome> {
    if l < 1 || m < 1 {
        return Err(Error::Precondition(format!(
            "progression search needs l >= 1 and m >= 1, got l={l}, m={m}"
        )));
    }
    let span = m.checked_mul(l as i64).ok_or(Error::Overflow("progression span".into()))?;
    if good.hi < span {
        return Err(Error::Precondition(format!(
            "window upper bound {} cannot contain an {l}-term progression with gap m={m}",
            good.hi
        )));
    }
    let d_max = good.hi / span;
    'outer: for d in 1..=d_max {
        for i in 1..=l as i64 {
            if !good.contains(m * d * i) {
                continue 'outer;
            }
        }
        return Ok(ProgressionOutcome::Found(ProgressionWitness {
            scale: good.scale(),
            m,
            d,
            l,
        }));
    }
    Ok(ProgressionOutcome::NotFound { d_max })
}
