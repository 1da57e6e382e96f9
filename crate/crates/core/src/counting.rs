//! Digit dynamic programming over weighted automata.
//!
//! Both constraint families are driven by a [`DigitAutomaton`]: each digit
//! moves the state and adds a weight. For a block the weight is 1 when the
//! digit completes an occurrence; for the digit sum it is the digit itself.
//! A number satisfies the constraint `= k` when the total weight of its
//! expansion, read from the start state, equals `k`.

use std::fmt;
use std::ops::RangeInclusive;

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use thiserror::Error;

use crate::numeral::{check_base, Block, NumeralError, OccurrenceAutomaton};

#[derive(Debug, Error)]
pub enum CountError {
    #[error(
        "tail bound not certified: no run of {window} decaying terms (ratio <= {max_ratio}) \
         between d = {from} and d = {to}; increase --depth"
    )]
    CertificationFailure {
        from: u32,
        to: u32,
        window: usize,
        max_ratio: f64,
    },
    #[error("k = {k} not covered by table with max_k = {max_k}")]
    KOutOfRange { k: u32, max_k: u32 },
    #[error(transparent)]
    Numeral(#[from] NumeralError),
}

/// Number of consecutive decaying ratios required by [`tail_bound`].
pub const CERT_WINDOW: usize = 8;
/// Largest ratio accepted inside the certificate window.
pub const CERT_MAX_RATIO: (u32, u32) = (19, 20);
/// Rows beyond `D` that [`tail_bound_for`] may build while looking for a certificate.
pub const TAIL_BUDGET: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CountConstraint {
    Block(Block),
    DigitSum { base: u32 },
}

impl CountConstraint {
    pub fn base(&self) -> u32 {
        match self {
            CountConstraint::Block(w) => w.base(),
            CountConstraint::DigitSum { base } => *base,
        }
    }

    pub fn automaton(&self) -> DigitAutomaton {
        match self {
            CountConstraint::Block(w) => DigitAutomaton::for_block(w),
            CountConstraint::DigitSum { base } => DigitAutomaton::digit_sum(*base),
        }
    }
}

impl fmt::Display for CountConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountConstraint::Block(w) => write!(f, "block {w} base {}", w.base()),
            CountConstraint::DigitSum { base } => write!(f, "digit sum base {base}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitAutomaton {
    base: u32,
    states: usize,
    next: Vec<u32>,
    weight: Vec<u32>,
}

impl DigitAutomaton {
    pub fn for_block(w: &Block) -> Self {
        let occ = OccurrenceAutomaton::new(w);
        let base = w.base();
        let states = occ.num_states();
        let mut next = Vec::with_capacity(states * base as usize);
        let mut weight = Vec::with_capacity(states * base as usize);
        for q in 0..states as u32 {
            for a in 0..base {
                let (to, hit) = occ.step(q, a);
                next.push(to);
                weight.push(hit as u32);
            }
        }
        Self { base, states, next, weight }
    }

    pub fn digit_sum(base: u32) -> Self {
        Self {
            base,
            states: 1,
            next: vec![0; base as usize],
            weight: (0..base).collect(),
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    #[inline]
    pub fn step(&self, state: u32, digit: u32) -> (u32, u32) {
        let i = state as usize * self.base as usize + digit as usize;
        (self.next[i], self.weight[i])
    }

    /// Total weight of `n`'s expansion (0 for `n = 0`).
    pub fn weight_of(&self, n: u128) -> u64 {
        if n == 0 {
            return 0;
        }
        let mut digits = Vec::new();
        let mut m = n;
        while m > 0 {
            digits.push((m % self.base as u128) as u32);
            m /= self.base as u128;
        }
        let mut q = 0;
        let mut total = 0u64;
        for &a in digits.iter().rev() {
            let (to, w) = self.step(q, a);
            q = to;
            total += w as u64;
        }
        total
    }

    /// `max_weight[e][q]`: the largest weight any `e` further digits can add from `q`.
    pub fn max_weight_table(&self, e_max: u32) -> Vec<Vec<u32>> {
        let mut table = vec![vec![0u32; self.states]];
        for _ in 0..e_max {
            let prev = table.last().unwrap();
            let row = (0..self.states as u32)
                .map(|q| {
                    (0..self.base)
                        .map(|a| {
                            let (to, w) = self.step(q, a);
                            w + prev[to as usize]
                        })
                        .max()
                        .unwrap()
                })
                .collect();
            table.push(row);
        }
        table
    }
}

/// `cnt(q, j, e)`: digit strings of length `e` (leading zeros allowed) adding weight
/// `j` from state `q`, with weights above `max_k` pooled in one overflow column.
#[derive(Debug, Clone)]
pub struct Completions {
    aut: DigitAutomaton,
    max_k: u32,
    rows: Vec<Vec<Integer>>,
}

impl Completions {
    pub fn new(aut: DigitAutomaton, max_k: u32, e_max: u32) -> Self {
        let width = max_k as usize + 2;
        let mut first = vec![Integer::new(); aut.states * width];
        for q in 0..aut.states {
            first[q * width] = Integer::from(1);
        }
        let mut out = Self { aut, max_k, rows: vec![first] };
        out.extend_to(e_max);
        out
    }

    fn width(&self) -> usize {
        self.max_k as usize + 2
    }

    pub fn e_max(&self) -> u32 {
        self.rows.len() as u32 - 1
    }

    pub fn extend_to(&mut self, e_max: u32) {
        let width = self.width();
        let overflow = self.max_k as usize + 1;
        while self.e_max() < e_max {
            let prev = self.rows.last().unwrap();
            let mut row = vec![Integer::new(); self.aut.states * width];
            for q in 0..self.aut.states {
                for a in 0..self.aut.base {
                    let (to, w) = self.aut.step(q as u32, a);
                    let src = &prev[to as usize * width..(to as usize + 1) * width];
                    let dst = &mut row[q * width..(q + 1) * width];
                    for (j, c) in src.iter().enumerate() {
                        if *c != 0 {
                            dst[(j + w as usize).min(overflow)] += c;
                        }
                    }
                }
            }
            self.rows.push(row);
        }
    }

    /// Exact count for `j <= max_k`; `j = max_k + 1` reads the overflow column.
    pub fn get(&self, q: u32, j: u32, e: u32) -> &Integer {
        &self.rows[e as usize][q as usize * self.width() + j as usize]
    }
}

#[derive(Debug, Clone)]
pub struct CountTable {
    constraint: CountConstraint,
    max_k: u32,
    max_d: u32,
    completions: Completions,
    counts: Vec<Vec<Integer>>,
    overflow: Vec<Integer>,
}

pub fn block_count_table(w: &Block, max_k: u32, max_d: u32) -> CountTable {
    CountTable::build(CountConstraint::Block(w.clone()), max_k, max_d)
}

pub fn digitsum_count_table(base: u32, max_k: u32, max_d: u32) -> Result<CountTable, CountError> {
    check_base(base)?;
    Ok(CountTable::build(CountConstraint::DigitSum { base }, max_k, max_d))
}

impl CountTable {
    pub fn build(constraint: CountConstraint, max_k: u32, max_d: u32) -> Self {
        assert!(max_d >= 1, "max_d must be at least 1");
        let aut = constraint.automaton();
        let completions = Completions::new(aut.clone(), max_k, max_d - 1);
        let mut counts = Vec::with_capacity(max_d as usize);
        let mut overflow = Vec::with_capacity(max_d as usize);
        for d in 1..=max_d {
            let mut row = vec![Integer::new(); max_k as usize + 2];
            for a in 1..aut.base() {
                let (q, w) = aut.step(0, a);
                for j in 0..=max_k + 1 {
                    let c = completions.get(q, j, d - 1);
                    if *c != 0 {
                        row[((j + w) as usize).min(max_k as usize + 1)] += c;
                    }
                }
            }
            overflow.push(row.pop().unwrap());
            counts.push(row);
        }
        Self { constraint, max_k, max_d, completions, counts, overflow }
    }

    pub fn constraint(&self) -> &CountConstraint {
        &self.constraint
    }

    pub fn base(&self) -> u32 {
        self.constraint.base()
    }

    pub fn max_k(&self) -> u32 {
        self.max_k
    }

    pub fn max_d(&self) -> u32 {
        self.max_d
    }

    pub fn completions(&self) -> &Completions {
        &self.completions
    }

    /// `N(k, d)`; `d` counts digits, starting at 1.
    pub fn get(&self, k: u32, d: u32) -> &Integer {
        &self.counts[d as usize - 1][k as usize]
    }

    pub fn overflow(&self, d: u32) -> &Integer {
        &self.overflow[d as usize - 1]
    }

    pub fn row_sum(&self, d: u32) -> Integer {
        let mut s: Integer = self.counts[d as usize - 1].iter().sum();
        s += self.overflow(d);
        s
    }

    /// Every row adds up to `(B-1) B^{d-1}`.
    pub fn rows_balanced(&self) -> bool {
        let b = Integer::from(self.base());
        (1..=self.max_d).all(|d| self.row_sum(d) == Integer::from(&b - 1u32) * Integer::from((&b).pow(d - 1)))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,d,count\n");
        for k in 0..=self.max_k {
            for d in 1..=self.max_d {
                out.push_str(&format!("{k},{d},{}\n", self.get(k, d)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailBound {
    /// Upper bound, rounded up to `f64`.
    pub bound: f64,
    /// Last digit length covered explicitly before the closing term.
    pub certified_at: u32,
    pub ratio: f64,
}

fn rational_up(r: &Rational) -> f64 {
    Float::with_val_round(64, r, Round::Up).0.to_f64_round(Round::Up)
}

fn rational_down(r: &Rational) -> f64 {
    Float::with_val_round(64, r, Round::Down).0.to_f64_round(Round::Down)
}

/// Upper bound for `Σ n^{-p}` over `n >= B^D` meeting the constraint with count `k`.
///
/// Uses `Σ_{d>D} N(k,d) B^{-p(d-1)}`. The rows after `D` must show
/// [`CERT_WINDOW`] consecutive ratios of at most 0.95; the remainder past that
/// window is closed with the larger of the geometric tail and the exact value of
/// the remaining series, which the generating function supplies.
pub fn tail_bound(table: &CountTable, k: u32, depth: u32, p: u32) -> Result<TailBound, CountError> {
    if k > table.max_k {
        return Err(CountError::KOutOfRange { k, max_k: table.max_k });
    }
    assert!(depth >= 1 && p >= 1);
    let base = table.base();
    let z = Rational::from((1, Integer::from(base).pow(p)));
    let limit = Rational::from(CERT_MAX_RATIO);
    let b = Integer::from(base);
    let term = |d: u32| Rational::from((table.get(k, d).clone(), Integer::from((&b).pow(p * (d - 1)))));
    if series_remainder(table, k, depth, &z) == 0 {
        return Ok(TailBound { bound: 0.0, certified_at: depth, ratio: 0.0 });
    }
    let mut partial = Rational::new();
    let mut prev: Option<Rational> = None;
    let mut window: Vec<Rational> = Vec::new();
    for d in depth + 1..=table.max_d {
        let a = term(d);
        partial += &a;
        if a == 0 {
            window.clear();
            prev = None;
            continue;
        }
        if let Some(p_prev) = &prev {
            window.push(Rational::from(&a / p_prev));
            if window.len() > CERT_WINDOW {
                window.remove(0);
            }
        }
        if window.len() == CERT_WINDOW && window.iter().all(|r| *r <= limit) {
            let r = window.iter().max().unwrap().clone();
            let geometric = Rational::from(&a * &r) / (Rational::from(1) - &r);
            let exact = series_remainder(table, k, d, &z);
            let closing = if exact > geometric { exact } else { geometric };
            partial += closing;
            return Ok(TailBound {
                bound: rational_up(&partial),
                certified_at: d,
                ratio: r.to_f64(),
            });
        }
        prev = Some(a);
    }
    Err(CountError::CertificationFailure {
        from: depth + 1,
        to: table.max_d,
        window: CERT_WINDOW,
        max_ratio: f64::from(CERT_MAX_RATIO.0) / f64::from(CERT_MAX_RATIO.1),
    })
}

/// Builds a table with [`TAIL_BUDGET`] rows past `depth` and calls [`tail_bound`].
pub fn tail_bound_for(constraint: &CountConstraint, k: u32, depth: u32, p: u32) -> Result<TailBound, CountError> {
    let table = CountTable::build(constraint.clone(), k, depth + TAIL_BUDGET);
    tail_bound(&table, k, depth, p)
}

/// `Σ_{d > last} N(k,d) z^{d-1}` exactly.
fn series_remainder(table: &CountTable, k: u32, last: u32, z: &Rational) -> Rational {
    let aut = table.completions.aut.clone();
    let f = generating_values(&aut, z, k);
    let mut total = Rational::new();
    for a in 1..aut.base() {
        let (q, w) = aut.step(0, a);
        if w > k {
            continue;
        }
        total += truncated_series(&table.completions, &f, q, k - w, last, z);
    }
    total
}

/// `Σ_{e >= e_min} cnt(q, j, e) z^e`.
fn truncated_series(comp: &Completions, f: &[Vec<Rational>], q: u32, j: u32, e_min: u32, z: &Rational) -> Rational {
    let mut value = f[j as usize][q as usize].clone();
    let mut zp = Rational::from(1);
    for e in 0..e_min {
        value -= Rational::from(comp.get(q, j, e)) * &zp;
        zp *= z;
    }
    value
}

/// `F_j(q) = Σ_e cnt(q, j, e) z^e` for `j <= j_max`, exact.
///
/// Solves `(I - z M_0) F_j = [j = 0] + z Σ_{w >= 1} M_w F_{j-w}` where `M_w`
/// collects the transitions of weight `w`.
pub fn generating_values(aut: &DigitAutomaton, z: &Rational, j_max: u32) -> Vec<Vec<Rational>> {
    let s = aut.num_states();
    let mut matrix = vec![vec![Rational::new(); s]; s];
    for (q, row) in matrix.iter_mut().enumerate() {
        row[q] += 1;
        for a in 0..aut.base() {
            let (to, w) = aut.step(q as u32, a);
            if w == 0 {
                row[to as usize] -= z;
            }
        }
    }
    let mut f: Vec<Vec<Rational>> = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        let mut rhs = vec![Rational::new(); s];
        for (q, r) in rhs.iter_mut().enumerate() {
            if j == 0 {
                *r += 1;
            }
            for a in 0..aut.base() {
                let (to, w) = aut.step(q as u32, a);
                if w >= 1 && w <= j {
                    *r += Rational::from(z * &f[(j - w) as usize][to as usize]);
                }
            }
        }
        f.push(solve(matrix.clone(), rhs));
    }
    f
}

fn solve(mut m: Vec<Vec<Rational>>, mut rhs: Vec<Rational>) -> Vec<Rational> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| m[r][col] != 0).expect("nonsingular transfer system");
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in 0..n {
            if r == col || m[r][col] == 0 {
                continue;
            }
            let factor = Rational::from(&m[r][col] / &m[col][col]);
            let (pivot_row, row) = if r < col {
                let (lo, hi) = m.split_at_mut(col);
                (&hi[0], &mut lo[r])
            } else {
                let (lo, hi) = m.split_at_mut(r);
                (&lo[col], &mut hi[0])
            };
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= Rational::from(&factor * p);
            }
            let delta = Rational::from(&factor * &rhs[col]);
            rhs[r] -= delta;
        }
    }
    rhs.into_iter().zip(m).enumerate().map(|(i, (r, row))| r / &row[i]).collect()
}

/// Closed interval of reals with `f64` endpoints, rounded outward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    /// Half-width, widened so `[mid - r, mid + r]` still covers the interval.
    pub fn radius(&self) -> f64 {
        let m = self.mid();
        (self.hi - m).max(m - self.lo).next_up()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn add(&mut self, other: Interval) {
        self.lo = (self.lo + other.lo).next_down();
        self.hi = (self.hi + other.hi).next_up();
    }

    /// Product of two nonnegative intervals.
    fn mul_nonneg(self, other: Interval) -> Interval {
        Interval {
            lo: (self.lo * other.lo).next_down().max(0.0),
            hi: (self.hi * other.hi).next_up(),
        }
    }

    fn from_integer(c: &Integer) -> Interval {
        let lo = Float::with_val_round(64, c, Round::Down).0.to_f64_round(Round::Down);
        let hi = Float::with_val_round(64, c, Round::Up).0.to_f64_round(Round::Up);
        Interval { lo, hi }
    }

    fn from_rational(r: &Rational) -> Interval {
        Interval { lo: rational_down(r), hi: rational_up(r) }
    }

    /// `n^{-p}` for `n >= 1`.
    fn inv_pow(n: u128, p: u32) -> Interval {
        let nf = n as f64;
        let (n_lo, n_hi) = if nf as u128 == n { (nf, nf) } else { (nf.next_down(), nf.next_up()) };
        let mut lo = 1.0;
        let mut hi = 1.0;
        for _ in 0..p {
            lo = (lo / n_hi).next_down();
            hi = (hi / n_lo).next_up();
        }
        Interval { lo: lo.max(0.0), hi }
    }
}

/// Default number of leading digits used to group the tail.
pub fn default_prefix_len(base: u32) -> u32 {
    ((20.0 / f64::from(base).log2()).round() as u32).max(2)
}

fn digit_count(n: u128, base: u32) -> u32 {
    let mut d = 0;
    let mut m = n;
    while m > 0 {
        m /= base as u128;
        d += 1;
    }
    d
}

/// Enclosures of `Σ n^{-p}` over `n > cutoff` with weight `k`, for each `k` in `ks`.
///
/// Numbers with at most `max(digits(cutoff), prefix_len - 1)` digits are walked
/// digit by digit; longer numbers are grouped by their first `prefix_len`
/// digits, each group weighted by the exact series of completion counts.
pub fn tail_enclosures(aut: &DigitAutomaton, ks: RangeInclusive<u32>, cutoff: u128, p: u32, prefix_len: u32) -> Vec<Interval> {
    let base = aut.base();
    let k_min = *ks.start();
    let k_max = *ks.end();
    let width = (k_max - k_min + 1) as usize;
    let d_cut = digit_count(cutoff, base).max(1);
    let d_a = d_cut.max(prefix_len - 1);
    let e_min = d_a + 1 - prefix_len;
    let comp = Completions::new(aut.clone(), k_max, d_a.max(e_min));
    let max_w = aut.max_weight_table(d_a);
    let mut out = vec![Interval::ZERO; width];

    let mut walk = Walk {
        aut,
        comp: &comp,
        max_w: &max_w,
        k_min,
        k_max,
        cutoff,
        prefix_len,
        p,
        out: &mut out,
    };
    for d in d_cut..=d_a {
        walk.length(d);
    }

    // grouped region: Σ over prefixes of bucket (state, weight so far)
    let states = aut.num_states();
    let mut buckets = vec![Interval::ZERO; states * (k_max as usize + 1)];
    let mut stack: Vec<(u32, u128, u32, u32)> = (1..base)
        .rev()
        .map(|a| {
            let (q, w) = aut.step(0, a);
            (1, a as u128, q, w)
        })
        .collect();
    while let Some((len, prefix, q, c)) = stack.pop() {
        if c > k_max {
            continue;
        }
        if len == prefix_len {
            let lo = Interval::inv_pow(prefix + 1, p).lo;
            let hi = Interval::inv_pow(prefix, p).hi;
            buckets[q as usize * (k_max as usize + 1) + c as usize].add(Interval { lo, hi });
            continue;
        }
        for a in (0..base).rev() {
            let (to, w) = aut.step(q, a);
            stack.push((len + 1, prefix * base as u128 + a as u128, to, c + w));
        }
    }
    let z = Rational::from((1, Integer::from(base).pow(p)));
    let f = generating_values(aut, &z, k_max);
    for (slot, k) in out.iter_mut().zip(ks) {
        for q in 0..states as u32 {
            for c in 0..=k {
                let bucket = buckets[q as usize * (k_max as usize + 1) + c as usize];
                if bucket.hi == 0.0 {
                    continue;
                }
                let series = truncated_series(&comp, &f, q, k - c, e_min, &z);
                slot.add(bucket.mul_nonneg(Interval::from_rational(&series)));
            }
        }
    }
    out
}

pub fn tail_enclosure(aut: &DigitAutomaton, k: u32, cutoff: u128, p: u32, prefix_len: u32) -> Interval {
    tail_enclosures(aut, k..=k, cutoff, p, prefix_len)[0]
}

struct Walk<'a> {
    aut: &'a DigitAutomaton,
    comp: &'a Completions,
    max_w: &'a [Vec<u32>],
    k_min: u32,
    k_max: u32,
    cutoff: u128,
    prefix_len: u32,
    p: u32,
    out: &'a mut [Interval],
}

impl Walk<'_> {
    /// Numbers of exactly `d` digits above the cutoff.
    fn length(&mut self, d: u32) {
        let base = self.aut.base();
        for a in 1..base {
            let (q, w) = self.aut.step(0, a);
            self.node(d, 1, a as u128, q, w);
        }
    }

    fn node(&mut self, d: u32, len: u32, prefix: u128, q: u32, c: u32) {
        let base = self.aut.base() as u128;
        let rest = d - len;
        let span = base.pow(rest);
        let lo_n = prefix * span;
        let hi_n = lo_n + span - 1;
        if hi_n <= self.cutoff || c > self.k_max || c + self.max_w[rest as usize][q as usize] < self.k_min {
            return;
        }
        if rest == 0 {
            self.out[(c - self.k_min) as usize].add(Interval::inv_pow(lo_n, self.p));
            return;
        }
        if lo_n > self.cutoff && len >= self.prefix_len {
            let range = Interval {
                lo: Interval::inv_pow(hi_n, self.p).lo,
                hi: Interval::inv_pow(lo_n, self.p).hi,
            };
            for k in self.k_min.max(c)..=self.k_max {
                let count = self.comp.get(q, k - c, rest);
                if *count != 0 {
                    self.out[(k - self.k_min) as usize].add(range.mul_nonneg(Interval::from_integer(count)));
                }
            }
            return;
        }
        for a in 0..self.aut.base() {
            let (to, w) = self.aut.step(q, a);
            self.node(d, len + 1, prefix * base + a as u128, to, c + w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeral::count_occurrences_naive;

    fn b(base: u32, s: &str) -> Block {
        Block::parse(base, s).unwrap()
    }

    fn binom(n: u64, r: u64) -> u64 {
        if r > n {
            return 0;
        }
        (0..r).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn popcount_table_is_binomial() {
        let t = block_count_table(&b(2, "1"), 6, 10);
        for d in 1..=10u32 {
            assert_eq!(*t.get(0, d), 0);
            for k in 1..=6u32 {
                assert_eq!(*t.get(k, d), binom(d as u64 - 1, k as u64 - 1), "k={k} d={d}");
            }
        }
        assert_eq!(*t.get(2, 3), 2);
        assert!(t.rows_balanced());
        let ds = digitsum_count_table(2, 6, 10).unwrap();
        for d in 1..=10 {
            for k in 0..=6 {
                assert_eq!(ds.get(k, d), t.get(k, d));
            }
        }
    }

    #[test]
    fn zero_block_k0_is_all_ones() {
        let t = block_count_table(&b(2, "0"), 3, 12);
        for d in 1..=12 {
            assert_eq!(*t.get(0, d), 1);
        }
    }

    #[test]
    fn digitsum_examples() {
        let t = digitsum_count_table(10, 9, 4).unwrap();
        assert_eq!(*t.get(1, 1), 1);
        assert_eq!(*t.get(1, 3), 1);
        assert!(t.rows_balanced());
        assert!(digitsum_count_table(1, 2, 2).is_err());
    }

    #[test]
    fn tables_match_enumeration() {
        for (base, s, d_max) in [(2u32, "11", 10u32), (3, "12", 6), (3, "00", 6), (10, "9", 4), (10, "99", 4)] {
            let w = b(base, s);
            let t = block_count_table(&w, 3, d_max);
            for d in 1..=d_max {
                let lo = (base as u64).pow(d - 1);
                let mut counts = [0u64; 5];
                for n in lo..lo * base as u64 {
                    let c = count_occurrences_naive(&Integer::from(n), &w).min(4);
                    counts[c as usize] += 1;
                }
                for k in 0..=3 {
                    assert_eq!(*t.get(k, d), counts[k as usize], "w={s} k={k} d={d}");
                }
                assert_eq!(*t.overflow(d), counts[4]);
            }
            assert!(t.rows_balanced());
        }
    }

    #[test]
    fn csv_layout() {
        let csv = block_count_table(&b(2, "1"), 1, 2).to_csv();
        assert_eq!(csv, "k,d,count\n0,1,0\n0,2,0\n1,1,1\n1,2,1\n");
    }

    #[test]
    fn generating_values_match_truncated_sums() {
        let aut = DigitAutomaton::for_block(&b(2, "11"));
        let z = Rational::from((1, 2));
        let f = generating_values(&aut, &z, 2);
        let comp = Completions::new(aut, 2, 200);
        for j in 0..=2u32 {
            for q in 0..2u32 {
                let mut s = 0.0;
                for e in 0..=200 {
                    s += comp.get(q, j, e).to_f64() * 0.5f64.powi(e as i32);
                }
                assert!((f[j as usize][q as usize].to_f64() - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_block_tail_example() {
        // n = 2^m - 1 for m >= 5
        let t = block_count_table(&b(2, "0"), 0, 40);
        let bound = tail_bound(&t, 0, 4, 1).unwrap();
        let exact: f64 = (5..60).map(|m| 1.0 / (2f64.powi(m) - 1.0)).sum();
        assert!(bound.bound >= exact);
        assert!(bound.bound <= 1.0 / 8.0);
    }

    #[test]
    fn tail_bound_dominates_brute_force() {
        for (base, s, k, depth, p) in [
            (2u32, "11", 0u32, 6u32, 1u32),
            (2, "11", 2, 6, 2),
            (2, "1", 3, 5, 1),
            (3, "12", 1, 4, 1),
            (3, "00", 0, 4, 2),
            (10, "9", 0, 2, 2),
        ] {
            let w = b(base, s);
            let t = block_count_table(&w, k, depth + TAIL_BUDGET);
            let bound = tail_bound(&t, k, depth, p).unwrap().bound;
            let lo = (base as u64).pow(depth);
            let hi = (base as u64).pow(depth + 6).min(20_000_000);
            let aut = DigitAutomaton::for_block(&w);
            let brute: f64 = (lo..hi)
                .filter(|&n| aut.weight_of(n as u128) == k as u64)
                .map(|n| (n as f64).powi(-(p as i32)))
                .sum();
            assert!(brute <= bound, "w={s} k={k}: {brute} > {bound}");
            let p1 = tail_bound(&t, k, depth + 1, p).unwrap().bound;
            assert!(p1 <= bound);
        }
    }

    #[test]
    fn tail_bound_reports_failure() {
        let t = block_count_table(&b(2, "1"), 20, 33);
        assert!(matches!(tail_bound(&t, 20, 1, 2), Err(CountError::CertificationFailure { .. })));
        assert!(matches!(tail_bound(&t, 21, 1, 2), Err(CountError::KOutOfRange { .. })));
        // popcount 0 is only n = 0
        assert_eq!(tail_bound(&t, 0, 1, 2).unwrap().bound, 0.0);
    }

    #[test]
    fn enclosure_brackets_direct_sum() {
        // p = 2 tails converge fast enough to sum directly
        for (aut, k, cutoff) in [
            (DigitAutomaton::for_block(&b(2, "11")), 1u32, 1000u128),
            (DigitAutomaton::for_block(&b(3, "0")), 2, 500),
            (DigitAutomaton::digit_sum(3), 4, 2000),
            (DigitAutomaton::digit_sum(10), 2, 12345),
        ] {
            let direct: f64 = ((cutoff + 1)..5_000_000u128)
                .filter(|&n| aut.weight_of(n) == k as u64)
                .map(|n| 1.0 / (n as f64 * n as f64))
                .sum();
            let iv = tail_enclosure(&aut, k, cutoff, 2, default_prefix_len(aut.base()) / 2 + 1);
            assert!(iv.lo <= iv.hi);
            assert!(iv.lo <= direct + 1e-6, "{iv:?} vs {direct}");
            assert!(direct <= iv.hi, "{iv:?} vs {direct}");
        }
    }

    #[test]
    fn enclosure_of_full_series_matches_closed_form() {
        // Σ_{n >= 1, popcount 1} 1/n = 2 and Σ_{n>=1, s_10(n)=1} 1/n = 10/9
        let iv = tail_enclosure(&DigitAutomaton::for_block(&b(2, "1")), 1, 0, 1, 12);
        assert!(iv.contains(2.0) && iv.hi - iv.lo < 2.0 * 2f64.powi(-11), "{iv:?}");
        let iv = tail_enclosure(&DigitAutomaton::digit_sum(10), 1, 0, 1, 4);
        assert!(iv.contains(10.0 / 9.0) && iv.hi - iv.lo < 2e-3, "{iv:?}");
        let iv = tail_enclosure(&DigitAutomaton::digit_sum(10), 1, 10, 1, 4);
        assert!(iv.contains(10.0 / 9.0 - 1.1), "{iv:?}");
    }
}
