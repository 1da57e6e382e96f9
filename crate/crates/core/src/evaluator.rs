//! Constrained harmonic sums and the identities behind them.
//!
//! Every sum runs over the integers below a cutoff that satisfy a
//! [`Constraint`], enumerated digit by digit over the constraint's automaton.
//! Partial sums are exact up to tracked rounding; the remainder past the cutoff
//! is enclosed with the counting module, so each result is an [`ApproxValue`]
//! whose interval contains the true value.

use std::fmt;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use rug::float::Round;
use rug::ops::Pow;
use rug::{Assign, Float, Integer};
use serde::Serialize;
use thiserror::Error;

use crate::counting::{
    default_prefix_len, tail_bound_for, tail_enclosures, CountConstraint, CountError, DigitAutomaton, Interval,
};
use crate::numeral::{Block, NumeralError};
use crate::reducer::{derive_bw, ln_base, TermSet};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Numeral(#[from] NumeralError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Brute,
    Accelerated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub family: CountConstraint,
    pub k: u32,
}

impl Constraint {
    pub fn block(w: Block, k: u32) -> Self {
        Self { family: CountConstraint::Block(w), k }
    }

    pub fn digit_sum(base: u32, k: u32) -> Self {
        Self { family: CountConstraint::DigitSum { base }, k }
    }

    pub fn base(&self) -> u32 {
        self.family.base()
    }

    pub fn holds(&self, n: u128) -> bool {
        self.family.automaton().weight_of(n) == self.k as u64
    }
}

/// `estimate ± radius`; `rounding` is the part of `radius` due to arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxValue {
    pub estimate: Float,
    pub radius: f64,
    pub rounding: f64,
    pub empty_set: bool,
}

impl ApproxValue {
    fn empty(prec: u32) -> Self {
        Self { estimate: Float::with_val(prec, 0), radius: 0.0, rounding: 0.0, empty_set: true }
    }

    pub fn precision(&self) -> u32 {
        self.estimate.prec()
    }

    /// `|estimate - x|`, rounded up.
    pub fn distance_to(&self, x: &Float) -> f64 {
        let prec = self.precision().max(x.prec()) * 2 + 64;
        let mut d = Float::with_val(prec, &self.estimate - x);
        d.abs_mut();
        d.to_f64_round(Round::Up)
    }

    pub fn contains(&self, x: &Float) -> bool {
        self.distance_to(x) <= self.radius
    }

    /// Whether the two enclosures overlap.
    pub fn intersects(&self, other: &ApproxValue) -> bool {
        let prec = self.precision().max(other.precision()) * 2 + 64;
        let mut d = Float::with_val(prec, &self.estimate - &other.estimate);
        d.abs_mut();
        d.to_f64_round(Round::Down) <= self.radius + other.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub k: u32,
    pub sum: ApproxValue,
    pub limit: Float,
    /// Upper bound on `|S(k) - limit|`.
    pub certified_distance: f64,
}

/// `B^D` closest to `2^24`.
pub fn default_depth(base: u32) -> u32 {
    (24.0 / f64::from(base).log2()).round().max(1.0) as u32
}

fn unit(prec: u32) -> f64 {
    2f64.powi(-(prec as i32))
}

fn abs_up(x: &Float) -> f64 {
    x.to_f64_round(Round::Up).abs().max(x.to_f64_round(Round::Down).abs())
}

fn add_up(a: f64, b: f64) -> f64 {
    (a + b).next_up()
}

fn mul_up(a: f64, b: f64) -> f64 {
    (a * b).next_up()
}

// --- enumeration kernel --------------------------------------------------

/// Digit-tree node: the `len` leading digits of a `d`-digit number.
#[derive(Debug, Clone, Copy)]
struct Node {
    d: u32,
    len: u32,
    prefix: u64,
    q: u32,
    c: u32,
}

struct Sweep<'a> {
    aut: &'a DigitAutomaton,
    limit: u64,
    k_min: u32,
    k_max: u32,
    max_w: Vec<Vec<u32>>,
    pow: Vec<u64>,
}

impl<'a> Sweep<'a> {
    fn new(aut: &'a DigitAutomaton, limit: u64, ks: &RangeInclusive<u32>) -> Self {
        let base = aut.base() as u64;
        let mut pow = vec![1u64];
        while let Some(next) = pow.last().unwrap().checked_mul(base) {
            pow.push(next);
            if next > limit {
                break;
            }
        }
        let digits = pow.iter().take_while(|&&p| p <= limit).count() as u32;
        Self {
            aut,
            limit,
            k_min: *ks.start(),
            k_max: *ks.end(),
            max_w: aut.max_weight_table(digits),
            pow,
        }
    }

    fn digits(&self) -> u32 {
        self.pow.iter().take_while(|&&p| p <= self.limit).count() as u32
    }

    fn viable(&self, n: &Node) -> bool {
        let rest = n.d - n.len;
        n.c <= self.k_max
            && n.c + self.max_w[rest as usize][n.q as usize] >= self.k_min
            && n.prefix.checked_mul(self.pow[rest as usize]).is_some_and(|lo| lo <= self.limit)
    }

    /// Subtrees of bounded size, listed in increasing order of the numbers they hold.
    fn chunks(&self) -> Vec<Node> {
        let base = self.aut.base();
        let chunk_digits = (14.0 / f64::from(base).log2()).ceil() as u32;
        let mut out = Vec::new();
        for d in 1..=self.digits() {
            let target = d.saturating_sub(chunk_digits).max(1);
            let mut stack: Vec<Node> = (1..base)
                .rev()
                .map(|a| {
                    let (q, c) = self.aut.step(0, a);
                    Node { d, len: 1, prefix: a as u64, q, c }
                })
                .collect();
            while let Some(node) = stack.pop() {
                if !self.viable(&node) {
                    continue;
                }
                if node.len == target {
                    out.push(node);
                    continue;
                }
                for a in (0..base).rev() {
                    let (q, w) = self.aut.step(node.q, a);
                    stack.push(Node {
                        d,
                        len: node.len + 1,
                        prefix: node.prefix * base as u64 + a as u64,
                        q,
                        c: node.c + w,
                    });
                }
            }
        }
        out
    }

    fn walk<F: FnMut(u64, u32)>(&self, node: Node, f: &mut F) {
        if !self.viable(&node) {
            return;
        }
        if node.len == node.d {
            f(node.prefix, node.c);
            return;
        }
        let base = self.aut.base();
        for a in 0..base {
            let (q, w) = self.aut.step(node.q, a);
            self.walk(
                Node {
                    d: node.d,
                    len: node.len + 1,
                    prefix: node.prefix * base as u64 + a as u64,
                    q,
                    c: node.c + w,
                },
                f,
            );
        }
    }
}

/// The factors of `b(n)` as `(numerator, denominator)` pairs.
#[derive(Debug, Clone)]
enum LogForm {
    /// `(|mult|, mult > 0, A, t)` for each `mult · ln((An+t)/(An+t+1))`.
    Block(Vec<(u32, bool, u128, u128)>),
    /// `ln((n+1)/(B⌊n/B⌋+B))`.
    DigitSum(u128),
}

impl LogForm {
    fn for_terms(ts: &TermSet) -> Self {
        let b = ts.base() as u128;
        LogForm::Block(
            ts.terms()
                .iter()
                .map(|t| {
                    (
                        t.mult.unsigned_abs() as u32,
                        t.mult > 0,
                        b.pow(t.scale_exp),
                        t.offset.to_u128().expect("offset below B^s"),
                    )
                })
                .collect(),
        )
    }

    #[inline]
    fn factors(&self, n: u64, acc: &mut LogAcc) {
        let n = n as u128;
        match self {
            LogForm::Block(terms) => {
                for &(m, positive, a, t) in terms {
                    let x = a * n + t;
                    if x == 0 {
                        continue;
                    }
                    let (num, den) = if positive { (x, x + 1) } else { (x + 1, x) };
                    for _ in 0..m {
                        acc.mul(num, den);
                    }
                }
            }
            LogForm::DigitSum(b) => acc.mul(n + 1, b * (n / b) + b),
        }
        acc.end_number();
    }
}

const FLUSH_EVERY: u32 = 4096;

/// Running `Σ ln b(n)` as a product of integer factors, taken through `ln` in batches.
struct LogAcc {
    prec: u32,
    num: Float,
    den: Float,
    num_buf: u128,
    den_buf: u128,
    roundings: u32,
    pending: u32,
    sum: Float,
    err: f64,
}

impl LogAcc {
    fn new(prec: u32) -> Self {
        Self {
            prec,
            num: Float::with_val(prec, 1),
            den: Float::with_val(prec, 1),
            num_buf: 1,
            den_buf: 1,
            roundings: 0,
            pending: 0,
            sum: Float::with_val(prec, 0),
            err: 0.0,
        }
    }

    #[inline]
    fn mul(&mut self, num: u128, den: u128) {
        match self.num_buf.checked_mul(num) {
            Some(v) => self.num_buf = v,
            None => {
                self.num *= self.num_buf;
                self.roundings += 1;
                self.num_buf = num;
            }
        }
        match self.den_buf.checked_mul(den) {
            Some(v) => self.den_buf = v,
            None => {
                self.den *= self.den_buf;
                self.roundings += 1;
                self.den_buf = den;
            }
        }
    }

    #[inline]
    fn end_number(&mut self) {
        self.pending += 1;
        if self.pending == FLUSH_EVERY {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.pending == 0 {
            return;
        }
        self.num *= self.num_buf;
        self.den *= self.den_buf;
        let ratio = Float::with_val(self.prec, &self.num / &self.den);
        let rel = f64::from(self.roundings + 3) * unit(self.prec);
        assert!(rel < 1e-3);
        let term = ratio.ln();
        self.sum += &term;
        // |ln(R(1+δ)) - ln R| <= 2|δ| for small δ, plus rounding of ln and of the sum
        let e = 2.0 * rel + unit(self.prec) * (abs_up(&term) + abs_up(&self.sum));
        self.err = add_up(self.err, mul_up(e, 1.01));
        self.num.assign(1);
        self.den.assign(1);
        self.num_buf = 1;
        self.den_buf = 1;
        self.roundings = 0;
        self.pending = 0;
    }
}

struct HarmAcc {
    sum: Float,
    tmp: Float,
    count: u64,
}

impl HarmAcc {
    fn new(prec: u32) -> Self {
        Self { sum: Float::with_val(prec, 0), tmp: Float::with_val(prec, 0), count: 0 }
    }

    #[inline]
    fn add(&mut self, n: u64) {
        self.tmp.assign(n);
        self.tmp.recip_mut();
        self.sum += &self.tmp;
        self.count += 1;
    }

    /// Each of the `count` steps rounds a reciprocal and a partial sum, both at most the final sum.
    fn err(&self) -> f64 {
        let u = unit(self.sum.prec());
        mul_up(mul_up(u * 2.0, (self.count + 1) as f64), abs_up(&self.sum) * 1.01)
    }
}

#[derive(Debug, Clone)]
struct Sums {
    log: Vec<(Float, f64)>,
    harm: Vec<(Float, f64)>,
    counts: Vec<u64>,
}

struct PassPlan<'a> {
    aut: &'a DigitAutomaton,
    log: Option<LogForm>,
    harmonic: bool,
    limit: u64,
    ks: RangeInclusive<u32>,
    prec: u32,
}

/// Sums over `1 <= n <= limit` with weight in `ks`, one entry per `k`.
///
/// Chunks are fixed by the digit tree alone and folded in order, so the result
/// does not depend on how many threads run them.
fn run_pass(plan: &PassPlan<'_>) -> Sums {
    let width = (plan.ks.end() - plan.ks.start() + 1) as usize;
    let k_min = *plan.ks.start();
    let prec = plan.prec;
    let zero = || Sums {
        log: vec![(Float::with_val(prec, 0), 0.0); width],
        harm: vec![(Float::with_val(prec, 0), 0.0); width],
        counts: vec![0; width],
    };
    if plan.limit == 0 {
        return zero();
    }
    let sweep = Sweep::new(plan.aut, plan.limit, &plan.ks);
    let chunks = sweep.chunks();
    let parts: Vec<Sums> = chunks
        .par_iter()
        .map(|&chunk| {
            let mut logs: Vec<LogAcc> = (0..width).map(|_| LogAcc::new(prec)).collect();
            let mut harms: Vec<HarmAcc> = (0..width).map(|_| HarmAcc::new(prec)).collect();
            let mut counts = vec![0u64; width];
            sweep.walk(chunk, &mut |n, c| {
                let i = (c - k_min) as usize;
                counts[i] += 1;
                if let Some(form) = &plan.log {
                    form.factors(n, &mut logs[i]);
                }
                if plan.harmonic {
                    harms[i].add(n);
                }
            });
            Sums {
                log: logs
                    .into_iter()
                    .map(|mut a| {
                        a.flush();
                        (a.sum, a.err)
                    })
                    .collect(),
                harm: harms.into_iter().map(|h| { let e = h.err(); (h.sum, e) }).collect(),
                counts,
            }
        })
        .collect();
    let u = unit(prec);
    let mut total = zero();
    for part in parts {
        for i in 0..width {
            for (acc, add) in [(&mut total.log[i], &part.log[i]), (&mut total.harm[i], &part.harm[i])] {
                acc.0 += &add.0;
                acc.1 = add_up(add_up(acc.1, add.1), u * abs_up(&acc.0) * 1.01);
            }
            total.counts[i] += part.counts[i];
        }
    }
    total
}

fn limit_for_depth(base: u32, depth: u32, extra_bits: u32) -> Result<u64, EvalError> {
    let bits = f64::from(depth) * f64::from(base).log2();
    if depth == 0 || bits + f64::from(extra_bits) > 120.0 || bits > 60.0 {
        return Err(EvalError::InvalidInput(format!("depth {depth} out of range for base {base}")));
    }
    Ok((base as u64).pow(depth) - 1)
}

fn check_precision(prec: u32) -> Result<(), EvalError> {
    if !(32..=1 << 16).contains(&prec) {
        return Err(EvalError::InvalidInput(format!("precision {prec} out of range 32..65536")));
    }
    Ok(())
}

fn check_ks(ks: &RangeInclusive<u32>) -> Result<(), EvalError> {
    if ks.is_empty() || ks.end() - ks.start() > 4096 {
        return Err(EvalError::InvalidInput(format!("bad k range {}..{}", ks.start(), ks.end())));
    }
    Ok(())
}

// --- block constraints ---------------------------------------------------

/// Sums over `n < B^D` shared by the identity and the accelerated sum.
struct BlockPass {
    ts: TermSet,
    depth: u32,
    prec: u32,
    /// `Σ_{n >= 0} ln b_w(n)` less the excluded point, per `k`.
    log: Vec<(Float, f64)>,
    /// `Σ_{n >= 1} 1/n`, per `k`.
    harm: Vec<(Float, f64)>,
    ks: RangeInclusive<u32>,
}

fn block_pass(w: &Block, ks: RangeInclusive<u32>, depth: u32, prec: u32, harmonic: bool) -> Result<BlockPass, EvalError> {
    check_precision(prec)?;
    check_ks(&ks)?;
    let base = w.base();
    let block_bits = (w.len() as f64 * f64::from(base).log2()).ceil() as u32 + 1;
    let limit = limit_for_depth(base, depth, block_bits)?;
    let ts = derive_bw(w);
    let aut = DigitAutomaton::for_block(w);
    let sums = run_pass(&PassPlan {
        aut: &aut,
        log: Some(LogForm::for_terms(&ts)),
        harmonic,
        limit,
        ks: ks.clone(),
        prec,
    });
    let u = unit(prec);
    let mut log = sums.log;
    for (i, k) in ks.clone().enumerate() {
        let (sum, err) = &mut log[i];
        if k == 0 {
            let b0 = Float::with_val(prec, &ts.bw_rational(&Integer::new()));
            let l = b0.ln();
            *sum += &l;
            *err = add_up(*err, 3.0 * u * (abs_up(&l) + abs_up(sum)));
        }
        if let Some(e) = ts.excluded() {
            if aut.weight_of(e.n.to_u128().expect("small exclusion")) == k as u64 {
                let x = Float::with_val(prec, e.argument(base));
                let l = -(x.recip().ln_1p()) * e.mult;
                *sum -= &l;
                *err = add_up(*err, 4.0 * u * (abs_up(&l) + abs_up(sum)));
            }
        }
    }
    Ok(BlockPass { ts, depth, prec, log, harm: sums.harm, ks })
}

impl BlockPass {
    fn scale(&self) -> Integer {
        Integer::from(self.ts.base()).pow(self.ts.block().len() as u32)
    }

    fn rho_bounds(&self) -> (f64, f64) {
        let (neg, pos) = self.ts.rho_bounds();
        let up = |r: rug::Rational| Float::with_val_round(64, &r, Round::Up).0.to_f64_round(Round::Up);
        (up(neg), up(pos))
    }

    fn second_order_tails(&self) -> Result<Vec<f64>, EvalError> {
        let family = CountConstraint::Block(self.ts.block().clone());
        self.ks
            .clone()
            .map(|k| Ok(tail_bound_for(&family, k, self.depth, 2)?.bound))
            .collect()
    }

    /// `log_B`-valued identity enclosures.
    fn identity(&self) -> Result<Vec<ApproxValue>, EvalError> {
        let base = self.ts.base();
        let prec = self.prec;
        let aut = DigitAutomaton::for_block(self.ts.block());
        let limit = (base as u128).pow(self.depth) - 1;
        let psi = tail_enclosures(&aut, self.ks.clone(), limit, 1, default_prefix_len(base));
        let t2 = self.second_order_tails()?;
        let (c_neg, c_pos) = self.rho_bounds();
        let inv_scale = 1.0 / self.scale().to_f64();
        let ln_b = ln_base(base, prec);
        let u = unit(prec);
        let mut out = Vec::new();
        for (i, (sum, err)) in self.log.iter().enumerate() {
            // Σ_{n >= B^D} ln b_w(n) = -B^{-|w|} (Σ 1/n + Σ ρ(n))
            let tail = Interval {
                lo: -mul_up(inv_scale, add_up(psi[i].hi, mul_up(c_pos, t2[i]))),
                hi: -((inv_scale * (psi[i].lo - c_neg * t2[i]).next_down()).next_down()),
            };
            let mut total = Float::with_val(prec, sum + tail.mid());
            let rounding = add_up(*err, u * abs_up(&total));
            let radius_nat = add_up(rounding, tail.radius());
            total /= &ln_b;
            let conv = 4.0 * u * abs_up(&total);
            let ln_b_lo = ln_b.to_f64_round(Round::Down);
            out.push(ApproxValue {
                rounding: add_up((rounding / ln_b_lo).next_up(), conv),
                radius: add_up((radius_nat / ln_b_lo).next_up(), conv),
                estimate: total,
                empty_set: false,
            });
        }
        Ok(out)
    }

    /// `S_w(k) = Σ_{n >= 1, a_w(n) = k} 1/n` from `B^{|w|}(ln B + Σ ln b_w) + Σ 1/n`.
    fn accelerated(&self) -> Result<Vec<ApproxValue>, EvalError> {
        let prec = self.prec;
        let u = unit(prec);
        let t2 = self.second_order_tails()?;
        let c = self.ts.rho_constant();
        let c = Float::with_val_round(64, &c, Round::Up).0.to_f64_round(Round::Up);
        let scale = self.scale();
        let scale_f = scale.to_f64();
        let ln_b = ln_base(self.ts.base(), prec);
        let mut out = Vec::new();
        for (i, ((log, log_err), (harm, harm_err))) in self.log.iter().zip(&self.harm).enumerate() {
            let mut est = Float::with_val(prec, &ln_b + log);
            let inner = abs_up(&est);
            est *= &scale;
            est += harm;
            let rounding = add_up(
                add_up(mul_up(scale_f, add_up(*log_err, u * (abs_up(&ln_b) + inner) * 2.0)), *harm_err),
                3.0 * u * (abs_up(&est) + mul_up(scale_f, inner)),
            );
            out.push(ApproxValue {
                estimate: est,
                radius: add_up(rounding, mul_up(c, t2[i])),
                rounding,
                empty_set: false,
            });
        }
        Ok(out)
    }
}

/// Enclosure of `Σ_{n >= 0, a_w(n) = k} log_B b_w(n)` (target `-1`).
pub fn identity_check(w: &Block, k: u32, depth: u32, prec: u32) -> Result<ApproxValue, EvalError> {
    Ok(identity_checks(w, k..=k, depth, prec)?.remove(0))
}

pub fn identity_checks(w: &Block, ks: RangeInclusive<u32>, depth: u32, prec: u32) -> Result<Vec<ApproxValue>, EvalError> {
    block_pass(w, ks, depth, prec, false)?.identity()
}

/// Identity enclosures and accelerated sums from a single enumeration.
pub fn block_checks_and_sums(
    w: &Block,
    ks: RangeInclusive<u32>,
    depth: u32,
    prec: u32,
) -> Result<(Vec<ApproxValue>, Vec<ApproxValue>), EvalError> {
    let pass = block_pass(w, ks, depth, prec, true)?;
    Ok((pass.identity()?, pass.accelerated()?))
}

pub fn harmonic_sum_accelerated(w: &Block, k: u32, depth: u32, prec: u32) -> Result<ApproxValue, EvalError> {
    Ok(harmonic_sums_accelerated(w, k..=k, depth, prec)?.remove(0))
}

pub fn harmonic_sums_accelerated(
    w: &Block,
    ks: RangeInclusive<u32>,
    depth: u32,
    prec: u32,
) -> Result<Vec<ApproxValue>, EvalError> {
    block_pass(w, ks, depth, prec, true)?.accelerated()
}

// --- brute force ---------------------------------------------------------

fn family_automaton(family: &CountConstraint) -> DigitAutomaton {
    family.automaton()
}

fn is_empty_family(family: &CountConstraint, k: u32) -> bool {
    matches!(family, CountConstraint::DigitSum { .. }) && k == 0
}

/// `Σ_{1 <= n <= N} 1/n` over the constraint, with its rounding bound.
pub fn harmonic_partial_sums(
    family: &CountConstraint,
    ks: RangeInclusive<u32>,
    cutoff: u64,
    prec: u32,
) -> Result<Vec<(Float, f64)>, EvalError> {
    check_precision(prec)?;
    check_ks(&ks)?;
    if cutoff >= 1 << 60 {
        return Err(EvalError::InvalidInput(format!("limit {cutoff} too large")));
    }
    let aut = family_automaton(family);
    let sums = run_pass(&PassPlan { aut: &aut, log: None, harmonic: true, limit: cutoff, ks, prec });
    Ok(sums.harm)
}

pub fn harmonic_sum_bruteforce(c: &Constraint, cutoff: u64, prec: u32) -> Result<Float, EvalError> {
    Ok(harmonic_partial_sums(&c.family, c.k..=c.k, cutoff, prec)?.remove(0).0)
}

/// Partial sums up to `cutoff` plus an enclosure of everything beyond it.
pub fn harmonic_sums_brute_with_tail(
    family: &CountConstraint,
    ks: RangeInclusive<u32>,
    cutoff: u64,
    prec: u32,
) -> Result<Vec<ApproxValue>, EvalError> {
    let partial = harmonic_partial_sums(family, ks.clone(), cutoff, prec)?;
    let aut = family_automaton(family);
    let tails = tail_enclosures(&aut, ks.clone(), cutoff as u128, 1, default_prefix_len(aut.base()));
    let u = unit(prec);
    Ok(ks
        .zip(partial)
        .zip(tails)
        .map(|((k, (sum, err)), tail)| {
            if is_empty_family(family, k) {
                return ApproxValue::empty(prec);
            }
            let est = Float::with_val(prec, &sum + tail.mid());
            let rounding = add_up(err, u * abs_up(&est));
            ApproxValue { radius: add_up(rounding, tail.radius()), rounding, estimate: est, empty_set: false }
        })
        .collect())
}

// --- digit sum -----------------------------------------------------------

/// Enclosure of `Σ_{n >= 0, s_B(n) = k} ln((n+1)/(B⌊n/B⌋+B))` (target `-ln B`).
///
/// For `k = 0` the set is `{0}` and the single term is `ln(1/B)`.
pub fn digitsum_identity_check(base: u32, k: u32, depth: u32, prec: u32) -> Result<ApproxValue, EvalError> {
    Ok(digitsum_identity_checks(base, k..=k, depth, prec)?.remove(0))
}

pub fn digitsum_identity_checks(
    base: u32,
    ks: RangeInclusive<u32>,
    depth: u32,
    prec: u32,
) -> Result<Vec<ApproxValue>, EvalError> {
    crate::numeral::check_base(base)?;
    check_precision(prec)?;
    check_ks(&ks)?;
    let limit = limit_for_depth(base, depth, 8)?;
    let aut = DigitAutomaton::digit_sum(base);
    let sums = run_pass(&PassPlan {
        aut: &aut,
        log: Some(LogForm::DigitSum(base as u128)),
        harmonic: false,
        limit,
        ks: ks.clone(),
        prec,
    });
    let psi = tail_enclosures(&aut, ks.clone(), limit as u128, 1, default_prefix_len(base));
    let u = unit(prec);
    let ln_b = ln_base(base, prec);
    Ok(ks
        .zip(sums.log)
        .zip(psi)
        .map(|((k, (mut sum, mut err)), psi)| {
            if k == 0 {
                sum -= &ln_b;
                err = add_up(err, 2.0 * u * (abs_up(&ln_b) + abs_up(&sum)));
            }
            // each term lies in [-(B-1)/n, 0]
            let tail = Interval { lo: -mul_up(f64::from(base - 1), psi.hi), hi: 0.0 };
            let est = Float::with_val(prec, &sum + tail.mid());
            let rounding = add_up(err, u * abs_up(&est));
            ApproxValue { radius: add_up(rounding, tail.radius()), rounding, estimate: est, empty_set: false }
        })
        .collect())
}

// --- limit tables --------------------------------------------------------

/// `B^{|w|} ln B` for blocks, `2 ln B / (B - 1)` for digit sums.
pub fn limit_value(family: &CountConstraint, prec: u32) -> Float {
    match family {
        CountConstraint::Block(w) => {
            ln_base(w.base(), prec) * Integer::from(w.base()).pow(w.len() as u32)
        }
        CountConstraint::DigitSum { base } => ln_base(*base, prec) * 2u32 / (base - 1),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TableParams {
    pub method: Method,
    pub depth: u32,
    pub cutoff: u64,
    pub prec: u32,
}

pub fn limit_table(family: &CountConstraint, ks: RangeInclusive<u32>, params: TableParams) -> Result<Vec<LimitRow>, EvalError> {
    let prec = params.prec;
    let sums = match (family, params.method) {
        (CountConstraint::DigitSum { base: 2 }, method) => {
            let one = CountConstraint::Block(Block::new(2, vec![1])?);
            return limit_table(&one, ks, TableParams { method, ..params })
                .map(|rows| rows.into_iter().map(|r| LimitRow { limit: limit_value(family, prec), ..r }).collect());
        }
        (CountConstraint::Block(w), Method::Accelerated) => harmonic_sums_accelerated(w, ks.clone(), params.depth, prec)?,
        (CountConstraint::DigitSum { base }, Method::Accelerated) => {
            return Err(EvalError::Unsupported(format!(
                "no accelerated digit-sum sums for base {base}; use the brute method"
            )))
        }
        (_, Method::Brute) => harmonic_sums_brute_with_tail(family, ks.clone(), params.cutoff, prec)?,
    };
    let limit = limit_value(family, prec);
    Ok(ks
        .zip(sums)
        .map(|(k, sum)| {
            let slack = 4.0 * unit(prec) * abs_up(&limit);
            let certified_distance = add_up(add_up(sum.distance_to(&limit), sum.radius), slack);
            LimitRow { k, sum, limit: limit.clone(), certified_distance }
        })
        .collect())
}

// --- formatting ----------------------------------------------------------

/// Decimal digits carried by `prec` bits.
pub fn decimal_digits(prec: u32) -> usize {
    ((f64::from(prec) * std::f64::consts::LOG10_2).floor() as usize).max(1)
}

/// Positional decimal with trailing zeros trimmed, e.g. `1.875`.
pub fn format_float(x: &Float) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let digits = decimal_digits(x.prec());
    let (negative, mantissa, exp) = x.to_sign_string_exp_round(10, Some(digits), Round::Nearest);
    let exp = exp.unwrap_or(0);
    let mantissa = mantissa.trim_end_matches('0');
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    let len = mantissa.len() as i32;
    if !(-20..=60).contains(&exp) {
        out.push_str(&mantissa[..1]);
        if len > 1 {
            out.push('.');
            out.push_str(&mantissa[1..]);
        }
        out.push_str(&format!("e{}", exp - 1));
    } else if exp <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp) as usize));
        out.push_str(mantissa);
    } else if exp >= len {
        out.push_str(mantissa);
        out.extend(std::iter::repeat_n('0', (exp - len) as usize));
    } else {
        out.push_str(&mantissa[..exp as usize]);
        out.push('.');
        out.push_str(&mantissa[exp as usize..]);
    }
    out
}

/// Shortest `f64` representation in exponent form.
pub fn format_radius(r: f64) -> String {
    format!("{r:e}")
}

impl fmt::Display for ApproxValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} +/- {}", format_float(&self.estimate), format_radius(self.radius))?;
        if self.empty_set {
            write!(f, " (empty set)")?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
pub struct RowDoc {
    pub k: u32,
    pub estimate: String,
    pub radius: String,
    pub limit: String,
    pub certified_distance: String,
    pub empty_set: bool,
}

impl From<&LimitRow> for RowDoc {
    fn from(r: &LimitRow) -> Self {
        Self {
            k: r.k,
            estimate: format_float(&r.sum.estimate),
            radius: format_radius(r.sum.radius),
            limit: format_float(&r.limit),
            certified_distance: format_radius(r.certified_distance),
            empty_set: r.sum.empty_set,
        }
    }
}

pub fn rows_to_csv(rows: &[LimitRow]) -> String {
    let mut out = String::from("k,estimate,radius,limit,certified_distance\n");
    for r in rows {
        let d = RowDoc::from(r);
        out.push_str(&format!("{},{},{},{},{}\n", d.k, d.estimate, d.radius, d.limit, d.certified_distance));
    }
    out
}

pub fn rows_to_json(rows: &[LimitRow]) -> String {
    let docs: Vec<RowDoc> = rows.iter().map(RowDoc::from).collect();
    serde_json::to_string_pretty(&docs).expect("plain fields serialize")
}
