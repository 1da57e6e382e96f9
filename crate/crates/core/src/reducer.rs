//! Symbolic derivation of `b_w(n)`.
//!
//! Starting from the root sum `Σ_{a_w(B^{|w|-1} n + h) = k} L(B^{|w|} n + v(w))`,
//! each node is rewritten one condition digit at a time until every condition
//! reads `a_w(n) = k`. The leaves, merged by `(s, t)`, form a [`TermSet`] whose
//! signed terms `mult · L(B^s n + t)` add up to `log_B b_w(n)`.
//!
//! Blocks starting with `0` need one extra piece of bookkeeping: the root sum
//! runs over `n >= 1`, and that single excluded point follows the chain of
//! "shortened" children down to one leaf. It is carried as an [`ExcludedPoint`];
//! every other leaf sums over all `n >= 0` with the convention `L(0) = 0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeral::{Block, NumeralError};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("node is already a leaf (condition exponent 0)")]
    LeafNode,
    #[error("invalid term set document: {0}")]
    Json(String),
    #[error(transparent)]
    Numeral(#[from] NumeralError),
}

/// `mult · L(B^s n + t)` with `0 <= t < B^s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LTerm {
    pub mult: i64,
    pub scale_exp: u32,
    pub offset: Integer,
}

/// An [`LTerm`] summed over `n` with `a_w(B^r n + p) = k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstrainedTerm {
    pub term: LTerm,
    pub cond_exp: u32,
    pub cond_offset: Integer,
    /// The one value of `n` left out of this node's summation, if any.
    pub excluded: Option<Integer>,
}

impl ConstrainedTerm {
    pub fn is_leaf(&self) -> bool {
        self.cond_exp == 0
    }

    /// First summation index when the exclusion is the initial point `n = 0`.
    pub fn summation_start(&self) -> u32 {
        match &self.excluded {
            Some(e) if *e == 0 => 1,
            _ => 0,
        }
    }

    fn prefix_invariant_holds(&self, base: u32) -> bool {
        let shift = self.term.scale_exp - self.cond_exp;
        let expected = &self.term.offset / Integer::from(base).pow(shift);
        self.cond_exp <= self.term.scale_exp
            && self.term.offset < Integer::from(base).pow(self.term.scale_exp)
            && expected == self.cond_offset
    }
}

/// The term of a leaf omitted at exactly one `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExcludedPoint {
    pub n: Integer,
    pub mult: i64,
    pub scale_exp: u32,
    pub offset: Integer,
}

impl ExcludedPoint {
    pub fn argument(&self, base: u32) -> Integer {
        Integer::from(base).pow(self.scale_exp) * &self.n + &self.offset
    }
}

/// Merged leaves of the reduction tree: `log_B b_w(n) = Σ mult · L(B^s n + t)`.
///
/// Summing `log_B b_w(n)` over `n >= 0` with `a_w(n) = k`, minus the
/// [`ExcludedPoint`] term when `a_w(excluded.n) = k`, gives `-1` for every `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermSet {
    block: Block,
    terms: Vec<LTerm>,
    excluded: Option<ExcludedPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TreeStats {
    pub nodes: usize,
    pub leaves: usize,
    pub depth: u32,
}

pub fn ln_base(base: u32, prec: u32) -> Float {
    Float::with_val(prec, base).ln()
}

/// `L(n) = log_B(n / (n + 1))`, `L(0) = 0`.
pub fn eval_l(n: &Integer, base: u32, prec: u32) -> Float {
    if *n == 0 {
        return Float::with_val(prec, 0);
    }
    let work = prec + 32;
    let x = Float::with_val(work, n);
    let ln = -(x.recip().ln_1p());
    Float::with_val(prec, ln / ln_base(base, work))
}

/// `L(n) - Σ_{j<B} L(Bn + j)`: 0 for `n >= 1`, 1 at `n = 0`.
pub fn telescoping_residual(n: &Integer, base: u32, prec: u32) -> Float {
    let work = prec + 32;
    let mut acc = eval_l(n, base, work);
    for j in 0..base {
        acc -= eval_l(&(Integer::from(n * base) + j), base, work);
    }
    Float::with_val(prec, acc)
}

pub fn root_term(w: &Block) -> ConstrainedTerm {
    let base = w.base();
    let len = w.len() as u32;
    let v = w.value();
    let h = Integer::from(&v / base);
    ConstrainedTerm {
        term: LTerm { mult: 1, scale_exp: len, offset: v },
        cond_exp: len - 1,
        cond_offset: h,
        excluded: w.has_leading_zero().then(Integer::new),
    }
}

fn leading_digits(t: &Integer, width: u32, count: u32, base: u32) -> Vec<u32> {
    let mut digits = vec![0u32; width as usize];
    let mut rest = t.clone();
    for slot in digits.iter_mut().rev() {
        *slot = rest.mod_u(base);
        rest /= base;
    }
    digits.truncate(count as usize);
    digits
}

/// One rewriting step on the leftmost condition digit.
pub fn reduce_step(node: &ConstrainedTerm, w: &Block) -> Result<Vec<ConstrainedTerm>, ReduceError> {
    if node.is_leaf() {
        return Err(ReduceError::LeafNode);
    }
    let base = w.base();
    let b = Integer::from(base);
    let s = node.term.scale_exp;
    let r = node.cond_exp;
    let t = &node.term.offset;
    let prefix = leading_digits(t, s, r, base);

    if !w.has_suffix(&prefix) {
        let shift = Integer::from((&b).pow(s - r + 1));
        return Ok(vec![ConstrainedTerm {
            term: node.term.clone(),
            cond_exp: r - 1,
            cond_offset: Integer::from(t / &shift),
            excluded: node.excluded.clone(),
        }]);
    }

    let first = prefix[0];
    let tail_mod = Integer::from((&b).pow(s - 1));
    let t_rest = Integer::from(t % &tail_mod);
    let mut children = Vec::with_capacity(base as usize);
    children.push(ConstrainedTerm {
        term: LTerm {
            mult: node.term.mult,
            scale_exp: s - 1,
            offset: t_rest.clone(),
        },
        cond_exp: r - 1,
        cond_offset: &t_rest / Integer::from((&b).pow(s - r)),
        excluded: node.excluded.as_ref().map(|e| Integer::from(e * base) + first),
    });
    let shift = Integer::from((&b).pow(s - r + 1));
    for j in (0..base).filter(|&j| j != first) {
        let t_j = Integer::from(&tail_mod * j) + &t_rest;
        children.push(ConstrainedTerm {
            cond_offset: Integer::from(&t_j / &shift),
            term: LTerm {
                mult: -node.term.mult,
                scale_exp: s,
                offset: t_j,
            },
            cond_exp: r - 1,
            excluded: None,
        });
    }
    Ok(children)
}

pub fn derive_bw(w: &Block) -> TermSet {
    derive_bw_with_stats(w).0
}

pub fn derive_bw_with_stats(w: &Block) -> (TermSet, TreeStats) {
    let base = w.base();
    let mut stats = TreeStats::default();
    let mut merged: BTreeMap<(u32, Integer), i64> = BTreeMap::new();
    let mut excluded = None;
    let mut stack = vec![(root_term(w), 0u32)];
    while let Some((node, depth)) = stack.pop() {
        stats.nodes += 1;
        stats.depth = stats.depth.max(depth);
        debug_assert!(node.prefix_invariant_holds(base));
        if node.is_leaf() {
            stats.leaves += 1;
            if let Some(n) = &node.excluded {
                debug_assert!(excluded.is_none(), "only one leaf carries the exclusion");
                let point = ExcludedPoint {
                    n: n.clone(),
                    mult: node.term.mult,
                    scale_exp: node.term.scale_exp,
                    offset: node.term.offset.clone(),
                };
                // L(0) = 0 makes the exclusion vacuous (w = 0^j)
                if point.argument(base) != 0 {
                    excluded = Some(point);
                }
            }
            *merged
                .entry((node.term.scale_exp, node.term.offset.clone()))
                .or_insert(0) += node.term.mult;
            continue;
        }
        let children = reduce_step(&node, w).expect("non-leaf node");
        // reversed so the traversal visits children in generation order
        stack.extend(children.into_iter().rev().map(|c| (c, depth + 1)));
    }
    let terms = merged
        .into_iter()
        .filter(|(_, m)| *m != 0)
        .map(|((scale_exp, offset), mult)| LTerm { mult, scale_exp, offset })
        .collect();
    (TermSet { block: w.clone(), terms, excluded }, stats)
}

impl TermSet {
    pub fn block(&self) -> &Block {
        &self.block
    }

    pub fn base(&self) -> u32 {
        self.block.base()
    }

    pub fn terms(&self) -> &[LTerm] {
        &self.terms
    }

    pub fn excluded(&self) -> Option<&ExcludedPoint> {
        self.excluded.as_ref()
    }

    /// Always 0: every leaf sums from `n = 0` (see [`ExcludedPoint`]).
    pub fn summation_start(&self) -> u32 {
        0
    }

    /// `Σ mult · B^{-s}`; equals `B^{-|w|}`.
    pub fn first_order_coefficient(&self) -> Rational {
        let b = Integer::from(self.base());
        self.terms.iter().fold(Rational::new(), |acc, term| {
            acc + Rational::from((Integer::from(term.mult), Integer::from((&b).pow(term.scale_exp))))
        })
    }

    /// `b_w(n)` as an exact rational; factors with argument 0 are dropped (`L(0) = 0`).
    pub fn bw_rational(&self, n: &Integer) -> Rational {
        let b = Integer::from(self.base());
        let mut num = Integer::from(1);
        let mut den = Integer::from(1);
        for term in &self.terms {
            let x = Integer::from((&b).pow(term.scale_exp)) * n + &term.offset;
            if x == 0 {
                continue;
            }
            let x1 = Integer::from(&x + 1);
            let m = term.mult.unsigned_abs() as u32;
            if term.mult > 0 {
                num *= x.pow(m);
                den *= x1.pow(m);
            } else {
                num *= x1.pow(m);
                den *= x.pow(m);
            }
        }
        Rational::from((num, den))
    }

    fn work_prec(&self, prec: u32, n: &Integer) -> u32 {
        let mult_bits: u32 = self
            .terms
            .iter()
            .map(|t| t.mult.unsigned_abs())
            .sum::<u64>()
            .max(1)
            .ilog2()
            + 1;
        prec + 32 + mult_bits + n.significant_bits() / 8
    }

    /// `ln b_w(n)` summed term by term at precision `prec`.
    pub fn ln_bw(&self, n: &Integer, prec: u32) -> Float {
        let b = Integer::from(self.base());
        let mut acc = Float::with_val(prec, 0);
        for term in &self.terms {
            let x = Integer::from((&b).pow(term.scale_exp)) * n + &term.offset;
            if x == 0 {
                continue;
            }
            let l = -Float::with_val(prec, &x).recip().ln_1p();
            acc += l * term.mult;
        }
        acc
    }

    /// `log_B b_w(n) = Σ mult · L(B^s n + t)`.
    pub fn eval_log_bw(&self, n: &Integer, prec: u32) -> Float {
        let work = self.work_prec(prec, n);
        let ln = self.ln_bw(n, work);
        Float::with_val(prec, ln / ln_base(self.base(), work))
    }

    /// `ρ(n) = -B^{|w|} ln b_w(n) - 1/n`, defined for `n >= 1`.
    pub fn rho(&self, n: &Integer, prec: u32) -> Float {
        assert!(*n >= 1, "rho is defined for n >= 1");
        let max_s = self.terms.iter().map(|t| t.scale_exp).max().unwrap_or(1);
        let arg_bits = n.significant_bits() + max_s * (32 - self.base().leading_zeros());
        // -B^{|w|} ln b_w(n) agrees with 1/n to about 2 log2(n) bits
        let work = self.work_prec(prec, n) + 2 * arg_bits;
        let scale = Integer::from(self.base()).pow(self.block.len() as u32);
        let lead = -self.ln_bw(n, work) * scale;
        let inv = Float::with_val(work, n).recip();
        Float::with_val(prec, lead - inv)
    }

    /// `C_w` with `|ρ(n)| <= C_w / n^2` for every `n >= 1`.
    ///
    /// Per term, `0 <= 1/(An) - ln(1 + 1/(An+t)) <= (2t+1) / (2 A^2 n^2)`, and
    /// `ρ(n) = -B^{|w|} Σ mult · (1/(An) - ln(1 + 1/(An+t)))`, so the positive and
    /// negative multiplicities bound the two sides separately.
    pub fn rho_constant(&self) -> Rational {
        let (lower, upper) = self.rho_bounds();
        if lower > upper {
            lower
        } else {
            upper
        }
    }

    /// `(C_-, C_+)` with `-C_-/n^2 <= ρ(n) <= C_+/n^2`.
    pub fn rho_bounds(&self) -> (Rational, Rational) {
        let b = Integer::from(self.base());
        let scale = Integer::from((&b).pow(self.block.len() as u32));
        let mut neg_side = Rational::new();
        let mut pos_side = Rational::new();
        for term in &self.terms {
            let a = Integer::from((&b).pow(term.scale_exp));
            let per_term = Rational::from((
                Integer::from(&term.offset * 2u32) + 1u32,
                Integer::from(a.square_ref()) * 2u32,
            ));
            let weighted = per_term * Integer::from(term.mult.unsigned_abs());
            if term.mult > 0 {
                neg_side += weighted;
            } else {
                pos_side += weighted;
            }
        }
        (neg_side * &scale, pos_side * scale)
    }

    /// Human-readable product, e.g. `((2n+1)/(2n+2))*((4n+2)/(4n+1))`.
    pub fn factored(&self) -> String {
        let b = Integer::from(self.base());
        let mut out = String::new();
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                out.push('*');
            }
            let a = Integer::from((&b).pow(term.scale_exp));
            let lo = affine(&a, &term.offset);
            let hi = affine(&a, &Integer::from(&term.offset + 1));
            if term.mult > 0 {
                write!(out, "(({lo})/({hi}))").unwrap();
            } else {
                write!(out, "(({hi})/({lo}))").unwrap();
            }
            if term.mult.unsigned_abs() > 1 {
                write!(out, "^{}", term.mult.unsigned_abs()).unwrap();
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TermSetDoc::from(self)).expect("plain strings serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ReduceError> {
        let doc: TermSetDoc =
            serde_json::from_str(text).map_err(|e| ReduceError::Json(e.to_string()))?;
        doc.try_into()
    }
}

fn affine(a: &Integer, t: &Integer) -> String {
    if *t == 0 {
        format!("{a}n")
    } else {
        format!("{a}n+{t}")
    }
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    mult: String,
    s: String,
    t: String,
}

#[derive(Serialize, Deserialize)]
struct ExcludedDoc {
    n: String,
    mult: String,
    s: String,
    t: String,
}

/// Wire form: every integer as a decimal string.
#[derive(Serialize, Deserialize)]
struct TermSetDoc {
    base: String,
    block: String,
    start: String,
    terms: Vec<TermDoc>,
    excluded: Option<ExcludedDoc>,
}

impl From<&TermSet> for TermSetDoc {
    fn from(ts: &TermSet) -> Self {
        Self {
            base: ts.base().to_string(),
            block: ts.block.to_string(),
            start: ts.summation_start().to_string(),
            terms: ts
                .terms
                .iter()
                .map(|t| TermDoc {
                    mult: t.mult.to_string(),
                    s: t.scale_exp.to_string(),
                    t: t.offset.to_string(),
                })
                .collect(),
            excluded: ts.excluded.as_ref().map(|e| ExcludedDoc {
                n: e.n.to_string(),
                mult: e.mult.to_string(),
                s: e.scale_exp.to_string(),
                t: e.offset.to_string(),
            }),
        }
    }
}

fn parse_field<T: std::str::FromStr>(value: &str, field: &str) -> Result<T, ReduceError> {
    value
        .parse()
        .map_err(|_| ReduceError::Json(format!("field {field}: cannot parse {value:?}")))
}

impl TryFrom<TermSetDoc> for TermSet {
    type Error = ReduceError;

    fn try_from(doc: TermSetDoc) -> Result<Self, Self::Error> {
        let base: u32 = parse_field(&doc.base, "base")?;
        let block = Block::parse(base, &doc.block)?;
        let terms = doc
            .terms
            .iter()
            .map(|t| {
                Ok(LTerm {
                    mult: parse_field(&t.mult, "mult")?,
                    scale_exp: parse_field(&t.s, "s")?,
                    offset: parse_field(&t.t, "t")?,
                })
            })
            .collect::<Result<Vec<_>, ReduceError>>()?;
        let excluded = doc
            .excluded
            .map(|e| {
                Ok::<_, ReduceError>(ExcludedPoint {
                    n: parse_field(&e.n, "n")?,
                    mult: parse_field(&e.mult, "mult")?,
                    scale_exp: parse_field(&e.s, "s")?,
                    offset: parse_field(&e.t, "t")?,
                })
            })
            .transpose()?;
        Ok(TermSet { block, terms, excluded })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(base: u32, s: &str) -> Block {
        Block::parse(base, s).unwrap()
    }

    fn term(mult: i64, s: u32, t: u32) -> LTerm {
        LTerm { mult, scale_exp: s, offset: Integer::from(t) }
    }

    fn all_blocks(base: u32, max_len: u32) -> Vec<Block> {
        let mut out = Vec::new();
        for len in 1..=max_len {
            for code in 0..base.pow(len) {
                let mut digits = Vec::new();
                let mut c = code;
                for _ in 0..len {
                    digits.push(c % base);
                    c /= base;
                }
                digits.reverse();
                out.push(Block::new(base, digits).unwrap());
            }
        }
        out
    }

    #[test]
    fn eval_l_examples() {
        assert_eq!(eval_l(&Integer::from(1), 2, 128), -1);
        assert_eq!(eval_l(&Integer::ZERO, 10, 128), 0);
        for base in [2u32, 3, 10] {
            let got = eval_l(&Integer::from(base - 1), base, 200);
            let want = Float::with_val(400, base - 1).ln() / Float::with_val(400, base).ln()
                - Float::with_val(400, 1);
            let diff = Float::with_val(400, &got - &want).abs();
            assert!(diff < Float::with_val(53, 1e-58), "base {base}: {got} vs {want}");
        }
    }

    #[test]
    fn telescoping() {
        for base in [2u32, 3, 10] {
            assert!((telescoping_residual(&Integer::ZERO, base, 128) - 1u32).abs() < 1e-30);
            for n in [1u32, 2, 77, 1000] {
                assert!(telescoping_residual(&Integer::from(n), base, 128).abs() < 1e-30);
            }
        }
    }

    #[test]
    fn root_term_examples() {
        let root = root_term(&b(2, "11"));
        assert_eq!(root.term, term(1, 2, 3));
        assert_eq!((root.cond_exp, root.cond_offset.to_u32().unwrap()), (1, 1));
        assert_eq!(root.summation_start(), 0);

        let root = root_term(&b(10, "9"));
        assert_eq!(root.term, term(1, 1, 9));
        assert!(root.is_leaf());
        assert_eq!(root.cond_offset, 0);

        let root = root_term(&b(2, "0"));
        assert_eq!(root.term, term(1, 1, 0));
        assert!(root.is_leaf());
        assert_eq!(root.summation_start(), 1);
    }

    #[test]
    fn reduce_step_suffix_case() {
        let w = b(2, "11");
        let kids = reduce_step(&root_term(&w), &w).unwrap();
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[0].term, term(1, 1, 1));
        assert_eq!(kids[1].term, term(-1, 2, 1));
        assert!(kids.iter().all(|k| k.is_leaf()));
    }

    #[test]
    fn reduce_step_non_suffix_case() {
        let w = b(2, "10");
        let root = root_term(&w);
        assert_eq!(root.term, term(1, 2, 2));
        let kids = reduce_step(&root, &w).unwrap();
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].term, term(1, 2, 2));
        assert!(kids[0].is_leaf());
    }

    #[test]
    fn reduce_step_rejects_leaf() {
        let w = b(10, "9");
        assert!(matches!(reduce_step(&root_term(&w), &w), Err(ReduceError::LeafNode)));
    }

    #[test]
    fn suffix_case_shape() {
        for base in [2u32, 3, 10] {
            for w in all_blocks(base, 3) {
                let mut stack = vec![root_term(&w)];
                while let Some(node) = stack.pop() {
                    if node.is_leaf() {
                        continue;
                    }
                    let kids = reduce_step(&node, &w).unwrap();
                    if kids.len() > 1 {
                        assert_eq!(kids.len(), base as usize);
                        let flipped = kids.iter().filter(|k| k.term.mult == -node.term.mult).count();
                        assert_eq!(flipped, base as usize - 1);
                    }
                    for k in &kids {
                        assert!(k.prefix_invariant_holds(base));
                    }
                    stack.extend(kids);
                }
            }
        }
    }

    #[test]
    fn derive_examples() {
        let ts = derive_bw(&b(2, "1"));
        assert_eq!(ts.terms(), &[term(1, 1, 1)]);
        assert_eq!(ts.factored(), "((2n+1)/(2n+2))");

        let ts = derive_bw(&b(2, "11"));
        assert_eq!(ts.terms(), &[term(1, 1, 1), term(-1, 2, 1)]);
        assert_eq!(ts.factored(), "((2n+1)/(2n+2))*((4n+2)/(4n+1))");
        assert_eq!(ts.first_order_coefficient(), Rational::from((1, 4)));

        assert_eq!(derive_bw(&b(10, "9")).factored(), "((10n+9)/(10n+10))");
    }

    #[test]
    fn single_digit_blocks_give_one_term() {
        for base in [2u32, 3, 10] {
            for c in 0..base {
                let ts = derive_bw(&Block::new(base, vec![c]).unwrap());
                assert_eq!(ts.terms(), &[term(1, 1, c)]);
            }
        }
    }

    #[test]
    fn first_order_and_tree_shape() {
        for base in [2u32, 3, 10] {
            for w in all_blocks(base, 3) {
                let (ts, stats) = derive_bw_with_stats(&w);
                let expected = Rational::from((1, Integer::from(base).pow(w.len() as u32)));
                assert_eq!(ts.first_order_coefficient(), expected, "w={w} base={base}");
                assert!(stats.depth < w.len() as u32);
                assert!(stats.leaves as u64 <= (base as u64).pow(w.len() as u32 - 1));
                assert!(ts.terms().iter().all(|t| t.mult != 0));
            }
        }
    }

    #[test]
    fn exclusion_sits_on_block_value() {
        for base in [2u32, 3] {
            for w in all_blocks(base, 4) {
                let ts = derive_bw(&w);
                match ts.excluded() {
                    Some(e) => {
                        assert!(w.has_leading_zero() && !w.is_all_zero());
                        assert_eq!(e.argument(base), w.value(), "w={w}");
                    }
                    None => assert!(!w.has_leading_zero() || w.is_all_zero()),
                }
            }
        }
        // "0101": the exclusion migrates to n = 1 on the leaf L(4n+1)
        let e = derive_bw(&b(2, "0101")).excluded().cloned().unwrap();
        assert_eq!((e.n.to_u32().unwrap(), e.scale_exp, e.offset.to_u32().unwrap()), (1, 2, 1));
    }

    #[test]
    fn log_bw_two_routes_agree() {
        for (base, s) in [(2, "11"), (2, "101"), (3, "012"), (10, "999"), (10, "909")] {
            let ts = derive_bw(&b(base, s));
            for n in [0u64, 1, 2, 17, 999, 123_456_789] {
                let n = Integer::from(n);
                let direct = ts.eval_log_bw(&n, 160);
                let rational = ts.bw_rational(&n);
                let via = Float::with_val(400, &rational).ln() / ln_base(base, 400);
                let diff = Float::with_val(400, &direct - &via).abs();
                let tol = Float::with_val(53, 2f64.powi(-150)) * (Float::with_val(53, &via).abs() + 1u32);
                assert!(diff <= tol, "w={s} n={n}: {direct} vs {via}");
            }
        }
        let ts = derive_bw(&b(2, "1"));
        assert_eq!(ts.eval_log_bw(&Integer::ZERO, 128), -1);
    }

    #[test]
    fn log_bw_first_order_behaviour() {
        for (base, s) in [(2, "11"), (3, "12"), (10, "9"), (10, "99")] {
            let ts = derive_bw(&b(base, s));
            let scale = f64::from(base).powi(s.len() as i32);
            for n in [1_000u64, 1_000_000] {
                let ln = ts.ln_bw(&Integer::from(n), 128).to_f64();
                let ratio = -(n as f64) * ln * scale;
                assert!((ratio - 1.0).abs() < 0.1, "w={s} n={n}: {ratio}");
            }
        }
    }

    #[test]
    fn rho_example_and_constant() {
        let ts = derive_bw(&b(2, "1"));
        let r1 = ts.rho(&Integer::from(1), 128).to_f64();
        let want = 2.0 * (4.0f64 / 3.0).ln() - 1.0;
        assert!((r1 - want).abs() < 1e-15 && (r1 + 0.42465).abs() < 5e-5);
        assert_eq!(ts.rho_constant(), Rational::from((3, 4)));
    }

    #[test]
    fn rho_sweep_respects_constant() {
        let blocks = [(2, "1"), (2, "0"), (2, "11"), (2, "000"), (2, "010"), (3, "12"), (3, "00"), (10, "9"), (10, "909")];
        for (base, s) in blocks {
            let ts = derive_bw(&b(base, s));
            let c = ts.rho_constant().to_f64();
            assert!(c > 0.0 && c.is_finite());
            let mut sup = 0.0f64;
            for n in 1..=10_000u64 {
                let r = ts.rho(&Integer::from(n), 64).to_f64();
                let scaled = r.abs() * (n * n) as f64;
                sup = sup.max(scaled);
                assert!(scaled <= c * (1.0 + 1e-12), "w={s} n={n}: {scaled} > {c}");
            }
            // decay: n|ρ(n)| at 2n is about half its value at n
            for n in [100u64, 1_000, 5_000] {
                let a = ts.rho(&Integer::from(n), 64).to_f64().abs() * n as f64;
                let b2 = ts.rho(&Integer::from(2 * n), 64).to_f64().abs() * (2 * n) as f64;
                assert!(b2 <= a * 0.5 * 1.05, "w={s} n={n}");
            }
            assert!(sup > 0.0);
        }
    }

    #[test]
    fn json_round_trip_and_shape() {
        let ts = derive_bw(&b(2, "11"));
        let json = ts.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let positions: Vec<_> = ["\"base\"", "\"block\"", "\"start\"", "\"terms\"", "\"excluded\""]
            .iter()
            .map(|k| json.find(k).unwrap())
            .collect();
        assert!(positions.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(v["terms"][1]["mult"], "-1");
        assert_eq!(TermSet::from_json(&json).unwrap(), ts);

        let with_exclusion = derive_bw(&b(2, "010"));
        assert_eq!(TermSet::from_json(&with_exclusion.to_json()).unwrap(), with_exclusion);
        assert!(TermSet::from_json("{\"base\": 2}").is_err());
    }
}
