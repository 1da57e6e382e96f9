//! Ellipsephic harmonic series: digit automata, the `b_w` reduction and
//! certified numerical sums.

pub mod numeral;
pub mod cli;
pub mod counting;
pub mod evaluator;
pub mod reducer;

pub use numeral::{Block, Expansion, NumeralError, OccurrenceAutomaton};
pub use counting::{block_count_table, digitsum_count_table, tail_bound, CountConstraint, CountTable};
pub use evaluator::{ApproxValue, Constraint, LimitRow, Method};
pub use reducer::{derive_bw, eval_l, root_term, telescoping_residual, ConstrainedTerm, ExcludedPoint, LTerm, TermSet};
