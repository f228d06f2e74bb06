//! Window enumeration per strategy.

use itertools::Itertools;
use rand::seq::SliceRandom;

use super::{schedule_rng, Strategy};
use crate::error::{Error, Result};

/// Enumerate the scoring windows for one query. Deterministic given the seed;
/// the same windows are used by every judge.
///
/// - `single`: one size-1 window per response, natural order.
/// - `double`: every ordered pair of distinct responses, `J(J-1)` windows.
/// - `flipped-triple`: responses shuffled into a circular order; for each
///   position the window `[prev, here, next]` plus its reversal, `2J` windows.
///   Every response lands in exactly 3 windows in both orders, so it collects
///   six scores per judge.
/// - `quadruple-half`: every ordered 4-tuple of distinct responses over the
///   shuffled order, keeping the lexicographically smaller of each
///   {tuple, reversed tuple} pair. For `J = 4` that is `4!/2 = 12` windows.
pub fn build_schedule(
    num_responses: usize,
    strategy: Strategy,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if num_responses < strategy.min_responses() {
        return Err(Error::Config(format!(
            "strategy {} needs at least {} responses, got {num_responses}",
            strategy.name(),
            strategy.min_responses()
        )));
    }
    let mut order: Vec<usize> = (0..num_responses).collect();
    order.shuffle(&mut schedule_rng(seed));

    let windows = match strategy {
        Strategy::Single => (0..num_responses).map(|j| vec![j]).collect(),
        Strategy::Double => order
            .iter()
            .cartesian_product(order.iter())
            .filter(|(a, b)| a != b)
            .map(|(&a, &b)| vec![a, b])
            .collect(),
        Strategy::FlippedTriple => {
            let j_n = num_responses;
            let mut out = Vec::with_capacity(2 * j_n);
            for p in 0..j_n {
                let w = vec![order[(p + j_n - 1) % j_n], order[p], order[(p + 1) % j_n]];
                let mut rev = w.clone();
                rev.reverse();
                out.push(w);
                out.push(rev);
            }
            out
        }
        Strategy::QuadrupleHalf => order
            .iter()
            .copied()
            .permutations(4)
            .filter(|w| {
                let rev: Vec<usize> = w.iter().rev().copied().collect();
                *w < rev
            })
            .collect(),
    };
    Ok(windows)
}
