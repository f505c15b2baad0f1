//! Variable neighborhood descent over swap, insert and inverse moves.
//!
//! A pass samples `n` random neighbors under one move kind and keeps the best
//! one; the descent repeats a neighborhood while it strictly improves the
//! incumbent and otherwise advances to the next kind, stopping after the last.

use rand::Rng;

use crate::instance::Instance;
use crate::schedule::{self, NestVector};

/// The three neighborhood structures, in descent order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborhoodKind {
    Swap,
    Insert,
    Inverse,
}

impl NeighborhoodKind {
    /// Fixed descent order.
    pub const ORDER: [NeighborhoodKind; 3] = [
        NeighborhoodKind::Swap,
        NeighborhoodKind::Insert,
        NeighborhoodKind::Inverse,
    ];
}

/// Exchanges the jobs at 1-based positions `i` and `j`.
pub fn swap_move(x: &NestVector, i: usize, j: usize) -> NestVector {
    assert!(i != j, "swap positions must differ");
    let mut out = x.jobs().to_vec();
    out.swap(i - 1, j - 1);
    NestVector::from_vec_unchecked(out)
}

/// Removes the job at position `i` and reinserts it immediately before the
/// job that sat at position `j`.
pub fn insert_move(x: &NestVector, i: usize, j: usize) -> NestVector {
    assert!(i != j, "insert positions must differ");
    let mut out = x.jobs().to_vec();
    let job = out.remove(i - 1);
    let target = out
        .iter()
        .position(|&v| v == x.jobs()[j - 1])
        .expect("target job still present");
    out.insert(target, job);
    NestVector::from_vec_unchecked(out)
}

/// Reverses the segment between positions `i` and `j` inclusive (`i < j`).
pub fn inverse_move(x: &NestVector, i: usize, j: usize) -> NestVector {
    assert!(i < j, "inverse expects i < j");
    let mut out = x.jobs().to_vec();
    out[i - 1..j].reverse();
    NestVector::from_vec_unchecked(out)
}

/// Samples a distinct position pair for a move, ordering it for inverse.
fn sample_positions<R: Rng + ?Sized>(
    kind: NeighborhoodKind,
    n: usize,
    rng: &mut R,
) -> (usize, usize) {
    loop {
        let i = rng.gen_range(1..=n);
        let j = rng.gen_range(1..=n);
        if i == j {
            continue;
        }
        return match kind {
            NeighborhoodKind::Inverse => (i.min(j), i.max(j)),
            _ => (i, j),
        };
    }
}

pub(crate) fn random_move<R: Rng + ?Sized>(
    kind: NeighborhoodKind,
    x: &NestVector,
    rng: &mut R,
) -> NestVector {
    if x.len() < 2 {
        return x.clone();
    }
    let (i, j) = sample_positions(kind, x.len(), rng);
    match kind {
        NeighborhoodKind::Swap => swap_move(x, i, j),
        NeighborhoodKind::Insert => insert_move(x, i, j),
        NeighborhoodKind::Inverse => inverse_move(x, i, j),
    }
}

/// Samples `n` random neighbors of `x` under `kind` and returns the cheapest
/// (first generated wins ties). The neighbor is returned even when it does
/// not improve on `x`; the improvement test belongs to the descent loop.
pub fn neighborhood_pass<R: Rng + ?Sized>(
    instance: &Instance,
    x: &NestVector,
    kind: NeighborhoodKind,
    rng: &mut R,
) -> NestVector {
    let mut eval = |nest: &NestVector| schedule::evaluate(instance, nest);
    neighborhood_pass_with(&mut eval, x, kind, rng).0
}

pub(crate) fn neighborhood_pass_with<E, R>(
    eval: &mut E,
    x: &NestVector,
    kind: NeighborhoodKind,
    rng: &mut R,
) -> (NestVector, i64)
where
    E: FnMut(&NestVector) -> i64,
    R: Rng + ?Sized,
{
    let n = x.len();
    if n < 2 {
        return (x.clone(), eval(x));
    }
    let mut best: Option<(NestVector, i64)> = None;
    for _ in 0..n {
        let neighbor = random_move(kind, x, rng);
        let value = eval(&neighbor);
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((neighbor, value));
        }
    }
    best.expect("n >= 2 samples")
}

/// Variable neighborhood descent: never returns a solution worse than `x`.
pub fn vnd<R: Rng + ?Sized>(instance: &Instance, x: &NestVector, rng: &mut R) -> NestVector {
    let mut eval = |nest: &NestVector| schedule::evaluate(instance, nest);
    let value = eval(x);
    vnd_with(&mut eval, x, value, rng).0
}

pub(crate) fn vnd_with<E, R>(
    eval: &mut E,
    x: &NestVector,
    x_value: i64,
    rng: &mut R,
) -> (NestVector, i64)
where
    E: FnMut(&NestVector) -> i64,
    R: Rng + ?Sized,
{
    let mut current = x.clone();
    let mut current_value = x_value;
    let mut kappa = 0;
    while kappa < NeighborhoodKind::ORDER.len() {
        let kind = NeighborhoodKind::ORDER[kappa];
        let (candidate, value) = neighborhood_pass_with(eval, &current, kind, rng);
        if value < current_value {
            current = candidate;
            current_value = value;
            // strict improvement keeps searching the same neighborhood
        } else {
            kappa += 1;
        }
    }
    (current, current_value)
}
