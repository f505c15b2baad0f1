//! Discrete search operators: the subtraction/multiplication/addition chain
//! behind the Levy flight, order crossover and greedy acceptance.
//!
//! Positions are 1-based throughout so that job ids can be used directly as
//! positions in the addition step.

use rand::Rng;
use thiserror::Error;

use crate::schedule::NestVector;

/// Difference chain between two permutations. Entry `i` is zero where the
/// operands agree and carries the minuend's job id where they differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffChain(Vec<usize>);

impl DiffChain {
    pub fn from_entries(entries: Vec<usize>) -> Self {
        DiffChain(entries)
    }

    #[inline]
    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_all_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }
}

/// Parameters of the flight-intensity schedule. The exponent grows linearly
/// from `lambda_min` at the start of a run to `lambda_max` at iteration
/// `t_max`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LevyParams {
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    /// Step scale; 1 in the discrete setting, where it has no effect.
    #[serde(default = "default_alpha0")]
    pub alpha0: f64,
    #[serde(default = "default_t_max")]
    pub t_max: u32,
}

fn default_lambda_min() -> f64 {
    1.1
}
fn default_lambda_max() -> f64 {
    3.0
}
fn default_alpha0() -> f64 {
    1.0
}
fn default_t_max() -> u32 {
    200
}

impl Default for LevyParams {
    fn default() -> Self {
        LevyParams {
            lambda_min: default_lambda_min(),
            lambda_max: default_lambda_max(),
            alpha0: default_alpha0(),
            t_max: default_t_max(),
        }
    }
}

/// Flight exponent at iteration `t`:
/// `lambda_min + (lambda_max - lambda_min) * t / t_max`.
pub fn lambda_at(t: u32, params: &LevyParams) -> f64 {
    params.lambda_min + (params.lambda_max - params.lambda_min) * t as f64 / params.t_max as f64
}

/// Survival threshold of the multiplication step at iteration `t`.
#[inline]
pub(crate) fn sigma_at(t: u32, params: &LevyParams) -> f64 {
    (t as f64).powf(-lambda_at(t, params))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OperatorError {
    #[error("operand lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// Element-wise difference: zero where the operands agree, the minuend's
/// entry where they differ.
pub fn subtract(x1: &NestVector, x2: &NestVector) -> Result<DiffChain, OperatorError> {
    if x1.len() != x2.len() {
        return Err(OperatorError::LengthMismatch {
            left: x1.len(),
            right: x2.len(),
        });
    }
    Ok(DiffChain(
        x1.jobs()
            .iter()
            .zip(x2.jobs())
            .map(|(&a, &b)| if a == b { 0 } else { a })
            .collect(),
    ))
}

/// Thins a difference chain: each entry survives when an independent uniform
/// draw is at least `sigma`, otherwise it is zeroed. `sigma = 0` keeps the
/// chain, `sigma = 1` clears it.
pub fn multiply<R: Rng + ?Sized>(sigma: f64, chain: &DiffChain, rng: &mut R) -> DiffChain {
    DiffChain(
        chain
            .0
            .iter()
            .map(|&e| {
                // one draw per element, including agreement positions
                let u: f64 = rng.gen();
                if e != 0 && u >= sigma {
                    e
                } else {
                    0
                }
            })
            .collect(),
    )
}

/// Applies a chain to a permutation as a series of swaps. Entries are
/// processed in ascending index order; a nonzero entry `c` at index `i` swaps
/// the jobs at positions `c` and `x_new[i]` of the evolving result (both
/// operands are read from the current state, and both are valid 1-based
/// positions because job ids range over `1..=n`).
pub fn add(x: &NestVector, chain: &DiffChain) -> NestVector {
    assert_eq!(
        x.len(),
        chain.len(),
        "chain length must match the permutation"
    );
    let mut out: Vec<usize> = x.jobs().to_vec();
    for i in 0..out.len() {
        let c = chain.0[i];
        if c > 0 {
            let p = c - 1;
            let q = out[i] - 1;
            out.swap(p, q);
        }
    }
    NestVector::from_vec_unchecked(out)
}

/// One discrete Levy flight step. A fair coin picks the reference (the best
/// solution or a random peer), the difference from the reference is thinned
/// with intensity `sigma = t^-lambda`, and the surviving entries drive swap
/// moves on a copy of `x`.
pub fn levy_flight<R: Rng + ?Sized>(
    x: &NestVector,
    x_best: &NestVector,
    x_rand: &NestVector,
    t: u32,
    params: &LevyParams,
    rng: &mut R,
) -> NestVector {
    debug_assert!(t >= 1, "iterations are 1-based");
    let psi: f64 = rng.gen();
    let reference = if psi > 0.5 { x_best } else { x_rand };
    let chain = subtract(x, reference).expect("population members share one length");
    let thinned = multiply(sigma_at(t, params), &chain, rng);
    // alpha0 = 1 scales the chain trivially; no discrete effect.
    add(x, &thinned)
}

/// Order crossover: a random window of the first parent is kept in place and
/// the remaining positions are filled left to right with the other parent's
/// jobs in their original order. Both parent roles are played, so two
/// children are returned.
pub fn order_crossover<R: Rng + ?Sized>(
    x1: &NestVector,
    x2: &NestVector,
    rng: &mut R,
) -> (NestVector, NestVector) {
    assert_eq!(x1.len(), x2.len(), "parents must share one length");
    let n = x1.len();
    let (p, q) = loop {
        let a = rng.gen_range(1..=n);
        let b = rng.gen_range(1..=n);
        if a <= b {
            break (a, b);
        }
    };
    (ox_child(x1, x2, p, q), ox_child(x2, x1, p, q))
}

/// Builds one order-crossover child for the 1-based window `[p, q]`.
pub(crate) fn ox_child(keeper: &NestVector, donor: &NestVector, p: usize, q: usize) -> NestVector {
    let n = keeper.len();
    let (p0, q0) = (p - 1, q - 1);
    let mut child = vec![0usize; n];
    let mut used = vec![false; n + 1];
    for i in p0..=q0 {
        child[i] = keeper.jobs()[i];
        used[child[i]] = true;
    }
    let mut fill = donor.jobs().iter().filter(|&&j| !used[j]);
    for i in (0..p0).chain(q0 + 1..n) {
        child[i] = *fill.next().expect("donor covers the remaining jobs");
    }
    NestVector::from_vec_unchecked(child)
}

/// Greedy acceptance: a candidate replaces the incumbent only when strictly
/// better.
#[inline]
pub fn accept(candidate_value: i64, incumbent_value: i64) -> bool {
    candidate_value < incumbent_value
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nest(v: Vec<usize>) -> NestVector {
        NestVector::new(v).unwrap()
    }

    #[test]
    fn lambda_schedule_endpoints() {
        let params = LevyParams::default();
        assert_eq!(lambda_at(params.t_max, &params), 3.0);
        assert_eq!(lambda_at(0, &params), 1.1);
        let params = LevyParams {
            t_max: 200,
            ..LevyParams::default()
        };
        assert!((lambda_at(100, &params) - 2.05).abs() < 1e-12);
    }

    #[test]
    fn subtract_examples() {
        let x = nest(vec![2, 6, 4, 1, 5, 3]);
        assert!(subtract(&x, &x).unwrap().is_all_zero());
        let y = nest(vec![2, 6, 1, 4, 5, 3]);
        assert_eq!(subtract(&x, &y).unwrap().entries(), &[0, 0, 4, 1, 0, 0]);
        let a = nest(vec![1, 2, 3]);
        let b = nest(vec![3, 2, 1]);
        assert_eq!(subtract(&a, &b).unwrap().entries(), &[1, 0, 3]);
        assert!(matches!(
            subtract(&a, &x),
            Err(OperatorError::LengthMismatch { left: 3, right: 6 })
        ));
    }

    #[test]
    fn multiply_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chain = DiffChain::from_entries((1..=64).collect());
        assert_eq!(multiply(0.0, &chain, &mut rng), chain);
        assert!(multiply(1.0, &chain, &mut rng).is_all_zero());
    }

    #[test]
    fn multiply_survival_rate_is_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let chain = DiffChain::from_entries((0..n).map(|i| i % 9 + 1).collect());
        let kept = multiply(0.5, &chain, &mut rng)
            .entries()
            .iter()
            .filter(|&&e| e != 0)
            .count();
        // 3 sigma around n/2 for a fair coin: sqrt(10^4 * 0.25) = 50.
        assert!((4850..=5150).contains(&kept), "kept = {kept}");
    }

    #[test]
    fn add_examples() {
        let x = nest(vec![2, 1]);
        assert_eq!(add(&x, &DiffChain::from_entries(vec![0, 0])), x);
        // chain[1] = 1: swap positions 1 and x_new[1] = 2.
        assert_eq!(
            add(&x, &DiffChain::from_entries(vec![1, 0])).jobs(),
            &[1, 2]
        );
    }

    #[test]
    fn levy_flight_fixed_point_and_start() {
        let params = LevyParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = nest(vec![3, 1, 4, 2, 5]);
        // Identical inputs leave nothing to swap.
        let out = levy_flight(&x, &x, &x, 50, &params, &mut rng);
        assert_eq!(out, x);
        // At t = 1 the survival threshold is 1, so the chain is cleared.
        let best = nest(vec![5, 4, 3, 2, 1]);
        let rand_ref = nest(vec![1, 2, 3, 4, 5]);
        for _ in 0..50 {
            assert_eq!(levy_flight(&x, &best, &rand_ref, 1, &params, &mut rng), x);
        }
    }

    #[test]
    fn crossover_window_semantics() {
        let x1 = nest(vec![1, 2, 3, 4]);
        let x2 = nest(vec![4, 3, 2, 1]);
        assert_eq!(ox_child(&x1, &x2, 2, 3).jobs(), &[4, 2, 3, 1]);
        assert_eq!(ox_child(&x2, &x1, 2, 3).jobs(), &[1, 3, 2, 4]);
        // Whole-sequence window reproduces the first parent.
        assert_eq!(ox_child(&x1, &x2, 1, 4), x1);
        assert_eq!(ox_child(&x2, &x1, 1, 4), x2);
    }

    #[test]
    fn acceptance_is_strict() {
        assert!(accept(64, 65));
        assert!(!accept(65, 65));
        assert!(!accept(66, 65));
    }

    #[test]
    fn operators_are_deterministic_under_a_seed() {
        let x = nest(vec![4, 2, 7, 1, 5, 3, 6]);
        let y = nest(vec![1, 2, 3, 4, 5, 6, 7]);
        let params = LevyParams::default();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let l = levy_flight(&x, &y, &y, 17, &params, &mut rng);
            let (a, b) = order_crossover(&x, &y, &mut rng);
            (l, a, b)
        };
        assert_eq!(run(), run());
    }
}
