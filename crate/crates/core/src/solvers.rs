//! Population-based solvers: the hybrid discrete cuckoo search, its
//! no-local-search ablation, and a single-solution variable neighborhood
//! search baseline.
//!
//! One run is sequential and fully determined by its seed: member updates
//! read a pre-step snapshot of the population and are committed in member
//! order, so repeated runs with equal parameters produce identical results.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::Instance;
use crate::mbhg;
use crate::operators::{self, LevyParams};
use crate::schedule::{self, NestVector};
use crate::vnd;

/// Search parameters shared by the population solvers. The VNS baseline uses
/// only the iteration budget, stagnation limit and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdcsParams {
    /// Population size.
    #[serde(default = "default_population")]
    pub population: usize,
    /// Discovery probability; a member is rebuilt by crossover when a
    /// uniform draw exceeds it, and it also sets the elite count.
    #[serde(default = "default_discovery_prob")]
    pub discovery_prob: f64,
    #[serde(default = "default_t_max")]
    pub t_max: u32,
    /// Stop after this many consecutive iterations without improving the
    /// best value.
    #[serde(default = "default_t_nip")]
    pub t_nip: u32,
    #[serde(default)]
    pub levy: LevyParams,
    /// Fraction of the population replaced by fresh permutations each
    /// iteration.
    #[serde(default = "default_restart_fraction")]
    pub restart_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_population() -> usize {
    30
}
fn default_discovery_prob() -> f64 {
    0.8
}
fn default_t_max() -> u32 {
    200
}
fn default_t_nip() -> u32 {
    50
}
fn default_restart_fraction() -> f64 {
    0.10
}

impl Default for HdcsParams {
    fn default() -> Self {
        HdcsParams {
            population: default_population(),
            discovery_prob: default_discovery_prob(),
            t_max: default_t_max(),
            t_nip: default_t_nip(),
            levy: LevyParams::default(),
            restart_fraction: default_restart_fraction(),
            seed: 0,
        }
    }
}

impl HdcsParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Keeps the flight schedule horizon in step with the iteration budget.
    pub fn with_t_max(mut self, t_max: u32) -> Self {
        self.t_max = t_max;
        self.levy.t_max = t_max;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |msg: String| Err(ParamError(msg));
        if self.population < 4 {
            return err(format!("population {} < 4", self.population));
        }
        if !(self.discovery_prob > 0.0 && self.discovery_prob < 1.0) {
            return err(format!(
                "discovery_prob {} outside (0, 1)",
                self.discovery_prob
            ));
        }
        if self.t_max < 1 {
            return err("t_max must be >= 1".into());
        }
        if self.t_nip > self.t_max {
            return err(format!("t_nip {} exceeds t_max {}", self.t_nip, self.t_max));
        }
        if !(0.0..1.0).contains(&self.restart_fraction) {
            return err(format!(
                "restart_fraction {} outside [0, 1)",
                self.restart_fraction
            ));
        }
        if !(self.levy.lambda_min > 1.0
            && self.levy.lambda_min <= self.levy.lambda_max
            && self.levy.lambda_max <= 3.0)
        {
            return err(format!(
                "lambda range ({}, {}) must satisfy 1 < min <= max <= 3",
                self.levy.lambda_min, self.levy.lambda_max
            ));
        }
        if self.levy.t_max < 1 {
            return err("levy.t_max must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid solver parameters: {0}")]
pub struct ParamError(String);

/// A population member with its cached objective value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub nest: NestVector,
    pub value: i64,
}

/// Solver population plus the best solution seen so far in the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Population {
    pub members: Vec<Member>,
    pub best: Member,
}

impl Population {
    /// Folds the current member values into the best-so-far record.
    pub fn refresh_best(&mut self) {
        let candidate = self
            .members
            .iter()
            .enumerate()
            .min_by_key(|(i, m)| (m.value, *i))
            .map(|(_, m)| m.clone())
            .expect("population is never empty");
        if candidate.value < self.best.value {
            self.best = candidate;
        }
    }
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub best_nest: NestVector,
    pub best_value: i64,
    pub iterations_executed: u32,
    /// Best-so-far value at the end of each executed iteration;
    /// non-increasing by construction.
    pub best_value_history: Vec<i64>,
    pub elapsed: Duration,
    pub seed: u64,
}

/// Number of elite solutions refined by local search:
/// `max(3, round(population * (1 - rho_a)))`, rounding half away from zero.
pub fn elite_count(population: usize, rho_a: f64) -> usize {
    let raw = (population as f64 * (1.0 - rho_a)).round() as i64;
    raw.max(3) as usize
}

fn keep_count(population: usize, restart_fraction: f64) -> usize {
    // epsilon guards the ceil against representation noise in the product
    let keep = ((1.0 - restart_fraction) * population as f64 - 1e-9).ceil() as usize;
    keep.clamp(1, population)
}

/// Builds the initial population: one member seeded by the constructive
/// heuristic (re-decoded after encoding, so its cached value reflects the
/// permutation actually stored) and the rest uniform random permutations.
pub fn init_population<R: Rng + ?Sized>(
    instance: &Instance,
    params: &HdcsParams,
    rng: &mut R,
) -> Population {
    let mut eval = |nest: &NestVector| schedule::evaluate(instance, nest);
    init_population_with(&mut eval, instance, params.population, rng)
}

fn init_population_with<E, R>(
    eval: &mut E,
    instance: &Instance,
    population: usize,
    rng: &mut R,
) -> Population
where
    E: FnMut(&NestVector) -> i64,
    R: Rng + ?Sized,
{
    let seeded = mbhg::mbhg(instance);
    let nest = schedule::encode(&seeded.schedule);
    let value = eval(&nest);
    let mut members = vec![Member { nest, value }];
    while members.len() < population {
        let nest = NestVector::random(instance.n, rng);
        let value = eval(&nest);
        members.push(Member { nest, value });
    }
    let best = members
        .iter()
        .enumerate()
        .min_by_key(|(i, m)| (m.value, *i))
        .map(|(_, m)| m.clone())
        .expect("population >= 1");
    Population { members, best }
}

/// Replaces the worst fraction of the population with fresh random
/// permutations. Members are sorted ascending by value (stable, so equal
/// values keep their relative order) and the tail beyond
/// `ceil((1 - fraction) * population)` is regenerated and evaluated.
pub fn restart<R: Rng + ?Sized>(
    instance: &Instance,
    population: Population,
    restart_fraction: f64,
    rng: &mut R,
) -> Population {
    let mut eval = |nest: &NestVector| schedule::evaluate(instance, nest);
    restart_with(&mut eval, instance, population, restart_fraction, rng)
}

fn restart_with<E, R>(
    eval: &mut E,
    instance: &Instance,
    mut population: Population,
    restart_fraction: f64,
    rng: &mut R,
) -> Population
where
    E: FnMut(&NestVector) -> i64,
    R: Rng + ?Sized,
{
    let total = population.members.len();
    let keep = keep_count(total, restart_fraction);
    population.members.sort_by_key(|a| a.value);
    for slot in population.members.iter_mut().skip(keep) {
        let nest = NestVector::random(instance.n, rng);
        let value = eval(&nest);
        *slot = Member { nest, value };
    }
    population
}

/// Hybrid discrete cuckoo search.
pub fn hdcs(instance: &Instance, params: &HdcsParams) -> RunResult {
    run_cuckoo(instance, params, true, |_| {})
}

/// Ablation baseline: the same search without the local-search step; elites
/// pass through an iteration untouched by flights or descent.
pub fn dcs(instance: &Instance, params: &HdcsParams) -> RunResult {
    run_cuckoo(instance, params, false, |_| {})
}

/// Single-solution variable neighborhood search baseline. This is a generic
/// reconstruction (shake with `kappa` random moves of the current
/// neighborhood, descend, advance on failure), not a published algorithm;
/// outputs carry a reconstruction marker downstream.
pub fn vns_baseline(instance: &Instance, params: &HdcsParams) -> RunResult {
    run_vns(instance, params, |_| {})
}

/// Observer variants report every objective evaluation the run performs;
/// used for instrumentation and the evaluation-audit tests.
pub fn hdcs_with_observer<F: FnMut(i64)>(
    instance: &Instance,
    params: &HdcsParams,
    observer: F,
) -> RunResult {
    run_cuckoo(instance, params, true, observer)
}

pub fn dcs_with_observer<F: FnMut(i64)>(
    instance: &Instance,
    params: &HdcsParams,
    observer: F,
) -> RunResult {
    run_cuckoo(instance, params, false, observer)
}

pub fn vns_with_observer<F: FnMut(i64)>(
    instance: &Instance,
    params: &HdcsParams,
    observer: F,
) -> RunResult {
    run_vns(instance, params, observer)
}

fn run_cuckoo<F: FnMut(i64)>(
    instance: &Instance,
    params: &HdcsParams,
    local_search: bool,
    mut observe: F,
) -> RunResult {
    params.validate().expect("solver parameters");
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let population_size = params.population;
    let mut eval = |nest: &NestVector| {
        let value = schedule::evaluate(instance, nest);
        observe(value);
        value
    };

    let mut pop = init_population_with(&mut eval, instance, population_size, &mut rng);
    let tau = elite_count(population_size, params.discovery_prob).min(population_size);
    let mut history = Vec::new();
    let mut stagnant = 0u32;
    let mut iterations = 0u32;

    for t in 1..=params.t_max {
        iterations = t;
        let previous_best = pop.best.value;

        // The tau cheapest members are this iteration's elites (ties towards
        // the smaller member index).
        let mut ranked: Vec<usize> = (0..population_size).collect();
        ranked.sort_by_key(|&i| (pop.members[i].value, i));
        let mut is_elite = vec![false; population_size];
        for &i in ranked.iter().take(tau) {
            is_elite[i] = true;
        }

        // Levy flights perturb the normal members around the best-so-far or
        // a random peer, greedily accepted against the pre-step member.
        let snapshot = pop.members.clone();
        let guide = pop.best.nest.clone();
        for i in 0..population_size {
            if is_elite[i] {
                continue;
            }
            let peer = loop {
                let j = rng.gen_range(0..population_size);
                if j != i {
                    break j;
                }
            };
            let candidate = operators::levy_flight(
                &snapshot[i].nest,
                &guide,
                &snapshot[peer].nest,
                t,
                &params.levy,
                &mut rng,
            );
            let value = eval(&candidate);
            if operators::accept(value, snapshot[i].value) {
                pop.members[i] = Member {
                    nest: candidate,
                    value,
                };
            }
        }

        // Elites are refined by descent (skipped by the ablation).
        if local_search {
            for &i in ranked.iter().take(tau) {
                let current = pop.members[i].clone();
                let (nest, value) =
                    vnd::vnd_with(&mut eval, &current.nest, current.value, &mut rng);
                pop.members[i] = Member { nest, value };
            }
        }

        // Discovered nests are rebuilt by order crossover; the better child
        // competes with the incumbent member.
        let snapshot = pop.members.clone();
        for i in 0..population_size {
            if rng.gen::<f64>() > params.discovery_prob {
                let partner = loop {
                    let j = rng.gen_range(0..population_size);
                    if j != i {
                        break j;
                    }
                };
                let (first, second) = operators::order_crossover(
                    &snapshot[i].nest,
                    &snapshot[partner].nest,
                    &mut rng,
                );
                let first_value = eval(&first);
                let second_value = eval(&second);
                let (child, value) = if second_value < first_value {
                    (second, second_value)
                } else {
                    (first, first_value)
                };
                if operators::accept(value, snapshot[i].value) {
                    pop.members[i] = Member { nest: child, value };
                }
            }
        }

        pop = restart_with(&mut eval, instance, pop, params.restart_fraction, &mut rng);

        pop.refresh_best();
        history.push(pop.best.value);
        if pop.best.value < previous_best {
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if stagnant >= params.t_nip {
            break;
        }
    }

    RunResult {
        best_nest: pop.best.nest,
        best_value: pop.best.value,
        iterations_executed: iterations,
        best_value_history: history,
        elapsed: started.elapsed(),
        seed: params.seed,
    }
}

fn run_vns<F: FnMut(i64)>(instance: &Instance, params: &HdcsParams, mut observe: F) -> RunResult {
    params.validate().expect("solver parameters");
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut eval = |nest: &NestVector| {
        let value = schedule::evaluate(instance, nest);
        observe(value);
        value
    };

    let seeded = mbhg::mbhg(instance);
    let nest = schedule::encode(&seeded.schedule);
    let value = eval(&nest);
    let mut incumbent = Member { nest, value };

    let mut history = Vec::new();
    let mut stagnant = 0u32;
    let mut iterations = 0u32;
    let mut kappa = 0usize;

    for t in 1..=params.t_max {
        iterations = t;
        let kind = vnd::NeighborhoodKind::ORDER[kappa];
        // Shake: kappa + 1 random moves of the current neighborhood kind.
        let mut shaken = incumbent.nest.clone();
        for _ in 0..=kappa {
            shaken = vnd::random_move(kind, &shaken, &mut rng);
        }
        let shaken_value = eval(&shaken);
        let (refined, refined_value) = vnd::vnd_with(&mut eval, &shaken, shaken_value, &mut rng);
        if refined_value < incumbent.value {
            incumbent = Member {
                nest: refined,
                value: refined_value,
            };
            kappa = 0;
            stagnant = 0;
        } else {
            kappa = (kappa + 1) % vnd::NeighborhoodKind::ORDER.len();
            stagnant += 1;
        }
        history.push(incumbent.value);
        if stagnant >= params.t_nip {
            break;
        }
    }

    RunResult {
        best_nest: incumbent.nest,
        best_value: incumbent.value,
        iterations_executed: iterations,
        best_value_history: history,
        elapsed: started.elapsed(),
        seed: params.seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, GeneratorConfig, IntervalClass};
    use crate::testing::six_job_two_machine;

    fn strip_elapsed(mut r: RunResult) -> RunResult {
        r.elapsed = Duration::ZERO;
        r
    }

    #[test]
    fn elite_count_formula() {
        assert_eq!(elite_count(30, 0.8), 6);
        assert_eq!(elite_count(10, 0.9), 3);
        assert_eq!(elite_count(100, 0.5), 50);
    }

    #[test]
    fn keep_counts() {
        assert_eq!(keep_count(30, 0.10), 27);
        assert_eq!(keep_count(10, 0.10), 9);
        assert_eq!(keep_count(4, 0.10), 4);
    }

    #[test]
    fn init_population_contents() {
        let inst = six_job_two_machine();
        let params = HdcsParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pop = init_population(&inst, &params, &mut rng);
        assert_eq!(pop.members.len(), 30);
        // The heuristic-seeded member re-decodes to the reference value.
        assert!(pop.members[0].value <= 65);
        assert_eq!(
            pop.members[0].value,
            schedule::evaluate(&inst, &pop.members[0].nest)
        );
        for member in &pop.members {
            assert!(NestVector::new(member.nest.jobs().to_vec()).is_ok());
            assert_eq!(member.value, schedule::evaluate(&inst, &member.nest));
        }
        let min = pop.members.iter().map(|m| m.value).min().unwrap();
        assert_eq!(pop.best.value, min);

        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(init_population(&inst, &params, &mut rng2), pop);
    }

    #[test]
    fn restart_keeps_the_head_of_the_sorted_population() {
        let inst = six_job_two_machine();
        let params = HdcsParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pop = init_population(&inst, &params, &mut rng);
        let best_before = pop.members.iter().map(|m| m.value).min().unwrap();
        let restarted = restart(&inst, pop, 0.10, &mut rng);
        assert_eq!(restarted.members.len(), 30);
        // 27 survivors sorted ascending in front.
        for pair in restarted.members[..27].windows(2) {
            assert!(pair[0].value <= pair[1].value);
        }
        assert_eq!(restarted.members[0].value, best_before);
    }

    #[test]
    fn hdcs_finds_the_six_job_optimum_and_is_deterministic() {
        let inst = six_job_two_machine();
        let params = HdcsParams {
            t_max: 60,
            t_nip: 20,
            ..HdcsParams::default()
        }
        .with_seed(7);
        let a = hdcs(&inst, &params);
        // Exhaustive enumeration puts the optimum at 65.
        assert_eq!(a.best_value, 65);
        assert_eq!(schedule::evaluate(&inst, &a.best_nest), 65);
        assert!(a.iterations_executed <= 60);
        assert_eq!(a.best_value_history.len(), a.iterations_executed as usize);
        for pair in a.best_value_history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        let b = hdcs(&inst, &params);
        assert_eq!(strip_elapsed(a), strip_elapsed(b));
    }

    #[test]
    fn dcs_and_vns_share_the_contracts() {
        let inst = six_job_two_machine();
        let params = HdcsParams {
            t_max: 40,
            t_nip: 15,
            ..HdcsParams::default()
        }
        .with_seed(11);
        for solver in [dcs, vns_baseline] {
            let a = solver(&inst, &params);
            assert!(a.best_value >= 65, "cannot beat the optimum");
            for pair in a.best_value_history.windows(2) {
                assert!(pair[1] <= pair[0]);
            }
            let b = solver(&inst, &params);
            assert_eq!(strip_elapsed(a), strip_elapsed(b));
        }
    }

    #[test]
    fn stagnation_stops_the_run() {
        let inst = six_job_two_machine();
        let params = HdcsParams {
            t_max: 200,
            t_nip: 5,
            ..HdcsParams::default()
        }
        .with_seed(2);
        let result = hdcs(&inst, &params);
        // 65 is found during init (the seeded member), so every iteration is
        // stagnant and the run stops after exactly t_nip iterations.
        assert_eq!(result.best_value, 65);
        assert_eq!(result.iterations_executed, 5);
    }

    #[test]
    fn best_value_is_the_minimum_over_all_evaluations() {
        let cfg = GeneratorConfig::new(10, 2, IntervalClass::H2, 31);
        let inst = generate(&cfg).unwrap();
        let params = HdcsParams {
            t_max: 30,
            t_nip: 10,
            ..HdcsParams::default()
        }
        .with_seed(5);
        type Runner = fn(&Instance, &HdcsParams, &mut dyn FnMut(i64)) -> RunResult;
        let runners: [Runner; 3] = [
            |i, p, o| hdcs_with_observer(i, p, o),
            |i, p, o| dcs_with_observer(i, p, o),
            |i, p, o| vns_with_observer(i, p, o),
        ];
        for run in runners {
            let mut min_seen = i64::MAX;
            let mut evals = 0u64;
            let result = run(&inst, &params, &mut |v| {
                min_seen = min_seen.min(v);
                evals += 1;
            });
            assert!(evals > 0);
            assert_eq!(result.best_value, min_seen);
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(HdcsParams {
            population: 3,
            ..HdcsParams::default()
        }
        .validate()
        .is_err());
        assert!(HdcsParams {
            discovery_prob: 1.0,
            ..HdcsParams::default()
        }
        .validate()
        .is_err());
        assert!(HdcsParams {
            t_nip: 300,
            ..HdcsParams::default()
        }
        .validate()
        .is_err());
        assert!(HdcsParams::default().validate().is_ok());
    }
}
