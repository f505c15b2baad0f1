//! Solution encoding and the permutation decoder.
//!
//! A solution is a single permutation of all job ids (a "nest vector"). The
//! decoder scans it left to right and assigns each job to the machine that
//! becomes available first, breaking ties towards the smallest machine index.
//! Start times are availability plus the sequence-dependent setup; a job that
//! starts after its deteriorating date pays its penalty on top of the basic
//! processing time. Every solver in this crate evaluates solutions through
//! this one semantic.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, Job};

/// A permutation of the job ids `1..=n`; the universal solution encoding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct NestVector(Vec<usize>);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("not a permutation of 1..={expected_len}: {reason}")]
pub struct InvalidPermutation {
    pub expected_len: usize,
    pub reason: String,
}

impl NestVector {
    pub fn new(perm: Vec<usize>) -> Result<Self, InvalidPermutation> {
        let n = perm.len();
        let mut seen = vec![false; n + 1];
        for &job in &perm {
            if job < 1 || job > n {
                return Err(InvalidPermutation {
                    expected_len: n,
                    reason: format!("job id {job} out of range"),
                });
            }
            if seen[job] {
                return Err(InvalidPermutation {
                    expected_len: n,
                    reason: format!("job id {job} appears twice"),
                });
            }
            seen[job] = true;
        }
        Ok(NestVector(perm))
    }

    /// The identity permutation `[1, 2, ..., n]`.
    pub fn identity(n: usize) -> Self {
        NestVector((1..=n).collect())
    }

    /// A uniform random permutation (inside-out Fisher-Yates so the result
    /// depends only on the RNG stream, not on library internals).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut perm = vec![0usize; n];
        for i in 0..n {
            let d = rng.gen_range(0..=i);
            perm[i] = perm[d];
            perm[d] = i + 1;
        }
        NestVector(perm)
    }

    /// Constructor for callers that guarantee the permutation invariant
    /// (operator closure, decoded schedules).
    pub(crate) fn from_vec_unchecked(perm: Vec<usize>) -> Self {
        debug_assert!(NestVector::new(perm.clone()).is_ok());
        NestVector(perm)
    }

    #[inline]
    pub fn jobs(&self) -> &[usize] {
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
}

impl TryFrom<Vec<usize>> for NestVector {
    type Error = InvalidPermutation;
    fn try_from(perm: Vec<usize>) -> Result<Self, Self::Error> {
        NestVector::new(perm)
    }
}

impl From<NestVector> for Vec<usize> {
    fn from(nest: NestVector) -> Vec<usize> {
        nest.0
    }
}

/// A decoded schedule: per-machine job sequences plus the per-job timeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub machine_sequences: Vec<Vec<usize>>,
    /// Indexed by `job id - 1`.
    pub start: Vec<i64>,
    pub completion: Vec<i64>,
    pub tardiness: Vec<i64>,
    pub total_tardiness: i64,
}

impl Schedule {
    #[inline]
    pub fn start_of(&self, job: usize) -> i64 {
        self.start[job - 1]
    }

    #[inline]
    pub fn completion_of(&self, job: usize) -> i64 {
        self.completion[job - 1]
    }

    #[inline]
    pub fn tardiness_of(&self, job: usize) -> i64 {
        self.tardiness[job - 1]
    }

    /// Human-readable dump: one line per machine with
    /// `job(start,completion,tardiness)` entries, then the total.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, seq) in self.machine_sequences.iter().enumerate() {
            let _ = write!(out, "machine {}:", k + 1);
            for &job in seq {
                let _ = write!(
                    out,
                    " {}({},{},{})",
                    job,
                    self.start_of(job),
                    self.completion_of(job),
                    self.tardiness_of(job)
                );
            }
            out.push('\n');
        }
        let _ = writeln!(out, "total: {}", self.total_tardiness);
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("solution has {got} jobs but the instance has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid machine assignment: {0}")]
    InvalidAssignment(String),
}

/// Actual processing time of a job that starts at `start`: the basic time if
/// it starts no later than the deteriorating date, otherwise basic plus
/// penalty.
#[inline]
pub fn processing_time(job: &Job, start: i64) -> i64 {
    if start <= job.deteriorating_date {
        job.basic_time
    } else {
        job.basic_time + job.penalty
    }
}

/// Shared decoding scan; visits `(machine, job, start, completion, tardiness)`
/// for every job in permutation order.
fn scan<F: FnMut(usize, usize, i64, i64, i64)>(instance: &Instance, jobs: &[usize], mut visit: F) {
    let m = instance.m;
    let mut avail = vec![0i64; m];
    let mut last = vec![0usize; m];
    for &job in jobs {
        let mut k = 0;
        for q in 1..m {
            if avail[q] < avail[k] {
                k = q;
            }
        }
        let start = avail[k] + instance.setup_time(last[k], job);
        let spec = instance.job(job);
        let completion = start + processing_time(spec, start);
        let tardiness = (completion - spec.due_date).max(0);
        avail[k] = completion;
        last[k] = job;
        visit(k, job, start, completion, tardiness);
    }
}

/// Decodes a permutation into a full schedule.
pub fn decode(instance: &Instance, nest: &NestVector) -> Result<Schedule, EvalError> {
    if nest.len() != instance.n {
        return Err(EvalError::LengthMismatch {
            expected: instance.n,
            got: nest.len(),
        });
    }
    let n = instance.n;
    let mut schedule = Schedule {
        machine_sequences: vec![Vec::new(); instance.m],
        start: vec![0; n],
        completion: vec![0; n],
        tardiness: vec![0; n],
        total_tardiness: 0,
    };
    scan(instance, nest.jobs(), |k, job, s, c, t| {
        schedule.machine_sequences[k].push(job);
        schedule.start[job - 1] = s;
        schedule.completion[job - 1] = c;
        schedule.tardiness[job - 1] = t;
        schedule.total_tardiness += t;
    });
    Ok(schedule)
}

/// Total tardiness of a permutation; same value as `decode(..).total_tardiness`.
pub fn total_tardiness(instance: &Instance, nest: &NestVector) -> Result<i64, EvalError> {
    if nest.len() != instance.n {
        return Err(EvalError::LengthMismatch {
            expected: instance.n,
            got: nest.len(),
        });
    }
    Ok(evaluate(instance, nest))
}

/// Objective-only evaluation for solver hot paths. The caller guarantees the
/// nest belongs to this instance.
pub(crate) fn evaluate(instance: &Instance, nest: &NestVector) -> i64 {
    debug_assert_eq!(nest.len(), instance.n);
    let mut total = 0i64;
    scan(instance, nest.jobs(), |_, _, _, _, t| total += t);
    total
}

/// Tardiness of a single machine's job sequence processed back to back from
/// time zero.
pub(crate) fn sequence_tardiness(instance: &Instance, seq: &[usize]) -> i64 {
    let mut avail = 0i64;
    let mut last = 0usize;
    let mut total = 0i64;
    for &job in seq {
        let start = avail + instance.setup_time(last, job);
        let spec = instance.job(job);
        let completion = start + processing_time(spec, start);
        total += (completion - spec.due_date).max(0);
        avail = completion;
        last = job;
    }
    total
}

/// Builds a schedule from explicit per-machine sequences (used by the
/// constructive heuristic and the exact solver). Every job must appear
/// exactly once.
pub fn schedule_from_sequences(
    instance: &Instance,
    sequences: &[Vec<usize>],
) -> Result<Schedule, EvalError> {
    if sequences.len() != instance.m {
        return Err(EvalError::InvalidAssignment(format!(
            "{} machine sequences for {} machines",
            sequences.len(),
            instance.m
        )));
    }
    let n = instance.n;
    let mut seen = vec![false; n + 1];
    let mut schedule = Schedule {
        machine_sequences: sequences.to_vec(),
        start: vec![0; n],
        completion: vec![0; n],
        tardiness: vec![0; n],
        total_tardiness: 0,
    };
    for seq in sequences {
        let mut avail = 0i64;
        let mut last = 0usize;
        for &job in seq {
            if job < 1 || job > n {
                return Err(EvalError::InvalidAssignment(format!(
                    "job id {job} out of range"
                )));
            }
            if seen[job] {
                return Err(EvalError::InvalidAssignment(format!(
                    "job {job} scheduled twice"
                )));
            }
            seen[job] = true;
            let start = avail + instance.setup_time(last, job);
            let spec = instance.job(job);
            let completion = start + processing_time(spec, start);
            let tardiness = (completion - spec.due_date).max(0);
            schedule.start[job - 1] = start;
            schedule.completion[job - 1] = completion;
            schedule.tardiness[job - 1] = tardiness;
            schedule.total_tardiness += tardiness;
            avail = completion;
            last = job;
        }
    }
    if let Some(job) = (1..=n).find(|&j| !seen[j]) {
        return Err(EvalError::InvalidAssignment(format!(
            "job {job} never scheduled"
        )));
    }
    Ok(schedule)
}

/// Flattens a schedule back into a permutation: jobs ordered by start time,
/// ties by machine index then sequence position. Re-decoding the result may
/// yield a different (never trusted) schedule, so callers always re-evaluate.
pub fn encode(schedule: &Schedule) -> NestVector {
    let mut entries: Vec<(i64, usize, usize, usize)> = Vec::new();
    for (k, seq) in schedule.machine_sequences.iter().enumerate() {
        for (pos, &job) in seq.iter().enumerate() {
            entries.push((schedule.start_of(job), k, pos, job));
        }
    }
    entries.sort();
    NestVector::from_vec_unchecked(entries.into_iter().map(|(_, _, _, job)| job).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::six_job_two_machine;
    use proptest::prelude::*;

    fn golden_nest() -> NestVector {
        NestVector::new(vec![2, 6, 4, 1, 5, 3]).unwrap()
    }

    #[test]
    fn processing_time_step() {
        let inst = six_job_two_machine();
        // Job 4: a=93, h=19, b=17.
        assert_eq!(processing_time(inst.job(4), 19), 93);
        assert_eq!(processing_time(inst.job(4), 20), 110);
        // Job 5: a=62, h=58, b=40; started at 115 it deteriorates.
        assert_eq!(processing_time(inst.job(5), 115), 102);
    }

    #[test]
    fn golden_decode() {
        let inst = six_job_two_machine();
        let schedule = decode(&inst, &golden_nest()).unwrap();
        assert_eq!(schedule.total_tardiness, 65);
        assert_eq!(schedule.machine_sequences[0], vec![2, 4, 5]);
        assert_eq!(schedule.machine_sequences[1], vec![6, 1, 3]);
        assert_eq!(schedule.start, vec![58, 0, 145, 19, 115, 0]);
        assert_eq!(schedule.completion, vec![136, 17, 243, 112, 217, 53]);
        assert_eq!(schedule.tardiness, vec![51, 0, 14, 0, 0, 0]);
    }

    #[test]
    fn single_job_decode() {
        let inst = Instance {
            n: 1,
            m: 1,
            jobs: vec![Job {
                id: 1,
                basic_time: 40,
                penalty: 9,
                due_date: 25,
                deteriorating_date: 3,
            }],
            setup: vec![vec![0], vec![0]],
            label: String::new(),
        };
        let schedule = decode(&inst, &NestVector::identity(1)).unwrap();
        assert_eq!(schedule.start_of(1), 0);
        assert_eq!(schedule.completion_of(1), 40);
        assert_eq!(schedule.total_tardiness, 15);
    }

    #[test]
    fn total_tardiness_matches_decode() {
        let inst = six_job_two_machine();
        assert_eq!(total_tardiness(&inst, &golden_nest()).unwrap(), 65);
        // Identity permutation, hand-simulated independently before building.
        assert_eq!(
            total_tardiness(&inst, &NestVector::identity(6)).unwrap(),
            279
        );
    }

    #[test]
    fn generous_due_dates_mean_no_tardiness() {
        let mut inst = six_job_two_machine();
        let horizon = crate::instance::cmax_bound(&inst);
        for job in &mut inst.jobs {
            job.due_date = horizon + 200;
        }
        assert_eq!(total_tardiness(&inst, &golden_nest()).unwrap(), 0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let inst = six_job_two_machine();
        let short = NestVector::identity(4);
        assert!(matches!(
            decode(&inst, &short),
            Err(EvalError::LengthMismatch {
                expected: 6,
                got: 4
            })
        ));
    }

    #[test]
    fn invalid_permutations_are_rejected() {
        assert!(NestVector::new(vec![1, 1, 2]).is_err());
        assert!(NestVector::new(vec![0, 1]).is_err());
        assert!(NestVector::new(vec![1, 3]).is_err());
    }

    #[test]
    fn encode_recovers_start_order() {
        let inst = six_job_two_machine();
        let schedule = decode(&inst, &golden_nest()).unwrap();
        assert_eq!(encode(&schedule), golden_nest());
    }

    #[test]
    fn encode_single_machine_is_the_sequence() {
        let mut inst = six_job_two_machine();
        inst.m = 1;
        let nest = NestVector::new(vec![3, 1, 4, 2, 6, 5]).unwrap();
        let schedule = decode(&inst, &nest).unwrap();
        assert_eq!(encode(&schedule), nest);
    }

    #[test]
    fn schedule_from_sequences_rejects_double_bookings() {
        let inst = six_job_two_machine();
        let err = schedule_from_sequences(&inst, &[vec![1, 2, 1], vec![3, 4, 5, 6]]);
        assert!(matches!(err, Err(EvalError::InvalidAssignment(_))));
        let err = schedule_from_sequences(&inst, &[vec![1, 2], vec![3, 4, 5]]);
        assert!(matches!(err, Err(EvalError::InvalidAssignment(_))));
    }

    #[test]
    fn dump_format() {
        let inst = six_job_two_machine();
        let schedule = decode(&inst, &golden_nest()).unwrap();
        let dump = schedule.dump();
        assert!(dump.contains("machine 1: 2(0,17,0) 4(19,112,0) 5(115,217,0)"));
        assert!(dump.contains("machine 2: 6(0,53,0) 1(58,136,51) 3(145,243,14)"));
        assert!(dump.ends_with("total: 65\n"));
    }

    proptest! {
        #[test]
        fn decode_never_overlaps_and_is_pure(seed in 0u64..500) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cfg = crate::instance::GeneratorConfig::new(10, 3, crate::instance::IntervalClass::H3, seed);
            let inst = crate::instance::generate(&cfg).unwrap();
            let nest = NestVector::random(10, &mut rng);
            let schedule = decode(&inst, &nest).unwrap();
            prop_assert!(schedule.total_tardiness >= 0);
            prop_assert_eq!(decode(&inst, &nest).unwrap(), schedule.clone());
            for seq in &schedule.machine_sequences {
                for pair in seq.windows(2) {
                    let (i, j) = (pair[0], pair[1]);
                    prop_assert!(schedule.start_of(j) >= schedule.completion_of(i));
                    prop_assert_eq!(
                        schedule.start_of(j),
                        schedule.completion_of(i) + inst.setup_time(i, j)
                    );
                }
            }
            // Machine labels carry no data: permuting the sequences leaves
            // the total unchanged.
            let mut rotated = schedule.machine_sequences.clone();
            rotated.rotate_left(1);
            let re = schedule_from_sequences(&inst, &rotated).unwrap();
            prop_assert_eq!(re.total_tardiness, schedule.total_tardiness);
        }

        #[test]
        fn encode_of_decode_is_a_permutation(seed in 0u64..200) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cfg = crate::instance::GeneratorConfig::new(9, 2, crate::instance::IntervalClass::H1, seed);
            let inst = crate::instance::generate(&cfg).unwrap();
            let nest = NestVector::random(9, &mut rng);
            let encoded = encode(&decode(&inst, &nest).unwrap());
            prop_assert!(NestVector::new(encoded.jobs().to_vec()).is_ok());
        }
    }
}
