//! Problem instances: data types, validation, random generation and file I/O.
//!
//! An instance consists of `n` jobs to be scheduled on `m` identical parallel
//! machines. Each job has a basic processing time that jumps by a penalty if
//! the job starts after its deteriorating date, and changing over between two
//! jobs on the same machine costs a sequence-dependent setup time.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::{self, NestVector};

/// A single job. All quantities are integer time units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    /// 1-based job id; job ids double as positions in solution vectors.
    pub id: usize,
    /// Basic processing time, charged when the job starts on time.
    pub basic_time: i64,
    /// Extra processing time charged when the job starts late.
    pub penalty: i64,
    pub due_date: i64,
    /// Latest start time at which the job still takes only its basic time.
    pub deteriorating_date: i64,
}

/// A scheduling problem instance.
///
/// The setup matrix has `n + 1` rows of `n` entries each: row 0 holds the
/// setup before the first job of a machine (always zero) and row `i >= 1`
/// holds the setup after job `i`. `setup_time(i, j)` reads entry `(i, j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub n: usize,
    pub m: usize,
    /// Jobs ordered by id, so `jobs[id - 1].id == id`.
    pub jobs: Vec<Job>,
    /// `(n + 1) x n` matrix; `setup[i][j - 1]` is the changeover from `i` to `j`.
    pub setup: Vec<Vec<i64>>,
    pub label: String,
}

impl Instance {
    /// Setup time between predecessor `pred` (0 for "machine start") and `next`.
    #[inline]
    pub fn setup_time(&self, pred: usize, next: usize) -> i64 {
        self.setup[pred][next - 1]
    }

    #[inline]
    pub fn job(&self, id: usize) -> &Job {
        &self.jobs[id - 1]
    }

    /// Checks every structural invariant and returns the list of violations.
    /// An empty list means the instance is well formed. Diagnostics are
    /// returned, never thrown.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &str, rule: String| {
            out.push(Violation {
                field: field.to_string(),
                rule,
            })
        };
        if self.n < 1 {
            push("n", "job count must satisfy n >= 1".into());
        }
        if self.m < 1 {
            push("m", "machine count must satisfy m >= 1".into());
        }
        if self.jobs.len() != self.n {
            push(
                "jobs",
                format!("expected {} jobs, found {}", self.n, self.jobs.len()),
            );
        }
        for (idx, job) in self.jobs.iter().enumerate() {
            let want = idx + 1;
            if job.id != want {
                push(
                    "jobs",
                    format!("job at index {idx} has id {} (want {want})", job.id),
                );
            }
            if job.basic_time < 1 {
                push(
                    "basic_time",
                    format!("job {}: basic_time must be >= 1", job.id),
                );
            }
            if job.penalty < 1 {
                push("penalty", format!("job {}: penalty must be >= 1", job.id));
            }
            if job.due_date < 1 {
                push("due_date", format!("job {}: due_date must be >= 1", job.id));
            }
            if job.deteriorating_date < 1 {
                push(
                    "deteriorating_date",
                    format!("job {}: deteriorating_date must be >= 1", job.id),
                );
            }
        }
        if self.setup.len() != self.n + 1 {
            push(
                "setup",
                format!(
                    "expected {} setup rows, found {}",
                    self.n + 1,
                    self.setup.len()
                ),
            );
            return out;
        }
        for (i, row) in self.setup.iter().enumerate() {
            if row.len() != self.n {
                push(
                    "setup",
                    format!("setup row {i} has {} entries (want {})", row.len(), self.n),
                );
                return out;
            }
            for (jx, &v) in row.iter().enumerate() {
                let j = jx + 1;
                if v < 0 {
                    push("setup", format!("setup({i},{j}) = {v} is negative"));
                }
                if i == 0 && v != 0 {
                    push(
                        "setup",
                        format!("setup(0,{j}) = {v}; the dummy row must be zero"),
                    );
                }
                if i == j && v != 0 {
                    push(
                        "setup",
                        format!("setup({i},{j}) = {v}; the diagonal must be zero"),
                    );
                }
            }
        }
        out
    }
}

/// One broken invariant, naming the field and the rule it violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Deteriorating-date interval class. With `beta` the mean machine load
/// `sum(a_j) / m`, the classes draw from `[1, 0.5 beta]`, `[0.5 beta, beta]`
/// and `[1, beta]` respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntervalClass {
    H1,
    H2,
    H3,
}

impl IntervalClass {
    pub const ALL: [IntervalClass; 3] = [IntervalClass::H1, IntervalClass::H2, IntervalClass::H3];
}

impl fmt::Display for IntervalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalClass::H1 => write!(f, "H1"),
            IntervalClass::H2 => write!(f, "H2"),
            IntervalClass::H3 => write!(f, "H3"),
        }
    }
}

impl std::str::FromStr for IntervalClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "H1" => Ok(IntervalClass::H1),
            "H2" => Ok(IntervalClass::H2),
            "H3" => Ok(IntervalClass::H3),
            other => Err(format!(
                "unknown interval class '{other}' (expected H1, H2 or H3)"
            )),
        }
    }
}

/// Configuration for the random instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub m: usize,
    /// Penalty scale: penalties are drawn from `[1, round(100 * xi)]`.
    #[serde(default = "default_xi")]
    pub xi: f64,
    pub interval_class: IntervalClass,
    /// Inclusive range for off-diagonal setup times.
    #[serde(default = "default_setup_range")]
    pub setup_range: (i64, i64),
    pub seed: u64,
}

fn default_xi() -> f64 {
    0.5
}

fn default_setup_range() -> (i64, i64) {
    (1, 10)
}

impl GeneratorConfig {
    pub fn new(n: usize, m: usize, interval_class: IntervalClass, seed: u64) -> Self {
        GeneratorConfig {
            n,
            m,
            xi: default_xi(),
            interval_class,
            setup_range: default_setup_range(),
            seed,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("degenerate instance: round(0.5 * beta) = {half} < 1 (beta = {beta})")]
    DegenerateIntervals { beta: f64, half: i64 },
}

/// Completion-time horizon of an instance: jobs are sorted by non-decreasing
/// ratio `basic_time / penalty` (ties by smaller id), the resulting
/// permutation is decoded with the standard decoder, and the maximum
/// completion time is returned. Used as the upper bound of the due-date
/// distribution.
pub fn cmax_bound(instance: &Instance) -> i64 {
    if instance.jobs.is_empty() {
        return 0;
    }
    let mut ids: Vec<usize> = (1..=instance.n).collect();
    // a_i/b_i <= a_j/b_j  <=>  a_i * b_j <= a_j * b_i (penalties are >= 1)
    ids.sort_by(|&i, &j| {
        let (ji, jj) = (instance.job(i), instance.job(j));
        (ji.basic_time * jj.penalty)
            .cmp(&(jj.basic_time * ji.penalty))
            .then(i.cmp(&j))
    });
    let nest = NestVector::from_vec_unchecked(ids);
    let schedule = schedule::decode(instance, &nest).expect("ratio permutation is valid");
    schedule.completion.iter().copied().max().unwrap_or(0)
}

/// Generates a random instance. Draw order is fixed (basic times, penalties,
/// deteriorating dates, setup rows, due dates) so equal configs produce
/// byte-identical instances.
pub fn generate(config: &GeneratorConfig) -> Result<Instance, GenerateError> {
    let err = |msg: String| Err(GenerateError::InvalidConfig(msg));
    if config.n < 1 {
        return err("n must be >= 1".into());
    }
    if config.m < 1 {
        return err("m must be >= 1".into());
    }
    if !(config.xi > 0.0 && config.xi <= 1.0) {
        return err(format!("xi = {} must lie in (0, 1]", config.xi));
    }
    let (setup_lo, setup_hi) = config.setup_range;
    if setup_lo < 1 || setup_hi < setup_lo {
        return err(format!(
            "setup_range ({setup_lo}, {setup_hi}) must satisfy 1 <= low <= high"
        ));
    }
    let penalty_hi = (100.0 * config.xi).round() as i64;
    if penalty_hi < 1 {
        return err(format!(
            "round(100 * xi) = {penalty_hi} leaves no penalty range"
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n;
    let basic: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=100)).collect();
    let penalty: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=penalty_hi)).collect();

    let beta = basic.iter().sum::<i64>() as f64 / config.m as f64;
    let half = (0.5 * beta).round() as i64;
    let full = beta.round() as i64;
    if half < 1 {
        return Err(GenerateError::DegenerateIntervals { beta, half });
    }
    let (lo, hi) = match config.interval_class {
        IntervalClass::H1 => (1, half),
        IntervalClass::H2 => (half, full),
        IntervalClass::H3 => (1, full),
    };
    let lo = lo.max(1);
    let hi = hi.max(lo);
    let deteriorating: Vec<i64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();

    let mut setup = vec![vec![0i64; n]; n + 1];
    for (i, row) in setup.iter_mut().enumerate().skip(1) {
        for (jx, slot) in row.iter_mut().enumerate() {
            if i != jx + 1 {
                *slot = rng.gen_range(setup_lo..=setup_hi);
            }
        }
    }

    let label = format!(
        "n{}m{}_{}_xi{}_seed{}",
        n, config.m, config.interval_class, config.xi, config.seed
    );
    let mut instance = Instance {
        n,
        m: config.m,
        jobs: (1..=n)
            .map(|id| Job {
                id,
                basic_time: basic[id - 1],
                penalty: penalty[id - 1],
                due_date: 1, // placeholder until the horizon is known
                deteriorating_date: deteriorating[id - 1],
            })
            .collect(),
        setup,
        label,
    };

    let horizon = cmax_bound(&instance);
    for job in &mut instance.jobs {
        job.due_date = rng.gen_range(1..=horizon.max(1));
    }
    Ok(instance)
}

// --- file persistence ------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct JobFile {
    id: usize,
    a: i64,
    b: i64,
    d: i64,
    h: i64,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    m: usize,
    jobs: Vec<JobFile>,
    setup: Vec<Vec<i64>>,
    #[serde(default)]
    label: String,
}

#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance file {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid instance file {path}: {detail}")]
    Schema { path: PathBuf, detail: String },
}

/// Serializes an instance to the JSON schema used by the CLI.
pub fn instance_to_json(instance: &Instance) -> String {
    let file = InstanceFile {
        n: instance.n,
        m: instance.m,
        jobs: instance
            .jobs
            .iter()
            .map(|j| JobFile {
                id: j.id,
                a: j.basic_time,
                b: j.penalty,
                d: j.due_date,
                h: j.deteriorating_date,
            })
            .collect(),
        setup: instance.setup.clone(),
        label: instance.label.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("instance serialization");
    text.push('\n');
    text
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<(), InstanceFileError> {
    std::fs::write(path, instance_to_json(instance)).map_err(|source| InstanceFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_instance(path: &Path) -> Result<Instance, InstanceFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| InstanceFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|source| InstanceFileError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
    instance_from_file(file).map_err(|detail| InstanceFileError::Schema {
        path: path.to_path_buf(),
        detail,
    })
}

fn instance_from_file(file: InstanceFile) -> Result<Instance, String> {
    if file.jobs.len() != file.n {
        return Err(format!(
            "declared n = {} but {} jobs listed",
            file.n,
            file.jobs.len()
        ));
    }
    if file.setup.len() != file.n + 1 {
        return Err(format!(
            "setup matrix needs {} rows (dummy row plus one per job), found {}",
            file.n + 1,
            file.setup.len()
        ));
    }
    for (i, row) in file.setup.iter().enumerate() {
        if row.len() != file.n {
            return Err(format!(
                "setup row {i} has {} entries (want {})",
                row.len(),
                file.n
            ));
        }
    }
    let mut jobs: Vec<JobFile> = file.jobs;
    jobs.sort_by_key(|j| j.id);
    for (idx, job) in jobs.iter().enumerate() {
        if job.id != idx + 1 {
            return Err(format!(
                "job ids must be exactly 1..={}, found id {}",
                file.n, job.id
            ));
        }
    }
    Ok(Instance {
        n: file.n,
        m: file.m,
        jobs: jobs
            .into_iter()
            .map(|j| Job {
                id: j.id,
                basic_time: j.a,
                penalty: j.b,
                due_date: j.d,
                deteriorating_date: j.h,
            })
            .collect(),
        setup: file.setup,
        label: file.label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::six_job_two_machine;

    #[test]
    fn six_job_example_is_valid() {
        assert!(six_job_two_machine().validate().is_empty());
    }

    #[test]
    fn nonzero_diagonal_is_reported() {
        let mut inst = six_job_two_machine();
        inst.setup[2][1] = 1; // setup(2,2)
        let violations = inst.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].field, "setup");
        assert!(violations[0].rule.contains("diagonal"), "{}", violations[0]);
    }

    #[test]
    fn empty_instance_is_reported() {
        let inst = Instance {
            n: 0,
            m: 1,
            jobs: vec![],
            setup: vec![vec![]],
            label: String::new(),
        };
        assert!(inst.validate().iter().any(|v| v.field == "n"));
    }

    #[test]
    fn cmax_bound_on_six_job_example() {
        // Ratio order is [2,5,6,1,4,3]; decoding it yields machine finish
        // times 193 and 250 (hand-traced before implementation).
        assert_eq!(cmax_bound(&six_job_two_machine()), 250);
    }

    #[test]
    fn cmax_bound_single_job() {
        let inst = Instance {
            n: 1,
            m: 1,
            jobs: vec![Job {
                id: 1,
                basic_time: 37,
                penalty: 5,
                due_date: 10,
                deteriorating_date: 4,
            }],
            setup: vec![vec![0], vec![0]],
            label: "single".into(),
        };
        assert_eq!(cmax_bound(&inst), 37);
    }

    #[test]
    fn cmax_bound_two_identical_jobs_two_machines() {
        let job = |id| Job {
            id,
            basic_time: 20,
            penalty: 3,
            due_date: 30,
            deteriorating_date: 8,
        };
        let inst = Instance {
            n: 2,
            m: 2,
            jobs: vec![job(1), job(2)],
            setup: vec![vec![0, 0], vec![0, 7], vec![7, 0]],
            label: "pair".into(),
        };
        // Both jobs start at time zero on their own machine.
        assert_eq!(cmax_bound(&inst), 20);
    }

    #[test]
    fn cmax_bound_dominates_load_bounds() {
        for seed in 0..20 {
            let cfg = GeneratorConfig::new(12, 3, IntervalClass::H3, seed);
            let inst = generate(&cfg).unwrap();
            let horizon = cmax_bound(&inst);
            let max_basic = inst.jobs.iter().map(|j| j.basic_time).max().unwrap();
            let total: i64 = inst.jobs.iter().map(|j| j.basic_time).sum();
            assert!(horizon >= max_basic);
            assert!(horizon >= total / inst.m as i64);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = GeneratorConfig::new(8, 2, IntervalClass::H1, 42);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(instance_to_json(&a), instance_to_json(&b));
    }

    #[test]
    fn generated_instances_are_valid_and_in_range() {
        // >= 10^4 draws per job field across the sweep.
        let mut job_draws = 0usize;
        for seed in 0..250 {
            for class in IntervalClass::ALL {
                let cfg = GeneratorConfig::new(30, 4, class, seed);
                let inst = generate(&cfg).unwrap();
                assert!(inst.validate().is_empty());

                let beta = inst.jobs.iter().map(|j| j.basic_time).sum::<i64>() as f64 / 4.0;
                let half = (0.5 * beta).round() as i64;
                let full = beta.round() as i64;
                let (lo, hi) = match class {
                    IntervalClass::H1 => (1, half),
                    IntervalClass::H2 => (half, full),
                    IntervalClass::H3 => (1, full),
                };
                let horizon = cmax_bound(&inst);
                for job in &inst.jobs {
                    job_draws += 1;
                    assert!((1..=100).contains(&job.basic_time));
                    assert!((1..=50).contains(&job.penalty));
                    assert!(job.deteriorating_date >= lo && job.deteriorating_date <= hi);
                    assert!(job.due_date >= 1 && job.due_date <= horizon);
                }
                for i in 1..=inst.n {
                    for j in 1..=inst.n {
                        if i != j {
                            assert!((1..=10).contains(&inst.setup_time(i, j)));
                        }
                    }
                }
            }
        }
        assert!(job_draws >= 10_000);
    }

    #[test]
    fn degenerate_config_is_rejected() {
        // One job of length 1 on one machine: beta = 1, round(0.5) rounds to
        // 1 away from zero, so force beta below 1 with many machines.
        let cfg = GeneratorConfig::new(1, 200, IntervalClass::H1, 7);
        match generate(&cfg) {
            Err(GenerateError::DegenerateIntervals { .. }) => {}
            other => panic!("expected degenerate-interval error, got {other:?}"),
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let inst = six_job_two_machine();
        write_instance(&inst, &path).unwrap();
        let back = read_instance(&path).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn missing_setup_row_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let mut inst = six_job_two_machine();
        inst.setup.pop();
        std::fs::write(&path, instance_to_json(&inst)).unwrap();
        match read_instance(&path) {
            Err(InstanceFileError::Schema { detail, .. }) => {
                assert!(detail.contains("setup"), "{detail}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        std::fs::write(&path, "{ \"n\": 2, ").unwrap();
        match read_instance(&path) {
            Err(InstanceFileError::Parse { source, .. }) => {
                assert!(source.line() >= 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
