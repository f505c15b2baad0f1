//! Ground truth at desk scale: depth-first branch and bound over
//! machine-sequenced schedules, a numeric checker for the mixed-integer
//! model, and an LP-format exporter for external solvers.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::instance::Instance;
use crate::mbhg;
use crate::schedule::{self, processing_time, Schedule};

/// Result of a branch-and-bound search. `proven_optimal` is false when the
/// time limit expired before the tree was exhausted; the schedule is then the
/// best incumbent found.
#[derive(Debug, Clone)]
pub struct BnbResult {
    pub schedule: Schedule,
    pub proven_optimal: bool,
    pub nodes_explored: u64,
}

/// Exhaustive depth-first search: every node appends one unscheduled job to
/// one machine. A job may open an empty machine only when all lower-indexed
/// machines are in use (identical machines make other openings symmetric).
/// The accumulated tardiness of placed jobs is a valid bound because an
/// appended job never changes earlier start times and contributes
/// non-negative tardiness, so any node at or above the incumbent is pruned.
///
/// Intended for small instances (roughly 14 jobs or fewer).
pub fn branch_and_bound(instance: &Instance, time_limit: Option<Duration>) -> BnbResult {
    // Constructive incumbent; pruning is effective from the first node.
    let seeded = mbhg::mbhg(instance);
    let mut search = Search {
        instance,
        order: {
            let mut ids: Vec<usize> = (1..=instance.n).collect();
            ids.sort_by_key(|&id| (instance.job(id).due_date, id));
            ids
        },
        sequences: vec![Vec::new(); instance.m],
        avail: vec![0; instance.m],
        last: vec![0; instance.m],
        scheduled: vec![false; instance.n + 1],
        best_value: seeded.value,
        best_sequences: seeded.schedule.machine_sequences,
        deadline: time_limit.map(|limit| Instant::now() + limit),
        nodes: 0,
        timed_out: false,
    };
    search.dfs(0, 0);
    let schedule = schedule::schedule_from_sequences(instance, &search.best_sequences)
        .expect("incumbent schedules are feasible");
    BnbResult {
        schedule,
        proven_optimal: !search.timed_out,
        nodes_explored: search.nodes,
    }
}

struct Search<'a> {
    instance: &'a Instance,
    /// Branching order: ascending due date for early incumbents.
    order: Vec<usize>,
    sequences: Vec<Vec<usize>>,
    avail: Vec<i64>,
    last: Vec<usize>,
    scheduled: Vec<bool>,
    best_value: i64,
    best_sequences: Vec<Vec<usize>>,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize, partial: i64) {
        if partial >= self.best_value {
            return;
        }
        if depth == self.instance.n {
            self.best_value = partial;
            self.best_sequences = self.sequences.clone();
            return;
        }
        self.nodes += 1;
        if self.nodes & 0xFFF == 0 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    self.timed_out = true;
                }
            }
        }
        if self.timed_out {
            return;
        }

        let usable = match self.sequences.iter().position(|s| s.is_empty()) {
            Some(first_empty) => (first_empty + 1).min(self.instance.m),
            None => self.instance.m,
        };
        for idx in 0..self.order.len() {
            let job = self.order[idx];
            if self.scheduled[job] {
                continue;
            }
            let spec = self.instance.job(job);
            for k in 0..usable {
                let (prev_avail, prev_last) = (self.avail[k], self.last[k]);
                let start = prev_avail + self.instance.setup_time(prev_last, job);
                let completion = start + processing_time(spec, start);
                let tardiness = (completion - spec.due_date).max(0);

                self.sequences[k].push(job);
                self.avail[k] = completion;
                self.last[k] = job;
                self.scheduled[job] = true;

                self.dfs(depth + 1, partial + tardiness);

                self.scheduled[job] = false;
                self.last[k] = prev_last;
                self.avail[k] = prev_avail;
                self.sequences[k].pop();

                if self.timed_out {
                    return;
                }
            }
        }
    }
}

/// Big constant of the mixed-integer model:
/// `max_j d_j + sum_j (a_j + b_j)`.
pub fn big_m(instance: &Instance) -> i64 {
    let max_due = instance.jobs.iter().map(|j| j.due_date).max().unwrap_or(0);
    let total: i64 = instance.jobs.iter().map(|j| j.basic_time + j.penalty).sum();
    max_due + total
}

/// One violated model constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MipViolation {
    /// Constraint family, e.g. `(8)` for machine precedence timing.
    pub constraint: String,
    pub detail: String,
}

impl std::fmt::Display for MipViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "constraint {}: {}", self.constraint, self.detail)
    }
}

/// Outcome of checking a schedule against the model constraints.
#[derive(Debug, Clone)]
pub struct MipReport {
    pub violations: Vec<MipViolation>,
    /// Objective value of the induced assignment.
    pub objective: i64,
    pub big_m: i64,
}

impl MipReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Builds the assignment induced by a schedule (sequencing binaries over the
/// dummy-framed job chains plus the schedule's start/completion/tardiness
/// values) and verifies every model constraint numerically. Violations are
/// reported, never thrown.
pub fn check_mip_feasibility(instance: &Instance, schedule: &Schedule) -> MipReport {
    let n = instance.n;
    let m = instance.m;
    let end = n + 1; // dummy tail job
    let big = big_m(instance);
    let mut violations = Vec::new();

    // Sequencing binaries: u contains (i, j, k) iff i immediately precedes j
    // on machine k (0-based machine index internally, reported 1-based).
    let mut u: HashSet<(usize, usize, usize)> = HashSet::new();
    for (k, seq) in schedule.machine_sequences.iter().enumerate() {
        let mut prev = 0usize;
        for &job in seq {
            u.insert((prev, job, k));
            prev = job;
        }
        u.insert((prev, end, k));
    }

    let start = |j: usize| schedule.start_of(j);
    let completion = |j: usize| schedule.completion_of(j);
    let tardy = |j: usize| schedule.tardiness_of(j);

    // (2) the step function links implied processing time to the start time
    for j in 1..=n {
        let implied = completion(j) - start(j);
        let expected = processing_time(instance.job(j), start(j));
        if implied != expected {
            violations.push(MipViolation {
                constraint: "(2)".into(),
                detail: format!(
                    "job {j}: completion - start = {implied}, step function gives {expected}"
                ),
            });
        }
    }
    // (3)/(4) each machine opens and closes with exactly one real job
    for k in 0..m {
        let first = (1..=n).filter(|&i| u.contains(&(0, i, k))).count();
        if first != 1 {
            violations.push(MipViolation {
                constraint: "(3)".into(),
                detail: format!("machine {}: {first} first jobs", k + 1),
            });
        }
        let last = (1..=n).filter(|&i| u.contains(&(i, end, k))).count();
        if last != 1 {
            violations.push(MipViolation {
                constraint: "(4)".into(),
                detail: format!("machine {}: {last} last jobs", k + 1),
            });
        }
    }
    // (5)/(6) every job has exactly one predecessor and one successor
    for j in 1..=n {
        let preds = (0..=n)
            .filter(|&i| i != j)
            .map(|i| (0..m).filter(|&k| u.contains(&(i, j, k))).count())
            .sum::<usize>();
        if preds != 1 {
            violations.push(MipViolation {
                constraint: "(5)".into(),
                detail: format!("job {j} has {preds} predecessors"),
            });
        }
        let succs = (1..=end)
            .filter(|&s| s != j)
            .map(|s| (0..m).filter(|&k| u.contains(&(j, s, k))).count())
            .sum::<usize>();
        if succs != 1 {
            violations.push(MipViolation {
                constraint: "(6)".into(),
                detail: format!("job {j} has {succs} successors"),
            });
        }
        for k in 0..m {
            if u.contains(&(j, j, k)) {
                violations.push(MipViolation {
                    constraint: "(u_jj)".into(),
                    detail: format!("job {j} precedes itself on machine {}", k + 1),
                });
            }
        }
    }
    // (7) first-job start times against the dummy setup
    for j in 1..=n {
        for k in 0..m {
            let indicator = i64::from(u.contains(&(0, j, k)));
            let bound = instance.setup_time(0, j) + big * (indicator - 1);
            if start(j) < bound {
                violations.push(MipViolation {
                    constraint: "(7)".into(),
                    detail: format!("job {j} on machine {}: start {} < {bound}", k + 1, start(j)),
                });
            }
        }
    }
    // (8) precedence timing between real jobs
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            for k in 0..m {
                let indicator = i64::from(u.contains(&(i, j, k)));
                let bound = completion(i) + instance.setup_time(i, j) + big * (indicator - 1);
                if start(j) < bound {
                    violations.push(MipViolation {
                        constraint: "(8)".into(),
                        detail: format!(
                            "jobs {i} -> {j} on machine {}: start {} < {bound}",
                            k + 1,
                            start(j)
                        ),
                    });
                }
            }
        }
    }
    // (9), (10), (12) timeline and non-negativity
    for j in 1..=n {
        let spec = instance.job(j);
        if completion(j) < start(j) + processing_time(spec, start(j)) {
            violations.push(MipViolation {
                constraint: "(9)".into(),
                detail: format!("job {j}: completion {} too early", completion(j)),
            });
        }
        if tardy(j) < completion(j) - spec.due_date {
            violations.push(MipViolation {
                constraint: "(10)".into(),
                detail: format!("job {j}: tardiness {} below lateness", tardy(j)),
            });
        }
        if start(j) < 0 || completion(j) < 0 || tardy(j) < 0 {
            violations.push(MipViolation {
                constraint: "(12)".into(),
                detail: format!("job {j}: negative time variable"),
            });
        }
    }

    let objective: i64 = (1..=n).map(tardy).sum();
    if objective != schedule.total_tardiness {
        violations.push(MipViolation {
            constraint: "(1)".into(),
            detail: format!(
                "objective {objective} != evaluator total {}",
                schedule.total_tardiness
            ),
        });
    }

    MipReport {
        violations,
        objective,
        big_m: big,
    }
}

/// Renders the full mixed-integer model in LP text format. The conditional
/// processing time is linearized with one auxiliary binary per job
/// (`y_j = 1` iff the job starts after its deteriorating date) using the
/// model's big constant; strictness of `s_j > h_j` relies on integer data
/// (`s_j >= h_j + 1`).
pub fn lp_model(instance: &Instance) -> String {
    let n = instance.n;
    let m = instance.m;
    let big = big_m(instance);
    let mut out = String::new();

    let _ = writeln!(
        out,
        "\\ Total-tardiness model for instance '{}' (n={}, m={}, M={})",
        instance.label, n, m, big
    );
    out.push_str("Minimize\n obj: ");
    out.push_str(
        &(1..=n)
            .map(|j| format!("T_{j}"))
            .collect::<Vec<_>>()
            .join(" + "),
    );
    out.push('\n');
    out.push_str("Subject To\n");

    // (3)/(4) dummy head and tail of each machine
    for k in 1..=m {
        let first = (1..=n)
            .map(|j| format!("u_0_{j}_{k}"))
            .collect::<Vec<_>>()
            .join(" + ");
        let _ = writeln!(out, " first_m{k}: {first} = 1");
    }
    for k in 1..=m {
        let last = (1..=n)
            .map(|i| format!("u_{i}_{}_{k}", n + 1))
            .collect::<Vec<_>>()
            .join(" + ");
        let _ = writeln!(out, " last_m{k}: {last} = 1");
    }
    // (5) one predecessor per job
    for j in 1..=n {
        let mut terms = Vec::new();
        for i in 0..=n {
            if i == j {
                continue;
            }
            for k in 1..=m {
                terms.push(format!("u_{i}_{j}_{k}"));
            }
        }
        let _ = writeln!(out, " pred_j{j}: {} = 1", terms.join(" + "));
    }
    // (6) one successor per job
    for i in 1..=n {
        let mut terms = Vec::new();
        for j in 1..=n + 1 {
            if j == i {
                continue;
            }
            for k in 1..=m {
                terms.push(format!("u_{i}_{j}_{k}"));
            }
        }
        let _ = writeln!(out, " succ_j{i}: {} = 1", terms.join(" + "));
    }
    // (7) first-job start bound (dummy setups are zero)
    for j in 1..=n {
        for k in 1..=m {
            let _ = writeln!(
                out,
                " open_j{j}_m{k}: s_{j} - {big} u_0_{j}_{k} >= {}",
                instance.setup_time(0, j) - big
            );
        }
    }
    // (8) machine precedence timing
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            for k in 1..=m {
                let _ = writeln!(
                    out,
                    " seq_j{i}_j{j}_m{k}: s_{j} - C_{i} - {big} u_{i}_{j}_{k} >= {}",
                    instance.setup_time(i, j) - big
                );
            }
        }
    }
    // (2) linearized step deterioration and (9) completion times
    for j in 1..=n {
        let job = instance.job(j);
        let _ = writeln!(
            out,
            " det_ub_j{j}: s_{j} - {big} y_{j} <= {}",
            job.deteriorating_date
        );
        let _ = writeln!(
            out,
            " det_lb_j{j}: s_{j} - {big} y_{j} >= {}",
            job.deteriorating_date + 1 - big
        );
        let _ = writeln!(
            out,
            " comp_j{j}: C_{j} - s_{j} - {} y_{j} >= {}",
            job.penalty, job.basic_time
        );
    }
    // (10) tardiness definition
    for j in 1..=n {
        let _ = writeln!(
            out,
            " tard_j{j}: T_{j} - C_{j} >= {}",
            -instance.job(j).due_date
        );
    }

    // (12) non-negative continuous variables
    out.push_str("Bounds\n");
    for j in 1..=n {
        let _ = writeln!(out, " s_{j} >= 0");
        let _ = writeln!(out, " C_{j} >= 0");
        let _ = writeln!(out, " T_{j} >= 0");
    }

    // (11) binaries
    out.push_str("Binaries\n");
    for k in 1..=m {
        for j in 1..=n {
            let _ = writeln!(out, " u_0_{j}_{k}");
        }
    }
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            for k in 1..=m {
                let _ = writeln!(out, " u_{i}_{j}_{k}");
            }
        }
    }
    for i in 1..=n {
        for k in 1..=m {
            let _ = writeln!(out, " u_{i}_{}_{k}", n + 1);
        }
    }
    for j in 1..=n {
        let _ = writeln!(out, " y_{j}");
    }
    out.push_str("End\n");
    out
}

/// Writes the LP model to a file.
pub fn export_lp(instance: &Instance, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, lp_model(instance))
}
