//! Constructive seeding heuristic.
//!
//! Jobs are listed in ascending order of the weighted key
//! `omega * due_date + (1 - omega) * deteriorating_date`, the first `m` jobs
//! open the machines, and every further job is tried at every insertion
//! position of every machine, committing the cheapest trial. Sweeping the
//! weight and keeping the best result yields one high-quality member for the
//! initial population.

use crate::instance::Instance;
use crate::schedule::{self, Schedule};

/// Outcome of one heuristic run: the schedule, the weight that produced it
/// and its total tardiness.
#[derive(Debug, Clone)]
pub struct MbhgResult {
    pub schedule: Schedule,
    pub omega: f64,
    pub value: i64,
}

/// Runs the heuristic for a single weight `omega` in (0, 1).
///
/// Insertion trials walk machines in index order and positions from after
/// the last job backwards to before the first; a trial replaces the incumbent
/// only when strictly cheaper, so the earliest-evaluated trial wins ties.
pub fn mbhg_single(instance: &Instance, omega: f64) -> MbhgResult {
    assert!(omega > 0.0 && omega < 1.0, "omega must lie in (0, 1)");
    let n = instance.n;
    let m = instance.m;

    let mut order: Vec<usize> = (1..=n).collect();
    order.sort_by(|&x, &y| {
        let key = |id: usize| {
            let job = instance.job(id);
            omega * job.due_date as f64 + (1.0 - omega) * job.deteriorating_date as f64
        };
        key(x)
            .partial_cmp(&key(y))
            .expect("finite keys")
            .then(x.cmp(&y))
    });

    let mut machines: Vec<Vec<usize>> = vec![Vec::new(); m];
    let head = n.min(m);
    for k in 0..head {
        machines[k].push(order[k]);
    }
    let mut machine_cost: Vec<i64> = machines
        .iter()
        .map(|seq| schedule::sequence_tardiness(instance, seq))
        .collect();

    let mut trial = Vec::with_capacity(n);
    for &job in &order[head..] {
        let total: i64 = machine_cost.iter().sum();
        let mut best: Option<(i64, usize, usize)> = None;
        for k in 0..m {
            let seq = &machines[k];
            for pos in (0..=seq.len()).rev() {
                trial.clear();
                trial.extend_from_slice(&seq[..pos]);
                trial.push(job);
                trial.extend_from_slice(&seq[pos..]);
                let cost = total - machine_cost[k] + schedule::sequence_tardiness(instance, &trial);
                if best.is_none_or(|(b, _, _)| cost < b) {
                    best = Some((cost, k, pos));
                }
            }
        }
        let (_, k, pos) = best.expect("at least one machine");
        machines[k].insert(pos, job);
        machine_cost[k] = schedule::sequence_tardiness(instance, &machines[k]);
    }

    let schedule =
        schedule::schedule_from_sequences(instance, &machines).expect("heuristic covers all jobs");
    MbhgResult {
        value: schedule.total_tardiness,
        omega,
        schedule,
    }
}

/// Sweeps the weight over `0.1, 0.2, ..., 0.9` and returns the cheapest
/// result, preferring the smaller weight on ties.
pub fn mbhg(instance: &Instance) -> MbhgResult {
    (1..=9)
        .map(|i| mbhg_single(instance, i as f64 / 10.0))
        .reduce(|best, cand| if cand.value < best.value { cand } else { best })
        .expect("non-empty sweep")
}
