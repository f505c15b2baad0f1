//! Scheduling of step-deteriorating jobs on identical parallel machines with
//! sequence-dependent setup times, minimizing total tardiness.
//!
//! A job that starts after its deteriorating date takes its basic processing
//! time plus a penalty; switching between jobs on a machine costs a
//! sequence-dependent setup. Solutions are encoded as a single permutation of
//! the job ids and decoded by assigning each job in turn to the earliest
//! available machine.
//!
//! The crate provides:
//!
//! - [`instance`]: problem data types, validation, the random instance
//!   generator and JSON persistence;
//! - [`schedule`]: the permutation decoder and tardiness evaluation;
//! - [`mbhg`]: the constructive insertion heuristic used to seed populations;
//! - [`operators`]: discrete Levy-flight building blocks and order crossover;
//! - [`vnd`]: variable neighborhood descent over swap/insert/inverse moves;
//! - [`solvers`]: the hybrid discrete cuckoo search, its ablation without
//!   local search, and a VNS baseline;
//! - [`exact`]: branch and bound, a model constraint checker, and an
//!   LP-format exporter;
//! - [`bench`]: the replicated-experiment harness with RPD aggregation.

pub mod bench;
pub mod exact;
pub mod instance;
pub mod mbhg;
pub mod operators;
pub mod schedule;
pub mod solvers;
pub mod testing;
pub mod vnd;

pub use instance::{GeneratorConfig, Instance, IntervalClass, Job};
pub use schedule::{NestVector, Schedule};
pub use solvers::{HdcsParams, RunResult};
