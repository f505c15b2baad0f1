//! Shared fixtures for tests, benchmarks and documentation.

use crate::instance::{Instance, Job};

/// The six-job, two-machine worked example used throughout the test suite.
/// Decoding the permutation `[2, 6, 4, 1, 5, 3]` gives a total tardiness of
/// 65 with jobs 2, 4, 5 on machine 1 and jobs 6, 1, 3 on machine 2.
pub fn six_job_two_machine() -> Instance {
    let job = |id, a, d, h, b| Job {
        id,
        basic_time: a,
        due_date: d,
        deteriorating_date: h,
        penalty: b,
    };
    Instance {
        n: 6,
        m: 2,
        jobs: vec![
            job(1, 78, 85, 70, 18),
            job(2, 17, 48, 4, 33),
            job(3, 97, 229, 62, 1),
            job(4, 93, 133, 19, 17),
            job(5, 62, 220, 58, 40),
            job(6, 53, 75, 39, 31),
        ],
        setup: vec![
            vec![0, 0, 0, 0, 0, 0],
            vec![0, 9, 9, 5, 4, 6],
            vec![5, 0, 8, 2, 2, 5],
            vec![2, 6, 0, 5, 4, 7],
            vec![3, 5, 10, 0, 3, 9],
            vec![3, 10, 6, 9, 0, 5],
            vec![5, 8, 4, 8, 4, 0],
        ],
        label: "six-job-two-machine-example".into(),
    }
}
