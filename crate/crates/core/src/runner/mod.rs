//! Experiment execution: every (instance, solver, run) triple of a plan is run
//! once on a worker pool and persisted as it finishes.

mod plan;
mod store;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{tsplib, Instance};
use crate::solvers::{solve, TimeMode, TrajectoryRecorder};

pub use plan::{run_seed, ExperimentPlan, SolverSpec};
pub use store::{
    read_store, record_incumbent, replay_event_log, write_store, EventLog, Host, RunRecord,
    RunStatus,
};

pub const STORE_FILE: &str = "trajectories.jsonl";
pub const PLAN_FILE: &str = "plan.json";

/// Loads TSPLIB files; directories contribute their `.tsp` files in name order.
pub fn load_instances(paths: &[PathBuf]) -> Result<Vec<Instance>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "tsp"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    files.iter().map(|f| tsplib::read(f)).collect()
}

fn check_unique_ids(instances: &[Instance]) -> Result<()> {
    let mut seen = HashSet::new();
    for inst in instances {
        if !seen.insert(inst.id()) {
            return Err(Error::InvalidInput(format!(
                "duplicate instance id `{}`",
                inst.id()
            )));
        }
    }
    Ok(())
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".to_owned())
}

/// Runs one key, turning errors and panics into a crashed record.
fn execute(plan: &ExperimentPlan, inst: &Instance, spec: &SolverSpec, run: u32) -> RunRecord {
    let seed = run_seed(plan.base_seed, inst.id(), &spec.id, run);
    let cfg = spec.config.clone().with_seed(seed);
    let limits = plan.limits();
    let mut rec = TrajectoryRecorder::default();
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| solve(inst, &cfg, &limits, &mut rec)));
    let elapsed = start.elapsed().as_millis() as u64;
    let (status, events, error) = match outcome {
        Ok(Ok(traj)) => (RunStatus::Completed, traj.events, None),
        Ok(Err(e)) => (RunStatus::Crashed, rec.into_events(), Some(e.to_string())),
        Err(p) => (
            RunStatus::Crashed,
            rec.into_events(),
            Some(panic_message(&*p)),
        ),
    };
    if let Some(e) = &error {
        log::error!("run {} / {} / {run} crashed: {e}", inst.id(), spec.id);
    }
    RunRecord {
        plan: plan.id.clone(),
        instance: inst.id().to_owned(),
        group: inst.group(),
        n: inst.len(),
        solver: spec.id.clone(),
        run,
        seed,
        cutoff_ms: plan.cutoff_ms,
        time_mode: plan.time_mode,
        status,
        final_len: events.last().map(|e| e.length),
        events,
        overshoot_ms: match plan.time_mode {
            TimeMode::Wall => elapsed.saturating_sub(plan.cutoff_ms),
            TimeMode::Evals => 0,
        },
        error,
        host: Host::current(),
    }
}

/// Runs a plan into `dir`; see [`run_experiment_with`].
pub fn run_experiment(
    plan: &ExperimentPlan,
    instances: &[Instance],
    dir: &Path,
) -> Result<Vec<RunRecord>> {
    run_experiment_with(plan, instances, dir, |_| {})
}

/// Executes every missing run of `plan` and returns all records of the plan.
///
/// Records already present in `dir` are kept, so an interrupted plan resumes
/// where it stopped. New records are appended as they finish; at the end the
/// store is rewritten sorted by key. `on_record` sees each new record.
pub fn run_experiment_with(
    plan: &ExperimentPlan,
    instances: &[Instance],
    dir: &Path,
    mut on_record: impl FnMut(&RunRecord),
) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    check_unique_ids(instances)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let plan_path = dir.join(PLAN_FILE);
    let plan_json = serde_json::to_string_pretty(plan)? + "\n";
    if plan_path.exists() {
        let old = std::fs::read_to_string(&plan_path).map_err(|e| Error::io(&plan_path, e))?;
        let mut old: ExperimentPlan = serde_json::from_str(&old)?;
        // the worker count does not affect results
        old.jobs = plan.jobs;
        if old != *plan {
            return Err(Error::InvalidConfig(format!(
                "{} holds a different plan; use a fresh directory",
                dir.display()
            )));
        }
    }
    std::fs::write(&plan_path, plan_json).map_err(|e| Error::io(&plan_path, e))?;

    let store_path = dir.join(STORE_FILE);
    let mut records = if store_path.exists() {
        let existing = store::read_store_lenient(&store_path)?;
        write_store(&store_path, &existing)?;
        existing
    } else {
        Vec::new()
    };
    if let Some(r) = records.iter().find(|r| r.plan != plan.id) {
        return Err(Error::InvalidInput(format!(
            "store contains a record of plan `{}`",
            r.plan
        )));
    }
    let done: HashSet<(String, String, u32)> = records
        .iter()
        .map(|r| (r.instance.clone(), r.solver.clone(), r.run))
        .collect();

    let mut tasks = Vec::new();
    for inst in instances {
        for spec in &plan.solvers {
            for run in 0..plan.runs {
                if !done.contains(&(inst.id().to_owned(), spec.id.clone(), run)) {
                    tasks.push((inst, spec, run));
                }
            }
        }
    }
    log::info!(
        "plan {}: {} runs pending, {} already stored",
        plan.id,
        tasks.len(),
        records.len()
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let mut file = store::open_append(&store_path)?;
    let (tx, rx) = mpsc::channel::<RunRecord>();
    let written: Result<()> = std::thread::scope(|scope| {
        scope.spawn(move || {
            pool.install(|| {
                tasks
                    .par_iter()
                    .for_each_with(tx, |tx, &(inst, spec, run)| {
                        // the receiver only disappears if writing failed
                        let _ = tx.send(execute(plan, inst, spec, run));
                    })
            })
        });
        for rec in rx {
            store::append_record(&mut file, &store_path, &rec)?;
            on_record(&rec);
            records.push(rec);
        }
        Ok(())
    });
    written?;
    drop(file);

    write_store(&store_path, &records)?;
    records.sort_by(|a, b| a.key().cmp(&b.key()));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::test_util::random_instance;
    use crate::solvers::SolverConfig;

    fn plan(jobs: usize) -> ExperimentPlan {
        let mut p = ExperimentPlan::new(
            "t",
            vec![
                SolverSpec {
                    id: "ils".into(),
                    config: SolverConfig::ils(0),
                },
                SolverSpec {
                    id: "ga".into(),
                    config: SolverConfig::ga(0),
                },
            ],
            3,
            20,
        );
        p.time_mode = TimeMode::Evals;
        p.jobs = jobs;
        p
    }

    fn instances() -> Vec<Instance> {
        vec![
            random_instance(30, 1, 1000.0),
            random_instance(25, 2, 1000.0),
        ]
    }

    #[test]
    fn cardinality_and_parallel_determinism() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_experiment(&plan(1), &instances(), a.path()).unwrap();
        let rb = run_experiment(&plan(4), &instances(), b.path()).unwrap();
        assert_eq!(ra.len(), 2 * 2 * 3);
        assert_eq!(ra, rb);
        assert_eq!(
            std::fs::read(a.path().join(STORE_FILE)).unwrap(),
            std::fs::read(b.path().join(STORE_FILE)).unwrap()
        );
        assert!(ra
            .iter()
            .all(|r| r.status == RunStatus::Completed && !r.events.is_empty()));
    }

    #[test]
    fn resume_skips_existing_keys() {
        let dir = tempfile::tempdir().unwrap();
        let full = run_experiment(&plan(1), &instances(), dir.path()).unwrap();
        let store = dir.path().join(STORE_FILE);
        // keep half the lines plus a torn one, as after a crash
        let text = std::fs::read_to_string(&store).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let mut partial = lines[..6].join("\n");
        partial.push_str("\n{\"plan\":");
        std::fs::write(&store, partial).unwrap();
        let mut fresh = 0;
        let resumed =
            run_experiment_with(&plan(2), &instances(), dir.path(), |_| fresh += 1).unwrap();
        assert_eq!(fresh, 6);
        assert_eq!(resumed, full);
        assert_eq!(std::fs::read_to_string(&store).unwrap(), text);
        // a completed plan runs nothing
        let mut again = 0;
        run_experiment_with(&plan(1), &instances(), dir.path(), |_| again += 1).unwrap();
        assert_eq!(again, 0);
    }

    #[test]
    fn different_plan_in_same_directory_rejected() {
        let dir = tempfile::tempdir().unwrap();
        run_experiment(&plan(1), &instances()[..1], dir.path()).unwrap();
        let mut other = plan(1);
        other.cutoff_ms = 21;
        assert!(run_experiment(&other, &instances()[..1], dir.path()).is_err());
    }

    #[test]
    fn solver_errors_become_crashed_records() {
        let mut p = plan(1);
        p.solvers[0].config.neighbors = 0;
        // invalid configs are refused up front
        assert!(p.validate().is_err());
        let inst = random_instance(12, 3, 100.0);
        let spec = SolverSpec {
            id: "broken".into(),
            config: SolverConfig {
                neighbors: 0,
                ..SolverConfig::ils(0)
            },
        };
        let rec = execute(&plan(1), &inst, &spec, 0);
        assert_eq!(rec.status, RunStatus::Crashed);
        assert!(rec.error.is_some());
    }
}
