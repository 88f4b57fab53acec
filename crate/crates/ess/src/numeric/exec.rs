//! Task-parallel factorization: a coordinator thread drives worker threads
//! through the same decision epochs the virtual-clock simulator uses, so a
//! scheduling policy trained against the simulator plugs in unchanged.
//!
//! Each dispatched task is a burst: a maximal runnable prefix of one ready
//! component, truncated at the first frontal already in flight. The worker
//! eliminates the burst bottom-up, keeping contributions that stay inside
//! the burst local and returning the rest to the coordinator, which hands
//! them to whichever task later runs the parent. Every front therefore
//! assembles exactly the same inputs in exactly the same order as the serial
//! driver, and the numeric results are bit-identical for any core count and
//! any policy.
//!
//! Ownership of contribution blocks moves over channels: a block lives with
//! the coordinator between tasks and with exactly one worker during a task,
//! so there is no shared mutable numeric state at all.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc::{channel, Receiver, Sender, TryRecvError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedmdp::{apply_action, Action, EpochStats, SchedulePolicy, TaskTree};
use crate::sparse::CscMatrix;
use crate::symbolic::Analysis;

use super::front::{Contribution, FactorPlan};
use super::{
    build_factors, eliminate_one, FactorOptions, FrontFactor, LUFactors, ScheduleTrace, TraceRow,
};

/// One burst of frontals for a worker, with the external child contributions
/// it cannot produce itself.
struct Job<T> {
    task_id: usize,
    /// Ascending frontal ids; a contiguous runnable prefix of one component.
    frontals: Vec<usize>,
    /// Contributions of finished children outside the burst, by child id.
    inputs: Vec<(usize, Contribution<T>)>,
}

/// What a finished task sends back.
struct TaskOutput<T> {
    task_id: usize,
    fronts: Vec<(usize, FrontFactor<T>)>,
    /// Updates whose parent frontal lies outside the burst, by child id.
    external: Vec<(usize, Contribution<T>)>,
    /// High-water mark of front plus contribution bytes held by the worker.
    peak_bytes: u64,
}

fn run_job<T: Scalar>(plan: &FactorPlan<T>, job: Job<T>) -> Result<TaskOutput<T>> {
    let mut inputs: HashMap<usize, Contribution<T>> = job.inputs.into_iter().collect();
    let mut local: HashMap<usize, Contribution<T>> = HashMap::new();
    let mut fronts = Vec::with_capacity(job.frontals.len());
    let mut external = Vec::new();
    let mut cur: u64 = inputs.values().map(Contribution::bytes).sum();
    let mut peak = cur;
    for &f in &job.frontals {
        let kids: Vec<Contribution<T>> = plan.children[f]
            .iter()
            .map(|&c| {
                if job.frontals.binary_search(&c).is_ok() {
                    local.remove(&c).expect("in-burst child ran earlier")
                } else {
                    inputs.remove(&c).expect("external child was delivered")
                }
            })
            .collect();
        let kid_bytes: u64 = kids.iter().map(Contribution::bytes).sum();
        let (ff, upd, front_bytes) = eliminate_one(plan, f, &kids)?;
        peak = peak.max(cur + front_bytes);
        drop(kids);
        cur -= kid_bytes;
        if let Some(u) = upd {
            cur += u.bytes();
            peak = peak.max(cur);
            if job.frontals.binary_search(&plan.parent[f]).is_ok() {
                local.insert(f, u);
            } else {
                external.push((f, u));
            }
        }
        fronts.push((f, ff));
    }
    Ok(TaskOutput {
        task_id: job.task_id,
        fronts,
        external,
        peak_bytes: peak,
    })
}

fn worker_loop<T: Scalar>(
    plan: Arc<FactorPlan<T>>,
    jobs: Receiver<Job<T>>,
    results: Sender<(usize, Result<TaskOutput<T>>)>,
    wid: usize,
) {
    while let Ok(job) = jobs.recv() {
        let out = match catch_unwind(AssertUnwindSafe(|| run_job(&plan, job))) {
            Ok(res) => res,
            Err(payload) => {
                let msg = payload
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| payload.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "worker panicked".into());
                Err(Error::Worker(msg))
            }
        };
        if results.send((wid, out)).is_err() {
            break;
        }
    }
}

/// Per-epoch summary the scheduling environment turns into a reward.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub stats: EpochStats,
    pub done: bool,
}

/// A running parallel factorization, advanced one decision epoch at a time.
///
/// [`advance`](ParallelRun::advance) mirrors the simulator exactly: apply
/// the action, fill idle cores with maximal runnable bursts (ready
/// components in ascending root order, idle cores in ascending index order,
/// a burst truncated at the first in-flight frontal), then block until at
/// least one task finishes. Errors from workers abort the run; a run is only
/// harvestable through [`finish`](ParallelRun::finish) once
/// [`is_done`](ParallelRun::is_done).
pub struct ParallelRun<T: Scalar> {
    plan: Arc<FactorPlan<T>>,
    tree: TaskTree,
    in_flight: Vec<bool>,
    idle: Vec<bool>,
    /// Planned front-size estimate of each core's running burst; 0 if idle.
    burst_mem: Vec<u64>,
    outstanding: usize,
    store: Vec<Option<Contribution<T>>>,
    fronts: Vec<Option<FrontFactor<T>>>,
    rows: Vec<TraceRow>,
    job_txs: Vec<Sender<Job<T>>>,
    results_rx: Receiver<(usize, Result<TaskOutput<T>>)>,
    handles: Vec<JoinHandle<()>>,
    t0: Instant,
    last_epoch: Instant,
    peak_bytes: u64,
}

impl<T: Scalar> ParallelRun<T> {
    pub fn new(
        a: &CscMatrix<T>,
        an: &Analysis,
        opts: &FactorOptions,
        n_cores: usize,
    ) -> Result<ParallelRun<T>> {
        if n_cores == 0 {
            return Err(Error::InvalidSpec(
                "the executor needs at least one core".into(),
            ));
        }
        let plan = Arc::new(FactorPlan::new(a, an, opts)?);
        let nf = plan.n_frontals();
        let tree = an.task_tree();
        let (results_tx, results_rx) = channel();
        let mut job_txs = Vec::with_capacity(n_cores);
        let mut handles = Vec::with_capacity(n_cores);
        for wid in 0..n_cores {
            let (tx, rx) = channel();
            job_txs.push(tx);
            let plan = Arc::clone(&plan);
            let results = results_tx.clone();
            handles.push(std::thread::spawn(move || {
                worker_loop(plan, rx, results, wid)
            }));
        }
        let now = Instant::now();
        Ok(ParallelRun {
            plan,
            tree,
            in_flight: vec![false; nf],
            idle: vec![true; n_cores],
            burst_mem: vec![0; n_cores],
            outstanding: 0,
            store: (0..nf).map(|_| None).collect(),
            fronts: (0..nf).map(|_| None).collect(),
            rows: Vec::new(),
            job_txs,
            results_rx,
            handles,
            t0: now,
            last_epoch: now,
            peak_bytes: 0,
        })
    }

    pub fn tree(&self) -> &TaskTree {
        &self.tree
    }

    pub fn n_cores(&self) -> usize {
        self.idle.len()
    }

    pub fn idle_cores(&self) -> usize {
        self.idle.iter().filter(|&&i| i).count()
    }

    pub fn is_done(&self) -> bool {
        self.tree.is_terminal()
    }

    /// Largest concurrent planned-burst memory estimate seen so far.
    pub fn peak_bytes(&self) -> u64 {
        self.peak_bytes
    }

    fn now_us(&self) -> u64 {
        self.t0.elapsed().as_micros() as u64
    }

    /// One decision epoch: apply `action`, dispatch, wait for at least one
    /// completion and absorb everything that has finished.
    pub fn advance(&mut self, action: &Action) -> Result<EpochReport> {
        if self.is_done() {
            return Err(Error::InvalidAction(
                "the factorization is already complete".into(),
            ));
        }
        self.tree = apply_action(&self.tree, action)?;
        self.dispatch()?;

        // Sampled after dispatch, as in the simulator: bursts only start or
        // end at epoch boundaries, so this is the epoch's live maximum.
        let live: u64 = self.burst_mem.iter().sum();
        let busy: Vec<f64> = self
            .idle
            .iter()
            .map(|&i| if i { 0.0 } else { 1.0 })
            .collect();
        self.peak_bytes = self.peak_bytes.max(live);

        let (wid, out) = self
            .results_rx
            .recv()
            .map_err(|_| Error::Worker("all workers disconnected".into()))?;
        self.complete(wid, out?);
        loop {
            match self.results_rx.try_recv() {
                Ok((wid, out)) => self.complete(wid, out?),
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    return Err(Error::Worker("all workers disconnected".into()))
                }
            }
        }

        let now = Instant::now();
        let stats = EpochStats {
            elapsed_s: now.duration_since(self.last_epoch).as_secs_f64(),
            peak_bytes: live,
            busy,
        };
        self.last_epoch = now;
        Ok(EpochReport {
            stats,
            done: self.is_done(),
        })
    }

    fn dispatch(&mut self) -> Result<()> {
        let mut ready = self.tree.ready_components().into_iter();
        'cores: for i in 0..self.idle.len() {
            if !self.idle[i] {
                continue;
            }
            let burst = loop {
                let Some(root) = ready.next() else { break 'cores };
                let burst: Vec<usize> = self
                    .tree
                    .runnable_prefix(root)
                    .into_iter()
                    .take_while(|&f| !self.in_flight[f])
                    .collect();
                if !burst.is_empty() {
                    break burst;
                }
            };
            let mut inputs = Vec::new();
            for &f in &burst {
                for &c in &self.plan.children[f] {
                    if burst.binary_search(&c).is_err() {
                        let kid = self.store[c]
                            .take()
                            .expect("external children finished before dispatch");
                        inputs.push((c, kid));
                    }
                }
            }
            let mem = burst
                .iter()
                .map(|&f| self.plan.front_bytes[f])
                .max()
                .unwrap_or(0);
            let task_id = self.rows.len();
            self.rows.push(TraceRow {
                task_id,
                frontals: burst.clone(),
                core: i,
                t_start_us: self.now_us(),
                t_end_us: 0,
                peak_bytes: 0,
            });
            for &f in &burst {
                self.in_flight[f] = true;
            }
            self.idle[i] = false;
            self.burst_mem[i] = mem;
            self.outstanding += 1;
            let job = Job {
                task_id,
                frontals: burst,
                inputs,
            };
            if self.job_txs[i].send(job).is_err() {
                return Err(Error::Worker(format!("worker {i} is gone")));
            }
        }
        Ok(())
    }

    fn complete(&mut self, wid: usize, out: TaskOutput<T>) {
        let t_end = self.now_us();
        self.idle[wid] = true;
        self.burst_mem[wid] = 0;
        self.outstanding -= 1;
        let row = &mut self.rows[out.task_id];
        row.t_end_us = t_end.max(row.t_start_us);
        row.peak_bytes = out.peak_bytes;
        for (f, ff) in out.fronts {
            self.fronts[f] = Some(ff);
            self.in_flight[f] = false;
            self.tree.mark_done(f);
        }
        for (f, c) in out.external {
            self.store[f] = Some(c);
        }
    }

    /// Harvests a completed run into factors and the execution trace.
    pub fn finish(mut self) -> Result<(LUFactors<T>, ScheduleTrace)> {
        if !self.is_done() {
            return Err(Error::InvalidAction(
                "the factorization is not complete".into(),
            ));
        }
        let fronts: Vec<FrontFactor<T>> = self
            .fronts
            .iter_mut()
            .map(|s| s.take().expect("a finished run has every front"))
            .collect();
        let lu = build_factors(&self.plan, fronts)?;
        let trace = ScheduleTrace {
            rows: std::mem::take(&mut self.rows),
        };
        Ok((lu, trace))
    }
}

impl<T: Scalar> Drop for ParallelRun<T> {
    fn drop(&mut self) {
        // Closing the job channels ends the worker loops; sends from workers
        // still draining never block (the results channel is unbounded), so
        // the joins cannot deadlock.
        self.job_txs.clear();
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
    }
}

/// Runs `policy` to completion on real threads and returns the factors with
/// the schedule trace. The factors are bit-identical to
/// [`serial_factor`](super::serial_factor) for every core count and policy.
pub fn parallel_factor<T: Scalar, P: SchedulePolicy + ?Sized>(
    a: &CscMatrix<T>,
    an: &Analysis,
    opts: &FactorOptions,
    n_cores: usize,
    policy: &mut P,
) -> Result<(LUFactors<T>, ScheduleTrace)> {
    let mut run = ParallelRun::new(a, an, opts, n_cores)?;
    while !run.is_done() {
        let action = policy.decide(&run.tree, n_cores, run.idle_cores());
        run.advance(&action)?;
    }
    run.finish()
}
