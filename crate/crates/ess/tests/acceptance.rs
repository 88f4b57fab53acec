//! Acceptance suite: the eight headline guarantees this project commits to,
//! one test per criterion. Every test prints a single
//! `criterion N (<name>): PASS/SKIP ...` line (visible under --nocapture)
//! and asserts the same condition, so a red run always names the criterion
//! that broke. Tolerances and budgets are pinned here, not derived from the
//! implementation.

mod common;

use std::time::Instant;

use common::*;
use ess::matgen::{generate, BlockTemplate, GenSpec, PatternSpec};
use ess::qlearn::sim::{simulate_policy, SimConfig, SimProblem};
use ess::qlearn::{
    train, train_env, ActionClass, EpisodeEnv, Hyper, LearnedPolicy, QTable, TrainOptions,
    UpdateTarget,
};
use ess::schedmdp::{apply_action, Action, SerialPolicy, StateKey, StaticPolicy};
use ess::sparse::io::save_matrix_market;
use ess::symbolic::{elimination_tree, frontal_workloads, symbolic_fill, Ordering};
use ess::{
    analyze, analyze_blocked, par_solve, parallel_factor, residual_norm, save_qtable,
    serial_factor, solve, AnalyzeOptions, CscMatrix64, FactorOptions,
};

const RESIDUAL_TOL: f64 = 1e-10;

fn banded(size: usize, bandwidth: usize, count: usize) -> BlockTemplate {
    BlockTemplate {
        size,
        pattern: PatternSpec::Banded { bandwidth },
        value_range: (0.5, 1.5),
        count,
    }
}

fn dense(size: usize, count: usize) -> BlockTemplate {
    BlockTemplate {
        size,
        pattern: PatternSpec::Dense,
        value_range: (0.5, 1.5),
        count,
    }
}

/// An arrowhead block: every off-diagonal entry sits in the first row or
/// column.
fn arrow(size: usize, count: usize) -> BlockTemplate {
    let entries = (1..size).flat_map(|i| [(i, 0), (0, i)]).collect();
    BlockTemplate {
        size,
        pattern: PatternSpec::Explicit { entries },
        value_range: (0.5, 1.5),
        count,
    }
}

/// A varied synthetic power-system spec aiming near `target` unknowns.
/// Deterministic in (slot, seed); families rotate over block shapes.
fn shaped_spec(slot: usize, target: usize, seed: u64) -> GenSpec {
    let network = 50 + 10 * (slot % 5);
    let body = target.saturating_sub(network).max(64);
    let templates = match slot % 4 {
        0 => vec![banded(16, 2, body.div_ceil(16))],
        1 => vec![dense(10, body.div_ceil(10))],
        2 => vec![banded(24, 1, body.div_ceil(48)), dense(8, body.div_ceil(16))],
        _ => vec![arrow(12, body.div_ceil(24)), banded(12, 3, body.div_ceil(24))],
    };
    GenSpec {
        templates,
        network_size: network,
        coupling_density: 0.3,
        network_value_range: (0.5, 1.5),
        seed,
    }
}

fn gen_matrix(spec: &GenSpec) -> CscMatrix64 {
    generate::<f64>(spec).expect("spec generates").0
}

// -------------------------------------------------------------------------
// 1. Correctness suite: 20 generated systems, residual at most 1e-10 each,
//    within a 2 minute budget.
// -------------------------------------------------------------------------

#[test]
fn criterion_1_correctness_suite() {
    let t0 = Instant::now();
    let mut max_residual: f64 = 0.0;
    let mut sizes = Vec::new();
    for i in 0..20 {
        let target = 500 + 150 * i;
        let spec = shaped_spec(i, target, 900 + i as u64);
        let a = gen_matrix(&spec);
        assert!(
            (500..=10_000).contains(&a.n()),
            "suite matrix {i} has n = {} outside [500, 10000]",
            a.n()
        );
        sizes.push(a.n());
        let an = analyze(&a, &AnalyzeOptions::default()).expect("analyzable");
        let lu = serial_factor(&a, &an, &FactorOptions::default()).expect("factors");
        let b = random_vector(a.n(), 4000 + i as u64);
        let x = solve(&lu, &b).expect("solves");
        let r = residual_norm(&a, &x, &b);
        assert!(
            r <= RESIDUAL_TOL,
            "matrix {i} (n = {}) residual {r:.3e} exceeds {RESIDUAL_TOL:e}",
            a.n()
        );
        max_residual = max_residual.max(r);
    }
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(
        elapsed <= 120.0,
        "suite took {elapsed:.1} s, over the 120 s budget"
    );
    println!(
        "criterion 1 (correctness suite): PASS; 20 matrices, n {}..{}, max residual {:.3e}, {:.1} s of 120 s budget",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap(),
        max_residual,
        elapsed
    );
}

// -------------------------------------------------------------------------
// 2. Symbolic analysis equals dense boolean elimination on 200 random
//    50-by-50 patterns, exactly, within 10 seconds.
// -------------------------------------------------------------------------

#[test]
fn criterion_2_symbolic_matches_dense_elimination() {
    let t0 = Instant::now();
    let densities = [0.04, 0.06, 0.08, 0.12];
    for case in 0..200u64 {
        let density = densities[case as usize % densities.len()];
        let pattern = random_symmetric_pattern(50, density, case);
        let a = matrix_from_pattern(&pattern, 10_000 + case);

        let tree = elimination_tree(&a).expect("tree builds");
        assert_eq!(
            tree.as_slice(),
            dense_etree(&pattern).as_slice(),
            "elimination tree differs on case {case}"
        );

        let fill = symbolic_fill(&a, &tree).expect("fill builds");
        let expected = dense_l_structs(&dense_symbolic_fill(&pattern));
        for j in 0..50 {
            assert_eq!(
                fill.col_struct(j),
                expected[j].as_slice(),
                "column {j} structure differs on case {case}"
            );
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed <= 10.0, "took {elapsed:.1} s, over the 10 s budget");
    println!(
        "criterion 2 (symbolic oracle equivalence): PASS; 200 patterns exact, {elapsed:.1} s of 10 s budget"
    );
}

// -------------------------------------------------------------------------
// 3. The 11-column worked example: the frozen frontal partition comes out of
//    detect_frontals, and single Delete actions reproduce the three printed
//    task splits as the ready tasks of the resulting trees.
// -------------------------------------------------------------------------

fn ready_tasks(t: &ess::schedmdp::TaskTree) -> Vec<Vec<usize>> {
    t.ready_components()
        .into_iter()
        .map(|r| t.runnable_prefix(r))
        .collect()
}

#[test]
fn criterion_3_eleven_column_example() {
    let a = fixture11_position_matrix(5);
    let an = analyze(
        &a,
        &AnalyzeOptions {
            ordering: Ordering::Natural,
            relax: 0,
        },
    )
    .expect("fixture analyzes");

    let expected: Vec<Vec<usize>> = FIXTURE11_FRONTALS.iter().map(|f| f.to_vec()).collect();
    assert_eq!(an.frontals.groups(), expected, "frontal partition differs");
    assert_eq!(
        an.frontals.parents(&an.etree),
        FIXTURE11_FRONTAL_PARENT.to_vec(),
        "frontal tree differs"
    );
    assert_eq!(
        frontal_workloads(&an.frontals, &an.fill),
        FIXTURE11_WORKLOADS.to_vec(),
        "frontal workloads differ"
    );

    // Frontal ids: 0 {1}, 1 {2,3}, 2 {4}, 3 {5}, 4 {6}, 5 {7,9}, 6 {8},
    // 7 {10,11} in one-based column labels. Edges are named by child id.
    let t0 = an.task_tree();

    // Two tasks: cut the two edges into the root.
    let t1 = apply_action(&t0, &Action::delete(vec![5, 6])).unwrap();
    assert_eq!(
        ready_tasks(&t1),
        vec![vec![0, 2, 4, 5], vec![1, 3, 6]],
        "first split: two parallel tasks"
    );

    // Three tasks: cut the edges under frontal 6 and the edge above it.
    let t2 = apply_action(&t0, &Action::delete(vec![1, 3, 6])).unwrap();
    assert_eq!(
        ready_tasks(&t2),
        vec![vec![1], vec![3], vec![0, 2, 4, 5]],
        "second split: three parallel tasks"
    );

    // Four tasks: cut all four leaf edges.
    let t3 = apply_action(&t0, &Action::delete(vec![0, 1, 2, 3])).unwrap();
    assert_eq!(
        ready_tasks(&t3),
        vec![vec![0], vec![1], vec![2], vec![3]],
        "third split: four parallel tasks"
    );

    // The advertised way back: from the three-task tree, re-attach the two
    // leaf edges and cut the heavy subtree loose; that is exactly the
    // two-task tree.
    let back = apply_action(&t2, &Action::add(vec![1, 3])).unwrap();
    let back = apply_action(&back, &Action::delete(vec![5])).unwrap();
    assert_eq!(back, t1, "add then delete recovers the two-task split");

    println!(
        "criterion 3 (worked 11-column example): PASS; partition, tree, workloads and all three task splits match"
    );
}

// -------------------------------------------------------------------------
// 4. Tabular Q-learning on an explicit 5-state MDP converges to the value
//    iteration fixed point within 1e-3 inside 10^4 episodes and 30 seconds.
// -------------------------------------------------------------------------

/// Deterministic 5-state chain with two actions per state. Action values
/// differ enough that the greedy policy is nontrivial; every transition row
/// is a valid (degenerate) distribution.
struct ToyChain {
    state: usize,
}

impl ToyChain {
    const TERMINAL: usize = 4;
    /// step: advance one state.
    const STEP_REWARD: [f64; 4] = [-1.0, -2.0, -1.5, -0.5];
    /// leap: advance two states (clamped to the terminal).
    const LEAP_REWARD: [f64; 4] = [-2.2, -2.8, -1.2, -0.6];

    fn key(s: usize) -> StateKey {
        StateKey([s as u32, 0, 0, 0])
    }

    fn mdp(gamma: f64) -> ExplicitMdp {
        let n = 5;
        let mut transition = vec![vec![vec![0.0; n]; n]; 2];
        let mut reward = vec![vec![0.0; n]; 2];
        for s in 0..4 {
            transition[0][s][s + 1] = 1.0;
            reward[0][s] = Self::STEP_REWARD[s];
            transition[1][s][(s + 2).min(Self::TERMINAL)] = 1.0;
            reward[1][s] = Self::LEAP_REWARD[s];
        }
        // Terminal self-loops keep every row a distribution.
        for a in 0..2 {
            transition[a][Self::TERMINAL][Self::TERMINAL] = 1.0;
        }
        ExplicitMdp {
            transition,
            reward,
            terminal: vec![false, false, false, false, true],
            gamma,
        }
    }
}

impl EpisodeEnv for ToyChain {
    fn reset(&mut self, _episode: usize) -> ess::Result<StateKey> {
        self.state = 0;
        Ok(Self::key(0))
    }

    fn available(&self) -> Vec<ActionClass> {
        vec![ActionClass::DeleteHeaviest1, ActionClass::Skip]
    }

    fn step(&mut self, a: ActionClass) -> ess::Result<(f64, StateKey, bool)> {
        let s = self.state;
        let (next, r) = match a {
            ActionClass::DeleteHeaviest1 => (s + 1, ToyChain::STEP_REWARD[s]),
            ActionClass::Skip => ((s + 2).min(Self::TERMINAL), ToyChain::LEAP_REWARD[s]),
            other => {
                return Err(ess::Error::InvalidAction(format!(
                    "toy chain has no action {other:?}"
                )))
            }
        };
        self.state = next;
        Ok((r, Self::key(next), next == Self::TERMINAL))
    }
}

#[test]
fn criterion_4_q_learning_convergence() {
    let t0 = Instant::now();
    let gamma = 0.95;
    let mdp = ToyChain::mdp(gamma);
    mdp.assert_row_stochastic();
    let qstar = mdp.value_iteration(1e-12);

    let hyper = Hyper {
        alpha: 0.2,
        gamma,
        epsilon: 0.5,
    };
    let mut table = QTable::new(hyper, Default::default()).unwrap();
    let mut env = ToyChain { state: 0 };
    let episodes = 10_000;
    train_env(
        &mut table,
        &mut env,
        &TrainOptions {
            episodes,
            seed: 42,
            target: UpdateTarget::Max,
            // Slow decay: the deterministic chain needs persistent updates,
            // not variance damping.
            alpha_decay_scale: episodes as f64,
        },
    )
    .unwrap();

    let classes = [ActionClass::DeleteHeaviest1, ActionClass::Skip];
    let mut max_err: f64 = 0.0;
    for s in 0..4 {
        for (ai, &class) in classes.iter().enumerate() {
            let learned = table.q(ToyChain::key(s), class);
            max_err = max_err.max((learned - qstar[s][ai]).abs());
        }
    }
    for &class in &classes {
        assert_eq!(
            table.q(ToyChain::key(ToyChain::TERMINAL), class),
            0.0,
            "terminal values stay zero"
        );
    }
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(
        max_err <= 1e-3,
        "max |Q - Q*| = {max_err:.2e} exceeds 1e-3 after {episodes} episodes"
    );
    assert!(elapsed <= 30.0, "took {elapsed:.1} s, over the 30 s budget");
    println!(
        "criterion 4 (Q-learning convergence): PASS; max |Q - Q*| = {max_err:.2e} after {episodes} episodes, {elapsed:.1} s of 30 s budget"
    );
}

// -------------------------------------------------------------------------
// 5. Parallel scaling on 8 equal independent blocks of at least 5M flops
//    total: factor speedup at least 1.5 at 2 threads and 2.0 at 4 threads,
//    solve speedup at least 1.2 at 4 threads. The timing half needs 4
//    hardware threads; on smaller machines it is reported as SKIP and the
//    schedule-independence half still runs.
// -------------------------------------------------------------------------

#[test]
fn criterion_5_parallel_scaling() {
    let spec = GenSpec {
        templates: vec![dense(130, 8)],
        network_size: 0,
        coupling_density: 0.0,
        network_value_range: (0.5, 1.5),
        seed: 77,
    };
    let a = gen_matrix(&spec);
    assert_eq!(a.n(), 1040);
    let an = analyze(&a, &AnalyzeOptions::default()).expect("analyzable");
    let flops: u64 = frontal_workloads(&an.frontals, &an.fill).iter().sum();
    assert!(
        flops >= 5_000_000,
        "workload {flops} below the 5M flop floor"
    );

    let opts = FactorOptions::default();
    let serial = serial_factor(&a, &an, &opts).expect("serial factors");
    let b = random_vector(a.n(), 505);
    let x_serial = solve(&serial, &b).expect("serial solves");

    // Schedule independence: any worker count and policy produces the exact
    // same factors and solution.
    for threads in [1usize, 2, 4] {
        let (lu, trace) = parallel_factor(&a, &an, &opts, threads, &mut StaticPolicy)
            .expect("parallel factors");
        assert_eq!(lu, serial, "factors differ at {threads} threads");
        assert_eq!(
            par_solve(&lu, &b, threads).expect("parallel solves"),
            x_serial,
            "solution differs at {threads} threads"
        );
        if threads == 4 {
            let cores: std::collections::BTreeSet<usize> =
                trace.rows.iter().map(|r| r.core).collect();
            assert!(
                cores.len() >= 2,
                "4-thread run kept every task on one core"
            );
            assert!(trace.rows.len() >= 8, "independent blocks were not split");
        }
    }

    let hw = std::thread::available_parallelism().map_or(1, |p| p.get());
    if hw < 4 {
        println!(
            "criterion 5 (parallel scaling): SKIP timing half ({hw} hardware thread(s) < 4); schedule-independence half PASS"
        );
        return;
    }

    let time_factor = |threads: usize| -> f64 {
        let mut samples: Vec<f64> = (0..3)
            .map(|_| {
                let t = Instant::now();
                if threads == 1 {
                    serial_factor(&a, &an, &opts).expect("factors");
                } else {
                    parallel_factor(&a, &an, &opts, threads, &mut StaticPolicy).expect("factors");
                }
                t.elapsed().as_secs_f64()
            })
            .collect();
        samples.sort_by(|x, y| x.partial_cmp(y).unwrap());
        samples[1]
    };
    let time_solve = |threads: usize, lu: &ess::LUFactors64| -> f64 {
        let mut samples: Vec<f64> = (0..3)
            .map(|_| {
                let t = Instant::now();
                par_solve(lu, &b, threads).expect("solves");
                t.elapsed().as_secs_f64()
            })
            .collect();
        samples.sort_by(|x, y| x.partial_cmp(y).unwrap());
        samples[1]
    };

    let t1 = time_factor(1);
    let t2 = time_factor(2);
    let t4 = time_factor(4);
    let s2 = t1 / t2;
    let s4 = t1 / t4;
    let solve1 = time_solve(1, &serial);
    let solve4 = time_solve(4, &serial);
    let ss4 = solve1 / solve4;
    assert!(s2 >= 1.5, "2-thread factor speedup {s2:.2} below 1.5");
    assert!(s4 >= 2.0, "4-thread factor speedup {s4:.2} below 2.0");
    assert!(ss4 >= 1.2, "4-thread solve speedup {ss4:.2} below 1.2");
    println!(
        "criterion 5 (parallel scaling): PASS; factor x{s2:.2} at 2 threads, x{s4:.2} at 4 threads, solve x{ss4:.2} at 4 threads"
    );
}

// -------------------------------------------------------------------------
// 6. The learned policy's simulated makespan beats or ties the static
//    level-order policy on at least 60% of 20 held-out systems at 4 cores
//    and is never more than 1.2 times worse, inside 5 minutes.
// -------------------------------------------------------------------------

#[test]
fn criterion_6_learned_policy_benefit() {
    let t0 = Instant::now();
    let cores = 4;
    let train_corpus: Vec<CscMatrix64> = (0..20)
        .map(|i| gen_matrix(&shaped_spec(i, 320 + 25 * i, 300 + i as u64)))
        .collect();
    let heldout: Vec<CscMatrix64> = (0..20)
        .map(|i| gen_matrix(&shaped_spec(i + 2, 340 + 25 * i, 400 + i as u64)))
        .collect();

    let cfg = SimConfig::default();
    let outcome = train(
        &train_corpus,
        cores,
        Hyper::default(),
        &cfg,
        &TrainOptions {
            episodes: 4000,
            seed: 7,
            ..TrainOptions::default()
        },
        &AnalyzeOptions::default(),
    )
    .expect("training runs");
    assert!(outcome.skipped.is_empty(), "corpus fully analyzable");
    let table = outcome.table;
    assert!(!table.is_empty(), "training visited no states");

    let mut wins = 0;
    let mut beats_serial = 0;
    let mut worst_ratio: f64 = 0.0;
    for (i, m) in heldout.iter().enumerate() {
        let an = analyze(m, &AnalyzeOptions::default()).expect("analyzable");
        let problem = SimProblem::from_analysis(&an);
        let learned = simulate_policy(&problem, cores, &cfg, &mut LearnedPolicy::new(&table))
            .expect("learned run");
        let static_ = simulate_policy(&problem, cores, &cfg, &mut StaticPolicy)
            .expect("static run");
        let serial = simulate_policy(&problem, cores, &cfg, &mut SerialPolicy)
            .expect("serial run");
        let ratio = learned.makespan_units as f64 / static_.makespan_units as f64;
        if learned.makespan_units <= static_.makespan_units {
            wins += 1;
        }
        if learned.makespan_units < serial.makespan_units {
            beats_serial += 1;
        }
        worst_ratio = worst_ratio.max(ratio);
        assert!(
            ratio <= 1.2,
            "held-out {i}: learned makespan {} vs static {} (ratio {ratio:.3} > 1.2)",
            learned.makespan_units,
            static_.makespan_units
        );
    }
    // Guards the comparison against being vacuous: ties with static only
    // count for something if the learned policy actually parallelizes.
    assert!(
        beats_serial >= 10,
        "learned policy beat the serial makespan on only {beats_serial}/20 systems"
    );
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(
        wins * 100 >= 60 * 20,
        "learned policy matched static on only {wins}/20 held-out systems"
    );
    assert!(elapsed <= 300.0, "took {elapsed:.1} s, over the 300 s budget");
    println!(
        "criterion 6 (learned policy benefit): PASS; {wins}/20 at or under static makespan, {beats_serial}/20 under serial, worst ratio {worst_ratio:.3}, {elapsed:.1} s of 300 s budget"
    );
}

// -------------------------------------------------------------------------
// 7. Block reuse: 100 diagonal blocks stamped from 2 templates cost exactly
//    2 block-local symbolic analyses.
// -------------------------------------------------------------------------

#[test]
fn criterion_7_block_reuse() {
    let spec = GenSpec {
        templates: vec![banded(8, 2, 60), dense(10, 40)],
        network_size: 50,
        coupling_density: 0.2,
        network_value_range: (0.5, 1.5),
        seed: 11,
    };
    let a = gen_matrix(&spec);
    let blocked =
        analyze_blocked(&a, 50, &AnalyzeOptions::default(), true).expect("blocked analysis");
    assert_eq!(blocked.map.n_blocks(), 100, "block discovery");
    assert_eq!(blocked.plan.n_groups(), 2, "structure grouping");
    assert_eq!(
        blocked.block_analyses, 2,
        "one symbolic analysis per template"
    );
    println!(
        "criterion 7 (block reuse): PASS; 100 blocks, 2 structure groups, 2 block analyses"
    );
}

// -------------------------------------------------------------------------
// 8. Determinism: identical seeds and inputs give byte-identical Q-table
//    files and generated matrices, and bit-identical factor values, at any
//    worker count.
// -------------------------------------------------------------------------

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();

    // Generated matrices: same spec, same bytes on disk.
    let spec = shaped_spec(1, 600, 707);
    let (m1, _) = generate::<f64>(&spec).unwrap();
    let (m2, _) = generate::<f64>(&spec).unwrap();
    save_matrix_market(&m1, dir.path().join("a1.mtx")).unwrap();
    save_matrix_market(&m2, dir.path().join("a2.mtx")).unwrap();
    let bytes1 = std::fs::read(dir.path().join("a1.mtx")).unwrap();
    assert_eq!(
        bytes1,
        std::fs::read(dir.path().join("a2.mtx")).unwrap(),
        "generated matrix files differ"
    );

    // Q-table files: same corpus, seed and hyperparameters, same bytes.
    let corpus: Vec<CscMatrix64> = (0..3)
        .map(|i| gen_matrix(&shaped_spec(i, 260, 700 + i as u64)))
        .collect();
    let opts = TrainOptions {
        episodes: 300,
        seed: 9,
        ..TrainOptions::default()
    };
    let cfg = SimConfig::default();
    let table1 = train(&corpus, 4, Hyper::default(), &cfg, &opts, &AnalyzeOptions::default())
        .unwrap()
        .table;
    let table2 = train(&corpus, 4, Hyper::default(), &cfg, &opts, &AnalyzeOptions::default())
        .unwrap()
        .table;
    save_qtable(&table1, &dir.path().join("q1.json")).unwrap();
    save_qtable(&table2, &dir.path().join("q2.json")).unwrap();
    let qbytes = std::fs::read(dir.path().join("q1.json")).unwrap();
    assert_eq!(
        qbytes,
        std::fs::read(dir.path().join("q2.json")).unwrap(),
        "q-table files differ"
    );

    // Factor values: repeat runs and worker counts all agree bitwise.
    let an = analyze(&m1, &AnalyzeOptions::default()).unwrap();
    let fopts = FactorOptions::default();
    let serial = serial_factor(&m1, &an, &fopts).unwrap();
    let (p1, _) = parallel_factor(&m1, &an, &fopts, 4, &mut StaticPolicy).unwrap();
    let (p2, _) = parallel_factor(&m1, &an, &fopts, 4, &mut StaticPolicy).unwrap();
    let (p3, _) = parallel_factor(&m1, &an, &fopts, 2, &mut LearnedPolicy::new(&table1)).unwrap();
    let (p4, _) = parallel_factor(&m1, &an, &fopts, 1, &mut SerialPolicy).unwrap();
    assert_eq!(p1, p2, "repeat 4-thread runs differ");
    assert_eq!(p1, serial, "4-thread factors differ from serial");
    assert_eq!(p3, serial, "learned-policy factors differ from serial");
    assert_eq!(p4, serial, "1-thread factors differ from serial");
    let b = random_vector(m1.n(), 17);
    assert_eq!(
        par_solve(&serial, &b, 4).unwrap(),
        solve(&serial, &b).unwrap(),
        "parallel solve differs from serial"
    );

    println!(
        "criterion 8 (determinism): PASS; matrix files, q-table files and factor values are identical across runs and worker counts"
    );
}
