//! Runs, lockstep batches, the multi-case suite and step-size grid search.
//!
//! Streams: the problem comes from `case_seed`; worker `i` draws its noise
//! from `RandomStream::derive(noise_seed, i)`; stochastic quantizers use
//! `derive(noise_seed, WORKER_QUANT + i)` and `derive(noise_seed, SERVER_QUANT)`.
//! Noise never depends on the iterate, so configs that share a case, a noise
//! seed and a worker count can share the noise draws and their projections
//! `Aᵀξ`. [`run_batch`] exploits this; each member's rows are bit-identical
//! to running it alone.

use effadam_core::linalg::{DenseVector, RandomStream};
use effadam_core::node::{HyperParams, LocalOptimizer, Server, Worker};
use effadam_core::problems::{Evaluation, LeastSquares};
use effadam_core::transport::{Cluster, RoundOutcome};

use crate::config::{Optimizer, RunConfig, Wiring};
use crate::error::{Result, SimError};
use crate::metrics::MetricsRow;

const WORKER_QUANT: u64 = 1 << 32;
const SERVER_QUANT: u64 = 2 << 32;

/// A validated, fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub run_id: String,
    pub algo: String,
    pub case_seed: u64,
    pub noise_seed: u64,
    pub workers: usize,
    pub rounds: u64,
    pub hp: HyperParams,
    pub wiring: Wiring,
}

impl RunSpec {
    pub fn from_config(c: &RunConfig) -> Result<Self> {
        c.validate()?;
        Ok(RunSpec {
            run_id: c.run_id(),
            algo: c.algo.to_string(),
            case_seed: c.case_seed,
            noise_seed: c.noise_seed,
            workers: c.workers,
            rounds: c.rounds,
            hp: c.hyper_params()?,
            wiring: c.wiring()?,
        })
    }
}

/// One run in progress: the cluster plus the evaluation at the current iterate.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub spec: RunSpec,
    pub cluster: Cluster,
    eval: Evaluation,
}

impl Simulation {
    /// All nodes start at `x₁ = 0`.
    pub fn new(spec: &RunSpec, problem: &LeastSquares) -> Result<Self> {
        let d = problem.a.cols();
        let x1 = DenseVector::zeros(d);
        let w = &spec.wiring;
        let workers = (0..spec.workers)
            .map(|i| {
                let worker = match w.optimizer {
                    Optimizer::Adam => Worker::adam(x1.clone(), w.uplink, &spec.hp)?,
                    Optimizer::Sgdm { momentum } => Worker::sgdm(x1.clone(), w.uplink, momentum)?,
                };
                Ok(worker
                    .with_error_feedback(w.worker_error_feedback)
                    .with_stream(RandomStream::derive(
                        spec.noise_seed,
                        WORKER_QUANT + i as u64,
                    )))
            })
            .collect::<Result<Vec<_>>>()?;
        let server = Server::new(x1.clone(), w.downlink)?
            .with_error_feedback(w.server_error_feedback)
            .with_stream(RandomStream::derive(spec.noise_seed, SERVER_QUANT));
        Ok(Simulation {
            spec: spec.clone(),
            cluster: Cluster::new(workers, server, spec.hp)?,
            eval: problem.evaluate(&x1)?,
        })
    }

    pub fn is_adam(&self) -> bool {
        matches!(self.cluster.workers[0].optimizer, LocalOptimizer::Adam)
    }

    /// `Aᵀ(A x − x*)` and the loss at the current iterate.
    pub fn evaluation(&self) -> &Evaluation {
        &self.eval
    }

    /// Runs one round given the noise projections `Aᵀξ_i` for every worker.
    /// The caller must follow up with [`Simulation::finish_round`].
    pub fn step(&mut self, projections: &[DenseVector]) -> Result<RoundOutcome> {
        let grads: Vec<DenseVector> = projections
            .iter()
            .map(|p| LeastSquares::gradient_from_parts(&self.eval.at_r, Some(p)))
            .collect();
        Ok(self.cluster.run_round(&grads)?)
    }

    /// Installs the evaluation at the new iterate and produces the row.
    pub fn finish_round(&mut self, eval: Evaluation) -> Result<MetricsRow> {
        self.eval = eval;
        let ledger = self.cluster.ledger;
        let row = MetricsRow {
            run_id: self.spec.run_id.clone(),
            algo: self.spec.algo.clone(),
            case_seed: self.spec.case_seed,
            t: ledger.rounds,
            grad_norm_sq: self.eval.grad_norm_sq(),
            loss: self.eval.loss,
            uplink_bits_cum: ledger.uplink_bits,
            downlink_bits_cum: ledger.downlink_bits,
        };
        if !row.grad_norm_sq.is_finite() || !row.loss.is_finite() {
            return Err(self.diverged("gradient norm or loss is not finite"));
        }
        Ok(row)
    }

    fn diverged(&self, reason: impl Into<String>) -> SimError {
        SimError::Diverged {
            run_id: self.spec.run_id.clone(),
            t: self.cluster.ledger.rounds + 1,
            reason: reason.into(),
        }
    }
}

/// Per-round callback: `(index in batch, simulation, round outcome, row)`.
pub type Observer<'a> =
    dyn FnMut(usize, &Simulation, &RoundOutcome, &MetricsRow) -> Result<()> + 'a;

/// Runs `specs` in lockstep on one problem. All specs must share the noise
/// seed and worker count. A run that fails stops; the others continue.
pub fn run_batch(
    problem: &LeastSquares,
    specs: &[RunSpec],
) -> Result<Vec<Result<Vec<MetricsRow>>>> {
    run_batch_observed(problem, specs, &mut |_, _, _, _| Ok(()))
}

pub fn run_batch_observed(
    problem: &LeastSquares,
    specs: &[RunSpec],
    observer: &mut Observer<'_>,
) -> Result<Vec<Result<Vec<MetricsRow>>>> {
    let Some(first) = specs.first() else {
        return Ok(Vec::new());
    };
    for s in specs {
        if s.noise_seed != first.noise_seed || s.workers != first.workers {
            return Err(SimError::config(
                "a batch must share the noise seed and the worker count",
            ));
        }
    }
    let mut sims: Vec<Option<Simulation>> = Vec::with_capacity(specs.len());
    let mut results: Vec<Result<Vec<MetricsRow>>> = Vec::with_capacity(specs.len());
    for spec in specs {
        match Simulation::new(spec, problem) {
            Ok(sim) => {
                sims.push(Some(sim));
                results.push(Ok(Vec::with_capacity(spec.rounds as usize)));
            }
            Err(e) => {
                sims.push(None);
                results.push(Err(e));
            }
        }
    }
    let mut noise_streams: Vec<RandomStream> = (0..first.workers)
        .map(|i| RandomStream::derive(first.noise_seed, i as u64))
        .collect();
    let max_rounds = specs.iter().map(|s| s.rounds).max().unwrap_or(0);
    for t in 0..max_rounds {
        if sims.iter().all(Option::is_none) {
            break;
        }
        let noise: Vec<DenseVector> = noise_streams
            .iter_mut()
            .map(|s| problem.draw_noise(s))
            .collect();
        let projections = problem.noise_projections(&noise)?;
        let mut stepped: Vec<(usize, RoundOutcome)> = Vec::new();
        for (i, slot) in sims.iter_mut().enumerate() {
            let Some(sim) = slot else { continue };
            if t >= sim.spec.rounds {
                *slot = None;
                continue;
            }
            match sim.step(&projections) {
                Ok(out) => stepped.push((i, out)),
                Err(e) => {
                    results[i] = Err(match e {
                        SimError::Core(inner) => sim.diverged(inner.to_string()),
                        other => other,
                    });
                    *slot = None;
                }
            }
        }
        let xs: Vec<&[f64]> = stepped
            .iter()
            .map(|(i, _)| sims[*i].as_ref().expect("stepped").cluster.x().as_slice())
            .collect();
        let evals = problem.evaluate_batch(&xs)?;
        for ((i, out), eval) in stepped.into_iter().zip(evals) {
            let sim = sims[i].as_mut().expect("stepped");
            let row = match sim.finish_round(eval) {
                Ok(row) => row,
                Err(e) => {
                    results[i] = Err(e);
                    sims[i] = None;
                    continue;
                }
            };
            if let Err(e) = observer(i, sim, &out, &row) {
                results[i] = Err(e);
                sims[i] = None;
                continue;
            }
            if let Ok(rows) = &mut results[i] {
                rows.push(row);
            }
        }
    }
    Ok(results)
}

/// The problem a config describes.
pub fn problem_for(c: &RunConfig) -> LeastSquares {
    LeastSquares::make_case_with(c.case_seed, c.dim, c.noise_variance)
}

/// Runs one config to completion. Deterministic per config.
pub fn run(config: &RunConfig) -> Result<Vec<MetricsRow>> {
    let spec = RunSpec::from_config(config)?;
    run_on(&problem_for(config), &spec)
}

pub fn run_on(problem: &LeastSquares, spec: &RunSpec) -> Result<Vec<MetricsRow>> {
    run_batch(problem, std::slice::from_ref(spec))?
        .pop()
        .expect("one spec in, one result out")
}

/// Noise seed used for `case` when a suite is built from a base config.
pub fn suite_noise_seed(base: u64, case: u64) -> u64 {
    base.wrapping_add(case)
}

/// Per-round aggregates over cases. Diverged cases count as `+∞` from the
/// round they failed in onwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub algo: String,
    pub alpha: f64,
    pub cases: Vec<u64>,
    /// `runs[j]` belongs to `cases[j]`.
    pub runs: Vec<std::result::Result<Vec<MetricsRow>, String>>,
    pub median: Vec<f64>,
    pub mean: Vec<f64>,
}

impl SuiteResult {
    fn from_runs(
        algo: String,
        alpha: f64,
        rounds: u64,
        cases: Vec<u64>,
        runs: Vec<Result<Vec<MetricsRow>>>,
    ) -> Self {
        let runs: Vec<_> = runs
            .into_iter()
            .map(|r| r.map_err(|e| e.to_string()))
            .collect();
        let traces: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| {
                let mut v: Vec<f64> = match r {
                    Ok(rows) => rows.iter().map(|row| row.grad_norm_sq).collect(),
                    Err(_) => Vec::new(),
                };
                v.resize(rounds as usize, f64::INFINITY);
                v
            })
            .collect();
        let (median, mean) = aggregate(&traces);
        SuiteResult {
            algo,
            alpha,
            cases,
            runs,
            median,
            mean,
        }
    }

    pub fn final_median(&self) -> f64 {
        self.median.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(f64::NAN)
    }

    pub fn diverged(&self) -> usize {
        self.runs.iter().filter(|r| r.is_err()).count()
    }

    /// Final `grad_norm_sq` per case (`+∞` for diverged cases).
    pub fn finals(&self) -> Vec<f64> {
        self.runs
            .iter()
            .map(|r| match r {
                Ok(rows) => rows.last().map_or(f64::NAN, |row| row.grad_norm_sq),
                Err(_) => f64::INFINITY,
            })
            .collect()
    }
}

/// Median of a non-empty slice; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Per-index median and mean of equally long traces.
pub fn aggregate(traces: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let len = traces.first().map_or(0, Vec::len);
    let mut med = Vec::with_capacity(len);
    let mut mean = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(traces.len());
    for t in 0..len {
        column.clear();
        column.extend(traces.iter().map(|tr| tr[t]));
        med.push(median(&column));
        mean.push(column.iter().sum::<f64>() / column.len() as f64);
    }
    (med, mean)
}

/// Runs every config in `bases` on every case. Configs are batched per case
/// where they share the noise seed and worker count. The result is in the
/// order of `bases`.
pub fn run_suites(bases: &[RunConfig], cases: &[u64]) -> Result<Vec<SuiteResult>> {
    if cases.is_empty() {
        return Err(SimError::config("a suite needs at least one case"));
    }
    for b in bases {
        b.validate()?;
    }
    let mut per_config: Vec<Vec<Result<Vec<MetricsRow>>>> =
        bases.iter().map(|_| Vec::new()).collect();
    for &case in cases {
        let mut groups: Vec<(u64, usize, usize, u64, Vec<usize>)> = Vec::new();
        for (j, b) in bases.iter().enumerate() {
            let key = (b.noise_seed, b.workers, b.dim, b.noise_variance.to_bits());
            match groups.iter_mut().find(|g| (g.0, g.1, g.2, g.3) == key) {
                Some(g) => g.4.push(j),
                None => groups.push((key.0, key.1, key.2, key.3, vec![j])),
            }
        }
        for (_, _, _, _, members) in groups {
            let probe = &bases[members[0]];
            let problem = LeastSquares::make_case_with(case, probe.dim, probe.noise_variance);
            let specs = members
                .iter()
                .map(|&j| {
                    let c = case_config(&bases[j], case);
                    RunSpec::from_config(&c)
                })
                .collect::<Result<Vec<_>>>()?;
            for (j, r) in members.iter().zip(run_batch(&problem, &specs)?) {
                per_config[*j].push(r);
            }
        }
    }
    Ok(bases
        .iter()
        .zip(per_config)
        .map(|(b, runs)| {
            SuiteResult::from_runs(b.algo.to_string(), b.alpha, b.rounds, cases.to_vec(), runs)
        })
        .collect())
}

/// `base` moved to `case`, with the suite's noise seed and a derived run id.
pub fn case_config(base: &RunConfig, case: u64) -> RunConfig {
    RunConfig {
        case_seed: case,
        noise_seed: suite_noise_seed(base.noise_seed, case),
        run_id: base.run_id.as_ref().map(|id| format!("{id}-c{case}")),
        ..base.clone()
    }
}

pub fn run_suite(base: &RunConfig, cases: &[u64]) -> Result<SuiteResult> {
    Ok(run_suites(std::slice::from_ref(base), cases)?.remove(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub alpha: f64,
    pub mean_final: f64,
    pub median_final: f64,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub algo: String,
    pub best_alpha: f64,
    /// One row per distinct α, ascending.
    pub table: Vec<GridRow>,
    pub best: SuiteResult,
}

/// Picks the α with the smallest mean final `grad_norm_sq`; ties go to the
/// smaller α, so the choice does not depend on grid order.
pub fn select_alpha(table: &[GridRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, row) in table.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &table[b];
                let better = row.mean_final.total_cmp(&cur.mean_final).is_lt()
                    || (row.mean_final.total_cmp(&cur.mean_final).is_eq() && row.alpha < cur.alpha);
                Some(if better { i } else { b })
            }
        };
    }
    best
}

fn sorted_alphas(alphas: &[f64]) -> Result<Vec<f64>> {
    if alphas.is_empty() {
        return Err(SimError::config("the step-size grid is empty"));
    }
    let mut a = alphas.to_vec();
    a.sort_by(f64::total_cmp);
    a.dedup();
    Ok(a)
}

pub fn grid_search(base: &RunConfig, alphas: &[f64], cases: &[u64]) -> Result<GridResult> {
    Ok(grid_search_many(std::slice::from_ref(base), alphas, cases)?.remove(0))
}

/// Grid search for several base configs at once, sharing noise across all
/// of them where possible.
pub fn grid_search_many(
    bases: &[RunConfig],
    alphas: &[f64],
    cases: &[u64],
) -> Result<Vec<GridResult>> {
    let alphas = sorted_alphas(alphas)?;
    let configs: Vec<RunConfig> = bases
        .iter()
        .flat_map(|b| {
            alphas
                .iter()
                .map(move |&alpha| RunConfig { alpha, ..b.clone() })
        })
        .collect();
    let mut suites = run_suites(&configs, cases)?.into_iter();
    let mut out = Vec::with_capacity(bases.len());
    for b in bases {
        let results: Vec<SuiteResult> = suites.by_ref().take(alphas.len()).collect();
        let table: Vec<GridRow> = results
            .iter()
            .map(|s| {
                let finals = s.finals();
                GridRow {
                    alpha: s.alpha,
                    mean_final: finals.iter().sum::<f64>() / finals.len() as f64,
                    median_final: median(&finals),
                    diverged: s.diverged(),
                }
            })
            .collect();
        let i = select_alpha(&table).expect("non-empty grid");
        out.push(GridResult {
            algo: b.algo.to_string(),
            best_alpha: table[i].alpha,
            table,
            best: results.into_iter().nth(i).expect("index from table"),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Algo;

    fn small(algo: Algo) -> RunConfig {
        RunConfig {
            algo,
            dim: 12,
            workers: 3,
            rounds: 40,
            alpha: 1e-2,
            ..RunConfig::default()
        }
    }

    #[test]
    fn zero_rounds_gives_no_rows() {
        let c = RunConfig {
            rounds: 0,
            ..small(Algo::OursCom1)
        };
        assert!(run(&c).unwrap().is_empty());
    }

    #[test]
    fn rows_are_sequential_and_bits_closed_form() {
        let rows = run(&small(Algo::OursCom1)).unwrap();
        assert_eq!(rows.len(), 40);
        let per_msg = 32 + 12 * 2;
        for (i, r) in rows.iter().enumerate() {
            let t = i as u64 + 1;
            assert_eq!(r.t, t);
            assert_eq!(r.uplink_bits_cum, t * 3 * per_msg);
            assert_eq!(r.downlink_bits_cum, t * per_msg);
        }
    }

    #[test]
    fn batch_members_match_solo_runs() {
        let configs = [
            small(Algo::OursFull),
            RunConfig {
                alpha: 3e-3,
                ..small(Algo::OursCom2)
            },
            RunConfig {
                rounds: 17,
                ..small(Algo::DadamTerngrad)
            },
            small(Algo::Zheng),
        ];
        let problem = problem_for(&configs[0]);
        let specs: Vec<_> = configs
            .iter()
            .map(|c| RunSpec::from_config(c).unwrap())
            .collect();
        let batch = run_batch(&problem, &specs).unwrap();
        for (c, b) in configs.iter().zip(batch) {
            assert_eq!(run(c).unwrap(), b.unwrap());
        }
    }

    #[test]
    fn full_precision_variants_coincide() {
        let a = run(&RunConfig {
            workers: 1,
            ..small(Algo::OursFull)
        })
        .unwrap();
        let b = run(&RunConfig {
            workers: 1,
            ..small(Algo::DadamFull)
        })
        .unwrap();
        let ga: Vec<f64> = a.iter().map(|r| r.grad_norm_sq).collect();
        let gb: Vec<f64> = b.iter().map(|r| r.grad_norm_sq).collect();
        assert_eq!(ga, gb);
    }

    #[test]
    fn divergence_is_reported_not_panicked() {
        let c = RunConfig {
            algo: Algo::SgdmFull,
            alpha: 1e6,
            ..small(Algo::SgdmFull)
        };
        assert!(matches!(run(&c), Err(SimError::Diverged { .. })));
        let s = run_suite(&c, &[1, 2]).unwrap();
        assert_eq!(s.diverged(), 2);
        assert!(s.final_median().is_infinite());
    }

    #[test]
    fn aggregation_rules() {
        let (m, a) = aggregate(&[vec![1.0, 5.0], vec![3.0, 5.0], vec![2.0, 5.0]]);
        assert_eq!(m, vec![2.0, 5.0]);
        assert_eq!(a, vec![2.0, 5.0]);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        let one = run_suite(&small(Algo::OursCom1), &[5]).unwrap();
        let solo = run(&case_config(&small(Algo::OursCom1), 5)).unwrap();
        let g: Vec<f64> = solo.iter().map(|r| r.grad_norm_sq).collect();
        assert_eq!(one.median, g);
        assert_eq!(one.mean, g);
    }

    #[test]
    fn grid_selection_is_order_invariant_and_self_consistent() {
        let base = small(Algo::OursFull);
        let g1 = grid_search(&base, &[1e-3, 1e-2, 3e-2], &[1, 2, 3]).unwrap();
        let g2 = grid_search(&base, &[3e-2, 1e-3, 1e-2, 1e-3], &[1, 2, 3]).unwrap();
        assert_eq!(g1.best_alpha, g2.best_alpha);
        assert_eq!(g1.table, g2.table);
        let best = g1.table.iter().find(|r| r.alpha == g1.best_alpha).unwrap();
        assert!(g1.table.iter().all(|r| best.mean_final <= r.mean_final));
        let single = grid_search(&base, &[2e-3], &[1]).unwrap();
        assert_eq!(single.best_alpha, 2e-3);
    }

    #[test]
    fn ties_break_toward_smaller_alpha() {
        let row = |alpha, m| GridRow {
            alpha,
            mean_final: m,
            median_final: m,
            diverged: 0,
        };
        assert_eq!(
            select_alpha(&[row(2.0, 1.0), row(1.0, 1.0), row(3.0, 0.5)]),
            Some(2)
        );
        assert_eq!(select_alpha(&[row(2.0, 1.0), row(1.0, 1.0)]), Some(1));
    }
}
