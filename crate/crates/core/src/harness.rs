//! Seeded Monte-Carlo experiments and their CSV output.
//!
//! Every row of a result table depends only on the scenario and its
//! `(trial, power index)` pair, so trials run in parallel and rows are sorted
//! before emission; the same spec always produces the same bytes.
//!
//! Seeds: the channel realization of a trial is drawn from
//! `base_seed ^ mix(trial)` and is shared by every point of the power grid,
//! so per-trial curves across power are smooth. The row seed recorded in the
//! table, `base_seed ^ mix(trial, power index)`, initializes the solver.

use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{
    closed_form_ia_3user, run_interference_avoidance, run_max_sinr, run_min_leakage, weighted_leakage, Init, Solution,
    SolverOptions,
};
use crate::channel::{
    complex_gaussian, default_relay_beta, generate_network, relay_effective_channels, whiten_noise, ChannelSet,
    NetworkConfig, RelayParams,
};
use crate::error::{Error, Result};
use crate::metrics::{
    db_to_linear, dof_slope, interference_fraction, isotropic_user_rates, sum_rate_per_slot, tdma_user_rates,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    MinLeakage,
    MaxSinr,
    InterferenceAvoidance,
    #[serde(rename = "closed_form_3user")]
    ClosedForm3User,
    Tdma,
    Isotropic,
}

/// Relay gain selection for relay sweeps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayPolicy {
    /// Fixed amplification; `None` scales the relay to the per-node power.
    #[serde(default)]
    pub beta: Option<f64>,
}

impl RelayPolicy {
    pub fn beta_for(&self, p: f64) -> f64 {
        self.beta.unwrap_or_else(|| default_relay_beta(p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub network: NetworkConfig,
    pub algorithm: Algorithm,
    pub power_grid_db: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relay: Option<RelayPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.solver.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.power_grid_db.is_empty() {
            return Err(Error::InvalidConfig("power grid is empty".into()));
        }
        if self.power_grid_db.iter().any(|p| !p.is_finite()) || self.power_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("power grid must be finite and strictly increasing".into()));
        }
        if let Some(RelayPolicy { beta: Some(b) }) = &self.relay {
            if !(*b >= 0.0 && b.is_finite()) {
                return Err(Error::InvalidConfig("relay beta must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub p_db: f64,
    pub trial: usize,
    pub seed: u64,
    pub sum_rate: f64,
    pub per_user_rates: Vec<f64>,
    pub wli_final: f64,
    pub p_values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub users: usize,
    pub rows: Vec<ResultRow>,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed shared by every power point of a trial (channel draw).
pub fn channel_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed ^ mix64(trial as u64)
}

/// Row seed `base_seed ^ mix(trial, power index)` (solver initialization).
pub fn row_seed(base_seed: u64, trial: usize, power_index: usize) -> u64 {
    base_seed ^ mix64(mix64(trial as u64) ^ (power_index as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

struct Outcome {
    per_user_rates: Vec<f64>,
    wli_final: f64,
    p_values: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn solve(
    algorithm: Algorithm,
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    opts: &SolverOptions,
    slots: usize,
) -> Result<Outcome> {
    let (sol, iterations, converged): (Solution, usize, bool) = match algorithm {
        Algorithm::MinLeakage => {
            let (s, t) = run_min_leakage(ch, cfg, opts)?;
            (s, t.iterations, t.converged)
        }
        Algorithm::MaxSinr => {
            let (s, t) = run_max_sinr(ch, cfg, opts)?;
            (s, t.iterations, t.converged)
        }
        Algorithm::InterferenceAvoidance => {
            let (s, t) = run_interference_avoidance(ch, cfg, opts)?;
            (s, t.iterations, t.converged)
        }
        Algorithm::ClosedForm3User => (closed_form_ia_3user(ch)?, 0, true),
        Algorithm::Tdma | Algorithm::Isotropic => {
            let rates =
                if algorithm == Algorithm::Tdma { tdma_user_rates(ch, cfg)? } else { isotropic_user_rates(ch, cfg)? };
            let norm = slots as f64;
            return Ok(Outcome {
                per_user_rates: rates.iter().map(|r| r / norm).collect(),
                wli_final: f64::NAN,
                p_values: vec![f64::NAN; cfg.users],
                iterations: 0,
                converged: true,
            });
        }
    };
    let report = sum_rate_per_slot(ch, &sol, cfg, slots)?;
    let p_values = (0..cfg.users).map(|k| interference_fraction(k, ch, &sol, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(Outcome {
        per_user_rates: report.per_user_rate,
        wli_final: weighted_leakage(ch, &sol, cfg)?,
        p_values,
        iterations,
        converged,
    })
}

fn make_row(spec: &ScenarioSpec, p_index: usize, trial: usize, outcome: Result<Outcome>) -> ResultRow {
    let seed = row_seed(spec.base_seed, trial, p_index);
    let p_db = spec.power_grid_db[p_index];
    let users = spec.network.users;
    match outcome {
        Ok(o) => ResultRow {
            scenario: spec.name.clone(),
            p_db,
            trial,
            seed,
            sum_rate: o.per_user_rates.iter().sum(),
            per_user_rates: o.per_user_rates,
            wli_final: o.wli_final,
            p_values: o.p_values,
            iterations: o.iterations,
            converged: o.converged,
        },
        Err(err) => {
            warn!("{}: trial {trial} at {p_db} dB failed: {err}", spec.name);
            ResultRow {
                scenario: spec.name.clone(),
                p_db,
                trial,
                seed,
                sum_rate: f64::NAN,
                per_user_rates: vec![f64::NAN; users],
                wli_final: f64::NAN,
                p_values: vec![f64::NAN; users],
                iterations: 0,
                converged: false,
            }
        }
    }
}

fn solver_for_row(spec: &ScenarioSpec, seed: u64) -> SolverOptions {
    SolverOptions { init: Init::RandomOrthonormal { seed }, ..spec.solver.clone() }
}

fn grid_points(spec: &ScenarioSpec) -> Vec<(usize, usize)> {
    (0..spec.power_grid_db.len()).flat_map(|p| (0..spec.trials).map(move |t| (p, t))).collect()
}

fn sorted_table(users: usize, mut rows: Vec<ResultRow>, spec: &ScenarioSpec) -> ResultTable {
    let index = |r: &ResultRow| spec.power_grid_db.iter().position(|&p| p == r.p_db).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| index(a).cmp(&index(b)).then(a.trial.cmp(&b.trial)));
    ResultTable { users, rows }
}

/// Runs every `(power, trial)` pair of a plain MIMO scenario.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ResultTable> {
    spec.validate()?;
    if spec.relay.is_some() {
        return Err(Error::InvalidConfig("scenario has a relay policy; use the relay sweep".into()));
    }
    let rows: Vec<ResultRow> = grid_points(spec)
        .into_par_iter()
        .map(|(p_index, trial)| {
            let outcome = (|| {
                let cfg = spec.network.clone().with_power(db_to_linear(spec.power_grid_db[p_index]));
                let ch = generate_network(&cfg, channel_seed(spec.base_seed, trial))?;
                let opts = solver_for_row(spec, row_seed(spec.base_seed, trial, p_index));
                solve(spec.algorithm, &ch, &cfg, &opts, 1)
            })();
            make_row(spec, p_index, trial, outcome)
        })
        .collect();
    Ok(sorted_table(spec.network.users, rows, spec))
}

/// Orthogonal reference for the relay network: each source alone for a
/// third of the time at four times the per-node power, relay unused.
fn relay_orthogonal_rates(params: &RelayParams, p: f64) -> Vec<f64> {
    (0..3)
        .map(|k| {
            let r1 = (1.0 + 4.0 * p * params.slot1[k][k].norm_sqr()).log2();
            let r2 = (1.0 + 4.0 * p * params.slot2[k][k].norm_sqr()).log2();
            (r1 + r2) / 2.0 / 3.0
        })
        .collect()
}

/// Two-slot amplify-and-forward relay sweep over three single-antenna
/// pairs. Each trial draws scalar gains, collapses the protocol into a
/// whitened 2×2 virtual MIMO channel (per-node power `P` per slot, so `2P`
/// per two-slot vector) and reports rates per channel use.
pub fn relay_sweep(spec: &ScenarioSpec) -> Result<ResultTable> {
    spec.validate()?;
    let policy = spec.relay.clone().ok_or_else(|| Error::InvalidConfig("relay sweep needs a relay policy".into()))?;
    let net = &spec.network;
    if net.users != 3 || net.tx_antennas.iter().chain(&net.rx_antennas).any(|&a| a != 1) {
        return Err(Error::Topology("relay sweep needs three single-antenna pairs".into()));
    }
    let virtual_base = NetworkConfig { tx_antennas: vec![2; 3], rx_antennas: vec![2; 3], ..net.clone() };
    let streams_ok = net.streams.iter().all(|&d| d <= 2);
    if !streams_ok {
        return Err(Error::InvalidConfig("at most 2 streams per user over two slots".into()));
    }

    let rows: Vec<ResultRow> = grid_points(spec)
        .into_par_iter()
        .map(|(p_index, trial)| {
            let outcome = (|| {
                let p = db_to_linear(spec.power_grid_db[p_index]);
                let mut rng = ChaCha8Rng::seed_from_u64(channel_seed(spec.base_seed, trial));
                let params = RelayParams::random(&mut rng, policy.beta_for(p));
                if spec.algorithm == Algorithm::Tdma {
                    let rates = relay_orthogonal_rates(&params, p);
                    return Ok(Outcome {
                        per_user_rates: rates,
                        wli_final: f64::NAN,
                        p_values: vec![f64::NAN; 3],
                        iterations: 0,
                        converged: true,
                    });
                }
                let ch = whiten_noise(&relay_effective_channels(&params)?)?;
                let cfg = virtual_base.clone().with_power(2.0 * p);
                let opts = solver_for_row(spec, row_seed(spec.base_seed, trial, p_index));
                solve(spec.algorithm, &ch, &cfg, &opts, 2)
            })();
            make_row(spec, p_index, trial, outcome)
        })
        .collect();
    Ok(sorted_table(3, rows, spec))
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(users: usize) -> Vec<String> {
    let mut h: Vec<String> = ["scenario", "p_db", "trial", "seed", "sum_rate"].map(String::from).to_vec();
    h.extend((1..=users).map(|k| format!("rate_user_{k}")));
    h.push("wli_final".into());
    h.extend((1..=users).map(|k| format!("p_{k}")));
    h.push("iterations".into());
    h.push("converged".into());
    h
}

/// Writes the table as CSV; floats carry 17 significant digits.
pub fn write_csv<W: Write>(table: &ResultTable, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(csv_header(table.users))?;
    for r in &table.rows {
        let mut rec =
            vec![r.scenario.clone(), fmt_f64(r.p_db), r.trial.to_string(), r.seed.to_string(), fmt_f64(r.sum_rate)];
        rec.extend(r.per_user_rates.iter().map(|&x| fmt_f64(x)));
        rec.push(fmt_f64(r.wli_final));
        rec.extend(r.p_values.iter().map(|&x| fmt_f64(x)));
        rec.push(r.iterations.to_string());
        rec.push(r.converged.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(table, std::io::BufWriter::new(file))
}

pub fn csv_string(table: &ResultTable) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Per-power statistics over converged rows, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSummary {
    pub p_db: f64,
    pub mean_sum_rate: f64,
    pub median_sum_rate: f64,
    pub included: usize,
    pub excluded: usize,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean and median sum rate per grid point; rows that failed or did not
/// converge are counted as excluded.
pub fn summarize(table: &ResultTable) -> Vec<PowerSummary> {
    let mut out: Vec<PowerSummary> = Vec::new();
    let mut start = 0;
    while start < table.rows.len() {
        let p_db = table.rows[start].p_db;
        let end = start + table.rows[start..].iter().take_while(|r| r.p_db == p_db).count();
        let group = &table.rows[start..end];
        let mut rates: Vec<f64> =
            group.iter().filter(|r| r.converged && r.sum_rate.is_finite()).map(|r| r.sum_rate).collect();
        let included = rates.len();
        out.push(PowerSummary {
            p_db,
            mean_sum_rate: if included > 0 { mean(&rates) } else { f64::NAN },
            median_sum_rate: median(&mut rates),
            included,
            excluded: group.len() - included,
        });
        start = end;
    }
    out
}

/// DoF slope of the mean sum rate between the grid points `from_db` and
/// `to_db` (inclusive), using converged rows only.
pub fn slope_between(table: &ResultTable, from_db: f64, to_db: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = summarize(table)
        .iter()
        .filter(|s| s.p_db >= from_db && s.p_db <= to_db && s.included > 0)
        .map(|s| (db_to_linear(s.p_db), s.mean_sum_rate))
        .collect();
    dof_slope(&pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilitySpec {
    pub name: String,
    pub users: usize,
    pub antennas: usize,
    pub allocations: Vec<Vec<usize>>,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

impl FeasibilitySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FeasibilitySpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.antennas == 0 || self.trials == 0 {
            return Err(Error::InvalidConfig("users, antennas and trials must be positive".into()));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityRow {
    pub allocation: Vec<usize>,
    pub total_streams: usize,
    pub median_p: f64,
    pub mean_p: f64,
    /// Every `p_k`, ordered by trial then user.
    pub samples: Vec<f64>,
    pub valid: bool,
}

/// Runs the leakage solver (with the spec's restarts) for each stream
/// allocation and aggregates the interference fraction over users and
/// trials. Invalid allocations produce a warning row with `valid = false`.
pub fn feasibility_table(spec: &FeasibilitySpec) -> Result<Vec<FeasibilityRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.allocations.len());
    for (a_index, alloc) in spec.allocations.iter().enumerate() {
        let cfg = NetworkConfig::symmetric(spec.users, spec.antennas, spec.antennas, 1, 1.0).with_streams(alloc);
        if let Err(err) = cfg.validate() {
            warn!("{}: skipping allocation {alloc:?}: {err}", spec.name);
            rows.push(FeasibilityRow {
                allocation: alloc.clone(),
                total_streams: alloc.iter().sum(),
                median_p: f64::NAN,
                mean_p: f64::NAN,
                samples: Vec::new(),
                valid: false,
            });
            continue;
        }
        let per_trial: Vec<Result<Vec<f64>>> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let ch = generate_network(&cfg, channel_seed(spec.base_seed, trial))?;
                let opts = SolverOptions {
                    init: Init::RandomOrthonormal { seed: row_seed(spec.base_seed, trial, a_index) },
                    ..spec.solver.clone()
                };
                let (sol, _) = run_min_leakage(&ch, &cfg, &opts)?;
                (0..cfg.users).map(|k| interference_fraction(k, &ch, &sol, &cfg)).collect()
            })
            .collect();
        let mut samples = Vec::with_capacity(spec.trials * spec.users);
        for r in per_trial {
            samples.extend(r?);
        }
        let mut sorted = samples.clone();
        rows.push(FeasibilityRow {
            allocation: alloc.clone(),
            total_streams: cfg.total_streams(),
            median_p: median(&mut sorted),
            mean_p: mean(&samples),
            samples,
            valid: true,
        });
    }
    Ok(rows)
}

pub fn write_feasibility_csv<W: Write>(rows: &[FeasibilityRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["allocation", "total_streams", "median_p", "mean_p", "valid"])?;
    for r in rows {
        let alloc = r.allocation.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("-");
        w.write_record([
            alloc,
            r.total_streams.to_string(),
            fmt_f64(r.median_p),
            fmt_f64(r.mean_p),
            r.valid.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One named invariant check of the self-test.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs the core invariants on `trials` small random instances.
pub fn selftest(seed: u64, trials: usize) -> Vec<CheckResult> {
    use crate::alignment::{interference_covariance, leakage};
    use crate::channel::reciprocal_channels;
    use crate::numerics::{eigh, eigh_smallest, gram_outer, logdet_pd, orthonormalize, solve_pd, CMat, CVec};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();
    let mut record = |name: &'static str, worst: f64, bound: f64| {
        results.push(CheckResult {
            name,
            passed: worst <= bound,
            detail: format!("worst {worst:.3e} (bound {bound:.0e})"),
        });
    };

    let random = |rng: &mut ChaCha8Rng, r: usize, c: usize| CMat::from_fn(r, c, |_, _| complex_gaussian(rng));

    let (mut eig, mut ortho, mut logdet, mut solve) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for t in 0..trials {
        let n = 2 + t % 5;
        let a = gram_outer(&random(&mut rng, n, n));
        let e = eigh_smallest(&a, 1 + t % n).expect("valid d");
        let scale = eigh(&a).values.last().copied().unwrap_or(0.0).max(1.0);
        for (i, &lambda) in e.values.iter().enumerate() {
            let v = e.vectors.column(i);
            let r = (a.matrix() * v - v * num_complex::Complex64::new(lambda, 0.0)).norm();
            eig = eig.max(r / scale);
        }
        if let Ok(q) = orthonormalize(&random(&mut rng, n + 1, n)) {
            let q2 = orthonormalize(&q).expect("orthonormal input");
            ortho = ortho.max(crate::numerics::max_abs(&(q2 - &q)));
        }
        let b = a.shifted(1.0);
        let direct = logdet_pd(&b).expect("pd");
        let from_eigs: f64 = eigh(&b).values.iter().map(|v| v.log2()).sum();
        logdet = logdet.max((direct - from_eigs).abs());
        let y = CVec::from_fn(n, |_, _| complex_gaussian(&mut rng));
        let x = solve_pd(&b, &y).expect("pd");
        solve = solve.max((b.matrix() * x - &y).norm() / y.norm());
    }
    record("eigensolver residual", eig, 1e-9);
    record("orthonormalize idempotent", ortho, 1e-12);
    record("logdet vs eigenvalue sum", logdet, 1e-9);
    record("pd solve residual", solve, 1e-10);

    let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 1.0);
    let (mut involution, mut reciprocity, mut rise, mut orth, mut expansion) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for t in 0..trials {
        let s = seed.wrapping_add(t as u64);
        let ch = generate_network(&cfg, s).expect("valid config");
        let back = reciprocal_channels(&reciprocal_channels(&ch));
        involution = involution.max(crate::channel::max_entry_difference(&ch, &back));

        let opts = SolverOptions { max_iterations: 200, ..SolverOptions::seeded(s) };
        let (sol, trace) = run_min_leakage(&ch, &cfg, &opts).expect("solver");
        for w in trace.history.windows(2) {
            rise = rise.max(w[1] - w[0]);
        }
        for m in sol.precoders.iter().chain(&sol.filters) {
            let g = m.adjoint() * m;
            orth = orth.max(crate::numerics::max_abs(&(g - CMat::identity(m.ncols(), m.ncols()))));
        }
        let fwd = weighted_leakage(&ch, &sol, &cfg).expect("shapes");
        let rev = weighted_leakage(&reciprocal_channels(&ch), &sol.swapped(), &cfg.reversed()).expect("shapes");
        reciprocity = reciprocity.max((fwd - rev).abs());

        let q = interference_covariance(0, &ch, &sol, &cfg).expect("shapes");
        let lk = leakage(&sol.filters[0], &q).expect("shapes");
        let direct: f64 =
            (1..3).map(|j| (sol.filters[0].adjoint() * ch.h(0, j) * &sol.precoders[j]).norm_squared()).sum();
        expansion = expansion.max((lk - direct).abs());
    }
    record("reciprocal involution", involution, 0.0);
    record("WLI non-increasing", rise, 1e-12);
    record("orthonormal filters", orth, 1e-10);
    record("reciprocity identity", reciprocity, 1e-10);
    record("leakage expansion", expansion, 1e-10);
    results
}
