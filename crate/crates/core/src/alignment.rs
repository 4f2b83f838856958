//! Transmit/receive filter design for the MIMO interference channel.
//!
//! The two distributed solvers alternate between the forward network and
//! its reciprocal: receivers pick filters from local interference
//! statistics, the filters become precoders in the reverse direction, and
//! the roles swap back. [`run_min_leakage`] chooses the least-interfered
//! subspace at every receiver; [`run_max_sinr`] picks per-stream MMSE
//! combiners instead. Two reference points sit alongside them: the
//! closed-form solution for three users with two antennas each, and a
//! selfish interference-avoidance baseline.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{gaussian_matrix, reciprocal_channels, ChannelSet, NetworkConfig};
use crate::error::{Error, Result};
use crate::metrics;
use crate::numerics::{
    condition_number, eigh_largest, eigh_smallest, inv_sqrt_pd, min_singular_value, orthonormalize, solve_pd, CMat,
    CVec, HermitianMatrix,
};

/// Smallest singular value of `U[k]† H[k][k] V[k]` below which a solution
/// fails the rank condition on the direct links.
pub const DIRECT_RANK_MIN_SV: f64 = 1e-6;
/// Weakest direct link below which an aligned solution counts as
/// degenerate when deciding on extra restarts.
pub const DEGENERATE_LINK_SV: f64 = 1e-3;

/// Condition number above which a Max-SINR precoder counts as rank deficient.
pub const MAX_PRECODER_CONDITION: f64 = 1e8;

/// Per-user precoders `V[k]` (`M[k]×d[k]`) and receive filters `U[k]`
/// (`N[k]×d[k]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub precoders: Vec<CMat>,
    pub filters: Vec<CMat>,
}

impl Solution {
    /// Filters become precoders and vice versa, i.e. the same solution
    /// viewed on the reciprocal network.
    pub fn swapped(&self) -> Solution {
        Solution { precoders: self.filters.clone(), filters: self.precoders.clone() }
    }

    pub fn users(&self) -> usize {
        self.precoders.len()
    }

    fn check(&self, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<()> {
        let k = cfg.users;
        if self.precoders.len() != k || self.filters.len() != k || ch.users() != k {
            return Err(Error::ShapeMismatch("solution does not match network size".into()));
        }
        for u in 0..k {
            let d = cfg.streams[u];
            if self.precoders[u].shape() != (ch.tx_dim(u), d) {
                return Err(Error::ShapeMismatch(format!("precoder of user {u}")));
            }
            if self.filters[u].shape() != (ch.rx_dim(u), d) {
                return Err(Error::ShapeMismatch(format!("filter of user {u}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Orthonormalized i.i.d. complex Gaussian precoders drawn from `seed`.
    RandomOrthonormal { seed: u64 },
    /// Starts from the precoders of the given solution.
    Provided(Solution),
}

impl Default for Init {
    fn default() -> Self {
        Init::RandomOrthonormal { seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Threshold on the power-normalized WLI (see [`normalized_wli`]).
    pub wli_stop: f64,
    /// Relative change of the tracked objective between full iterations.
    pub rel_stop: f64,
    pub restarts: usize,
    /// Further restarts of the leakage solver, tried one at a time only while
    /// no aligned run keeps every direct link above [`DEGENERATE_LINK_SV`].
    pub extra_restarts: usize,
    #[serde(skip)]
    pub init: Init,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 5000,
            wli_stop: 1e-10,
            rel_stop: 1e-8,
            restarts: 1,
            extra_restarts: 0,
            init: Init::default(),
        }
    }
}

impl SolverOptions {
    pub fn seeded(seed: u64) -> Self {
        SolverOptions { init: Init::RandomOrthonormal { seed }, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig("iteration and restart counts must be positive".into()));
        }
        if !(self.wli_stop > 0.0 && self.rel_stop > 0.0) {
            return Err(Error::InvalidConfig("stopping thresholds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    WliThreshold,
    RelativeChange,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMetric {
    /// Weighted leakage after every half-iteration.
    Wli,
    /// Forward sum rate after every full iteration.
    SumRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub metric: TraceMetric,
    pub history: Vec<f64>,
    /// Final `I^[k⋆]` at every receiver.
    pub per_rx_leakage: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl IterationTrace {
    pub fn final_value(&self) -> f64 {
        self.history.last().copied().unwrap_or(f64::NAN)
    }
}

/// `Q^[k] = Σ_{j≠k} (P[j]/d[j]) H[k][j] V[j] V[j]† H[k][j]†`.
pub fn interference_covariance(
    k: usize,
    ch: &ChannelSet,
    sol: &Solution,
    cfg: &NetworkConfig,
) -> Result<HermitianMatrix> {
    if k >= cfg.users {
        return Err(Error::ShapeMismatch(format!("user {k} out of range")));
    }
    covariance_from_precoders(k, ch, &sol.precoders, cfg)
}

fn covariance_from_precoders(
    k: usize,
    ch: &ChannelSet,
    precoders: &[CMat],
    cfg: &NetworkConfig,
) -> Result<HermitianMatrix> {
    let n = ch.rx_dim(k);
    let mut q = CMat::zeros(n, n);
    for j in (0..cfg.users).filter(|&j| j != k) {
        let v = &precoders[j];
        if v.nrows() != ch.tx_dim(j) {
            return Err(Error::ShapeMismatch(format!("precoder of user {j}")));
        }
        let hv = ch.h(k, j) * v;
        let w = cfg.forward_power(j) / cfg.streams[j] as f64;
        q += (&hv * hv.adjoint()) * Complex64::new(w, 0.0);
    }
    HermitianMatrix::new(q)
}

/// `Tr[U† Q U]`.
pub fn leakage(u: &CMat, q: &HermitianMatrix) -> Result<f64> {
    if u.nrows() != q.dim() {
        return Err(Error::ShapeMismatch(format!(
            "filter has {} rows, covariance is {}x{}",
            u.nrows(),
            q.dim(),
            q.dim()
        )));
    }
    Ok((u.adjoint() * q.matrix() * u).trace().re)
}

/// `I^[k] = Σ_{j≠k} (P[j]/d[j]) ‖U[k]† H[k][j] V[j]‖²_F` for every receiver.
/// Equal to [`leakage`] of the interference covariance, but summed from
/// non-negative terms.
pub fn per_receiver_leakage(ch: &ChannelSet, sol: &Solution, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    sol.check(ch, cfg)?;
    Ok((0..cfg.users)
        .map(|k| {
            (0..cfg.users)
                .filter(|&j| j != k)
                .map(|j| {
                    let w = cfg.forward_power(j) / cfg.streams[j] as f64;
                    w * (sol.filters[k].adjoint() * ch.h(k, j) * &sol.precoders[j]).norm_squared()
                })
                .sum()
        })
        .collect())
}

/// Weighted leakage interference `I_w = Σ_k (P_rev[k]/d[k]) I^[k⋆]`.
pub fn weighted_leakage(ch: &ChannelSet, sol: &Solution, cfg: &NetworkConfig) -> Result<f64> {
    let per_rx = per_receiver_leakage(ch, sol, cfg)?;
    Ok(per_rx.iter().enumerate().map(|(k, l)| cfg.reverse_power(k) / cfg.streams[k] as f64 * l).sum())
}

/// WLI divided by the largest product of forward and reciprocal per-stream
/// powers, so that thresholds mean the same thing at every SNR.
pub fn normalized_wli(wli: f64, cfg: &NetworkConfig) -> f64 {
    let fwd = (0..cfg.users).map(|k| cfg.forward_power(k) / cfg.streams[k] as f64).fold(0.0, f64::max);
    let rev = (0..cfg.users).map(|k| cfg.reverse_power(k) / cfg.streams[k] as f64).fold(0.0, f64::max);
    wli / (fwd * rev)
}

fn random_precoders(cfg: &NetworkConfig, seed: u64) -> Result<Vec<CMat>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cfg.users).map(|k| orthonormalize(&gaussian_matrix(&mut rng, cfg.tx_antennas[k], cfg.streams[k]))).collect()
}

fn initial_precoders(cfg: &NetworkConfig, init: &Init) -> Result<Vec<CMat>> {
    match init {
        Init::RandomOrthonormal { seed } => random_precoders(cfg, *seed),
        Init::Provided(sol) => {
            for k in 0..cfg.users {
                if sol.precoders.len() != cfg.users || sol.precoders[k].shape() != (cfg.tx_antennas[k], cfg.streams[k])
                {
                    return Err(Error::ShapeMismatch(format!("provided precoder of user {k}")));
                }
            }
            Ok(sol.precoders.clone())
        }
    }
}

fn restart_seeds(opts: &SolverOptions, count: usize) -> Vec<Init> {
    match &opts.init {
        Init::Provided(_) => vec![opts.init.clone()],
        Init::RandomOrthonormal { seed } => (0..count as u64)
            .map(|r| {
                let s = if r == 0 { *seed } else { ChaCha8Rng::seed_from_u64(seed ^ r).random() };
                Init::RandomOrthonormal { seed: s }
            })
            .collect(),
    }
}

/// Receive filters minimizing leakage for the given precoders: the `d[k]`
/// least-interfered eigenvectors of every `Q^[k]`.
fn min_leakage_filters(ch: &ChannelSet, cfg: &NetworkConfig, precoders: &[CMat]) -> Result<Vec<CMat>> {
    (0..cfg.users)
        .map(|k| {
            let q = covariance_from_precoders(k, ch, precoders, cfg)?;
            Ok(eigh_smallest(&q, cfg.streams[k])?.vectors)
        })
        .collect()
}

fn check_inputs(ch: &ChannelSet, cfg: &NetworkConfig, opts: &SolverOptions) -> Result<()> {
    cfg.validate()?;
    ch.check_config(cfg)?;
    opts.validate()?;
    if ch.has_colored_noise() {
        return Err(Error::Input("solvers expect white noise; whiten the channel set first".into()));
    }
    Ok(())
}

/// `min_k σ_min(U[k]† H[k][k] V[k])`: the weakest direct link after
/// filtering. Zero when some user's desired streams are nulled.
pub fn weakest_direct_link(ch: &ChannelSet, sol: &Solution) -> f64 {
    (0..sol.users())
        .map(|k| min_singular_value(&(sol.filters[k].adjoint() * ch.h(k, k) * &sol.precoders[k])))
        .fold(f64::INFINITY, f64::min)
}

/// Whether every direct link keeps all its streams:
/// `σ_min(U[k]† H[k][k] V[k]) > DIRECT_RANK_MIN_SV` for all `k`.
pub fn direct_links_full_rank(ch: &ChannelSet, sol: &Solution) -> bool {
    weakest_direct_link(ch, sol) > DIRECT_RANK_MIN_SV
}

/// Iterative interference alignment by alternating leakage minimization.
///
/// Every iteration updates all forward receive filters at once, then all
/// reciprocal receive filters (which are the forward precoders). The WLI is
/// recorded after both half-steps and cannot increase.
///
/// With several restarts, runs that reach the WLI threshold beat runs that
/// do not. Among aligned runs the strongest [`weakest_direct_link`] wins:
/// structured channels such as the relay model have zero-leakage fixed
/// points that null the desired signal, and those should only be returned
/// when nothing better was found. Unaligned runs are ranked by final WLI.
/// `extra_restarts` further runs follow while the best run is unaligned or
/// degenerate.
pub fn run_min_leakage(
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    opts: &SolverOptions,
) -> Result<(Solution, IterationTrace)> {
    check_inputs(ch, cfg, opts)?;
    let rev_ch = reciprocal_channels(ch);
    let rev_cfg = cfg.reversed();

    let mut best: Option<(bool, f64, Solution, IterationTrace)> = None;
    for (i, init) in restart_seeds(opts, opts.restarts + opts.extra_restarts).into_iter().enumerate() {
        if i >= opts.restarts && best.as_ref().is_some_and(|(aligned, link, ..)| *aligned && *link > DEGENERATE_LINK_SV)
        {
            break;
        }
        let (sol, trace) = min_leakage_once(ch, cfg, &rev_ch, &rev_cfg, opts, &init)?;
        let aligned = trace.stop_reason == StopReason::WliThreshold;
        let link = weakest_direct_link(ch, &sol);
        let better = match &best {
            None => true,
            Some((best_aligned, best_link, _, t)) => match (aligned, *best_aligned) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => link > *best_link,
                (false, false) => trace.final_value() < t.final_value(),
            },
        };
        if better {
            best = Some((aligned, link, sol, trace));
        }
    }
    let (_, _, sol, trace) = best.expect("at least one restart");
    Ok((sol, trace))
}

fn min_leakage_once(
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    rev_ch: &ChannelSet,
    rev_cfg: &NetworkConfig,
    opts: &SolverOptions,
    init: &Init,
) -> Result<(Solution, IterationTrace)> {
    let mut sol = Solution { precoders: initial_precoders(cfg, init)?, filters: Vec::new() };
    let mut history = Vec::with_capacity(2 * opts.max_iterations.min(10_000));
    let mut previous = f64::INFINITY;
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        sol.filters = min_leakage_filters(ch, cfg, &sol.precoders)?;
        history.push(weighted_leakage(ch, &sol, cfg)?);

        // reciprocal half: old filters act as precoders
        sol.precoders = min_leakage_filters(rev_ch, rev_cfg, &sol.filters)?;
        let wli = weighted_leakage(ch, &sol, cfg)?;
        history.push(wli);

        if normalized_wli(wli, cfg) < opts.wli_stop {
            stop_reason = StopReason::WliThreshold;
            break;
        }
        if previous.is_finite() && (previous - wli).abs() <= opts.rel_stop * previous {
            stop_reason = StopReason::RelativeChange;
            break;
        }
        previous = wli;
    }

    // filters matched to the final precoders
    sol.filters = min_leakage_filters(ch, cfg, &sol.precoders)?;
    let per_rx_leakage = per_receiver_leakage(ch, &sol, cfg)?;
    let trace = IterationTrace {
        metric: TraceMetric::Wli,
        history,
        per_rx_leakage,
        iterations,
        converged: stop_reason != StopReason::MaxIterations,
        stop_reason,
    };
    Ok((sol, trace))
}

/// Interference-plus-noise covariance seen by stream `l` of user `k`:
/// every stream in the network except the desired one, plus identity noise.
pub fn stream_covariance(
    k: usize,
    l: usize,
    ch: &ChannelSet,
    sol: &Solution,
    cfg: &NetworkConfig,
) -> Result<HermitianMatrix> {
    if k >= cfg.users || l >= cfg.streams[k] {
        return Err(Error::ShapeMismatch(format!("stream ({k}, {l}) out of range")));
    }
    stream_covariance_from(k, l, ch, &sol.precoders, cfg)
}

fn stream_covariance_from(
    k: usize,
    l: usize,
    ch: &ChannelSet,
    precoders: &[CMat],
    cfg: &NetworkConfig,
) -> Result<HermitianMatrix> {
    let n = ch.rx_dim(k);
    let mut b = CMat::identity(n, n);
    for (j, v) in precoders.iter().enumerate() {
        let w = Complex64::new(cfg.forward_power(j) / cfg.streams[j] as f64, 0.0);
        let hv = ch.h(k, j) * v;
        for s in 0..hv.ncols() {
            if j == k && s == l {
                continue;
            }
            let col = hv.column(s);
            b += (col * col.adjoint()) * w;
        }
    }
    HermitianMatrix::new(b)
}

/// Unit-norm `B⁻¹h`, the maximizer of `|u†h|² / (u†Bu)`.
pub fn max_sinr_vector(b: &HermitianMatrix, h_eff: &CVec) -> Result<CVec> {
    if h_eff.norm() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let x = solve_pd(b, h_eff)?;
    let nrm = x.norm();
    if !(nrm > 0.0) || !nrm.is_finite() {
        return Err(Error::ZeroDirection);
    }
    Ok(x / Complex64::new(nrm, 0.0))
}

fn max_sinr_filters(ch: &ChannelSet, cfg: &NetworkConfig, precoders: &[CMat]) -> Result<Vec<CMat>> {
    (0..cfg.users)
        .map(|k| {
            let d = cfg.streams[k];
            let mut u = CMat::zeros(ch.rx_dim(k), d);
            let direct = ch.h(k, k) * &precoders[k];
            for l in 0..d {
                let b = stream_covariance_from(k, l, ch, precoders, cfg)?;
                let h_eff = direct.column(l).into_owned();
                u.set_column(l, &max_sinr_vector(&b, &h_eff)?);
            }
            Ok(u)
        })
        .collect()
}

fn check_rank(precoders: &[CMat]) -> Result<()> {
    for (user, v) in precoders.iter().enumerate() {
        let condition = condition_number(v);
        if !(condition <= MAX_PRECODER_CONDITION) {
            return Err(Error::IllConditioned { user, condition });
        }
    }
    Ok(())
}

fn relative_change_below(previous: f64, current: f64, tol: f64) -> bool {
    previous.is_finite() && (previous - current).abs() <= tol * previous.abs()
}

/// Max-SINR alternating optimization. The trace tracks the forward sum
/// rate; with restarts the highest final sum rate wins.
pub fn run_max_sinr(ch: &ChannelSet, cfg: &NetworkConfig, opts: &SolverOptions) -> Result<(Solution, IterationTrace)> {
    check_inputs(ch, cfg, opts)?;
    let rev_ch = reciprocal_channels(ch);
    let rev_cfg = cfg.reversed();

    let mut best: Option<(Solution, IterationTrace)> = None;
    for init in restart_seeds(opts, opts.restarts) {
        let mut precoders = initial_precoders(cfg, &init)?;
        let mut history = Vec::new();
        let mut stop_reason = StopReason::MaxIterations;
        let mut iterations = 0;
        let mut sol;
        loop {
            iterations += 1;
            check_rank(&precoders)?;
            let filters = max_sinr_filters(ch, cfg, &precoders)?;
            sol = Solution { precoders, filters };
            let rate = metrics::sum_rate(ch, &sol, cfg)?.sum_rate;
            let previous = history.last().copied().unwrap_or(f64::NAN);
            history.push(rate);
            if relative_change_below(previous, rate, opts.rel_stop) {
                stop_reason = StopReason::RelativeChange;
                break;
            }
            if iterations >= opts.max_iterations {
                break;
            }
            precoders = max_sinr_filters(&rev_ch, &rev_cfg, &sol.filters)?;
        }
        let per_rx_leakage = per_receiver_leakage(ch, &sol, cfg)?;
        let trace = IterationTrace {
            metric: TraceMetric::SumRate,
            history,
            per_rx_leakage,
            iterations,
            converged: stop_reason != StopReason::MaxIterations,
            stop_reason,
        };
        let better = match &best {
            None => true,
            Some((_, t)) => trace.final_value() > t.final_value(),
        };
        if better {
            best = Some((sol, trace));
        }
    }
    Ok(best.expect("at least one restart"))
}

fn to_matrix2(m: &CMat) -> Matrix2<Complex64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

fn checked_inverse(m: &CMat, name: &str) -> Result<Matrix2<Complex64>> {
    let m2 = to_matrix2(m);
    let det = m2.determinant();
    let scale = m2.norm_squared();
    if !(det.norm() > 1e-12 * scale) {
        return Err(Error::Singular(name.to_string()));
    }
    m2.try_inverse().ok_or_else(|| Error::Singular(name.to_string()))
}

/// Both eigenvectors of a general 2×2 complex matrix.
fn eigenvectors_2x2(e: &Matrix2<Complex64>) -> [CVec; 2] {
    let tr = e[(0, 0)] + e[(1, 1)];
    let det = e.determinant();
    let disc = (tr * tr - det * 4.0).sqrt();
    let roots = [(tr + disc) * 0.5, (tr - disc) * 0.5];
    roots.map(|lambda| {
        // null vector of E − λI from whichever row is better conditioned
        let a = CVec::from_vec(vec![e[(0, 1)], lambda - e[(0, 0)]]);
        let b = CVec::from_vec(vec![lambda - e[(1, 1)], e[(1, 0)]]);
        let v = if a.norm() >= b.norm() { a } else { b };
        if v.norm() == 0.0 {
            // E = λI: every vector works
            CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
        } else {
            let n = v.norm();
            v / Complex64::new(n, 0.0)
        }
    })
}

/// Global-channel-knowledge alignment for three users with two antennas
/// and one stream each.
///
/// `V[1]` is an eigenvector of `H31⁻¹ H32 H12⁻¹ H13 H23⁻¹ H21`, which makes
/// the two interferers colinear at every receiver; `V[2]` and `V[3]` follow
/// from `V[1]`. Of the two eigenvectors, the one whose weakest direct link
/// `|U[k]† H[k][k] V[k]|` is largest is kept.
pub fn closed_form_ia_3user(ch: &ChannelSet) -> Result<Solution> {
    if ch.users() != 3 {
        return Err(Error::Topology(format!("closed form needs 3 users, got {}", ch.users())));
    }
    for k in 0..3 {
        if ch.rx_dim(k) != 2 || ch.tx_dim(k) != 2 {
            return Err(Error::Topology("closed form needs 2 antennas at every node".into()));
        }
    }
    if ch.has_colored_noise() {
        return Err(Error::Input("whiten the channel set first".into()));
    }
    // zero-based: H[r][t], receiver r, transmitter t
    let h = |r: usize, t: usize| to_matrix2(ch.h(r, t));
    let inv31 = checked_inverse(ch.h(2, 0), "H[3][1]")?;
    let inv12 = checked_inverse(ch.h(0, 1), "H[1][2]")?;
    let inv23 = checked_inverse(ch.h(1, 2), "H[2][3]")?;
    let inv32 = checked_inverse(ch.h(2, 1), "H[3][2]")?;
    let e = inv31 * h(2, 1) * inv12 * h(0, 2) * inv23 * h(1, 0);

    let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 1.0);
    let normalize = |v: CVec| {
        let n = v.norm();
        v / Complex64::new(n, 0.0)
    };
    let mut best: Option<(f64, Solution)> = None;
    for v1 in eigenvectors_2x2(&e) {
        let v1m = nalgebra::Vector2::new(v1[0], v1[1]);
        let v2 = inv32 * h(2, 0) * v1m;
        let v3 = inv23 * h(1, 0) * v1m;
        let precoders: Vec<CMat> = [v1m, v2, v3]
            .iter()
            .map(|v| {
                let col = normalize(CVec::from_vec(vec![v[0], v[1]]));
                CMat::from_column_slice(2, 1, col.as_slice())
            })
            .collect();
        let filters = min_leakage_filters(ch, &cfg, &precoders)?;
        let sol = Solution { precoders, filters };
        let weakest = (0..3)
            .map(|k| (sol.filters[k].adjoint() * ch.h(k, k) * &sol.precoders[k])[(0, 0)].norm())
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(w, _)| weakest > *w) {
            best = Some((weakest, sol));
        }
    }
    Ok(best.expect("two candidates").1)
}

/// Selfish best response of user `k`: whiten the direct channel by the
/// current interference-plus-noise and transmit on its strongest `d[k]`
/// right singular directions.
fn selfish_precoder(k: usize, ch: &ChannelSet, cfg: &NetworkConfig, precoders: &[CMat]) -> Result<CMat> {
    let q = covariance_from_precoders(k, ch, precoders, cfg)?;
    let w = inv_sqrt_pd(&q.shifted(1.0))?;
    let a = w.matrix() * ch.h(k, k);
    let gram = HermitianMatrix::new(a.adjoint() * &a)?;
    Ok(eigh_largest(&gram, cfg.streams[k])?.vectors)
}

/// Round-robin selfish interference avoidance: each user in turn
/// best-responds to the others' current precoders, then all receivers use
/// per-stream MMSE combiners. Stops when the sum rate settles.
pub fn run_interference_avoidance(
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    opts: &SolverOptions,
) -> Result<(Solution, IterationTrace)> {
    check_inputs(ch, cfg, opts)?;
    let mut precoders = initial_precoders(cfg, &restart_seeds(opts, opts.restarts)[0])?;
    let mut history = Vec::new();
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut sol;
    loop {
        iterations += 1;
        for k in 0..cfg.users {
            precoders[k] = selfish_precoder(k, ch, cfg, &precoders)?;
        }
        let filters = max_sinr_filters(ch, cfg, &precoders)?;
        sol = Solution { precoders: precoders.clone(), filters };
        let rate = metrics::sum_rate(ch, &sol, cfg)?.sum_rate;
        let previous = history.last().copied().unwrap_or(f64::NAN);
        history.push(rate);
        if relative_change_below(previous, rate, opts.rel_stop) {
            stop_reason = StopReason::RelativeChange;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
    }
    let per_rx_leakage = per_receiver_leakage(ch, &sol, cfg)?;
    Ok((
        sol,
        IterationTrace {
            metric: TraceMetric::SumRate,
            history,
            per_rx_leakage,
            iterations,
            converged: stop_reason != StopReason::MaxIterations,
            stop_reason,
        },
    ))
}

/// Re-runs user `k`'s selfish update on `sol` and returns the solution with
/// refreshed MMSE filters.
pub fn selfish_update(k: usize, ch: &ChannelSet, cfg: &NetworkConfig, sol: &Solution) -> Result<Solution> {
    sol.check(ch, cfg)?;
    let mut precoders = sol.precoders.clone();
    precoders[k] = selfish_precoder(k, ch, cfg, &precoders)?;
    let filters = max_sinr_filters(ch, cfg, &precoders)?;
    Ok(Solution { precoders, filters })
}

/// MMSE (Max-SINR) receive filters for fixed precoders.
pub fn mmse_filters(ch: &ChannelSet, cfg: &NetworkConfig, precoders: &[CMat]) -> Result<Vec<CMat>> {
    max_sinr_filters(ch, cfg, precoders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_network;
    use crate::numerics::max_abs;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn e(n: usize, i: usize) -> CMat {
        let mut m = CMat::zeros(n, 1);
        m[(i, 0)] = c(1.0);
        m
    }

    #[test]
    fn covariance_single_user_is_zero() {
        let cfg = NetworkConfig::symmetric(1, 3, 3, 1, 2.0);
        let ch = generate_network(&cfg, 1).unwrap();
        let sol = Solution { precoders: vec![e(3, 0)], filters: vec![e(3, 0)] };
        let q = interference_covariance(0, &ch, &sol, &cfg).unwrap();
        assert_eq!(q, HermitianMatrix::zeros(3));
    }

    #[test]
    fn covariance_two_users() {
        let cfg = NetworkConfig::symmetric(2, 2, 2, 1, 1.0);
        let id = CMat::identity(2, 2);
        let ch = ChannelSet::new(vec![vec![id.clone(); 2]; 2]).unwrap();
        let sol = Solution { precoders: vec![e(2, 1), e(2, 0)], filters: vec![e(2, 0), e(2, 0)] };
        let q = interference_covariance(0, &ch, &sol, &cfg).unwrap();
        assert_eq!(q, HermitianMatrix::from_real_diagonal(&[1.0, 0.0]));
        assert!(interference_covariance(2, &ch, &sol, &cfg).is_err());
    }

    #[test]
    fn leakage_examples() {
        let u = e(2, 0);
        assert_eq!(leakage(&u, &HermitianMatrix::zeros(2)).unwrap(), 0.0);
        assert_eq!(leakage(&u, &HermitianMatrix::from_real_diagonal(&[1.0, 2.0])).unwrap(), 1.0);
        assert!(leakage(&e(3, 0), &HermitianMatrix::zeros(2)).is_err());
    }

    #[test]
    fn stream_covariance_examples() {
        let cfg = NetworkConfig::symmetric(1, 2, 2, 1, 1.0);
        let ch = ChannelSet::new(vec![vec![CMat::identity(2, 2)]]).unwrap();
        let sol = Solution { precoders: vec![e(2, 0)], filters: vec![e(2, 0)] };
        assert_eq!(stream_covariance(0, 0, &ch, &sol, &cfg).unwrap(), HermitianMatrix::identity(2));

        let cfg = NetworkConfig::symmetric(1, 2, 2, 2, 2.0);
        let v = CMat::identity(2, 2);
        let sol = Solution { precoders: vec![v.clone()], filters: vec![v] };
        let b = stream_covariance(0, 0, &ch, &sol, &cfg).unwrap();
        assert_eq!(b, HermitianMatrix::from_real_diagonal(&[1.0, 2.0]));
        assert!(stream_covariance(0, 2, &ch, &sol, &cfg).is_err());
    }

    #[test]
    fn max_sinr_vector_examples() {
        let h = CVec::from_vec(vec![c(3.0), c(4.0)]);
        let u = max_sinr_vector(&HermitianMatrix::identity(2), &h).unwrap();
        assert!((u[0] - c(0.6)).norm() < 1e-15 && (u[1] - c(0.8)).norm() < 1e-15);

        // component-wise inverse: (1, 1/100) normalized
        let b = HermitianMatrix::from_real_diagonal(&[1.0, 100.0]);
        let u = max_sinr_vector(&b, &CVec::from_vec(vec![c(1.0), c(1.0)])).unwrap();
        let n = (1.0f64 + 1e-4).sqrt();
        assert!((u[0] - c(1.0 / n)).norm() < 1e-14);
        assert!((u[1] - c(0.01 / n)).norm() < 1e-14);

        let zero = CVec::zeros(2);
        assert_eq!(max_sinr_vector(&b, &zero), Err(Error::ZeroDirection));
    }

    #[test]
    fn closed_form_rejects_wrong_topology() {
        let cfg = NetworkConfig::symmetric(2, 2, 2, 1, 1.0);
        let ch = generate_network(&cfg, 3).unwrap();
        assert!(matches!(closed_form_ia_3user(&ch), Err(Error::Topology(_))));
        let cfg = NetworkConfig::symmetric(3, 3, 3, 1, 1.0);
        let ch = generate_network(&cfg, 3).unwrap();
        assert!(matches!(closed_form_ia_3user(&ch), Err(Error::Topology(_))));
    }

    #[test]
    fn closed_form_rejects_singular_cross_channel() {
        let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 1.0);
        let ch = generate_network(&cfg, 3).unwrap();
        let mut h: Vec<Vec<CMat>> = (0..3).map(|r| (0..3).map(|t| ch.h(r, t).clone()).collect()).collect();
        h[2][0] = CMat::from_element(2, 2, c(1.0));
        let ch = ChannelSet::new(h).unwrap();
        assert!(matches!(closed_form_ia_3user(&ch), Err(Error::Singular(_))));
    }

    #[test]
    fn min_leakage_solution_is_orthonormal() {
        let cfg = NetworkConfig::symmetric(3, 3, 3, 1, 1.0).with_streams(&[2, 1, 1]);
        let ch = generate_network(&cfg, 5).unwrap();
        let (sol, trace) = run_min_leakage(&ch, &cfg, &SolverOptions::seeded(1)).unwrap();
        for m in sol.precoders.iter().chain(&sol.filters) {
            let g = m.adjoint() * m;
            assert!(max_abs(&(g - CMat::identity(m.ncols(), m.ncols()))) < 1e-10);
        }
        assert_eq!(trace.metric, TraceMetric::Wli);
        assert_eq!(trace.history.len(), 2 * trace.iterations);
    }

    #[test]
    fn solvers_reject_colored_noise() {
        let ch =
            ChannelSet::with_noise(vec![vec![CMat::identity(2, 2)]], vec![Some(HermitianMatrix::identity(2))]).unwrap();
        let cfg = NetworkConfig::symmetric(1, 2, 2, 1, 1.0);
        assert!(run_min_leakage(&ch, &cfg, &SolverOptions::default()).is_err());
    }

    #[test]
    fn provided_init_is_used() {
        let cfg = NetworkConfig::symmetric(2, 2, 2, 1, 1.0);
        let ch = generate_network(&cfg, 5).unwrap();
        let start = Solution { precoders: vec![e(2, 0), e(2, 1)], filters: vec![e(2, 0), e(2, 1)] };
        let opts = SolverOptions { init: Init::Provided(start), max_iterations: 1, ..Default::default() };
        let (a, _) = run_min_leakage(&ch, &cfg, &opts).unwrap();
        let (b, _) = run_min_leakage(&ch, &cfg, &opts).unwrap();
        assert_eq!(a, b);
        let bad = Solution { precoders: vec![e(3, 0), e(2, 1)], filters: vec![] };
        let opts = SolverOptions { init: Init::Provided(bad), ..Default::default() };
        assert!(run_min_leakage(&ch, &cfg, &opts).is_err());
    }
}
