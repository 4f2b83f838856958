//! Rates, SINRs, feasibility fractions, DoF slopes and the non-iterative
//! baselines.

use num_complex::Complex64;

use crate::alignment::{interference_covariance, stream_covariance, Solution};
use crate::channel::{ChannelSet, NetworkConfig};
use crate::error::{Error, Result};
use crate::numerics::{eigh_smallest, gram_outer, logdet_pd, CMat, HermitianMatrix};

/// Trace below which a receiver counts as interference free.
pub const NO_INTERFERENCE_TRACE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_stream_sinr: Vec<Vec<f64>>,
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
    /// Channel uses per network use: 1 for plain MIMO, `T` for `T`-slot
    /// extensions.
    pub per_slot_normalizer: f64,
}

/// SINR of stream `l` at receiver `k` with combiner `U[k][:, l]` and
/// interference-plus-noise covariance `B^[kl]`.
pub fn stream_sinr(k: usize, l: usize, ch: &ChannelSet, sol: &Solution, cfg: &NetworkConfig) -> Result<f64> {
    let b = stream_covariance(k, l, ch, sol, cfg)?;
    let u = sol.filters[k].column(l);
    let v = sol.precoders[k].column(l);
    let signal = (u.adjoint() * ch.h(k, k) * v)[(0, 0)].norm_sqr();
    if signal == 0.0 {
        return Ok(0.0);
    }
    let denom = (u.adjoint() * b.matrix() * u)[(0, 0)].re;
    Ok(signal / denom * cfg.forward_power(k) / cfg.streams[k] as f64)
}

pub fn sum_rate(ch: &ChannelSet, sol: &Solution, cfg: &NetworkConfig) -> Result<RateReport> {
    sum_rate_per_slot(ch, sol, cfg, 1)
}

/// Per-stream `log₂(1 + SINR)` rates divided by the number of slots the
/// (possibly extended) channel spans.
pub fn sum_rate_per_slot(ch: &ChannelSet, sol: &Solution, cfg: &NetworkConfig, slots: usize) -> Result<RateReport> {
    if slots == 0 {
        return Err(Error::Input("slot count must be positive".into()));
    }
    if sol.users() != cfg.users || sol.filters.len() != cfg.users {
        return Err(Error::ShapeMismatch("solution does not match network size".into()));
    }
    let norm = slots as f64;
    let mut per_stream_sinr = Vec::with_capacity(cfg.users);
    let mut per_user_rate = Vec::with_capacity(cfg.users);
    for k in 0..cfg.users {
        let sinrs = (0..cfg.streams[k]).map(|l| stream_sinr(k, l, ch, sol, cfg)).collect::<Result<Vec<_>>>()?;
        per_user_rate.push(sinrs.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / norm);
        per_stream_sinr.push(sinrs);
    }
    let sum_rate = per_user_rate.iter().sum();
    Ok(RateReport { per_stream_sinr, per_user_rate, sum_rate, per_slot_normalizer: norm })
}

/// `U[k]† H[k][k] V[k]`, the `d×d` channel left after interference-free
/// reception.
pub fn effective_channel(k: usize, ch: &ChannelSet, sol: &Solution) -> CMat {
    sol.filters[k].adjoint() * ch.h(k, k) * &sol.precoders[k]
}

/// `log₂ det(I + (P/d) H̄ H̄†)`.
pub fn aligned_rate(h_bar: &CMat, p: f64, d: usize) -> Result<f64> {
    if !(p > 0.0) || d == 0 {
        return Err(Error::Input("power and stream count must be positive".into()));
    }
    let n = h_bar.nrows();
    let m = CMat::identity(n, n) + (h_bar * h_bar.adjoint()) * Complex64::new(p / d as f64, 0.0);
    logdet_pd(&HermitianMatrix::new(m)?)
}

/// Share of receiver `k`'s interference power inside its `d[k]` least
/// interfered dimensions; 0 when there is no interference at all.
pub fn interference_fraction(k: usize, ch: &ChannelSet, sol: &Solution, cfg: &NetworkConfig) -> Result<f64> {
    let q = interference_covariance(k, ch, sol, cfg)?;
    let total = q.trace();
    if total <= NO_INTERFERENCE_TRACE {
        return Ok(0.0);
    }
    let inside: f64 = eigh_smallest(&q, cfg.streams[k])?.values.iter().sum();
    Ok((inside / total).clamp(0.0, 1.0))
}

/// Least-squares slope of sum rate against `log₂ P`.
pub fn dof_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Input(format!("slope needs at least 2 points, got {}", points.len())));
    }
    if points.iter().any(|&(p, r)| !(p > 0.0) || !r.is_finite()) {
        return Err(Error::Input("powers must be positive and rates finite".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(p, _)| p.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|&(_, r)| r).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("slope needs at least two distinct powers".into()));
    }
    let sxy: f64 = xs.iter().zip(points).map(|(x, &(_, r))| (x - mx) * (r - my)).sum();
    Ok(sxy / sxx)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn white_input_rate(h: &CMat, p: f64, m: usize, noise: &HermitianMatrix) -> Result<f64> {
    let signal = gram_outer(h).scaled(p / m as f64);
    let total = HermitianMatrix::new(noise.matrix() + signal.matrix())?;
    Ok(logdet_pd(&total)? - logdet_pd(noise)?)
}

/// Per-user TDMA rates: user `k` owns `1/K` of the time at power `K·P[k]`
/// spread evenly over its antennas.
pub fn tdma_user_rates(ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    ch.check_config(cfg)?;
    let kf = cfg.users as f64;
    (0..cfg.users)
        .map(|k| {
            let noise = HermitianMatrix::identity(ch.rx_dim(k));
            Ok(white_input_rate(ch.h(k, k), kf * cfg.forward_power(k), cfg.tx_antennas[k], &noise)? / kf)
        })
        .collect()
}

pub fn tdma_sum_rate(ch: &ChannelSet, cfg: &NetworkConfig) -> Result<f64> {
    Ok(tdma_user_rates(ch, cfg)?.iter().sum())
}

/// Per-user rates when everyone transmits a white covariance at once and
/// treats interference as noise.
pub fn isotropic_user_rates(ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    ch.check_config(cfg)?;
    (0..cfg.users)
        .map(|k| {
            let n = ch.rx_dim(k);
            let mut r = CMat::identity(n, n);
            for j in (0..cfg.users).filter(|&j| j != k) {
                let w = cfg.forward_power(j) / cfg.tx_antennas[j] as f64;
                r += gram_outer(ch.h(k, j)).scaled(w).into_matrix();
            }
            let noise = HermitianMatrix::new(r)?;
            white_input_rate(ch.h(k, k), cfg.forward_power(k), cfg.tx_antennas[k], &noise)
        })
        .collect()
}

pub fn isotropic_sum_rate(ch: &ChannelSet, cfg: &NetworkConfig) -> Result<f64> {
    Ok(isotropic_user_rates(ch, cfg)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_network;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn e(n: usize, i: usize) -> CMat {
        let mut m = CMat::zeros(n, 1);
        m[(i, 0)] = c(1.0);
        m
    }

    #[test]
    fn sinr_examples() {
        let cfg = NetworkConfig::symmetric(1, 2, 2, 1, 1.0);
        let ch = ChannelSet::new(vec![vec![CMat::identity(2, 2)]]).unwrap();
        let sol = Solution { precoders: vec![e(2, 0)], filters: vec![e(2, 0)] };
        assert_eq!(stream_sinr(0, 0, &ch, &sol, &cfg).unwrap(), 1.0);

        let zero = ChannelSet::new(vec![vec![CMat::zeros(2, 2)]]).unwrap();
        assert_eq!(stream_sinr(0, 0, &zero, &sol, &cfg).unwrap(), 0.0);
        assert_eq!(sum_rate(&zero, &sol, &cfg).unwrap().sum_rate, 0.0);
    }

    #[test]
    fn single_user_rate() {
        let cfg = NetworkConfig::symmetric(1, 2, 2, 1, 3.0);
        let ch = ChannelSet::new(vec![vec![CMat::identity(2, 2)]]).unwrap();
        let sol = Solution { precoders: vec![e(2, 0)], filters: vec![e(2, 0)] };
        let r = sum_rate(&ch, &sol, &cfg).unwrap();
        assert!((r.sum_rate - 2.0).abs() < 1e-15);
        assert_eq!(r.per_slot_normalizer, 1.0);
        let r2 = sum_rate_per_slot(&ch, &sol, &cfg, 2).unwrap();
        assert!((r2.sum_rate - 1.0).abs() < 1e-15);
    }

    #[test]
    fn aligned_rate_examples() {
        for d in 1..4 {
            let r = aligned_rate(&CMat::identity(d, d), d as f64, d).unwrap();
            assert!((r - d as f64).abs() < 1e-14);
        }
        let h = CMat::from_element(1, 1, Complex64::new(0.3, -1.2));
        let r = aligned_rate(&h, 5.0, 1).unwrap();
        assert!((r - (1.0 + 5.0 * h[(0, 0)].norm_sqr()).log2()).abs() < 1e-14);
        assert!(aligned_rate(&h, 0.0, 1).is_err());
    }

    #[test]
    fn fraction_examples() {
        // Q = diag(1, 3): interferers along e1 (power 1) and e2 (power 3)
        let cfg = NetworkConfig { power: vec![1.0, 1.0, 3.0], ..NetworkConfig::symmetric(3, 2, 2, 1, 1.0) };
        let id = CMat::identity(2, 2);
        let ch = ChannelSet::new(vec![vec![id.clone(); 3]; 3]).unwrap();
        let sol = Solution { precoders: vec![e(2, 0), e(2, 0), e(2, 1)], filters: vec![e(2, 0), e(2, 0), e(2, 0)] };
        assert!((interference_fraction(0, &ch, &sol, &cfg).unwrap() - 0.25).abs() < 1e-15);

        let cfg1 = NetworkConfig::symmetric(1, 2, 2, 1, 1.0);
        let ch1 = generate_network(&cfg1, 0).unwrap();
        let sol1 = Solution { precoders: vec![e(2, 0)], filters: vec![e(2, 0)] };
        assert_eq!(interference_fraction(0, &ch1, &sol1, &cfg1).unwrap(), 0.0);
    }

    #[test]
    fn slope_examples() {
        let pts: Vec<(f64, f64)> = [1.0, 10.0, 100.0].iter().map(|&p: &f64| (p, 3.0 * p.log2())).collect();
        assert!((dof_slope(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(dof_slope(&[(1.0, 4.0), (100.0, 4.0)]).unwrap(), 0.0);
        assert!(dof_slope(&[(1.0, 4.0)]).is_err());
        assert!(dof_slope(&[(2.0, 4.0), (2.0, 5.0)]).is_err());
    }

    #[test]
    fn tdma_examples() {
        let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 1.0);
        let id = CMat::identity(2, 2);
        let ch = ChannelSet::new(vec![vec![id.clone(); 3]; 3]).unwrap();
        // (1/3)·3·log₂det(I + 1.5 I) = 2 log₂ 2.5
        let r = tdma_sum_rate(&ch, &cfg).unwrap();
        assert!((r - 2.0 * 2.5f64.log2()).abs() < 1e-14);

        let cfg1 = NetworkConfig::symmetric(1, 2, 2, 1, 4.0);
        let ch1 = generate_network(&cfg1, 2).unwrap();
        let direct = aligned_rate(ch1.h(0, 0), 4.0, 2).unwrap();
        assert!((tdma_sum_rate(&ch1, &cfg1).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn tdma_monotone_in_power() {
        let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 1.0);
        for seed in 0..20 {
            let ch = generate_network(&cfg, seed).unwrap();
            let lo = tdma_sum_rate(&ch, &cfg).unwrap();
            let hi = tdma_sum_rate(&ch, &cfg.clone().with_power(2.0)).unwrap();
            assert!(hi > lo);
        }
    }

    #[test]
    fn isotropic_examples() {
        let cfg1 = NetworkConfig::symmetric(1, 2, 2, 1, 4.0);
        let ch1 = generate_network(&cfg1, 2).unwrap();
        let direct = aligned_rate(ch1.h(0, 0), 4.0, 2).unwrap();
        assert!((isotropic_sum_rate(&ch1, &cfg1).unwrap() - direct).abs() < 1e-12);

        let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 2.0);
        let g = generate_network(&cfg, 4).unwrap();
        let h: Vec<Vec<CMat>> = (0..3)
            .map(|r| (0..3).map(|t| if r == t { g.h(r, t).clone() } else { CMat::zeros(2, 2) }).collect())
            .collect();
        let ch = ChannelSet::new(h).unwrap();
        let expected: f64 = (0..3).map(|k| aligned_rate(ch.h(k, k), 2.0, 2).unwrap()).sum();
        assert!((isotropic_sum_rate(&ch, &cfg).unwrap() - expected).abs() < 1e-12);
    }
}
