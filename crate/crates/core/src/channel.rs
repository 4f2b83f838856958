//! Network parameterization and channel models.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{inv_sqrt_pd, max_abs, CMat, HermitianMatrix};

/// Antenna counts, stream demands and powers of a K-user interference
/// network. Powers are linear and normalized to unit noise power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub users: usize,
    pub tx_antennas: Vec<usize>,
    pub rx_antennas: Vec<usize>,
    pub streams: Vec<usize>,
    pub power: Vec<f64>,
    /// Transmit powers in the reciprocal network; `None` reuses `power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverse_power: Option<Vec<f64>>,
}

impl NetworkConfig {
    pub fn symmetric(users: usize, tx: usize, rx: usize, streams: usize, power: f64) -> Self {
        NetworkConfig {
            users,
            tx_antennas: vec![tx; users],
            rx_antennas: vec![rx; users],
            streams: vec![streams; users],
            power: vec![power; users],
            reverse_power: None,
        }
    }

    pub fn with_streams(mut self, streams: &[usize]) -> Self {
        self.streams = streams.to_vec();
        self
    }

    /// Sets every forward and reciprocal power to `p`.
    pub fn with_power(mut self, p: f64) -> Self {
        self.power = vec![p; self.users];
        self.reverse_power = None;
        self
    }

    pub fn forward_power(&self, k: usize) -> f64 {
        self.power[k]
    }

    pub fn reverse_power(&self, k: usize) -> f64 {
        match &self.reverse_power {
            Some(p) => p[k],
            None => self.power[k],
        }
    }

    pub fn total_streams(&self) -> usize {
        self.streams.iter().sum()
    }

    /// The network with transmitters and receivers swapped, forward and
    /// reciprocal powers exchanged.
    pub fn reversed(&self) -> NetworkConfig {
        let reverse: Vec<f64> = (0..self.users).map(|k| self.reverse_power(k)).collect();
        NetworkConfig {
            users: self.users,
            tx_antennas: self.rx_antennas.clone(),
            rx_antennas: self.tx_antennas.clone(),
            streams: self.streams.clone(),
            power: reverse,
            reverse_power: Some(self.power.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.users;
        if k == 0 {
            return Err(Error::InvalidConfig("at least one user is required".into()));
        }
        let lens = [
            ("tx_antennas", self.tx_antennas.len()),
            ("rx_antennas", self.rx_antennas.len()),
            ("streams", self.streams.len()),
            ("power", self.power.len()),
        ];
        for (name, len) in lens {
            if len != k {
                return Err(Error::InvalidConfig(format!("{name} has {len} entries, expected {k}")));
            }
        }
        if let Some(rp) = &self.reverse_power {
            if rp.len() != k {
                return Err(Error::InvalidConfig(format!("reverse_power has {} entries, expected {k}", rp.len())));
            }
        }
        for u in 0..k {
            let cap = self.tx_antennas[u].min(self.rx_antennas[u]);
            let d = self.streams[u];
            if d == 0 || d > cap {
                return Err(Error::InvalidConfig(format!(
                    "user {u}: {d} streams with {} tx / {} rx antennas",
                    self.tx_antennas[u], self.rx_antennas[u]
                )));
            }
            let (p, rp) = (self.forward_power(u), self.reverse_power(u));
            if !(p > 0.0 && p.is_finite() && rp > 0.0 && rp.is_finite()) {
                return Err(Error::InvalidConfig(format!("user {u}: powers must be positive")));
            }
        }
        Ok(())
    }
}

/// The K×K grid of channel matrices plus optional receiver noise
/// covariances. `h(k, l)` maps transmitter `l` to receiver `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    h: Vec<Vec<CMat>>,
    noise_cov: Vec<Option<HermitianMatrix>>,
}

impl ChannelSet {
    pub fn new(h: Vec<Vec<CMat>>) -> Result<Self> {
        let k = h.len();
        Self::with_noise(h, vec![None; k])
    }

    pub fn with_noise(h: Vec<Vec<CMat>>, noise_cov: Vec<Option<HermitianMatrix>>) -> Result<Self> {
        let k = h.len();
        if k == 0 {
            return Err(Error::ShapeMismatch("empty channel set".into()));
        }
        if h.iter().any(|row| row.len() != k) || noise_cov.len() != k {
            return Err(Error::ShapeMismatch("channel grid must be K x K".into()));
        }
        for r in 0..k {
            for t in 0..k {
                if h[r][t].nrows() != h[r][0].nrows() || h[r][t].ncols() != h[0][t].ncols() {
                    return Err(Error::ShapeMismatch(format!(
                        "H[{r}][{t}] is {}x{}, inconsistent with its row/column",
                        h[r][t].nrows(),
                        h[r][t].ncols()
                    )));
                }
            }
            if let Some(cov) = &noise_cov[r] {
                if cov.dim() != h[r][0].nrows() {
                    return Err(Error::ShapeMismatch(format!("noise covariance of receiver {r}")));
                }
            }
        }
        Ok(ChannelSet { h, noise_cov })
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self, rx: usize, tx: usize) -> &CMat {
        &self.h[rx][tx]
    }

    pub fn rx_dim(&self, k: usize) -> usize {
        self.h[k][0].nrows()
    }

    pub fn tx_dim(&self, l: usize) -> usize {
        self.h[0][l].ncols()
    }

    pub fn noise_cov(&self, k: usize) -> Option<&HermitianMatrix> {
        self.noise_cov[k].as_ref()
    }

    pub fn has_colored_noise(&self) -> bool {
        self.noise_cov.iter().any(Option::is_some)
    }

    pub fn check_config(&self, cfg: &NetworkConfig) -> Result<()> {
        if cfg.users != self.users() {
            return Err(Error::ShapeMismatch(format!(
                "config has {} users, channels have {}",
                cfg.users,
                self.users()
            )));
        }
        for k in 0..cfg.users {
            if self.rx_dim(k) != cfg.rx_antennas[k] || self.tx_dim(k) != cfg.tx_antennas[k] {
                return Err(Error::ShapeMismatch(format!("antenna counts of user {k}")));
            }
        }
        Ok(())
    }
}

/// Samples a circularly symmetric complex Gaussian with `E|z|² = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    // nalgebra's from_fn is column-major; fill row-major so the draw order
    // matches the serialized order
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Draws an i.i.d. unit-variance Rayleigh channel set; a pure function of
/// `(config, seed)`.
pub fn generate_network(config: &NetworkConfig, seed: u64) -> Result<ChannelSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = config.users;
    let h = (0..k)
        .map(|rx| (0..k).map(|tx| gaussian_matrix(&mut rng, config.rx_antennas[rx], config.tx_antennas[tx])).collect())
        .collect();
    ChannelSet::new(h)
}

/// Channels of the reciprocal network: `H'[k][l] = H[l][k]†`.
///
/// The reciprocal receivers are the original transmitters, so any colored
/// noise description of the forward network does not carry over; whiten
/// colored sets first.
pub fn reciprocal_channels(ch: &ChannelSet) -> ChannelSet {
    let k = ch.users();
    let h = (0..k).map(|rx| (0..k).map(|tx| ch.h(tx, rx).adjoint()).collect()).collect();
    ChannelSet { h, noise_cov: vec![None; k] }
}

/// Builds the `T`-slot symbol extension of a scalar network:
/// `slots[t][k][l]` is the slot-`t` gain from transmitter `l` to receiver `k`,
/// and every extended channel is the `T×T` diagonal of those gains.
pub fn extend_diagonal(slots: &[Vec<Vec<Complex64>>], t: usize) -> Result<ChannelSet> {
    if t == 0 {
        return Err(Error::Input("slot count must be at least 1".into()));
    }
    if slots.len() != t {
        return Err(Error::Input(format!("{} slots supplied, {t} expected", slots.len())));
    }
    let k = slots[0].len();
    for (s, grid) in slots.iter().enumerate() {
        if grid.len() != k || grid.iter().any(|row| row.len() != k) {
            return Err(Error::Input(format!("slot {s} is not a {k}x{k} grid")));
        }
    }
    let h = (0..k)
        .map(|rx| {
            (0..k)
                .map(|tx| {
                    let mut m = CMat::zeros(t, t);
                    for (s, grid) in slots.iter().enumerate() {
                        m[(s, s)] = grid[rx][tx];
                    }
                    m
                })
                .collect()
        })
        .collect();
    ChannelSet::new(h)
}

/// Scalar gains of the three-source, three-destination network with one
/// half-duplex amplify-and-forward relay.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayParams {
    /// `slot1[j][i]`: source `i` to destination `j` in the first slot.
    pub slot1: [[Complex64; 3]; 3],
    /// `slot2[j][i]`: source `i` to destination `j` in the second slot.
    pub slot2: [[Complex64; 3]; 3],
    /// Source `i` to relay, first slot.
    pub to_relay: [Complex64; 3],
    /// Relay to destination `j`, second slot.
    pub from_relay: [Complex64; 3],
    pub beta: f64,
}

impl RelayParams {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, beta: f64) -> Self {
        let mut grid = || {
            let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
            for row in g.iter_mut() {
                for z in row.iter_mut() {
                    *z = complex_gaussian(rng);
                }
            }
            g
        };
        let slot1 = grid();
        let slot2 = grid();
        let to_relay = [complex_gaussian(rng), complex_gaussian(rng), complex_gaussian(rng)];
        let from_relay = [complex_gaussian(rng), complex_gaussian(rng), complex_gaussian(rng)];
        RelayParams { slot1, slot2, to_relay, from_relay, beta }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("relay gain {} must be >= 0", self.beta)));
        }
        Ok(())
    }
}

/// Relay amplification that makes the relay's average transmit power equal
/// the per-node power `p`: it receives three unit-gain sources plus unit
/// noise, so `β² = p / (1 + 3p)`.
pub fn default_relay_beta(p: f64) -> f64 {
    (p / (1.0 + 3.0 * p)).sqrt()
}

/// Collapses the two-slot relay protocol into a 3-user 2×2 MIMO
/// interference channel with lower-triangular channels and colored noise
/// `diag(1, 1 + β²|g_out|²)`.
pub fn relay_effective_channels(p: &RelayParams) -> Result<ChannelSet> {
    p.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    let h = (0..3)
        .map(|j| {
            (0..3)
                .map(|i| {
                    let relayed = p.from_relay[j] * p.to_relay[i] * p.beta;
                    CMat::from_row_slice(2, 2, &[p.slot1[j][i], zero, relayed, p.slot2[j][i]])
                })
                .collect()
        })
        .collect();
    let noise = (0..3)
        .map(|j| {
            let second = 1.0 + p.beta * p.beta * p.from_relay[j].norm_sqr();
            Some(HermitianMatrix::from_real_diagonal(&[1.0, second]))
        })
        .collect();
    ChannelSet::with_noise(h, noise)
}

/// Maps colored-noise receivers onto unit white noise: `H'[k][l] = R_k^{-1/2} H[k][l]`
/// with the principal inverse square root.
pub fn whiten_noise(ch: &ChannelSet) -> Result<ChannelSet> {
    let k = ch.users();
    let mut h = Vec::with_capacity(k);
    for rx in 0..k {
        let row: Vec<CMat> = match ch.noise_cov(rx) {
            None => (0..k).map(|tx| ch.h(rx, tx).clone()).collect(),
            Some(cov) => {
                let w = inv_sqrt_pd(cov)?;
                (0..k).map(|tx| w.matrix() * ch.h(rx, tx)).collect()
            }
        };
        h.push(row);
    }
    ChannelSet::new(h)
}

/// Largest absolute entry difference between two equally shaped sets.
pub fn max_entry_difference(a: &ChannelSet, b: &ChannelSet) -> f64 {
    let mut worst: f64 = 0.0;
    for rx in 0..a.users() {
        for tx in 0..a.users() {
            worst = worst.max(max_abs(&(a.h(rx, tx) - b.h(rx, tx))));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gram_outer, logdet_pd};
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::symmetric(3, 2, 2, 1, 1.0).validate().is_ok());
        assert!(NetworkConfig::symmetric(0, 2, 2, 1, 1.0).validate().is_err());
        assert!(NetworkConfig::symmetric(3, 2, 2, 3, 1.0).validate().is_err());
        assert!(NetworkConfig::symmetric(3, 2, 2, 0, 1.0).validate().is_err());
        assert!(NetworkConfig::symmetric(3, 2, 2, 1, 0.0).validate().is_err());
        let mut cfg = NetworkConfig::symmetric(2, 2, 2, 1, 1.0);
        cfg.reverse_power = Some(vec![1.0]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reversed_swaps_roles() {
        let mut cfg = NetworkConfig::symmetric(2, 3, 2, 1, 4.0);
        cfg.reverse_power = Some(vec![1.0, 2.0]);
        let r = cfg.reversed();
        assert_eq!(r.tx_antennas, vec![2, 2]);
        assert_eq!(r.rx_antennas, vec![3, 3]);
        assert_eq!(r.power, vec![1.0, 2.0]);
        assert_eq!(r.reverse_power(1), 4.0);
        assert_eq!(r.reversed(), NetworkConfig { reverse_power: Some(vec![1.0, 2.0]), ..cfg });
    }

    #[test]
    fn generate_shapes_and_determinism() {
        let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 1.0);
        let a = generate_network(&cfg, 7).unwrap();
        let b = generate_network(&cfg, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.users(), 3);
        for rx in 0..3 {
            for tx in 0..3 {
                assert_eq!(a.h(rx, tx).shape(), (2, 2));
                assert!(a.h(rx, tx).iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            }
        }
        assert_ne!(a, generate_network(&cfg, 8).unwrap());
    }

    #[test]
    fn unit_second_moment() {
        let cfg = NetworkConfig::symmetric(1, 1, 1, 1, 1.0);
        let n = 100_000;
        let mean: f64 =
            (0..n).map(|s| generate_network(&cfg, s).unwrap().h(0, 0)[(0, 0)].norm_sqr()).sum::<f64>() / n as f64;
        assert!((0.99..=1.01).contains(&mean), "mean |h|^2 = {mean}");
    }

    #[test]
    fn reciprocal_examples() {
        let id = CMat::identity(2, 2);
        let ch = ChannelSet::new(vec![vec![id.clone(); 2]; 2]).unwrap();
        assert_eq!(reciprocal_channels(&ch), ch);

        let mut h = vec![vec![CMat::zeros(2, 2); 3]; 3];
        h[0][1] = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let r = reciprocal_channels(&ChannelSet::new(h).unwrap());
        let expected = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(r.h(1, 0), &expected);

        let cfg = NetworkConfig::symmetric(3, 3, 2, 1, 1.0);
        let g = generate_network(&cfg, 1).unwrap();
        assert_eq!(reciprocal_channels(&reciprocal_channels(&g)), g);
    }

    #[test]
    fn diagonal_extension() {
        let a = c(1.0, 2.0);
        let b = c(-0.5, 0.25);
        let one = extend_diagonal(&[vec![vec![a]]], 1).unwrap();
        assert_eq!(one.h(0, 0), &CMat::from_element(1, 1, a));
        let two = extend_diagonal(&[vec![vec![a]], vec![vec![b]]], 2).unwrap();
        assert_eq!(two.h(0, 0), &CMat::from_row_slice(2, 2, &[a, c(0.0, 0.0), c(0.0, 0.0), b]));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let slots: Vec<Vec<Vec<Complex64>>> =
            (0..4).map(|_| (0..3).map(|_| (0..3).map(|_| complex_gaussian(&mut rng)).collect()).collect()).collect();
        let ext = extend_diagonal(&slots, 4).unwrap();
        for rx in 0..3 {
            for tx in 0..3 {
                let m = ext.h(rx, tx);
                for i in 0..4 {
                    for j in 0..4 {
                        if i != j {
                            assert_eq!(m[(i, j)], c(0.0, 0.0));
                        }
                    }
                }
            }
        }
        assert!(extend_diagonal(&slots, 5).is_err());
        assert!(extend_diagonal(&slots[..0], 0).is_err());
    }

    #[test]
    fn relay_silent_is_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = RelayParams::random(&mut rng, 0.0);
        let ch = relay_effective_channels(&p).unwrap();
        for j in 0..3 {
            for i in 0..3 {
                let expected = CMat::from_row_slice(2, 2, &[p.slot1[j][i], c(0.0, 0.0), c(0.0, 0.0), p.slot2[j][i]]);
                assert_eq!(ch.h(j, i), &expected);
            }
            assert_eq!(ch.noise_cov(j).unwrap(), &HermitianMatrix::identity(2));
        }
    }

    #[test]
    fn relay_unit_gains() {
        let one = c(1.0, 0.0);
        let p = RelayParams {
            slot1: [[one; 3]; 3],
            slot2: [[one; 3]; 3],
            to_relay: [one; 3],
            from_relay: [one; 3],
            beta: 1.0,
        };
        let ch = relay_effective_channels(&p).unwrap();
        let expected = CMat::from_row_slice(2, 2, &[one, c(0.0, 0.0), one, one]);
        for j in 0..3 {
            for i in 0..3 {
                assert_eq!(ch.h(j, i), &expected);
            }
            assert_eq!(ch.noise_cov(j).unwrap(), &HermitianMatrix::from_real_diagonal(&[1.0, 2.0]));
        }
        assert!(relay_effective_channels(&RelayParams { beta: -1.0, ..p }).is_err());
    }

    #[test]
    fn whitening_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = vec![vec![gaussian_matrix(&mut rng, 2, 2); 2]; 2];
        let white = ChannelSet::new(h.clone()).unwrap();
        assert_eq!(whiten_noise(&white).unwrap(), white);

        let cov = HermitianMatrix::from_real_diagonal(&[1.0, 4.0]);
        let colored = ChannelSet::with_noise(h.clone(), vec![Some(cov.clone()), None]).unwrap();
        let w = whiten_noise(&colored).unwrap();
        assert!(!w.has_colored_noise());
        for (tx, (h0, h1)) in h[0].iter().zip(&h[1]).enumerate() {
            for j in 0..2 {
                assert_eq!(w.h(0, tx)[(0, j)], h0[(0, j)]);
                assert!((w.h(0, tx)[(1, j)] - h0[(1, j)] * 0.5).norm() < 1e-15);
            }
            assert_eq!(w.h(1, tx), h1);
        }

        let bad = ChannelSet::with_noise(h, vec![Some(HermitianMatrix::from_real_diagonal(&[1.0, -1.0])), None]);
        assert!(whiten_noise(&bad.unwrap()).is_err());
    }

    #[test]
    fn whitening_preserves_mutual_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let h = gaussian_matrix(&mut rng, 3, 2);
            let g = gaussian_matrix(&mut rng, 3, 3);
            let cov = gram_outer(&g).shifted(0.1);
            let ch = ChannelSet::with_noise(vec![vec![h.clone()]], vec![Some(cov.clone())]).unwrap();
            let tx = gram_outer(&gaussian_matrix(&mut rng, 2, 2));
            // colored: log det(R + HΣH†) − log det R
            let hsh = h.clone() * tx.matrix() * h.adjoint();
            let colored =
                logdet_pd(&HermitianMatrix::new(cov.matrix() + &hsh).unwrap()).unwrap() - logdet_pd(&cov).unwrap();
            let w = whiten_noise(&ch).unwrap();
            let hw = w.h(0, 0);
            let white_m = CMat::identity(3, 3) + hw * tx.matrix() * hw.adjoint();
            let white = logdet_pd(&HermitianMatrix::new(white_m).unwrap()).unwrap();
            assert!((colored - white).abs() < 1e-9, "{colored} vs {white}");
        }
    }
}
