//! Network scenarios and channel gain matrices.
//!
//! Transmitters are dropped uniformly in a disc, each receiver uniformly
//! within `max_txrx_distance_m` of its transmitter. Every TX→RX gain is the
//! COST-231 Hata path loss (small/medium city) times an independent unit-mean
//! exponential draw (flat Rayleigh power fading).

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{PowerError, Result};

/// Parameters of a random network drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub region_radius_m: f64,
    pub max_txrx_distance_m: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub num_links: usize,
    pub carrier_freq_mhz: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            region_radius_m: 500.0,
            max_txrx_distance_m: 20.0,
            bandwidth_hz: 1e6,
            noise_psd_dbm_per_hz: -114.0,
            num_links: 2,
            carrier_freq_mhz: 1500.0,
            tx_height_m: 30.0,
            rx_height_m: 1.5,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn with_links(num_links: usize, rng_seed: u64) -> Self {
        Self {
            num_links,
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_links < 2 {
            return Err(PowerError::Config(format!(
                "num_links must be at least 2, got {}",
                self.num_links
            )));
        }
        let positive = [
            ("region_radius_m", self.region_radius_m),
            ("max_txrx_distance_m", self.max_txrx_distance_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("carrier_freq_mhz", self.carrier_freq_mhz),
            ("tx_height_m", self.tx_height_m),
            ("rx_height_m", self.rx_height_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PowerError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.noise_psd_dbm_per_hz.is_finite() {
            return Err(PowerError::Config("noise_psd_dbm_per_hz must be finite".into()));
        }
        Ok(())
    }

    /// Thermal noise power in watts over the configured bandwidth.
    pub fn noise_power_w(&self) -> f64 {
        10f64.powf((self.noise_psd_dbm_per_hz - 30.0) / 10.0) * self.bandwidth_hz
    }
}

/// COST-231 Hata path loss in dB for a small/medium city.
///
/// Distances below one metre are clamped to one metre.
pub fn cost_hata_db(distance_m: f64, freq_mhz: f64, tx_height_m: f64, rx_height_m: f64) -> f64 {
    let d_km = distance_m.max(1.0) / 1000.0;
    let lf = freq_mhz.log10();
    let lhb = tx_height_m.log10();
    let mobile_correction = (1.1 * lf - 0.7) * rx_height_m - (1.56 * lf - 0.8);
    46.3 + 33.9 * lf - 13.82 * lhb - mobile_correction + (44.9 - 6.55 * lhb) * d_km.log10()
}

/// Square matrix of linear power gains, `gain(j, i)` being TX j → RX i,
/// plus the noise power seen at each receiver.
///
/// Scenario matrices carry a single noise power for every receiver; the
/// per-receiver form appears when out-of-cluster interference is folded
/// into the noise floor.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n: usize,
    gains: Vec<f64>,
    noise: Vec<f64>,
}

impl ChannelMatrix {
    /// Builds a matrix from rows indexed by transmitter.
    pub fn new(rows: Vec<Vec<f64>>, sigma2: f64) -> Result<Self> {
        let n = rows.len();
        Self::with_receiver_noise(rows, vec![sigma2; n])
    }

    pub fn with_receiver_noise(rows: Vec<Vec<f64>>, noise: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(PowerError::Config("empty gain matrix".into()));
        }
        if noise.len() != n {
            return Err(PowerError::Dimension {
                expected: n,
                got: noise.len(),
            });
        }
        let mut gains = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(PowerError::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            for &g in row {
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(PowerError::Config(format!("gain {g} is not a finite non-negative number")));
                }
            }
            gains.extend_from_slice(row);
        }
        for &s in &noise {
            if !(s > 0.0 && s.is_finite()) {
                return Err(PowerError::Config(format!("noise power {s} must be positive")));
            }
        }
        Ok(Self { n, gains, noise })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Gain from transmitter `tx` to receiver `rx`.
    #[inline]
    pub fn gain(&self, tx: usize, rx: usize) -> f64 {
        self.gains[tx * self.n + rx]
    }

    #[inline]
    pub fn direct(&self, i: usize) -> f64 {
        self.gain(i, i)
    }

    /// Noise power at receiver `rx`.
    #[inline]
    pub fn noise(&self, rx: usize) -> f64 {
        self.noise[rx]
    }

    /// The common noise power, when every receiver sees the same one.
    pub fn sigma2(&self) -> Option<f64> {
        let first = self.noise[0];
        self.noise.iter().all(|&s| s == first).then_some(first)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.gains.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn ensure_links(&self, expected: usize) -> Result<()> {
        if self.n != expected {
            return Err(PowerError::Dimension {
                expected,
                got: self.n,
            });
        }
        Ok(())
    }

    /// Multiplies every gain and every noise power by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            gains: self.gains.iter().map(|g| g * factor).collect(),
            noise: self.noise.iter().map(|s| s * factor).collect(),
        }
    }

    /// Restriction to `links`, with `extra_noise[k]` added to the noise of
    /// receiver `links[k]`.
    pub fn subchannel(&self, links: &[usize], extra_noise: &[f64]) -> Self {
        let m = links.len();
        let mut gains = Vec::with_capacity(m * m);
        for &j in links {
            for &i in links {
                gains.push(self.gain(j, i));
            }
        }
        let noise = links
            .iter()
            .zip(extra_noise)
            .map(|(&i, &extra)| self.noise[i] + extra)
            .collect();
        Self { n: m, gains, noise }
    }

    /// Writes the gains as CSV: one row per TX, one column per RX.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for row in self.gains.chunks(self.n) {
            w.write_record(row.iter().map(|g| format!("{g:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, sigma2: f64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| PowerError::Parse(format!("bad gain {field:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows, sigma2)
    }
}

fn uniform_in_disc<R: Rng>(rng: &mut R, radius: f64) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let t = 2.0 * PI * rng.random::<f64>();
    (r * t.cos(), r * t.sin())
}

/// Draws a random network. Bit-reproducible for a fixed `config.rng_seed`.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<ChannelMatrix> {
    config.validate()?;
    let n = config.num_links;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let tx: Vec<(f64, f64)> = (0..n)
        .map(|_| uniform_in_disc(&mut rng, config.region_radius_m))
        .collect();
    let rx: Vec<(f64, f64)> = tx
        .iter()
        .map(|&(x, y)| {
            let (dx, dy) = uniform_in_disc(&mut rng, config.max_txrx_distance_m);
            (x + dx, y + dy)
        })
        .collect();

    let mut rows = vec![vec![0.0; n]; n];
    for (j, row) in rows.iter_mut().enumerate() {
        for (i, g) in row.iter_mut().enumerate() {
            let d = (tx[j].0 - rx[i].0).hypot(tx[j].1 - rx[i].1);
            let loss_db = cost_hata_db(d, config.carrier_freq_mhz, config.tx_height_m, config.rx_height_m);
            let fading: f64 = rng.sample(Exp1);
            // Exp1 can return exactly zero; keep gains strictly positive.
            *g = 10f64.powf(-loss_db / 10.0) * fading.max(f64::MIN_POSITIVE);
        }
    }
    ChannelMatrix::new(rows, config.noise_power_w())
}

/// Two-link gains normalised by the receiver noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedTwoPair {
    /// g11 / noise at RX1
    pub a: f64,
    /// g21 / noise at RX1
    pub b: f64,
    /// g12 / noise at RX2
    pub c: f64,
    /// g22 / noise at RX2
    pub d: f64,
}

impl NormalizedTwoPair {
    /// The same problem with link labels exchanged.
    pub fn swapped(self) -> Self {
        Self {
            a: self.d,
            b: self.c,
            c: self.b,
            d: self.a,
        }
    }

    /// Rates of both links for powers `(p1, p2)`, in bits/s/Hz.
    pub fn rates(&self, p1: f64, p2: f64) -> (f64, f64) {
        (
            (1.0 + self.a * p1 / (self.b * p2 + 1.0)).log2(),
            (1.0 + self.d * p2 / (self.c * p1 + 1.0)).log2(),
        )
    }

    pub fn sum_rate(&self, p1: f64, p2: f64) -> f64 {
        let (r1, r2) = self.rates(p1, p2);
        r1 + r2
    }
}

pub fn normalize_two_pair(g: &ChannelMatrix) -> Result<NormalizedTwoPair> {
    g.ensure_links(2)?;
    let (n1, n2) = (g.noise(0), g.noise(1));
    Ok(NormalizedTwoPair {
        a: g.gain(0, 0) / n1,
        b: g.gain(1, 0) / n1,
        c: g.gain(0, 1) / n2,
        d: g.gain(1, 1) / n2,
    })
}

/// Normalised constants of the three-link problem once P1 is fixed.
///
/// The objective over (P2, P3) reads
/// `log2(1 + a1 P2/(b1 P3 + 1)) + log2(1 + d1 P3/(c1 P2 + 1)) + log2(1 + e1/(f1 P2 + h1 P3 + 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePairConstants {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub d1: f64,
    pub e1: f64,
    pub f1: f64,
    pub h1: f64,
    /// Power left for TX2 and TX3.
    pub remaining: f64,
}

/// The primed constants used by the stationarity quartic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimedConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub h: f64,
}

impl ThreePairConstants {
    pub fn primed(&self) -> PrimedConstants {
        let p = self.remaining;
        PrimedConstants {
            a: self.a1 * p + 1.0,
            b: self.b1 - self.a1,
            c: self.c1 * p + 1.0,
            d: self.d1 - self.c1,
            e: self.f1 * p + self.e1 + 1.0,
            f: self.f1 * p + 1.0,
            h: self.h1 - self.f1,
        }
    }

    /// Three-link sum rate for the split `(p2, p3)` at the fixed P1.
    pub fn objective(&self, p2: f64, p3: f64) -> f64 {
        (1.0 + self.a1 * p2 / (self.b1 * p3 + 1.0)).log2()
            + (1.0 + self.d1 * p3 / (self.c1 * p2 + 1.0)).log2()
            + (1.0 + self.e1 / (self.f1 * p2 + self.h1 * p3 + 1.0)).log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_direct_substitution() {
        let g = ChannelMatrix::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], 1.0).unwrap();
        let np = normalize_two_pair(&g).unwrap();
        assert_eq!(np, NormalizedTwoPair { a: 2.0, b: 1.0, c: 1.0, d: 2.0 });
    }

    #[test]
    fn normalize_divides_by_noise() {
        let g = ChannelMatrix::new(vec![vec![4.0, 0.5], vec![0.5, 2.0]], 2.0).unwrap();
        let np = normalize_two_pair(&g).unwrap();
        assert_eq!(np, NormalizedTwoPair { a: 2.0, b: 0.25, c: 0.25, d: 1.0 });
    }

    #[test]
    fn normalize_rejects_wrong_size() {
        let g = generate_scenario(&ScenarioConfig::with_links(3, 1)).unwrap();
        assert!(matches!(
            normalize_two_pair(&g),
            Err(PowerError::Dimension { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn normalize_is_scale_consistent() {
        let g = generate_scenario(&ScenarioConfig::with_links(2, 11)).unwrap();
        let a = normalize_two_pair(&g).unwrap();
        let b = normalize_two_pair(&g.scaled(37.5)).unwrap();
        for (x, y) in [(a.a, b.a), (a.b, b.b), (a.c, b.c), (a.d, b.d)] {
            assert!((x - y).abs() <= 1e-12 * x.abs());
            assert!(x > 0.0);
        }
    }

    #[test]
    fn same_seed_same_matrix() {
        let cfg = ScenarioConfig::with_links(2, 7);
        assert_eq!(generate_scenario(&cfg).unwrap(), generate_scenario(&cfg).unwrap());
    }

    #[test]
    fn ten_links_all_positive() {
        let g = generate_scenario(&ScenarioConfig::with_links(10, 3)).unwrap();
        assert_eq!(g.n(), 10);
        assert!(g.rows().iter().flatten().all(|&x| x > 0.0));
    }

    #[test]
    fn single_link_is_rejected() {
        let cfg = ScenarioConfig::with_links(1, 0);
        assert!(matches!(generate_scenario(&cfg), Err(PowerError::Config(_))));
    }

    #[test]
    fn default_noise_power() {
        let cfg = ScenarioConfig::default();
        let expected = 10f64.powf((-114.0 - 30.0) / 10.0) * 1e6;
        assert!((cfg.noise_power_w() - expected).abs() < 1e-24);
        let g = generate_scenario(&ScenarioConfig::with_links(4, 9)).unwrap();
        assert_eq!(g.sigma2(), Some(expected));
    }

    #[test]
    fn direct_links_are_stronger_on_average() {
        let (mut direct, mut cross) = (0.0, 0.0);
        for seed in 0..1000 {
            let g = generate_scenario(&ScenarioConfig::with_links(2, seed)).unwrap();
            direct += g.direct(0) + g.direct(1);
            cross += g.gain(0, 1) + g.gain(1, 0);
        }
        assert!(direct > cross);
    }

    #[test]
    fn hata_increases_with_distance_and_clamps() {
        let near = cost_hata_db(20.0, 1500.0, 30.0, 1.5);
        let far = cost_hata_db(500.0, 1500.0, 30.0, 1.5);
        assert!(far > near);
        assert_eq!(cost_hata_db(0.1, 1500.0, 30.0, 1.5), cost_hata_db(1.0, 1500.0, 30.0, 1.5));
    }

    #[test]
    fn csv_roundtrip() {
        let g = generate_scenario(&ScenarioConfig::with_links(3, 5)).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = ChannelMatrix::read_csv(buf.as_slice(), g.sigma2().unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn subchannel_adds_noise() {
        let g = ChannelMatrix::new(
            vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]],
            1.0,
        )
        .unwrap();
        let s = g.subchannel(&[2, 0], &[0.5, 1.5]);
        assert_eq!(s.rows(), vec![vec![9.0, 7.0], vec![3.0, 1.0]]);
        assert_eq!(s.noise(0), 1.5);
        assert_eq!(s.noise(1), 2.5);
        assert_eq!(s.sigma2(), None);
    }
}
