//! Logistic and Tent chaotic sequences, the carrier transform from chaos
//! into a bounded decision space, and chaotic perturbation of an optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Minimum distance a seeded initial state keeps from a blacklisted point.
const SEED_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosConfig {
    /// Logistic map parameter.
    pub mu: f64,
    /// Tent map breakpoint.
    pub phi: f64,
    /// Perturbation blend.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for ChaosConfig {
    fn default() -> Self {
        Self {
            mu: 4.0,
            phi: 0.6,
            alpha: 0.3,
            seed: 0,
        }
    }
}

impl ChaosConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 4.0) {
            return Err(Error::InvalidConfig(format!("mu must lie in (0, 4], got {}", self.mu)));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::InvalidConfig(format!("phi must lie in (0, 1), got {}", self.phi)));
        }
        if self.alpha == 1.0 {
            return Err(Error::DegenerateAlpha);
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Derives an independent child seed (SplitMix64 finalizer over the pair).
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-dimension closed box for decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Bounds {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::InvalidBounds(format!(
                "need matching non-empty min/max, got {} and {}",
                min.len(),
                max.len()
            )));
        }
        for (d, (lo, hi)) in min.iter().zip(&max).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBounds(format!(
                    "dimension {d}: need finite min < max, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn uniform(dim: usize, min: f64, max: f64) -> Result<Self> {
        Self::new(vec![min; dim], vec![max; dim])
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self, d: usize) -> f64 {
        self.min[d]
    }

    pub fn max(&self, d: usize) -> f64 {
        self.max[d]
    }

    pub fn span(&self, d: usize) -> f64 {
        self.max[d] - self.min[d]
    }

    pub fn clamp(&self, d: usize, x: f64) -> f64 {
        x.clamp(self.min[d], self.max[d])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .enumerate()
                .all(|(d, &v)| v >= self.min[d] && v <= self.max[d])
    }
}

/// A one-dimensional map on (0, 1) iterated independently per dimension.
trait UnitMap {
    fn apply(&self, x: f64) -> f64;
    fn blacklist(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy)]
struct Logistic {
    mu: f64,
}

impl UnitMap for Logistic {
    fn apply(&self, x: f64) -> f64 {
        self.mu * x * (1.0 - x)
    }

    fn blacklist(&self) -> Vec<f64> {
        vec![0.0, 0.25, 0.5, 0.75, 1.0]
    }
}

#[derive(Debug, Clone, Copy)]
struct Tent {
    phi: f64,
}

impl UnitMap for Tent {
    fn apply(&self, x: f64) -> f64 {
        if x < self.phi {
            x / self.phi
        } else {
            (1.0 - x) / (1.0 - self.phi)
        }
    }

    fn blacklist(&self) -> Vec<f64> {
        // 0 and 1/(2 - phi) are fixed; phi maps to 1 and then to 0.
        vec![0.0, self.phi, 1.0 / (2.0 - self.phi), 1.0]
    }
}

#[derive(Debug, Clone)]
struct ChaosGenerator<M> {
    map: M,
    state: Vec<f64>,
}

impl<M: UnitMap> ChaosGenerator<M> {
    fn from_states(map: M, state: Vec<f64>) -> Result<Self> {
        let blacklist = map.blacklist();
        for &x in &state {
            if !(x > 0.0 && x < 1.0) || blacklist.contains(&x) {
                return Err(Error::BadSeedState(x));
            }
        }
        Ok(Self { map, state })
    }

    fn seeded(map: M, seed: u64, dims: usize) -> Self {
        let blacklist = map.blacklist();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = (0..dims)
            .map(|_| loop {
                let x: f64 = rng.random();
                if blacklist.iter().all(|p| (x - p).abs() >= SEED_EXCLUSION) {
                    break x;
                }
            })
            .collect();
        Self { map, state }
    }

    fn next_row(&mut self) -> Result<Vec<f64>> {
        for x in &mut self.state {
            let next = self.map.apply(*x);
            if !(next > 0.0 && next < 1.0) {
                return Err(Error::BadSeedState(next));
            }
            *x = next;
        }
        Ok(self.state.clone())
    }

    fn take_rows(&mut self, length: usize) -> Result<Vec<Vec<f64>>> {
        (0..length).map(|_| self.next_row()).collect()
    }
}

/// Stateful Logistic sequence `x ← μ x (1 − x)`, one chain per dimension.
#[derive(Debug, Clone)]
pub struct LogisticMap(ChaosGenerator<Logistic>);

impl LogisticMap {
    /// Initial states drawn from `config.seed`, away from the map's fixed points.
    pub fn seeded(config: &ChaosConfig, dims: usize) -> Self {
        Self(ChaosGenerator::seeded(Logistic { mu: config.mu }, config.seed, dims))
    }

    pub fn from_states(mu: f64, states: Vec<f64>) -> Result<Self> {
        ChaosGenerator::from_states(Logistic { mu }, states).map(Self)
    }

    pub fn state(&self) -> &[f64] {
        &self.0.state
    }

    /// Advances every chain once and returns the new states.
    pub fn next_row(&mut self) -> Result<Vec<f64>> {
        self.0.next_row()
    }

    pub fn take_rows(&mut self, length: usize) -> Result<Vec<Vec<f64>>> {
        self.0.take_rows(length)
    }
}

/// Stateful Tent sequence with breakpoint φ, one chain per dimension.
#[derive(Debug, Clone)]
pub struct TentMap(ChaosGenerator<Tent>);

impl TentMap {
    pub fn seeded(config: &ChaosConfig, dims: usize) -> Self {
        Self(ChaosGenerator::seeded(Tent { phi: config.phi }, config.seed, dims))
    }

    pub fn from_states(phi: f64, states: Vec<f64>) -> Result<Self> {
        ChaosGenerator::from_states(Tent { phi }, states).map(Self)
    }

    pub fn state(&self) -> &[f64] {
        &self.0.state
    }

    pub fn next_row(&mut self) -> Result<Vec<f64>> {
        self.0.next_row()
    }

    pub fn take_rows(&mut self, length: usize) -> Result<Vec<Vec<f64>>> {
        self.0.take_rows(length)
    }
}

/// `length × dims` Logistic iterates (the seed state itself is not included).
pub fn logistic_sequence(config: &ChaosConfig, length: usize, dims: usize) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    LogisticMap::seeded(config, dims).take_rows(length)
}

/// `length × dims` Tent iterates (the seed state itself is not included).
pub fn tent_sequence(config: &ChaosConfig, length: usize, dims: usize) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    TentMap::seeded(config, dims).take_rows(length)
}

/// Maps a chaotic value onto `[lo, hi]` as `hi − (hi − lo)·ch`, so `ch = 0`
/// lands on the upper bound.
pub fn carrier_transform(ch: f64, lo: f64, hi: f64) -> f64 {
    (hi - (hi - lo) * ch).clamp(lo, hi)
}

/// Blends the current optimum with Tent chaos in normalized space:
/// `ψ = (p_norm − α·th) / (1 − α)`, clamped to [0, 1] and mapped back into
/// the bounds.
pub fn perturb(best: &[f64], th: &[f64], config: &ChaosConfig, bounds: &Bounds) -> Result<Vec<f64>> {
    if config.alpha == 1.0 {
        return Err(Error::DegenerateAlpha);
    }
    if best.len() != bounds.dim() || th.len() != bounds.dim() {
        return Err(Error::ShapeMismatch(format!(
            "perturb: best has {}, chaos has {}, bounds have {} dimensions",
            best.len(),
            th.len(),
            bounds.dim()
        )));
    }
    if config.alpha == 0.0 {
        return Ok(best.to_vec());
    }
    let alpha = config.alpha;
    Ok(best
        .iter()
        .zip(th)
        .enumerate()
        .map(|(d, (&p, &ch))| {
            let p_norm = (p - bounds.min(d)) / bounds.span(d);
            let psi = ((p_norm - alpha * ch) / (1.0 - alpha)).clamp(0.0, 1.0);
            bounds.clamp(d, psi * bounds.span(d) + bounds.min(d))
        })
        .collect())
}
