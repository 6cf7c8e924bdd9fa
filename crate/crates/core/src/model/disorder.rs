use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{bump, wrap_dy, Density, ModelConfig, Point, RegionName, RegionSpec};
use crate::error::{Error, Result};

/// Couplings X_{n,m} on a set of sites together with the bump amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderField {
    pub seed: u64,
    pub density: Density,
    /// Peak of the single-site bump (sup |V_omega| for |X| <= 1).
    pub amplitude: f64,
    /// Circumference of the cylinder the sites live on.
    pub period: u32,
    couplings: BTreeMap<(i64, i64), f64>,
}

impl DisorderField {
    /// Builds a field from an explicit site table (e.g. an imported audit file).
    pub fn from_sites(seed: u64, density: Density, amplitude: f64, period: u32, sites: impl IntoIterator<Item = ((i64, i64), f64)>) -> Result<Self> {
        let mut couplings = BTreeMap::new();
        for (k, x) in sites {
            if !(-1.0..=1.0).contains(&x) {
                return Err(Error::Input(alloc::format!("coupling {x} at {k:?} outside [-1, 1]")));
            }
            couplings.insert(k, x);
        }
        Ok(Self { seed, density, amplitude, period, couplings })
    }

    /// All-zero couplings on `region` (the clean limit with the same support).
    pub fn zero(cfg: &ModelConfig, region: &RegionSpec) -> Self {
        let couplings = region.sites().into_iter().map(|s| (s, 0.0)).collect();
        Self { seed: 0, density: cfg.density, amplitude: cfg.bump_amplitude(), period: cfg.l, couplings }
    }

    pub fn get(&self, n: i64, m: i64) -> Option<f64> {
        self.couplings.get(&(n, m)).copied()
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    /// Sites in (n, m) order.
    pub fn iter(&self) -> impl Iterator<Item = ((i64, i64), f64)> + '_ {
        self.couplings.iter().map(|(k, v)| (*k, *v))
    }

    pub fn covers(&self, region: &RegionSpec) -> bool {
        region.sites().iter().all(|k| self.couplings.contains_key(k))
    }

    /// The same couplings kept only on `region`.
    pub fn restrict(&self, region: &RegionSpec) -> Self {
        let couplings = self.couplings.iter().filter(|(k, _)| region.contains(k.0, k.1)).map(|(k, v)| (*k, *v)).collect();
        Self { couplings, ..self.clone() }
    }

    /// Canonical site index of the lattice point nearest to `p`, with m reduced to one period.
    pub fn nearest_site(&self, p: Point) -> (i64, i64) {
        let l = self.period as i64;
        let m_lo = -(l / 2);
        let m = p.y.round() as i64;
        (p.x.round() as i64, (m - m_lo).rem_euclid(l) + m_lo)
    }
}

/// Decorrelates a master seed into an independent stream.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// X_{n,m} for one site. Depends only on (seed, n, m, density), never on iteration order.
pub fn draw_coupling(seed: u64, n: i64, m: i64, density: Density) -> f64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&n.to_le_bytes());
    key[16..24].copy_from_slice(&m.to_le_bytes());
    key[24..].copy_from_slice(b"edgelab1");
    let mut rng = ChaCha8Rng::from_seed(key);
    match density {
        Density::Uniform => 2.0 * unit(&mut rng) - 1.0,
        Density::Triangular => unit(&mut rng) + unit(&mut rng) - 1.0,
    }
}

pub fn sample_disorder(cfg: &ModelConfig, region: &RegionSpec, seed: u64) -> Result<DisorderField> {
    let full = RegionSpec::new(RegionName::Full, cfg);
    if !region.is_subset_of(&full) {
        return Err(Error::Input(alloc::format!("region {} is not contained in Lambda", region.name.label())));
    }
    let couplings = region.sites().into_iter().map(|(n, m)| ((n, m), draw_coupling(seed, n, m, cfg.density))).collect();
    Ok(DisorderField { seed, density: cfg.density, amplitude: cfg.bump_amplitude(), period: cfg.l, couplings })
}

/// V_omega(p): at most one bump (that of the nearest site) can contribute.
pub fn evaluate_disorder(field: &DisorderField, p: Point) -> f64 {
    let (n, m) = field.nearest_site(p);
    let Some(x) = field.get(n, m) else { return 0.0 };
    let dx = p.x - n as f64;
    let dy = wrap_dy(p.y - m as f64, field.period as f64);
    let r = dx.hypot(dy);
    if r < 0.25 {
        x * field.amplitude * bump(r)
    } else {
        0.0
    }
}

/// Table rows (n, m, X) in site order.
pub fn site_table(field: &DisorderField) -> Vec<(i64, i64, f64)> {
    field.iter().map(|((n, m), x)| (n, m, x)).collect()
}
