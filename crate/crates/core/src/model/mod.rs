//! Cylinder geometry, walls, disorder and lattice regions.

mod disorder;
mod geometry;
mod region;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use disorder::{derive_seed, draw_coupling, evaluate_disorder, sample_disorder, site_table, DisorderField};
pub use geometry::{bump, power_wall, star_distance, wrap_dy, Point, Side};
pub use region::{RegionName, RegionSpec};

/// Power-law wall U(x) = c |x -/+ S/2|^m outside the sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub c: f64,
    pub m: f64,
}

/// Density of the i.i.d. couplings on [-1, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Uniform,
    Triangular,
}

impl Density {
    /// sup of the density.
    pub fn sup(self) -> f64 {
        match self {
            Density::Uniform => 0.5,
            Density::Triangular => 1.0,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Density::Uniform => "uniform",
            Density::Triangular => "triangular",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "uniform" => Ok(Density::Uniform),
            "triangular" => Ok(Density::Triangular),
            other => Err(Error::Config(format!("unknown density_id '{other}'"))),
        }
    }
}

/// Discretization controls. `Auto` places the x-domain from the wall pads.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridControl {
    Auto { h: f64 },
    Explicit { nx: usize, ny: usize, x_min: f64, x_max: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Field strength; magnetic length 1/sqrt(B).
    pub b: f64,
    /// Circumference.
    pub l: u32,
    pub v0: f64,
    pub wall_left: Wall,
    pub wall_right: Wall,
    pub flux: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub grid: GridControl,
    pub density: Density,
    /// Wall separation when it differs from the circumference.
    pub separation: Option<u32>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            b: 1.0,
            l: 16,
            v0: 0.05,
            wall_left: Wall { c: 1.0, m: 2.0 },
            wall_right: Wall { c: 0.5, m: 4.0 },
            flux: 0.0,
            delta: 0.2,
            epsilon: 0.1,
            grid: GridControl::Auto { h: 0.2 },
            density: Density::Uniform,
            separation: None,
        }
    }
}

/// Threshold (in units of B) at which the x-domain is cut past a wall.
pub const WALL_CUT: f64 = 50.0;

impl ModelConfig {
    pub fn with_l(&self, l: u32) -> Self {
        Self { l, ..self.clone() }
    }

    pub fn lf(&self) -> f64 {
        self.l as f64
    }

    /// Wall separation S (defaults to L).
    pub fn sep(&self) -> f64 {
        self.separation.unwrap_or(self.l) as f64
    }

    /// Strip width D = sqrt(L), rounded half up.
    pub fn strip_width(&self) -> u32 {
        (self.lf().sqrt() + 0.5).floor() as u32
    }

    pub fn d(&self) -> f64 {
        self.strip_width() as f64
    }

    pub fn magnetic_length(&self) -> f64 {
        1.0 / self.b.sqrt()
    }

    /// Target window (B - delta, B + delta).
    pub fn window(&self) -> (f64, f64) {
        (self.b - self.delta, self.b + self.delta)
    }

    /// Gap window (B/2 + V0 + eps, 3B/2 - V0 - eps).
    pub fn gap_window(&self) -> (f64, f64) {
        (0.5 * self.b + self.v0 + self.epsilon, 1.5 * self.b - self.v0 - self.epsilon)
    }

    pub fn wall(&self, side: Side) -> Wall {
        match side {
            Side::Left => self.wall_left,
            Side::Right => self.wall_right,
        }
    }

    pub fn wall_potential(&self, x: f64, side: Side) -> f64 {
        let w = self.wall(side);
        power_wall(x, side, 0.5 * self.sep(), w.c, w.m)
    }

    /// Distance past the wall kept in the x-domain.
    pub fn pad(&self, side: Side) -> f64 {
        let w = self.wall(side);
        let cut = (WALL_CUT * self.b / w.c).powf(1.0 / w.m);
        (5.0 / self.b.sqrt()).max(cut)
    }

    /// x-domain [x_min, x_max] (auto placement or the explicit values).
    pub fn x_extent(&self) -> (f64, f64) {
        match self.grid {
            GridControl::Auto { .. } => (-0.5 * self.sep() - self.pad(Side::Left), 0.5 * self.sep() + self.pad(Side::Right)),
            GridControl::Explicit { x_min, x_max, .. } => (x_min, x_max),
        }
    }

    pub fn bump_amplitude(&self) -> f64 {
        self.v0
    }

    /// Checks every invariant; returns all violations in one message.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let finite = [self.b, self.v0, self.flux, self.delta, self.epsilon, self.wall_left.c, self.wall_left.m, self.wall_right.c, self.wall_right.m];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite parameter".into()));
        }
        if self.b <= 0.0 {
            bad.push(format!("B must be positive (B = {})", self.b));
        }
        if self.v0 < 0.0 {
            bad.push(format!("V0 must be nonnegative (V0 = {})", self.v0));
        }
        if self.delta <= 0.0 || self.epsilon <= 0.0 {
            bad.push("delta and epsilon must be positive".into());
        }
        if self.v0 + self.epsilon + self.delta >= 0.5 * self.b {
            bad.push(format!(
                "window condition V0 + epsilon + delta < B/2 violated ({} + {} + {} >= {})",
                self.v0,
                self.epsilon,
                self.delta,
                0.5 * self.b
            ));
        }
        for (name, w) in [("wall_left", self.wall_left), ("wall_right", self.wall_right)] {
            if w.c <= 0.0 || w.m < 2.0 {
                bad.push(format!("{name} needs c > 0 and m >= 2 (c = {}, m = {})", w.c, w.m));
            }
        }
        if !(0.0..=2.0 * core::f64::consts::PI).contains(&self.flux) {
            bad.push(format!("flux must lie in [0, 2pi] (flux = {})", self.flux));
        }
        if self.strip_width() < 4 {
            bad.push(format!("strip width D = {} < 4 lattice units", self.strip_width()));
        }
        if let Err(Error::Geometry(m)) = self.check_geometry() {
            bad.push(m);
        }
        let hmax = 0.2 / self.b.sqrt() * (1.0 + 1e-12);
        match self.grid {
            GridControl::Auto { h } => {
                if !(h > 0.0 && h <= hmax) {
                    bad.push(format!("grid spacing h = {h} exceeds 0.2/sqrt(B) = {}", 0.2 / self.b.sqrt()));
                }
            }
            GridControl::Explicit { nx, ny, x_min, x_max } => {
                if nx < 3 || ny < 3 {
                    bad.push("grid needs nx, ny >= 3".into());
                } else {
                    let hx = (x_max - x_min) / (nx - 1) as f64;
                    let hy = self.lf() / ny as f64;
                    if hx > hmax || hy > hmax {
                        bad.push(format!("grid spacing (hx, hy) = ({hx}, {hy}) exceeds 0.2/sqrt(B)"));
                    }
                }
                let s2 = 0.5 * self.sep();
                let pad = 5.0 / self.b.sqrt();
                if !(x_min < -s2 - pad && x_max > s2 + pad) {
                    bad.push(format!("x-domain [{x_min}, {x_max}] must extend past the walls by more than {pad}"));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    /// Region and cutoff layout is non-degenerate.
    pub fn check_geometry(&self) -> Result<()> {
        let s = self.sep();
        let d = self.d();
        if self.l == 0 || s <= 0.0 {
            return Err(Error::Geometry("L and separation must be positive".into()));
        }
        if s <= 1.5 * d + 2.0 {
            return Err(Error::Geometry(format!(
                "cutoff transitions overlap: separation {s} <= 3D/2 + 2 = {}",
                1.5 * d + 2.0
            )));
        }
        if self.separation.map_or(false, |v| v > self.l) {
            return Err(Error::Geometry("separation larger than L would leave sites outside the lattice".into()));
        }
        Ok(())
    }
}
