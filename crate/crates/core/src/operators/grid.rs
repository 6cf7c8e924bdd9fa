#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GridControl, ModelConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum XBoundary {
    /// psi vanishes one step outside [x_min, x_max].
    Dirichlet,
    /// x-periodic magnetic torus; requires B * Lx * hy in 2 pi Z.
    Torus,
}

/// Tensor grid: x_i = x0 + i hx, y_j = -L/2 + j hy. Flat index i * ny + j.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub hx: f64,
    pub hy: f64,
    /// y-period.
    pub ly: f64,
    pub boundary: XBoundary,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, x_min: f64, x_max: f64, ly: f64) -> Result<Self> {
        if nx < 3 || ny < 3 || !(x_max > x_min) || !(ly > 0.0) {
            return Err(Error::Input("grid needs nx, ny >= 3 and a nonempty domain".into()));
        }
        Ok(Self { nx, ny, x0: x_min, hx: (x_max - x_min) / (nx - 1) as f64, hy: ly / ny as f64, ly, boundary: XBoundary::Dirichlet })
    }

    /// Grid implied by the config controls (no resolution check).
    pub fn for_model(cfg: &ModelConfig) -> Result<Self> {
        let (x_min, x_max) = cfg.x_extent();
        match cfg.grid {
            GridControl::Auto { h } => {
                let ny = (cfg.lf() / h - 1e-9).ceil() as usize;
                let nx = ((x_max - x_min) / h - 1e-9).ceil() as usize + 1;
                Self::new(nx, ny.max(3), x_min, x_max, cfg.lf())
            }
            GridControl::Explicit { nx, ny, x_min, x_max } => Self::new(nx, ny, x_min, x_max, cfg.lf()),
        }
    }

    /// Magnetic torus of y-period `ly`, spacing about `h`, x-length at least `min_lx`.
    /// The x-length is quantized so that the y-hopping phases are x-periodic.
    pub fn landau_torus(b: f64, ly: f64, h: f64, min_lx: f64) -> Result<Self> {
        if !(b > 0.0 && h > 0.0 && ly > 0.0) {
            return Err(Error::Input("landau_torus: B, h and L must be positive".into()));
        }
        let ny = ((ly / h - 1e-9).ceil() as usize).max(3);
        let hy = ly / ny as f64;
        let quantum = 2.0 * core::f64::consts::PI / (b * hy);
        let nq = (min_lx / quantum).ceil().max(1.0);
        let lx = nq * quantum;
        let nx = ((lx / h).ceil() as usize).max(3);
        Ok(Self { nx, ny, x0: -0.5 * lx, hx: lx / nx as f64, hy, ly, boundary: XBoundary::Torus })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        -0.5 * self.ly + j as f64 * self.hy
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    /// x-length of the torus (meaningful for `Torus` only).
    pub fn lx(&self) -> f64 {
        self.nx as f64 * self.hx
    }

    /// Area element for converting grid vectors to densities.
    pub fn cell(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_grid_resolves() {
        for l in [16u32, 25, 36, 49] {
            let cfg = ModelConfig::default().with_l(l);
            let g = Grid::for_model(&cfg).unwrap();
            assert!(g.hx <= 0.2 + 1e-12 && g.hy <= 0.2 + 1e-12);
            assert!(g.x0 < -(l as f64) / 2.0 - 5.0);
            assert!((g.x_max() - (l as f64 / 2.0 + 5.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn torus_quantized() {
        let g = Grid::landau_torus(1.0, 16.0, 0.2, 20.0).unwrap();
        let flux = g.lx() * g.hy / (2.0 * core::f64::consts::PI);
        assert!((flux - flux.round()).abs() < 1e-12);
        assert!(g.lx() >= 20.0);
    }
}
