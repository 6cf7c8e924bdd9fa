use alloc::vec;
use alloc::vec::Vec;
use faer::c64;
use faer::sparse::{SparseColMat, Triplet};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::grid::{Grid, XBoundary};
use crate::error::{Error, Result};
use crate::model::{evaluate_disorder, DisorderField, ModelConfig, Point, RegionName, RegionSpec, Side};

/// Which pieces of H_L + U_l + U_r + V_omega an operator carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// H_L
    Landau,
    /// H_alpha^0 = H_L + U_alpha
    Clean(Side),
    /// H_alpha = H_L + U_alpha + V restricted to Lambda_alpha
    Single(Side),
    /// H_b = H_L + V restricted to Lambda_b
    Bulk,
    /// H_omega
    Full,
    /// H_1 = H_L + V restricted to Lambda_1
    One,
    /// H_2 = H_L + U_l + V restricted to Lambda_2
    Two,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Landau => "H_L",
            Variant::Clean(Side::Left) => "H_l0",
            Variant::Clean(Side::Right) => "H_r0",
            Variant::Single(Side::Left) => "H_l",
            Variant::Single(Side::Right) => "H_r",
            Variant::Bulk => "H_b",
            Variant::Full => "H_omega",
            Variant::One => "H_1",
            Variant::Two => "H_2",
        }
    }

    pub fn walls(self) -> (bool, bool) {
        match self {
            Variant::Landau | Variant::Bulk | Variant::One => (false, false),
            Variant::Clean(Side::Left) | Variant::Single(Side::Left) | Variant::Two => (true, false),
            Variant::Clean(Side::Right) | Variant::Single(Side::Right) => (false, true),
            Variant::Full => (true, true),
        }
    }

    pub fn region(self) -> Option<RegionName> {
        match self {
            Variant::Landau | Variant::Clean(_) => None,
            Variant::Single(Side::Left) => Some(RegionName::Left),
            Variant::Single(Side::Right) => Some(RegionName::Right),
            Variant::Bulk => Some(RegionName::Bulk),
            Variant::Full => Some(RegionName::Full),
            Variant::One => Some(RegionName::One),
            Variant::Two => Some(RegionName::Two),
        }
    }
}

/// Gauge-covariant five-point discretization of
/// 1/2 p_x^2 + 1/2 (p_y - B x + Phi/L)^2 + W(x, y).
///
/// The y-hop from (i, j+1) to (i, j) carries exp(-i theta_i), theta_i = (B x_i - Phi/L) hy,
/// so each x-fiber is exactly (1 - cos((k - B x + Phi/L) hy)) / hy^2.
#[derive(Clone, Debug, PartialEq)]
pub struct AssembledOperator {
    pub grid: Grid,
    pub variant: Variant,
    pub b: f64,
    pub flux: f64,
    /// Kinetic diagonal plus potential, one entry per grid point.
    pub diag: Vec<f64>,
    /// Potential part of `diag` (walls plus disorder).
    pub potential: Vec<f64>,
    /// exp(-i theta_i) per column.
    pub phase: Vec<c64>,
    pub tx: f64,
    pub ty: f64,
    pub checksum: u64,
}

/// Assembles `variant` on the grid implied by `cfg`, after validating `cfg`.
pub fn assemble(variant: Variant, cfg: &ModelConfig, field: Option<&DisorderField>) -> Result<AssembledOperator> {
    cfg.validate()?;
    let grid = Grid::for_model(cfg)?;
    assemble_on(variant, cfg, &grid, field)
}

/// Assembly on an explicit grid, without the resolution check (coarse oracles, tori).
pub fn assemble_on(variant: Variant, cfg: &ModelConfig, grid: &Grid, field: Option<&DisorderField>) -> Result<AssembledOperator> {
    let region = variant.region().map(|r| RegionSpec::new(r, cfg));
    let restricted = match (region, field) {
        (None, _) => None,
        (Some(_), None) => return Err(Error::Config(alloc::format!("variant {} requires a disorder field", variant.label()))),
        (Some(r), Some(f)) => {
            if f.period != cfg.l {
                return Err(Error::Input("disorder field period differs from L".into()));
            }
            if !f.covers(&r) {
                return Err(Error::Config(alloc::format!("disorder field does not cover {}", r.name.label())));
            }
            Some(f.restrict(&r))
        }
    };
    let mut potential = vec![0.0; grid.len()];
    let (wl, wr) = variant.walls();
    for i in 0..grid.nx {
        let x = grid.x(i);
        let u = if wl { cfg.wall_potential(x, Side::Left) } else { 0.0 } + if wr { cfg.wall_potential(x, Side::Right) } else { 0.0 };
        for j in 0..grid.ny {
            let v = restricted.as_ref().map_or(0.0, |f| evaluate_disorder(f, Point::new(x, grid.y(j))));
            potential[grid.idx(i, j)] = u + v;
        }
    }
    Ok(from_potential(variant, cfg.b, cfg.flux, cfg.lf(), grid, potential))
}

/// Builds the operator from a given potential table.
pub fn from_potential(variant: Variant, b: f64, flux: f64, ly: f64, grid: &Grid, potential: Vec<f64>) -> AssembledOperator {
    let tx = 0.5 / (grid.hx * grid.hx);
    let ty = 0.5 / (grid.hy * grid.hy);
    let diag: Vec<f64> = potential.iter().map(|w| 2.0 * tx + 2.0 * ty + w).collect();
    let shift = flux / ly;
    let phase = (0..grid.nx)
        .map(|i| {
            let theta = (b * grid.x(i) - shift) * grid.hy;
            c64::new(theta.cos(), -theta.sin())
        })
        .collect();
    let mut op = AssembledOperator { grid: *grid, variant, b, flux, diag, potential, phase, tx, ty, checksum: 0 };
    op.checksum = op.compute_checksum();
    op
}

fn fnv(mut h: u64, bytes: &[u8]) -> u64 {
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

impl AssembledOperator {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    fn compute_checksum(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        h = fnv(h, self.variant.label().as_bytes());
        for v in [self.grid.nx as f64, self.grid.ny as f64, self.grid.x0, self.grid.hx, self.grid.hy, self.b, self.flux] {
            h = fnv(h, &v.to_bits().to_le_bytes());
        }
        for d in &self.diag {
            h = fnv(h, &d.to_bits().to_le_bytes());
        }
        h
    }

    /// y = H x.
    pub fn apply(&self, x: &[c64], y: &mut [c64]) {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let torus = g.boundary == XBoundary::Torus;
        let tx = c64::new(self.tx, 0.0);
        for i in 0..nx {
            let e = self.phase[i] * self.ty;
            let ec = e.conj();
            let row = i * ny;
            let up = if i + 1 < nx { Some(row + ny) } else if torus { Some(0) } else { None };
            let dn = if i > 0 { Some(row - ny) } else if torus { Some((nx - 1) * ny) } else { None };
            for j in 0..ny {
                let k = row + j;
                let jp = if j + 1 < ny { k + 1 } else { row };
                let jm = if j > 0 { k - 1 } else { row + ny - 1 };
                let mut acc = x[k] * self.diag[k] - e * x[jp] - ec * x[jm];
                if let Some(u) = up {
                    acc -= tx * x[u + j];
                }
                if let Some(d) = dn {
                    acc -= tx * x[d + j];
                }
                y[k] = acc;
            }
        }
    }

    pub fn apply_vec(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![c64::new(0.0, 0.0); x.len()];
        self.apply(x, &mut y);
        y
    }

    /// Lower triangle (row >= col) of H - shift.
    pub fn lower_triplets(&self, shift: f64) -> Vec<Triplet<usize, usize, c64>> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let mut t = Vec::with_capacity(3 * g.len());
        for i in 0..nx {
            let e = self.phase[i] * self.ty;
            for j in 0..ny {
                let k = g.idx(i, j);
                t.push(Triplet::new(k, k, c64::new(self.diag[k] - shift, 0.0)));
                if j + 1 < ny {
                    // H[(i, j+1), (i, j)] = -ty conj(e_i)
                    t.push(Triplet::new(k + 1, k, -e.conj()));
                }
                if i + 1 < nx {
                    t.push(Triplet::new(k + ny, k, c64::new(-self.tx, 0.0)));
                }
            }
            // seam: H[(i, ny-1), (i, 0)] = -ty e_i
            t.push(Triplet::new(g.idx(i, ny - 1), g.idx(i, 0), -e));
        }
        if g.boundary == XBoundary::Torus {
            for j in 0..ny {
                t.push(Triplet::new(g.idx(nx - 1, j), g.idx(0, j), c64::new(-self.tx, 0.0)));
            }
        }
        t
    }

    /// All nonzeros of H - shift (both triangles).
    pub fn triplets(&self, shift: f64) -> Vec<Triplet<usize, usize, c64>> {
        let lower = self.lower_triplets(shift);
        let mut all = Vec::with_capacity(2 * lower.len());
        for t in &lower {
            all.push(*t);
            if t.row != t.col {
                all.push(Triplet::new(t.col, t.row, t.val.conj()));
            }
        }
        all
    }

    pub fn lower_matrix(&self, shift: f64) -> Result<SparseColMat<usize, c64>> {
        let n = self.dim();
        SparseColMat::try_new_from_triplets(n, n, &self.lower_triplets(shift)).map_err(|e| Error::Solver { shift, reason: alloc::format!("{e:?}") })
    }

    /// z - H as a full sparse matrix.
    pub fn shifted_full(&self, z: c64) -> Result<SparseColMat<usize, c64>> {
        let n = self.dim();
        let t: Vec<_> = self.triplets(0.0).into_iter().map(|t| Triplet::new(t.row, t.col, -t.val + if t.row == t.col { z } else { c64::new(0.0, 0.0) })).collect();
        SparseColMat::try_new_from_triplets(n, n, &t).map_err(|e| Error::SingularResolvent { re: z.re, im: z.im, reason: alloc::format!("{e:?}") })
    }

    /// Dense H (test oracles and small problems).
    pub fn dense(&self) -> faer::Mat<c64> {
        let n = self.dim();
        let mut m = faer::Mat::<c64>::zeros(n, n);
        for t in self.triplets(0.0) {
            m[(t.row, t.col)] += t.val;
        }
        m
    }

    /// Coordinate list (row, col, re, im) sorted by (row, col).
    pub fn coo(&self) -> Vec<(usize, usize, f64, f64)> {
        let mut v: Vec<_> = self.triplets(0.0).into_iter().map(|t| (t.row, t.col, t.val.re, t.val.im)).collect();
        v.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        v
    }

    /// y-velocity v = p_y - B x + Phi/L in the same discretization:
    /// (v psi)_j = -i/(2 hy) (e psi_{j+1} - conj(e) psi_{j-1}).
    pub fn apply_velocity(&self, x: &[c64], y: &mut [c64]) {
        let g = &self.grid;
        let c = 0.5 / g.hy;
        for i in 0..g.nx {
            let e = self.phase[i];
            let row = i * g.ny;
            for j in 0..g.ny {
                let k = row + j;
                let jp = if j + 1 < g.ny { k + 1 } else { row };
                let jm = if j > 0 { k - 1 } else { row + g.ny - 1 };
                let d = e * x[jp] - e.conj() * x[jm];
                y[k] = c64::new(d.im * c, -d.re * c);
            }
        }
    }

    /// Adds a constant to the potential.
    pub fn shifted_by(&self, c: f64) -> Self {
        let potential = self.potential.iter().map(|w| w + c).collect();
        from_potential(self.variant, self.b, self.flux, self.grid.ly, &self.grid, potential)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_disorder, GridControl};

    fn small_cfg() -> ModelConfig {
        ModelConfig { grid: GridControl::Explicit { nx: 30, ny: 16, x_min: -15.0, x_max: 14.0 }, ..Default::default() }
    }

    #[test]
    fn hermitian_exactly() {
        let cfg = small_cfg();
        let grid = Grid::for_model(&cfg).unwrap();
        let f = sample_disorder(&cfg, &RegionSpec::new(RegionName::Full, &cfg), 3).unwrap();
        let op = assemble_on(Variant::Full, &cfg, &grid, Some(&f)).unwrap();
        let h = op.dense();
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                assert_eq!(h[(i, j)], h[(j, i)].conj());
            }
        }
    }

    #[test]
    fn matvec_matches_triplets() {
        let cfg = ModelConfig { flux: 1.3, ..small_cfg() };
        let grid = Grid::for_model(&cfg).unwrap();
        let f = sample_disorder(&cfg, &RegionSpec::new(RegionName::Full, &cfg), 5).unwrap();
        for g in [grid, Grid::landau_torus(1.0, 16.0, 0.5, 8.0).unwrap()] {
            let op = assemble_on(Variant::Full, &cfg, &g, Some(&f)).unwrap();
            let x: Vec<c64> = (0..op.dim()).map(|k| c64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
            let y = op.apply_vec(&x);
            let mut z = vec![c64::new(0.0, 0.0); x.len()];
            for t in op.triplets(0.0) {
                z[t.row] += t.val * x[t.col];
            }
            for k in 0..x.len() {
                assert!((y[k] - z[k]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn missing_field_is_config_error() {
        let cfg = small_cfg();
        let grid = Grid::for_model(&cfg).unwrap();
        assert!(matches!(assemble_on(Variant::Full, &cfg, &grid, None), Err(Error::Config(_))));
        assert!(assemble_on(Variant::Clean(Side::Left), &cfg, &grid, None).is_ok());
    }

    #[test]
    fn variant_algebra() {
        let cfg = ModelConfig::default();
        let grid = Grid::for_model(&cfg).unwrap();
        let f = sample_disorder(&cfg, &RegionSpec::new(RegionName::Full, &cfg), 9).unwrap();
        let hl = assemble_on(Variant::Single(Side::Left), &cfg, &grid, Some(&f)).unwrap();
        let h2 = assemble_on(Variant::Two, &cfg, &grid, Some(&f)).unwrap();
        let h1 = assemble_on(Variant::One, &cfg, &grid, Some(&f)).unwrap();
        let hw = assemble_on(Variant::Full, &cfg, &grid, Some(&f)).unwrap();
        let left = RegionSpec::new(RegionName::Left, &cfg);
        for k in 0..hl.dim() {
            // H_l = H_2 + V|Lambda_1, bit for bit
            assert_eq!(hl.potential[k], h2.potential[k] + h1.potential[k]);
        }
        for i in 0..grid.nx {
            let x = grid.x(i);
            if x < left.n_hi as f64 + 0.75 {
                for j in 0..grid.ny {
                    let k = grid.idx(i, j);
                    assert_eq!(hw.potential[k], hl.potential[k]);
                }
            }
        }
    }
}
