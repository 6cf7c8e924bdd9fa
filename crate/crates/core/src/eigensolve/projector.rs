use alloc::vec::Vec;
use faer::{c64, Mat};
#[allow(unused_imports)]
use num_traits::Float;

use super::window::{solve_window_with, SolveOptions, WindowSpectrum};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::operators::AssembledOperator;

/// Orthogonal projector held as an orthonormal frame (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    pub frame: Mat<c64>,
    pub energies: Vec<f64>,
}

impl Projector {
    pub fn from_vectors(vectors: &[&[c64]], energies: Vec<f64>) -> Self {
        let n = vectors.first().map_or(0, |v| v.len());
        let frame = Mat::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
        Self { frame, energies }
    }

    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    /// ||P^2 - P|| = ||U^H U - I|| for P = U U^H.
    pub fn idempotency_defect(&self) -> f64 {
        let g = self.frame.adjoint() * &self.frame;
        let mut worst: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let t = if i == j { g[(i, j)] - c64::new(1.0, 0.0) } else { g[(i, j)] };
                worst = worst.max(t.norm());
            }
        }
        // ||U (G - I) U^H|| <= ||G - I|| ||U||^2
        worst * (g.nrows().max(1) as f64)
    }

    /// ||P - Q||; equals the sine of the largest principal angle when ranks agree, else 1.
    pub fn distance(&self, other: &Projector) -> f64 {
        if self.rank() != other.rank() || self.frame.nrows() != other.frame.nrows() {
            return 1.0;
        }
        if self.rank() == 0 {
            return 0.0;
        }
        let c = self.frame.adjoint() * &other.frame;
        let r = &other.frame - &self.frame * &c;
        let g = r.adjoint() * &r;
        match hermitian_eigen(g.as_ref()) {
            Ok((vals, _)) => vals.last().copied().unwrap_or(0.0).max(0.0).sqrt().min(1.0),
            Err(_) => 1.0,
        }
    }
}

/// Frame for the eigenvalues of `spectrum` within `radius` of each energy.
/// Errors if some other eigenvalue lies within (radius, 2 radius] of a listed energy.
pub fn projector_from_spectrum(spectrum: &WindowSpectrum, energies: &[f64], radius: f64) -> Result<Projector> {
    let mut chosen: Vec<usize> = Vec::new();
    for &e in energies {
        if e - 2.0 * radius < spectrum.window.0 || e + 2.0 * radius > spectrum.window.1 {
            return Err(Error::Input(alloc::format!("energy {e} too close to the edge of the solved window")));
        }
        for (i, p) in spectrum.pairs.iter().enumerate() {
            let d = (p.energy - e).abs();
            if d <= radius {
                if !chosen.contains(&i) {
                    chosen.push(i);
                }
            } else if d <= 2.0 * radius {
                return Err(Error::Degeneracy(alloc::format!(
                    "eigenvalue {} lies {:.3e} from {e}, inside the isolation annulus ({radius:.3e}, {:.3e}]",
                    p.energy,
                    d,
                    2.0 * radius
                )));
            }
        }
    }
    chosen.sort_unstable();
    let vecs: Vec<&[c64]> = chosen.iter().map(|&i| spectrum.pairs[i].vector.as_slice()).collect();
    Ok(Projector::from_vectors(&vecs, chosen.iter().map(|&i| spectrum.pairs[i].energy).collect()))
}

/// Solves around `energies` and returns the spectral projector.
pub fn spectral_projector(op: &AssembledOperator, energies: &[f64], radius: f64, opts: &SolveOptions) -> Result<Projector> {
    if energies.is_empty() || !(radius > 0.0) {
        return Err(Error::Input("spectral_projector needs energies and a positive radius".into()));
    }
    let lo = energies.iter().fold(f64::INFINITY, |a, &e| a.min(e)) - 2.5 * radius;
    let hi = energies.iter().fold(f64::NEG_INFINITY, |a, &e| a.max(e)) + 2.5 * radius;
    let spec = solve_window_with(op, (lo, hi), opts)?;
    projector_from_spectrum(&spec, energies, radius)
}
