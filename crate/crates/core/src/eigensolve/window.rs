use alloc::vec::Vec;
use faer::{c64, Mat, MatMut, MatRef};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{count_below, hermitian_eigen, ShiftedLdlt, ZERO};
use crate::operators::{gaussian_vector, AssembledOperator};

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub energy: f64,
    /// Unit-norm grid vector (discrete l2 norm).
    pub vector: Vec<c64>,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: Method,
    /// Residual bound ||H psi - E psi|| for every returned pair.
    pub tol: f64,
    pub block: usize,
    pub max_restarts: usize,
    /// Auto switches to dense below this many unknowns.
    pub dense_limit: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { method: Method::Auto, tol: 1e-9, block: 4, max_restarts: 40, dense_limit: 5000, seed: 0x5eed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub method: Method,
    pub tol: f64,
    /// Eigenvalue counts below the window ends (inertia or dense).
    pub below_lo: usize,
    pub below_hi: usize,
    pub shift: f64,
    pub restarts: usize,
    pub solves: usize,
    pub max_basis: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowSpectrum {
    pub pairs: Vec<EigenPair>,
    pub window: (f64, f64),
    pub info: SolverInfo,
}

impl WindowSpectrum {
    pub fn energies(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.energy).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// max |<psi_i, psi_j> - delta_ij|
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.pairs.iter().enumerate() {
            for (j, b) in self.pairs.iter().enumerate().skip(i) {
                let d = crate::linalg::dot(&a.vector, &b.vector);
                let t = if i == j { (d - c64::new(1.0, 0.0)).norm() } else { d.norm() };
                worst = worst.max(t);
            }
        }
        worst
    }
}

pub fn solve_window(op: &AssembledOperator, window: (f64, f64), tol: f64) -> Result<WindowSpectrum> {
    solve_window_with(op, window, &SolveOptions { tol, ..Default::default() })
}

pub fn solve_window_with(op: &AssembledOperator, window: (f64, f64), opts: &SolveOptions) -> Result<WindowSpectrum> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Input(alloc::format!("bad window ({lo}, {hi})")));
    }
    let dense = match opts.method {
        Method::Dense => true,
        Method::ShiftInvert => false,
        Method::Auto => op.dim() < opts.dense_limit,
    };
    if dense {
        dense_window(op, window, opts)
    } else {
        shift_invert(op, window, opts)
    }
}

/// Full dense diagonalization; also the oracle for the iterative path.
pub fn dense_window(op: &AssembledOperator, window: (f64, f64), opts: &SolveOptions) -> Result<WindowSpectrum> {
    let (vals, vecs) = hermitian_eigen(op.dense().as_ref())?;
    let (lo, hi) = window;
    let below_lo = vals.iter().filter(|v| **v < lo).count();
    let below_hi = vals.iter().filter(|v| **v < hi).count();
    let mut pairs = Vec::new();
    for (k, e) in vals.iter().enumerate() {
        if *e > lo && *e < hi {
            let v: Vec<c64> = (0..vecs.nrows()).map(|i| vecs[(i, k)]).collect();
            let residual = crate::linalg::residual(op, &v, *e);
            pairs.push(EigenPair { energy: *e, vector: v, residual });
        }
    }
    let info = SolverInfo { method: Method::Dense, tol: opts.tol, below_lo, below_hi, shift: 0.5 * (lo + hi), restarts: 0, solves: 0, max_basis: op.dim() };
    Ok(WindowSpectrum { pairs, window, info })
}

/// Two passes of classical Gram-Schmidt of `w` against the columns of `q`; returns the coefficients.
fn project_out(q: MatRef<'_, c64>, mut w: MatMut<'_, c64>) -> Mat<c64> {
    let mut c = Mat::<c64>::zeros(q.ncols(), w.ncols());
    if q.ncols() == 0 {
        return c;
    }
    for _ in 0..2 {
        let h = q.adjoint() * w.as_ref();
        w -= q * &h;
        c += &h;
    }
    c
}

fn col_norm(w: MatRef<'_, c64>, j: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..w.nrows() {
        s += w[(i, j)].norm_sqr();
    }
    s.sqrt()
}

/// In-place orthonormalization of the columns of `w`; deficient columns are replaced with
/// fresh random directions orthogonal to `against` and to the earlier columns.
/// Returns R with w_in = w_out R (zero rows for replaced columns).
fn orthonormalize(mut w: MatMut<'_, c64>, against: MatRef<'_, c64>, seed: &mut u64) -> Mat<c64> {
    let b = w.ncols();
    let n = w.nrows();
    let mut r = Mat::<c64>::zeros(b, b);
    for j in 0..b {
        let before = col_norm(w.as_ref(), j);
        for _ in 0..2 {
            for p in 0..j {
                let mut d = ZERO;
                for i in 0..n {
                    d += w[(i, p)].conj() * w[(i, j)];
                }
                for i in 0..n {
                    let t = w[(i, p)] * d;
                    w[(i, j)] -= t;
                }
                r[(p, j)] += d;
            }
        }
        let nr = col_norm(w.as_ref(), j);
        if nr > 1e-10 * before.max(f64::MIN_POSITIVE) && nr > 0.0 {
            r[(j, j)] = c64::new(nr, 0.0);
            for i in 0..n {
                w[(i, j)] /= nr;
            }
        } else {
            for p in 0..j {
                r[(p, j)] = ZERO;
            }
            *seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let g = gaussian_vector(n, *seed);
            let mut x = Mat::from_fn(n, 1, |i, _| g[i]);
            project_out(against, x.as_mut());
            if j > 0 {
                project_out(w.as_ref().subcols(0, j), x.as_mut());
            }
            let xn = col_norm(x.as_ref(), 0);
            for i in 0..n {
                w[(i, j)] = x[(i, 0)] / xn;
            }
        }
    }
    r
}

fn shift_invert(op: &AssembledOperator, window: (f64, f64), opts: &SolveOptions) -> Result<WindowSpectrum> {
    let (lo, hi) = window;
    let n = op.dim();
    let (below_lo, _) = count_below(op, lo)?;
    let (below_hi, _) = count_below(op, hi)?;
    if below_hi < below_lo {
        return Err(Error::Solver { shift: hi, reason: "inertia decreased across the window".into() });
    }
    let count = below_hi - below_lo;
    let mut sigma = 0.5 * (lo + hi);
    let mut info = SolverInfo { method: Method::ShiftInvert, tol: opts.tol, below_lo, below_hi, shift: sigma, restarts: 0, solves: 0, max_basis: 0 };
    if count == 0 {
        return Ok(WindowSpectrum { pairs: Vec::new(), window, info });
    }
    let fac = {
        let mut got = None;
        for k in 0..4 {
            match ShiftedLdlt::new(op, sigma) {
                Ok(f) => {
                    got = Some(f);
                    break;
                }
                Err(_) => sigma += (k as f64 + 1.0) * 1e-7 * (hi - lo),
            }
        }
        got.ok_or(Error::Solver { shift: sigma, reason: "no usable shift near the window center".into() })?
    };
    info.shift = sigma;

    let mut locked = Mat::<c64>::zeros(n, count);
    let mut energies: Vec<f64> = Vec::with_capacity(count);
    let mut seed = opts.seed;
    let mut start: Vec<Vec<c64>> = Vec::new();

    for restart in 0..opts.max_restarts {
        let nl = energies.len();
        if nl == count {
            break;
        }
        info.restarts = restart;
        let remaining = count - nl;
        let b = opts.block.max(1).min(n - nl);
        let m_target = (3 * remaining + 40).max(2 * b).min(n - nl);
        let nblocks = m_target.div_ceil(b).max(1);
        let m = nblocks * b;
        let mut q = Mat::<c64>::zeros(n, m);
        let mut t = Mat::<c64>::zeros(m, m);
        // starting block: thick-restart vectors first, random fill
        for c in 0..b {
            let v = if c < start.len() {
                start[c].clone()
            } else {
                seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
                gaussian_vector(n, seed)
            };
            for i in 0..n {
                q[(i, c)] = v[i];
            }
        }
        {
            let lk = locked.as_ref().subcols(0, nl);
            project_out(lk, q.as_mut().subcols_mut(0, b));
            orthonormalize(q.as_mut().subcols_mut(0, b), lk, &mut seed);
        }
        let mut k = b;
        for bi in 0..nblocks {
            let mut w = q.as_ref().subcols(bi * b, b).to_owned();
            fac.solve_in_place(w.as_mut());
            info.solves += b;
            project_out(locked.as_ref().subcols(0, nl), w.as_mut());
            let c = project_out(q.as_ref().subcols(0, k), w.as_mut());
            for r in 0..k {
                for cc in 0..b {
                    t[(r, bi * b + cc)] = c[(r, cc)];
                }
            }
            if k == m {
                break;
            }
            let against = {
                let mut a = Mat::<c64>::zeros(n, nl + k);
                a.as_mut().subcols_mut(0, nl).copy_from(locked.as_ref().subcols(0, nl));
                a.as_mut().subcols_mut(nl, k).copy_from(q.as_ref().subcols(0, k));
                a
            };
            let r = orthonormalize(w.as_mut(), against.as_ref(), &mut seed);
            for rr in 0..b {
                for cc in 0..b {
                    t[(k + rr, bi * b + cc)] = r[(rr, cc)];
                }
            }
            q.as_mut().subcols_mut(k, b).copy_from(&w);
            k += b;
        }
        info.max_basis = info.max_basis.max(k);
        let tk = Mat::<c64>::from_fn(k, k, |i, j| (t[(i, j)] + t[(j, i)].conj()) * 0.5);
        let (theta, s) = hermitian_eigen(tk.as_ref())?;
        // wanted Ritz values, largest |theta| first
        let mut idx: Vec<usize> = (0..k).filter(|&i| theta[i] != 0.0 && (sigma + 1.0 / theta[i]) > lo && (sigma + 1.0 / theta[i]) < hi).collect();
        idx.sort_by(|&a, &b| theta[b].abs().partial_cmp(&theta[a].abs()).unwrap());
        let mut unconverged: Vec<Vec<c64>> = Vec::new();
        for &i in &idx {
            let y = q.as_ref().subcols(0, k) * s.as_ref().subcols(i, 1);
            let mut v: Vec<c64> = (0..n).map(|r| y[(r, 0)]).collect();
            // deflate against what is already locked
            let mut vm = Mat::from_fn(n, 1, |r, _| v[r]);
            project_out(locked.as_ref().subcols(0, energies.len()), vm.as_mut());
            let vn = col_norm(vm.as_ref(), 0);
            if vn < 0.5 {
                continue;
            }
            for r in 0..n {
                v[r] = vm[(r, 0)] / vn;
            }
            let hv = op.apply_vec(&v);
            let e = crate::linalg::dot(&v, &hv).re;
            let res = hv.iter().zip(&v).map(|(h, p)| (h - p * e).norm_sqr()).sum::<f64>().sqrt();
            if res <= opts.tol && e > lo && e < hi && energies.len() < count {
                let j = energies.len();
                for r in 0..n {
                    locked[(r, j)] = v[r];
                }
                energies.push(e);
            } else {
                unconverged.push(v);
            }
        }
        unconverged.truncate(b);
        start = unconverged;
    }
    let nl = energies.len();
    if nl < count {
        return Err(Error::IncompleteSpectrum { lo, hi, expected: count, found: nl });
    }
    // final Rayleigh-Ritz over the locked block
    let lk = locked.as_ref().subcols(0, nl).to_owned();
    let mut hl = Mat::<c64>::zeros(n, nl);
    for j in 0..nl {
        let v: Vec<c64> = (0..n).map(|r| lk[(r, j)]).collect();
        let hv = op.apply_vec(&v);
        for r in 0..n {
            hl[(r, j)] = hv[r];
        }
    }
    let g = lk.adjoint() * &hl;
    let g = Mat::<c64>::from_fn(nl, nl, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5);
    let (vals, rot) = hermitian_eigen(g.as_ref())?;
    let x = &lk * &rot;
    let mut pairs = Vec::with_capacity(nl);
    for j in 0..nl {
        let mut v: Vec<c64> = (0..n).map(|r| x[(r, j)]).collect();
        let vn = crate::linalg::norm(&v);
        v.iter_mut().for_each(|z| *z /= vn);
        let residual = crate::linalg::residual(op, &v, vals[j]);
        pairs.push(EigenPair { energy: vals[j], vector: v, residual });
    }
    if let Some(p) = pairs.iter().find(|p| p.residual > opts.tol * 10.0 || p.energy <= lo || p.energy >= hi) {
        return Err(Error::Solver { shift: sigma, reason: alloc::format!("locked pair at {} lost accuracy (residual {})", p.energy, p.residual) });
    }
    Ok(WindowSpectrum { pairs, window, info })
}

/// Inverse-iteration refinement of one pair with a fresh factorization near its energy.
pub fn polish(op: &AssembledOperator, pair: &EigenPair, iterations: usize) -> Result<EigenPair> {
    let off = (pair.residual * 1e3).max(1e-9);
    let fac = match ShiftedLdlt::new(op, pair.energy + off) {
        Ok(f) => f,
        Err(_) => ShiftedLdlt::new(op, pair.energy - off)?,
    };
    let mut v = pair.vector.clone();
    for _ in 0..iterations.max(1) {
        let w = fac.solve_vec(&v);
        let wn = crate::linalg::norm(&w);
        v = w.into_iter().map(|z| z / wn).collect();
    }
    let phase = crate::linalg::dot(&v, &pair.vector);
    if phase.norm() > 0.0 {
        let u = phase / phase.norm();
        v.iter_mut().for_each(|z| *z *= u);
    }
    let energy = crate::linalg::rayleigh(op, &v);
    let residual = crate::linalg::residual(op, &v, energy);
    Ok(EigenPair { energy, vector: v, residual })
}

/// Eigenvalue counts in consecutive windows, from inertia alone.
pub fn count_in(op: &AssembledOperator, lo: f64, hi: f64) -> Result<usize> {
    let (a, _) = count_below(op, lo)?;
    let (b, _) = count_below(op, hi)?;
    Ok(b.saturating_sub(a))
}

