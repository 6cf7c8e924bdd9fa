//! Thin wrappers over faer: shifted LDL^H with inertia, complex LU, dense Hermitian eigensolves.

use alloc::vec;
use alloc::vec::Vec;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, supernodal, CholeskySymbolicParams, SymbolicCholesky, SymbolicCholeskyRaw, SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::SparseColMat;
use faer::{c64, Conj, Mat, MatMut, MatRef, Par, Side};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::operators::AssembledOperator;

pub(crate) const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

const REFINE_STEPS: usize = 3;
const REFINE_TOL: f64 = 1e-14;

/// Sparse LDL^H factorization of H - shift (real shift), carrying its inertia.
pub struct ShiftedLdlt {
    lower: SparseColMat<usize, c64>,
    norm_inf: f64,
    symbolic: SymbolicCholesky<usize>,
    values: Vec<c64>,
    pub shift: f64,
    pub negative: usize,
    pub min_pivot: f64,
}

impl ShiftedLdlt {
    pub fn new(op: &AssembledOperator, shift: f64) -> Result<Self> {
        Self::from_lower(op.lower_matrix(shift)?, shift)
    }

    fn from_lower(a: SparseColMat<usize, c64>, shift: f64) -> Result<Self> {
        let err = |reason: alloc::string::String| Error::Solver { shift, reason };
        let symbolic = factorize_symbolic_cholesky(
            a.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams { supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL, ..Default::default() },
        )
        .map_err(|e| err(alloc::format!("symbolic analysis: {e:?}")))?;
        let mut values = vec![ZERO; symbolic.len_val()];
        {
            let mut buf = MemBuffer::new(symbolic.factorize_numeric_ldlt_scratch::<c64>(Par::Seq, Default::default()));
            symbolic
                .factorize_numeric_ldlt(&mut values, a.as_ref(), Side::Lower, Default::default(), Par::Seq, MemStack::new(&mut buf), Default::default())
                .map_err(|e| err(alloc::format!("numeric LDL^H: {e:?}")))?;
        }
        let (mut negative, mut min_pivot) = (0usize, f64::INFINITY);
        match symbolic.raw() {
            SymbolicCholeskyRaw::Supernodal(s) => {
                let r = supernodal::SupernodalLdltRef::<usize, c64>::new(s, &values);
                for k in 0..s.n_supernodes() {
                    let m = r.supernode(k).val();
                    for d in 0..m.ncols() {
                        let p = m[(d, d)].re;
                        if p < 0.0 {
                            negative += 1;
                        }
                        min_pivot = min_pivot.min(p.abs());
                    }
                }
            }
            SymbolicCholeskyRaw::Simplicial(_) => return Err(err("expected a supernodal factorization".into())),
        }
        if !(min_pivot > 0.0 && min_pivot.is_finite()) {
            return Err(err("zero pivot: shift is (numerically) an eigenvalue".into()));
        }
        let mut rows = vec![0.0f64; a.nrows()];
        for j in 0..a.ncols() {
            for (i, v) in a.row_idx_of_col(j).zip(a.val_of_col(j)) {
                rows[i] += v.norm();
                if i != j {
                    rows[j] += v.norm();
                }
            }
        }
        let norm_inf = rows.into_iter().fold(0.0, f64::max);
        Ok(Self { lower: a, norm_inf, symbolic, values, shift, negative, min_pivot })
    }

    fn raw_solve(&self, rhs: MatMut<'_, c64>) {
        let k = rhs.ncols();
        let ldlt = faer::sparse::linalg::cholesky::LdltRef::<usize, c64>::new(&self.symbolic, &self.values);
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<c64>(k, Par::Seq));
        ldlt.solve_in_place_with_conj(Conj::No, rhs, Par::Seq, MemStack::new(&mut buf));
    }

    /// (H - shift) x from the stored lower triangle.
    fn apply(&self, x: MatRef<'_, c64>) -> Mat<c64> {
        let a = &self.lower;
        let mut y = Mat::<c64>::zeros(x.nrows(), x.ncols());
        for j in 0..a.ncols() {
            for (i, v) in a.row_idx_of_col(j).zip(a.val_of_col(j)) {
                for c in 0..x.ncols() {
                    y[(i, c)] += *v * x[(j, c)];
                    if i != j {
                        y[(j, c)] += v.conj() * x[(i, c)];
                    }
                }
            }
        }
        y
    }

    /// ||H - shift||_inf
    pub fn norm_inf(&self) -> f64 {
        self.norm_inf
    }

    /// rhs <- (H - shift)^{-1} rhs, refined until the normwise backward error is at rounding level.
    pub fn solve_in_place(&self, mut rhs: MatMut<'_, c64>) {
        let b = rhs.to_owned();
        self.raw_solve(rhs.as_mut());
        for _ in 0..REFINE_STEPS {
            let x = rhs.as_ref();
            let mut r = &b - self.apply(x);
            let done = (0..b.ncols()).all(|c| r.col(c).norm_l2() <= REFINE_TOL * (self.norm_inf * x.col(c).norm_l2() + b.col(c).norm_l2()));
            if done {
                break;
            }
            self.raw_solve(r.as_mut());
            rhs += &r;
        }
    }

    pub fn solve_vec(&self, b: &[c64]) -> Vec<c64> {
        let mut m = Mat::<c64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.solve_in_place(m.as_mut());
        (0..b.len()).map(|i| m[(i, 0)]).collect()
    }
}

/// Number of eigenvalues below `x`, nudging the shift if it lands on an eigenvalue.
pub fn count_below(op: &AssembledOperator, x: f64) -> Result<(usize, f64)> {
    let mut last = None;
    for k in 0..4 {
        let s = x + k as f64 * 1e-11 * (1.0 + x.abs());
        match ShiftedLdlt::new(op, s) {
            Ok(f) => return Ok((f.negative, s)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

/// Sparse LU of z - H for complex z.
pub struct ResolventLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, c64>,
    pub z: c64,
}

impl ResolventLu {
    pub fn new(op: &AssembledOperator, z: c64) -> Result<Self> {
        let a = op.shifted_full(z)?;
        let lu = a.sp_lu().map_err(|e| Error::SingularResolvent { re: z.re, im: z.im, reason: alloc::format!("{e:?}") })?;
        Ok(Self { lu, z })
    }

    /// rhs <- (z - H)^{-1} rhs
    pub fn solve_in_place(&self, rhs: MatMut<'_, c64>) {
        self.lu.solve_in_place_with_conj(Conj::No, rhs);
    }

    /// rhs <- (conj(z) - H)^{-1} rhs, the adjoint resolvent.
    pub fn solve_adjoint_in_place(&self, rhs: MatMut<'_, c64>) {
        self.lu.solve_transpose_in_place_with_conj(Conj::Yes, rhs);
    }
}

/// Eigen-decomposition of a dense Hermitian matrix, ascending.
pub fn hermitian_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver { shift: 0.0, reason: alloc::format!("dense eigensolver: {e:?}") })?;
    let s = evd.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn dot(a: &[c64], b: &[c64]) -> c64 {
    let mut s = ZERO;
    for (x, y) in a.iter().zip(b) {
        s += x.conj() * y;
    }
    s
}

pub fn norm(a: &[c64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn col(m: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// ||H psi - E psi||
pub fn residual(op: &AssembledOperator, psi: &[c64], e: f64) -> f64 {
    let hp = op.apply_vec(psi);
    hp.iter().zip(psi).map(|(h, p)| (h - p * e).norm_sqr()).sum::<f64>().sqrt()
}

pub fn rayleigh(op: &AssembledOperator, psi: &[c64]) -> f64 {
    dot(psi, &op.apply_vec(psi)).re / dot(psi, psi).re
}
