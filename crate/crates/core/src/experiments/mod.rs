//! Campaign drivers. Every task is a pure function of (config, seed, size); reducers merge
//! task results in task-key order.
mod branches;
mod decouple;
mod edge;
mod flux;
mod wegner;

pub use branches::*;
pub use decouple::*;
pub use edge::*;
pub use flux::*;
pub use wegner::*;

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{linear_fit, LinearFit};

/// ln(value) against sqrt(L), the common abscissa of every decay study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub label: String,
    pub sizes: Vec<u32>,
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: LinearFit,
    /// Per-size maxima strictly decreasing in L.
    pub monotone: bool,
    pub slope_negative: bool,
}

pub fn decay_fit(label: &str, sizes: &[u32], values: &[f64]) -> Result<DecayFit> {
    if sizes.len() != values.len() {
        return Err(Error::Input("decay fit: sizes and values differ in length".into()));
    }
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0 && values[i].is_finite()).collect();
    let mut distinct: Vec<u32> = keep.iter().map(|&i| sizes[i]).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Input("decay fit needs positive values at three or more sizes".into()));
    }
    let x: Vec<f64> = keep.iter().map(|&i| (sizes[i] as f64).sqrt()).collect();
    let y: Vec<f64> = keep.iter().map(|&i| values[i].ln()).collect();
    let fit = linear_fit(&x, &y)?;
    let maxima: Vec<f64> = distinct.iter().map(|&l| keep.iter().filter(|&&i| sizes[i] == l).map(|&i| values[i]).fold(0.0, f64::max)).collect();
    let monotone = maxima.windows(2).all(|w| w[1] < w[0]);
    Ok(DecayFit {
        label: label.into(),
        sizes: keep.iter().map(|&i| sizes[i]).collect(),
        abscissa: x,
        values: keep.iter().map(|&i| values[i]).collect(),
        slope_negative: fit.negative_with_confidence(),
        fit,
        monotone,
    })
}
