use alloc::vec::Vec;

use super::{LinearForm, SampledFunctions, StochasticOracle};
use crate::math::dot;

/// Sampled functions that are all affine: `f^i(w) = <rows_i, w> + offsets_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSample {
    pub id: u64,
    pub dim: usize,
    /// `(m + 1) x dim`, row-major.
    pub rows: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl AffineSample {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }
}

impl SampledFunctions for AffineSample {
    fn draw_id(&self) -> u64 {
        self.id
    }

    fn value_at(&self, w: &[f64], i: usize) -> f64 {
        dot(self.row(i), w) + self.offsets[i]
    }

    fn grad_into(&self, _w: &[f64], i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }

    fn linear_form(&self, i: usize) -> Option<LinearForm<'_>> {
        Some(LinearForm { coeffs: self.row(i), offset: self.offsets[i] })
    }
}

/// Degenerate oracle that returns the same affine functions on every draw.
#[derive(Debug, Clone)]
pub struct ConstantOracle {
    template: AffineSample,
    count: u64,
}

impl ConstantOracle {
    pub fn new(dim: usize, rows: Vec<f64>, offsets: Vec<f64>) -> Self {
        assert_eq!(rows.len(), dim * offsets.len());
        ConstantOracle { template: AffineSample { id: 0, dim, rows, offsets }, count: 0 }
    }
}

impl StochasticOracle for ConstantOracle {
    type Sample = AffineSample;

    fn dim(&self) -> usize {
        self.template.dim
    }

    fn num_constraints(&self) -> usize {
        self.template.offsets.len() - 1
    }

    fn draw(&mut self) -> AffineSample {
        self.count += 1;
        AffineSample { id: self.count, ..self.template.clone() }
    }
}
