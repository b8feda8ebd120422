use nalgebra::{DMatrix, DVector};

use super::StructureMatrix;
use crate::error::{invalid, Result};

/// Orientation-reversing matrix `R = Q H` rank-one connected to `H` across the
/// plane with normal `nu`: `H - R = a ⊗ nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneReflection {
    pub r: DMatrix<f64>,
    pub a: DVector<f64>,
    pub nu: DVector<f64>,
}

impl RankOneReflection {
    /// `H x` on the side `<x, nu> >= 0`, `R x` on the other.
    pub fn interface_map(&self, h: &StructureMatrix, x: &[f64]) -> Vec<f64> {
        let xv = DVector::from_column_slice(x);
        let y = if xv.dot(&self.nu) >= 0.0 { h.matrix() * &xv } else { &self.r * &xv };
        y.as_slice().to_vec()
    }
}

pub fn rank_one_reflection(h: &StructureMatrix, nu: &[f64]) -> Result<RankOneReflection> {
    let n = h.dim();
    if nu.len() != n {
        return Err(invalid("normal vector has wrong dimension"));
    }
    let norm = nu.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(invalid("normal vector must be nonzero"));
    }
    let nu = DVector::from_column_slice(nu) / norm;
    let hinv_t = h.matrix().clone().try_inverse().ok_or_else(|| invalid("singular structure matrix"))?.transpose();
    let w = &hinv_t * &nu;
    let wn = w.norm();
    let nup = &w / wn;
    let q = DMatrix::identity(n, n) - 2.0 * &nup * nup.transpose();
    let r = &q * h.matrix();
    let a = nup * (2.0 / wn);
    Ok(RankOneReflection { r, a, nu })
}
