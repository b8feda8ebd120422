//! Well projections, orientation profiles and empirical rigidity constants.

mod inversion;
mod profile;
mod rigidity;

use nalgebra::DMatrix;

use crate::lattice::StructureMatrix;

pub use inversion::{inversion_cost, pair_energy, simplex_pairs, InversionCost, InversionOptions, SimplexPair};
pub use profile::{orientation_profile, OrientationProfile, SlabLabel, EITHER_TOLERANCE};
pub use rigidity::{rigidity_probe, RigidityProbe};

/// Below this |det F| the orientation counts as undetermined.
pub const DET_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WellProjection {
    /// Nearest point of the well component with the orientation of F.
    pub nearest: DMatrix<f64>,
    /// Frobenius distance |F - nearest|.
    pub distance: f64,
    /// Sign of det F, 0 when |det F| < 1e-12.
    pub orientation: i8,
    /// For a singular F, the nearest point of the other component (same distance).
    pub tied: Option<DMatrix<f64>>,
}

/// Nearest `Q s H` to `F` with `Q` orthogonal and `det Q = sign`, and its distance.
///
/// Solved as an orthogonal Procrustes problem on `F (sH)^T` with the last
/// singular direction flipped when the unconstrained optimum has the wrong sign.
pub fn nearest_in_component(f: &DMatrix<f64>, h: &StructureMatrix, scale: f64, sign: f64) -> (DMatrix<f64>, f64) {
    let sh = h.matrix() * scale;
    let a = f * sh.transpose();
    let svd = a.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut q = &u * &v_t;
    if q.determinant() * sign < 0.0 {
        let n = f.nrows();
        let mut d = DMatrix::identity(n, n);
        // Singular values come sorted in decreasing order; flip the smallest.
        let (imin, _) = svd.singular_values.argmin();
        d[(imin, imin)] = -1.0;
        q = &u * d * &v_t;
    }
    let nearest = q * sh;
    let distance = (f - &nearest).norm();
    (nearest, distance)
}

/// Project `F` onto `O(N) sH`, keeping the orientation of `F`.
pub fn polar_project(f: &DMatrix<f64>, h: &StructureMatrix, scale: f64) -> WellProjection {
    let det = f.determinant();
    if det.abs() < DET_TIE {
        let (plus, dp) = nearest_in_component(f, h, scale, 1.0);
        let (minus, dm) = nearest_in_component(f, h, scale, -1.0);
        let (nearest, tied, distance) = if dp <= dm { (plus, minus, dp) } else { (minus, plus, dm) };
        return WellProjection { nearest, distance, orientation: 0, tied: Some(tied) };
    }
    let (nearest, distance) = nearest_in_component(f, h, scale, det.signum() * h.matrix().determinant().signum());
    WellProjection { nearest, distance, orientation: det.signum() as i8, tied: None }
}
