use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::polar_project;
use crate::energy::cell_energy;
use crate::error::{invalid, Result};
use crate::lattice::{kuhn_simplices, StructureMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct RigidityProbe {
    /// Largest observed dist^p(F, well) / E_cell(u_F; T).
    pub constant: f64,
    pub argmax: DMatrix<f64>,
    /// Largest ratio among samples with det F >= 0.
    pub constant_nonnegative_det: f64,
    pub samples: usize,
    /// Samples with zero cell energy (only at the wells).
    pub skipped: usize,
}

/// `dist^p(F, well of its orientation) / min_T E_cell(u_F; T)`, or `None` at a well.
pub fn rigidity_ratio(f: &DMatrix<f64>, h: &StructureMatrix, p: f64) -> Result<Option<f64>> {
    let n = h.dim();
    let simplices = kuhn_simplices(n)?;
    let dist = polar_project(f, h, 1.0).distance;
    let energy = simplices
        .iter()
        .map(|s| {
            let v: Vec<Vec<f64>> = s.vertices.iter().map(|x| x.iter().map(|&c| c as f64).collect()).collect();
            cell_energy(f, &v, h, p)
        })
        .fold(f64::INFINITY, f64::min);
    if energy < 1e-14 {
        return Ok(None);
    }
    Ok(Some(dist.powf(p) / energy))
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng, reflect: bool) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let mut q = a.qr().q();
    if (q.determinant() < 0.0) != reflect {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Sample F near the wells, far from them and uniformly at random (both
/// orientations), and report the largest comparison ratio.
pub fn rigidity_probe(h: &StructureMatrix, p: f64, sample_count: usize, seed: u64) -> Result<RigidityProbe> {
    if sample_count < 100 {
        return Err(invalid("rigidity probe needs at least 100 samples"));
    }
    let n = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (0.0, DMatrix::zeros(n, n));
    let mut best_nonneg = 0.0f64;
    let mut skipped = 0;
    for i in 0..sample_count {
        let reflect = i % 2 == 1;
        let f = match i % 3 {
            0 => {
                let q = random_orthogonal(n, &mut rng, reflect);
                let eps = 10f64.powf(-3.0 * rng.random::<f64>());
                q * h.matrix() + DMatrix::from_fn(n, n, |_, _| eps * (2.0 * rng.random::<f64>() - 1.0))
            }
            1 => {
                let scale = 2.0 + 18.0 * rng.random::<f64>();
                DMatrix::from_fn(n, n, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0))
            }
            _ => DMatrix::from_fn(n, n, |_, _| 2.0 * (2.0 * rng.random::<f64>() - 1.0)),
        };
        match rigidity_ratio(&f, h, p)? {
            None => skipped += 1,
            Some(r) => {
                if f.determinant() >= 0.0 {
                    best_nonneg = best_nonneg.max(r);
                }
                if r > best.0 {
                    best = (r, f);
                }
            }
        }
    }
    Ok(RigidityProbe { constant: best.0, argmax: best.1, constant_nonnegative_det: best_nonneg, samples: sample_count, skipped })
}
