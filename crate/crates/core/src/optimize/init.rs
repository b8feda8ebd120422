use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::Lattice;

/// Starting profiles for a transition between `left x` (x_1 < 0) and `right x` (x_1 >= 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitKind {
    /// Jump at x_1 = 0.
    Sharp,
    /// Linear interpolation between the two maps over `|x_1| <= width / 2`.
    LinearBlend,
    /// Mirror image of the left map across x_1 = -width/2 inside the band, then the right map.
    Folded,
    /// Sharp profile plus uniform noise of the given amplitude.
    RandomPerturb(f64),
}

fn apply(a: &DMatrix<f64>, x: &[f64]) -> DVector<f64> {
    a * DVector::from_column_slice(x)
}

pub fn make_initializer(
    lattice: &Lattice,
    kind: InitKind,
    left: &DMatrix<f64>,
    right: &DMatrix<f64>,
    width: f64,
    seed: u64,
) -> Vec<f64> {
    let n = lattice.dim();
    let half = width.max(0.0) / 2.0;
    let mut j = DMatrix::identity(n, n);
    j[(0, 0)] = -1.0;
    let lj = left * &j;
    let mut e1 = vec![0.0; n];
    e1[0] = half;
    let b1 = apply(left, &e1) * -2.0;
    let b2 = apply(&lj, &e1) + &b1 - apply(right, &e1);
    let mut u = Vec::with_capacity(lattice.len() * n);
    for node in &lattice.nodes {
        let x = &node.x;
        let y = match kind {
            InitKind::Sharp | InitKind::RandomPerturb(_) => {
                if x[0] < 0.0 {
                    apply(left, x)
                } else {
                    apply(right, x)
                }
            }
            InitKind::LinearBlend => {
                let t = if half == 0.0 {
                    if x[0] < 0.0 {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    ((x[0] + half) / (2.0 * half)).clamp(0.0, 1.0)
                };
                apply(left, x) * (1.0 - t) + apply(right, x) * t
            }
            InitKind::Folded => {
                if x[0] < -half {
                    apply(left, x)
                } else if x[0] <= half {
                    apply(&lj, x) + &b1
                } else {
                    apply(right, x) + &b2
                }
            }
        };
        u.extend(y.iter());
    }
    if let InitKind::RandomPerturb(amp) = kind {
        perturb(&mut u, amp, seed);
    }
    u
}

/// Add independent uniform noise in `[-amplitude, amplitude]` to every coordinate.
pub fn perturb(u: &mut [f64], amplitude: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in u.iter_mut() {
        *v += amplitude * (2.0 * rng.random::<f64>() - 1.0);
    }
}
