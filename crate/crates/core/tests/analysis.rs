mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirelattice::analysis::*;
use wirelattice::lattice::StructureMatrix;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Two-simplex energy over all vertex pairs and the product of the two
/// orientation signs, for planar pairs `[x0, x1, x2, y0]`.
fn planar_pair(reference: &[Vec<f64>], u: &[[f64; 2]]) -> (f64, f64) {
    let mut e = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            e += (dist(&u[i], &u[j]) - dist(&reference[i], &reference[j])).powi(2);
        }
    }
    let t = cross2(&u[0], &u[1], &u[2]) / cross2(&reference[0], &reference[1], &reference[2]);
    let s = cross2(&u[3], &u[1], &u[2]) / cross2(&reference[3], &reference[1], &reference[2]);
    (e, t * s)
}

/// Grid search with the gauge u(x1) = 0, u(x2) on the positive first axis.
fn grid_minimum(reference: &[Vec<f64>]) -> f64 {
    let step = 0.25;
    let coords: Vec<f64> = (0..=20).map(|i| -2.5 + step * i as f64).collect();
    let mut best = f64::INFINITY;
    for t in (1..=10).map(|i| step * i as f64) {
        for &a in &coords {
            for &b in &coords {
                for &c in &coords {
                    for &d in &coords {
                        let u = [[a, b], [0.0, 0.0], [t, 0.0], [c, d]];
                        let (e, q) = planar_pair(reference, &u);
                        if q <= 0.0 && e < best {
                            best = e;
                        }
                    }
                }
            }
        }
    }
    best
}

#[test]
fn inversion_cost_against_grid_oracle() {
    let h = StructureMatrix::identity(2);
    let c = inversion_cost(&h, 2.0, &InversionOptions::default()).unwrap();
    let grid = simplex_pairs(2).unwrap().iter().map(|p| grid_minimum(&p.reference(&h))).fold(f64::INFINITY, f64::min);
    assert!(c.value <= grid + 1e-9, "{} vs grid {grid}", c.value);
    assert!(c.value >= 0.5 * grid, "{} vs grid {grid}", c.value);
    let u: Vec<[f64; 2]> = c.positions.chunks(2).map(|p| [p[0], p[1]]).collect();
    let (e, q) = planar_pair(&c.pair.reference(&h), &u);
    assert!((e - c.value).abs() < 1e-9);
    assert!(q <= 1e-8);
}

#[test]
fn near_isometric_inversions_cost_at_least_one() {
    assert!(common::near_isometric_minimum(2, 0.05, 500, 3) >= 1.0);
    // In three dimensions the cross-cube margin is (√6 - √2)² - 1 ≈ 0.07, so the
    // neighbourhood has to be tighter.
    assert!(common::near_isometric_minimum(3, 0.02, 500, 3) >= 1.0);
}

#[test]
fn projection_matches_angle_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let f = DMatrix::from_fn(2, 2, |_, _| 3.0 * rng.random::<f64>() - 1.5);
        if f.determinant().abs() < 1e-3 {
            continue;
        }
        let p = polar_project(&f, &StructureMatrix::identity(2), 1.0);
        let refl = f.determinant() < 0.0;
        let scan = (0..200_000)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / 200_000.0;
                let (c, s) = (th.cos(), th.sin());
                let q = if refl { [c, s, s, -c] } else { [c, -s, s, c] };
                ((f[(0, 0)] - q[0]).powi(2) + (f[(0, 1)] - q[1]).powi(2) + (f[(1, 0)] - q[2]).powi(2) + (f[(1, 1)] - q[3]).powi(2))
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(p.distance <= scan + 1e-12 && scan - p.distance < 1e-6, "{} vs {scan}", p.distance);
        assert!((p.nearest.clone() * p.nearest.transpose() - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}

#[test]
fn projection_is_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let h = StructureMatrix::fcc();
    for _ in 0..20 {
        let f = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5) + h.matrix();
        let mut q = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5).qr().q();
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        let a = polar_project(&f, &h, 0.9);
        let b = polar_project(&(&q * &f), &h, 0.9);
        assert!((a.distance - b.distance).abs() < 1e-10);
        assert!((&q * &a.nearest - &b.nearest).norm() < 1e-9);
        assert_eq!(a.orientation, b.orientation);
        let mut refl = DMatrix::identity(3, 3);
        refl[(0, 0)] = -1.0;
        let c = polar_project(&(&refl * &f), &h, 0.9);
        assert!((a.distance - c.distance).abs() < 1e-10);
        assert_eq!(c.orientation, -a.orientation);
    }
}

#[test]
fn cell_energy_controls_the_well_distance() {
    for h in [StructureMatrix::identity(2), StructureMatrix::hexagonal(), StructureMatrix::bcc()] {
        let constants: Vec<f64> = (0..3).map(|s| rigidity_probe(&h, 2.0, 1500, s).unwrap().constant).collect();
        let (lo, hi) = constants.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
        assert!(lo > 0.0 && hi.is_finite());
        assert!(hi / lo < 3.0, "{constants:?}");
    }
}
