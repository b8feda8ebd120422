//! Test-side oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirelattice::analysis::{pair_energy, simplex_pairs};
use wirelattice::lattice::StructureMatrix;
use wirelattice::transitions::{j_eval, GammaValues, OrientationLabel, OrientationSet, ProfileInterval};

/// Matrix with `H e1 = v1`, `H (e1 + e2) = v2`, `H (e1 + e2 + e3) = v3`.
pub fn from_generators(v: &[&[f64]]) -> DMatrix<f64> {
    let n = v.len();
    DMatrix::from_fn(n, n, |r, c| if c == 0 { v[0][r] } else { v[c][r] - v[c - 1][r] })
}

pub fn nonzero_01(n: usize) -> BTreeSet<Vec<i64>> {
    let mut out = BTreeSet::new();
    for mask in 1..(1 << n) {
        let v: Vec<i64> = (0..n).map(|i| (mask >> i) & 1).collect();
        out.insert(v.iter().map(|c| -c).collect());
        out.insert(v);
    }
    out
}

/// Apex differences of facet-sharing simplex pairs, found by brute force over
/// all vertex sets of permutation simplices in a 5^N window.
pub fn b2_brute(n: usize) -> BTreeSet<Vec<i64>> {
    let perms: Vec<Vec<usize>> = {
        fn rec(rest: Vec<usize>, acc: Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if rest.is_empty() {
                out.push(acc);
                return;
            }
            for (i, &r) in rest.iter().enumerate() {
                let mut rest2 = rest.clone();
                rest2.remove(i);
                let mut acc2 = acc.clone();
                acc2.push(r);
                rec(rest2, acc2, out);
            }
        }
        let mut out = Vec::new();
        rec((0..n).collect(), Vec::new(), &mut out);
        out
    };
    let mut simplices: Vec<BTreeSet<Vec<i64>>> = Vec::new();
    let range: Vec<i64> = (-2..=2).collect();
    let mut shifts = vec![vec![]];
    for _ in 0..n {
        shifts = shifts.into_iter().flat_map(|s: Vec<i64>| range.iter().map(move |&c| [s.clone(), vec![c]].concat())).collect();
    }
    for z in &shifts {
        for p in &perms {
            let mut v = z.clone();
            let mut set = BTreeSet::from([v.clone()]);
            for &i in p {
                v[i] += 1;
                set.insert(v.clone());
            }
            simplices.push(set);
        }
    }
    let mut out = BTreeSet::new();
    for a in &simplices {
        for b in &simplices {
            if a.intersection(b).count() == n {
                let x = a.difference(b).next().unwrap();
                let y = b.difference(a).next().unwrap();
                out.insert(x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<i64>>());
            }
        }
    }
    out
}

/// Exhaustive oracle: cut the profile at 0 and at the midpoint of every
/// `either` piece, then try every membership pattern the labels allow.
pub fn j_brute_force(l: f64, profile: &[ProfileInterval], g: &GammaValues) -> f64 {
    let mut atoms: Vec<(f64, f64, OrientationLabel)> = Vec::new();
    for p in profile {
        let mut cuts = vec![p.start];
        if p.start < 0.0 && p.end > 0.0 {
            cuts.push(0.0);
        }
        cuts.push(p.end);
        for w in cuts.windows(2) {
            if p.label == OrientationLabel::Either {
                let mid = 0.5 * (w[0] + w[1]);
                atoms.push((w[0], mid, p.label));
                atoms.push((mid, w[1], p.label));
            } else {
                atoms.push((w[0], w[1], p.label));
            }
        }
    }
    let free: Vec<usize> = (0..atoms.len()).filter(|&i| atoms[i].2 == OrientationLabel::Either).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << free.len()) {
        let inside: Vec<bool> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| match a.2 {
                OrientationLabel::Rot => true,
                OrientationLabel::Refl => false,
                OrientationLabel::Either => mask >> free.iter().position(|&f| f == i).unwrap() & 1 == 1,
            })
            .collect();
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for (a, &inn) in atoms.iter().zip(&inside) {
            if !inn {
                continue;
            }
            match intervals.last_mut() {
                Some(last) if last.1 == a.0 => last.1 = a.1,
                _ => intervals.push((a.0, a.1)),
            }
        }
        let set = OrientationSet::new(l, intervals).unwrap();
        best = best.min(j_eval(&set, g));
    }
    best
}

pub fn reflect_across(p: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let w = [p[0] - a[0], p[1] - a[1]];
    let s = (w[0] * d[0] + w[1] * d[1]) / (d[0] * d[0] + d[1] * d[1]);
    let foot = [a[0] + s * d[0], a[1] + s * d[1]];
    vec![2.0 * foot[0] - p[0], 2.0 * foot[1] - p[1]]
}

pub fn reflect_across_plane(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    let (u, v) = ([b[0] - a[0], b[1] - a[1], b[2] - a[2]], [c[0] - a[0], c[1] - a[1], c[2] - a[2]]);
    let nrm = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let len2: f64 = nrm.iter().map(|x| x * x).sum();
    let s: f64 = (0..3).map(|i| (p[i] - a[i]) * nrm[i]).sum::<f64>() / len2;
    (0..3).map(|i| p[i] - 2.0 * s * nrm[i]).collect()
}

pub fn affine_gradient(x: &[Vec<f64>], u: &[Vec<f64>]) -> DMatrix<f64> {
    let n = x[0].len();
    let dx = DMatrix::from_fn(n, n, |r, c| x[c + 1][r] - x[0][r]);
    let du = DMatrix::from_fn(n, n, |r, c| u[c + 1][r] - u[0][r]);
    du * dx.try_inverse().unwrap()
}

/// Smallest two-simplex energy over sampled piecewise-affine maps with
/// gradient within `tau` of I on T and within `tau` of the mirror across the
/// shared facet on S.
pub fn near_isometric_minimum(n: usize, tau: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lowest = f64::INFINITY;
    {
        let h = StructureMatrix::identity(n);
        for pair in simplex_pairs(n).unwrap() {
            let r = pair.reference(&h);
            let apex = if n == 2 {
                reflect_across(&r[n + 1], &r[1], &r[2])
            } else {
                reflect_across_plane(&r[n + 1], &r[1], &r[2], &r[3])
            };
            let s_ref: Vec<Vec<f64>> = std::iter::once(r[n + 1].clone()).chain(r[1..=n].iter().cloned()).collect();
            let s_img: Vec<Vec<f64>> = std::iter::once(apex.clone()).chain(r[1..=n].iter().cloned()).collect();
            let mirror = affine_gradient(&s_ref, &s_img);
            let mut accepted = 0;
            for _ in 0..100 * samples {
                if accepted == samples {
                    break;
                }
                let mut e = DMatrix::from_fn(n, n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
                e *= tau * rng.random::<f64>() / e.norm();
                let ft = DMatrix::identity(n, n) + e;
                let map = |m: &DMatrix<f64>, v: &[f64]| -> Vec<f64> { (m * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec() };
                let mut u: Vec<Vec<f64>> = r[..=n].iter().map(|v| map(&ft, v)).collect();
                let mut y = map(&ft, &apex);
                y.iter_mut().for_each(|c| *c += 0.5 * tau * (2.0 * rng.random::<f64>() - 1.0));
                u.push(y);
                let s_def: Vec<Vec<f64>> = std::iter::once(u[n + 1].clone()).chain(u[1..=n].iter().cloned()).collect();
                if (affine_gradient(&s_ref, &s_def) - &mirror).norm() > tau {
                    continue;
                }
                accepted += 1;
                let energy = pair_energy(&r, &u.concat(), 2.0, None);
                lowest = lowest.min(energy);
            }
            assert_eq!(accepted, samples);
        }
    }
    lowest
}

