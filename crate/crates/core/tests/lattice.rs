mod common;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirelattice::energy::{total_energy, EnergyModel};
use wirelattice::lattice::*;

fn count_near(lengths: &[f64], target: f64) -> usize {
    lengths.iter().filter(|&&l| (l - target).abs() < 1e-12).count()
}

#[test]
fn kuhn_simplex_counts() {
    assert_eq!(kuhn_simplices(2).unwrap().len(), 2);
    assert_eq!(kuhn_simplices(3).unwrap().len(), 6);
    assert_eq!(kuhn_simplices(4).unwrap().len(), 24);
}

#[test]
fn bond_sets_match_brute_force() {
    for n in 2..=3 {
        let b = bond_sets(n).unwrap();
        let b1: BTreeSet<Vec<i64>> = b.b1.iter().cloned().collect();
        let b2: BTreeSet<Vec<i64>> = b.b2.iter().cloned().collect();
        assert_eq!(b1, common::nonzero_01(n));
        let expected: BTreeSet<Vec<i64>> = common::b2_brute(n).difference(&b1).cloned().collect();
        assert_eq!(b2, expected, "N = {n}");
    }
    let b2: BTreeSet<Vec<i64>> = bond_sets(2).unwrap().b2.into_iter().collect();
    let listed: BTreeSet<Vec<i64>> =
        [[1, -1], [-1, 1], [2, 1], [-2, -1], [1, 2], [-1, -2]].iter().map(|v| v.to_vec()).collect();
    assert_eq!(b2, listed);
    assert_eq!(bond_sets(3).unwrap().b2.len(), 12);
}

#[test]
fn structure_matrices_from_generators() {
    let s = 3f64.sqrt() / 2.0;
    let hex = common::from_generators(&[&[1.0, 0.0], &[0.5, s]]);
    let fcc = common::from_generators(&[&[0.0, 0.5, 0.5], &[0.5, 0.0, 0.5], &[0.5, 0.5, 0.0]]);
    assert!((StructureMatrix::hexagonal().matrix() - hex).norm() < 1e-15);
    assert!((StructureMatrix::fcc().matrix() - fcc).norm() < 1e-15);
    // The body-centred matrix is checked through its image: every column is a
    // half-integer vector with entries of modulus 1/2 and the cell volume is 1/2.
    let bcc = StructureMatrix::bcc();
    assert!(bcc.matrix().iter().all(|c| (c.abs() - 0.5).abs() < 1e-15));
    assert!((bcc.matrix().determinant().abs() - 0.5).abs() < 1e-15);
}

#[test]
fn bond_length_statistics() {
    let (b1, b2) = bond_sets(2).unwrap().length_stats(&StructureMatrix::hexagonal());
    assert_eq!((b1.len(), count_near(&b1, 1.0)), (6, 6));
    assert_eq!((b2.len(), count_near(&b2, 3f64.sqrt())), (6, 6));

    let (b1, b2) = bond_sets(3).unwrap().length_stats(&StructureMatrix::fcc());
    assert_eq!(count_near(&b1, 2f64.sqrt() / 2.0), 12);
    assert_eq!(count_near(&b1, 1.0), 2);
    assert_eq!(count_near(&b2, 1.0), 4);

    let (b1, b2) = bond_sets(3).unwrap().length_stats(&StructureMatrix::bcc());
    assert_eq!(count_near(&b1, 3f64.sqrt() / 2.0), 8);
    assert_eq!(count_near(&b1, 1.0), 6);
    assert_eq!(b2.len(), 12);
}

#[test]
fn small_strip_counts() {
    let lat = build_strip_lattice(2, 1, 1, 1.0, &StructureMatrix::identity(2)).unwrap();
    assert_eq!(lat.len(), 9);
    let offsets: BTreeSet<Vec<i64>> = bond_sets(2).unwrap().all().cloned().collect();
    let mut brute = 0;
    for a in &lat.nodes {
        for b in &lat.nodes {
            let d: Vec<i64> = a.cell.iter().zip(&b.cell).map(|(p, q)| p - q).collect();
            if offsets.contains(&d) {
                brute += 1;
            }
        }
    }
    assert_eq!(lat.bonds.len(), brute / 2);
}

#[test]
fn strip_invariants() {
    let lat = build_strip_lattice(3, 2, 3, 0.8, &StructureMatrix::fcc()).unwrap();
    let mut seen = BTreeSet::new();
    for b in &lat.bonds {
        assert!(b.i < b.j && b.j < lat.len());
        assert!(seen.insert((b.i, b.j)), "duplicate bond");
    }
    for node in &lat.nodes {
        assert_eq!(node.species == Species::Minus, node.x[0] < 0.0);
    }
    for s in &lat.simplices {
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|&v| v < lat.len()));
    }
}

#[test]
fn box_boundary_layer() {
    let lat = build_box_lattice(2, &[5, 5], 1, &StructureMatrix::identity(2)).unwrap();
    assert_eq!(lat.boundary_layer.iter().filter(|&&b| b).count(), 16);
    assert!(build_box_lattice(2, &[3, 3], 2, &StructureMatrix::identity(2)).is_err());
}

#[test]
fn strip_degree_is_bounded() {
    let h = StructureMatrix::identity(2);
    let degs: Vec<usize> =
        [2, 4, 8].iter().map(|&k| *build_strip_lattice(2, k, 6, 1.0, &h).unwrap().degree().iter().max().unwrap()).collect();
    assert!(degs.iter().all(|&d| d == degs[0]));
    assert!(degs[0] <= 12);
}

#[test]
fn dislocated_lattice_shape() {
    let lat = build_dislocated_lattice(0.5, 2, 6, 1.0).unwrap();
    let left = lat.nodes.iter().filter(|n| n.species == Species::Minus && n.cell[0] == -1).count();
    let right = lat.nodes.iter().filter(|n| n.species == Species::Plus && n.cell[0] == 0).count();
    assert_eq!((left, right), (5, 9));
    for n in lat.nodes.iter().filter(|n| n.species == Species::Plus) {
        for (x, c) in n.x.iter().zip(&n.cell) {
            assert!((x - 0.5 * *c as f64).abs() < 1e-12);
        }
    }
    // k = 2 at rho = 0.7 carries no dislocation yet; from there on the degree is fixed.
    let degs: Vec<usize> = [2, 4, 8, 16]
        .iter()
        .map(|&k| *build_dislocated_lattice(0.7, k, 6, 0.7).unwrap().degree().iter().max().unwrap())
        .collect();
    assert!(degs.iter().all(|&d| d <= 14), "{degs:?}");
    assert!(degs[1..].iter().all(|&d| d == degs[1]), "{degs:?}");
}

#[test]
fn unit_rho_matches_strip() {
    let a = build_dislocated_lattice(1.0, 2, 5, 1.0).unwrap();
    let b = build_strip_lattice(2, 2, 5, 1.0, &StructureMatrix::hexagonal()).unwrap();
    let key = |l: &Lattice| -> BTreeSet<(Vec<i64>, Vec<i64>)> {
        l.bonds
            .iter()
            .map(|bd| {
                let (p, q) = (l.nodes[bd.i].cell.clone(), l.nodes[bd.j].cell.clone());
                if p < q { (p, q) } else { (q, p) }
            })
            .collect()
    };
    assert_eq!(a.len(), b.len());
    assert_eq!(key(&a), key(&b));
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
    let q = a.qr().q();
    if rng.random::<bool>() {
        let mut q = q;
        q.column_mut(0).neg_mut();
        q
    } else {
        q
    }
}

#[test]
fn rigid_motions_are_ground_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=3 {
        let hs = if n == 2 {
            vec![StructureMatrix::identity(2), StructureMatrix::hexagonal()]
        } else {
            vec![StructureMatrix::identity(3), StructureMatrix::fcc(), StructureMatrix::bcc()]
        };
        for h in hs {
            for k in 1..=4 {
                if n == 3 && k > 2 {
                    continue;
                }
                let lat = build_strip_lattice(n, k, 8, 1.0, &h).unwrap();
                let model = EnergyModel::standard(1.0, h.clone()).unwrap();
                let q = random_orthogonal(n, &mut rng);
                let b: Vec<f64> = (0..n).map(|_| 10.0 * rng.random::<f64>() - 5.0).collect();
                let u = lat.affine_positions(&(q * h.matrix()), &b);
                let e = total_energy(&lat, &u, &model);
                assert!(e <= 1e-12, "N={n} k={k} e={e}");
            }
        }
    }
}
