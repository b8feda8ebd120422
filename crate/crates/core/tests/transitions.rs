mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirelattice::analysis::orientation_profile;
use wirelattice::energy::{EnergyModel, WellMode};
use wirelattice::lattice::StructureMatrix;
use wirelattice::transitions::*;

const L: f64 = 10.0;

fn table(seed: u64) -> GammaValues {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = || 0.05 + rng.random::<f64>();
    GammaValues { ij: r(), lam_ij: r(), i_lam_i: r(), i_lam_j: r() }
}

fn random_profile(rng: &mut ChaCha8Rng) -> Vec<ProfileInterval> {
    let count = rng.random_range(1..=5);
    let mut cuts: Vec<f64> = (1..count)
        .map(|_| if rng.random_bool(0.25) { 0.0 } else { (rng.random_range(-9..=9)) as f64 + 0.5 })
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pts = vec![-L];
    pts.extend(cuts);
    pts.push(L);
    let labels = [OrientationLabel::Rot, OrientationLabel::Refl, OrientationLabel::Either];
    pts.windows(2)
        .map(|w| ProfileInterval { start: w[0], end: w[1], label: labels[rng.random_range(0..3)] })
        .collect()
}

fn compatible(set: &OrientationSet, profile: &[ProfileInterval]) -> bool {
    let inside = |x: f64| set.intervals.iter().any(|&(a, b)| a < x && x < b);
    profile.iter().all(|p| {
        let samples = (1..10).map(|i| p.start + (p.end - p.start) * i as f64 / 10.0);
        match p.label {
            OrientationLabel::Rot => samples.clone().all(|x| x == 0.0 || inside(x)),
            OrientationLabel::Refl => samples.clone().all(|x| !inside(x)),
            OrientationLabel::Either => true,
        }
    })
}

#[test]
fn j_eval_reference_cases() {
    let g = table(1);
    let whole = OrientationSet::new(L, vec![(-L, L)]).unwrap();
    assert_eq!(j_eval(&whole, &g), g.i_lam_i);
    let left = OrientationSet::new(L, vec![(-L, 0.0)]).unwrap();
    assert_eq!(j_eval(&left, &g), g.i_lam_j);
    let two = OrientationSet::new(L, vec![(-L, -3.0), (4.0, L)]).unwrap();
    assert!((j_eval(&two, &g) - (g.ij + g.lam_ij + g.i_lam_i)).abs() < 1e-15);
    assert!(OrientationSet::new(L, vec![(1.0, 2.0), (0.0, 3.0)]).is_err());
}

#[test]
fn j_min_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for t in 0..3 {
        let g = table(100 + t);
        for _ in 0..400 {
            let profile = random_profile(&mut rng);
            let (v, set) = j_min(&profile, &g).unwrap();
            let expected = common::j_brute_force(L, &profile, &g);
            assert!((v - expected).abs() < 1e-12, "{profile:?}: {v} vs {expected}");
            assert!((j_eval(&set, &g) - v).abs() < 1e-12);
            assert!(compatible(&set, &profile), "{profile:?} -> {set:?}");
        }
    }
}

#[test]
fn j_min_non_unique_example() {
    let (a1, a2) = (-6.0, -2.0);
    let profile = [
        ProfileInterval { start: -L, end: a1, label: OrientationLabel::Refl },
        ProfileInterval { start: a1, end: a2, label: OrientationLabel::Either },
        ProfileInterval { start: a2, end: 0.0, label: OrientationLabel::Rot },
        ProfileInterval { start: 0.0, end: L, label: OrientationLabel::Rot },
    ];
    let g = GammaValues { ij: 1.0, lam_ij: 0.5, i_lam_i: 0.2, i_lam_j: 0.9 };
    let (v, set) = j_min(&profile, &g).unwrap();
    assert!((v - (g.ij + g.i_lam_i)).abs() < 1e-12);
    assert_eq!(set.intervals.len(), 1);
    let (a, b) = set.intervals[0];
    assert!((a1..=a2).contains(&a) && b == L);
    for a in [a1, -4.0, a2] {
        let u = OrientationSet::new(L, vec![(a, L)]).unwrap();
        assert!((j_eval(&u, &g) - v).abs() < 1e-12);
    }
}

fn quick() -> SearchOptions {
    SearchOptions { m_schedule: vec![4, 8], restarts: 2, ..SearchOptions::default() }
}

#[test]
fn equal_wells_cost_nothing() {
    let model = EnergyModel::standard(1.0, StructureMatrix::identity(2)).unwrap();
    let id = DMatrix::identity(2, 2);
    let e = gamma_estimate(&id, &id, 1, &model, TransitionLattice::Strip, &quick()).unwrap();
    assert!(e.value <= 1e-10, "{}", e.value);
}

#[test]
fn unit_lambda_collapses_table() {
    let model = EnergyModel::standard(1.0, StructureMatrix::identity(2)).unwrap();
    let t = gamma_table(1, &model, &quick()).unwrap().values().unwrap();
    assert!(t.i_lam_i <= 1e-10);
    assert!((t.i_lam_j - t.ij).abs() <= 1e-6 * t.ij);
    assert!(t.ij > 0.1);
}

#[test]
fn lambda_power_law() {
    let model = EnergyModel::standard(0.7, StructureMatrix::identity(2)).unwrap();
    let t = gamma_table(1, &model, &quick()).unwrap().values().unwrap();
    assert!((t.lam_ij / t.ij - 0.49).abs() <= 0.05 * 0.49);
}

fn random_rotation(rng: &mut ChaCha8Rng, reflect: bool) -> DMatrix<f64> {
    let th = std::f64::consts::TAU * rng.random::<f64>();
    let (c, s) = (th.cos(), th.sin());
    if reflect {
        DMatrix::from_row_slice(2, 2, &[c, s, s, -c])
    } else {
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }
}

#[test]
fn rigidly_rotated_pair_keeps_the_cost() {
    let model = EnergyModel::standard(1.0, StructureMatrix::identity(2)).unwrap();
    let (i, j) = WellPair::IJ.matrices(2, 1.0);
    let s = quick();
    let base = gamma_estimate(&i, &j, 1, &model, TransitionLattice::Strip, &s).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let r = random_rotation(&mut rng, false);
    let q = &r * &j;
    assert_eq!(wells_for(&r, &q, 1.0).unwrap(), WellMode::Reference);
    let rotated = gamma_estimate(&r, &q, 1, &model, TransitionLattice::Strip, &s).unwrap().value;
    assert!((rotated - base).abs() < 1e-3 * base, "{rotated} vs {base}");
}

/// A generic reflection pair differs from (I, J) by a rotation that has to be
/// bent in along the strip; the excess decays with the strip length.
#[test]
fn generic_pair_approaches_the_reference_cost() {
    let model = EnergyModel::standard(1.0, StructureMatrix::identity(2)).unwrap();
    let (i, j) = WellPair::IJ.matrices(2, 1.0);
    let s = SearchOptions { m_schedule: vec![8, 16, 32], restarts: 1, ..SearchOptions::default() };
    let base = gamma_estimate(&i, &j, 1, &model, TransitionLattice::Strip, &s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let r = random_rotation(&mut rng, false);
    let q = random_rotation(&mut rng, true);
    let e = gamma_estimate(&r, &q, 1, &model, TransitionLattice::Strip, &s).unwrap();
    let gaps: Vec<f64> = e.points.iter().zip(&base.points).map(|(a, b)| a.value - b.value).collect();
    assert!(gaps.iter().all(|&g| g > -1e-6), "{gaps:?}");
    assert!(gaps[2] < 0.6 * gaps[0], "{gaps:?}");
}

#[test]
fn inversion_minimizer_switches_orientation_once() {
    let h = StructureMatrix::identity(2);
    let model = EnergyModel::standard(1.0, h).unwrap();
    let (i, j) = WellPair::IJ.matrices(2, 1.0);
    let e = gamma_estimate(&i, &j, 1, &model, TransitionLattice::Strip, &quick()).unwrap();
    let profile = orientation_profile(&e.lattice, &e.best.u, &model.clone().with_wells(WellMode::Reference)).unwrap();
    assert_eq!(profile.label_changes(), 1, "{:?}", profile.intervals());
}

#[test]
fn folding_bound_dominates_estimate() {
    let model = EnergyModel::standard(0.7, StructureMatrix::identity(2)).unwrap();
    let study = scaling_study(WellPair::ILamI, &[2], &model, &quick(), true).unwrap();
    let row = &study.rows[0];
    assert!(row.value <= row.folding_bound.unwrap() + 1e-6);
    assert!(row.value > 0.0);
}

#[test]
fn barrier_vanishes_near_the_well() {
    let model = EnergyModel::standard(1.0, StructureMatrix::identity(2)).unwrap();
    let b = folding_barrier(&[0.1, 0.05, 0.02], 1, &model, &quick(), 4).unwrap();
    for w in b.rows.windows(2) {
        assert!(w[1].entering < w[0].entering && w[1].leaving < w[0].leaving);
    }
    let last = b.rows.last().unwrap();
    assert!(last.entering + last.leaving < 0.01 * b.gamma_ij);
}
