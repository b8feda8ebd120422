use std::sync::Arc;

use rayon::prelude::*;

use super::{
    gamma_estimate, interpolate, solve_transition, wells_for, Competitor, GammaEstimate, SearchOptions,
    TransitionLattice, TransitionProblem, WellPair,
};
use crate::energy::{total_energy, EnergyModel};
use crate::error::{invalid, Result};
use crate::lattice::build_strip_lattice;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub k: usize,
    pub value: f64,
    pub per_k_n1: f64,
    pub per_k_n: f64,
    /// Energy of the rescaled thin-strip minimizer `k v(x / k)`, when computed.
    pub folding_bound: Option<f64>,
    pub m: usize,
    pub converged: bool,
    /// Pair attaining the value (the dislocated study minimizes over two pairs).
    pub pair: WellPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub n: usize,
    pub rows: Vec<ScalingRow>,
    /// γ estimate at k = 1 used for the folding construction.
    pub seed_value: Option<f64>,
}

/// Half-length of the k = 1 strip used to build folding competitors.
pub const SEED_HALF_LENGTH: usize = 4;

/// `x -> k v(x / k)` for the k = 1 minimizer `v`, extended by the clamp maps
/// outside its strip.
pub fn folding_competitor(seed: &GammaEstimate, k: usize) -> Competitor {
    let lattice = seed.lattice.clone();
    let u = seed.best.u.clone();
    let left = seed.left.clone();
    let right = seed.right.clone();
    let offset = seed.best.offsets.get(1).cloned().unwrap_or_else(|| vec![0.0; lattice.dim()]);
    let m1 = lattice.geometry.l as f64;
    let kf = k as f64;
    Arc::new(move |x: &[f64]| {
        let y: Vec<f64> = x.iter().map(|c| c / kf).collect();
        let xv = nalgebra::DVector::from_column_slice(x);
        if y[0] < -m1 {
            (&left * xv).iter().copied().collect()
        } else if y[0] > m1 {
            (&right * xv).iter().zip(&offset).map(|(a, b)| a + kf * b).collect()
        } else {
            interpolate(&lattice, &u, &y).into_iter().map(|c| kf * c).collect()
        }
    })
}

fn schedule(k: usize, clamp: usize) -> Vec<usize> {
    let mut s: Vec<usize> =
        [2 * k, SEED_HALF_LENGTH * k].into_iter().filter(|&m| m > clamp).collect();
    s.dedup();
    s
}

/// γ(P1, P2; k) for each k on strips of half-length up to 4k. With
/// `folding` set, the rescaled k = 1 minimizer is both reported and used as an
/// extra starting point, so every estimate is at most its folding bound.
pub fn scaling_study(
    pair: WellPair,
    k_list: &[usize],
    model: &EnergyModel,
    search: &SearchOptions,
    folding: bool,
) -> Result<ScalingStudy> {
    let n = model.h.dim();
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(invalid("k list must contain positive integers"));
    }
    let (p1, p2) = pair.matrices(n, model.lambda);
    let wells = wells_for(&p1, &p2, model.lambda)?;
    let model = model.clone().with_wells(wells);
    let seed = if folding {
        let s = SearchOptions { m_schedule: vec![SEED_HALF_LENGTH], ..search.clone() };
        Some(gamma_estimate(&p1, &p2, 1, &model, TransitionLattice::Strip, &s)?)
    } else {
        None
    };
    let h = model.h.matrix();
    let rows = k_list
        .par_iter()
        .map(|&k| {
            let competitors: Vec<Competitor> = seed.iter().map(|s| folding_competitor(s, k)).collect();
            let problem = TransitionProblem {
                left: &p1 * h,
                right: &p2 * h,
                k,
                m_schedule: schedule(k, 2),
                model: model.clone(),
                lattice: TransitionLattice::Strip,
                opts: search.opts.clone(),
                restarts: search.restarts,
                seed: search.seed,
                competitors: competitors.clone(),
            };
            let est = solve_transition(&problem)?;
            let folding_bound = match competitors.first() {
                Some(c) => {
                    let m = *problem.m_schedule.last().unwrap();
                    let lat = build_strip_lattice(n, k, m, model.lambda, &model.h)?;
                    let u: Vec<f64> = lat.nodes.iter().flat_map(|node| c(&node.x)).collect();
                    Some(total_energy(&lat, &u, &model))
                }
                None => None,
            };
            let kf = k as f64;
            Ok(ScalingRow {
                k,
                value: est.value,
                per_k_n1: est.value / kf.powi(n as i32 - 1),
                per_k_n: est.value / kf.powi(n as i32),
                folding_bound,
                m: est.points.last().unwrap().m,
                converged: est.best.converged,
                pair,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingStudy { n, rows, seed_value: seed.map(|s| s.value) })
}

/// min{γ(I, λI), γ(I, λJ)} on the dislocated lattice for each k.
pub fn dislocated_scaling(rho: f64, k_list: &[usize], model: &EnergyModel, search: &SearchOptions) -> Result<ScalingStudy> {
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(invalid("k list must contain positive integers"));
    }
    let rows = k_list
        .par_iter()
        .map(|&k| {
            let s = SearchOptions { m_schedule: vec![k.max(4), (2 * k).max(8)], ..search.clone() };
            let mut best: Option<(WellPair, GammaEstimate)> = None;
            for pair in [WellPair::ILamI, WellPair::ILamJ] {
                let (p1, p2) = pair.matrices(2, model.lambda);
                let est = gamma_estimate(&p1, &p2, k, model, TransitionLattice::Dislocated { rho }, &s)?;
                if best.as_ref().is_none_or(|(_, b)| est.value < b.value) {
                    best = Some((pair, est));
                }
            }
            let (pair, est) = best.unwrap();
            let kf = k as f64;
            Ok(ScalingRow {
                k,
                value: est.value,
                per_k_n1: est.value / kf,
                per_k_n: est.value / (kf * kf),
                folding_bound: None,
                m: est.points.last().unwrap().m,
                converged: est.best.converged,
                pair,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingStudy { n: 2, rows, seed_value: None })
}
