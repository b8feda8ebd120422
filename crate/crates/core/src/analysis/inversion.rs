use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::lattice::{kuhn_simplices, StructureMatrix};
use crate::optimize::{lbfgs, LbfgsOptions};

/// Two Kuhn simplices `T = [x0, x1..xN]` and `S = [y0, x1..xN]` sharing a facet.
/// `vertices` is `[x0, x1, .., xN, y0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexPair {
    pub vertices: Vec<Vec<i64>>,
    pub same_cube: bool,
}

impl SimplexPair {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 2
    }

    /// Reference vertices mapped by H.
    pub fn reference(&self, h: &StructureMatrix) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| h.apply(&v.iter().map(|&c| c as f64).collect::<Vec<_>>())).collect()
    }

    fn t_ids(&self) -> Vec<usize> {
        (0..=self.dim()).collect()
    }

    fn s_ids(&self) -> Vec<usize> {
        let n = self.dim();
        std::iter::once(n + 1).chain(1..=n).collect()
    }
}

/// Every facet-sharing pair with `T` in the unit cube at the origin.
pub fn simplex_pairs(n: usize) -> Result<Vec<SimplexPair>> {
    if !(2..=3).contains(&n) {
        return Err(invalid("inversion cost is implemented for N = 2, 3"));
    }
    let kuhn = kuhn_simplices(n)?;
    let mut patch: Vec<(Vec<i64>, BTreeSet<Vec<i64>>)> = Vec::new();
    let shifts: Vec<Vec<i64>> = (0..3usize.pow(n as u32))
        .map(|mut c| {
            (0..n)
                .map(|_| {
                    let d = (c % 3) as i64 - 1;
                    c /= 3;
                    d
                })
                .collect()
        })
        .collect();
    for z in &shifts {
        for s in &kuhn {
            patch.push((z.clone(), s.translated(z).into_iter().collect()));
        }
    }
    let mut out = Vec::new();
    for s in &kuhn {
        let t: Vec<Vec<i64>> = s.vertices.clone();
        for drop in 0..=n {
            let facet: BTreeSet<Vec<i64>> = t.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, v)| v.clone()).collect();
            let own: BTreeSet<Vec<i64>> = t.iter().cloned().collect();
            let other = patch.iter().find(|(_, verts)| *verts != own && facet.is_subset(verts));
            if let Some((z, verts)) = other {
                let y0 = verts.difference(&facet).next().unwrap().clone();
                let mut vertices = vec![t[drop].clone()];
                vertices.extend(facet.iter().cloned());
                vertices.push(y0);
                out.push(SimplexPair { vertices, same_cube: z.iter().all(|&c| c == 0) });
            }
        }
    }
    Ok(out)
}

/// Sum over all vertex pairs of `| |u_i - u_j| - |H(x_i - x_j)| |^p`; writes the gradient when given.
pub fn pair_energy(reference: &[Vec<f64>], u: &[f64], p: f64, mut grad: Option<&mut [f64]>) -> f64 {
    let n = reference[0].len();
    let m = reference.len();
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut e = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let rest: f64 = reference[i].iter().zip(&reference[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let d: Vec<f64> = (0..n).map(|k| u[j * n + k] - u[i * n + k]).collect();
            let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let z = r - rest;
            e += z.abs().powf(p);
            if let Some(g) = grad.as_deref_mut() {
                if r > 0.0 && z != 0.0 {
                    let s = p * z.abs().powf(p - 1.0) * z.signum() / r;
                    for k in 0..n {
                        g[j * n + k] += s * d[k];
                        g[i * n + k] -= s * d[k];
                    }
                }
            }
        }
    }
    e
}

/// Signed volume ratio det ∇u on the simplex `ids` (first id is the apex).
fn simplex_det(reference: &[Vec<f64>], u: &[f64], ids: &[usize], grad: Option<&mut [f64]>) -> f64 {
    let n = reference[0].len();
    let a = ids[0];
    let du = DMatrix::from_fn(n, n, |r, c| u[ids[c + 1] * n + r] - u[a * n + r]);
    let dx = DMatrix::from_fn(n, n, |r, c| reference[ids[c + 1]][r] - reference[a][r]);
    let vol = dx.determinant();
    let det = du.determinant() / vol;
    if let Some(g) = grad {
        let cof = cofactors(&du);
        for c in 0..n {
            for r in 0..n {
                let v = cof[(r, c)] / vol;
                g[ids[c + 1] * n + r] += v;
                g[a * n + r] -= v;
            }
        }
    }
    det
}

fn cofactors(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    DMatrix::from_fn(n, n, |r, c| {
        let minor = m.clone().remove_row(r).remove_column(c);
        let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionOptions {
    pub restarts: usize,
    pub seed: u64,
    pub stages: usize,
    pub initial_weight: f64,
    pub growth: f64,
    /// A run is feasible when det(∇u|S) det(∇u|T) <= this.
    pub feasibility: f64,
    pub lbfgs: LbfgsOptions,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0,
            stages: 5,
            initial_weight: 1.0,
            growth: 10.0,
            feasibility: 1e-8,
            lbfgs: LbfgsOptions { tol: 1e-10, max_iters: 5000, ..LbfgsOptions::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionCost {
    pub value: f64,
    pub pair: SimplexPair,
    /// Deformed vertex positions, flattened in the order of `pair.vertices`.
    pub positions: Vec<f64>,
    pub det_product: f64,
    pub feasible_runs: usize,
    pub total_runs: usize,
}

fn det_product(reference: &[Vec<f64>], u: &[f64], pair: &SimplexPair) -> f64 {
    simplex_det(reference, u, &pair.t_ids(), None) * simplex_det(reference, u, &pair.s_ids(), None)
}

/// Minimize energy + w max(0, det_S det_T)^2 for a growing weight w.
fn penalty_descent(reference: &[Vec<f64>], pair: &SimplexPair, p: f64, u0: &[f64], opts: &InversionOptions, w0: f64) -> Vec<f64> {
    let (t_ids, s_ids) = (pair.t_ids(), pair.s_ids());
    let mut u = u0.to_vec();
    let mut w = w0;
    for _ in 0..opts.stages {
        let f = |x: &[f64], g: &mut [f64]| {
            let e = pair_energy(reference, x, p, Some(g));
            let mut gt = vec![0.0; x.len()];
            let mut gs = vec![0.0; x.len()];
            let dt = simplex_det(reference, x, &t_ids, Some(&mut gt));
            let ds = simplex_det(reference, x, &s_ids, Some(&mut gs));
            let q = dt * ds;
            if q > 0.0 {
                for i in 0..x.len() {
                    g[i] += 2.0 * w * q * (gt[i] * ds + gs[i] * dt);
                }
                e + w * q * q
            } else {
                e
            }
        };
        if let Ok(out) = lbfgs(&u, f, &opts.lbfgs) {
            u = out.x;
        }
        w *= opts.growth;
    }
    u
}

/// Move vertex `v` onto the affine hull of the images of `others`.
fn project_vertex(u: &mut [f64], n: usize, v: usize, others: &[usize]) {
    let base: Vec<f64> = u[others[0] * n..others[0] * n + n].to_vec();
    let edges: Vec<Vec<f64>> =
        others[1..].iter().map(|&o| (0..n).map(|k| u[o * n + k] - base[k]).collect()).collect();
    let normal: Vec<f64> = match n {
        2 => vec![-edges[0][1], edges[0][0]],
        _ => vec![
            edges[0][1] * edges[1][2] - edges[0][2] * edges[1][1],
            edges[0][2] * edges[1][0] - edges[0][0] * edges[1][2],
            edges[0][0] * edges[1][1] - edges[0][1] * edges[1][0],
        ],
    };
    let nn: f64 = normal.iter().map(|v| v * v).sum();
    if nn == 0.0 {
        for k in 0..n {
            u[v * n + k] = base[k];
        }
        return;
    }
    let t: f64 = (0..n).map(|k| (u[v * n + k] - base[k]) * normal[k]).sum::<f64>() / nn;
    for k in 0..n {
        u[v * n + k] -= t * normal[k];
    }
}

/// Lowest-energy point of {det_S = 0} ∪ {det_T = 0} reached by moving one apex.
fn restore(reference: &[Vec<f64>], pair: &SimplexPair, p: f64, u: &[f64]) -> Vec<f64> {
    let n = pair.dim();
    let facet: Vec<usize> = (1..=n).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for apex in [0, n + 1] {
        let mut v = u.to_vec();
        project_vertex(&mut v, n, apex, &facet);
        let e = pair_energy(reference, &v, p, None);
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, v));
        }
    }
    best.unwrap().1
}

fn initial_guesses(reference: &[Vec<f64>], pair: &SimplexPair, restarts: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = pair.dim();
    let flat: Vec<f64> = reference.iter().flatten().copied().collect();
    // T in place, S reflected across the shared facet.
    let mut folded = flat.clone();
    let facet: Vec<usize> = (1..=n).collect();
    let mut mirror = flat.clone();
    project_vertex(&mut mirror, n, n + 1, &facet);
    for k in 0..n {
        folded[(n + 1) * n + k] = 2.0 * mirror[(n + 1) * n + k] - flat[(n + 1) * n + k];
    }
    let mut out = vec![folded, flat.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..restarts.saturating_sub(2) {
        let amp = if i % 2 == 0 { 0.5 } else { 1.0 };
        out.push(flat.iter().map(|x| x + amp * (2.0 * rng.random::<f64>() - 1.0)).collect());
    }
    out.truncate(restarts.max(1));
    out
}

/// Minimal two-simplex energy over facet-sharing pairs with opposite orientations.
pub fn inversion_cost(h: &StructureMatrix, p: f64, opts: &InversionOptions) -> Result<InversionCost> {
    if !(p >= 1.0) {
        return Err(invalid("p must be at least 1"));
    }
    let pairs = simplex_pairs(h.dim())?;
    let runs: Vec<(usize, f64, Vec<f64>, f64)> = pairs
        .par_iter()
        .enumerate()
        .flat_map_iter(|(pi, pair)| {
            let reference = pair.reference(h);
            let seed = opts.seed.wrapping_mul(1_000_003).wrapping_add(pi as u64);
            initial_guesses(&reference, pair, opts.restarts, seed)
                .into_iter()
                .map(|u0| {
                    let mut u = penalty_descent(&reference, pair, p, &u0, opts, opts.initial_weight);
                    if det_product(&reference, &u, pair) > opts.feasibility {
                        // Refine once more from the constraint surface.
                        let v = restore(&reference, pair, p, &u);
                        let w = penalty_descent(&reference, pair, p, &v, opts, opts.initial_weight * opts.growth.powi(opts.stages as i32));
                        u = if det_product(&reference, &w, pair) <= opts.feasibility { w } else { restore(&reference, pair, p, &w) };
                        if pair_energy(&reference, &v, p, None) < pair_energy(&reference, &u, p, None) {
                            u = v;
                        }
                    }
                    let q = det_product(&reference, &u, pair);
                    (pi, pair_energy(&reference, &u, p, None), u, q)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let total_runs = runs.len();
    let feasible: Vec<&(usize, f64, Vec<f64>, f64)> = runs.iter().filter(|r| r.3 <= opts.feasibility).collect();
    let best = feasible
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| invalid("no run reached the opposite-orientation constraint"))?;
    Ok(InversionCost {
        value: best.1,
        pair: pairs[best.0].clone(),
        positions: best.2.clone(),
        det_product: best.3,
        feasible_runs: feasible.len(),
        total_runs,
    })
}
