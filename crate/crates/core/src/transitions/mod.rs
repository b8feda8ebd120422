//! Transition-cost estimates between wells and the reduced orientation functional.
//!
//! Every value produced here is the minimum found by a multi-start local
//! search, i.e. an upper-bound estimate of the corresponding infimum.

mod forces;
mod g2;
mod jfunc;
mod scaling;

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::energy::{EnergyModel, WellMode};
use crate::error::{invalid, Result};
use crate::lattice::{bond_sets, build_dislocated_lattice, build_strip_lattice, Lattice, LatticeKind, StructureMatrix};
use crate::optimize::{
    make_initializer, minimize_multistart, perturb, BoundaryCondition, ClampRegion, InitKind, MinimizeOptions,
    MinimizeResult, NodeSelector,
};

pub use forces::{forces_demo, ForcesDemo, ForcesSpec};
pub use g2::{g2_estimate, G2Row};
pub use jfunc::{j_eval, j_min, GammaValues, OrientationLabel, OrientationSet, ProfileInterval};
pub use scaling::{dislocated_scaling, folding_competitor, scaling_study, ScalingRow, ScalingStudy};

/// `diag(-1, 1, ..., 1)`.
pub fn reflection_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::identity(n, n);
    j[(0, 0)] = -1.0;
    j
}

/// The four well pairs of the reduced functional, plus the trivial pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WellPair {
    IJ,
    II,
    LamILamJ,
    ILamI,
    ILamJ,
}

impl WellPair {
    pub const TABLE: [WellPair; 4] = [WellPair::IJ, WellPair::LamILamJ, WellPair::ILamI, WellPair::ILamJ];

    pub fn label(self) -> &'static str {
        match self {
            WellPair::IJ => "I-J",
            WellPair::II => "I-I",
            WellPair::LamILamJ => "lamI-lamJ",
            WellPair::ILamI => "I-lamI",
            WellPair::ILamJ => "I-lamJ",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [WellPair::IJ, WellPair::II, WellPair::LamILamJ, WellPair::ILamI, WellPair::ILamJ]
            .into_iter()
            .find(|p| p.label() == s)
    }

    /// `(P1, P2)` with the mismatch factor already applied.
    pub fn matrices(self, n: usize, lambda: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let id = DMatrix::identity(n, n);
        let j = reflection_j(n);
        match self {
            WellPair::IJ => (id, j),
            WellPair::II => (id.clone(), id),
            WellPair::LamILamJ => (id * lambda, j * lambda),
            WellPair::ILamI => (id.clone(), id * lambda),
            WellPair::ILamJ => (id, j * lambda),
        }
    }
}

/// Scale `s` with `P ∈ s O(N)`, if any.
pub(crate) fn conformal_scale(p: &DMatrix<f64>) -> Option<f64> {
    let n = p.nrows();
    let s = p.determinant().abs().powf(1.0 / n as f64);
    let ptp = p.transpose() * p;
    ((ptp - DMatrix::identity(n, n) * (s * s)).norm() <= 1e-9 * (1.0 + s * s)).then_some(s)
}

/// Energy variant matching the pair `(P1, P2)`.
pub fn wells_for(p1: &DMatrix<f64>, p2: &DMatrix<f64>, lambda: f64) -> Result<WellMode> {
    let s1 = conformal_scale(p1).ok_or_else(|| invalid("P1 is not a multiple of an orthogonal matrix"))?;
    let s2 = conformal_scale(p2).ok_or_else(|| invalid("P2 is not a multiple of an orthogonal matrix"))?;
    let is = |s: f64, t: f64| (s - t).abs() <= 1e-9;
    if is(s1, 1.0) && is(s2, 1.0) {
        Ok(WellMode::Reference)
    } else if is(s1, lambda) && is(s2, lambda) {
        Ok(WellMode::Mismatched)
    } else if is(s1, 1.0) && is(s2, lambda) {
        Ok(WellMode::Heterogeneous)
    } else {
        Err(invalid("well pair does not match any of the reference/mismatched combinations"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransitionLattice {
    Strip,
    Dislocated { rho: f64 },
}

/// Explicit competitor evaluated at a node's reference position.
pub type Competitor = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Transition between `left x` (x_1 << 0) and `right x + b` (x_1 >> 0) on a
/// strip of half-length M, for each M of the schedule.
#[derive(Clone)]
pub struct TransitionProblem {
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
    pub k: usize,
    pub m_schedule: Vec<usize>,
    pub model: EnergyModel,
    pub lattice: TransitionLattice,
    pub opts: MinimizeOptions,
    /// Number of randomly perturbed starts added to the deterministic ones.
    pub restarts: usize,
    pub seed: u64,
    /// Competitors tried at the last M of the schedule.
    pub competitors: Vec<Competitor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaPoint {
    pub m: usize,
    pub value: f64,
    pub converged: bool,
    pub restarts: usize,
    pub best_start: usize,
}

#[derive(Debug, Clone)]
pub struct GammaEstimate {
    pub points: Vec<GammaPoint>,
    /// Estimate at the last M (an upper bound for the infimum).
    pub value: f64,
    /// Relative change between the last two M below the threshold.
    pub stabilized: bool,
    pub best: MinimizeResult,
    pub lattice: Lattice,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

pub const STABILIZATION_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_M_SCHEDULE: [usize; 3] = [4, 8, 16];
pub const PERTURBATION_AMPLITUDE: f64 = 0.1;

impl TransitionProblem {
    fn build_lattice(&self, m: usize) -> Result<Lattice> {
        let h = &self.model.h;
        match self.lattice {
            TransitionLattice::Strip => build_strip_lattice(h.dim(), self.k, m, self.model.lambda, h),
            TransitionLattice::Dislocated { rho } => build_dislocated_lattice(rho, self.k, m, self.model.lambda),
        }
    }

    fn clamp_width(&self) -> f64 {
        bond_sets(self.model.h.dim()).map(|b| b.axial_reach() as f64).unwrap_or(2.0)
    }

    pub fn boundary_condition(&self, m: usize) -> BoundaryCondition {
        let w = self.clamp_width();
        let n = self.left.nrows();
        let m = m as f64;
        BoundaryCondition::new(vec![
            ClampRegion { selector: NodeSelector::X1Below(-m + w - 1e-9), a: self.left.clone(), b: vec![0.0; n], free_offset: false },
            ClampRegion { selector: NodeSelector::X1Above(m - w + 1e-9), a: self.right.clone(), b: vec![0.0; n], free_offset: true },
        ])
    }
}

/// Prolong a configuration to a longer strip using the clamp maps outside the old domain.
fn extend(old_lattice: &Lattice, old: &MinimizeResult, new_lattice: &Lattice, left: &DMatrix<f64>, right: &DMatrix<f64>) -> Vec<f64> {
    let n = new_lattice.dim();
    let offset = old.offsets.get(1).cloned().unwrap_or_else(|| vec![0.0; n]);
    let mut u = Vec::with_capacity(new_lattice.len() * n);
    for node in &new_lattice.nodes {
        match old_lattice.node_in(node.species, &node.cell) {
            Some(i) => u.extend_from_slice(&old.u[i * n..(i + 1) * n]),
            None => {
                let x = nalgebra::DVector::from_column_slice(&node.x);
                if node.x[0] < 0.0 {
                    u.extend((left * x).iter());
                } else {
                    u.extend((right * x).iter().zip(&offset).map(|(a, b)| a + b));
                }
            }
        }
    }
    u
}

pub fn solve_transition(problem: &TransitionProblem) -> Result<GammaEstimate> {
    if problem.m_schedule.is_empty() {
        return Err(invalid("M schedule must not be empty"));
    }
    if problem.m_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("M schedule must be strictly increasing"));
    }
    let n = problem.model.h.dim();
    if problem.left.nrows() != n || problem.right.nrows() != n {
        return Err(invalid("transition maps have wrong dimension"));
    }
    let width = 2.0 * problem.k as f64;
    let mut points = Vec::new();
    let mut prev: Option<(Lattice, MinimizeResult)> = None;
    let last = *problem.m_schedule.last().unwrap();
    for &m in &problem.m_schedule {
        if (m as f64) <= problem.clamp_width() {
            return Err(invalid(format!("M = {m} leaves no free nodes")));
        }
        let lattice = problem.build_lattice(m)?;
        let bc = problem.boundary_condition(m);
        let (l, r) = (&problem.left, &problem.right);
        let bases = [InitKind::Sharp, InitKind::LinearBlend, InitKind::Folded];
        let mut inits: Vec<Vec<f64>> = bases.iter().map(|&b| make_initializer(&lattice, b, l, r, width, 0)).collect();
        for i in 0..problem.restarts {
            let mut u = inits[i % bases.len()].clone();
            perturb(&mut u, PERTURBATION_AMPLITUDE, problem.seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            inits.push(u);
        }
        if let Some((pl, pr)) = &prev {
            inits.push(extend(pl, pr, &lattice, l, r));
        }
        if m == last {
            for c in &problem.competitors {
                inits.push(lattice.nodes.iter().flat_map(|node| c(&node.x)).collect());
            }
        }
        let ms = minimize_multistart(&lattice, &problem.model, &bc, &inits, &problem.opts)?;
        points.push(GammaPoint {
            m,
            value: ms.best.energy,
            converged: ms.best.converged,
            restarts: inits.len(),
            best_start: ms.best_index,
        });
        prev = Some((lattice, ms.best));
    }
    let (lattice, best) = prev.unwrap();
    let value = best.energy;
    let stabilized = match points.len() {
        1 => false,
        len => {
            let a = points[len - 2].value;
            (a - value).abs() <= STABILIZATION_THRESHOLD * a.abs().max(1e-12)
        }
    };
    Ok(GammaEstimate { points, value, stabilized, best, lattice, left: problem.left.clone(), right: problem.right.clone() })
}

/// Options shared by the transition estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub m_schedule: Vec<usize>,
    pub opts: MinimizeOptions,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { m_schedule: DEFAULT_M_SCHEDULE.to_vec(), opts: MinimizeOptions::default(), restarts: 3, seed: 0 }
    }
}

/// γ(P1, P2; k): P2 carries its mismatch factor; the energy variant follows from the pair.
pub fn gamma_estimate(
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
    k: usize,
    model: &EnergyModel,
    lattice: TransitionLattice,
    search: &SearchOptions,
) -> Result<GammaEstimate> {
    let wells = wells_for(p1, p2, model.lambda)?;
    let h = model.h.matrix();
    let rho = match lattice {
        TransitionLattice::Strip => 1.0,
        TransitionLattice::Dislocated { rho } => {
            if wells != WellMode::Heterogeneous && model.lambda != 1.0 {
                return Err(invalid("the dislocated lattice carries the heterogeneous energy only"));
            }
            if model.h != StructureMatrix::hexagonal() {
                return Err(invalid("the dislocated lattice uses the hexagonal structure matrix"));
            }
            rho
        }
    };
    let problem = TransitionProblem {
        left: p1 * h,
        right: p2 * h / rho,
        k,
        m_schedule: search.m_schedule.clone(),
        model: model.clone().with_wells(wells),
        lattice,
        opts: search.opts.clone(),
        restarts: search.restarts,
        seed: search.seed,
        competitors: Vec::new(),
    };
    solve_transition(&problem)
}

#[derive(Debug, Clone)]
pub struct GammaTable {
    pub k: usize,
    pub rows: Vec<(WellPair, GammaEstimate)>,
}

impl GammaTable {
    pub fn get(&self, pair: WellPair) -> Option<&GammaEstimate> {
        self.rows.iter().find(|(p, _)| *p == pair).map(|(_, e)| e)
    }

    pub fn values(&self) -> Result<GammaValues> {
        let v = |p| self.get(p).map(|e| e.value).ok_or_else(|| invalid("incomplete gamma table"));
        Ok(GammaValues {
            ij: v(WellPair::IJ)?,
            lam_ij: v(WellPair::LamILamJ)?,
            i_lam_i: v(WellPair::ILamI)?,
            i_lam_j: v(WellPair::ILamJ)?,
        })
    }

    /// Which of the two interface transitions is cheaper.
    pub fn interface_winner(&self) -> Option<WellPair> {
        let a = self.get(WellPair::ILamI)?.value;
        let b = self.get(WellPair::ILamJ)?.value;
        Some(if a <= b { WellPair::ILamI } else { WellPair::ILamJ })
    }
}

/// The four transition costs on the strip of thickness k.
pub fn gamma_table(k: usize, model: &EnergyModel, search: &SearchOptions) -> Result<GammaTable> {
    let n = model.h.dim();
    let rows = WellPair::TABLE
        .par_iter()
        .map(|&pair| {
            let (p1, p2) = pair.matrices(n, model.lambda);
            gamma_estimate(&p1, &p2, k, model, TransitionLattice::Strip, search).map(|e| (pair, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaTable { k, rows })
}

/// Cost of moving from `left x` to `right x` on a homogeneous strip, counting
/// only bonds that touch a free node. Vanishes when both maps are in the well.
pub fn boundary_gamma(
    left: &DMatrix<f64>,
    right: &DMatrix<f64>,
    k: usize,
    model: &EnergyModel,
    search: &SearchOptions,
) -> Result<GammaEstimate> {
    let problem = TransitionProblem {
        left: left.clone(),
        right: right.clone(),
        k,
        m_schedule: search.m_schedule.clone(),
        model: model.clone().with_wells(WellMode::Reference),
        lattice: TransitionLattice::Strip,
        opts: search.opts.clone(),
        restarts: search.restarts,
        seed: search.seed,
        competitors: Vec::new(),
    };
    solve_transition(&problem)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierRow {
    pub amplitude: f64,
    /// dist(B, SO(N)H).
    pub distance: f64,
    /// Transition from `Hx` to `Bx`.
    pub entering: f64,
    /// Transition from `Bx` to `Hx`.
    pub leaving: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldingBarrier {
    pub rows: Vec<BarrierRow>,
    pub gamma_ij: f64,
}

/// Boundary transition costs for `B = H + a S`, `S` a seeded random symmetric
/// matrix of unit norm, next to γ(I, J; k).
pub fn folding_barrier(
    amplitudes: &[f64],
    k: usize,
    model: &EnergyModel,
    search: &SearchOptions,
    seed: u64,
) -> Result<FoldingBarrier> {
    use rand::{Rng, SeedableRng};
    let n = model.h.dim();
    let h = model.h.matrix();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let sym = &a + a.transpose();
    let sym = &sym / sym.norm();
    let (id, j) = WellPair::IJ.matrices(n, 1.0);
    let gamma_ij = gamma_estimate(&id, &j, k, model, TransitionLattice::Strip, search)?.value;
    let rows = amplitudes
        .par_iter()
        .map(|&amp| {
            let b = h + &sym * amp;
            if b.determinant() <= 0.0 {
                return Err(invalid("boundary matrix must have positive determinant"));
            }
            let distance = crate::analysis::polar_project(&b, &model.h, 1.0).distance;
            let entering = boundary_gamma(h, &b, k, model, search)?.value;
            let leaving = boundary_gamma(&b, h, k, model, search)?.value;
            Ok(BarrierRow { amplitude: amp, distance, entering, leaving })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldingBarrier { rows, gamma_ij })
}

/// Piecewise-affine interpolation of a strip configuration at an arbitrary point,
/// using the Kuhn simplex containing it. Points outside the strip use the
/// nearest boundary cell's affine extension.
pub fn interpolate(lattice: &Lattice, u: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(lattice.geometry.kind, LatticeKind::Strip);
    let n = lattice.dim();
    let g = &lattice.geometry;
    let hi: Vec<i64> = (0..n).map(|i| if i == 0 { g.l } else { g.k as i64 }).collect();
    let mut z = vec![0i64; n];
    let mut f = vec![0.0; n];
    for i in 0..n {
        let c = (y[i].floor() as i64).clamp(-hi[i], hi[i] - 1);
        z[i] = c;
        f[i] = y[i] - c as f64;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[b].partial_cmp(&f[a]).unwrap().then(a.cmp(&b)));
    let mut out = vec![0.0; n];
    let mut vertex = z.clone();
    let mut weight_prev = 1.0;
    let idx = lattice.node_at(&vertex).expect("interpolation cell inside strip");
    let mut contrib: Vec<(usize, f64)> = vec![(idx, 0.0)];
    for (step, &axis) in order.iter().enumerate() {
        let w = weight_prev - f[axis];
        contrib[step].1 = w;
        weight_prev = f[axis];
        vertex[axis] += 1;
        contrib.push((lattice.node_at(&vertex).expect("interpolation cell inside strip"), 0.0));
    }
    contrib.last_mut().unwrap().1 = weight_prev;
    for (node, w) in contrib {
        for k in 0..n {
            out[k] += w * u[node * n + k];
        }
    }
    out
}
