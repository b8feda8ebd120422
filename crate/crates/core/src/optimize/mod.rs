//! Clamped energy minimization on a lattice.
//!
//! Clamped nodes are removed from the optimization vector. A clamp region may
//! carry a free translation, in which case its offset joins the unknowns.

mod init;
mod lbfgs;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::energy::{energy_and_gradient_on, EnergyModel, LoadSpec};
use crate::error::{invalid, Result};
use crate::lattice::Lattice;

pub use init::{make_initializer, perturb, InitKind};
pub use lbfgs::{lbfgs, LbfgsOptions, LbfgsOutcome};

#[derive(Debug, Clone, PartialEq)]
pub enum NodeSelector {
    /// Nodes with x_1 < value.
    X1Below(f64),
    /// Nodes with x_1 > value.
    X1Above(f64),
    /// Flagged boundary layer of a box lattice.
    Layer,
    /// Boundary layer restricted to `<x, nu> >= 0` (or `< 0`).
    LayerSide { nu: Vec<f64>, nonnegative: bool },
    Nodes(Vec<usize>),
}

impl NodeSelector {
    fn contains(&self, lattice: &Lattice, i: usize) -> bool {
        let x = &lattice.nodes[i].x;
        match self {
            NodeSelector::X1Below(v) => x[0] < *v,
            NodeSelector::X1Above(v) => x[0] > *v,
            NodeSelector::Layer => lattice.boundary_layer[i],
            NodeSelector::LayerSide { nu, nonnegative } => {
                let s: f64 = x.iter().zip(nu).map(|(a, b)| a * b).sum();
                lattice.boundary_layer[i] && ((s >= 0.0) == *nonnegative)
            }
            NodeSelector::Nodes(ids) => ids.contains(&i),
        }
    }
}

/// Nodes selected by `selector` are held at `a x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampRegion {
    pub selector: NodeSelector,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    /// Let `b` vary as part of the minimization.
    pub free_offset: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryCondition {
    pub regions: Vec<ClampRegion>,
}

impl BoundaryCondition {
    pub fn new(regions: Vec<ClampRegion>) -> Self {
        Self { regions }
    }

    /// Region index for every node, rejecting overlapping regions.
    pub fn assignment(&self, lattice: &Lattice) -> Result<Vec<Option<usize>>> {
        let n = lattice.dim();
        for r in &self.regions {
            if r.a.nrows() != n || r.a.ncols() != n || r.b.len() != n {
                return Err(invalid("clamp map has wrong dimension"));
            }
        }
        let mut owner = vec![None; lattice.len()];
        for (i, slot) in owner.iter_mut().enumerate() {
            for (r, region) in self.regions.iter().enumerate() {
                if region.selector.contains(lattice, i) {
                    if slot.is_some() {
                        return Err(invalid(format!("node {i} lies in two clamp regions")));
                    }
                    *slot = Some(r);
                }
            }
        }
        Ok(owner)
    }

    /// Overwrite clamped nodes of `u` with their prescribed positions.
    pub fn apply(&self, lattice: &Lattice, u: &mut [f64]) -> Result<()> {
        let owner = self.assignment(lattice)?;
        let n = lattice.dim();
        for (i, o) in owner.iter().enumerate() {
            if let Some(r) = o {
                let y = affine(&self.regions[*r].a, &self.regions[*r].b, &lattice.nodes[i].x);
                u[i * n..(i + 1) * n].copy_from_slice(&y);
            }
        }
        Ok(())
    }
}

fn affine(a: &DMatrix<f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    let y = a * DVector::from_column_slice(x);
    y.iter().zip(b).map(|(p, q)| p + q).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub lbfgs: LbfgsOptions,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { lbfgs: LbfgsOptions::default() }
    }
}

impl MinimizeOptions {
    pub fn with(tol: f64, max_iters: usize) -> Self {
        Self { lbfgs: LbfgsOptions { tol, max_iters, ..LbfgsOptions::default() } }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub u: Vec<f64>,
    /// Energy over active bonds minus the load work, if any.
    pub energy: f64,
    pub gradient_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    pub history: Vec<f64>,
    /// Final offset `b` of every clamp region.
    pub offsets: Vec<Vec<f64>>,
}

/// Mapping between the reduced unknowns and full node positions.
struct Reduction<'a> {
    lattice: &'a Lattice,
    bc: &'a BoundaryCondition,
    owner: Vec<Option<usize>>,
    free: Vec<usize>,
    offset_slot: Vec<Option<usize>>,
    active: Vec<usize>,
    base: Vec<f64>,
}

impl<'a> Reduction<'a> {
    fn new(lattice: &'a Lattice, bc: &'a BoundaryCondition) -> Result<Self> {
        let owner = bc.assignment(lattice)?;
        let n = lattice.dim();
        let free: Vec<usize> = (0..lattice.len()).filter(|&i| owner[i].is_none()).collect();
        let mut next = free.len() * n;
        let offset_slot = bc
            .regions
            .iter()
            .map(|r| {
                r.free_offset.then(|| {
                    let s = next;
                    next += n;
                    s
                })
            })
            .collect();
        let active = (0..lattice.bonds.len())
            .filter(|&b| {
                let bond = &lattice.bonds[b];
                owner[bond.i].is_none() || owner[bond.i] != owner[bond.j]
            })
            .collect();
        let mut base = vec![0.0; lattice.len() * n];
        for (i, o) in owner.iter().enumerate() {
            if let Some(r) = o {
                let reg = &bc.regions[*r];
                let y = affine(&reg.a, &vec![0.0; n], &lattice.nodes[i].x);
                let b = if reg.free_offset { vec![0.0; n] } else { reg.b.clone() };
                for k in 0..n {
                    base[i * n + k] = y[k] + b[k];
                }
            }
        }
        Ok(Self { lattice, bc, owner, free, offset_slot, active, base })
    }

    fn len(&self) -> usize {
        self.free.len() * self.lattice.dim() + self.offset_slot.iter().flatten().count() * self.lattice.dim()
    }

    fn reduce(&self, u: &[f64]) -> Vec<f64> {
        let n = self.lattice.dim();
        let mut z = vec![0.0; self.len()];
        for (f, &i) in self.free.iter().enumerate() {
            z[f * n..(f + 1) * n].copy_from_slice(&u[i * n..(i + 1) * n]);
        }
        // Free offsets start at the mean misfit of the initial guess.
        for (r, slot) in self.offset_slot.iter().enumerate() {
            if let Some(s) = slot {
                let members: Vec<usize> = (0..self.lattice.len()).filter(|&i| self.owner[i] == Some(r)).collect();
                if members.is_empty() {
                    z[*s..*s + n].copy_from_slice(&self.bc.regions[r].b);
                    continue;
                }
                for &i in &members {
                    for k in 0..n {
                        z[s + k] += (u[i * n + k] - self.base[i * n + k]) / members.len() as f64;
                    }
                }
            }
        }
        z
    }

    fn expand(&self, z: &[f64], u: &mut [f64]) {
        let n = self.lattice.dim();
        u.copy_from_slice(&self.base);
        for (f, &i) in self.free.iter().enumerate() {
            u[i * n..(i + 1) * n].copy_from_slice(&z[f * n..(f + 1) * n]);
        }
        for (i, o) in self.owner.iter().enumerate() {
            if let Some(Some(s)) = o.map(|r| self.offset_slot[r]) {
                for k in 0..n {
                    u[i * n + k] += z[s + k];
                }
            }
        }
    }

    fn project_gradient(&self, g: &[f64], out: &mut [f64]) {
        let n = self.lattice.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (f, &i) in self.free.iter().enumerate() {
            out[f * n..(f + 1) * n].copy_from_slice(&g[i * n..(i + 1) * n]);
        }
        for (i, o) in self.owner.iter().enumerate() {
            if let Some(Some(s)) = o.map(|r| self.offset_slot[r]) {
                for k in 0..n {
                    out[s + k] += g[i * n + k];
                }
            }
        }
    }

    fn offsets(&self, z: &[f64]) -> Vec<Vec<f64>> {
        let n = self.lattice.dim();
        self.bc
            .regions
            .iter()
            .zip(&self.offset_slot)
            .map(|(r, s)| match s {
                Some(s) => z[*s..*s + n].to_vec(),
                None => r.b.clone(),
            })
            .collect()
    }
}

/// Minimize E(u) (minus the load work when `loads` is given) over the unclamped nodes.
///
/// Bonds whose endpoints lie in the same clamp region only move rigidly and
/// are left out of the objective.
pub fn minimize_with_loads(
    lattice: &Lattice,
    model: &EnergyModel,
    bc: &BoundaryCondition,
    init: &[f64],
    loads: Option<&LoadSpec>,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    if init.len() != lattice.len() * lattice.dim() {
        return Err(invalid("initial deformation has wrong length"));
    }
    let red = Reduction::new(lattice, bc)?;
    let load_grad = loads.map(|l| l.gradient(lattice)).transpose()?;
    let z0 = red.reduce(init);
    let mut u = vec![0.0; init.len()];
    let mut g_full = vec![0.0; init.len()];
    let objective = |z: &[f64], gz: &mut [f64]| -> f64 {
        red.expand(z, &mut u);
        let mut e = energy_and_gradient_on(lattice, &u, model, Some(&red.active), &mut g_full);
        if let Some(lg) = &load_grad {
            e -= lg.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
            g_full.iter_mut().zip(lg).for_each(|(g, l)| *g -= l);
        }
        red.project_gradient(&g_full, gz);
        e
    };
    let out = lbfgs(&z0, objective, &opts.lbfgs)?;
    let mut u_final = vec![0.0; init.len()];
    red.expand(&out.x, &mut u_final);
    Ok(MinimizeResult {
        u: u_final,
        energy: out.f,
        gradient_inf_norm: out.grad_inf_norm,
        iterations: out.iterations,
        converged: out.converged,
        restarts: out.restarts,
        history: out.history,
        offsets: red.offsets(&out.x),
    })
}

pub fn minimize(
    lattice: &Lattice,
    model: &EnergyModel,
    bc: &BoundaryCondition,
    init: &[f64],
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    minimize_with_loads(lattice, model, bc, init, None, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartResult {
    pub best: MinimizeResult,
    pub best_index: usize,
    pub energies: Vec<f64>,
}

/// Run every start (in parallel) and keep the lowest energy; ties go to the earliest start.
pub fn minimize_multistart(
    lattice: &Lattice,
    model: &EnergyModel,
    bc: &BoundaryCondition,
    inits: &[Vec<f64>],
    opts: &MinimizeOptions,
) -> Result<MultiStartResult> {
    if inits.is_empty() {
        return Err(invalid("at least one initial deformation is required"));
    }
    let results: Vec<MinimizeResult> =
        inits.par_iter().map(|u0| minimize(lattice, model, bc, u0, opts)).collect::<Result<_>>()?;
    let energies: Vec<f64> = results.iter().map(|r| r.energy).collect();
    let best_index = (0..results.len()).fold(0, |b, i| if energies[i] < energies[b] { i } else { b });
    let best = results.into_iter().nth(best_index).unwrap();
    Ok(MultiStartResult { best, best_index, energies })
}
