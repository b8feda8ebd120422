//! Two-well bond energy, its gradient, cell energies and boundary loads.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::lattice::{Bond, BondClass, Lattice, LatticeKind, Species, StructureMatrix};

/// Which equilibrium scale each species uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellMode {
    /// Reference species at |Hξ|, mismatched species at λ|Hξ|.
    Heterogeneous,
    /// Every bond at |Hξ|.
    Reference,
    /// Every bond at λ|Hξ|.
    Mismatched,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub lambda: f64,
    pub h: StructureMatrix,
    pub wells: WellMode,
}

impl EnergyModel {
    pub fn new(p: f64, c1: f64, c2: f64, lambda: f64, h: StructureMatrix) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid(format!("p must be a finite number >= 1, got {p}")));
        }
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(invalid("bond coefficients c1, c2 must be positive"));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(invalid(format!("lambda must lie in (0, 1], got {lambda}")));
        }
        Ok(Self { p, c1, c2, lambda, h, wells: WellMode::Heterogeneous })
    }

    /// p = 2, c1 = c2 = 1.
    pub fn standard(lambda: f64, h: StructureMatrix) -> Result<Self> {
        Self::new(2.0, 1.0, 1.0, lambda, h)
    }

    pub fn with_wells(mut self, wells: WellMode) -> Self {
        self.wells = wells;
        self
    }

    pub fn species_scale(&self, species: Species) -> f64 {
        match (self.wells, species) {
            (WellMode::Heterogeneous, Species::Minus) | (WellMode::Reference, _) => 1.0,
            (WellMode::Heterogeneous, Species::Plus) | (WellMode::Mismatched, _) => self.lambda,
        }
    }

    pub fn coefficient(&self, class: BondClass) -> f64 {
        match class {
            BondClass::B1 => self.c1,
            BondClass::B2 => self.c2,
        }
    }

    pub fn equilibrium(&self, bond: &Bond) -> f64 {
        bond.rest_length * self.species_scale(bond.species)
    }

    #[inline]
    fn phi(&self, z: f64) -> f64 {
        if self.p == 2.0 {
            z * z
        } else {
            z.abs().powf(self.p)
        }
    }

    #[inline]
    fn dphi(&self, z: f64) -> f64 {
        if self.p == 2.0 {
            2.0 * z
        } else if z == 0.0 {
            0.0
        } else {
            self.p * z.abs().powf(self.p - 1.0) * z.signum()
        }
    }
}

#[inline]
fn bond_vector(u: &[f64], n: usize, b: &Bond, d: &mut [f64]) -> f64 {
    let mut r2 = 0.0;
    for k in 0..n {
        d[k] = u[b.j * n + k] - u[b.i * n + k];
        r2 += d[k] * d[k];
    }
    r2.sqrt()
}

fn check_len(lattice: &Lattice, u: &[f64]) {
    assert_eq!(u.len(), lattice.len() * lattice.dim(), "deformation length does not match lattice");
}

fn bond_term(lattice: &Lattice, u: &[f64], model: &EnergyModel, b: &Bond, d: &mut [f64]) -> f64 {
    let r = bond_vector(u, lattice.dim(), b, d);
    model.coefficient(b.class) * model.phi(r - model.equilibrium(b))
}

/// Sum over undirected bonds of c(ξ) · | |u_j - u_i| - ℓ |^p.
pub fn total_energy(lattice: &Lattice, u: &[f64], model: &EnergyModel) -> f64 {
    check_len(lattice, u);
    let mut d = vec![0.0; lattice.dim()];
    lattice.bonds.iter().map(|b| bond_term(lattice, u, model, b, &mut d)).sum()
}

/// Same value as [`total_energy`] computed over fixed-size bond chunks in
/// parallel; chunk sums are added in chunk order, so the result does not
/// depend on the thread count.
pub fn total_energy_chunked(lattice: &Lattice, u: &[f64], model: &EnergyModel, chunk: usize) -> f64 {
    check_len(lattice, u);
    let partial: Vec<f64> = lattice
        .bonds
        .par_chunks(chunk.max(1))
        .map(|bs| {
            let mut d = vec![0.0; lattice.dim()];
            bs.iter().map(|b| bond_term(lattice, u, model, b, &mut d)).sum()
        })
        .collect();
    partial.into_iter().sum()
}

/// Energy and gradient restricted to the listed bonds (all bonds when `None`).
pub fn energy_and_gradient_on(
    lattice: &Lattice,
    u: &[f64],
    model: &EnergyModel,
    subset: Option<&[usize]>,
    grad: &mut [f64],
) -> f64 {
    check_len(lattice, u);
    let n = lattice.dim();
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut d = vec![0.0; n];
    let mut e = 0.0;
    let mut visit = |b: &Bond| {
        let r = bond_vector(u, n, b, &mut d);
        let c = model.coefficient(b.class);
        let z = r - model.equilibrium(b);
        e += c * model.phi(z);
        if r > 0.0 {
            let s = c * model.dphi(z) / r;
            for k in 0..n {
                grad[b.j * n + k] += s * d[k];
                grad[b.i * n + k] -= s * d[k];
            }
        }
    };
    match subset {
        Some(ids) => ids.iter().for_each(|&i| visit(&lattice.bonds[i])),
        None => lattice.bonds.iter().for_each(visit),
    }
    e
}

pub fn energy_gradient(lattice: &Lattice, u: &[f64], model: &EnergyModel) -> Vec<f64> {
    let mut g = vec![0.0; u.len()];
    energy_and_gradient_on(lattice, u, model, None, &mut g);
    g
}

/// Σ over vertex pairs of a simplex of | |F(x_i - x_j)| - |H(x_i - x_j)| |^p.
pub fn cell_energy(f: &DMatrix<f64>, vertices: &[Vec<f64>], h: &StructureMatrix, p: f64) -> f64 {
    let mut e = 0.0;
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            let d = DVector::from_iterator(vertices[i].len(), vertices[i].iter().zip(&vertices[j]).map(|(a, b)| a - b));
            let z = (f * &d).norm() - (h.matrix() * &d).norm();
            e += z.abs().powf(p);
        }
    }
    e
}

/// Boundary loads on a strip lattice: a tangential force `F_1` acting on the
/// end cross-sections and radial fields `F_i(x_1)` on the lateral faces.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub tangential: Vec<f64>,
    pub radial: Vec<RadialLoad>,
}

/// `values[x_1 + L]` is the force applied to the pair of lateral nodes at `x_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialLoad {
    /// Lateral axis (1..N-1, zero-based coordinate index).
    pub axis: usize,
    pub values: Vec<Vec<f64>>,
}

impl RadialLoad {
    pub fn from_fn(axis: usize, l: i64, f: impl Fn(i64) -> Vec<f64>) -> Self {
        Self { axis, values: (-l..=l).map(f).collect() }
    }
}

impl LoadSpec {
    /// Linear functional: its gradient in `u` is a constant vector.
    pub fn gradient(&self, lattice: &Lattice) -> Result<Vec<f64>> {
        let n = lattice.dim();
        let mut g = vec![0.0; lattice.len() * n];
        self.visit(lattice, |node, f, sign| {
            for k in 0..n {
                g[node * n + k] += sign * f[k];
            }
        })?;
        Ok(g)
    }

    pub fn value(&self, lattice: &Lattice, u: &[f64]) -> Result<f64> {
        let n = lattice.dim();
        check_len(lattice, u);
        let mut v = 0.0;
        self.visit(lattice, |node, f, sign| {
            for k in 0..n {
                v += sign * f[k] * u[node * n + k];
            }
        })?;
        Ok(v)
    }

    fn visit(&self, lattice: &Lattice, mut add: impl FnMut(usize, &[f64], f64)) -> Result<()> {
        let g = &lattice.geometry;
        if g.kind != LatticeKind::Strip {
            return Err(invalid("loads are defined on strip lattices only"));
        }
        let n = g.n;
        if self.tangential.len() != n {
            return Err(invalid("tangential load has wrong dimension"));
        }
        let (l, k) = (g.l, g.k as i64);
        for (idx, node) in lattice.nodes.iter().enumerate() {
            let c = &node.cell;
            if c[0] == l {
                let mut partner = c.clone();
                partner[0] = -l;
                let j = lattice.node_at(&partner).expect("strip end partner exists");
                add(idx, &self.tangential, 1.0);
                add(j, &self.tangential, -1.0);
            }
            for r in &self.radial {
                if r.axis == 0 || r.axis >= n {
                    return Err(invalid("radial load axis must be a lateral coordinate"));
                }
                if r.values.len() != (2 * l + 1) as usize {
                    return Err(invalid("radial load must be sampled on every column"));
                }
                if c[r.axis] == k {
                    let f = &r.values[(c[0] + l) as usize];
                    if f.len() != n {
                        return Err(invalid("radial load has wrong dimension"));
                    }
                    let mut partner = c.clone();
                    partner[r.axis] = -k;
                    let j = lattice.node_at(&partner).expect("strip lateral partner exists");
                    add(idx, f, 1.0);
                    add(j, f, -1.0);
                }
            }
        }
        Ok(())
    }
}

pub fn load_value(lattice: &Lattice, u: &[f64], loads: &LoadSpec) -> Result<f64> {
    loads.value(lattice, u)
}

/// Result of [`fd_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    /// Worst of |fd_i - g_i| / max(|fd_i|, |g_i|, floor).
    pub max_error: f64,
    pub worst_index: usize,
    pub floor: f64,
}

/// Central-difference check. Components are compared relative to their own
/// size, but never below `floor = max(1e-8, 1e-3 |g|_inf)`: tiny entries produced
/// by cancellation carry only round-off in the difference quotient.
pub fn fd_check(f: impl Fn(&[f64]) -> f64, grad: &[f64], x: &[f64], step: f64) -> FdReport {
    let floor = (1e-3 * grad.iter().fold(0.0f64, |m, g| m.max(g.abs()))).max(1e-8);
    let mut y = x.to_vec();
    let mut worst = (0.0, 0);
    for i in 0..x.len() {
        y[i] = x[i] + step;
        let fp = f(&y);
        y[i] = x[i] - step;
        let fm = f(&y);
        y[i] = x[i];
        let fd = (fp - fm) / (2.0 * step);
        let mag = fd.abs().max(grad[i].abs());
        let err = (fd - grad[i]).abs() / mag.max(floor);
        if err > worst.0 {
            worst = (err, i);
        }
    }
    FdReport { max_error: worst.0, worst_index: worst.1, floor }
}
