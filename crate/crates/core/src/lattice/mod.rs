//! Reference lattices: Kuhn simplices, bond sets, strip/box/dislocated builders.
//!
//! Nodes are stored in lexicographic order of their reference coordinates, so
//! for every bond `i < j` the first endpoint is the lexicographically smaller one.

mod build;
mod delaunay;
mod dislocated;
mod export;
mod kuhn;
mod reflection;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

pub use build::{build_box_lattice, build_cube_lattice, build_strip_lattice};
pub use delaunay::delaunay_triangles;
pub use dislocated::{build_dislocated_lattice, INTERFACE_HALF_WIDTH};
pub use export::{export_deformation, export_lattice};
pub use kuhn::{bond_sets, kuhn_simplices, BondSets, Simplex};
pub use reflection::{rank_one_reflection, RankOneReflection};

/// Invertible N×N matrix with positive determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    m: DMatrix<f64>,
}

impl StructureMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(invalid("structure matrix must be square and nonempty"));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(invalid("structure matrix has non-finite entries"));
        }
        let det = m.determinant();
        if det <= 1e-12 {
            return Err(invalid(format!("structure matrix must have positive determinant, got {det}")));
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("structure matrix rows must all have length N"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    /// Triangular lattice in the plane: unit nearest-neighbour distance.
    pub fn hexagonal() -> Self {
        let s = 3f64.sqrt() / 2.0;
        Self { m: DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.0, s]) }
    }

    pub fn fcc() -> Self {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, -1.0, 1.0, 1.0, 0.0, -1.0]) * 0.5;
        Self { m }
    }

    pub fn bcc() -> Self {
        let m = DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0]) * 0.5;
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    /// |Hξ| for an integer offset.
    pub fn image_length(&self, xi: &[i64]) -> f64 {
        let v: Vec<f64> = xi.iter().map(|&c| c as f64).collect();
        self.apply(&v).iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    Minus,
    Plus,
}

impl Species {
    pub fn as_str(self) -> &'static str {
        match self {
            Species::Minus => "minus",
            Species::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondClass {
    B1,
    B2,
}

impl BondClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BondClass::B1 => "B1",
            BondClass::B2 => "B2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Reference position.
    pub x: Vec<f64>,
    /// Integer label on the node's own sublattice (position = spacing * cell).
    pub cell: Vec<i64>,
    pub species: Species,
}

/// Undirected bond `i < j`. `rest_length` is the equilibrium length for the
/// reference species; the energy model rescales it for the mismatched species.
#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub class: BondClass,
    pub rest_length: f64,
    pub species: Species,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    KuhnBox,
    Strip,
    Dislocated,
}

impl LatticeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LatticeKind::KuhnBox => "kuhn-box",
            LatticeKind::Strip => "strip",
            LatticeKind::Dislocated => "dislocated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGeometry {
    pub n: usize,
    pub k: usize,
    pub l: i64,
    pub lambda: f64,
    pub rho: f64,
    pub kind: LatticeKind,
}

#[derive(Debug, Clone)]
pub struct Lattice {
    pub geometry: LatticeGeometry,
    pub h: StructureMatrix,
    pub nodes: Vec<Node>,
    pub bonds: Vec<Bond>,
    /// Simplices as node-index lists (N+1 entries each).
    pub simplices: Vec<Vec<usize>>,
    /// Boundary-layer flags (box lattices); all false otherwise.
    pub boundary_layer: Vec<bool>,
    index: HashMap<(Species, Vec<i64>), usize>,
}

impl Lattice {
    pub(crate) fn assemble(
        geometry: LatticeGeometry,
        h: StructureMatrix,
        nodes: Vec<Node>,
        bonds: Vec<Bond>,
        simplices: Vec<Vec<usize>>,
        boundary_layer: Vec<bool>,
    ) -> Self {
        let index = nodes.iter().enumerate().map(|(i, n)| ((n.species, n.cell.clone()), i)).collect();
        Self { geometry, h, nodes, bonds, simplices, boundary_layer, index }
    }

    pub fn dim(&self) -> usize {
        self.geometry.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node with integer coordinates `cell` on a unit-spacing lattice.
    pub fn node_at(&self, cell: &[i64]) -> Option<usize> {
        let species = if self.geometry.kind == LatticeKind::KuhnBox || cell[0] < 0 {
            Species::Minus
        } else {
            Species::Plus
        };
        self.index.get(&(species, cell.to_vec())).copied()
    }

    pub fn node_in(&self, species: Species, cell: &[i64]) -> Option<usize> {
        self.index.get(&(species, cell.to_vec())).copied()
    }

    /// Flattened reference positions `x` mapped through `a x + b` for every node.
    pub fn affine_positions(&self, a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * self.len());
        for node in &self.nodes {
            let y = a * DVector::from_column_slice(&node.x);
            out.extend((0..n).map(|r| y[r] + b[r]));
        }
        out
    }

    pub fn degree(&self) -> Vec<usize> {
        let mut deg = vec![0; self.len()];
        for b in &self.bonds {
            deg[b.i] += 1;
            deg[b.j] += 1;
        }
        deg
    }

    /// Gradient of the piecewise-affine interpolant of `u` on a simplex.
    pub fn simplex_gradient(&self, simplex: &[usize], u: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let x0 = &self.nodes[simplex[0]].x;
        let dx = DMatrix::from_fn(n, n, |r, c| self.nodes[simplex[c + 1]].x[r] - x0[r]);
        let du = DMatrix::from_fn(n, n, |r, c| u[simplex[c + 1] * n + r] - u[simplex[0] * n + r]);
        let inv = dx.try_inverse().expect("reference simplex is nondegenerate");
        du * inv
    }
}
