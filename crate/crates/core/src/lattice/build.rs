use std::collections::HashMap;

use itertools::Itertools;

use super::kuhn::{bond_sets, kuhn_simplices};
use super::{Bond, BondClass, Lattice, LatticeGeometry, LatticeKind, Node, Species, StructureMatrix};
use crate::error::{invalid, Result};

fn lex_positive(xi: &[i64]) -> bool {
    xi.iter().find(|c| **c != 0).is_some_and(|c| *c > 0)
}

/// Unit-spacing lattice on a set of integer points (any order; sorted here).
pub(crate) fn integer_lattice(
    geometry: LatticeGeometry,
    h: &StructureMatrix,
    mut cells: Vec<Vec<i64>>,
    layer: impl Fn(&[i64]) -> bool,
    species: impl Fn(&[i64]) -> Species,
) -> Result<Lattice> {
    let n = geometry.n;
    if h.dim() != n {
        return Err(invalid(format!("structure matrix is {}x{}, lattice dimension is {n}", h.dim(), h.dim())));
    }
    cells.sort();
    cells.dedup();
    let index: HashMap<&[i64], usize> = cells.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    let sets = bond_sets(n)?;
    let offsets: Vec<(BondClass, &Vec<i64>, f64)> = sets
        .b1
        .iter()
        .map(|xi| (BondClass::B1, xi))
        .chain(sets.b2.iter().map(|xi| (BondClass::B2, xi)))
        .filter(|(_, xi)| lex_positive(xi))
        .map(|(c, xi)| (c, xi, h.image_length(xi)))
        .collect();

    let mut bonds = Vec::new();
    let mut buf = vec![0i64; n];
    for (i, c) in cells.iter().enumerate() {
        for (class, xi, len) in &offsets {
            for d in 0..n {
                buf[d] = c[d] + xi[d];
            }
            if let Some(&j) = index.get(buf.as_slice()) {
                bonds.push(Bond { i, j, class: *class, rest_length: *len, species: species(c) });
            }
        }
    }
    bonds.sort_by_key(|b| (b.i, b.j));

    let kuhn = kuhn_simplices(n)?;
    let mut simplices = Vec::new();
    for c in &cells {
        for s in &kuhn {
            let ids: Option<Vec<usize>> = s.translated(c).iter().map(|v| index.get(v.as_slice()).copied()).collect();
            if let Some(ids) = ids {
                simplices.push(ids);
            }
        }
    }

    let boundary_layer = cells.iter().map(|c| layer(c)).collect();
    let nodes = cells
        .iter()
        .map(|c| Node { x: c.iter().map(|&v| v as f64).collect(), cell: c.clone(), species: species(c) })
        .collect();
    Ok(Lattice::assemble(geometry, h.clone(), nodes, bonds, simplices, boundary_layer))
}

pub(crate) fn strip_species(c: &[i64]) -> Species {
    if c[0] < 0 {
        Species::Minus
    } else {
        Species::Plus
    }
}

/// Z^N ∩ [-L, L] × [-k, k]^{N-1}; nodes with x_1 < 0 are the reference species.
pub fn build_strip_lattice(n: usize, k: usize, l: usize, lambda: f64, h: &StructureMatrix) -> Result<Lattice> {
    if n < 1 {
        return Err(invalid("N must be at least 1"));
    }
    if k < 1 || l < 1 {
        return Err(invalid("k and L must be positive"));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    let (k, l) = (k as i64, l as i64);
    let cells = std::iter::once(-l..=l)
        .chain((1..n).map(|_| -k..=k))
        .multi_cartesian_product()
        .collect();
    let geometry = LatticeGeometry { n, k: k as usize, l, lambda, rho: 1.0, kind: LatticeKind::Strip };
    integer_lattice(geometry, h, cells, |_| false, strip_species)
}

/// Box of `sides[i]` nodes per axis, centred at the origin, with the outer `r`
/// node layers flagged as boundary.
pub fn build_box_lattice(n: usize, sides: &[usize], r: usize, h: &StructureMatrix) -> Result<Lattice> {
    if sides.len() != n {
        return Err(invalid("one side length per dimension is required"));
    }
    if let Some(s) = sides.iter().find(|&&s| s < 2 * r + 1) {
        return Err(invalid(format!("box side {s} leaves no interior for boundary width {r}")));
    }
    let lo: Vec<i64> = sides.iter().map(|&s| -(((s - 1) / 2) as i64)).collect();
    let hi: Vec<i64> = sides.iter().zip(&lo).map(|(&s, &a)| a + s as i64 - 1).collect();
    let cells = (0..n).map(|i| lo[i]..=hi[i]).multi_cartesian_product().collect();
    let r = r as i64;
    let layer = |c: &[i64]| (0..n).any(|i| (c[i] - lo[i]).min(hi[i] - c[i]) < r);
    let geometry = LatticeGeometry {
        n,
        k: sides.iter().copied().max().unwrap_or(0),
        l: 0,
        lambda: 1.0,
        rho: 1.0,
        kind: LatticeKind::KuhnBox,
    };
    integer_lattice(geometry, h, cells, layer, |_| Species::Minus)
}

/// Orthonormal frame whose first vector is `nu`.
pub(crate) fn frame(nu: &[f64]) -> Result<Vec<Vec<f64>>> {
    let norm = nu.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm < 1e-12 || nu.iter().any(|c| !c.is_finite()) {
        return Err(invalid("normal vector must be nonzero and finite"));
    }
    let n = nu.len();
    let mut basis = vec![nu.iter().map(|c| c / norm).collect::<Vec<f64>>()];
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= d * bi;
            }
        }
        let m = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if m > 1e-8 {
            basis.push(v.iter().map(|c| c / m).collect());
        }
    }
    Ok(basis)
}

/// Integer points of the cube of side `t` centred at 0 with one face normal
/// to `nu`. Nodes closer than `layer` to the cube boundary are flagged.
pub fn build_cube_lattice(n: usize, t: f64, nu: &[f64], layer: f64, h: &StructureMatrix) -> Result<Lattice> {
    if nu.len() != n {
        return Err(invalid("normal vector has wrong dimension"));
    }
    if !(t > 0.0) {
        return Err(invalid("cube side must be positive"));
    }
    let basis = frame(nu)?;
    let half = t / 2.0;
    let bound = (half * (n as f64).sqrt()).ceil() as i64;
    let proj = |c: &[i64]| -> Vec<f64> {
        basis.iter().map(|b| b.iter().zip(c).map(|(x, &y)| x * y as f64).sum()).collect()
    };
    let cells: Vec<Vec<i64>> = (0..n)
        .map(|_| -bound..=bound)
        .multi_cartesian_product()
        .filter(|c| proj(c).iter().all(|p| p.abs() <= half + 1e-9))
        .collect();
    let in_layer = |c: &[i64]| proj(c).iter().any(|p| half - p.abs() < layer - 1e-9);
    let geometry = LatticeGeometry { n, k: t.ceil() as usize, l: 0, lambda: 1.0, rho: 1.0, kind: LatticeKind::KuhnBox };
    integer_lattice(geometry, h, cells, in_layer, |_| Species::Minus)
}
