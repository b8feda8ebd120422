use std::collections::{BTreeMap, BTreeSet};

use super::delaunay::delaunay_triangles;
use super::kuhn::kuhn_simplices;
use super::{Bond, BondClass, Lattice, LatticeGeometry, LatticeKind, Node, Species, StructureMatrix};
use crate::error::{construction, invalid, Result};

/// Half-width (reference units) of the re-triangulated band around x_1 = 0.
pub const INTERFACE_HALF_WIDTH: f64 = 2.0;

/// Planar two-phase lattice with hexagonal structure: unit spacing for x_1 < 0,
/// spacing `rho` for x_1 >= 0. Near the interface bonds come from a Delaunay
/// triangulation of the deformed-reference points: triangle edges are B1,
/// opposite vertices of edge-adjacent triangles are B2.
pub fn build_dislocated_lattice(rho: f64, k: usize, l: usize, lambda: f64) -> Result<Lattice> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1], got {rho}")));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    if k < 1 || (l as f64) < INTERFACE_HALF_WIDTH + 1.0 {
        return Err(invalid("dislocated lattice needs k >= 1 and L >= 3"));
    }
    let h = StructureMatrix::hexagonal();
    let (ki, li) = (k as i64, l as i64);
    let tol = 1e-9;

    let mut nodes = Vec::new();
    for a in -li..0 {
        for b in -ki..=ki {
            nodes.push(Node { x: vec![a as f64, b as f64], cell: vec![a, b], species: Species::Minus });
        }
    }
    let amax = (l as f64 / rho + tol).floor() as i64;
    let bmax = (k as f64 / rho + tol).floor() as i64;
    for a in 0..=amax {
        for b in -bmax..=bmax {
            nodes.push(Node { x: vec![rho * a as f64, rho * b as f64], cell: vec![a, b], species: Species::Plus });
        }
    }
    let index: BTreeMap<(Species, Vec<i64>), usize> =
        nodes.iter().enumerate().map(|(i, n)| ((n.species, n.cell.clone()), i)).collect();

    let x_right = rho * (INTERFACE_HALF_WIDTH / rho - tol).ceil();
    let band: Vec<usize> = (0..nodes.len())
        .filter(|&i| {
            let x = nodes[i].x[0];
            x >= -INTERFACE_HALF_WIDTH - tol && x <= x_right + tol
        })
        .collect();
    let pts: Vec<[f64; 2]> = band
        .iter()
        .map(|&i| {
            let y = h.apply(&nodes[i].x);
            [y[0], y[1]]
        })
        .collect();
    let mut triangles: Vec<Vec<usize>> = delaunay_triangles(&pts)?
        .into_iter()
        .map(|t| t.iter().map(|&v| band[v]).collect())
        .collect();

    let kuhn = kuhn_simplices(2)?;
    for node in &nodes {
        let x0 = node.x[0];
        let left_cube = node.species == Species::Minus && x0 + 1.0 <= -INTERFACE_HALF_WIDTH + tol;
        let right_cube = node.species == Species::Plus && x0 >= x_right - tol;
        if !(left_cube || right_cube) {
            continue;
        }
        for s in &kuhn {
            let ids: Option<Vec<usize>> =
                s.translated(&node.cell).into_iter().map(|c| index.get(&(node.species, c)).copied()).collect();
            if let Some(ids) = ids {
                triangles.push(ids);
            }
        }
    }

    let mut edge_tris: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            edge_tris.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    if edge_tris.values().any(|ts| ts.len() > 2) {
        return Err(construction("interface triangulation is not a manifold"));
    }
    let b1: BTreeSet<(usize, usize)> = edge_tris.keys().copied().collect();
    let mut b2 = BTreeSet::new();
    for (&(a, b), ts) in &edge_tris {
        if ts.len() == 2 {
            let opp = |t: usize| *triangles[t].iter().find(|&&v| v != a && v != b).unwrap();
            let (c, d) = (opp(ts[0]), opp(ts[1]));
            let e = (c.min(d), c.max(d));
            if !b1.contains(&e) {
                b2.insert(e);
            }
        }
    }
    let (len1, len2) = (1.0, 3f64.sqrt());
    let mut bonds: Vec<Bond> = b1
        .iter()
        .map(|&(i, j)| (i, j, BondClass::B1, len1))
        .chain(b2.iter().map(|&(i, j)| (i, j, BondClass::B2, len2)))
        .map(|(i, j, class, rest_length)| Bond { i, j, class, rest_length, species: nodes[i].species })
        .collect();
    bonds.sort_by_key(|b| (b.i, b.j));

    let geometry = LatticeGeometry { n: 2, k, l: li, lambda, rho, kind: LatticeKind::Dislocated };
    let flags = vec![false; nodes.len()];
    Ok(Lattice::assemble(geometry, h, nodes, bonds, triangles, flags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_strip_lattice;

    #[test]
    fn unit_rho_matches_strip() {
        let d = build_dislocated_lattice(1.0, 2, 5, 0.8).unwrap();
        let s = build_strip_lattice(2, 2, 5, 0.8, &StructureMatrix::hexagonal()).unwrap();
        assert_eq!(d.len(), s.len());
        let key = |b: &Bond| (b.i, b.j, b.class, b.species);
        let a: Vec<_> = d.bonds.iter().map(key).collect();
        let c: Vec<_> = s.bonds.iter().map(key).collect();
        assert_eq!(a, c);
        for (x, y) in d.bonds.iter().zip(&s.bonds) {
            assert!((x.rest_length - y.rest_length).abs() < 1e-12);
        }
    }

    #[test]
    fn finer_right_column() {
        let d = build_dislocated_lattice(0.5, 2, 5, 0.5).unwrap();
        let right0 = d.nodes.iter().filter(|n| n.species == Species::Plus && n.cell[0] == 0).count();
        let left = d.nodes.iter().filter(|n| n.species == Species::Minus && n.cell[0] == -1).count();
        assert_eq!(left, 5);
        assert_eq!(right0, 9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_dislocated_lattice(0.0, 2, 5, 0.5).is_err());
        assert!(build_dislocated_lattice(1.2, 2, 5, 0.5).is_err());
        assert!(build_dislocated_lattice(0.7, 2, 2, 0.5).is_err());
    }
}
