use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;

use super::StructureMatrix;
use crate::error::{invalid, Result};

/// Kuhn simplex of the unit cube: vertices `0, e_{i1}, e_{i1}+e_{i2}, ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplex {
    pub permutation: Vec<usize>,
    pub vertices: Vec<Vec<i64>>,
}

impl Simplex {
    pub fn translated(&self, z: &[i64]) -> Vec<Vec<i64>> {
        self.vertices.iter().map(|v| v.iter().zip(z).map(|(a, b)| a + b).collect()).collect()
    }
}

/// All N! Kuhn simplices, permutations in lexicographic order.
pub fn kuhn_simplices(n: usize) -> Result<Vec<Simplex>> {
    if n < 1 {
        return Err(invalid("dimension must be at least 1"));
    }
    Ok((0..n)
        .permutations(n)
        .map(|perm| {
            let mut v = vec![0i64; n];
            let mut vertices = vec![v.clone()];
            for &i in &perm {
                v[i] += 1;
                vertices.push(v.clone());
            }
            Simplex { permutation: perm, vertices }
        })
        .collect())
}

/// Nearest (B1) and next-nearest (B2) offsets of the Kuhn triangulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondSets {
    pub b1: Vec<Vec<i64>>,
    pub b2: Vec<Vec<i64>>,
}

impl BondSets {
    /// r = max |Hξ| over B1 ∪ B2 measured in reference coordinates (H = I).
    pub fn radius(&self) -> f64 {
        self.all()
            .map(|xi| xi.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest |ξ_i| over all offsets and coordinates.
    pub fn reach(&self) -> i64 {
        self.all().flat_map(|xi| xi.iter().map(|c| c.abs())).max().unwrap_or(0)
    }

    /// Largest |ξ_1| over all offsets.
    pub fn axial_reach(&self) -> i64 {
        self.all().map(|xi| xi[0].abs()).max().unwrap_or(0)
    }

    pub fn all(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.b1.iter().chain(self.b2.iter())
    }

    pub fn length_stats(&self, h: &StructureMatrix) -> (Vec<f64>, Vec<f64>) {
        let f = |set: &[Vec<i64>]| set.iter().map(|xi| h.image_length(xi)).collect();
        (f(&self.b1), f(&self.b2))
    }
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Scan the 3^N patch of translated Kuhn simplices. B1 collects offsets between
/// vertices of a common simplex, B2 the offsets between the two opposite vertices
/// of every pair of simplices sharing a facet.
pub fn bond_sets(n: usize) -> Result<BondSets> {
    let base = kuhn_simplices(n)?;
    let shifts: Vec<Vec<i64>> = (0..n).map(|_| -1i64..=1).multi_cartesian_product().collect();
    let mut b1 = BTreeSet::new();
    let mut facets: BTreeMap<Vec<Vec<i64>>, Vec<Vec<i64>>> = BTreeMap::new();
    for z in &shifts {
        for s in &base {
            let verts = s.translated(z);
            for (a, b) in verts.iter().tuple_combinations() {
                b1.insert(sub(a, b));
                b1.insert(sub(b, a));
            }
            for skip in 0..verts.len() {
                let mut facet: Vec<Vec<i64>> =
                    verts.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| v.clone()).collect();
                facet.sort();
                facets.entry(facet).or_default().push(verts[skip].clone());
            }
        }
    }
    let mut b2 = BTreeSet::new();
    for opposite in facets.values() {
        if opposite.len() == 2 {
            b2.insert(sub(&opposite[0], &opposite[1]));
            b2.insert(sub(&opposite[1], &opposite[0]));
        }
    }
    Ok(BondSets { b1: b1.into_iter().collect(), b2: b2.into_iter().collect() })
}
