use super::{nearest_in_component, DET_TIE};
use crate::energy::EnergyModel;
use crate::error::{invalid, Result};
use crate::lattice::{Lattice, LatticeKind};
use crate::transitions::{OrientationLabel, ProfileInterval};

/// A slab is `either` when its mean distance to both well components is below this.
pub const EITHER_TOLERANCE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct SlabLabel {
    pub start: f64,
    pub end: f64,
    pub label: OrientationLabel,
    pub mean_dist_rot: f64,
    pub mean_dist_refl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrientationProfile {
    pub l: f64,
    pub slabs: Vec<SlabLabel>,
}

impl OrientationProfile {
    /// Maximal runs of equal labels.
    pub fn intervals(&self) -> Vec<ProfileInterval> {
        let mut out: Vec<ProfileInterval> = Vec::new();
        for s in &self.slabs {
            match out.last_mut() {
                Some(last) if last.label == s.label => last.end = s.end,
                _ => out.push(ProfileInterval { start: s.start, end: s.end, label: s.label }),
            }
        }
        out
    }

    /// Number of rot/refl switches, ignoring `either` runs in between.
    pub fn label_changes(&self) -> usize {
        let fixed: Vec<OrientationLabel> =
            self.intervals().iter().map(|i| i.label).filter(|&l| l != OrientationLabel::Either).collect();
        fixed.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

/// Label every unit slab `(a, a+1)` of a strip by the determinant signs of
/// its simplex gradients, compared with the well of the slab's species.
pub fn orientation_profile(lattice: &Lattice, u: &[f64], model: &EnergyModel) -> Result<OrientationProfile> {
    if lattice.geometry.kind != LatticeKind::Strip {
        return Err(invalid("orientation profiles are defined on strip lattices"));
    }
    let n = lattice.dim();
    if u.len() != n * lattice.len() {
        return Err(invalid("deformation length does not match lattice"));
    }
    let l = lattice.geometry.l;
    let hsign = lattice.h.matrix().determinant().signum();
    let slots = (2 * l) as usize;
    // Per slab: (#positive, #negative, #total, sum rot, sum refl).
    let mut acc = vec![(0usize, 0usize, 0usize, 0.0, 0.0); slots];
    for s in &lattice.simplices {
        let a = s.iter().map(|&v| lattice.nodes[v].cell[0]).min().unwrap();
        let slot = (a + l) as usize;
        let f = lattice.simplex_gradient(s, u);
        let scale = model.species_scale(lattice.nodes[s[0]].species);
        let det = f.determinant();
        let (_, rot) = nearest_in_component(&f, &lattice.h, scale, hsign);
        let (_, refl) = nearest_in_component(&f, &lattice.h, scale, -hsign);
        let e = &mut acc[slot];
        if det > DET_TIE {
            e.0 += 1;
        } else if det < -DET_TIE {
            e.1 += 1;
        }
        e.2 += 1;
        e.3 += rot;
        e.4 += refl;
    }
    let slabs = acc
        .iter()
        .enumerate()
        .map(|(i, &(pos, neg, total, rot, refl))| {
            let (mean_rot, mean_refl) = (rot / total as f64, refl / total as f64);
            let label = if (pos > 0 && neg > 0) || pos + neg == 0 || (mean_rot < EITHER_TOLERANCE && mean_refl < EITHER_TOLERANCE) {
                OrientationLabel::Either
            } else if neg == 0 {
                OrientationLabel::Rot
            } else {
                OrientationLabel::Refl
            };
            let start = (i as i64 - l) as f64;
            SlabLabel { start, end: start + 1.0, label, mean_dist_rot: mean_rot, mean_dist_refl: mean_refl }
        })
        .collect();
    Ok(OrientationProfile { l: l as f64, slabs })
}
