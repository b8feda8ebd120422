use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::energy::{total_energy, EnergyModel, WellMode};
use crate::error::{invalid, Result};
use crate::lattice::{bond_sets, build_cube_lattice, rank_one_reflection};
use crate::optimize::{minimize, BoundaryCondition, ClampRegion, MinimizeOptions, NodeSelector};

#[derive(Debug, Clone, PartialEq)]
pub struct G2Row {
    pub t: usize,
    /// Minimized energy divided by T^{N-1}.
    pub estimate: f64,
    /// Energy of the sharp rank-one interface divided by T^{N-1}.
    pub sharp_value: f64,
    pub converged: bool,
}

/// Cube of side T with a face normal to `nu`; the outer layer (as thick as the
/// bond reach) is held at the sharp rank-one interface `H x` / `R x`.
pub fn g2_estimate(nu: &[f64], t_list: &[usize], model: &EnergyModel, opts: &MinimizeOptions) -> Result<Vec<G2Row>> {
    let h = &model.h;
    let n = h.dim();
    if t_list.is_empty() || t_list.contains(&0) {
        return Err(invalid("T list must contain positive integers"));
    }
    let refl = rank_one_reflection(h, nu)?;
    let model = model.clone().with_wells(WellMode::Reference);
    let layer = bond_sets(n)?.reach() as f64;
    t_list
        .par_iter()
        .map(|&t| {
            let lattice = build_cube_lattice(n, t as f64, nu, layer, h)?;
            let side = |nonnegative: bool, a: &DMatrix<f64>| ClampRegion {
                selector: NodeSelector::LayerSide { nu: nu.to_vec(), nonnegative },
                a: a.clone(),
                b: vec![0.0; n],
                free_offset: false,
            };
            let bc = BoundaryCondition::new(vec![side(true, h.matrix()), side(false, &refl.r)]);
            let u0: Vec<f64> = lattice.nodes.iter().flat_map(|node| refl.interface_map(h, &node.x)).collect();
            let area = (t as f64).powi(n as i32 - 1);
            let sharp = total_energy(&lattice, &u0, &model) / area;
            let res = minimize(&lattice, &model, &bc, &u0, opts)?;
            Ok(G2Row { t, estimate: res.energy / area, sharp_value: sharp, converged: res.converged })
        })
        .collect()
}
