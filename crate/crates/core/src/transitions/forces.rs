use nalgebra::DMatrix;

use super::{gamma_estimate, SearchOptions, TransitionLattice};
use crate::energy::{total_energy, EnergyModel, LoadSpec, RadialLoad};
use crate::error::{invalid, Result};
use crate::lattice::{build_strip_lattice, Lattice, StructureMatrix};

/// Planar wire (H = I, λ = 1) under a tangential end load `f1 e_1` and a
/// radial load `amplitude * s(x_1) e_2` with `s = +1` for x_1 < a, `-1` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcesSpec {
    pub k: usize,
    pub l: usize,
    /// Half-length of the strip on which the folding transition is computed.
    pub transition_half_length: usize,
    pub a: i64,
    pub f1: f64,
    pub search: SearchOptions,
}

impl Default for ForcesSpec {
    fn default() -> Self {
        Self {
            k: 1,
            l: 16,
            transition_half_length: 8,
            a: 0,
            f1: 0.1,
            search: SearchOptions { m_schedule: vec![8], ..SearchOptions::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcesDemo {
    /// Energy of the folding transition used by the folded competitor.
    pub fold_energy: f64,
    /// Largest bracketed amplitude at which the unfolded competitor is strictly better.
    pub amplitude_below: f64,
    /// Smallest bracketed amplitude at which the folded competitor is at least as good.
    pub amplitude_above: f64,
    pub bisection_steps: usize,
    /// (folded, best unfolded) values of energy minus load work at `amplitude_below`.
    pub totals_below: (f64, f64),
    /// Same at `amplitude_above`.
    pub totals_above: (f64, f64),
    /// Whether the folded competitor ever wins when the radial load keeps one sign.
    pub folds_under_constant_load: bool,
}

/// Energy, tangential work and radial work per unit amplitude of one competitor.
struct Terms {
    energy: f64,
    tangential: f64,
    radial: f64,
}

impl Terms {
    fn g(&self, amplitude: f64) -> f64 {
        self.energy - self.tangential - amplitude * self.radial
    }
}

fn terms(lattice: &Lattice, u: &[f64], model: &EnergyModel, f1: f64, sign: &dyn Fn(i64) -> f64) -> Result<Terms> {
    let l = lattice.geometry.l;
    let tan = LoadSpec { tangential: vec![f1, 0.0], radial: vec![] };
    let rad = LoadSpec { tangential: vec![0.0, 0.0], radial: vec![RadialLoad::from_fn(1, l, |x| vec![0.0, sign(x)])] };
    Ok(Terms { energy: total_energy(lattice, u, model), tangential: tan.value(lattice, u)?, radial: rad.value(lattice, u)? })
}

/// Compare the folded competitor (orientation switch at `a`) with the best rigid
/// unfolded competitor and bracket the load amplitude where they tie.
pub fn forces_demo(spec: &ForcesSpec) -> Result<ForcesDemo> {
    if spec.transition_half_length + spec.a.unsigned_abs() as usize >= spec.l {
        return Err(invalid("the folding transition must fit inside the wire"));
    }
    if !(spec.f1 > 0.0) {
        return Err(invalid("the tangential load must be positive"));
    }
    let h = StructureMatrix::identity(2);
    let model = EnergyModel::standard(1.0, h.clone())?;
    let id = DMatrix::<f64>::identity(2, 2);
    let flip = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let search = SearchOptions { m_schedule: vec![spec.transition_half_length], ..spec.search.clone() };
    let fold = gamma_estimate(&id, &flip, spec.k, &model, TransitionLattice::Strip, &search)?;

    let lattice = build_strip_lattice(2, spec.k, spec.l, 1.0, &h)?;
    let a = spec.a;
    let offset = fold.best.offsets[1].clone();
    let mut folded = Vec::with_capacity(lattice.len() * 2);
    for node in &lattice.nodes {
        let cell = [node.cell[0] - a, node.cell[1]];
        let y = match fold.lattice.node_at(&cell) {
            Some(i) => vec![fold.best.u[2 * i], fold.best.u[2 * i + 1]],
            None if cell[0] < 0 => vec![cell[0] as f64, cell[1] as f64],
            None => vec![cell[0] as f64 + offset[0], -(cell[1] as f64) + offset[1]],
        };
        folded.extend([y[0] + a as f64, y[1]]);
    }

    let switching = move |x: i64| if x < a { 1.0 } else { -1.0 };
    let constant = |_: i64| 1.0;
    let rigid = [id.clone(), -id.clone(), flip.clone(), -flip.clone()];
    let evaluate = |sign: &dyn Fn(i64) -> f64| -> Result<(Terms, Vec<Terms>)> {
        let f = terms(&lattice, &folded, &model, spec.f1, sign)?;
        let unf = rigid
            .iter()
            .map(|q| terms(&lattice, &lattice.affine_positions(q, &[0.0, 0.0]), &model, spec.f1, sign))
            .collect::<Result<Vec<_>>>()?;
        Ok((f, unf))
    };
    let best_unfolded = |unf: &[Terms], amp: f64| unf.iter().map(|t| t.g(amp)).fold(f64::INFINITY, f64::min);
    let gap = |f: &Terms, unf: &[Terms], amp: f64| f.g(amp) - best_unfolded(unf, amp);

    let (f, unf) = evaluate(&switching)?;
    let (mut hi, mut lo) = (1.0, 1.0);
    while gap(&f, &unf, hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(invalid("folded competitor never wins for the given loads"));
        }
    }
    while gap(&f, &unf, lo) < 0.0 {
        lo /= 2.0;
        if lo < 1e-12 {
            return Err(invalid("folded competitor wins at every amplitude"));
        }
    }
    let mut steps = 0;
    while hi - lo > 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        if gap(&f, &unf, mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }

    let (fc, unfc) = evaluate(&constant)?;
    let folds_under_constant_load = (0..40).map(|e| 1e-6 * 2f64.powi(e)).any(|amp| gap(&fc, &unfc, amp) < 0.0);

    Ok(ForcesDemo {
        fold_energy: fold.value,
        amplitude_below: lo,
        amplitude_above: hi,
        bisection_steps: steps,
        totals_below: (f.g(lo), best_unfolded(&unf, lo)),
        totals_above: (f.g(hi), best_unfolded(&unf, hi)),
        folds_under_constant_load,
    })
}
