use std::collections::HashMap;
use std::path::PathBuf;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wirelattice::analysis::{self, InversionOptions};
use wirelattice::cli_io;
use wirelattice::energy::{self, EnergyModel, WellMode};
use wirelattice::lattice::{self as lat, StructureMatrix};
use wirelattice::optimize::MinimizeOptions;
use wirelattice::transitions::{self as tr, GammaValues, OrientationLabel, OrientationSet, ProfileInterval, SearchOptions, TransitionLattice, WellPair};
use wirelattice::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        Error::Construction(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn structure(name: &str, n: usize) -> PyResult<StructureMatrix> {
    match name {
        "identity" => Ok(StructureMatrix::identity(n)),
        "hexagonal" if n == 2 => Ok(StructureMatrix::hexagonal()),
        "fcc" if n == 3 => Ok(StructureMatrix::fcc()),
        "bcc" if n == 3 => Ok(StructureMatrix::bcc()),
        _ => Err(PyValueError::new_err(format!("unknown structure matrix `{name}` for N = {n}"))),
    }
}

fn wells(name: &str) -> PyResult<WellMode> {
    match name {
        "heterogeneous" => Ok(WellMode::Heterogeneous),
        "reference" => Ok(WellMode::Reference),
        "mismatched" => Ok(WellMode::Mismatched),
        _ => Err(PyValueError::new_err(format!("unknown well mode `{name}`"))),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a square matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn search(m_schedule: Vec<usize>, restarts: usize, seed: u64) -> SearchOptions {
    SearchOptions { m_schedule, restarts, seed, ..SearchOptions::default() }
}

/// A node/bond lattice with flattened reference positions.
#[pyclass(name = "Lattice")]
struct PyLattice {
    inner: lat::Lattice,
}

#[pymethods]
impl PyLattice {
    /// Strip `[-L, L] x [-k, k]^(N-1)`.
    #[staticmethod]
    #[pyo3(signature = (n, k, l, lam=1.0, structure="identity"))]
    fn strip(n: usize, k: usize, l: usize, lam: f64, structure: &str) -> PyResult<Self> {
        let h = self::structure(structure, n)?;
        Ok(Self { inner: lat::build_strip_lattice(n, k, l, lam, &h).map_err(to_py)? })
    }

    /// Hexagonal strip with a ρ-spaced right half.
    #[staticmethod]
    #[pyo3(signature = (rho, k, l, lam=1.0))]
    fn dislocated(rho: f64, k: usize, l: usize, lam: f64) -> PyResult<Self> {
        Ok(Self { inner: lat::build_dislocated_lattice(rho, k, l, lam).map_err(to_py)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn num_bonds(&self) -> usize {
        self.inner.bonds.len()
    }

    fn positions(&self) -> Vec<f64> {
        self.inner.nodes.iter().flat_map(|n| n.x.iter().copied()).collect()
    }

    fn bonds(&self) -> Vec<(usize, usize, String)> {
        self.inner.bonds.iter().map(|b| (b.i, b.j, b.class.as_str().to_string())).collect()
    }

    fn max_degree(&self) -> usize {
        self.inner.degree().into_iter().max().unwrap_or(0)
    }

    /// Positions `A x + b` for every node.
    fn affine(&self, a: Vec<Vec<f64>>, b: Vec<f64>) -> PyResult<Vec<f64>> {
        let a = matrix(&a)?;
        if a.nrows() != self.inner.dim() || b.len() != self.inner.dim() {
            return Err(PyValueError::new_err("dimension mismatch"));
        }
        Ok(self.inner.affine_positions(&a, &b))
    }

    #[pyo3(signature = (u, lam=1.0, p=2.0, c1=1.0, c2=1.0, wells="heterogeneous"))]
    fn energy(&self, u: Vec<f64>, lam: f64, p: f64, c1: f64, c2: f64, wells: &str) -> PyResult<f64> {
        let model = self.model(lam, p, c1, c2, wells)?;
        self.check(&u)?;
        Ok(energy::total_energy(&self.inner, &u, &model))
    }

    #[pyo3(signature = (u, lam=1.0, p=2.0, c1=1.0, c2=1.0, wells="heterogeneous"))]
    fn gradient(&self, u: Vec<f64>, lam: f64, p: f64, c1: f64, c2: f64, wells: &str) -> PyResult<Vec<f64>> {
        let model = self.model(lam, p, c1, c2, wells)?;
        self.check(&u)?;
        Ok(energy::energy_gradient(&self.inner, &u, &model))
    }

    /// Slab labels `(start, end, label, mean_dist_rot, mean_dist_refl)`.
    #[pyo3(signature = (u, lam=1.0, wells="reference"))]
    fn orientation_profile(&self, u: Vec<f64>, lam: f64, wells: &str) -> PyResult<Vec<(f64, f64, String, f64, f64)>> {
        let model = self.model(lam, 2.0, 1.0, 1.0, wells)?;
        self.check(&u)?;
        let p = analysis::orientation_profile(&self.inner, &u, &model).map_err(to_py)?;
        Ok(p.slabs.iter().map(|s| (s.start, s.end, s.label.as_str().to_string(), s.mean_dist_rot, s.mean_dist_refl)).collect())
    }

    fn export(&self) -> String {
        lat::export_lattice(&self.inner)
    }
}

impl PyLattice {
    fn model(&self, lam: f64, p: f64, c1: f64, c2: f64, w: &str) -> PyResult<EnergyModel> {
        Ok(EnergyModel::new(p, c1, c2, lam, self.inner.h.clone()).map_err(to_py)?.with_wells(wells(w)?))
    }

    fn check(&self, u: &[f64]) -> PyResult<()> {
        if u.len() != self.inner.len() * self.inner.dim() {
            return Err(PyValueError::new_err("deformation length does not match the lattice"));
        }
        Ok(())
    }
}

/// Numbers of B1 and B2 offsets of the Kuhn decomposition in dimension N.
#[pyfunction]
fn bond_counts(n: usize) -> PyResult<(usize, usize)> {
    let b = lat::bond_sets(n).map_err(to_py)?;
    Ok((b.b1.len(), b.b2.len()))
}

/// γ estimate for a named well pair; returns `(value, [(M, value, converged)], stabilized)`.
#[pyfunction]
#[pyo3(signature = (pair, k, lam=1.0, structure="identity", n=2, m_schedule=vec![4, 8, 16], restarts=3, seed=0, p=2.0, rho=None))]
#[allow(clippy::too_many_arguments)]
fn gamma_estimate(
    pair: &str,
    k: usize,
    lam: f64,
    structure: &str,
    n: usize,
    m_schedule: Vec<usize>,
    restarts: usize,
    seed: u64,
    p: f64,
    rho: Option<f64>,
) -> PyResult<(f64, Vec<(usize, f64, bool)>, bool)> {
    let pair = WellPair::parse(pair).ok_or_else(|| PyValueError::new_err("unknown well pair"))?;
    let model = EnergyModel::new(p, 1.0, 1.0, lam, self::structure(structure, n)?).map_err(to_py)?;
    let (p1, p2) = pair.matrices(n, lam);
    let lattice = match rho {
        Some(rho) => TransitionLattice::Dislocated { rho },
        None => TransitionLattice::Strip,
    };
    let e = tr::gamma_estimate(&p1, &p2, k, &model, lattice, &search(m_schedule, restarts, seed)).map_err(to_py)?;
    Ok((e.value, e.points.iter().map(|q| (q.m, q.value, q.converged)).collect(), e.stabilized))
}

/// The four transition constants keyed by pair label.
#[pyfunction]
#[pyo3(signature = (k, lam, structure="identity", n=2, m_schedule=vec![4, 8, 16], restarts=3, seed=0, p=2.0))]
#[allow(clippy::too_many_arguments)]
fn gamma_table(
    k: usize,
    lam: f64,
    structure: &str,
    n: usize,
    m_schedule: Vec<usize>,
    restarts: usize,
    seed: u64,
    p: f64,
) -> PyResult<HashMap<String, f64>> {
    let model = EnergyModel::new(p, 1.0, 1.0, lam, self::structure(structure, n)?).map_err(to_py)?;
    let t = tr::gamma_table(k, &model, &search(m_schedule, restarts, seed)).map_err(to_py)?;
    Ok(t.rows.iter().map(|(pair, e)| (pair.label().to_string(), e.value)).collect())
}

/// Rows `(k, value, value/k^(N-1), value/k^N, folding_bound)`.
#[pyfunction]
#[pyo3(signature = (pair, k_list, lam, n=2, folding=true, restarts=3, seed=0))]
fn scaling_study(
    pair: &str,
    k_list: Vec<usize>,
    lam: f64,
    n: usize,
    folding: bool,
    restarts: usize,
    seed: u64,
) -> PyResult<Vec<(usize, f64, f64, f64, Option<f64>)>> {
    let pair = WellPair::parse(pair).ok_or_else(|| PyValueError::new_err("unknown well pair"))?;
    let model = EnergyModel::standard(lam, StructureMatrix::identity(n)).map_err(to_py)?;
    let s = search(vec![4, 8, 16], restarts, seed);
    let study = tr::scaling_study(pair, &k_list, &model, &s, folding).map_err(to_py)?;
    Ok(study.rows.iter().map(|r| (r.k, r.value, r.per_k_n1, r.per_k_n, r.folding_bound)).collect())
}

/// Rows `(T, estimate, sharp_value)` for the cube problem with normal `nu`.
#[pyfunction]
#[pyo3(signature = (nu, t_list, structure="identity", p=2.0))]
fn g2_estimate(nu: Vec<f64>, t_list: Vec<usize>, structure: &str, p: f64) -> PyResult<Vec<(usize, f64, f64)>> {
    let model = EnergyModel::new(p, 1.0, 1.0, 1.0, self::structure(structure, nu.len())?).map_err(to_py)?;
    let rows = tr::g2_estimate(&nu, &t_list, &model, &MinimizeOptions::default()).map_err(to_py)?;
    Ok(rows.iter().map(|r| (r.t, r.estimate, r.sharp_value)).collect())
}

fn gammas(g: &HashMap<String, f64>) -> PyResult<GammaValues> {
    let v = |key: &str| g.get(key).copied().ok_or_else(|| PyValueError::new_err(format!("missing gamma `{key}`")));
    Ok(GammaValues { ij: v("I-J")?, lam_ij: v("lamI-lamJ")?, i_lam_i: v("I-lamI")?, i_lam_j: v("I-lamJ")? })
}

/// Value of the interface-counting functional for `U` = union of `intervals` in (-L, L).
#[pyfunction]
fn j_eval(l: f64, intervals: Vec<(f64, f64)>, gamma: HashMap<String, f64>) -> PyResult<f64> {
    let set = OrientationSet::new(l, intervals).map_err(to_py)?;
    Ok(tr::j_eval(&set, &gammas(&gamma)?))
}

/// Minimum over orientation sets compatible with `(start, end, label)` intervals.
#[pyfunction]
fn j_min(profile: Vec<(f64, f64, String)>, gamma: HashMap<String, f64>) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let profile = profile
        .into_iter()
        .map(|(start, end, label)| {
            let label = match label.as_str() {
                "rot" => OrientationLabel::Rot,
                "refl" => OrientationLabel::Refl,
                "either" => OrientationLabel::Either,
                _ => return Err(PyValueError::new_err(format!("unknown label `{label}`"))),
            };
            Ok(ProfileInterval { start, end, label })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let (v, set) = tr::j_min(&profile, &gammas(&gamma)?).map_err(to_py)?;
    Ok((v, set.intervals))
}

/// `(nearest, distance, orientation)` of F relative to `O(N) scale H`.
#[pyfunction]
#[pyo3(signature = (f, structure="identity", scale=1.0))]
fn polar_project(f: Vec<Vec<f64>>, structure: &str, scale: f64) -> PyResult<(Vec<Vec<f64>>, f64, i8)> {
    let f = matrix(&f)?;
    let h = self::structure(structure, f.nrows())?;
    let p = analysis::polar_project(&f, &h, scale);
    Ok((rows(&p.nearest), p.distance, p.orientation))
}

/// Empirical inversion constant: `(value, same_cube, feasible_runs)`.
#[pyfunction]
#[pyo3(signature = (n=2, structure="identity", p=2.0, restarts=8, seed=0))]
fn inversion_cost(n: usize, structure: &str, p: f64, restarts: usize, seed: u64) -> PyResult<(f64, bool, usize)> {
    let h = self::structure(structure, n)?;
    let c = analysis::inversion_cost(&h, p, &InversionOptions { restarts, seed, ..InversionOptions::default() }).map_err(to_py)?;
    Ok((c.value, c.pair.same_cube, c.feasible_runs))
}

/// Largest sampled dist^p / cell-energy ratio.
#[pyfunction]
#[pyo3(signature = (n=2, structure="identity", p=2.0, samples=1000, seed=0))]
fn rigidity_probe(n: usize, structure: &str, p: f64, samples: usize, seed: u64) -> PyResult<f64> {
    let h = self::structure(structure, n)?;
    Ok(analysis::rigidity_probe(&h, p, samples, seed).map_err(to_py)?.constant)
}

/// `(amplitude_below, amplitude_above, fold_energy, folds_under_constant_load)`.
#[pyfunction]
#[pyo3(signature = (k=1, l=16, transition_half_length=8, a=0, f1=0.1))]
fn forces_demo(k: usize, l: usize, transition_half_length: usize, a: i64, f1: f64) -> PyResult<(f64, f64, f64, bool)> {
    let spec = tr::ForcesSpec { k, l, transition_half_length, a, f1, ..tr::ForcesSpec::default() };
    let d = tr::forces_demo(&spec).map_err(to_py)?;
    Ok((d.amplitude_below, d.amplitude_above, d.fold_energy, d.folds_under_constant_load))
}

/// Parse a TOML configuration, run it and write the CSV files into `out`.
#[pyfunction]
fn run_config(text: &str, out: PathBuf) -> PyResult<Vec<PathBuf>> {
    let config = cli_io::parse_config(text).map_err(to_py)?;
    let outputs = cli_io::run_experiment(&config).map_err(to_py)?;
    cli_io::write_outputs(&out, &outputs).map_err(to_py)
}

#[pymodule]
fn pywirelattice(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", cli_io::VERSION)?;
    m.add_class::<PyLattice>()?;
    m.add_function(wrap_pyfunction!(bond_counts, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_table, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_study, m)?)?;
    m.add_function(wrap_pyfunction!(g2_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(j_eval, m)?)?;
    m.add_function(wrap_pyfunction!(j_min, m)?)?;
    m.add_function(wrap_pyfunction!(polar_project, m)?)?;
    m.add_function(wrap_pyfunction!(inversion_cost, m)?)?;
    m.add_function(wrap_pyfunction!(rigidity_probe, m)?)?;
    m.add_function(wrap_pyfunction!(forces_demo, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
