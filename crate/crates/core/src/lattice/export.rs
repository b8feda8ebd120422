use std::fmt::Write;

use super::Lattice;

fn header(lattice: &Lattice, out: &mut String) {
    let g = &lattice.geometry;
    writeln!(out, "{} {} {} {} {} {}", g.n, g.k, g.l, g.lambda, g.rho, g.kind.as_str()).unwrap();
}

fn bonds(lattice: &Lattice, out: &mut String) {
    writeln!(out, "bonds {}", lattice.bonds.len()).unwrap();
    for b in &lattice.bonds {
        writeln!(out, "{} {} {}", b.i, b.j, b.class.as_str()).unwrap();
    }
}

/// Plain-text dump: `N k L lambda rho kind`, then `nodes <count>` followed by
/// `index x_1 .. x_N species`, then `bonds <count>` followed by `i j class`.
pub fn export_lattice(lattice: &Lattice) -> String {
    let mut out = String::new();
    header(lattice, &mut out);
    writeln!(out, "nodes {}", lattice.len()).unwrap();
    for (i, node) in lattice.nodes.iter().enumerate() {
        write!(out, "{i}").unwrap();
        for c in &node.x {
            write!(out, " {c}").unwrap();
        }
        writeln!(out, " {}", node.species.as_str()).unwrap();
    }
    bonds(lattice, &mut out);
    out
}

/// Same layout as [`export_lattice`], with deformed positions appended to each node line.
pub fn export_deformation(lattice: &Lattice, u: &[f64]) -> String {
    let n = lattice.dim();
    let mut out = String::new();
    header(lattice, &mut out);
    writeln!(out, "nodes {}", lattice.len()).unwrap();
    for (i, node) in lattice.nodes.iter().enumerate() {
        write!(out, "{i}").unwrap();
        for c in &node.x {
            write!(out, " {c}").unwrap();
        }
        write!(out, " {}", node.species.as_str()).unwrap();
        for c in &u[i * n..(i + 1) * n] {
            write!(out, " {c}").unwrap();
        }
        out.push('\n');
    }
    bonds(lattice, &mut out);
    out
}
