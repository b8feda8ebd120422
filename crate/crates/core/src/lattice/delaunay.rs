//! Planar Delaunay triangulation: lexicographic sweep followed by Lawson flips.
//!
//! An edge is flipped only when the opposite vertex lies strictly inside the
//! circumcircle (beyond a relative tolerance), so cocircular ties keep the
//! diagonal produced by the lexicographic sweep.

use std::collections::HashMap;

use crate::error::{construction, Result};

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` is inside the circumcircle of the counter-clockwise triangle `abc`.
fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Counter-clockwise triangles (as point indices) of a Delaunay triangulation.
/// Fails on fewer than three points, duplicate points, or a collinear set.
pub fn delaunay_triangles(points: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 3 {
        return Err(construction("Delaunay triangulation needs at least three points"));
    }
    if points.iter().any(|q| !(q[0].is_finite() && q[1].is_finite())) {
        return Err(construction("non-finite point in Delaunay input"));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let scale = dist2(lo, hi).max(1e-300);
    let eps = 1e-12 * scale;
    // Abscissae equal up to rounding are treated as equal so the sweep order
    // stays consistent with exact arithmetic on lattice input.
    let snap = 1e-9 * scale.sqrt();
    let column = |i: usize| ((points[i][0] - lo[0]) / snap).round() as i64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        column(i).cmp(&column(j)).then(points[i][1].partial_cmp(&points[j][1]).unwrap()).then(i.cmp(&j))
    });
    for w in order.windows(2) {
        if dist2(points[w[0]], points[w[1]]) <= 1e-24 * scale {
            return Err(construction("duplicate points in Delaunay input"));
        }
    }

    let p = |i: usize| points[i];
    let mut m = 2;
    while m < n && orient(p(order[0]), p(order[1]), p(order[m])).abs() <= eps {
        m += 1;
    }
    if m == n {
        return Err(construction("degenerate Delaunay input: all points are collinear"));
    }
    let chain = &order[..m];
    let q = order[m];
    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut hull: Vec<usize>;
    if orient(p(chain[0]), p(chain[1]), p(q)) > 0.0 {
        for w in chain.windows(2) {
            tris.push([w[0], w[1], q]);
        }
        hull = chain.to_vec();
        hull.push(q);
    } else {
        for w in chain.windows(2) {
            tris.push([w[1], w[0], q]);
        }
        hull = chain.iter().rev().copied().collect();
        hull.push(q);
    }

    for &v in &order[m + 1..] {
        let h = hull.len();
        let visible: Vec<bool> = (0..h).map(|i| orient(p(hull[i]), p(hull[(i + 1) % h]), p(v)) < -eps).collect();
        let start = (0..h)
            .find(|&i| visible[i] && !visible[(i + h - 1) % h])
            .ok_or_else(|| construction("sweep point not outside the current hull"))?;
        let mut count = 0;
        while visible[(start + count) % h] {
            let a = hull[(start + count) % h];
            let b = hull[(start + count + 1) % h];
            tris.push([b, a, v]);
            count += 1;
        }
        // Vertices strictly inside the visible chain leave the hull.
        let mut next = Vec::with_capacity(h + 1);
        let end = (start + count) % h;
        let mut i = end;
        loop {
            next.push(hull[i]);
            if i == start {
                break;
            }
            i = (i + 1) % h;
        }
        next.push(v);
        hull = next;
    }

    lawson(points, &mut tris);

    for t in tris.iter_mut() {
        let r = (0..3).min_by_key(|&i| t[i]).unwrap();
        t.rotate_left(r);
    }
    tris.retain(|t| orient(p(t[0]), p(t[1]), p(t[2])) > eps);
    tris.sort();
    Ok(tris)
}

fn lawson(points: &[[f64; 2]], tris: &mut [[usize; 3]]) {
    let p = |i: usize| points[i];
    let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for e in 0..3 {
            edges.entry(key(tri[e], tri[(e + 1) % 3])).or_default().push(t);
        }
    }
    let mut stack: Vec<(usize, usize)> = edges.keys().copied().collect();
    stack.sort();
    let mut guard = 0usize;
    let limit = 50 * tris.len() * tris.len() + 1000;
    while let Some(e) = stack.pop() {
        guard += 1;
        if guard > limit {
            break;
        }
        let Some(ts) = edges.get(&e) else { continue };
        if ts.len() != 2 {
            continue;
        }
        let (t1, t2) = (ts[0], ts[1]);
        // Orient t1 as (a, b, c) with edge a->b, and take d opposite in t2.
        let tri1 = tris[t1];
        let r = (0..3).find(|&i| key(tri1[i], tri1[(i + 1) % 3]) == e).unwrap();
        let (a, b, c) = (tri1[r], tri1[(r + 1) % 3], tri1[(r + 2) % 3]);
        let d = *tris[t2].iter().find(|&&x| x != a && x != b).unwrap();
        let s = [dist2(p(a), p(b)), dist2(p(b), p(c)), dist2(p(c), p(a)), dist2(p(a), p(d)), dist2(p(b), p(d))]
            .into_iter()
            .fold(0.0, f64::max);
        if incircle(p(a), p(b), p(c), p(d)) <= 1e-10 * s * s {
            continue;
        }
        if orient(p(a), p(d), p(c)) <= 0.0 || orient(p(d), p(b), p(c)) <= 0.0 {
            continue;
        }
        tris[t1] = [a, d, c];
        tris[t2] = [d, b, c];
        edges.remove(&e);
        edges.insert(key(c, d), vec![t1, t2]);
        for (edge, from, to) in [(key(a, d), t2, t1), (key(b, c), t1, t2)] {
            if let Some(list) = edges.get_mut(&edge) {
                for t in list.iter_mut() {
                    if *t == from {
                        *t = to;
                    }
                }
            }
        }
        stack.extend([key(a, d), key(d, b), key(b, c), key(c, a)]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_circle(points: &[[f64; 2]], tris: &[[usize; 3]]) -> bool {
        tris.iter().all(|t| {
            (0..points.len())
                .filter(|i| !t.contains(i))
                .all(|i| incircle(points[t[0]], points[t[1]], points[t[2]], points[i]) <= 1e-9)
        })
    }

    #[test]
    fn square_grid() {
        let pts: Vec<[f64; 2]> = (0..4).flat_map(|i| (0..3).map(move |j| [i as f64, j as f64])).collect();
        let tris = delaunay_triangles(&pts).unwrap();
        assert_eq!(tris.len(), 2 * 3 * 2);
        assert!(empty_circle(&pts, &tris));
        let again = delaunay_triangles(&pts).unwrap();
        assert_eq!(tris, again);
    }

    #[test]
    fn scattered_points_are_delaunay() {
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64;
                [(t * 0.618).fract() * 5.0 + 0.01 * t, (t * 0.414).fract() * 3.0]
            })
            .collect();
        let tris = delaunay_triangles(&pts).unwrap();
        assert!(empty_circle(&pts, &tris));
        let area: f64 = tris.iter().map(|t| orient(pts[t[0]], pts[t[1]], pts[t[2]]) / 2.0).sum();
        assert!(area > 0.0);
        // Euler: T = 2n - 2 - h for n points with h hull vertices.
        assert!(tris.len() <= 2 * pts.len() - 5);
    }

    #[test]
    fn collinear_input_rejected() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        assert!(delaunay_triangles(&pts).is_err());
        assert!(delaunay_triangles(&[[0.0, 0.0], [1.0, 0.0]]).is_err());
    }
}
