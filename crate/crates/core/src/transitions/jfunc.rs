use crate::error::{invalid, Result};

/// The four transition costs entering the reduced functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaValues {
    /// γ(I, J): a switch inside the reference phase.
    pub ij: f64,
    /// γ(λI, λJ): a switch inside the mismatched phase.
    pub lam_ij: f64,
    /// γ(I, λI): orientation kept across the interface.
    pub i_lam_i: f64,
    /// γ(I, λJ): orientation flipped at the interface.
    pub i_lam_j: f64,
}

/// Finite union of disjoint open intervals of (-L, L): the region where the
/// orientation is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationSet {
    pub l: f64,
    pub intervals: Vec<(f64, f64)>,
}

impl OrientationSet {
    pub fn new(l: f64, intervals: Vec<(f64, f64)>) -> Result<Self> {
        if !(l > 0.0) {
            return Err(invalid("L must be positive"));
        }
        let mut prev = -l;
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if !(a < b) || a < -l || b > l || (i > 0 && a <= prev) {
                return Err(invalid("intervals must be nonempty, sorted, disjoint and inside (-L, L)"));
            }
            prev = b;
        }
        Ok(Self { l, intervals })
    }

    /// Boundary points of the set inside (-L, L).
    pub fn boundary(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|&x| x > -self.l && x < self.l)
            .collect()
    }
}

pub fn j_eval(set: &OrientationSet, g: &GammaValues) -> f64 {
    let pts = set.boundary();
    let left = pts.iter().filter(|&&x| x < 0.0).count() as f64;
    let right = pts.iter().filter(|&&x| x > 0.0).count() as f64;
    let at_zero = pts.contains(&0.0);
    g.ij * left + g.lam_ij * right + if at_zero { g.i_lam_j } else { g.i_lam_i }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrientationLabel {
    Rot,
    Refl,
    Either,
}

impl OrientationLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            OrientationLabel::Rot => "rot",
            OrientationLabel::Refl => "refl",
            OrientationLabel::Either => "either",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileInterval {
    pub start: f64,
    pub end: f64,
    pub label: OrientationLabel,
}

/// Minimum of the reduced functional over sets compatible with a labelled profile.
///
/// The profile is cut at 0, so every segment lies on one side of the interface.
/// A dynamic program over segments tracks whether the set contains the end of
/// the current segment; a change of membership costs the switch price of the
/// side it happens on, or γ(I, λJ) at 0. Inside an `either` segment one switch
/// is allowed at the side price (more never help).
pub fn j_min(profile: &[ProfileInterval], g: &GammaValues) -> Result<(f64, OrientationSet)> {
    if profile.is_empty() {
        return Err(invalid("empty profile"));
    }
    let l = -profile[0].start;
    if !(l > 0.0) || (profile.last().unwrap().end - l).abs() > 1e-9 * l {
        return Err(invalid("profile must cover a symmetric interval (-L, L)"));
    }
    for w in profile.windows(2) {
        if (w[0].end - w[1].start).abs() > 1e-12 {
            return Err(invalid("profile intervals must be contiguous"));
        }
    }
    if profile.iter().any(|p| !(p.end > p.start)) {
        return Err(invalid("profile intervals must be nonempty"));
    }
    let mut segs: Vec<ProfileInterval> = Vec::new();
    for p in profile {
        if p.start < 0.0 && p.end > 0.0 {
            segs.push(ProfileInterval { end: 0.0, ..*p });
            segs.push(ProfileInterval { start: 0.0, ..*p });
        } else {
            segs.push(*p);
        }
    }
    let side_price = |s: &ProfileInterval| if s.end <= 0.0 { g.ij } else { g.lam_ij };
    let allowed = |s: &ProfileInterval, inside: bool| match s.label {
        OrientationLabel::Rot => inside,
        OrientationLabel::Refl => !inside,
        OrientationLabel::Either => true,
    };

    // cost[state], state = membership at the segment's right end; back-pointers
    // record (previous state, state at segment start).
    let inf = f64::INFINITY;
    let mut cost = [inf; 2];
    let mut back: Vec<[(usize, usize); 2]> = Vec::with_capacity(segs.len());
    for (idx, s) in segs.iter().enumerate() {
        let mut next = [inf; 2];
        let mut ptr = [(0, 0); 2];
        for end in 0..2 {
            for start in 0..2 {
                if !allowed(s, start == 1) || !allowed(s, end == 1) {
                    continue;
                }
                let inner = if start != end {
                    if s.label != OrientationLabel::Either {
                        continue;
                    }
                    side_price(s)
                } else {
                    0.0
                };
                let entry = if idx == 0 {
                    (0.0, 0)
                } else {
                    let at = s.start;
                    let mut best = (inf, 0);
                    for (prev, &c) in cost.iter().enumerate() {
                        let jump = if prev == start {
                            if at == 0.0 {
                                g.i_lam_i
                            } else {
                                0.0
                            }
                        } else if at == 0.0 {
                            g.i_lam_j
                        } else if at < 0.0 {
                            g.ij
                        } else {
                            g.lam_ij
                        };
                        if c + jump < best.0 {
                            best = (c + jump, prev);
                        }
                    }
                    best
                };
                let total = entry.0 + inner;
                if total < next[end] {
                    next[end] = total;
                    ptr[end] = (entry.1, start);
                }
            }
        }
        cost = next;
        back.push(ptr);
    }
    let (mut state, value) = if cost[0] <= cost[1] { (0, cost[0]) } else { (1, cost[1]) };
    if !value.is_finite() {
        return Err(invalid("profile admits no compatible orientation set"));
    }
    // Trace membership per segment: (start state, end state).
    let mut states = vec![(0usize, 0usize); segs.len()];
    for idx in (0..segs.len()).rev() {
        let (prev, start) = back[idx][state];
        states[idx] = (start, state);
        state = prev;
    }
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for (s, &(a, b)) in segs.iter().zip(&states) {
        // A switch inside a segment is placed at its midpoint.
        let pieces = if a == b { vec![(s.start, a)] } else { vec![(s.start, a), (0.5 * (s.start + s.end), b)] };
        for (x, inside) in pieces {
            match (inside == 1, open) {
                (true, None) => open = Some(x),
                (false, Some(st)) => {
                    intervals.push((st, x));
                    open = None;
                }
                _ => {}
            }
        }
    }
    if let Some(st) = open {
        intervals.push((st, l));
    }
    let set = OrientationSet::new(l, intervals)?;
    debug_assert!((j_eval(&set, g) - value).abs() <= 1e-9 * value.abs().max(1.0));
    Ok((value, set))
}
