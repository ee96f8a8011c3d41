//! x-extrema of grid paths, the position `b_x` and the slope decomposition.
//!
//! Ties on the grid go to the earliest index attaining the running extreme.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::environment::EnvironmentPath;
use crate::error::{domain, Error, Result};
use crate::fluctuation::SlopeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Min,
    Max,
}

impl fmt::Display for ExtremumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Min => "min",
            Self::Max => "max",
        })
    }
}

/// An x-extremum of a sequence, by grid index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridExtremum {
    pub index: usize,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// An x-extremum of an environment path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremaRecord {
    pub position: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// The path between consecutive x-extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub kind: SlopeKind,
    pub length: f64,
    pub height: f64,
    pub start_position: f64,
    /// Offset from the central slope: 0 for the slope containing the origin,
    /// positive to the right.
    pub offset: i64,
    pub is_central: bool,
    pub is_boundary_partial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Unknown,
    Up,
    Down,
}

/// Single left-to-right pass that confirms x-extrema as soon as the path has
/// moved `level` away from the running candidate.
///
/// The first confirmation has no witness on its left and is not an
/// x-extremum of the sequence; [`sweep_extrema`] drops it.
#[derive(Debug, Clone)]
pub struct Sweep {
    level: f64,
    state: State,
    min: (f64, usize),
    max: (f64, usize),
    next: usize,
    firings: usize,
}

impl Sweep {
    pub fn new(level: f64) -> Self {
        Self {
            level,
            state: State::Unknown,
            min: (f64::INFINITY, 0),
            max: (f64::NEG_INFINITY, 0),
            next: 0,
            firings: 0,
        }
    }

    /// Number of confirmations so far, including the first.
    pub fn firings(&self) -> usize {
        self.firings
    }

    pub fn push(&mut self, v: f64) -> Option<GridExtremum> {
        let i = self.next;
        self.next += 1;
        let x = self.level;
        let fired = match self.state {
            State::Unknown => {
                if v < self.min.0 {
                    self.min = (v, i);
                }
                if v > self.max.0 {
                    self.max = (v, i);
                }
                if v >= self.min.0 + x {
                    Some(self.confirm_min(v, i))
                } else if v <= self.max.0 - x {
                    Some(self.confirm_max(v, i))
                } else {
                    None
                }
            }
            State::Up => {
                if v > self.max.0 {
                    self.max = (v, i);
                    None
                } else if v <= self.max.0 - x {
                    Some(self.confirm_max(v, i))
                } else {
                    None
                }
            }
            State::Down => {
                if v < self.min.0 {
                    self.min = (v, i);
                    None
                } else if v >= self.min.0 + x {
                    Some(self.confirm_min(v, i))
                } else {
                    None
                }
            }
        };
        if fired.is_some() {
            self.firings += 1;
        }
        fired
    }

    fn confirm_min(&mut self, v: f64, i: usize) -> GridExtremum {
        let (value, index) = self.min;
        self.state = State::Up;
        self.max = (v, i);
        GridExtremum { index, value, kind: ExtremumKind::Min }
    }

    fn confirm_max(&mut self, v: f64, i: usize) -> GridExtremum {
        let (value, index) = self.max;
        self.state = State::Down;
        self.min = (v, i);
        GridExtremum { index, value, kind: ExtremumKind::Max }
    }
}

fn check_level(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain(format!("extrema level must be positive, got {x}")));
    }
    Ok(())
}

/// x-extrema of a sequence, in index order.
pub fn sweep_extrema(values: &[f64], x: f64) -> Result<Vec<GridExtremum>> {
    check_level(x)?;
    let mut sweep = Sweep::new(x);
    let mut out: Vec<GridExtremum> = values.iter().filter_map(|&v| sweep.push(v)).collect();
    if out.is_empty() {
        return Err(Error::InsufficientPath("no excursion of the requested size"));
    }
    out.remove(0);
    Ok(out)
}

/// x-extrema of a path, with positions relative to the origin.
pub fn find_x_extrema(path: &EnvironmentPath, x: f64) -> Result<Vec<ExtremaRecord>> {
    let (values, origin) = path.combined();
    Ok(sweep_extrema(&values, x)?
        .into_iter()
        .map(|e| ExtremaRecord {
            position: path.position(e.index, origin),
            value: e.value,
            kind: e.kind,
        })
        .collect())
}

fn neighbors(records: &[ExtremaRecord]) -> Result<(usize, usize)> {
    let split = records.partition_point(|r| r.position <= 0.0);
    if split == 0 || split == records.len() {
        return Err(Error::InsufficientPath("extrema do not enclose the origin"));
    }
    Ok((split - 1, split))
}

/// `b_x`: `x_0` if it is an x-minimum, otherwise `x_1`, where `x_0 <= 0 < x_1`
/// are the x-extrema next to the origin.
pub fn compute_b(path: &EnvironmentPath, x: f64) -> Result<f64> {
    b_from_extrema(&find_x_extrema(path, x)?)
}

/// [`compute_b`] from precomputed extrema.
pub fn b_from_extrema(records: &[ExtremaRecord]) -> Result<f64> {
    let (i0, i1) = neighbors(records)?;
    let chosen = if records[i0].kind == ExtremumKind::Min {
        records[i0]
    } else {
        records[i1]
    };
    assert_eq!(chosen.kind, ExtremumKind::Min, "extrema must alternate");
    Ok(chosen.position)
}

/// Slopes between consecutive x-extrema, plus the partially observed slopes
/// at both ends of the path.
pub fn slope_decomposition(path: &EnvironmentPath, x: f64) -> Result<Vec<SlopeRecord>> {
    slopes_from_extrema(path, &find_x_extrema(path, x)?)
}

/// [`slope_decomposition`] from precomputed extrema of `path`.
pub fn slopes_from_extrema(path: &EnvironmentPath, records: &[ExtremaRecord]) -> Result<Vec<SlopeRecord>> {
    let first = records
        .first()
        .ok_or(Error::InsufficientPath("fewer than one confirmed extremum"))?;
    let last = records.last().unwrap_or(first);
    let (lo, start_value) = path.left_end();
    let (hi, end_value) = path.right_end();
    // Index of the first extremum to the right of the origin.
    let split = records.partition_point(|r| r.position <= 0.0) as i64;
    let kind_into = |r: &ExtremaRecord| match r.kind {
        ExtremumKind::Min => SlopeKind::Downward,
        ExtremumKind::Max => SlopeKind::Upward,
    };
    let mut slopes = Vec::with_capacity(records.len() + 1);
    let mut push = |kind, from: f64, to: f64, dv: f64, offset: i64, partial| {
        slopes.push(SlopeRecord {
            kind,
            length: to - from,
            height: dv.abs(),
            start_position: from,
            offset,
            is_central: offset == 0,
            is_boundary_partial: partial,
        });
    };
    push(kind_into(first), lo, first.position, first.value - start_value, -split, true);
    for (j, pair) in records.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        push(kind_into(&b), a.position, b.position, b.value - a.value, j as i64 + 1 - split, false);
    }
    let tail_kind = kind_into(last).opposite();
    push(
        tail_kind,
        last.position,
        hi,
        end_value - last.value,
        records.len() as i64 - split,
        true,
    );
    slopes.retain(|s| s.length > 0.0 || !s.is_boundary_partial);
    Ok(slopes)
}

/// Detection level that offsets the grid bias of x-extrema.
///
/// Grid sampling misses the running maximum and minimum by about
/// `beta h^{1/a}` each, with `beta = -zeta(1 - 1/a) E(xi^+)` and
/// `E(xi^+) = Gamma(1 - 1/a) sin(pi/a) / pi` for the standardized increment.
pub fn continuity_corrected_level(a: f64, h: f64, x: f64) -> Result<f64> {
    use crate::special::{gamma, riemann_zeta};
    check_level(x)?;
    if !(a > 1.0 && a <= 2.0) || !(h > 0.0 && h.is_finite()) {
        return Err(domain(format!("need a in (1, 2] and h > 0, got a = {a}, h = {h}")));
    }
    let s = 1.0 - 1.0 / a;
    let positive_mean = gamma(s)? * (std::f64::consts::PI / a).sin() / std::f64::consts::PI;
    let beta = -riemann_zeta(s)? * positive_mean;
    let level = x - 2.0 * beta * h.powf(1.0 / a);
    if level <= 0.0 {
        return Err(domain(format!("grid step {h} is too coarse for level {x}")));
    }
    Ok(level)
}

/// Exhaustive check of the x-extremum definition, for testing the sweep.
pub mod oracle {
    use super::{ExtremumKind, GridExtremum};

    // Index i is an x-minimum when the nearest points on either side lying at
    // least x above it exist, everything strictly between them and i on the
    // left is above w[i], and nothing on the right is below it.
    fn is_extremum(values: &[f64], i: usize, x: f64, kind: ExtremumKind) -> bool {
        let v = values[i];
        let (witness, beats_left, beats_right): (fn(f64, f64, f64) -> bool, fn(f64, f64) -> bool, fn(f64, f64) -> bool) =
            match kind {
                ExtremumKind::Min => (|w, v, x| w >= v + x, |w, v| w > v, |w, v| w >= v),
                ExtremumKind::Max => (|w, v, x| w <= v - x, |w, v| w < v, |w, v| w <= v),
            };
        let left = values[..i].iter().rev().find(|&&w| witness(w, v, x) || !beats_left(w, v));
        let right = values[i + 1..].iter().find(|&&w| witness(w, v, x) || !beats_right(w, v));
        matches!(left, Some(&w) if witness(w, v, x)) && matches!(right, Some(&w) if witness(w, v, x))
    }

    /// All indices satisfying the definition directly, in index order.
    pub fn brute_force_extrema(values: &[f64], x: f64) -> Vec<GridExtremum> {
        let mut out = Vec::new();
        for i in 0..values.len() {
            for kind in [ExtremumKind::Min, ExtremumKind::Max] {
                if is_extremum(values, i, x, kind) {
                    out.push(GridExtremum { index: i, value: values[i], kind });
                }
            }
        }
        out
    }
}
