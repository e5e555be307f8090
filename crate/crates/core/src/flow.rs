//! Branch tracking and signed crossing counts for one-parameter spectra.
//!
//! Crossings of the reference energy are counted positively when a branch
//! moves downward through it as `t` increases.

use crate::error::{Error, Result};

/// Spectrum inside a window at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub reference: f64,
    pub lower: f64,
    pub upper: f64,
    /// Ascending eigenvalues in `(lower, upper)`.
    pub roots: Vec<f64>,
    /// Localization centers aligned with `roots` (NaN when not available).
    pub centers: Vec<f64>,
    /// In-window eigenvalues excluded from tracking, with their centers.
    pub excluded: Vec<(f64, f64)>,
}

impl FlowSample {
    fn half_width(&self) -> f64 {
        (self.reference - self.lower).min(self.upper - self.reference)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub sign: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub samples: Vec<FlowSample>,
    /// Branch label of every root, aligned with `samples[i].roots`.
    pub branch_ids: Vec<Vec<usize>>,
    pub crossings: Vec<Crossing>,
    pub total: i64,
}

#[derive(Debug, Clone, Copy)]
pub struct TrackingOptions {
    /// Fraction of the half window treated as the crossing zone.
    pub central_fraction: f64,
    pub max_depth: usize,
}

impl Default for TrackingOptions {
    fn default() -> Self {
        Self { central_fraction: 0.8, max_depth: 14 }
    }
}

/// Mutual nearest-neighbour matching between two sorted root lists,
/// restricted to roots inside the central zone of either sample.
/// Returns `None` when the interval must be refined.
fn match_interval(a: &FlowSample, b: &FlowSample, opts: &TrackingOptions) -> Option<Vec<(usize, usize)>> {
    let hw = a.half_width().min(b.half_width());
    let central = |s: &FlowSample, r: f64| (r - s.reference).abs() < opts.central_fraction * s.half_width();
    let nearest = |x: f64, list: &[f64]| -> Option<usize> {
        list.iter()
            .enumerate()
            .min_by(|p, q| (p.1 - x).abs().total_cmp(&(q.1 - x).abs()))
            .map(|p| p.0)
    };
    let spacing = |list: &[f64], i: usize| -> f64 {
        let mut d = f64::INFINITY;
        if i > 0 {
            d = d.min(list[i] - list[i - 1]);
        }
        if i + 1 < list.len() {
            d = d.min(list[i + 1] - list[i]);
        }
        d
    };
    let mut pairs = Vec::new();
    for (i, &ra) in a.roots.iter().enumerate() {
        let j = match nearest(ra, &b.roots) {
            Some(j) => j,
            None if central(a, ra) => return None,
            None => continue,
        };
        if !central(a, ra) && !central(b, b.roots[j]) {
            continue;
        }
        if nearest(b.roots[j], &a.roots) != Some(i) {
            if central(a, ra) {
                return None;
            }
            continue;
        }
        let shift = (b.roots[j] - a.reference) - (ra - a.reference);
        let move_abs = (b.roots[j] - ra).abs().max(shift.abs());
        if move_abs > 0.25 * hw || move_abs > 0.3 * spacing(&a.roots, i).min(spacing(&b.roots, j)) {
            return None;
        }
        pairs.push((i, j));
    }
    for (j, &rb) in b.roots.iter().enumerate() {
        if central(b, rb) && !pairs.iter().any(|p| p.1 == j) {
            return None;
        }
    }
    Some(pairs)
}

fn crossing_sign(a: &FlowSample, ra: f64, b: &FlowSample, rb: f64) -> i64 {
    let da = ra - a.reference;
    let db = rb - b.reference;
    if da > 0.0 && db <= 0.0 {
        1
    } else if da <= 0.0 && db > 0.0 {
        -1
    } else {
        0
    }
}

/// Tracks the spectrum over `t_grid` (closed loop when the last point is `first + 2 pi`),
/// refining intervals where branches cannot be matched.
pub fn track<F>(mut sample: F, t_grid: &[f64], opts: TrackingOptions) -> Result<FlowTrace>
where
    F: FnMut(f64) -> Result<FlowSample>,
{
    let mut samples: Vec<FlowSample> = Vec::new();
    let mut links: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut crossings = Vec::new();
    let first = sample(t_grid[0])?;
    samples.push(first);
    for &t_next in &t_grid[1..] {
        let end = sample(t_next)?;
        let mut stack = vec![(end, 0usize)];
        while let Some((right, depth)) = stack.pop() {
            let left = samples.last().unwrap();
            match match_interval(left, &right, &opts) {
                Some(pairs) => {
                    for &(i, j) in &pairs {
                        let sign = crossing_sign(left, left.roots[i], &right, right.roots[j]);
                        if sign != 0 {
                            crossings.push(Crossing { t: 0.5 * (left.t + right.t), sign });
                        }
                    }
                    links.push(pairs);
                    samples.push(right);
                }
                None if depth < opts.max_depth => {
                    let mid = sample(0.5 * (left.t + right.t))?;
                    stack.push((right, depth + 1));
                    stack.push((mid, depth + 1));
                }
                None => return Err(Error::BranchTrackingAmbiguous { t: 0.5 * (left.t + right.t) }),
            }
        }
    }
    let branch_ids = label_branches(&samples, &links);
    let total = crossings.iter().map(|c| c.sign).sum();
    Ok(FlowTrace { samples, branch_ids, crossings, total })
}

fn label_branches(samples: &[FlowSample], links: &[Vec<(usize, usize)>]) -> Vec<Vec<usize>> {
    let mut next = 0;
    let mut ids: Vec<Vec<usize>> = Vec::with_capacity(samples.len());
    let fresh = |n: usize, next: &mut usize| -> Vec<usize> {
        (0..n)
            .map(|_| {
                *next += 1;
                *next - 1
            })
            .collect()
    };
    ids.push(fresh(samples[0].roots.len(), &mut next));
    for (k, pairs) in links.iter().enumerate() {
        let mut row: Vec<Option<usize>> = vec![None; samples[k + 1].roots.len()];
        for &(i, j) in pairs {
            row[j] = Some(ids[k][i]);
        }
        let row = row
            .into_iter()
            .map(|x| {
                x.unwrap_or_else(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        ids.push(row);
    }
    ids
}

impl FlowTrace {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "branch", "energy", "loc_center", "is_junction", "reference", "lower", "upper"])
            .map_err(crate::bloch::csv_err)?;
        for (s, ids) in self.samples.iter().zip(&self.branch_ids) {
            for (k, &e) in s.roots.iter().enumerate() {
                let center = s.centers.get(k).copied().unwrap_or(f64::NAN);
                w.write_record([
                    crate::bloch::fmt(s.t),
                    ids[k].to_string(),
                    crate::bloch::fmt(e),
                    crate::bloch::fmt(center),
                    "true".to_string(),
                    crate::bloch::fmt(s.reference),
                    crate::bloch::fmt(s.lower),
                    crate::bloch::fmt(s.upper),
                ])
                .map_err(crate::bloch::csv_err)?;
            }
            for &(e, center) in &s.excluded {
                w.write_record([
                    crate::bloch::fmt(s.t),
                    String::new(),
                    crate::bloch::fmt(e),
                    crate::bloch::fmt(center),
                    "false".to_string(),
                    crate::bloch::fmt(s.reference),
                    crate::bloch::fmt(s.lower),
                    crate::bloch::fmt(s.upper),
                ])
                .map_err(crate::bloch::csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Number of parameter values at which a branch meets the reference.
    pub fn crossing_events(&self) -> usize {
        self.crossings.len()
    }
}
