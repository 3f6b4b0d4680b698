//! Multi-process sampling designs and the within-process minimum distance `Δ`.
//!
//! Distances use the max norm. Points of different processes may coincide
//! (collocated designs); only within-process duplicates are rejected.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::covmodels::max_norm;
use crate::{Error, Result};

/// Consecutive rejections tolerated before a process is declared saturated.
pub const REJECTION_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    d: usize,
    processes: Vec<Vec<Vec<f64>>>,
    offsets: Vec<usize>,
}

impl Design {
    /// `processes[k][i]` is the i-th point of process k.
    pub fn new(d: usize, processes: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("dimension d must be ≥ 1".into()));
        }
        if processes.is_empty() {
            return Err(Error::Shape("a design needs at least one process".into()));
        }
        let mut offsets = Vec::with_capacity(processes.len() + 1);
        offsets.push(0);
        for (k, pts) in processes.iter().enumerate() {
            if pts.is_empty() {
                return Err(Error::Shape(format!("process {} has no points", k + 1)));
            }
            if let Some(bad) = pts.iter().find(|x| x.len() != d || x.iter().any(|v| !v.is_finite())) {
                return Err(Error::Shape(format!(
                    "process {} has point {bad:?}, expected {d} finite coordinates",
                    k + 1
                )));
            }
            offsets.push(offsets[k] + pts.len());
        }
        let design = Self { d, processes, offsets };
        min_distance(&design)?;
        Ok(design)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of processes.
    pub fn p(&self) -> usize {
        self.processes.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.processes.iter().map(Vec::len).collect()
    }

    /// `N₀ = 0, N₁, …, N_p`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// `N`.
    pub fn total(&self) -> usize {
        self.offsets[self.p()]
    }

    pub fn process(&self, k: usize) -> &[Vec<f64>] {
        &self.processes[k]
    }

    pub fn processes(&self) -> &[Vec<Vec<f64>>] {
        &self.processes
    }

    /// Process owning global index `a`.
    pub fn block_of(&self, a: usize) -> usize {
        self.offsets.partition_point(|&o| o <= a) - 1
    }

    /// `s_1, …, s_N`: all points concatenated in block order, with their process.
    pub fn points(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.processes
            .iter()
            .enumerate()
            .flat_map(|(k, pts)| pts.iter().map(move |x| (k, x.as_slice())))
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let processes = self
            .processes
            .iter()
            .map(|pts| pts.iter().map(|x| x.iter().map(|v| v * factor).collect()).collect())
            .collect();
        Self::new(self.d, processes)
    }

    /// Flat table: `process,index,x1,…,xd`, one row per point, indices 1-based,
    /// coordinates with 17 significant digits.
    pub fn to_table(&self) -> String {
        let mut out = String::from("process,index");
        for j in 1..=self.d {
            out.push_str(&format!(",x{j}"));
        }
        out.push('\n');
        for (k, pts) in self.processes.iter().enumerate() {
            for (i, x) in pts.iter().enumerate() {
                out.push_str(&format!("{},{}", k + 1, i + 1));
                for v in x {
                    out.push(',');
                    out.push_str(&crate::cli::report::format_float(*v));
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parses the table written by [`Design::to_table`]. Rows may come in any
    /// order; point indices must be 1..n_k within each process.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Config("empty design table".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 3 || cols[0] != "process" || cols[1] != "index" {
            return Err(Error::Config(format!("bad design table header `{header}`")));
        }
        let d = cols.len() - 2;
        let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != d + 2 {
                return Err(Error::Config(format!(
                    "design table row {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    d + 2
                )));
            }
            let parse_idx = |s: &str| {
                s.parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| Error::Config(format!("bad index `{s}` on row {}", lineno + 2)))
            };
            let k = parse_idx(fields[0])?;
            let i = parse_idx(fields[1])?;
            let x = fields[2..]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad coordinate `{s}` on row {}", lineno + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((k, i, x));
        }
        let p = rows.iter().map(|r| r.0).max().unwrap_or(0);
        let mut processes: Vec<Vec<Option<Vec<f64>>>> = vec![Vec::new(); p];
        for (k, i, x) in rows {
            let slot = &mut processes[k - 1];
            if slot.len() < i {
                slot.resize(i, None);
            }
            if slot[i - 1].replace(x).is_some() {
                return Err(Error::Config(format!("duplicate row for process {k}, index {i}")));
            }
        }
        let processes = processes
            .into_iter()
            .enumerate()
            .map(|(k, pts)| {
                pts.into_iter()
                    .enumerate()
                    .map(|(i, x)| x.ok_or_else(|| Error::Config(format!("missing process {}, index {}", k + 1, i + 1))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, processes)
    }
}

/// Process k gets the first `counts[k]` points of the lattice `spacing · ℤ^d_{≥0}`
/// in lexicographic order, shifted by `process_offsets[k]` (all zero when `None`).
pub fn make_grid_design(
    d: usize,
    counts: &[usize],
    spacing: f64,
    process_offsets: Option<&[Vec<f64>]>,
) -> Result<Design> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::Parameter(format!("spacing must be > 0, got {spacing}")));
    }
    if d == 0 {
        return Err(Error::Parameter("dimension d must be ≥ 1".into()));
    }
    if let Some(offs) = process_offsets {
        if offs.len() != counts.len() || offs.iter().any(|o| o.len() != d) {
            return Err(Error::Shape(format!(
                "need one {d}-dimensional offset per process ({} processes)",
                counts.len()
            )));
        }
    }
    let processes = counts
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            // Smallest side with side^d ≥ n.
            let mut side = (n as f64).powf(1.0 / d as f64).round().max(1.0) as usize;
            while side.pow(d as u32) < n {
                side += 1;
            }
            (0..n)
                .map(|mut idx| {
                    let mut x = vec![0.0; d];
                    for j in (0..d).rev() {
                        x[j] = (idx % side) as f64 * spacing;
                        idx /= side;
                    }
                    if let Some(offs) = process_offsets {
                        for (xj, oj) in x.iter_mut().zip(&offs[k]) {
                            *xj += oj;
                        }
                    }
                    x
                })
                .collect()
        })
        .collect();
    Design::new(d, processes)
}

/// Rejection sampling: uniform draws in the box `region` (one `(lo, hi)` per
/// axis), kept when at max-norm distance ≥ `delta` from every accepted point of
/// the same process. Deterministic for a fixed seed.
pub fn make_random_min_dist(
    d: usize,
    counts: &[usize],
    delta: f64,
    region: &[(f64, f64)],
    seed: u64,
) -> Result<Design> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Parameter(format!("delta must be > 0, got {delta}")));
    }
    if region.len() != d || d == 0 {
        return Err(Error::Shape(format!("region must give {d} intervals")));
    }
    if region.iter().any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::Parameter(format!("invalid region {region:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut processes = Vec::with_capacity(counts.len());
    for (k, &n) in counts.iter().enumerate() {
        let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut misses = 0usize;
        while accepted.len() < n {
            let x: Vec<f64> = region.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
            let clear = accepted
                .iter()
                .all(|y| x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) >= delta);
            if clear {
                accepted.push(x);
                misses = 0;
            } else {
                misses += 1;
                if misses >= REJECTION_BUDGET {
                    return Err(Error::Saturation {
                        process: k + 1,
                        accepted: accepted.len(),
                        requested: n,
                    });
                }
            }
        }
        processes.push(accepted);
    }
    Design::new(d, processes)
}

/// `Δ_k` per process; `None` marks a single-point process (no pairs to constrain).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinDistanceReport {
    pub per_process: Vec<Option<f64>>,
    /// Minimum over constrained processes; `None` when every process has one point.
    pub overall: Option<f64>,
}

/// Within-process minimum max-norm distance.
pub fn min_distance(design: &Design) -> Result<MinDistanceReport> {
    let per_process = design
        .processes
        .iter()
        .enumerate()
        .map(|(k, pts)| process_min_distance(k, pts))
        .collect::<Result<Vec<_>>>()?;
    let overall = per_process.iter().flatten().copied().reduce(f64::min);
    Ok(MinDistanceReport { per_process, overall })
}

fn process_min_distance(k: usize, pts: &[Vec<f64>]) -> Result<Option<f64>> {
    if pts.len() < 2 {
        return Ok(None);
    }
    // Sweep along the first coordinate; the max norm is ≥ the first-axis gap.
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]).then(a.cmp(&b)));
    let mut best = f64::INFINITY;
    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            if pts[b][0] - pts[a][0] >= best {
                break;
            }
            let diff: Vec<f64> = pts[a].iter().zip(&pts[b]).map(|(u, v)| u - v).collect();
            let dist = max_norm(&diff);
            if dist == 0.0 {
                let (first, second) = (a.min(b) + 1, a.max(b) + 1);
                return Err(Error::ZeroDistance {
                    process: k + 1,
                    first,
                    second,
                });
            }
            best = best.min(dist);
        }
    }
    Ok(Some(best))
}
