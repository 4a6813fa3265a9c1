//! The volume map `lambda -> V(lambda)` at `s = 1` and its inversion.

use std::cell::Cell;

use rayon::prelude::*;
use serde::Serialize;

use crate::background::BackgroundFields;
use crate::bvp::SolveControls;
use crate::diagnostics::{compute_volume, identity_suite, SuiteTolerances};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::system::{GravSolution, GravitatingSolver};

/// `points` values spaced evenly in `ln lambda` between the two ends.
pub fn log_grid(lambda_min: f64, lambda_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(lambda_min > 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) {
        return Err(Error::Config(format!(
            "lambda range [{lambda_min}, {lambda_max}] must satisfy 0 < min < max"
        )));
    }
    if points < 2 {
        return Err(Error::Config(format!("a sweep needs at least 2 points, got {points}")));
    }
    let (a, b) = (lambda_min.ln(), lambda_max.ln());
    let step = (b - a) / (points - 1) as f64;
    Ok((0..points)
        .map(|k| match k {
            0 => lambda_min,
            k if k == points - 1 => lambda_max,
            k => (a + step * k as f64).exp(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeRow {
    pub lambda: f64,
    pub volume: f64,
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub residual: f64,
    /// `|c - (N - l - tau V / 4)|`.
    pub c_volume_residual: f64,
    pub q11_center: f64,
    pub suite_ok: bool,
}

impl VolumeRow {
    pub fn from_solution(sol: &GravSolution) -> Result<Self> {
        let report = identity_suite(sol, &SuiteTolerances::default())?;
        Ok(Self {
            lambda: sol.lambda(),
            volume: report.v_out,
            c: report.c,
            a: report.a,
            b: report.b,
            residual: sol.residual_norm,
            c_volume_residual: report.residuals.get("c_volume").copied().unwrap_or(f64::NAN),
            q11_center: report.q11_0,
            suite_ok: report.consistent(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<VolumeRow>,
    /// Rows that needed a warm-started continuation from a neighbour.
    pub warm_started: Vec<f64>,
}

impl SweepTable {
    /// Whether `V` increases as `lambda` decreases across the smallest decade
    /// of the sweep. An observation only.
    pub fn increasing_toward_zero(&self) -> bool {
        let Some(first) = self.rows.first() else {
            return false;
        };
        let cutoff = first.lambda * 10.0;
        self.rows
            .windows(2)
            .filter(|w| w[1].lambda <= cutoff)
            .all(|w| w[0].volume > w[1].volume)
    }
}

/// Solves at every grid value. Rows are independent direct solves from the
/// background, run in parallel; a value whose direct solve fails is redone
/// serially by continuation in `lambda` from its nearest solved neighbour.
pub fn sweep_lambda(
    params: &ModelParams,
    bg: &BackgroundFields,
    grid: &[f64],
    controls: &SolveControls,
) -> Result<SweepTable> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) || !(grid[0] > 0.0) {
        return Err(Error::Config("lambda grid must be positive and strictly increasing".into()));
    }
    let direct: Vec<Option<GravSolution>> = grid
        .par_iter()
        .map(|&lambda| {
            let p = params.with_lambda(lambda).ok()?;
            let solver = GravitatingSolver::new(&p, bg, *controls).ok()?;
            solver.solve().ok().map(|(sol, _)| sol)
        })
        .collect();
    let mut sols = direct;
    let mut warm_started = Vec::new();
    for k in 0..grid.len() {
        if sols[k].is_some() {
            continue;
        }
        let nearest = (0..grid.len())
            .filter(|&j| sols[j].is_some())
            .min_by(|&i, &j| {
                let d = |m: usize| (grid[m].ln() - grid[k].ln()).abs();
                d(i).total_cmp(&d(j))
            });
        let Some(j) = nearest else {
            return Err(Error::ContinuationStuck {
                last_good: f64::NAN,
                target: grid[k],
                reason: "no grid value could be solved from the background".into(),
            });
        };
        let from = sols[j].as_ref().expect("neighbour is solved");
        let solver = GravitatingSolver::new(&params.with_lambda(grid[k])?, bg, *controls)?;
        let sol = solver
            .continue_lambda(from, grid[k])
            .map_err(|e| Error::ContinuationStuck {
                last_good: grid[j],
                target: grid[k],
                reason: e.to_string(),
            })?;
        warm_started.push(grid[k]);
        sols[k] = Some(sol);
    }
    let rows = sols
        .par_iter()
        .map(|s| VolumeRow::from_solution(s.as_ref().expect("all rows solved")))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows, warm_started })
}

/// Controls for [`find_lambda_for_volume`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeSearch {
    /// Stop when `|V - target|` falls below this.
    pub tol: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_bisections: usize,
}

impl Default for VolumeSearch {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            lambda_min: 1e-6,
            lambda_max: 1e6,
            max_bisections: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeSolution {
    pub lambda: f64,
    pub volume: f64,
    pub solution: GravSolution,
    /// Number of solves spent on the scan and the bisection.
    pub evaluations: usize,
}

struct Probe {
    lambda: f64,
    volume: f64,
    sol: GravSolution,
}

impl Probe {
    fn into_solution(self, evaluations: usize) -> VolumeSolution {
        VolumeSolution {
            lambda: self.lambda,
            volume: self.volume,
            solution: self.sol,
            evaluations,
        }
    }
}

/// Finds `lambda` with `V(lambda) = target` by a decade scan from
/// `lambda = 1` followed by bisection in `ln lambda`. Every solve is warm
/// started from the nearest solution already computed.
pub fn find_lambda_for_volume(
    params: &ModelParams,
    bg: &BackgroundFields,
    target: f64,
    controls: &SolveControls,
    search: &VolumeSearch,
) -> Result<VolumeSolution> {
    let (lo, hi) = params.admissible_interval();
    if !(target > lo && target < hi) {
        return Err(Error::Domain(format!(
            "target volume {target} is not inside the admissible interval ({lo}, {hi})"
        )));
    }
    let evaluations = Cell::new(0);
    let eval = |lambda: f64, from: Option<&GravSolution>| -> Result<Probe> {
        evaluations.set(evaluations.get() + 1);
        let p = params.with_lambda(lambda)?;
        let solver = GravitatingSolver::new(&p, bg, *controls)?;
        let sol = match from.map(|f| solver.continue_lambda(f, lambda)) {
            Some(Ok(sol)) => sol,
            _ => solver.solve()?.0,
        };
        let volume = compute_volume(&sol)?;
        Ok(Probe { lambda, volume, sol })
    };

    let start = eval(1.0f64.clamp(search.lambda_min, search.lambda_max), None)?;
    let mut bracket = None;
    'scan: for factor in [10.0, 0.1] {
        let mut prev = Probe {
            lambda: start.lambda,
            volume: start.volume,
            sol: start.sol.clone(),
        };
        loop {
            if (prev.volume - target).abs() < search.tol {
                bracket = Some((prev, None));
                break 'scan;
            }
            let next_lambda = prev.lambda * factor;
            if next_lambda > search.lambda_max * (1.0 + 1e-12)
                || next_lambda < search.lambda_min * (1.0 - 1e-12)
            {
                break;
            }
            let next = eval(next_lambda, Some(&prev.sol))?;
            if (next.volume - target) * (prev.volume - target) <= 0.0 {
                bracket = Some((prev, Some(next)));
                break 'scan;
            }
            prev = next;
        }
    }
    let (mut left, right) = bracket.ok_or_else(|| {
        Error::SearchFailure(format!(
            "V(lambda) - {target} keeps one sign for lambda in [{}, {}]",
            search.lambda_min, search.lambda_max
        ))
    })?;
    let Some(mut right) = right else {
        return Ok(left.into_solution(evaluations.get()));
    };
    for _ in 0..search.max_bisections {
        if (left.volume - target).abs() < search.tol {
            return Ok(left.into_solution(evaluations.get()));
        }
        if (right.volume - target).abs() < search.tol {
            return Ok(right.into_solution(evaluations.get()));
        }
        let mid_lambda = (left.lambda * right.lambda).sqrt();
        let mid = eval(mid_lambda, Some(&left.sol))?;
        if (mid.volume - target) * (left.volume - target) <= 0.0 {
            right = mid;
        } else {
            left = mid;
        }
    }
    Err(Error::SearchFailure(format!(
        "bisection did not reach |V - {target}| < {} in {} steps",
        search.tol, search.max_bisections
    )))
}
