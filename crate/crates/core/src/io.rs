//! Run configuration and the CSV / JSON artifacts.
//!
//! Numbers are written with 17 significant digits so every file reads back
//! bit-exactly and identical runs produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::background::BackgroundFields;
use crate::bvp::SolveControls;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::params::{validate_params, ModelParams, RawParams};
use crate::system::GravSolution;

pub const SOLUTION_COLUMNS: [&str; 7] = ["t", "q11", "x", "q22", "psi", "psiprime", "coeff"];
pub const BACKGROUND_COLUMNS: [&str; 8] = ["t", "q11", "x", "q22", "psi", "detg0", "u0", "u0prime"];
pub const PROFILE_COLUMNS: [&str; 8] = ["t", "q11", "x", "q22", "psi", "f", "K", "normphi2"];
pub const VOLUME_COLUMNS: [&str; 9] = [
    "lambda",
    "V",
    "c",
    "a",
    "b",
    "residual",
    "c_volume_residual",
    "q11_0",
    "suite_ok",
];

/// Parsed `key = value` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: RawParams,
    pub half_width: f64,
    pub nodes: usize,
    pub tol_newton: f64,
    pub tol_bc: f64,
}

impl RunConfig {
    pub fn new(params: RawParams) -> Self {
        Self {
            params,
            half_width: 40.0,
            nodes: 2001,
            tol_newton: 1e-10,
            tol_bc: 1e-6,
        }
    }

    /// Parses the text of a configuration file. `N`, `l`, `tau` and `V0` are
    /// required; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", k + 1)))?;
            let key = key.trim();
            if seen.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key}", k + 1)));
            }
        }
        let num = |key: &str| -> Result<Option<f64>> {
            seen.get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Config(format!("{key} = {v} is not a number")))
                })
                .transpose()
        };
        let int = |key: &str| -> Result<Option<i64>> {
            seen.get(key)
                .map(|v| {
                    v.parse::<i64>()
                        .map_err(|_| Error::Config(format!("{key} = {v} is not an integer")))
                })
                .transpose()
        };
        let need = |key: &str| Error::Config(format!("missing key {key}"));
        const KEYS: [&str; 9] = ["N", "l", "tau", "V0", "lambda", "T", "nodes", "tol_newton", "tol_bc"];
        if let Some(key) = seen.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key {key}")));
        }
        let mut cfg = RunConfig::new(RawParams::new(
            int("N")?.ok_or_else(|| need("N"))?,
            int("l")?.ok_or_else(|| need("l"))?,
            num("tau")?.ok_or_else(|| need("tau"))?,
            num("V0")?.ok_or_else(|| need("V0"))?,
        ));
        if let Some(v) = num("lambda")? {
            cfg.params.lambda = v;
        }
        if let Some(v) = num("T")? {
            cfg.half_width = v;
        }
        if let Some(v) = int("nodes")? {
            cfg.nodes = usize::try_from(v)
                .map_err(|_| Error::Config(format!("nodes = {v} must be positive")))?;
        }
        if let Some(v) = num("tol_newton")? {
            cfg.tol_newton = v;
        }
        if let Some(v) = num("tol_bc")? {
            cfg.tol_bc = v;
        }
        if !(cfg.tol_bc > 0.0) {
            return Err(Error::Config(format!("tol_bc = {} must be > 0", cfg.tol_bc)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        validate_params(&self.params)
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::uniform(self.half_width, self.nodes)
    }

    pub fn controls(&self) -> Result<SolveControls> {
        let c = SolveControls {
            tol_newton: self.tol_newton,
            ..SolveControls::default()
        };
        c.validate()?;
        Ok(c)
    }
}

/// Formats a number with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV table with the given header.
pub fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a numeric CSV table whose header must equal `header`.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let found: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(Error::format(
            path,
            format!("expected columns {header:?}, found {found:?}"),
        ));
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::format(path, format!("row {}: {s:?} is not a number", k + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("checked is_io_error"),
        }
    } else {
        Error::format(path, e.to_string())
    }
}

pub fn write_solution(path: &Path, sol: &GravSolution) -> Result<()> {
    let q = &sol.q;
    let rows = (0..sol.mesh.len()).map(|i| {
        [
            sol.mesh.t(i),
            q.q11[i],
            q.x[i],
            q.q22[i],
            sol.psi[i],
            sol.psip[i],
            sol.coeff[i],
        ]
        .map(fmt_num)
    });
    write_table(path, &SOLUTION_COLUMNS, rows)
}

pub fn write_background(path: &Path, bg: &BackgroundFields) -> Result<()> {
    let q = &bg.q0;
    let rows = (0..bg.mesh.len()).map(|i| {
        [
            bg.mesh.t(i),
            q.q11[i],
            q.x[i],
            q.q22[i],
            bg.psi0[i],
            bg.detg0[i],
            bg.u0[i],
            bg.u0prime[i],
        ]
        .map(fmt_num)
    });
    write_table(path, &BACKGROUND_COLUMNS, rows)
}

/// Columns of `sol.csv` read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTable {
    pub t: Vec<f64>,
    pub q11: Vec<f64>,
    pub x: Vec<f64>,
    pub q22: Vec<f64>,
    pub psi: Vec<f64>,
    pub psiprime: Vec<f64>,
    pub coeff: Vec<f64>,
}

impl SolutionTable {
    pub fn read(path: &Path) -> Result<Self> {
        let rows = read_table(path, &SOLUTION_COLUMNS)?;
        if rows.len() < 5 {
            return Err(Error::format(path, format!("only {} rows", rows.len())));
        }
        let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
        Ok(Self {
            t: col(0),
            q11: col(1),
            x: col(2),
            q22: col(3),
            psi: col(4),
            psiprime: col(5),
            coeff: col(6),
        })
    }

    /// The uniform mesh the table was written on.
    pub fn mesh(&self, path: &Path) -> Result<Mesh> {
        let m = self.t.len();
        let mesh = Mesh::uniform(-self.t[0], m)?;
        let h = mesh.spacing();
        if (self.t[m - 1] - mesh.half_width()).abs() > 1e-9 * h
            || self.t.iter().enumerate().any(|(i, &t)| (t - mesh.t(i)).abs() > 1e-9 * h)
        {
            return Err(Error::format(path, "t column is not a symmetric uniform grid"));
        }
        Ok(mesh)
    }

    /// Rebuilds the solution. `lambda_s` is recovered from the coefficient
    /// column at the centre node.
    pub fn to_solution(&self, params: &ModelParams, path: &Path) -> Result<GravSolution> {
        let mesh = self.mesh(path)?;
        let ic = mesh.center();
        let lambda_s = self.coeff[ic]
            * (2.0 * params.alpha() * self.q11[ic] + self.psi[ic] / params.nf()).exp();
        GravSolution::from_nodal(params, &mesh, &self.q11, &self.x, &self.psi, lambda_s)
    }
}

/// Path of the parameter file written next to a solution file.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("params.json")
}

/// Parameter record stored beside every solution file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: RunConfig,
    pub lambda: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults_and_overrides() {
        let cfg = RunConfig::parse("N = 3\nl=1\n# comment\ntau = 1.0\nV0 = 7\nnodes = 801\n").unwrap();
        assert_eq!(cfg.params.n, 3);
        assert_eq!(cfg.nodes, 801);
        assert_eq!(cfg.half_width, 40.0);
        assert_eq!(cfg.params.lambda, 1.0);
        assert_eq!(cfg.tol_bc, 1e-6);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let base = "N=3\nl=1\ntau=1\nV0=7\n";
        assert!(matches!(RunConfig::parse(&format!("{base}alpha=0.2\n")), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse(&format!("{base}N=4\n")), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("N=3\nl=1\ntau=1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse(&format!("{base}T=abc\n")), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("N 3\n"), Err(Error::Config(_))));
    }

    #[test]
    fn numbers_round_trip() {
        for v in [1.0 / 3.0, -2.5e-300, 7.078842840874267, f64::MIN_POSITIVE] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
