//! One output row per sweep point, written as CSV (17 significant digits) and
//! mirrored as JSON.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Numeric and asymptotic results at one gap. Empty cells are explained in `flags`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub delta: Option<f64>,
    pub m: u32,
    pub lambda_contact: Option<f64>,
    pub panels: Option<usize>,
    pub condition: Option<f64>,
    pub c11: Option<f64>,
    pub c12: Option<f64>,
    pub c21: Option<f64>,
    pub c22: Option<f64>,
    pub vol1: Option<f64>,
    pub vol2: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub c_star: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    pub omega_ratio: Option<f64>,
    pub omega1_asym: Option<f64>,
    pub omega2_asym: Option<f64>,
    pub c11_leading: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub max_grad_u1: Option<f64>,
    pub max_grad_u2: Option<f64>,
    pub residual1: Option<f64>,
    pub residual2: Option<f64>,
    pub oracle_c11: Option<f64>,
    pub oracle_c12: Option<f64>,
    pub oracle_c22: Option<f64>,
    pub oracle_dev: Option<f64>,
    pub valid: bool,
    pub flags: String,
}

pub const SWEEP_COLUMNS: &[(&str, &str)] = &[
    ("eps", "gap ε between the contact poles"),
    ("delta", "density contrast δ = ρ_b/ρ (null without materials)"),
    ("m", "contact order of the gap profile"),
    ("lambda_contact", "effective contact coefficient Λ, gap ≈ ε + Λ|x'|^m"),
    ("panels", "boundary panels (null for oracle rows)"),
    ("condition", "1-norm condition estimate of the single-layer matrix"),
    ("c11", "capacitance coefficient C11 = −∫_{∂D1} ψ1"),
    ("c12", "C12 = −∫_{∂D1} ψ2"),
    ("c21", "C21 = −∫_{∂D2} ψ1"),
    ("c22", "C22 = −∫_{∂D2} ψ2"),
    ("vol1", "volume |D1|"),
    ("vol2", "volume |D2|"),
    ("lambda1", "smaller eigenvalue of C̄ = (Cij/|Di|)"),
    ("lambda2", "larger eigenvalue of C̄"),
    ("c_star", "C_* = (C̄11 σ2 + C̄22 σ1)/(C̄11 + C̄22)"),
    ("sigma1", "row sum C̄11 + C̄12"),
    ("sigma2", "row sum C̄22 + C̄21"),
    ("omega1", "numeric ω1 = √(δ v_b² λ1)"),
    ("omega2", "numeric ω2 = √(δ v_b² λ2)"),
    ("omega_ratio", "ω2/ω1"),
    ("omega1_asym", "asymptotic ω1 from the numeric C_*"),
    ("omega2_asym", "asymptotic ω2 from the leading C11 term"),
    ("c11_leading", "leading term L_m/Λ^{2/m} ρ_m(ε)"),
    ("m1", "fitted constant M1 of C11 − leading term (whole sweep)"),
    ("m2", "fitted constant M2 of C22 − leading term (whole sweep)"),
    ("max_grad_u1", "max |∇u1| over the gap grid"),
    ("max_grad_u2", "max |∇u2| over the gap grid"),
    ("residual1", "max collocation residual of ψ1"),
    ("residual2", "max collocation residual of ψ2"),
    ("oracle_c11", "image-charge C11"),
    ("oracle_c12", "image-charge C12"),
    ("oracle_c22", "image-charge C22"),
    ("oracle_dev", "max relative deviation of the four BEM entries from the image charges"),
    ("valid", "false when a solve failed, was ill-conditioned or broke a sign condition"),
    ("flags", "';'-separated notes explaining invalid rows and empty cells"),
];

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

impl SweepRecord {
    pub fn failed(eps: f64, m: u32, reason: String) -> Self {
        SweepRecord {
            eps,
            m,
            valid: false,
            flags: reason,
            ..Default::default()
        }
    }

    pub fn flag(&mut self, note: impl AsRef<str>) {
        if !self.flags.is_empty() {
            self.flags.push(';');
        }
        self.flags.push_str(note.as_ref());
    }

    fn cells(&self) -> Vec<String> {
        let mut cells = vec![float(self.eps), opt(self.delta), self.m.to_string(), opt(self.lambda_contact)];
        cells.push(self.panels.map(|n| n.to_string()).unwrap_or_default());
        cells.extend(
            [
                self.condition,
                self.c11,
                self.c12,
                self.c21,
                self.c22,
                self.vol1,
                self.vol2,
                self.lambda1,
                self.lambda2,
                self.c_star,
                self.sigma1,
                self.sigma2,
                self.omega1,
                self.omega2,
                self.omega_ratio,
                self.omega1_asym,
                self.omega2_asym,
                self.c11_leading,
                self.m1,
                self.m2,
                self.max_grad_u1,
                self.max_grad_u2,
                self.residual1,
                self.residual2,
                self.oracle_c11,
                self.oracle_c12,
                self.oracle_c22,
                self.oracle_dev,
            ]
            .map(opt),
        );
        cells.push(self.valid.to_string());
        cells.push(self.flags.clone());
        cells
    }
}

/// A table with a fixed header; every float cell uses 17 significant digits.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn from_records(records: &[SweepRecord]) -> Self {
        Table {
            header: SWEEP_COLUMNS.iter().map(|(c, _)| c.to_string()).collect(),
            rows: records.iter().map(SweepRecord::cells).collect(),
        }
    }

    pub fn write<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()
    }
}

pub fn print_schema(columns: &[(&str, &str)]) {
    println!("column,description");
    for (name, doc) in columns {
        println!("{name},\"{doc}\"");
    }
}

pub fn json_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Write the CSV to `out` (or stdout) and, with a path, the JSON mirror next to it.
pub fn emit<S: Serialize>(table: &Table, mirror: &S, out: Option<&Path>) -> io::Result<()> {
    match out {
        Some(path) => {
            table.write(std::fs::File::create(path)?)?;
            let json = serde_json::to_string_pretty(mirror).map_err(io::Error::other)?;
            std::fs::write(json_path(path), json + "\n")
        }
        None => table.write(io::stdout().lock()),
    }
}

/// Records from a CSV or JSON sweep file.
pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>, String> {
    let fail = |e: &dyn std::fmt::Display| format!("{}: {e}", path.display());
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).map_err(|e| fail(&e))?;
        return serde_json::from_str(&text).map_err(|e| fail(&e));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| fail(&e))?;
    reader
        .deserialize()
        .collect::<Result<Vec<SweepRecord>, _>>()
        .map_err(|e| fail(&e))
}
