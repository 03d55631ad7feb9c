//! File formats: CSV series, matrix directories and JSON metadata.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arbitrage::{Piece, Strategy};
use crate::error::{Error, Result};
use crate::hawkes::{Event, EventStream, HawkesSpec, Side};
use crate::kernels::{ImpactKernel, Provenance};
use crate::linalg::Mat;
use crate::observables::{ObservableSet, PricePath, Taper};
use crate::polymat::{LaurentMatrix, SpectralFactor};

/// Price dynamics attached to a simulation spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    pub lambda: Vec<Vec<f64>>,
    pub p0: Vec<f64>,
    #[serde(default = "default_interval")]
    pub interval: f64,
}

fn default_interval() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    #[serde(flatten)]
    pub hawkes: HawkesSpec,
    pub price: Option<PriceModel>,
}

pub fn rows_to_mat(rows: &[Vec<f64>]) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn read_spec(path: &Path) -> Result<SpecFile> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn write_spec(path: &Path, spec: &SpecFile) -> Result<()> {
    let text = toml::to_string(spec).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_events(path: &Path, stream: &EventStream) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "asset", "side", "size"])?;
    for e in &stream.events {
        w.write_record([
            e.time.to_string(),
            e.asset.to_string(),
            e.side.code().to_string(),
            e.size.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct EventRow {
    time: f64,
    asset: usize,
    side: String,
    size: f64,
}

/// Reads `time,asset,side,size`. The horizon defaults to the last event time.
pub fn read_events(path: &Path, horizon: Option<f64>) -> Result<EventStream> {
    let mut r = csv::Reader::from_path(path)?;
    let mut events = Vec::new();
    for row in r.deserialize() {
        let row: EventRow = row?;
        let side = Side::parse(&row.side)
            .ok_or_else(|| Error::InvalidInput(format!("unknown side '{}'", row.side)))?;
        if let Some(prev) = events.last().map(|e: &Event| e.time) {
            if row.time < prev {
                return Err(Error::InvalidInput(format!("event times not sorted at {}", row.time)));
            }
        }
        events.push(Event { time: row.time, asset: row.asset, side, size: row.size });
    }
    let last = events.last().map_or(0.0, |e| e.time);
    let horizon = horizon.unwrap_or(last);
    if horizon < last {
        return Err(Error::InvalidInput(format!("horizon {horizon} precedes the last event {last}")));
    }
    Ok(EventStream { events, horizon })
}

pub fn write_prices(path: &Path, prices: &PricePath) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "asset", "price"])?;
    for (t, row) in prices.times.iter().zip(&prices.prices) {
        for (i, p) in row.iter().enumerate() {
            w.write_record([t.to_string(), i.to_string(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct PriceRow {
    time: f64,
    asset: usize,
    price: f64,
}

/// Reads long-format `time,asset,price` into cross-sections. Each asset carries its
/// last observation forward; before its first observation it takes that first value.
pub fn read_prices(path: &Path) -> Result<PricePath> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<PriceRow> = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    if rows.is_empty() {
        return Ok(PricePath { times: vec![], prices: vec![] });
    }
    let d = rows.iter().map(|r| r.asset).max().unwrap() + 1;
    rows.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut first = vec![None; d];
    for r in &rows {
        if first[r.asset].is_none() {
            first[r.asset] = Some(r.price);
        }
    }
    let mut current: Vec<f64> = first
        .iter()
        .enumerate()
        .map(|(i, f)| f.ok_or_else(|| Error::InvalidInput(format!("asset {i} has no prices"))))
        .collect::<Result<_>>()?;
    let mut times = Vec::new();
    let mut prices = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let t = rows[i].time;
        while i < rows.len() && rows[i].time == t {
            current[rows[i].asset] = rows[i].price;
            i += 1;
        }
        times.push(t);
        prices.push(current.clone());
    }
    Ok(PricePath { times, prices })
}

pub fn write_matrix(path: &Path, m: &Mat) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Mat> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("{}: bad number '{s}': {e}", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    rows_to_mat(&rows)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ObservableMeta {
    delta: f64,
    tau_max: usize,
    taper: Taper,
    n_days: usize,
    n_bins: usize,
}

pub fn write_observables(dir: &Path, obs: &ObservableSet) -> Result<()> {
    ensure_dir(dir)?;
    write_matrix(&dir.join("sigma.csv"), &obs.sigma)?;
    write_matrix(&dir.join("omega_zero.csv"), &obs.omega_zero)?;
    write_matrix(&dir.join("omega_inf.csv"), &obs.omega_inf)?;
    for (k, m) in obs.omega.iter().enumerate() {
        write_matrix(&dir.join(format!("omega_lag_{k}.csv")), m)?;
    }
    write_json(
        &dir.join("metadata.json"),
        &ObservableMeta {
            delta: obs.delta,
            tau_max: obs.tau_max(),
            taper: obs.taper,
            n_days: obs.n_days,
            n_bins: obs.n_bins,
        },
    )
}

pub fn read_observables(dir: &Path) -> Result<ObservableSet> {
    let meta: ObservableMeta = read_json(&dir.join("metadata.json"))?;
    let omega = (0..=meta.tau_max)
        .map(|k| read_matrix(&dir.join(format!("omega_lag_{k}.csv"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(ObservableSet {
        delta: meta.delta,
        taper: meta.taper,
        sigma: read_matrix(&dir.join("sigma.csv"))?,
        omega_zero: read_matrix(&dir.join("omega_zero.csv"))?,
        omega_inf: read_matrix(&dir.join("omega_inf.csv"))?,
        omega,
        n_days: meta.n_days,
        n_bins: meta.n_bins,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LaurentMeta {
    lo: isize,
    hi: isize,
}

pub fn write_laurent(dir: &Path, m: &LaurentMatrix) -> Result<()> {
    ensure_dir(dir)?;
    for (i, c) in m.coeffs.iter().enumerate() {
        write_matrix(&dir.join(format!("lag_{}.csv", m.lo + i as isize)), c)?;
    }
    write_json(&dir.join("metadata.json"), &LaurentMeta { lo: m.lo, hi: m.hi() })
}

pub fn read_laurent(dir: &Path) -> Result<LaurentMatrix> {
    let meta: LaurentMeta = read_json(&dir.join("metadata.json"))?;
    let coeffs = (meta.lo..=meta.hi)
        .map(|k| read_matrix(&dir.join(format!("lag_{k}.csv"))))
        .collect::<Result<Vec<_>>>()?;
    if coeffs.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no coefficients", dir.display())));
    }
    Ok(LaurentMatrix::new(meta.lo, coeffs))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FactorMeta {
    residual: f64,
    offdiag_mass: f64,
    paraunitary_residual: f64,
    max_root: f64,
    outer_residual: f64,
    outer_iterations: usize,
    sbr2_iterations: usize,
    grid: usize,
}

pub fn write_factor(dir: &Path, f: &SpectralFactor) -> Result<()> {
    ensure_dir(dir)?;
    write_laurent(&dir.join("h"), &f.h)?;
    write_laurent(&dir.join("outer"), &f.outer)?;
    let mut w = csv::WriterBuilder::new().flexible(true).has_headers(false).from_path(dir.join("d.csv"))?;
    for p in &f.d {
        w.write_record(p.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    write_json(
        &dir.join("factor.json"),
        &FactorMeta {
            residual: f.residual,
            offdiag_mass: f.offdiag_mass,
            paraunitary_residual: f.paraunitary_residual,
            max_root: f.max_root,
            outer_residual: f.outer_residual,
            outer_iterations: f.outer_iterations,
            sbr2_iterations: f.sbr2_iterations,
            grid: f.grid,
        },
    )
}

pub fn read_factor(dir: &Path) -> Result<SpectralFactor> {
    let meta: FactorMeta = read_json(&dir.join("factor.json"))?;
    let h = read_laurent(&dir.join("h"))?;
    let outer = read_laurent(&dir.join("outer"))?;
    let mut r = csv::ReaderBuilder::new().flexible(true).has_headers(false).from_path(dir.join("d.csv"))?;
    let mut d = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        d.push(
            rec.iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::InvalidInput(e.to_string())))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    let n = d.len();
    let len = d.iter().map(Vec::len).max().unwrap_or(1);
    let dl = LaurentMatrix::new(
        0,
        (0..len)
            .map(|k| Mat::from_fn(n, n, |i, j| if i == j { d[i].get(k).copied().unwrap_or(0.0) } else { 0.0 }))
            .collect(),
    );
    Ok(SpectralFactor {
        l: h.paraconj().mul(&dl),
        h,
        d,
        residual: meta.residual,
        offdiag_mass: meta.offdiag_mass,
        paraunitary_residual: meta.paraunitary_residual,
        max_root: meta.max_root,
        outer,
        outer_residual: meta.outer_residual,
        outer_iterations: meta.outer_iterations,
        sbr2_iterations: meta.sbr2_iterations,
        grid: meta.grid,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KernelMeta {
    delta: f64,
    tau_max: usize,
    grid: usize,
    provenance: Provenance,
    #[serde(default)]
    diagnostics: BTreeMap<String, serde_json::Value>,
}

/// Writes a kernel directory; `scale` multiplies all values (e.g. basis-point display).
pub fn write_kernel(
    dir: &Path,
    k: &ImpactKernel,
    diagnostics: BTreeMap<String, serde_json::Value>,
    scale: f64,
) -> Result<()> {
    ensure_dir(dir)?;
    write_matrix(&dir.join("k0.csv"), &(&k.k0 * scale))?;
    write_matrix(&dir.join("lambda.csv"), &(&k.lambda * scale))?;
    for (t, m) in k.values.iter().enumerate() {
        write_matrix(&dir.join(format!("kernel_lag_{t}.csv")), &(m * scale))?;
    }
    let mut diagnostics = diagnostics;
    if scale != 1.0 {
        diagnostics.insert("display_scale".into(), serde_json::json!(scale));
    }
    write_json(
        &dir.join("metadata.json"),
        &KernelMeta { delta: k.delta, tau_max: k.tau_max(), grid: k.grid, provenance: k.provenance, diagnostics },
    )
}

pub fn read_kernel(dir: &Path) -> Result<ImpactKernel> {
    let meta: KernelMeta = read_json(&dir.join("metadata.json"))?;
    let values = (0..=meta.tau_max)
        .map(|t| read_matrix(&dir.join(format!("kernel_lag_{t}.csv"))))
        .collect::<Result<Vec<_>>>()?;
    let k0 = read_matrix(&dir.join("k0.csv"))?;
    let lambda = read_matrix(&dir.join("lambda.csv"))?;
    let d = k0.nrows();
    if k0.ncols() != d || lambda.shape() != (d, d) || values.iter().any(|m| m.shape() != (d, d)) {
        return Err(Error::InvalidInput(format!("{}: inconsistent matrix shapes", dir.display())));
    }
    if !(meta.delta > 0.0) {
        return Err(Error::InvalidInput("kernel bin width must be positive".into()));
    }
    Ok(ImpactKernel { delta: meta.delta, values, k0, lambda, provenance: meta.provenance, grid: meta.grid })
}

pub fn write_strategy(path: &Path, s: &Strategy) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["asset", "start", "end", "rate"])?;
    for (i, ps) in s.pieces.iter().enumerate() {
        for p in ps {
            w.write_record([i.to_string(), p.start.to_string(), p.end.to_string(), p.rate.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct PieceRow {
    asset: usize,
    start: f64,
    end: f64,
    rate: f64,
}

pub fn read_strategy(path: &Path, d: usize) -> Result<Strategy> {
    let mut r = csv::Reader::from_path(path)?;
    let mut pieces = vec![Vec::new(); d];
    let mut horizon: f64 = 0.0;
    for row in r.deserialize() {
        let row: PieceRow = row?;
        if row.asset >= d {
            return Err(Error::InvalidInput(format!("strategy asset {} out of range", row.asset)));
        }
        horizon = horizon.max(row.end);
        pieces[row.asset].push(Piece { start: row.start, end: row.end, rate: row.rate });
    }
    Ok(Strategy { horizon, pieces })
}

pub fn write_predictions(path: &Path, t0: f64, delta: f64, path_values: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "asset", "price_hat"])?;
    for (k, row) in path_values.iter().enumerate() {
        let t = t0 + k as f64 * delta;
        for (i, p) in row.iter().enumerate() {
            w.write_record([t.to_string(), i.to_string(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_report<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value)
}
