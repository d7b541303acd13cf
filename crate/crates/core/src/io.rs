//! CSV and config-file formats.
//!
//! Reals are written with Rust's shortest round-trip formatting, so a
//! written file reads back bit for bit. An empty field is a missing value
//! (`NaN` in value columns).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::population::{Design, FinitePopulation, ProbabilitySample, UnitRecord};

fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

struct Columns {
    index: BTreeMap<String, usize>,
    z: Vec<usize>,
}

impl Columns {
    fn new(headers: &csv::StringRecord) -> Self {
        let index: BTreeMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        let mut z: Vec<(u32, usize)> = index
            .iter()
            .filter_map(|(h, &i)| h.strip_prefix('z').and_then(|k| k.parse::<u32>().ok()).map(|k| (k, i)))
            .collect();
        z.sort_unstable();
        Self {
            index,
            z: z.into_iter().map(|(_, i)| i).collect(),
        }
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Parse(format!("missing column `{name}`")))
    }

    fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

fn field(rec: &csv::StringRecord, col: usize) -> &str {
    rec.get(col).unwrap_or("").trim()
}

fn parse_opt<T: std::str::FromStr>(rec: &csv::StringRecord, col: Option<usize>, line: usize) -> Result<Option<T>> {
    match col.map(|c| field(rec, c)) {
        None | Some("") => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("line {line}: cannot parse `{s}`"))),
    }
}

fn parse_req<T: std::str::FromStr>(rec: &csv::StringRecord, col: usize, name: &str, line: usize) -> Result<T> {
    parse_opt(rec, Some(col), line)?.ok_or_else(|| Error::Parse(format!("line {line}: `{name}` is empty")))
}

fn parse_z(rec: &csv::StringRecord, cols: &Columns, line: usize) -> Result<Vec<u32>> {
    cols.z
        .iter()
        .map(|&c| parse_req(rec, c, "z", line))
        .collect()
}

/// Reads `id,y,y_star,z1..zK,delta,stratum`; ids must run `1..=N`.
pub fn read_population<R: Read>(input: R) -> Result<FinitePopulation> {
    let mut rdr = csv::Reader::from_reader(input);
    let cols = Columns::new(rdr.headers()?);
    let (id, y, delta) = (cols.require("id")?, cols.require("y")?, cols.require("delta")?);
    let (y_star, stratum) = (cols.get("y_star"), cols.get("stratum"));
    let mut units = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        units.push(UnitRecord {
            id: parse_req(&rec, id, "id", line)?,
            y: parse_opt(&rec, Some(y), line)?.unwrap_or(f64::NAN),
            y_star: parse_opt(&rec, y_star, line)?,
            z: parse_z(&rec, &cols, line)?,
            delta: parse_req(&rec, delta, "delta", line)?,
            stratum: parse_opt(&rec, stratum, line)?,
        });
    }
    FinitePopulation::from_units(&units)
}

pub fn write_population<W: Write>(output: W, pop: &FinitePopulation) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    let k = pop.z().len();
    let mut header = vec!["id".to_string(), "y".into(), "y_star".into()];
    header.extend((1..=k).map(|j| format!("z{j}")));
    header.extend(["delta".to_string(), "stratum".into()]);
    w.write_record(&header)?;
    for u in pop.units() {
        let mut row = vec![u.id.to_string(), fmt_real(u.y), u.y_star.map(fmt_real).unwrap_or_default()];
        row.extend(u.z.iter().map(u32::to_string));
        row.push(u.delta.to_string());
        row.push(u.stratum.map(|s| s.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Sample-A file: `id,d,pi,y,y_star,delta` plus optional `z1..zK`.
#[derive(Debug, Clone)]
pub struct SampleFile {
    pub ids: Vec<usize>,
    pub d: Vec<f64>,
    pub pi: Vec<f64>,
    pub y: Vec<f64>,
    pub y_star: Vec<f64>,
    pub delta: Vec<u32>,
    pub z: Vec<Vec<u32>>,
}

impl SampleFile {
    /// SRS when `population` is given and every `π_i` equals `n/N`;
    /// otherwise a Poisson design (independent inclusions).
    pub fn sample(&self, population: Option<usize>) -> Result<ProbabilitySample> {
        let n = self.ids.len();
        let design = match population {
            Some(pop) if self.pi.iter().all(|&p| (p - n as f64 / pop as f64).abs() <= 1e-12) => Design::Srs {
                population: pop,
                sample: n,
            },
            _ => Design::Poisson,
        };
        ProbabilitySample::with_weights(self.ids.clone(), self.d.clone(), self.pi.clone(), design)
    }

    pub fn has_y_star(&self) -> bool {
        self.y_star.iter().any(|v| !v.is_nan())
    }
}

pub fn read_sample<R: Read>(input: R) -> Result<SampleFile> {
    let mut rdr = csv::Reader::from_reader(input);
    let cols = Columns::new(rdr.headers()?);
    let id = cols.require("id")?;
    let (d, pi) = (cols.get("d"), cols.get("pi"));
    if d.is_none() && pi.is_none() {
        return Err(Error::Parse("sample needs a `d` or `pi` column".into()));
    }
    let (y, y_star, delta) = (cols.get("y"), cols.get("y_star"), cols.get("delta"));
    let mut out = SampleFile {
        ids: Vec::new(),
        d: Vec::new(),
        pi: Vec::new(),
        y: Vec::new(),
        y_star: Vec::new(),
        delta: Vec::new(),
        z: vec![Vec::new(); cols.z.len()],
    };
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        out.ids.push(parse_req(&rec, id, "id", line)?);
        let di: Option<f64> = parse_opt(&rec, d, line)?;
        let p: Option<f64> = parse_opt(&rec, pi, line)?;
        let (di, p) = match (di, p) {
            (Some(di), Some(p)) => (di, p),
            (Some(di), None) => (di, 1.0 / di),
            (None, Some(p)) => (1.0 / p, p),
            (None, None) => return Err(Error::Parse(format!("line {line}: no weight"))),
        };
        out.d.push(di);
        out.pi.push(p);
        out.y.push(parse_opt(&rec, y, line)?.unwrap_or(f64::NAN));
        out.y_star.push(parse_opt(&rec, y_star, line)?.unwrap_or(f64::NAN));
        out.delta.push(parse_opt(&rec, delta, line)?.unwrap_or(0));
        for (col, v) in out.z.iter_mut().zip(parse_z(&rec, &cols, line)?) {
            col.push(v);
        }
    }
    Ok(out)
}

pub fn write_sample<W: Write>(output: W, s: &SampleFile) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    let mut header = vec!["id", "d", "pi", "y", "y_star", "delta"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend((1..=s.z.len()).map(|j| format!("z{j}")));
    w.write_record(&header)?;
    for i in 0..s.ids.len() {
        let mut row = vec![
            s.ids[i].to_string(),
            fmt_real(s.d[i]),
            fmt_real(s.pi[i]),
            fmt_real(s.y[i]),
            fmt_real(s.y_star[i]),
            s.delta[i].to_string(),
        ];
        row.extend(s.z.iter().map(|col| col[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Big-data file: `id` plus any of `y`, `y_star`, `z1..zK`, and an optional
/// `delta` multiplicity (default 1).
#[derive(Debug, Clone)]
pub struct BigDataFile {
    pub ids: Vec<usize>,
    pub multiplicity: Vec<u32>,
    pub y: Vec<f64>,
    pub y_star: Vec<f64>,
    pub z: Vec<Vec<u32>>,
}

impl BigDataFile {
    pub fn n_b(&self) -> f64 {
        self.multiplicity.iter().map(|&m| f64::from(m)).sum()
    }

    fn total(&self, col: &[f64], what: &str) -> Result<f64> {
        let mut t = 0.0;
        for (&v, &m) in col.iter().zip(&self.multiplicity) {
            if v.is_nan() {
                return Err(Error::Missing(format!("{what} in big data")));
            }
            t += f64::from(m) * v;
        }
        Ok(t)
    }

    pub fn total_y(&self) -> Result<f64> {
        self.total(&self.y, "y")
    }

    pub fn total_y_star(&self) -> Result<f64> {
        self.total(&self.y_star, "y_star")
    }
}

pub fn read_big_data<R: Read>(input: R) -> Result<BigDataFile> {
    let mut rdr = csv::Reader::from_reader(input);
    let cols = Columns::new(rdr.headers()?);
    let id = cols.require("id")?;
    let (y, y_star, delta) = (cols.get("y"), cols.get("y_star"), cols.get("delta"));
    let mut out = BigDataFile {
        ids: Vec::new(),
        multiplicity: Vec::new(),
        y: Vec::new(),
        y_star: Vec::new(),
        z: vec![Vec::new(); cols.z.len()],
    };
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        out.ids.push(parse_req(&rec, id, "id", line)?);
        out.multiplicity.push(parse_opt(&rec, delta, line)?.unwrap_or(1));
        out.y.push(parse_opt(&rec, y, line)?.unwrap_or(f64::NAN));
        out.y_star.push(parse_opt(&rec, y_star, line)?.unwrap_or(f64::NAN));
        for (col, v) in out.z.iter_mut().zip(parse_z(&rec, &cols, line)?) {
            col.push(v);
        }
    }
    if out.ids.is_empty() {
        return Err(Error::EmptyBigData);
    }
    Ok(out)
}

/// `id,d,w`.
pub fn write_weights<W: Write>(output: W, ids: &[usize], d: &[f64], w: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(output);
    out.write_record(["id", "d", "w"])?;
    for ((id, d), w) in ids.iter().zip(d).zip(w) {
        out.write_record([id.to_string(), fmt_real(*d), fmt_real(*w)])?;
    }
    out.flush()?;
    Ok(())
}

/// `id,p_hat,delta_hat`.
pub fn write_labels<W: Write>(output: W, ids: &[usize], p_hat: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(output);
    out.write_record(["id", "p_hat", "delta_hat"])?;
    for (id, &p) in ids.iter().zip(p_hat) {
        out.write_record([id.to_string(), fmt_real(p), u8::from(p > 0.5).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Flat settings from either a JSON object or `key = value` lines
/// (`#` starts a comment). Keys use `-` or `_` interchangeably.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let norm = |k: &str| k.trim().replace('_', "-");
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("config JSON must be an object".into()))?;
        return obj
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(_) | serde_json::Value::Bool(_) => v.to_string(),
                    _ => return Err(Error::Parse(format!("config key `{k}` must be a scalar"))),
                };
                Ok((norm(k), s))
            })
            .collect();
    }
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", n + 1)))?;
        out.insert(norm(k), v.trim().trim_matches('"').to_string());
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config(&std::fs::read_to_string(path)?)
}
