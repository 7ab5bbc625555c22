//! Finite-pool objectives loaded from CSV files.
//!
//! The file needs a header row, `d` feature columns and one trailing
//! objective column. Rows with a missing, unparsable or NaN field are rejected
//! with their line number.

use std::path::Path;

use log::info;

use crate::data::PoolSet;
use crate::error::{Error, Result};
use crate::space::SearchSpace;

/// Candidate set with a precomputed objective value for every candidate.
#[derive(Debug, Clone)]
pub struct PoolObjective {
    pub space: SearchSpace,
    pub pool: PoolSet,
    pub values: Vec<f64>,
    pub feature_names: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct PoolCsvOptions {
    /// Box the candidates must lie in; the bounding box of the candidates when absent.
    pub space: Option<SearchSpace>,
    /// Negate the objective column so that larger is better.
    pub maximize: bool,
}

impl PoolObjective {
    pub fn dims(&self) -> usize {
        self.space.dims()
    }

    /// Smallest objective value over the pool (the regret reference).
    pub fn best_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn value_of(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Value of the candidate equal to `x`, if any.
    pub fn lookup(&self, x: &[f64]) -> Option<f64> {
        self.pool
            .candidates()
            .iter()
            .position(|c| c.as_slice() == x)
            .map(|i| self.values[i])
    }
}

pub fn load_pool_csv(path: &Path, options: &PoolCsvOptions) -> Result<PoolObjective> {
    let file = std::fs::File::open(path)?;
    read_pool_csv(file, path, options)
}

/// Parses pool CSV from any reader; `path` is only used in error messages.
pub fn read_pool_csv<R: std::io::Read>(reader: R, path: &Path, options: &PoolCsvOptions) -> Result<PoolObjective> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(parse_err(1, "header needs at least one feature column and one objective column".into()));
    }
    let dims = header.len() - 1;
    let feature_names = header.iter().take(dims).map(str::to_owned).collect();

    let mut candidates = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != dims + 1 {
            return Err(parse_err(line, format!("expected {} fields, found {}", dims + 1, record.len())));
        }
        let mut row = Vec::with_capacity(dims + 1);
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("field {} (`{field}`) is not a number", k + 1)))?;
            if v.is_nan() {
                return Err(parse_err(line, format!("field {} is NaN", k + 1)));
            }
            if !v.is_finite() {
                return Err(parse_err(line, format!("field {} is not finite", k + 1)));
            }
            row.push(v);
        }
        let y = row.pop().expect("row has dims + 1 fields");
        values.push(if options.maximize { -y } else { y });
        candidates.push(row);
    }
    if candidates.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }

    let space = match &options.space {
        Some(space) => {
            if space.dims() != dims {
                return Err(Error::InvalidArgument(format!(
                    "pool has {dims} features but the search space has {} dimensions",
                    space.dims()
                )));
            }
            for (i, c) in candidates.iter().enumerate() {
                if !space.contains(c) {
                    // header is line 1
                    return Err(parse_err(i + 2, "candidate lies outside the search space".into()));
                }
            }
            space.clone()
        }
        None => bounding_box(&candidates),
    };
    let pool = PoolSet::new(&space, candidates)?;
    Ok(PoolObjective {
        space,
        pool,
        values,
        feature_names,
    })
}

/// Tight box around the candidates; constant features get a unit-width box.
fn bounding_box(candidates: &[Vec<f64>]) -> SearchSpace {
    let dims = candidates[0].len();
    let mut lower = vec![f64::INFINITY; dims];
    let mut upper = vec![f64::NEG_INFINITY; dims];
    for c in candidates {
        for k in 0..dims {
            lower[k] = lower[k].min(c[k]);
            upper[k] = upper[k].max(c[k]);
        }
    }
    for k in 0..dims {
        if lower[k] == upper[k] {
            info!("feature {} is constant; widening its bounds by 0.5 each side", k + 1);
            lower[k] -= 0.5;
            upper[k] += 0.5;
        }
    }
    SearchSpace::new(lower, upper).expect("bounding box of finite points is valid")
}
