//! Time-series data model: ingestion, missing-row removal, standardisation
//! and differencing.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A labelled, finite, non-empty sequence of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    label: String,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!(
                "non-finite sample at index {pos}"
            )));
        }
        Ok(Self {
            label: label.into(),
            values,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation (divisor n - 1). Zero for a single sample.
    pub fn sample_std(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (n - 1) as f64).sqrt()
    }
}

/// Channels aligned on a common sample index. Missing cells are stored as NaN
/// until [`drop_missing`] removes the affected rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeries {
    labels: Vec<String>,
    columns: Vec<Vec<f64>>,
    index: Vec<usize>,
}

impl MultiSeries {
    pub fn new(labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let len = columns.first().map_or(0, Vec::len);
        let index = (0..len).collect();
        Self::with_index(labels, columns, index)
    }

    fn with_index(labels: Vec<String>, columns: Vec<Vec<f64>>, index: Vec<usize>) -> Result<Self> {
        if labels.len() != columns.len() {
            return Err(Error::Shape {
                expected: labels.len(),
                got: columns.len(),
            });
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::Schema(format!("duplicate channel label `{label}`")));
            }
        }
        for col in &columns {
            if col.len() != index.len() {
                return Err(Error::Shape {
                    expected: index.len(),
                    got: col.len(),
                });
            }
        }
        Ok(Self {
            labels,
            columns,
            index,
        })
    }

    pub fn from_series(series: &[TimeSeries]) -> Result<Self> {
        let labels = series.iter().map(|s| s.label().to_string()).collect();
        let columns = series.iter().map(|s| s.values().to_vec()).collect();
        Self::new(labels, columns)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_channels(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Original row ordinal of each surviving sample.
    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Schema(format!("no channel labelled `{label}`")))
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().flatten().any(|v| v.is_nan())
    }

    /// Returns the channel as a [`TimeSeries`]; fails if it still carries
    /// missing markers.
    pub fn channel(&self, label: &str) -> Result<TimeSeries> {
        let k = self.position(label)?;
        TimeSeries::new(label, self.columns[k].clone())
    }

    pub fn channels(&self) -> Result<Vec<TimeSeries>> {
        self.labels.iter().map(|l| self.channel(l)).collect()
    }

    /// Keeps only the named channels, in the order given.
    pub fn select(&self, labels: &[&str]) -> Result<MultiSeries> {
        let mut cols = Vec::with_capacity(labels.len());
        for l in labels {
            cols.push(self.columns[self.position(l)?].clone());
        }
        Self::with_index(
            labels.iter().map(|l| l.to_string()).collect(),
            cols,
            self.index.clone(),
        )
    }

    /// Row `t` across all channels.
    pub fn row(&self, t: usize) -> impl Iterator<Item = f64> + '_ {
        self.columns.iter().map(move |c| c[t])
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.labels)?;
        for t in 0..self.len() {
            w.write_record(self.row(t).map(format_cell))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn format_cell(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        v.to_string()
    }
}

fn parse_cell(raw: &str) -> Option<Option<f64>> {
    let cell = raw.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
        return Some(None);
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
}

/// Reads a CSV with a header row of channel labels.
///
/// `expected` lists labels that must be present; an empty slice accepts any
/// header. Every column of the file becomes a channel. Empty cells and `NaN`
/// (any case) are recorded as missing.
pub fn read_csv<R: Read>(reader: R, expected: &[&str]) -> Result<MultiSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    for want in expected {
        if !header.iter().any(|h| h == want) {
            return Err(Error::Schema(format!("missing header label `{want}`")));
        }
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = row + 2;
        if record.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (k, raw) in record.iter().enumerate() {
            let value = parse_cell(raw).ok_or_else(|| Error::Parse {
                line,
                message: format!("non-numeric cell `{raw}` in column `{}`", header[k]),
            })?;
            columns[k].push(value.unwrap_or(f64::NAN));
        }
    }
    MultiSeries::new(header, columns)
}

pub fn load_csv(path: impl AsRef<Path>, expected: &[&str]) -> Result<MultiSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), expected)
}

/// Removes every row with a missing cell in any channel. Order is preserved.
pub fn drop_missing(ms: &MultiSeries) -> Result<MultiSeries> {
    let keep: Vec<usize> = (0..ms.len())
        .filter(|&t| ms.row(t).all(|v| !v.is_nan()))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyData);
    }
    let columns = ms
        .columns
        .iter()
        .map(|c| keep.iter().map(|&t| c[t]).collect())
        .collect();
    let index = keep.iter().map(|&t| ms.index[t]).collect();
    MultiSeries::with_index(ms.labels.clone(), columns, index)
}

/// Rescales to zero mean and unit sample standard deviation.
pub fn standardize(ts: &TimeSeries) -> Result<TimeSeries> {
    if ts.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: ts.len(),
        });
    }
    let mean = ts.mean();
    let std = ts.sample_std();
    if std <= f64::EPSILON * mean.abs().max(1.0) {
        return Err(Error::DegenerateVariance(ts.label().to_string()));
    }
    let values = ts.values().iter().map(|v| (v - mean) / std).collect();
    TimeSeries::new(ts.label(), values)
}

/// Applies the first-difference operator `order` times.
pub fn difference(ts: &TimeSeries, order: usize) -> Result<TimeSeries> {
    if order >= ts.len() {
        return Err(Error::InsufficientData {
            needed: order + 1,
            got: ts.len(),
        });
    }
    let mut values = ts.values().to_vec();
    for _ in 0..order {
        values = values.windows(2).map(|w| w[1] - w[0]).collect();
    }
    TimeSeries::new(ts.label(), values)
}
