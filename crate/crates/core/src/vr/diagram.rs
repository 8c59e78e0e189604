use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub birth: f64,
    pub death: f64,
    /// Never killed below the filtration's maximum scale; `death` then equals
    /// that scale.
    pub essential: bool,
}

impl Interval {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Persistence intervals for homology dimensions `0..max_dim`, built from
/// simplices of dimension at most `max_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    max_dim: usize,
    max_scale: f64,
    dims: Vec<Vec<Interval>>,
}

impl PersistenceDiagram {
    /// Intervals are sorted into a canonical order per dimension.
    pub fn new(max_dim: usize, max_scale: f64, mut dims: Vec<Vec<Interval>>) -> Self {
        dims.resize(max_dim, Vec::new());
        for d in &mut dims {
            d.sort_by(|a, b| {
                a.birth
                    .total_cmp(&b.birth)
                    .then(a.death.total_cmp(&b.death))
                    .then(a.essential.cmp(&b.essential))
            });
        }
        Self {
            max_dim,
            max_scale,
            dims,
        }
    }

    /// Highest simplex dimension of the source filtration.
    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn max_scale(&self) -> f64 {
        self.max_scale
    }

    /// Homology dimensions covered, `0..max_dim`.
    pub fn homology_dims(&self) -> usize {
        self.dims.len()
    }

    pub fn intervals(&self, k: usize) -> &[Interval] {
        self.dims.get(k).map_or(&[], Vec::as_slice)
    }

    /// Persistences in dimension `k`, longest first.
    pub fn persistences(&self, k: usize) -> Vec<f64> {
        let mut p: Vec<f64> = self.intervals(k).iter().map(Interval::persistence).collect();
        p.sort_by(|a, b| b.total_cmp(a));
        p
    }

    /// Same diagram without essential classes.
    pub fn without_essential(&self) -> Self {
        let dims = self
            .dims
            .iter()
            .map(|d| d.iter().filter(|i| !i.essential).copied().collect())
            .collect();
        Self::new(self.max_dim, self.max_scale, dims)
    }

    /// Betti numbers at `scale`: intervals with `birth <= scale < death`;
    /// essential classes count once born.
    pub fn betti_at(&self, scale: f64) -> Result<Vec<usize>> {
        if !(scale >= 0.0 && scale <= self.max_scale) {
            return Err(Error::Parameter(format!(
                "scale {scale} outside [0, {}]",
                self.max_scale
            )));
        }
        Ok(self
            .dims
            .iter()
            .map(|d| {
                d.iter()
                    .filter(|i| i.birth <= scale && (i.essential || scale < i.death))
                    .count()
            })
            .collect())
    }

    /// Rows `dimension,birth,death,essential`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dimension", "birth", "death", "essential"])?;
        for (k, d) in self.dims.iter().enumerate() {
            for i in d {
                w.write_record([
                    k.to_string(),
                    i.birth.to_string(),
                    i.death.to_string(),
                    i.essential.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads the format of [`write_csv`](Self::write_csv). The maximum scale
    /// is taken as the largest death, `max_dim` as one past the highest
    /// dimension present unless `max_dim` is given.
    pub fn read_csv<R: Read>(reader: R, max_dim: Option<usize>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut dims: Vec<Vec<Interval>> = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = row + 2;
            let bad = |m: &str| Error::Parse {
                line,
                message: m.to_string(),
            };
            if rec.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let k: usize = rec[0].trim().parse().map_err(|_| bad("bad dimension"))?;
            let birth: f64 = rec[1].trim().parse().map_err(|_| bad("bad birth"))?;
            let death: f64 = rec[2].trim().parse().map_err(|_| bad("bad death"))?;
            let essential: bool = rec[3].trim().parse().map_err(|_| bad("bad essential flag"))?;
            if dims.len() <= k {
                dims.resize(k + 1, Vec::new());
            }
            dims[k].push(Interval {
                birth,
                death,
                essential,
            });
        }
        let max_scale = dims
            .iter()
            .flatten()
            .map(|i| i.death)
            .fold(0.0, f64::max);
        let md = max_dim.unwrap_or(dims.len().max(1));
        if dims.len() > md {
            return Err(Error::Parameter(format!(
                "diagram has dimension {} but max_dim is {md}",
                dims.len() - 1
            )));
        }
        Ok(Self::new(md, max_scale, dims))
    }

    /// Birth/death scatter with the diagonal, one colour per dimension.
    pub fn to_svg(&self, title: &str) -> String {
        const SIZE: f64 = 400.0;
        const PAD: f64 = 40.0;
        const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
        let top = if self.max_scale > 0.0 { self.max_scale } else { 1.0 };
        let span = SIZE - 2.0 * PAD;
        let sx = |v: f64| PAD + v / top * span;
        let sy = |v: f64| SIZE - PAD - v / top * span;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
            PAD * 0.6,
            xml_escape(title)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="1"/>"#,
            sx(0.0),
            sy(0.0),
            sx(top),
            sy(top)
        );
        let _ = writeln!(
            s,
            r#"<polyline points="{},{} {},{} {},{}" fill="none" stroke="gray" stroke-width="1"/>"#,
            sx(0.0),
            sy(top),
            sx(0.0),
            sy(0.0),
            sx(top),
            sy(0.0)
        );
        for (k, d) in self.dims.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            for i in d {
                let shape = if i.essential { "stroke=\"black\"" } else { "" };
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{color}" fill-opacity="0.7" {shape}/>"#,
                    sx(i.birth),
                    sy(i.death)
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">H{k}</text>"#,
                SIZE - PAD - 30.0,
                SIZE - PAD - 20.0 - 15.0 * (self.dims.len() - k) as f64
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
