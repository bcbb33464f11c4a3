use std::io::Write;

use serde::Serialize;

use super::SimError;

/// Columnar time series on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub time: Vec<f64>,
    pub names: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl SimTrace {
    pub fn new(names: Vec<String>) -> Self {
        let data = vec![Vec::new(); names.len()];
        Self {
            time: Vec::new(),
            names,
            data,
        }
    }

    pub fn push(&mut self, t: f64, row: &[f64]) {
        debug_assert_eq!(row.len(), self.names.len());
        self.time.push(t);
        for (col, v) in self.data.iter_mut().zip(row) {
            col.push(*v);
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.column_index(name).map(|i| self.data[i].as_slice())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.column(name).and_then(|c| c.last().copied())
    }

    /// Rows with `t ≥ t0`.
    pub fn slice_from(&self, t0: f64) -> Self {
        let start = self.time.partition_point(|&t| t < t0);
        Self {
            time: self.time[start..].to_vec(),
            names: self.names.clone(),
            data: self.data.iter().map(|c| c[start..].to_vec()).collect(),
        }
    }

    /// Linear interpolation of a column at `t` (clamped to the ends).
    pub fn interpolate(&self, col: usize, t: f64) -> f64 {
        let c = &self.data[col];
        let i = self.time.partition_point(|&s| s < t);
        if i == 0 {
            return c[0];
        }
        if i >= self.time.len() {
            return c[c.len() - 1];
        }
        if self.time[i] == t {
            return c[i];
        }
        let (t0, t1) = (self.time[i - 1], self.time[i]);
        let w = (t - t0) / (t1 - t0);
        c[i - 1] + w * (c[i] - c[i - 1])
    }

    /// Header row `t,<names…>`, one row per sample, shortest round-trip decimals.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.names.iter().cloned());
        wr.write_record(&header)?;
        for (r, t) in self.time.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(self.data.iter().map(|c| c[r].to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, SimError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceGap {
    pub column: String,
    pub sup_gap: f64,
    /// `sqrt(∫ gap² dt)` by the trapezoid rule over the overlap.
    pub l2_gap: f64,
}

/// Gaps between the named columns of `a` and `b`, evaluated on the samples
/// of `a` inside the common time range with `b` linearly interpolated.
pub fn compare_traces(
    a: &SimTrace,
    b: &SimTrace,
    columns: &[&str],
) -> Result<Vec<TraceGap>, SimError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimError::EmptyOverlap);
    }
    let lo = a.time[0].max(b.time[0]);
    let hi = a.time[a.len() - 1].min(b.time[b.len() - 1]);
    let grid: Vec<usize> = (0..a.len())
        .filter(|&i| a.time[i] >= lo && a.time[i] <= hi)
        .collect();
    if lo > hi || grid.is_empty() {
        return Err(SimError::EmptyOverlap);
    }
    columns
        .iter()
        .map(|&name| {
            let ia = a
                .column_index(name)
                .ok_or_else(|| SimError::UnknownColumn(name.into()))?;
            let ib = b
                .column_index(name)
                .ok_or_else(|| SimError::UnknownColumn(name.into()))?;
            let gaps: Vec<(f64, f64)> = grid
                .iter()
                .map(|&i| {
                    (
                        a.time[i],
                        (a.data[ia][i] - b.interpolate(ib, a.time[i])).abs(),
                    )
                })
                .collect();
            let sup_gap = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
            let l2: f64 = gaps
                .windows(2)
                .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 * w[0].1 + w[1].1 * w[1].1))
                .sum();
            Ok(TraceGap {
                column: name.into(),
                sup_gap,
                l2_gap: l2.sqrt(),
            })
        })
        .collect()
}
