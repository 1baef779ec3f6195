use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }

    /// Index of the grid value nearest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let idx = self.values.partition_point(|&v| v < x);
        if idx == 0 {
            0
        } else if idx == self.values.len() {
            idx - 1
        } else if (x - self.values[idx - 1]) <= (self.values[idx] - x) {
            idx - 1
        } else {
            idx
        }
    }
}

/// Sampled pseudo-spectrum over one or two parameter axes.
///
/// Two-dimensional grids store values with the first axis varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
}

impl SpectrumGrid {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidConfig("spectra have one or two axes".into()));
        }
        let expected: usize = axes.iter().map(Axis::len).product();
        if expected != values.len() {
            return Err(Error::InvalidConfig(format!(
                "spectrum has {} values for a grid of {expected} points",
                values.len()
            )));
        }
        if let Some(axis) = axes.iter().find(|a| !a.is_strictly_increasing()) {
            return Err(Error::InvalidConfig(format!("axis {} is not strictly increasing", axis.name)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("spectrum contains non-finite values".into()));
        }
        Ok(Self { axes, values })
    }

    pub fn shape(&self) -> (usize, usize) {
        match self.axes.as_slice() {
            [a] => (a.len(), 1),
            [a, b] => (a.len(), b.len()),
            _ => unreachable!(),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.shape().1 + j]
    }

    /// Grid indices of the largest value; ties resolve to the earliest point.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (idx, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = idx;
            }
        }
        let cols = self.shape().1;
        (best / cols, best % cols)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn median(&self) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    }

    /// Axis columns followed by a `value` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        header.push("value");
        writer.write_record(&header)?;
        let (rows, cols) = self.shape();
        for i in 0..rows {
            for j in 0..cols {
                let mut record = vec![self.axes[0].values[i].to_string()];
                if self.axes.len() == 2 {
                    record.push(self.axes[1].values[j].to_string());
                }
                record.push(self.at(i, j).to_string());
                writer.write_record(&record)?;
            }
        }
        writer.flush()?;
        Ok(())
    }
}

/// Inverse of a MUSIC denominator, kept finite when the denominator vanishes.
pub(crate) fn invert_power(denominator: f64) -> f64 {
    1.0 / denominator.max(1e-300)
}

/// Picks the `count` strongest local maxima of a 1D spectrum.
///
/// A local maximum is strictly greater than both neighbours. Candidates are
/// ranked by value (ties toward the smaller axis value) and accepted only if
/// they are at least `min_separation` away from every accepted peak. Returns
/// axis values in ascending order.
pub fn pick_peaks(spectrum: &SpectrumGrid, count: usize, min_separation: f64) -> Result<Vec<f64>> {
    let axis = &spectrum.axes[0].values;
    let v = &spectrum.values;
    let mut candidates: Vec<usize> = (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .collect();
    candidates.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(axis[a].total_cmp(&axis[b])));
    let mut accepted: Vec<f64> = Vec::with_capacity(count);
    for idx in candidates {
        if accepted.len() == count {
            break;
        }
        if accepted.iter().all(|&x| (x - axis[idx]).abs() >= min_separation) {
            accepted.push(axis[idx]);
        }
    }
    accepted.sort_by(f64::total_cmp);
    if accepted.len() < count {
        return Err(Error::UnderResolved { expected: count, found: accepted });
    }
    Ok(accepted)
}

/// Evenly spaced grid from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// `points` logarithmically spaced values from `start` to `stop` inclusive.
pub fn log_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), stop.ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                start
            } else if i + 1 == points {
                stop
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}
