//! Run-to-run comparison and null detection on metric curves.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::{read_metrics, MetricRow};
use crate::runner::{RunError, METRICS_FILE};

/// Minimum prominence, in dB, for a local minimum to count as a null.
pub const NULL_PROMINENCE_DB: f64 = 3.0;

/// A local minimum of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Null {
    pub frequency_hz: f64,
    pub value_db: f64,
    pub prominence_db: f64,
}

/// Local minima whose prominence reaches `min_prominence`. Prominence is
/// the smaller of the two rises needed to leave the dip towards a lower
/// point (or the curve end) on either side. Plateaus count once, at their
/// first sample.
pub fn find_nulls(frequencies: &[f64], values: &[f64], min_prominence: f64) -> Vec<Null> {
    let n = values.len().min(frequencies.len());
    let mut nulls = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let v = values[i];
        if !(values[i - 1] > v) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && values[j + 1] == v {
            j += 1;
        }
        if j + 1 >= n || !(values[j + 1] > v) {
            i = j + 1;
            continue;
        }
        let left = values[..i].iter().rev().take_while(|&&x| x >= v).fold(v, |m, &x| m.max(x));
        let right = values[j + 1..].iter().take_while(|&&x| x >= v).fold(v, |m, &x| m.max(x));
        let prominence = left.min(right) - v;
        if prominence >= min_prominence {
            nulls.push(Null {
                frequency_hz: frequencies[i],
                value_db: v,
                prominence_db: prominence,
            });
        }
        i = j + 1;
    }
    nulls
}

/// The `count` deepest local minima (by value), ascending in frequency.
pub fn deepest_minima(frequencies: &[f64], values: &[f64], count: usize) -> Vec<Null> {
    let mut nulls = find_nulls(frequencies, values, 0.0);
    nulls.sort_by(|a, b| a.value_db.total_cmp(&b.value_db));
    nulls.truncate(count);
    nulls.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    nulls
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub frequency_hz: f64,
    /// `b − a`.
    pub di_delta_db: f64,
    pub wng_delta_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub deltas: Vec<DeltaRow>,
    pub di_nulls_a: Vec<Null>,
    pub di_nulls_b: Vec<Null>,
    pub wng_nulls_a: Vec<Null>,
    pub wng_nulls_b: Vec<Null>,
}

pub fn compare_metrics(a: &[MetricRow], b: &[MetricRow]) -> Result<Comparison, RunError> {
    let fa: Vec<f64> = a.iter().map(|r| r.frequency_hz).collect();
    let fb: Vec<f64> = b.iter().map(|r| r.frequency_hz).collect();
    if fa != fb {
        return Err(RunError::GridMismatch(format!(
            "{} bins vs {} bins{}",
            fa.len(),
            fb.len(),
            fa.iter()
                .zip(&fb)
                .find(|(x, y)| x != y)
                .map(|(x, y)| format!(", first difference {x} Hz vs {y} Hz"))
                .unwrap_or_default()
        )));
    }
    let deltas = a
        .iter()
        .zip(b)
        .map(|(x, y)| DeltaRow {
            frequency_hz: x.frequency_hz,
            di_delta_db: y.di_db - x.di_db,
            wng_delta_db: y.wng_db - x.wng_db,
        })
        .collect();
    let nulls = |rows: &[MetricRow], f: fn(&MetricRow) -> f64| {
        let values: Vec<f64> = rows.iter().map(f).collect();
        find_nulls(&fa, &values, NULL_PROMINENCE_DB)
    };
    Ok(Comparison {
        deltas,
        di_nulls_a: nulls(a, |r| r.di_db),
        di_nulls_b: nulls(b, |r| r.di_db),
        wng_nulls_a: nulls(a, |r| r.wng_db),
        wng_nulls_b: nulls(b, |r| r.wng_db),
    })
}

/// Compares the metric files of two run directories.
pub fn compare_runs(dir_a: &Path, dir_b: &Path) -> Result<Comparison, RunError> {
    let a = read_metrics(&dir_a.join(METRICS_FILE))?;
    let b = read_metrics(&dir_b.join(METRICS_FILE))?;
    compare_metrics(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(values: &[(f64, f64, f64)]) -> Vec<MetricRow> {
        values
            .iter()
            .map(|&(f, d, w)| MetricRow {
                frequency_hz: f,
                di_db: d,
                wng_db: w,
            })
            .collect()
    }

    #[test]
    fn identical_runs_have_zero_deltas() {
        let a = rows(&[(100.0, 1.0, 2.0), (104.0, 0.5, -3.0), (108.0, 1.0, 2.0)]);
        let c = compare_metrics(&a, &a).unwrap();
        assert!(c.deltas.iter().all(|d| d.di_delta_db == 0.0 && d.wng_delta_db == 0.0));
        assert_eq!(c.wng_nulls_a, c.wng_nulls_b);
        assert_eq!(c.wng_nulls_a.len(), 1);
        assert!(c.di_nulls_a.is_empty());
    }

    #[test]
    fn disjoint_grids_are_rejected() {
        let a = rows(&[(100.0, 1.0, 2.0)]);
        let b = rows(&[(102.0, 1.0, 2.0)]);
        assert!(matches!(compare_metrics(&a, &b), Err(RunError::GridMismatch(_))));
    }

    #[test]
    fn prominence_uses_the_lower_shoulder() {
        let f: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let v = [0.0, 5.0, 1.0, 2.0, -10.0, 8.0, 3.0, 3.0, 4.0];
        let nulls = find_nulls(&f, &v, 0.0);
        assert_eq!(nulls.len(), 3);
        assert_eq!(nulls[0].frequency_hz, 2.0);
        assert_eq!(nulls[0].prominence_db, 1.0);
        assert_eq!(nulls[1].frequency_hz, 4.0);
        assert_eq!(nulls[1].prominence_db, 15.0);
        // plateau at 6..7 counts once
        assert_eq!(nulls[2].frequency_hz, 6.0);
        assert_eq!(nulls[2].prominence_db, 1.0);
        assert_eq!(find_nulls(&f, &v, 3.0).len(), 1);
        let deepest = deepest_minima(&f, &v, 2);
        assert_eq!(deepest.iter().map(|n| n.frequency_hz).collect::<Vec<_>>(), vec![2.0, 4.0]);
    }
}
