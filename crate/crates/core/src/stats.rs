//! Descriptive statistics and the two regression families used to summarize
//! sweeps: a power law fitted in log-log space and an ordinary quadratic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    PowerLaw,
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    /// `[a, b]` for `y = a x^b`; `[c2, c1, c0]` for `y = c2 x^2 + c1 x + c0`.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        match self.kind {
            FitKind::PowerLaw => self.coefficients[0] * x.powf(self.coefficients[1]),
            FitKind::Quadratic => {
                let c = &self.coefficients;
                (c[0] * x + c[1]) * x + c[2]
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Arithmetic mean; NaN for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and sample standard deviation (divisor `n - 1`).
pub fn mean_stddev(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: xs.len(),
        });
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Ok((m, (ss / (xs.len() - 1) as f64).sqrt()))
}

fn distinct(xs: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = xs.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// `1 - SS_res / SS_tot`. Constant targets give 1 for a perfect fit and an
/// error otherwise.
fn r_squared(ys: &[f64], fitted: impl Iterator<Item = f64>) -> Result<f64> {
    let m = mean(ys);
    let ss_tot: f64 = ys.iter().map(|y| (y - m).powi(2)).sum();
    let ss_res: f64 = ys.iter().zip(fitted).map(|(y, f)| (y - f).powi(2)).sum();
    let scale: f64 = ys.iter().map(|y| y * y).sum::<f64>().max(1.0);
    let negligible = 1e-24 * scale;
    if ss_tot <= negligible {
        return if ss_res <= negligible {
            Ok(1.0)
        } else {
            Err(Error::UndefinedRSquared)
        };
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Fits `y = a x^b` by least squares on `(ln x, ln y)`. R² is that of the
/// linearized regression, which is what spreadsheet power trendlines report.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::domain(format!(
            "power-law fit needs positive coordinates, got ({x}, {y})"
        )));
    }
    let k = distinct(points.iter().map(|p| p.0));
    if k < 2 {
        return Err(Error::Rank { needed: 2, got: k });
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = mean(&lx);
    let my = mean(&ly);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let r2 = r_squared(&ly, lx.iter().map(|x| ln_a + b * x))?;
    Ok(FitResult {
        kind: FitKind::PowerLaw,
        coefficients: vec![ln_a.exp(), b],
        r_squared: r2,
    })
}

/// Least-squares parabola `y = c2 x^2 + c1 x + c0`; R² in the original space.
pub fn quadratic_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    let k = distinct(points.iter().map(|p| p.0));
    if k < 3 {
        return Err(Error::Rank { needed: 3, got: k });
    }
    // Solve in centered, scaled coordinates u = (x - m) / s; raw powers of
    // x near 1.5 make the normal equations badly conditioned.
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let m = mean(&xs);
    let s = xs.iter().map(|x| (x - m).abs()).fold(0.0, f64::max);
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for &(x, y) in points {
        let u = (x - m) / s;
        let row = [1.0, u, u * u];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let [d0, d1, d2] = solve3(ata, aty).ok_or(Error::Rank { needed: 3, got: k })?;
    // p(x) = d2 ((x - m)/s)^2 + d1 (x - m)/s + d0
    let c2 = d2 / (s * s);
    let c1 = d1 / s - 2.0 * c2 * m;
    let c0 = d0 - d1 * m / s + c2 * m * m;
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let r2 = r_squared(
        &ys,
        points.iter().map(|&(x, _)| {
            let u = (x - m) / s;
            (d2 * u + d1) * u + d0
        }),
    )?;
    Ok(FitResult {
        kind: FitKind::Quadratic,
        coefficients: vec![c2, c1, c0],
        r_squared: r2,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let tail: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - tail) / a[i][i];
    }
    Some(x)
}

/// Min, quartiles and max. Quartiles interpolate linearly between order
/// statistics at position `p (n - 1)` (the common "type 7" rule).
pub fn five_number_summary(xs: &[f64]) -> Result<FiveNumberSummary> {
    if xs.is_empty() {
        return Err(Error::domain("five-number summary of an empty sample"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Ok(FiveNumberSummary {
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: v[v.len() - 1],
    })
}
