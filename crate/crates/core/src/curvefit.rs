//! One-dimensional fits of entropy against post-barrier density: a
//! least-squares cubic B-spline and the two-coefficient binary-entropy law
//! `S = c1·n ln n + c2·(1 − n) ln(1 − n)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bspline;
use crate::dataset::{fmt_f64, TrajectoryDataset};
use crate::error::{Error, Result};

/// `x ln x` on `[0, 1]`, with the limit value 0 at `x = 0`.
pub fn xlogx(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!("x ln x needs x in [0, 1], got {x}")));
    }
    Ok(if x == 0.0 { 0.0 } else { x * x.ln() })
}

/// `1 − SS_res / SS_tot` against the mean of `y`.
pub fn r_squared(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() || y.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "R² needs two equal-length series of at least 2 values, got {} and {}",
            y.len(),
            y_hat.len()
        )));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryFitResult {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    pub residual_rms: f64,
    pub points: usize,
}

impl BinaryFitResult {
    pub fn predict(&self, n: f64) -> Result<f64> {
        Ok(self.c1 * xlogx(n)? + self.c2 * xlogx(1.0 - n)?)
    }
}

/// Least-squares `(c1, c2)` from the 2×2 normal equations.
pub fn fit_binary_entropy(points: &[(f64, f64)]) -> Result<BinaryFitResult> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 points, got {}", points.len())));
    }
    let mut rows = Vec::with_capacity(points.len());
    for (i, &(n, s)) in points.iter().enumerate() {
        if !(0.0..=1.0).contains(&n) || !s.is_finite() {
            return Err(Error::InvalidInput(format!(
                "point {i} has n_A = {n}, S_A = {s}; the binary-entropy law needs n_A in [0, 1]"
            )));
        }
        rows.push((xlogx(n)?, xlogx(1.0 - n)?, s));
    }
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x1, x2, y) in &rows {
        a11 += x1 * x1;
        a12 += x1 * x2;
        a22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    let det = a11 * a22 - a12 * a12;
    if !(det > 1e-12 * a11 * a22) {
        return Err(Error::Singular(
            "binary-entropy regressors are linearly dependent (need two distinct n_A in (0, 1))".into(),
        ));
    }
    let c1 = (b1 * a22 - b2 * a12) / det;
    let c2 = (a11 * b2 - a12 * b1) / det;
    let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let y_hat: Vec<f64> = rows.iter().map(|r| c1 * r.0 + c2 * r.1).collect();
    let ss_res: f64 = y.iter().zip(&y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(BinaryFitResult {
        c1,
        c2,
        r_squared: r_squared(&y, &y_hat)?,
        residual_rms: (ss_res / y.len() as f64).sqrt(),
        points: y.len(),
    })
}

pub const SPLINE_DEGREE: usize = 3;

/// Default number of uniform interior knots.
pub const DEFAULT_INTERIOR_KNOTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SplineFit {
    pub degree: usize,
    pub knots: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub domain: (f64, f64),
}

impl SplineFit {
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain;
        if !(x >= lo && x <= hi) {
            return Err(Error::InvalidInput(format!("x = {x} outside fit domain [{lo}, {hi}]")));
        }
        Ok(bspline::basis(&self.knots, self.degree, x)
            .iter()
            .zip(&self.coefficients)
            .map(|(b, c)| b * c)
            .sum())
    }

    /// R² of the fit over the given points.
    pub fn r_squared(&self, points: &[(f64, f64)]) -> Result<f64> {
        let y: Vec<f64> = points.iter().map(|p| p.1).collect();
        let y_hat = points.iter().map(|p| self.eval(p.0)).collect::<Result<Vec<_>>>()?;
        r_squared(&y, &y_hat)
    }
}

/// Least-squares cubic spline on a clamped knot vector with `interior_knots`
/// uniform interior knots over `[min x, max x]`.
pub fn fit_bspline(points: &[(f64, f64)], interior_knots: usize) -> Result<SplineFit> {
    let n_coef = interior_knots + SPLINE_DEGREE + 1;
    if points.len() < n_coef {
        return Err(Error::InvalidInput(format!(
            "{} points cannot determine {n_coef} spline coefficients",
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::InvalidInput("non-finite point".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = sorted[0].0;
    let hi = sorted[sorted.len() - 1].0;
    if !(hi > lo) {
        return Err(Error::InvalidInput(format!("zero-width fit domain at x = {lo}")));
    }
    let mut distinct = sorted.iter().map(|p| p.0).collect::<Vec<_>>();
    distinct.dedup();
    if distinct.len() < n_coef {
        return Err(Error::Singular(format!(
            "only {} distinct abscissae for {n_coef} coefficients",
            distinct.len()
        )));
    }
    let knots = bspline::clamped_uniform_knots(lo, hi, SPLINE_DEGREE, interior_knots);
    let design = DMatrix::from_fn(sorted.len(), n_coef, |r, c| {
        bspline::basis(&knots, SPLINE_DEGREE, sorted[r].0)[c]
    });
    let rhs = DVector::from_iterator(sorted.len(), sorted.iter().map(|p| p.1));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Singular(
            "data do not support every spline coefficient (some knot spans are empty)".into(),
        ));
    }
    let coef = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Singular(e.to_string()))?;
    Ok(SplineFit {
        degree: SPLINE_DEGREE,
        knots,
        coefficients: coef.iter().copied().collect(),
        domain: (lo, hi),
    })
}

/// Binary-entropy fit of one `(U, h, L)` group; failures become missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatCell {
    pub u: f64,
    pub h: f64,
    pub sites: usize,
    pub fit: std::result::Result<BinaryFitResult, String>,
}

impl HeatCell {
    pub fn r_squared(&self) -> Option<f64> {
        self.fit.as_ref().ok().map(|f| f.r_squared)
    }
}

pub fn r2_heatmap(ds: &TrajectoryDataset) -> Result<Vec<HeatCell>> {
    if ds.groups.is_empty() {
        return Err(Error::InvalidInput("dataset has no groups".into()));
    }
    Ok(ds
        .groups
        .par_iter()
        .map(|g| {
            let points: Vec<(f64, f64)> = g.samples.iter().map(|s| (s.n_a, s.s_a)).collect();
            HeatCell {
                u: g.key.u,
                h: g.key.h,
                sites: g.key.sites,
                fit: fit_binary_entropy(&points).map_err(|e| e.to_string()),
            }
        })
        .collect())
}

/// `U,h,R2`; failed cells leave `R2` empty.
pub fn write_heatmap_csv<W: Write>(cells: &[HeatCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["U", "h", "R2"])?;
    for c in cells {
        w.write_record([fmt_f64(c.u), fmt_f64(c.h), c.r_squared().map(fmt_f64).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-group coefficients and diagnostics.
pub fn write_fit_report_csv<W: Write>(cells: &[HeatCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["U", "h", "L", "c1", "c2", "R2", "residual_rms", "points", "status"])?;
    for c in cells {
        let mut record = vec![fmt_f64(c.u), fmt_f64(c.h), c.sites.to_string()];
        match &c.fit {
            Ok(f) => record.extend([
                fmt_f64(f.c1),
                fmt_f64(f.c2),
                fmt_f64(f.r_squared),
                fmt_f64(f.residual_rms),
                f.points.to_string(),
                "ok".to_string(),
            ]),
            Err(e) => {
                record.extend(std::iter::repeat_n(String::new(), 5));
                record.push(e.clone());
            }
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
