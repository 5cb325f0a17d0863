//! Convergence certification of the learning dynamics: spectral-radius
//! and induced-norm tests, the gain sweep behind the design plot, and
//! error-norm post-processing of simulated cycles.

use crate::lifted::{LiftedFilters, LiftedSystem};
use crate::linalg::{max_singular_value, spectral_radius};
use crate::sim::CycleResult;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Margin below 1 required before a certificate flag is granted;
/// keeps radius-exactly-1 cases (κ = 0 with a unit-DC-gain Q) out.
const CERT_MARGIN: f64 = 1e-9;

/// Certificates over a gain grid.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// Gain grid [1/h].
    pub kappas: Vec<f64>,
    /// Spectral radius of the input iteration matrix per gain.
    pub rho: Vec<f64>,
    /// Maximum singular value of the error iteration matrix per gain.
    pub sigma_max: Vec<f64>,
    /// Asymptotic stability flags (ρ < 1 with margin).
    pub as_ok: Vec<bool>,
    /// Monotonic convergence flags (σ̄ < 1 with margin).
    pub mc_ok: Vec<bool>,
}

impl ConvergenceReport {
    /// Gain with the smallest spectral radius and that radius.
    pub fn argmin_rho(&self) -> (f64, f64) {
        let mut best = 0usize;
        for i in 1..self.rho.len() {
            if self.rho[i] < self.rho[best] {
                best = i;
            }
        }
        (self.kappas[best], self.rho[best])
    }

    /// Longest contiguous run of gains where monotonic convergence is
    /// certified, as (lower, upper) grid endpoints.
    pub fn mc_window(&self) -> Option<(f64, f64)> {
        let mut best: Option<(usize, usize)> = None;
        let mut run_start: Option<usize> = None;
        for i in 0..=self.mc_ok.len() {
            let ok = i < self.mc_ok.len() && self.mc_ok[i];
            match (ok, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    let len = i - s;
                    if best.is_none_or(|(bs, be)| len > be - bs + 1) {
                        best = Some((s, i - 1));
                    }
                    run_start = None;
                }
                _ => {}
            }
        }
        best.map(|(s, e)| (self.kappas[s], self.kappas[e]))
    }

    /// Certified contraction rate at a given gain, if monotonic
    /// convergence holds there.
    pub fn gamma_at(&self, idx: usize) -> Option<f64> {
        self.mc_ok.get(idx).copied().and_then(|ok| {
            if ok {
                Some(self.sigma_max[idx])
            } else {
                None
            }
        })
    }
}

fn check_dims(lifted: &LiftedSystem, filters: &LiftedFilters) -> Result<()> {
    if lifted.p.nrows() != filters.q.nrows() || lifted.p.nrows() != filters.l.nrows() {
        return Err(Error::Dimension(format!(
            "lifted system is {}×{} but filters are {}×{}",
            lifted.p.nrows(),
            lifted.p.ncols(),
            filters.q.nrows(),
            filters.q.ncols()
        )));
    }
    Ok(())
}

/// Input iteration matrix Q(I − PL) of the learning loop.
fn input_iteration_matrix(lifted: &LiftedSystem, filters: &LiftedFilters) -> DMatrix<f64> {
    let dim = lifted.p.nrows();
    let mut inner = DMatrix::<f64>::identity(dim, dim);
    inner -= &lifted.p * &filters.l;
    &filters.q * inner
}

/// Spectral radius of Q(I − PL): the input sequence converges for
/// every initial input and free response exactly when this is < 1.
pub fn asymptotic_stability(lifted: &LiftedSystem, filters: &LiftedFilters) -> Result<f64> {
    check_dims(lifted, filters)?;
    let m = input_iteration_matrix(lifted, filters);
    let rho = spectral_radius(&m);
    if !rho.is_finite() {
        return Err(Error::InvalidParams(
            "eigenvalue computation returned a non-finite radius".into(),
        ));
    }
    Ok(rho)
}

/// Maximum singular value of P Q P⁻¹ (I − PL): when < 1 the error
/// distance to its fixed point contracts in 2-norm every cycle.
pub fn monotonic_convergence(lifted: &LiftedSystem, filters: &LiftedFilters) -> Result<f64> {
    check_dims(lifted, filters)?;
    let dim = lifted.p.nrows();
    let mut inner = DMatrix::<f64>::identity(dim, dim);
    inner -= &lifted.p * &filters.l;
    let lu = lifted.p.clone().lu();
    let pinv_inner = lu.solve(&inner).ok_or_else(|| {
        Error::InvalidParams("lifted map is singular; cannot form P Q P⁻¹".into())
    })?;
    let m = &lifted.p * &filters.q * pinv_inner;
    let sigma = max_singular_value(&m);
    if !sigma.is_finite() {
        return Err(Error::InvalidParams(
            "singular value computation returned a non-finite value".into(),
        ));
    }
    Ok(sigma)
}

/// Evaluates both certificates over a gain grid, in parallel. Each
/// gain uses the default learning matrix of [`LiftedFilters::new`].
pub fn kappa_sweep(
    lifted: &LiftedSystem,
    q: &DMatrix<f64>,
    kappa_grid: &[f64],
) -> Result<ConvergenceReport> {
    if kappa_grid.is_empty() {
        return Err(Error::InvalidParams("gain grid is empty".into()));
    }
    let pairs: Result<Vec<(f64, f64)>> = kappa_grid
        .par_iter()
        .map(|&kappa| {
            let filters = LiftedFilters::new(q.clone(), kappa);
            let rho = asymptotic_stability(lifted, &filters)?;
            let sigma = monotonic_convergence(lifted, &filters)?;
            Ok((rho, sigma))
        })
        .collect();
    let pairs = pairs?;
    let rho: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let sigma_max: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let as_ok: Vec<bool> = rho.iter().map(|&r| r < 1.0 - CERT_MARGIN).collect();
    let mc_ok: Vec<bool> = sigma_max.iter().map(|&s| s < 1.0 - CERT_MARGIN).collect();
    Ok(ConvergenceReport {
        kappas: kappa_grid.to_vec(),
        rho,
        sigma_max,
        as_ok,
        mc_ok,
    })
}

/// Per-cycle ‖y^c‖₂ of the stacked hourly outputs (equals the error
/// norm, since the error is the negated output).
pub fn error_norms(results: &[CycleResult]) -> Vec<f64> {
    results.iter().map(|r| r.stacked_y().norm()).collect()
}

/// Sample autocorrelation of a series at lags 0..=max_lag, demeaned
/// and normalized so lag 0 maps to 1. Returns all zeros for a
/// constant series.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    if n == 0 {
        return vec![0.0; max_lag + 1];
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return vec![0.0; max_lag + 1];
    }
    (0..=max_lag)
        .map(|k| {
            if k >= n {
                return 0.0;
            }
            let cov: f64 = (0..n - k)
                .map(|i| (series[i] - mean) * (series[i + k] - mean))
                .sum();
            cov / var
        })
        .collect()
}

/// Per-cycle ratio Σ_h‖y^{c,h}‖₂ / Σ_h‖u^{c,h}‖₂ of low-level to
/// learned control effort; infinite while the input is still zero.
pub fn energy_ratios(results: &[CycleResult]) -> Vec<f64> {
    results
        .iter()
        .map(|r| {
            let num: f64 = (0..r.y.ncols()).map(|h| r.y.column(h).norm()).sum();
            let den: f64 = (0..r.u.ncols()).map(|h| r.u.column(h).norm()).sum();
            if den == 0.0 {
                f64::INFINITY
            } else {
                num / den
            }
        })
        .collect()
}
