//! Cycle-domain lifted model of the linearized plant: the block-lower-
//! triangular map from one day of hourly inputs to one day of hourly
//! low-level energies, plus the lifted learning filters.
//!
//! Stacking is hour-major, node-minor: a lifted vector is
//! [block hour 1; …; block hour 24] with each block in R^N.

use crate::grid::CompoundPlant;
use crate::linalg::exp_integrals;
use crate::{Error, Result, HOURS_PER_CYCLE};
use nalgebra::{DMatrix, DVector};

/// Nominal hour length used by the lifted model [s].
const HOUR_SECONDS: f64 = 3600.0;

/// Lifted input–output model y = P u + z over one cycle.
#[derive(Debug, Clone)]
pub struct LiftedSystem {
    /// 24N×24N block-lower-triangular map, units (W·h)/W.
    pub p: DMatrix<f64>,
    /// 24N free-response vector [W·h]; zero for the synchronous
    /// origin, see [`free_response`] for other starts.
    pub z: DVector<f64>,
    /// Toeplitz generators: `blocks[m]` is the N×N block at lag m
    /// (m = 0 the diagonal). The full matrix is redundant with these;
    /// both are kept because the matrix is tiny at reference scale.
    pub blocks: Vec<DMatrix<f64>>,
    pub n_nodes: usize,
}

impl LiftedSystem {
    pub fn dim(&self) -> usize {
        HOURS_PER_CYCLE * self.n_nodes
    }

    /// Block of P at (hour row h, hour column h'), zero-based.
    pub fn block(&self, h: usize, hp: usize) -> DMatrix<f64> {
        let n = self.n_nodes;
        if hp > h {
            DMatrix::zeros(n, n)
        } else {
            self.blocks[h - hp].clone()
        }
    }
}

/// Lifted learning filters: Q-filter, learning matrix, and the scalar
/// gain behind the default learning matrix.
///
/// Sign convention: the plant's hourly-energy response to added input
/// is negative (injected power displaces the low-level share), so the
/// error-reducing learning matrix for gain κ ≥ 0 is L = −κI. With
/// that choice the certified iteration matrix Q(I − PL) is contractive
/// exactly where learning converges.
#[derive(Debug, Clone)]
pub struct LiftedFilters {
    /// 24N×24N lifted Q-filter, Q_h ⊗ I_N.
    pub q: DMatrix<f64>,
    /// 24N×24N learning matrix.
    pub l: DMatrix<f64>,
    /// Learning gain κ [1/h].
    pub kappa: f64,
}

impl LiftedFilters {
    /// Filters with the default learning matrix L = −κI.
    pub fn new(q: DMatrix<f64>, kappa: f64) -> Self {
        let dim = q.nrows();
        let l = DMatrix::identity(dim, dim) * (-kappa);
        Self { q, l, kappa }
    }

    /// Filters with an explicit learning matrix.
    pub fn with_learning_matrix(q: DMatrix<f64>, l: DMatrix<f64>, kappa: f64) -> Self {
        assert_eq!(q.nrows(), l.nrows(), "filter dimensions disagree");
        Self { q, l, kappa }
    }

    pub fn n_nodes(&self) -> usize {
        self.q.nrows() / HOURS_PER_CYCLE
    }
}

/// Exact zero-order-hold discretization of the compound plant over one
/// sample step δ = 3600 s / samples_per_hour: A_d = exp(Aδ),
/// B_d = (∫₀^δ exp(Aτ)dτ) B, both from one augmented exponential.
pub fn hour_discretization(
    plant: &CompoundPlant,
    samples_per_hour: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if samples_per_hour == 0 {
        return Err(Error::InvalidParams(
            "samples_per_hour must be at least 1".into(),
        ));
    }
    let delta = HOUR_SECONDS / samples_per_hour as f64;
    let (f, g1, _) = exp_integrals(&plant.a, delta);
    if f.iter().any(|v| !v.is_finite()) || g1.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(
            "matrix exponential did not converge for this scaling".into(),
        ));
    }
    let b_d = &g1 * &plant.b;
    Ok((f, b_d))
}

/// Builds the lifted map P from the compound plant.
///
/// The diagonal block accumulates the within-hour double integral by
/// stepping the exact sample-level ZOH chain: over each sample the
/// state propagates as x⁺ = A_d x + B_d while the output integral
/// gains C̃(G1 x + G2 B), with G1, G2 the first and second integrals
/// of the exponential over one sample. Sub-diagonal lags reuse one
/// generator block, G = (∫₀^Δ e^{As}ds)² B, propagated by powers of
/// e^{AΔ}; block Toeplitz structure holds by construction. Entries are
/// divided by 3600 (W·s to W·h).
pub fn build_p_matrix(plant: &CompoundPlant, samples_per_hour: usize) -> Result<LiftedSystem> {
    let n = plant.n_nodes;
    let dim = HOURS_PER_CYCLE * n;
    let delta = HOUR_SECONDS / samples_per_hour as f64;

    // per-sample propagators
    let (f_step, g1_step, g2_step) = exp_integrals(&plant.a, delta);
    let b_step = &g1_step * &plant.b; // sample ZOH input matrix
    let s2 = &g2_step * &plant.b; // within-sample forced output integral

    // diagonal block: exact chain over the hour
    let mut x = DMatrix::<f64>::zeros(3 * n, n);
    let mut acc = DMatrix::<f64>::zeros(3 * n, n);
    for _ in 0..samples_per_hour {
        acc += &g1_step * &x + &s2;
        x = &f_step * &x + &b_step;
    }
    let diag = (&plant.c_tilde * &acc) / HOUR_SECONDS;

    // hour-level propagator and the shared sub-diagonal generator
    let (f_hour, g1_hour, _) = exp_integrals(&plant.a, HOUR_SECONDS);
    let gen = &g1_hour * (&g1_hour * &plant.b);

    let mut blocks = Vec::with_capacity(HOURS_PER_CYCLE);
    blocks.push(diag);
    let mut propagated = gen.clone();
    for m in 1..HOURS_PER_CYCLE {
        blocks.push((&plant.c_tilde * &propagated) / HOUR_SECONDS);
        if m + 1 < HOURS_PER_CYCLE {
            propagated = &f_hour * propagated;
        }
    }

    let mut p = DMatrix::<f64>::zeros(dim, dim);
    for h in 0..HOURS_PER_CYCLE {
        for hp in 0..=h {
            p.view_mut((h * n, hp * n), (n, n)).copy_from(&blocks[h - hp]);
        }
    }
    Ok(LiftedSystem {
        p,
        z: DVector::zeros(dim),
        blocks,
        n_nodes: n,
    })
}

/// Hourly integrals of the free response C̃ exp(At) x0, stacked
/// hour-major [W·h].
pub fn free_response(plant: &CompoundPlant, x0: &DVector<f64>) -> DVector<f64> {
    let n = plant.n_nodes;
    assert_eq!(x0.len(), 3 * n, "state dimension mismatch");
    let (f_hour, g1_hour, _) = exp_integrals(&plant.a, HOUR_SECONDS);
    let mut z = DVector::zeros(HOURS_PER_CYCLE * n);
    let mut xi = x0.clone();
    for h in 0..HOURS_PER_CYCLE {
        let integral = &plant.c_tilde * (&g1_hour * &xi) / HOUR_SECONDS;
        z.rows_mut(h * n, n).copy_from(&integral);
        xi = &f_hour * xi;
    }
    z
}

/// Hour-index bandwidth of the reference smoother (order 2, cutoff
/// 1/6): its kernel taps past lag 6 fall below the negligibility
/// floor, so the lifted filter is banded and the next cycle's inputs
/// are schedulable 18 hours before the cycle boundary.
pub const Q_BANDWIDTH: usize = 6;

/// Kernel taps below this fraction of the center tap are treated as
/// negligible; the kept window is the contiguous run of significant
/// taps around lag zero.
const Q_TAP_FLOOR: f64 = 1e-3;

/// Frequency-grid resolution for the kernel transform. The squared
/// magnitude response is smooth and periodic, so the trapezoid sum
/// converges spectrally; this grid leaves quadrature error far below
/// the 10⁻¹² entry cleanup even for near-Nyquist cutoffs, where the
/// response has a notch only a few 10⁻⁴ of the band wide.
const Q_KERNEL_GRID: usize = 65_536;

/// Builds the lifted Q-filter Q_h ⊗ I_N.
///
/// Q_h smooths across the 24 hour indices with the zero-phase response
/// of a discrete Butterworth low-pass: one forward and one backward
/// pass have the squared magnitude |H(ω)|² = 1/(1 + (tan(ω/2)/tan(ωc/2))^(2·order))
/// and no phase, so the smoothing kernel is the inverse transform of
/// that response, evaluated here by trapezoid summation on a fine
/// frequency grid. The kernel is windowed to its significant central
/// taps (the contiguous run above a 10⁻³ relative floor; lag 6 for the
/// reference design), folded at the ends by even reflection, cleaned
/// of sub-10⁻¹² entries, and row-rescaled to unit sums.
///
/// The window and rescale matter: the full zero-phase kernel has small
/// negative side lobes, which would push the filter's spectral radius
/// above one and spoil every contraction certificate before the plant
/// even enters. Keeping the positive main lobe and restoring unit row
/// sums makes Q_h row-stochastic, pinning its spectral radius at
/// exactly one (constant vectors are fixed points), so the certified
/// gain region is governed by the plant alone.
pub fn build_q_filter(n_nodes: usize, cutoff: f64, order: usize) -> Result<DMatrix<f64>> {
    if n_nodes == 0 {
        return Err(Error::InvalidParams("need at least one node".into()));
    }
    if !(0.0..1.0).contains(&cutoff) || cutoff <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "cutoff must lie in (0, 1), got {cutoff}"
        )));
    }
    if order == 0 {
        return Err(Error::InvalidParams("filter order must be >= 1".into()));
    }
    let h = HOURS_PER_CYCLE;
    let nf = Q_KERNEL_GRID;
    let tc = (std::f64::consts::PI * cutoff / 2.0).tan();
    let mut mag2 = vec![0.0f64; nf];
    for (m, slot) in mag2.iter_mut().enumerate() {
        let w = 2.0 * std::f64::consts::PI * m as f64 / nf as f64;
        let ratio = (w / 2.0).tan() / tc;
        let p = ratio.powi(2 * order as i32);
        // the response has an exact zero at Nyquist; overflow of the
        // tangent ratio means we are sitting on it
        *slot = if p.is_finite() { 1.0 / (1.0 + p) } else { 0.0 };
    }
    let mut g = vec![0.0f64; h];
    for (k, tap) in g.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (m, &v) in mag2.iter().enumerate() {
            let w = 2.0 * std::f64::consts::PI * m as f64 / nf as f64;
            acc += v * (w * k as f64).cos();
        }
        *tap = acc / nf as f64;
    }
    if !(g[0].is_finite() && g[0] > 0.0) {
        return Err(Error::InvalidParams(
            "filter design produced a degenerate kernel".into(),
        ));
    }
    let mut band = h - 1;
    for k in 1..h {
        if g[k] < Q_TAP_FLOOR * g[0] {
            band = k - 1;
            break;
        }
    }
    // fold the window at both ends by even reflection, as if the
    // 24-sample cycle were extended symmetrically about its endpoints
    let period = (2 * (h - 1)) as isize;
    let mut q_h = DMatrix::<f64>::zeros(h, h);
    for i in 0..h {
        for k in -(band as isize)..=(band as isize) {
            let mut s = (i as isize + k).rem_euclid(period);
            if s >= h as isize {
                s = period - s;
            }
            q_h[(i, s as usize)] += g[k.unsigned_abs()];
        }
    }
    for i in 0..h {
        for j in 0..h {
            if q_h[(i, j)].abs() < 1e-12 {
                q_h[(i, j)] = 0.0;
            }
        }
    }
    for i in 0..h {
        let sum: f64 = q_h.row(i).iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidParams(
                "Q-filter row degenerated to a nonpositive sum".into(),
            ));
        }
        for j in 0..h {
            q_h[(i, j)] /= sum;
        }
    }
    Ok(q_h.kronecker(&DMatrix::identity(n_nodes, n_nodes)))
}
