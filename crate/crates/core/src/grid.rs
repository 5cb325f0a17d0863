//! Network topology, node parameters, and the linear compound plant.
//!
//! The compound plant is the physical network together with its
//! decentralized low-level controller, seen as one linear system by
//! the learning layer. State ordering is `[φ₁..φ_N, ω₁..ω_N, χ₁..χ_N]`
//! and is a frozen contract relied on by every other module.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Per-node physical and controller constants plus the coupling matrix.
///
/// All powers are per-unit; `coupling[(j,k)]` is the maximum power flow
/// between directly connected nodes and must be symmetric with zero
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GridParams {
    /// Rotational inertia per node [W·s²].
    pub inertia: DVector<f64>,
    /// Proportional (droop) gain per node [W·s].
    pub kp: DVector<f64>,
    /// Integrator leak rate per node [1/(W·s)].
    pub ki: DVector<f64>,
    /// Integrator response time per node [s].
    pub t_li: DVector<f64>,
    /// Symmetric coupling matrix with zero diagonal [W/W].
    pub coupling: DMatrix<f64>,
    /// Whether the coupling graph is connected (single component).
    pub connected: bool,
}

/// Linear state-space model of network plus low-level control.
///
/// `x' = A x + B u + E d`, hourly energy output row `C̃ x`.
#[derive(Debug, Clone)]
pub struct CompoundPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub c_tilde: DMatrix<f64>,
    pub n_nodes: usize,
}

impl GridParams {
    /// Validates and constructs grid parameters.
    ///
    /// Requires strictly positive inertia, droop gain, and response
    /// time; nonnegative leak rates; and a symmetric, nonnegative,
    /// zero-diagonal coupling matrix. A disconnected graph is allowed
    /// (the theory applies per component) but flagged via
    /// [`GridParams::connected`] so callers can warn.
    pub fn new(
        inertia: DVector<f64>,
        kp: DVector<f64>,
        ki: DVector<f64>,
        t_li: DVector<f64>,
        coupling: DMatrix<f64>,
    ) -> Result<Self> {
        let n = inertia.len();
        if n == 0 {
            return Err(Error::InvalidParams("need at least one node".into()));
        }
        for (name, v) in [("kp", &kp), ("ki", &ki), ("t_li", &t_li)] {
            if v.len() != n {
                return Err(Error::InvalidParams(format!(
                    "{name} has {} entries, expected {n}",
                    v.len()
                )));
            }
        }
        if coupling.nrows() != n || coupling.ncols() != n {
            return Err(Error::InvalidParams(format!(
                "coupling is {}x{}, expected {n}x{n}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        if inertia.iter().any(|&x| x <= 0.0)
            || kp.iter().any(|&x| x <= 0.0)
            || t_li.iter().any(|&x| x <= 0.0)
        {
            return Err(Error::InvalidParams(
                "inertia, kp, t_li must be strictly positive".into(),
            ));
        }
        if ki.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidParams("ki must be nonnegative".into()));
        }
        for j in 0..n {
            if coupling[(j, j)] != 0.0 {
                return Err(Error::InvalidParams("coupling diagonal must be zero".into()));
            }
            for k in 0..n {
                let kjk = coupling[(j, k)];
                if kjk < 0.0 {
                    return Err(Error::InvalidParams("coupling must be nonnegative".into()));
                }
                if (kjk - coupling[(k, j)]).abs() > 1e-12 * (1.0 + kjk.abs()) {
                    return Err(Error::InvalidParams("coupling must be symmetric".into()));
                }
            }
        }
        let connected = is_connected(&coupling);
        Ok(Self {
            inertia,
            kp,
            ki,
            t_li,
            coupling,
            connected,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.inertia.len()
    }

    /// The bundled four-node reference network: fully connected with
    /// uniform line capacity and heterogeneous node constants.
    pub fn reference_four_node() -> Self {
        let n = 4;
        let mut coupling = DMatrix::from_element(n, n, 6.0);
        coupling.fill_diagonal(0.0);
        Self::new(
            DVector::from_vec(vec![5.0, 4.8, 4.1, 4.8]),
            DVector::from_vec(vec![400.0, 110.0, 100.0, 200.0]),
            DVector::from_vec(vec![0.05, 0.004, 0.05, 0.001]),
            DVector::from_vec(vec![0.04, 0.045, 0.047, 0.043]),
            coupling,
        )
        .expect("reference parameters are valid")
    }
}

/// Breadth-first reachability over nonzero couplings.
fn is_connected(coupling: &DMatrix<f64>) -> bool {
    let n = coupling.nrows();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = vec![0usize];
    seen[0] = true;
    while let Some(j) = queue.pop() {
        for k in 0..n {
            if !seen[k] && coupling[(j, k)] > 0.0 {
                seen[k] = true;
                queue.push(k);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Weighted graph Laplacian `L = diag(K·1) − K`.
///
/// Symmetric, positive semidefinite, zero row sums; rank `N−1` when
/// the graph is connected.
pub fn build_laplacian(coupling: &DMatrix<f64>) -> DMatrix<f64> {
    let mut l = -coupling.clone();
    for j in 0..coupling.nrows() {
        l[(j, j)] = coupling.row(j).sum();
    }
    l
}

/// Assembles the linear compound plant around the synchronous origin.
///
/// Block layout over `[φ; ω; χ]`:
///
/// ```text
///       ⎡    0        I       0   ⎤        ⎡  0   ⎤
///   A = ⎢ −M⁻¹L   −M⁻¹K_P   M⁻¹  ⎥,   B = ⎢ M⁻¹ ⎥,   E = −B,
///       ⎣    0      −T⁻¹    −K_I ⎦        ⎣  0   ⎦
/// ```
///
/// and the hourly-energy output row is `C̃ = [0, −K_P, I]`. The
/// integrator state leaks at rate `k_I` directly (time constants up to
/// ~17 min for the reference network), which reproduces the measured
/// hour-to-hour memory of the lifted map.
pub fn build_compound_plant(params: &GridParams) -> Result<CompoundPlant> {
    let n = params.n_nodes();
    if params.inertia.iter().any(|&m| m == 0.0) || params.t_li.iter().any(|&t| t == 0.0) {
        return Err(Error::InvalidParams("singular M or T".into()));
    }
    let lap = build_laplacian(&params.coupling);
    let mut a = DMatrix::<f64>::zeros(3 * n, 3 * n);
    let mut b = DMatrix::<f64>::zeros(3 * n, n);
    let mut c_tilde = DMatrix::<f64>::zeros(n, 3 * n);

    for j in 0..n {
        // φ̇ = ω
        a[(j, n + j)] = 1.0;
        let m_inv = 1.0 / params.inertia[j];
        // M ω̇ = u_ilc + u_li − F − d, linearized flow F ≈ L φ
        for k in 0..n {
            a[(n + j, k)] = -m_inv * lap[(j, k)];
        }
        a[(n + j, n + j)] = -m_inv * params.kp[j];
        a[(n + j, 2 * n + j)] = m_inv;
        b[(n + j, j)] = m_inv;
        // χ̇ = −ω/T − k_I χ
        a[(2 * n + j, n + j)] = -1.0 / params.t_li[j];
        a[(2 * n + j, 2 * n + j)] = -params.ki[j];
        // y-rate: u_li = −K_P ω + χ
        c_tilde[(j, n + j)] = -params.kp[j];
        c_tilde[(j, 2 * n + j)] = 1.0;
    }
    let e = -&b;
    Ok(CompoundPlant {
        a,
        b,
        e,
        c_tilde,
        n_nodes: n,
    })
}
