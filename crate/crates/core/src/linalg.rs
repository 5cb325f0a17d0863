//! Dense linear-algebra helpers shared across modules: matrix
//! exponential, combined exponential integrals, and spectral measures.

use nalgebra::DMatrix;

/// Matrix exponential by Pade(13) approximation with scaling and
/// squaring. Always uses the order-13 kernel; the scaling power is
/// chosen from the 1-norm so the argument lands inside the kernel's
/// accuracy radius.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    let n = a.nrows();
    // Pade(13) numerator coefficients (denominator uses alternating signs).
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    // Largest 1-norm for which Pade(13) is accurate to double precision.
    const THETA_13: f64 = 5.371_920_351_148_152;

    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);

    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let eye = DMatrix::<f64>::identity(n, n);

    let u_inner = &a6 * (B[13] * &a6 + B[11] * &a4 + B[9] * &a2)
        + B[7] * &a6
        + B[5] * &a4
        + B[3] * &a2
        + B[1] * &eye;
    let u = &a * u_inner;
    let v = &a6 * (B[12] * &a6 + B[10] * &a4 + B[8] * &a2)
        + B[6] * &a6
        + B[4] * &a4
        + B[2] * &a2
        + B[0] * &eye;

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut x = lhs
        .lu()
        .solve(&rhs)
        .expect("Pade denominator is singular; matrix exponential failed");
    for _ in 0..s {
        x = &x * &x;
    }
    x
}

/// Exponential integrals over one interval by a single augmented
/// exponential: returns
/// `F = exp(A t)`, `G1 = ∫₀ᵗ exp(A s) ds`, `G2 = ∫₀ᵗ ∫₀ˢ exp(A r) dr ds`.
///
/// Works for singular `A` (no inverse is formed), which matters here
/// because the compound plant has a structural zero eigenvalue.
pub fn exp_integrals(a: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut aug = DMatrix::<f64>::zeros(3 * n, 3 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    aug.view_mut((n, 2 * n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    let e = expm(&(aug * t));
    let f = e.view((0, 0), (n, n)).into_owned();
    let g1 = e.view((0, n), (n, n)).into_owned();
    let g2 = e.view((0, 2 * n), (n, n)).into_owned();
    (f, g1, g2)
}

/// Maximum absolute column sum.
pub fn one_norm(a: &DMatrix<f64>) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|x| x.abs()).sum();
        best = best.max(s);
    }
    best
}

// Squaring count for the Gelfand limit ρ(A) = lim ‖A^k‖^(1/k).
// k = 2^40 shrinks the polynomial slack of defective or equal-modulus
// spectra to exp(O(log k / k)) ≈ 1 + 1e-10, well inside every margin
// certified on top of these measures.
const GELFAND_SQUARINGS: u32 = 40;

/// Spectral radius: largest eigenvalue magnitude.
///
/// Computed through repeated squaring of the normalized matrix rather
/// than an eigendecomposition: QR-type eigensolvers are iterative and
/// can stall on the highly degenerate operators this crate certifies
/// (Kronecker lifts repeat every eigenvalue per node), while the
/// squaring limit is a fixed, deterministic amount of work.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    assert_eq!(a.nrows(), a.ncols(), "spectral radius needs a square matrix");
    let mut m = a.clone();
    // log ‖A^k‖ accumulated as Σ 2^(k-j) log t_j with t_j the norm
    // pulled out before squaring j; dividing by k = 2^q at the end
    // telescopes to Σ log t_j / 2^j.
    let mut log_scale = 0.0;
    for j in 0..=GELFAND_SQUARINGS {
        let norm = m.norm();
        if !norm.is_finite() {
            return f64::INFINITY;
        }
        if norm == 0.0 {
            return 0.0;
        }
        log_scale += norm.ln() / 2f64.powi(j as i32);
        if j == GELFAND_SQUARINGS {
            break;
        }
        m /= norm;
        m = &m * &m;
    }
    log_scale.exp()
}

/// Largest singular value (induced 2-norm), via the spectral radius of
/// the symmetric product AᵀA. Same rationale as [`spectral_radius`]:
/// iterative SVD routines have no iteration bound, this does.
pub fn max_singular_value(a: &DMatrix<f64>) -> f64 {
    let gram = a.transpose() * a;
    spectral_radius(&gram).sqrt()
}
