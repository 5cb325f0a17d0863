use gridlearn::grid::{build_compound_plant, GridParams};
use gridlearn::linalg::{exp_integrals, expm, max_singular_value, one_norm, spectral_radius};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Independent exponential oracle: Taylor series after scaling the
/// argument below 1/4, then repeated squaring.
fn expm_taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn expm_of_zero_is_identity() {
    let z = DMatrix::<f64>::zeros(5, 5);
    assert_eq!(expm(&z), DMatrix::identity(5, 5));
}

#[test]
fn expm_matches_scalar_exponential() {
    for &a in &[-3.0, -0.1, 0.7, 4.2] {
        let m = DMatrix::from_element(1, 1, a);
        assert!((expm(&m)[(0, 0)] - a.exp()).abs() < 1e-13 * a.exp().max(1.0));
    }
}

#[test]
fn expm_matches_taylor_oracle_on_reference_plant() {
    let plant = build_compound_plant(&GridParams::reference_four_node()).unwrap();
    // Sample-scale steps need few squarings, so the two routes agree
    // tightly; at t = 3600 s the norm is ~4e5 and each route runs ~17
    // squarings, whose roundoff amplification caps agreement near 1e-9.
    for &(t, tol) in &[(3600.0 / 435.0, 1e-10), (60.0, 1e-10), (3600.0, 1e-8)] {
        let at = &plant.a * t;
        let d = rel_diff(&expm(&at), &expm_taylor(&at));
        assert!(d < tol, "t = {t}: rel diff {d}");
    }
}

#[test]
fn expm_respects_group_property() {
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let a = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-0.5..0.5));
    let e1 = expm(&a);
    let e2 = expm(&(&a * 2.0));
    assert!(rel_diff(&(&e1 * &e1), &e2) < 1e-12);
    let inv = expm(&(-&a));
    assert!(rel_diff(&(&e1 * inv), &DMatrix::identity(6, 6)) < 1e-12);
}

#[test]
fn exp_integrals_match_nilpotent_closed_form() {
    // A = [[0,1],[0,0]]: F = I + At, G1 = It + At²/2, G2 = It²/2 + At³/6
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let t = 2.5;
    let (f, g1, g2) = exp_integrals(&a, t);
    let eye = DMatrix::<f64>::identity(2, 2);
    assert!(rel_diff(&f, &(&eye + &a * t)) < 1e-14);
    assert!(rel_diff(&g1, &(&eye * t + &a * (t * t / 2.0))) < 1e-14);
    assert!(rel_diff(&g2, &(&eye * (t * t / 2.0) + &a * (t * t * t / 6.0))) < 1e-14);
}

#[test]
fn exp_integrals_match_scalar_closed_form() {
    let a = DMatrix::from_element(1, 1, -1.3);
    let t = 0.8;
    let (f, g1, g2) = exp_integrals(&a, t);
    let ea = (-1.3f64 * t).exp();
    assert!((f[(0, 0)] - ea).abs() < 1e-14);
    assert!((g1[(0, 0)] - (ea - 1.0) / -1.3).abs() < 1e-14);
    assert!((g2[(0, 0)] - ((ea - 1.0) / -1.3 - t) / -1.3).abs() < 1e-14);
}

#[test]
fn exp_integrals_handle_singular_generator() {
    // the compound plant has a structural zero eigenvalue; the
    // integrals must come out finite without inverting A
    let plant = build_compound_plant(&GridParams::reference_four_node()).unwrap();
    let (f, g1, g2) = exp_integrals(&plant.a, 5.0);
    for m in [&f, &g1, &g2] {
        assert!(m.iter().all(|v| v.is_finite()));
    }
    // ∫₀ᵗ F(s) ds evaluated at a kernel vector stays t · that vector
    let mut kernel = DVector::zeros(12);
    kernel.rows_mut(0, 4).fill(1.0);
    assert!(((&g1 * &kernel) - &kernel * 5.0).norm() < 1e-9);
}

#[test]
fn one_norm_is_max_column_sum() {
    let m = DMatrix::from_row_slice(2, 3, &[1.0, -4.0, 2.0, -3.0, 0.5, 2.0]);
    assert_eq!(one_norm(&m), 4.5);
}

#[test]
fn spectral_radius_on_known_spectra() {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, -2.5, 1.0]));
    assert!((spectral_radius(&d) - 2.5).abs() < 1e-9);

    // triangular: eigenvalues on the diagonal
    let t = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 2.0]);
    assert!((spectral_radius(&t) - 3.0).abs() < 1e-9);

    // rotation: complex pair on the unit circle
    let th = 0.3f64;
    let r = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
    assert!((spectral_radius(&r) - 1.0).abs() < 1e-9);

    // nilpotent
    let nil = DMatrix::from_row_slice(2, 2, &[0.0, 7.0, 0.0, 0.0]);
    assert_eq!(spectral_radius(&nil), 0.0);

    assert_eq!(spectral_radius(&DMatrix::<f64>::zeros(4, 4)), 0.0);
}

#[test]
fn spectral_radius_handles_defective_blocks() {
    // Jordan block: ρ = |λ| despite the polynomial transient
    let j = DMatrix::from_row_slice(3, 3, &[0.9, 1.0, 0.0, 0.0, 0.9, 1.0, 0.0, 0.0, 0.9]);
    assert!((spectral_radius(&j) - 0.9).abs() < 1e-8);
}

#[test]
fn max_singular_value_on_known_cases() {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -4.0]));
    assert!((max_singular_value(&d) - 4.0).abs() < 1e-9);

    let shear = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
    assert!((max_singular_value(&shear) - 2.0).abs() < 1e-9);
}

#[test]
fn spectral_radius_never_exceeds_induced_norm() {
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    for _ in 0..20 {
        let m = DMatrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
        assert!(spectral_radius(&m) <= max_singular_value(&m) * (1.0 + 1e-8) + 1e-12);
    }
}

#[test]
fn max_singular_value_matches_randomized_power_oracle() {
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    for _ in 0..5 {
        let m = DMatrix::from_fn(10, 10, |_, _| rng.gen_range(-1.0..1.0));
        let gram = m.transpose() * &m;
        let mut v = DVector::from_fn(10, |_, _| rng.gen_range(-1.0..1.0)).normalize();
        for _ in 0..500 {
            v = (&gram * &v).normalize();
        }
        let oracle = (&m * &v).norm();
        let direct = max_singular_value(&m);
        assert!((direct - oracle).abs() <= 0.01 * oracle, "{direct} vs {oracle}");
    }
}
