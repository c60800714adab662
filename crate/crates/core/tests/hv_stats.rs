use povmctx::hv::{
    bell_marginal_estimate, sample_hidden_variable, simulate_povm, within_sigma, MonteCarlo,
};
use povmctx::{nakamura_family, BlochVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const M: u64 = 1_000_000;

/// Midpoint quadrature of the acceptance region `(m + n)·v > 0` over the
/// sphere, parameterized by `(cos θ, φ)` so cells have equal area.
fn acceptance_integral(n: &BlochVector, v: &BlochVector, grid: usize) -> f64 {
    let mut inside = 0u64;
    for i in 0..grid {
        let u = -1.0 + (i as f64 + 0.5) * 2.0 / grid as f64;
        let s = (1.0 - u * u).sqrt();
        for j in 0..grid {
            let phi = (j as f64 + 0.5) * std::f64::consts::TAU / grid as f64;
            let m = [s * phi.cos(), s * phi.sin(), u];
            let dot = (m[0] + n.x()) * v.x() + (m[1] + n.y()) * v.y() + (m[2] + n.z()) * v.z();
            if dot > 0.0 {
                inside += 1;
            }
        }
    }
    inside as f64 / (grid * grid) as f64
}

fn at_angle(v: &BlochVector, deg: f64) -> BlochVector {
    // rotate v towards a fixed orthogonal direction
    let w = BlochVector::normalized(v.y(), -v.x(), 0.0).unwrap();
    let (c, s) = (deg.to_radians().cos(), deg.to_radians().sin());
    BlochVector::normalized(
        c * v.x() + s * w.x(),
        c * v.y() + s * w.y(),
        c * v.z() + s * w.z(),
    )
    .unwrap()
}

#[test]
fn quadrature_oracle_at_sixty_degrees() {
    let v = BlochVector::normalized(1.0, 2.0, 2.0).unwrap();
    let n = at_angle(&v, 60.0);
    assert!((n.dot(&v) - 0.5).abs() < 1e-12);
    let p = acceptance_integral(&n, &v, 3000);
    assert!((p - 0.75).abs() < 2e-3, "quadrature gave {p}");

    let est = bell_marginal_estimate(&n, &v, &MonteCarlo::new(M, 60).with_workers(4)).unwrap();
    assert!(within_sigma(est.estimate, 0.75, M, 5.0), "{}", est.estimate);
}

#[test]
fn orthogonal_marginal_is_half() {
    let v = BlochVector::new(1.0, 0.0, 0.0).unwrap();
    let n = BlochVector::new(0.0, 0.0, 1.0).unwrap();
    let est = bell_marginal_estimate(&n, &v, &MonteCarlo::new(M, 90).with_workers(4)).unwrap();
    assert!(within_sigma(est.estimate, 0.5, M, 5.0), "{}", est.estimate);
}

#[test]
fn lambda_and_direction_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut zeros = 0u64;
    let mut sum = [0.0f64; 3];
    let mut bins = [0u64; 10];
    for _ in 0..M {
        let hv = sample_hidden_variable(2, &mut rng).unwrap();
        if hv.lambda == 0 {
            zeros += 1;
        }
        let m = hv.m.to_array();
        for k in 0..3 {
            sum[k] += m[k];
        }
        bins[((m[2].abs() * 10.0) as usize).min(9)] += 1;
    }
    assert!(within_sigma(zeros as f64 / M as f64, 0.5, M, 5.0));
    // each component has variance 1/3 on the sphere
    let sigma = (1.0 / 3.0 / M as f64).sqrt();
    for s in sum {
        assert!((s / M as f64).abs() <= 5.0 * sigma, "mean {}", s / M as f64);
    }
    // |m_z| is uniform on [0, 1]; chi-square with 9 dof, 0.1% critical value 27.88
    let expect = M as f64 / 10.0;
    let chi2: f64 = bins
        .iter()
        .map(|&b| (b as f64 - expect).powi(2) / expect)
        .sum();
    assert!(chi2 < 27.88, "chi2 = {chi2}");
}

#[test]
fn four_slot_lambda_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut counts = [0u64; 4];
    for _ in 0..M {
        counts[sample_hidden_variable(4, &mut rng).unwrap().lambda] += 1;
    }
    for c in counts {
        assert!(within_sigma(c as f64 / M as f64, 0.25, M, 5.0));
    }
}

#[test]
fn nakamura_first_context_at_a_plus() {
    let f = nakamura_family();
    let n = f.element("A+").unwrap().direction();
    let r = simulate_povm(&f, 0, &n, &MonteCarlo::new(M, 1).with_workers(4)).unwrap();
    let get = |l: &str| r.elements.iter().find(|e| e.label == l).unwrap().clone();
    assert!(within_sigma(get("A+").frequency, 0.5, M, 5.0));
    assert_eq!(get("A-").count, 0);
    let b = f.element("B+").unwrap().direction().dot(&n);
    assert!((get("B+").born - (1.0 + b) / 4.0).abs() < 1e-12);
    assert!((get("B-").born - (1.0 - b) / 4.0).abs() < 1e-12);
    assert!(r.passed);
    assert_eq!(r.elements.iter().map(|e| e.count).sum::<u64>(), M);
}

#[test]
fn same_seed_same_report() {
    let f = nakamura_family();
    let n = BlochVector::normalized(0.1, 0.7, 0.2).unwrap();
    let a = simulate_povm(&f, 2, &n, &MonteCarlo::new(300_000, 42)).unwrap();
    let b = simulate_povm(&f, 2, &n, &MonteCarlo::new(300_000, 42).with_workers(3)).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let c = simulate_povm(&f, 2, &n, &MonteCarlo::new(300_000, 43)).unwrap();
    assert_ne!(a, c);
}
