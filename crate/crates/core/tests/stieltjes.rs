use num_complex::Complex64;
use rand::Rng;
use rwa_core::special::binomial;
use rwa_core::stieltjes::{
    cauchy_derivative, contour_radius, equation1_check, equation3_residual, normalization_error, transform_moments,
    Arcsine, PowerSemicircle, PowerSemicircleDirect, PowerSemicircleParams, StieltjesFn,
};
use rwa_core::{dirichlet_mixed_moment, DirichletParams, RngStream};

fn transforms() -> Vec<Box<dyn StieltjesFn>> {
    let mut out: Vec<Box<dyn StieltjesFn>> = vec![Box::new(Arcsine)];
    for n in 2..=5 {
        let p = PowerSemicircleParams::new(n).unwrap();
        out.push(Box::new(PowerSemicircle::new(p)));
        out.push(Box::new(PowerSemicircleDirect::new(p)));
    }
    out
}

fn random_off_support(rng: &mut RngStream) -> Complex64 {
    loop {
        let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0));
        if z.im.abs() > 1e-3 || z.re.abs() > 1.0 + 1e-3 {
            return z;
        }
    }
}

#[test]
fn normalization_bound_far_from_the_support() {
    let mut rng = RngStream::new(300, 0);
    for f in transforms() {
        for _ in 0..20 {
            let r = 10f64.powf(rng.random_range(1.0..6.0));
            let z = Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU));
            assert!(normalization_error(f.as_ref(), z).unwrap() <= 2.0 / r);
        }
        assert!(normalization_error(f.as_ref(), Complex64::new(1e3, 0.0)).unwrap() <= 1e-2);
        assert!(normalization_error(f.as_ref(), Complex64::new(1e6, 0.0)).unwrap() <= 1e-5);
    }
}

#[test]
fn conjugation_symmetry_and_herglotz_sign() {
    let mut rng = RngStream::new(301, 0);
    for f in transforms() {
        for _ in 0..100 {
            let z = random_off_support(&mut rng);
            let a = f.evaluate(z.conj()).unwrap();
            let b = f.evaluate(z).unwrap().conj();
            assert!((a - b).norm() <= 1e-12, "{z}");
            if z.im > 0.0 {
                assert!(f.evaluate(z).unwrap().im < 0.0, "{z}");
            }
        }
    }
}

#[test]
fn contour_radius_does_not_matter() {
    for f in transforms() {
        for z in [1.5, 2.0, 3.5] {
            for order in 0..=3 {
                let r = contour_radius(z);
                let a = cauchy_derivative(f.as_ref(), z, order, r).unwrap();
                let b = cauchy_derivative(f.as_ref(), z, order, r / 2.0).unwrap();
                assert!((a - b).norm() <= 1e-8 * a.norm(), "z={z} order={order}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn equation3_low_orders_match_analytic_oracles() {
    let grid = [1.5, 2.0, 3.0, 5.0];
    for n in [2, 3] {
        for p in equation3_residual(n, &grid).unwrap() {
            assert!(p.residual < 1e-8, "{p:?}");
        }
    }
    // Semicircle: S = 2(z − √(z² − 1)), S'' = 2 (z² − 1)^{−3/2}, and
    // (−1)²/2! · S'' is the right-hand side.
    for p in equation3_residual(3, &grid).unwrap() {
        let analytic = (p.z * p.z - 1.0).powf(-1.5);
        assert!((p.lhs - analytic).abs() < 1e-8);
    }
}

#[test]
fn equation3_fourth_order_cross_checked_at_two_radii() {
    for p in equation3_residual(4, &[2.0, 3.0]).unwrap() {
        assert!(p.residual < 1e-6, "{p:?}");
    }
    let f = PowerSemicircle::new(PowerSemicircleParams::new(4).unwrap());
    for z in [2.0, 3.0] {
        let a = cauchy_derivative(&f, z, 3, contour_radius(z)).unwrap();
        let b = cauchy_derivative(&f, z, 3, contour_radius(z) / 2.0).unwrap();
        assert!((a - b).norm() < 1e-8 * a.norm());
    }
}

#[test]
fn equation1_examples() {
    for n in [2, 3] {
        for p in equation1_check(n, &[1.5, 2.0, 3.0]).unwrap() {
            assert!(p.residual < 1e-6, "{p:?}");
        }
    }
    let far = equation1_check(2, &[1e3]).unwrap().remove(0);
    assert!((far.lhs * 1e6 - 1.0).abs() < 1e-5, "{far:?}");
    assert!((far.rhs * 1e6 - 1.0).abs() < 1e-5);
}

#[test]
fn uniform_power_semicircle_is_rescaled_uniform_dirichlet() {
    // 2X − 1 with X ~ Beta(1, 1): E[(2X − 1)^m] = Σ_j C(m, j) 2^j (−1)^{m−j} E[X^j].
    let uniform = DirichletParams::new(vec![1.0, 1.0]).unwrap();
    let f = PowerSemicircle::new(PowerSemicircleParams::new(2).unwrap());
    let moments = transform_moments(&f, 9, 2.0, 128).unwrap();
    for (m, &got) in moments.iter().enumerate() {
        let m = m as u32;
        let expected: f64 = (0..=m)
            .map(|j| {
                let sign = if (m - j).is_multiple_of(2) { 1.0 } else { -1.0 };
                binomial(m, j) * 2f64.powi(j as i32) * sign * dirichlet_mixed_moment(&uniform, &[j, 0]).unwrap()
            })
            .sum();
        assert!((got - expected).abs() < 1e-8, "moment {m}: {got} vs {expected}");
        let closed = if m.is_multiple_of(2) {
            1.0 / f64::from(m + 1)
        } else {
            0.0
        };
        assert!((got - closed).abs() < 1e-8);
    }
}
