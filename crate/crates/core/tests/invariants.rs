use std::f64::consts::PI;

use proptest::prelude::*;
use radfock::genfun::{deflate, PolyCoeffs};
use radfock::kernels::{Point, PointSet};
use radfock::moments::{build_table, default_spec, MomentTable};
use radfock::numeric::{convex_fit, convex_fit_defect, log_sum, log_sum_exp, LogComplex, LogReal};
use radfock::weightlab::Weight;
use radfock::Complex;

fn complex() -> impl Strategy<Value = Complex> {
    (-4.0f64..4.0, -PI..PI).prop_map(|(l, t)| Complex::from_polar(l.exp(), t))
}

proptest! {
    #[test]
    fn log_sum_exp_shifts(logs in prop::collection::vec(-50.0f64..50.0, 1..30), c in -600.0f64..600.0) {
        let base = log_sum_exp(&logs);
        let shifted: Vec<f64> = logs.iter().map(|l| l + c).collect();
        prop_assert!((log_sum_exp(&shifted) - base - c).abs() < 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn log_sum_ignores_order(logs in prop::collection::vec(-30.0f64..30.0, 1..30), neg in prop::collection::vec(any::<bool>(), 30)) {
        let terms: Vec<LogReal<f64>> = logs.iter().zip(&neg).map(|(&l, &n)| {
            let t = LogReal::from_log(l);
            if n { -t } else { t }
        }).collect();
        let a = log_sum(&terms);
        let mut rev = terms.clone();
        rev.reverse();
        let b = log_sum(&rev);
        prop_assert_eq!(a.cancelled, b.cancelled);
        if !a.cancelled {
            prop_assert_eq!(a.value.sign(), b.value.sign());
            prop_assert!((a.value.logmag() - b.value.logmag()).abs() < 1e-9);
        }
    }

    #[test]
    fn single_term_is_exact(l in -700.0f64..700.0) {
        prop_assert_eq!(log_sum(&[LogReal::from_log(l)]).value.logmag(), l);
    }

    #[test]
    fn log_complex_product(a in complex(), b in complex()) {
        let p = (LogComplex::from_complex(a) * LogComplex::from_complex(b)).to_complex();
        prop_assert!((p - a * b).norm() <= 1e-13 * (a * b).norm());
    }

    #[test]
    fn convex_defect_invariants(x in prop::collection::vec(-5.0f64..5.0, 3..40), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let d = convex_fit_defect(&x);
        prop_assert!(d >= 0.0);
        let affine: Vec<f64> = x.iter().enumerate().map(|(n, v)| v + a + b * n as f64).collect();
        prop_assert!((convex_fit_defect(&affine) - d).abs() < 1e-12);
        let fit = convex_fit(&x);
        let worst = fit.fitted.iter().zip(&x).map(|(f, v)| (f - v).abs()).fold(0.0, f64::max);
        prop_assert!((worst - d).abs() < 1e-12);
        for w in fit.fitted.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
        }
    }

    #[test]
    fn convex_sequences_have_no_defect(c in prop::collection::vec(0.0f64..3.0, 3..30), x0 in -5.0f64..5.0, s0 in -5.0f64..5.0) {
        // second differences c_n ≥ 0 integrate to a convex sequence
        let mut x = vec![x0];
        let mut s = s0;
        for v in &c {
            x.push(x[x.len() - 1] + s);
            s += v;
        }
        prop_assert!(convex_fit_defect(&x) < 1e-12);
    }

    #[test]
    fn deflate_inverts_multiply(c in prop::collection::vec(complex(), 1..12), root in complex()) {
        let p = PolyCoeffs::from_complex(&c);
        let q = deflate(&p.multiply_root(LogComplex::from_complex(root)), LogComplex::from_complex(root)).unwrap();
        prop_assert!(q.residual < 1e-9);
        for (a, b) in q.quotient.coeffs.iter().zip(&c) {
            prop_assert!((a.to_complex() - b).norm() <= 1e-9 * b.norm());
        }
    }

    #[test]
    fn log_eval_is_horner(c in prop::collection::vec(complex(), 1..12), z in complex()) {
        let p = PolyCoeffs::from_complex(&c);
        let got = p.log_eval(&Point::from_complex(z)).to_complex();
        let want = c.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &a| acc * z + a);
        let scale: f64 = c.iter().enumerate().map(|(k, a)| a.norm() * z.norm().powi(k as i32)).sum();
        prop_assert!((got - want).norm() <= 1e-12 * scale);
    }

    #[test]
    fn moment_csv_round_trip(logm in prop::collection::vec(-1e3f64..1e3, 1..20)) {
        let tab = MomentTable::from_logm(logm.clone(), "t").unwrap();
        let mut buf = Vec::new();
        tab.write_csv(&mut buf).unwrap();
        let back = MomentTable::read_csv(buf.as_slice(), "t").unwrap();
        for (n, l) in logm.iter().enumerate() {
            prop_assert_eq!(back.log_m(n), *l);
        }
    }

    #[test]
    fn point_csv_round_trip(pts in prop::collection::vec((-10.0f64..10.0, -PI..PI), 1..20)) {
        let mut pts: Vec<Point> = pts.into_iter().map(|(l, t)| Point::new(l, t)).collect();
        pts.dedup_by(|a, b| (a.logr - b.logr).abs() < 1e-9);
        let Ok(ps) = PointSet::new(pts.clone(), "p") else { return Ok(()) };
        let mut buf = Vec::new();
        ps.write_csv(&mut buf).unwrap();
        let back = PointSet::read_csv(buf.as_slice(), "p").unwrap();
        prop_assert_eq!(back.points, ps.points);
    }
}

#[test]
fn power_moments_are_log_convex() {
    for beta in [0.5, 1.0, 1.5, 2.0, 3.0] {
        let tab = build_table(&Weight::power(beta).unwrap(), 60, &default_spec()).unwrap();
        assert!(tab.log_convexity_margin() > -1e-9, "beta = {beta}");
    }
}

#[test]
fn power_moments_closed_form() {
    // m_n = 2π Γ((2n+2)/β) / β for h = r^β
    for beta in [1.0, 3.0] {
        let tab = build_table(&Weight::power(beta).unwrap(), 30, &default_spec()).unwrap();
        for n in 0..=30 {
            let x = (2 * n + 2) as f64 / beta;
            let want = (2.0 * PI / beta).ln() + statrs::function::gamma::ln_gamma(x);
            assert!((tab.log_m(n) - want).abs() < 1e-9 * want.abs().max(1.0), "beta = {beta}, n = {n}");
        }
    }
}
