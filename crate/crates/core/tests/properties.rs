use std::sync::Arc;

use proptest::prelude::*;

use duflat::catalog::{self, ConstantForm, Euclidean, FamilyParams, Sign};
use duflat::deform::{ConstantKappa, DeformationProfile, Navigation, QuarticRoot};
use duflat::diff::jet_derivative;
use duflat::field::{metric_at, Energy, FinslerMetric, MetricField, OneFormField};
use duflat::flatness::special_residual;
use duflat::jet::Jet;
use duflat::navigation::{from_navigation, navigation_gap, randers_gap, to_navigation, NavigationData, RadialWind};
use duflat::randers::Domain;
use duflat::riemann::{christoffel, covariant_decomposition, metric_gradient};
use duflat::{
    deform, dual_flatness_residual, finsler_spray, fundamental_tensor, riemann_spray, sectional_curvature, ChartPoint,
    RandersMetric, TangentVector,
};

fn catalog_entry(k: usize, n: usize) -> RandersMetric {
    match k {
        0 => catalog::euclidean(n),
        1 => catalog::funk(n, Sign::Plus),
        2 => catalog::funk(n, Sign::Minus),
        3 => catalog::example_family(FamilyParams::new(-1.0, 1.0, n).unwrap()),
        4 => catalog::example_family(FamilyParams::new(0.0, 1.0, n).unwrap()),
        5 => catalog::example_family(FamilyParams::new(1.0, 0.7, n).unwrap()),
        6 => catalog::example_family(FamilyParams::new(-0.25, 0.5, n).unwrap()),
        7 => catalog::csc(0.5, n),
        8 => catalog::csc_with_cc(-1.0, 0.8, n),
        9 => catalog::dfr(-1.0, n),
        10 => catalog::dfr_with_drb(0.5, 1.2, n),
        _ => catalog::dfr_with_drb(-1.0, 0.6, n),
    }
    .unwrap()
}

const CATALOG: usize = 12;

/// `(x, y)` with `x` in the shrunk domain, `|y|` in `[0.2, 2]`.
fn chart(r: &RandersMetric, u: f64, dir: &[f64], v: &[f64]) -> Option<(ChartPoint, TangentVector)> {
    let d = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
    let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if d < 1e-3 || vn < 0.2 {
        return None;
    }
    let radius = r.domain().sampling_radius(0.9);
    let x = ChartPoint::new(dir.iter().map(|c| c / d * u * radius).collect()).unwrap();
    Some((x, TangentVector::new(v.to_vec()).unwrap()))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn probe() -> impl Strategy<Value = (usize, usize, f64, Vec<f64>, Vec<f64>)> {
    (0..CATALOG, 2usize..=3).prop_flat_map(|(k, n)| (Just(k), Just(n), 0.0f64..1.0, coords(n), prop::collection::vec(-2.0f64..2.0, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jets_obey_leibniz(a in -2.0f64..2.0, b in 0.1f64..2.0, da in -1.0f64..1.0, db in -1.0f64..1.0) {
        let f = Jet::seeded(a, 0, da).exp() * Jet::seeded(a, 0, da).powi(3);
        let g = Jet::seeded(b, 0, db).sqrt();
        let lhs = (f * g).coeff(1);
        let rhs = f.value() * g.coeff(1) + g.value() * f.coeff(1);
        prop_assert!(rel(lhs, rhs) < 1e-14, "{lhs} {rhs}");
    }

    #[test]
    fn energy_is_two_homogeneous((k, n, u, dir, v) in probe(), lambda in 0.1f64..5.0) {
        let r = catalog_entry(k, n);
        let Some((x, y)) = chart(&r, u, &dir, &v) else { return Ok(()) };
        let f = Energy(&r);
        let f2 = r.energy(&x.jets(), &y.jets()).value();
        let euler: f64 = (0..n).map(|i| y.coords()[i] * jet_derivative(&f, &x, &y, &[], &[i]).unwrap()).sum();
        prop_assert!(rel(euler, 2.0 * f2) < 1e-10, "{euler} {f2}");
        let scaled = r.norm(&x.jets(), &y.scaled(lambda).jets()).value();
        prop_assert!(rel(scaled, lambda * f2.sqrt()) < 1e-12);
    }

    #[test]
    fn mixed_partials_commute((k, n, u, dir, v) in probe()) {
        let r = catalog_entry(k, n);
        let Some((x, y)) = chart(&r, u, &dir, &v) else { return Ok(()) };
        let f = Energy(&r);
        let a = jet_derivative(&f, &x, &y, &[0, 1], &[n - 1]).unwrap();
        let b = jet_derivative(&f, &x, &y, &[1, 0], &[n - 1]).unwrap();
        prop_assert!(rel(a, b) < 1e-12);
        let c = jet_derivative(&f, &x, &y, &[1], &[0, n - 1]).unwrap();
        let d = jet_derivative(&f, &x, &y, &[1], &[n - 1, 0]).unwrap();
        prop_assert!(rel(c, d) < 1e-12);
    }

    /// `[F^2]_{x^k y^l} y^k` and `[F^2]_{x^l}` both scale like `|y|^2`.
    #[test]
    fn shen_residual_is_two_homogeneous((k, n, u, dir, v) in probe(), lambda in prop::sample::select(vec![0.5, 2.0])) {
        let r = catalog_entry(k, n);
        let Some((x, y)) = chart(&r, u, &dir, &v) else { return Ok(()) };
        let base = dual_flatness_residual(&r, &x, &y).unwrap().components;
        let scaled = dual_flatness_residual(&r, &x, &y.scaled(lambda)).unwrap().components;
        let scale = 1.0 + base.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!((b - lambda * lambda * a).abs() / (lambda * lambda * scale) < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn spray_is_two_homogeneous((k, n, u, dir, v) in probe(), lambda in 0.2f64..3.0) {
        let r = catalog_entry(k, n);
        let Some((x, y)) = chart(&r, u, &dir, &v) else { return Ok(()) };
        let g = finsler_spray(&r, &x, &y).unwrap();
        let h = finsler_spray(&r, &x, &y.scaled(lambda)).unwrap();
        let scale = 1.0 + g.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for (a, b) in g.iter().zip(&h) {
            prop_assert!((b - lambda * lambda * a).abs() / (lambda * lambda * scale) < 1e-10);
        }
    }

    #[test]
    fn finsler_spray_of_riemannian_input_is_riemann_spray((k, n, u, dir, v) in probe()) {
        let r = catalog_entry(k, n);
        let riem = RandersMetric::riemannian(r.alpha().clone(), r.domain());
        let Some((x, y)) = chart(&r, u, &dir, &v) else { return Ok(()) };
        let g = finsler_spray(&riem, &x, &y).unwrap();
        let h = riemann_spray(r.alpha().as_ref(), &x, &y).unwrap();
        for (a, b) in g.iter().zip(&h) {
            prop_assert!(rel(*a, *b) < 1e-10);
        }
    }

    #[test]
    fn catalog_is_randers_and_strongly_convex((k, n, u, dir, v) in probe()) {
        let r = catalog_entry(k, n);
        let Some((x, y)) = chart(&r, u, &dir, &v) else { return Ok(()) };
        let p = r.at(&x).unwrap();
        prop_assert!(p.b_sq < 1.0);
        prop_assert!(fundamental_tensor(&r, &x, &y).unwrap().min_eigenvalue() > 0.0);
    }

    #[test]
    fn navigation_round_trips((k, n, u, dir, _v) in probe()) {
        let r = catalog_entry(k, n);
        let Some((x, _)) = chart(&r, u, &dir, &[1.0; 3][..n]) else { return Ok(()) };
        let nav = to_navigation(&r);
        prop_assert!(randers_gap(&from_navigation(&nav), &r, &x) < 1e-10);
        prop_assert!(navigation_gap(&to_navigation(&from_navigation(&nav)), &nav, &x) < 1e-10);
    }

    #[test]
    fn euclidean_inward_wind_is_funk(u in 0.0f64..0.9, dir in coords(3), v in coords(3)) {
        let funk = catalog::funk(3, Sign::Plus).unwrap();
        let Some((x, y)) = chart(&funk, u, &dir, &v) else { return Ok(()) };
        let nav = NavigationData::new(Arc::new(Euclidean::new(3)), Arc::new(RadialWind { n: 3, scale: -1.0 }), Domain::ball(1.0)).unwrap();
        let a = from_navigation(&nav).norm(&x.jets(), &y.jets()).value();
        let b = funk.norm(&x.jets(), &y.jets()).value();
        prop_assert!(rel(a, b) < 1e-10);
    }

    #[test]
    fn christoffel_symmetric_and_metric_compatible((k, n, u, dir, _v) in probe()) {
        let r = catalog_entry(k, n);
        let Some((x, _)) = chart(&r, u, &dir, &[1.0; 3][..n]) else { return Ok(()) };
        let alpha = r.alpha().as_ref();
        let g = christoffel(alpha, &x).unwrap();
        let a = metric_at(alpha, &x);
        let da = metric_gradient(alpha, &x).unwrap();
        for i in 0..n {
            for j in 0..n {
                for kk in 0..n {
                    prop_assert_eq!(g.get(i, j, kk), g.get(i, kk, j));
                    let compat = da[kk][(i, j)]
                        - (0..n).map(|l| g.get(l, i, kk) * a[(l, j)] + g.get(l, j, kk) * a[(i, l)]).sum::<f64>();
                    prop_assert!(compat.abs() < 1e-10, "{compat}");
                }
            }
        }
    }

    #[test]
    fn closed_conformal_pair(mu in -1.0f64..1.0, lambda in -1.5f64..1.5, u in 0.0f64..1.0, dir in coords(3), v in coords(3)) {
        let r = catalog::csc_with_cc(mu, lambda, 3).unwrap();
        let Some((x, y)) = chart(&r, u, &dir, &v) else { return Ok(()) };
        let dec = covariant_decomposition(r.alpha().as_ref(), r.beta().as_ref(), &x, &y).unwrap();
        let a = metric_at(r.alpha().as_ref(), &x);
        let w = 1.0 + mu * x.norm().powi(2);
        let sigma = lambda / w.sqrt();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!(dec.sij[(i, j)].abs() < 1e-12);
                prop_assert!((dec.rij[(i, j)] - sigma * a[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn csc_sectional_curvature_is_mu(mu in -2.0f64..2.0, u in 0.0f64..1.0, dir in coords(3), p in coords(3), q in coords(3)) {
        let r = catalog::csc(mu, 3).unwrap();
        let Some((x, e1)) = chart(&r, u, &dir, &p) else { return Ok(()) };
        let Ok(e2) = TangentVector::new(q) else { return Ok(()) };
        match sectional_curvature(r.alpha().as_ref(), &x, &e1, &e2) {
            Ok(k) => prop_assert!((k - mu).abs() < 1e-8, "{k}"),
            Err(duflat::Error::DegeneratePlane) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    /// Deformations keep the trivial system: constant `beta` on Euclidean `alpha`
    /// satisfies it exactly, and a small linear perturbation stays proportionally small.
    #[test]
    fn deformations_preserve_triviality(c in coords(2), eps in 0.0f64..1e-3, u in 0.0f64..1.0, dir in coords(2), which in 0usize..3) {
        let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(cn < 0.6);
        let beta: Arc<dyn OneFormField> = if eps == 0.0 {
            Arc::new(ConstantForm::new(c.clone()))
        } else {
            Arc::new(Perturbed { c: c.clone(), eps })
        };
        let alpha: Arc<dyn MetricField> = Arc::new(Euclidean::new(2));
        let base = RandersMetric::new(alpha.clone(), beta.clone(), Domain::ball(1.0)).unwrap();
        let Some((x, _)) = chart(&base, u * 0.3, &dir, &[1.0, 0.0]) else { return Ok(()) };
        let profile: Arc<dyn DeformationProfile> = match which {
            0 => Arc::new(Navigation),
            1 => Arc::new(QuarticRoot),
            _ => Arc::new(ConstantKappa(0.5)),
        };
        let input = special_residual(alpha.as_ref(), beta.as_ref(), &x).unwrap();
        let d = deform(alpha, beta, profile).unwrap();
        for (a, b) in [(&d.tilde_alpha, &d.tilde_beta), (&d.hat_alpha, &d.hat_beta), (&d.bar_alpha, &d.bar_beta)] {
            let out = special_residual(a.as_ref(), b.as_ref(), &x).unwrap();
            let bound = 1e-12 + 100.0 * (input[0] + input[1] + eps);
            prop_assert!(out[0] < bound && out[1] < bound, "{input:?} -> {out:?}");
        }
    }
}

/// `b = c + eps x`.
struct Perturbed {
    c: Vec<f64>,
    eps: f64,
}

impl OneFormField for Perturbed {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        self.c.iter().zip(x).map(|(&c, &v)| v * self.eps + c).collect()
    }
}
