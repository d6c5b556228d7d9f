use std::sync::Arc;

use duflat::catalog::{self, FamilyParams};
use duflat::deform::{reverse_kappa0, Construction};
use duflat::field::{form_at, metric_at};
use duflat::report::{run_deform, run_navigate, run_verify, Direction, MetricSpec, ProbeConfig};
use duflat::{deform, to_navigation, ChartPoint, Verdict};

fn config(samples: usize) -> ProbeConfig {
    ProbeConfig { dim: 2, samples, seed: 42, ..ProbeConfig::default() }
}

fn spec(metric: &str, mu: f64, lambda: f64, with: Option<&str>) -> MetricSpec {
    MetricSpec { mu, lambda, with: with.map(String::from), ..MetricSpec::new(metric) }
}

#[test]
fn verify_family_passes_at_200_probes() {
    let rep = run_verify(&config(200), &spec("family", -1.0, 1.0, None), "flag").unwrap();
    assert!(rep.checks.iter().all(|c| c.verdict == Verdict::Pass), "{}", rep.table());
    assert_eq!(rep.config.seed, 42);
    assert_eq!(rep.config.seed_source, "flag");
}

#[test]
fn verify_control_fails_dual_flatness() {
    let rep = run_verify(&config(50), &spec("csc", 1.0, 1.0, Some("cc")), "flag").unwrap();
    let df = rep.checks.iter().find(|c| c.name == "dual-flatness").unwrap();
    assert_eq!(df.verdict, Verdict::Fail);
    assert!(df.max_residual > 1e-3);
    assert_eq!(rep.exit_code(), 1);
}

/// `(dfR, drb)` is deformed data: undoing the `kappa = 0` deformation gives the
/// dually flat family, while the plain sum `dfR + drb` is not dually flat.
#[test]
fn reversing_dfr_drb_gives_the_family() {
    let (mu, lambda) = (0.5, 1.2);
    let (alpha, beta) = reverse_kappa0(
        Arc::new(catalog::dfr_metric(mu, 2).unwrap()),
        Arc::new(catalog::drb_oneform(lambda, mu, 2).unwrap()),
    );
    let family = catalog::example_family(FamilyParams::new(mu, lambda, 2).unwrap()).unwrap();
    for x in [[0.3, -0.2], [0.9, 0.4], [-0.1, 0.05]] {
        let x = ChartPoint::new(x.to_vec()).unwrap();
        let p = family.evaluate(&x);
        assert!(metric_at(alpha.as_ref(), &x).max_abs_diff(&p.a) < 1e-12);
        let b = form_at(beta.as_ref(), &x);
        assert!(b.iter().zip(&p.b).all(|(u, v)| (u - v).abs() < 1e-12));
    }

    let rep = run_verify(&config(40), &spec("dfr", mu, lambda, Some("drb")), "flag").unwrap();
    let verdict = |name: &str| rep.checks.iter().find(|c| c.name == name).unwrap().verdict;
    assert_eq!(verdict("dual-flatness"), Verdict::Fail);
    assert_eq!(verdict("equivalence-coherence"), Verdict::Pass);
}

#[test]
fn navigate_examples() {
    for (s, dir) in [
        (spec("funk", 0.0, 0.0, None), Direction::Forward),
        (spec("family", 0.0, 1.0, None), Direction::Forward),
        (spec("family", 0.0, 1.0, None), Direction::Inverse),
    ] {
        let rep = run_navigate(&config(30), &s, dir, "flag").unwrap();
        assert!(rep.checks[0].max_residual < 1e-10, "{}", s.metric);
    }
    let rep = run_navigate(&config(10), &spec("dfr", -1.0, 0.0, None), Direction::Forward, "flag").unwrap();
    assert_eq!(rep.max_wind_norm, 0.0);
}

#[test]
fn construction_carries_csc_cc_to_dfr_drb() {
    let (mu, lambda) = (-0.6, 0.9);
    let src = catalog::csc_with_cc(mu, lambda, 3).unwrap();
    let target = catalog::dfr_with_drb(mu, lambda, 3).unwrap();
    let d = deform(src.alpha().clone(), src.beta().clone(), Arc::new(Construction::new(mu, lambda).unwrap())).unwrap();
    let x = ChartPoint::new(vec![0.3, -0.4, 0.2]).unwrap();
    let gap = metric_at(d.bar_alpha.as_ref(), &x).max_abs_diff(&metric_at(target.alpha().as_ref(), &x));
    assert!(gap < 1e-12, "{gap}");
    let p = target.evaluate(&x);
    let b = form_at(d.bar_beta.as_ref(), &x);
    for i in 0..3 {
        assert!((b[i] - p.b[i]).abs() < 1e-12);
    }
}

#[test]
fn deform_report_flags_non_ode_profile() {
    let s = spec("csc", 1.0, 0.5, Some("cc"));
    let rep = run_deform(&config(20), &s, "construction", "flag").unwrap();
    let ode = rep.checks.iter().find(|c| c.name == "ode-rho").unwrap();
    assert_eq!(ode.verdict, Verdict::Fail);
    let quartic = run_deform(&config(20), &s, "quartic-root", "flag").unwrap();
    assert_eq!(quartic.exit_code(), 0, "{}", quartic.table());
}

#[test]
fn navigation_of_riemannian_input_has_no_wind() {
    let nav = to_navigation(&catalog::dfr(0.5, 2).unwrap());
    let p = nav.at(&ChartPoint::new(vec![0.2, 0.7]).unwrap()).unwrap();
    assert_eq!(p.wind, vec![0.0, 0.0]);
}

#[test]
fn config_validation() {
    let bad = [
        ProbeConfig { samples: 0, ..config(1) },
        ProbeConfig { shrink: 0.0, ..config(1) },
        ProbeConfig { shrink: 1.5, ..config(1) },
        ProbeConfig { tol: 0.0, ..config(1) },
        ProbeConfig { dim: 1, ..config(1) },
    ];
    for c in bad {
        assert!(run_verify(&c, &MetricSpec::new("euclidean"), "flag").is_err(), "{c:?}");
    }
}
