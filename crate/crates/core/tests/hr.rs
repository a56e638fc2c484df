use mdlvq::experiment::Experiment;
use mdlvq::hr::{
    default_psi, design_objective, optimal_nu, predict_distortion, predict_from_rates, rates, rescaled_nu, snap_and_rescale, tau_star,
    DesignConstants, SourceModel,
};
use mdlvq::lattice::{sphere_second_moment, LatticeKind};
use mdlvq::loss::ChannelModel;
use mdlvq::Error;

fn consts(kind: LatticeKind, psi: f64) -> DesignConstants {
    DesignConstants {
        psi,
        g_c: kind.second_moment(),
        g_s: sphere_second_moment(kind.dim()).unwrap(),
    }
}

fn gauss(dim: usize) -> SourceModel {
    SourceModel::gaussian(dim, 1.0).unwrap()
}

/// Coarse scan then ternary refinement in log(nu).
fn scan_minimum(f: impl Fn(f64) -> f64) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=4000 {
        let t = -30.0 + 30.0 * i as f64 / 4000.0;
        let v = f(t.exp2());
        if v < best.0 {
            best = (v, t);
        }
    }
    let (mut lo, mut hi) = (best.1 - 0.02, best.1 + 0.02);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1.exp2()) < f(m2.exp2()) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    ((lo + hi) / 2.0).exp2()
}

#[test]
fn gaussian_entropy() {
    let h = gauss(2).h;
    let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2();
    assert!((h - expected).abs() < 1e-12);
    assert!(SourceModel::gaussian(2, 0.0).is_err());
}

#[test]
fn tau_matches_definition() {
    let src = gauss(2);
    for (k, rstar) in [(2, 4.0), (3, 6.0), (4, 5.5)] {
        let expected = (2.0 * (k as f64 * src.h - rstar)).exp2();
        assert!((tau_star(&src, k, rstar) / expected - 1.0).abs() < 1e-12);
    }
}

#[test]
fn closed_form_nu_minimizes_objective() {
    for (kind, p) in [
        (LatticeKind::Z2, vec![0.05, 0.05]),
        (LatticeKind::A2, vec![0.01, 0.2]),
        (LatticeKind::Z1, vec![0.1, 0.1]),
        (LatticeKind::Z2, vec![0.1, 0.2, 0.05]),
    ] {
        let src = gauss(kind.dim());
        let ch = ChannelModel::new(p.clone()).unwrap();
        let k = ch.k();
        let c = consts(kind, default_psi(kind.dim(), k).0);
        let rstar = 3.0 * k as f64;
        let nu = optimal_nu(&src, k, rstar, &c, &ch).unwrap();
        let num = scan_minimum(|v| design_objective(v, &src, k, rstar, &c, &ch).unwrap());
        assert!((nu / num - 1.0).abs() < 1e-6, "{kind} {p:?}: {nu} vs {num}");
    }
}

#[test]
fn rescaled_nu_meets_entropy_target() {
    let src = gauss(2);
    for n in [vec![5u64, 13], vec![9, 9, 25], vec![1, 29]] {
        let rstar = 7.0;
        let nu = rescaled_nu(&n, &src, rstar);
        let nf: Vec<f64> = n.iter().map(|&x| x as f64).collect();
        let (rc, ri) = rates(nu, &nf, &src).unwrap();
        assert!((ri.iter().sum::<f64>() - rstar).abs() < 1e-9, "{n:?}");
        assert!((rc - (src.h - nu.log2() / 2.0)).abs() < 1e-12);
    }
}

#[test]
fn prediction_forms_agree() {
    let src = gauss(2);
    let ch = ChannelModel::new(vec![0.03, 0.08]).unwrap();
    let c = consts(LatticeKind::A2, 1.0);
    let n = [13.0, 7.0];
    let a = predict_distortion(0.01, &n, &src, &ch, &c).unwrap();
    let (rc, ri) = rates(0.01, &n, &src).unwrap();
    let b = predict_from_rates(rc, &ri, &src, &ch, &c).unwrap();
    assert!((a.total - b.total).abs() < 1e-12 * a.total);
    assert!((a.total - (a.central_term + a.zero_term + a.side_term)).abs() < 1e-15);
    assert!((a.zero_term - 0.03 * 0.08 * src.mean_power).abs() < 1e-15);
}

#[test]
fn snapping_prefers_nearest_in_log_domain() {
    let src = gauss(2);
    let allowed = [1, 5, 9, 13, 17, 25, 29];
    // sqrt(5*9) ~ 6.708 is the log-midpoint between 5 and 9
    let (n, _) = snap_and_rescale(&[6.6, 6.8, 11.5], &src, 6.0, &allowed).unwrap();
    assert_eq!(n, vec![5, 9, 13]);
    let (n, _) = snap_and_rescale(&[6.70, 6.72], &src, 6.0, &allowed).unwrap();
    assert_eq!(n, vec![5, 9]);
    assert!(snap_and_rescale(&[3.0], &src, 6.0, &[]).is_err());
}

#[test]
fn default_expansion_factor() {
    assert_eq!(default_psi(2, 2), (1.0, false));
    assert_eq!(default_psi(1, 2), (1.0, false));
    let (psi3, warn) = default_psi(2, 3);
    assert!(!warn);
    assert!((psi3 - 2f64.sqrt()).abs() < 1e-12);
    assert!(default_psi(1, 3).1);
}

#[test]
fn error_paths() {
    let src = gauss(2);
    let c = consts(LatticeKind::Z2, 1.0);
    let lossless = ChannelModel::new(vec![0.0, 0.0]).unwrap();
    assert!(matches!(optimal_nu(&src, 2, 6.0, &c, &lossless), Err(Error::DegenerateChannel(_))));
    let one = ChannelModel::new(vec![0.1]).unwrap();
    assert!(optimal_nu(&src, 1, 6.0, &c, &one).is_err());
    let exp = Experiment {
        rate_split: Some(vec![1.2, -0.2]),
        ..Experiment::new(LatticeKind::Z2, src, ChannelModel::new(vec![0.1, 0.1]).unwrap(), 4.0)
    };
    assert!(matches!(exp.design(), Err(Error::InfeasibleRate { .. })));
}

#[test]
fn four_descriptions_respond_monotonically_to_one_loss() {
    let src = gauss(2);
    let mut prev: Option<(f64, f64, f64)> = None;
    for p3 in [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5] {
        let ch = ChannelModel::new(vec![0.05, 0.05, 0.05, p3]).unwrap();
        let exp = Experiment::new(LatticeKind::Z2, src, ch, 8.0);
        let d = exp.design().unwrap();
        let p = predict_distortion(d.nu_opt, &d.ni_opt, &exp.source, &exp.channel, &exp.constants().unwrap()).unwrap();
        let cur = (d.nu_opt, d.ni_opt[0], p.total);
        if let Some(old) = prev {
            // a worse link pushes toward a finer central cell, coarser sides
            assert!(cur.0 > old.0, "nu at p3 = {p3}");
            assert!(cur.1 < old.1, "N at p3 = {p3}");
            assert!(cur.2 > old.2, "distortion at p3 = {p3}");
        }
        assert_eq!(d.ni_snapped.len(), 4);
        prev = Some(cur);
    }
}
