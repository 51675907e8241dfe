mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use optomech::gaussian::{change_basis, log_negativity};
use optomech::protocol::{
    approx_e_n_ver, closed_form_sigma_ent, generation_criteria, run_entangle, run_protocol,
    run_verify, single_pulse_entanglement, EntangleSchedule, VerifySchedule,
};
use optomech::{BasisMap, SystemParams};

fn ideal(n1: f64, n2: f64, chi: f64) -> SystemParams {
    SystemParams::ideal(n1 - 0.5, n2 - 0.5, chi)
}

#[test]
fn default_run_matches_leading_order_covariance() {
    let p = SystemParams::default();
    let run = run_entangle(&p, &EntangleSchedule::default()).unwrap();
    let c = run.collective();
    let n = p.n1();
    let sq = 1.0 / 16.0;
    let expected = [sq + PI * n / (2.0 * p.q1), n / 2.0, n / 2.0, sq];
    for (k, e) in expected.iter().enumerate() {
        let got = c.cov()[(k, k)];
        assert!((got / e - 1.0).abs() < 0.01, "entry {k}: {got} vs {e}");
    }
    assert!((run.e_n - 2.84).abs() < 0.01, "{}", run.e_n);
}

#[test]
fn lossless_runs_match_closed_form() {
    for (n1, n2, chi) in [(300.0, 40.0, 1.4), (12.0, 80.0, 3.0), (0.5, 0.5, 1.0)] {
        let p = ideal(n1, n2, chi);
        let run = run_entangle(&p, &EntangleSchedule::default()).unwrap();
        let cf = closed_form_sigma_ent(&p);
        assert!(common::rel_diff(run.state.cov(), &cf.sigma) < 1e-10);
    }
}

#[test]
fn closed_form_examples() {
    let cf = closed_form_sigma_ent(&ideal(0.5, 0.5, 1.0));
    assert!((cf.a1 - 5.0 / 6.0).abs() < 1e-15);

    let cf = closed_form_sigma_ent(&ideal(7.0, 3.0, 0.0));
    assert_eq!((cf.a1, cf.a2, cf.c12), (7.0, 3.0, 0.0));

    let (n1, n2, chi) = (1e8, 3e7, 30.0);
    let cf = closed_form_sigma_ent(&ideal(n1, n2, chi));
    assert!((cf.squeezed * 4.0 * chi * chi - 1.0).abs() < 1e-3);
    assert!((cf.anti_squeezed / (2.0 * n1 * n2 / (n1 + n2)) - 1.0).abs() < 1e-3);
}

#[test]
fn no_coupling_no_entanglement() {
    let p = SystemParams::default().with_chi(0.0);
    let run = run_entangle(&p, &EntangleSchedule::default()).unwrap();
    assert_eq!(run.e_n, 0.0);
    let c = run.state.cov();
    assert!((c[(0, 0)] - p.n1()).abs() < 1e-9 && c[(0, 2)] == 0.0);
}

#[test]
fn ideal_verification() {
    let chi: f64 = 2.0;
    let n = 1e4;
    let p = ideal(n, n / 3.0, chi);
    let report = run_protocol(&p, &EntangleSchedule::default(), &VerifySchedule::default()).unwrap();
    let e_ver = report.e_n_ver.unwrap();
    assert!((e_ver - (-(0.5 / (chi * chi)).log2())).abs() < 1e-3, "{e_ver}");
    assert!(e_ver <= report.e_n_ent);
    let s = report.sigma_ver.unwrap();
    assert!(s[1][1] > 0.5, "{s:?}");
}

#[test]
fn decoherent_verification() {
    let p = SystemParams::default();
    let report = run_protocol(&p, &EntangleSchedule::default(), &VerifySchedule::default()).unwrap();
    let e_ver = report.e_n_ver.unwrap();
    assert!((e_ver - approx_e_n_ver(&p)).abs() < 0.02, "{e_ver} vs {}", approx_e_n_ver(&p));
    assert!((e_ver - 2.41).abs() < 0.02);
    assert!(e_ver < report.e_n_ent);
}

#[test]
fn verification_never_exceeds_entanglement() {
    for chi in [0.8, 1.5, 3.0] {
        for q in [1e4, 1e6, f64::INFINITY] {
            let p = SystemParams::default().with_chi(chi).with_q(q);
            let run = run_entangle(&p, &EntangleSchedule::default()).unwrap();
            let ver = run_verify(&run.state, &p, run.stages[3].t, &VerifySchedule::for_params(&p)).unwrap();
            assert!(ver.e_n_ver <= run.e_n + 1e-12, "chi={chi} q={q}");
        }
    }
}

#[test]
fn generation_criteria_examples() {
    let c = generation_criteria(&SystemParams::default().with_chi(FRAC_1_SQRT_2));
    assert!(c.generation_margin.abs() < 1e-12 || !c.strong_measurement);
    let at_boundary = ideal(1e4, 1e4 / 3.0, FRAC_1_SQRT_2);
    let run = run_entangle(&at_boundary, &EntangleSchedule::default()).unwrap();
    assert!(run.e_n < 1e-3);

    let c = generation_criteria(&SystemParams::default());
    let q = c.q_threshold.unwrap();
    assert!((q - 2.0 * PI * 1e4 * 4.0 / 15.0).abs() / q < 1e-3, "{q}");
    assert!(c.strong_measurement);

    let c = generation_criteria(&SystemParams::default().with_chi(0.11));
    assert!(!c.strong_measurement);
}

#[test]
fn single_pulse_examples() {
    for chi in [1.0_f64, 2.0, 5.0] {
        // the diagonal (1/4chi^2, n/2, n/3, n) is entangled only below n = chi^2
        let n = 0.5 * chi * chi;
        let p = SystemParams::ideal(n - 0.5, 0.0, chi);
        let r = single_pulse_entanglement(&p).unwrap();
        assert!(r.entangled && r.e_n > 0.0, "{r:?}");
        let nu = (n / (4.0 * chi * chi)).sqrt().min((n * n / 6.0).sqrt());
        let expected = -(2.0 * nu).log2();
        assert!((r.e_n - expected).abs() < 1e-12);
        let above = SystemParams::ideal(2.0 * chi * chi - 0.5, 0.0, chi);
        assert!(!single_pulse_entanglement(&above).unwrap().entangled);
        // the report's own covariance gives the same E_N
        let cov = nalgebra::DMatrix::from_fn(4, 4, |i, j| r.cov[i][j]);
        let s = optomech::GaussianState::new(nalgebra::DVector::zeros(4), cov).unwrap();
        assert!((log_negativity(&s).unwrap() - r.e_n).abs() < 1e-12);
    }
    let r = single_pulse_entanglement(&SystemParams::default().with_chi(0.0)).unwrap();
    assert_eq!(r.e_n, 0.0);
}

#[test]
fn schedules_validate() {
    assert!(EntangleSchedule::default().with_tau(-1.0).validate().is_err());
    let bad = VerifySchedule {
        d_plus: f64::NAN,
        ..VerifySchedule::default()
    };
    assert!(bad.validate().is_err());
    let p = SystemParams::default();
    let s = EntangleSchedule::for_sequence(1, 0, &p);
    assert!((s.tau - 1.5 * PI).abs() < 1e-12);
}

#[test]
fn report_is_expressed_in_collective_variances() {
    let p = SystemParams::default();
    let run = run_entangle(&p, &EntangleSchedule::default()).unwrap();
    let report = run_protocol(&p, &EntangleSchedule::default(), &VerifySchedule::default()).unwrap();
    let col = change_basis(&run.state, &BasisMap::collective(2)).unwrap();
    for k in 0..4 {
        assert_eq!(report.collective_variances[k], col.cov()[(k, k)]);
    }
    assert_eq!(report.records.len(), 2);
    assert_eq!(report.verification.len(), 3);
}
