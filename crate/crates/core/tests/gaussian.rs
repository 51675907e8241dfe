mod common;

use nalgebra::{DMatrix, DVector};
use optomech::gaussian::{
    attach_vacuum_optical_mode, change_basis, log_negativity, partial_trace, symplectic_eigenvalues,
    thermal_state,
};
use optomech::protocol::closed_form_sigma_ent;
use optomech::{BasisMap, Error, GaussianState, SystemParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

#[test]
fn thermal_states() {
    let vac = thermal_state(0.5, 0.5).unwrap();
    assert_eq!(vac.cov(), &diag(&[0.5; 4]));

    let (n1, n2) = (1e4 + 0.5, 1e4 / 3.0 + 0.5);
    let s = thermal_state(n1, n2).unwrap();
    let nu = symplectic_eigenvalues(s.cov()).unwrap();
    assert!((nu[0] - n2).abs() < 1e-9 && (nu[1] - n1).abs() < 1e-9);

    assert!(matches!(thermal_state(0.4, 1.0), Err(Error::InvalidParameter { .. })));
}

#[test]
fn optical_mode_is_appended_in_vacuum() {
    let s = attach_vacuum_optical_mode(&GaussianState::vacuum(2));
    assert_eq!(s.cov(), &diag(&[0.5; 6]));
    let t = attach_vacuum_optical_mode(&thermal_state(7.0, 7.0).unwrap());
    assert_eq!(t.cov(), &diag(&[7.0, 7.0, 7.0, 7.0, 0.5, 0.5]));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        assert!(attach_vacuum_optical_mode(&common::random_state(&mut rng, 2, 20.0, 1.5)).is_bona_fide());
    }
}

#[test]
fn partial_traces() {
    let s = thermal_state(2.0, 5.0).unwrap();
    assert_eq!(partial_trace(&s, &[1]).unwrap().cov(), &diag(&[5.0, 5.0]));

    let p = SystemParams::ideal(40.0, 11.0, 1.3);
    let cf = closed_form_sigma_ent(&p);
    let ent = GaussianState::new(DVector::zeros(4), cf.sigma.clone()).unwrap();
    let a1 = partial_trace(&ent, &[0]).unwrap();
    assert_eq!(a1.cov(), &diag(&[cf.a1, cf.a1]));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s3 = common::random_state(&mut rng, 3, 10.0, 1.0);
    let kept = partial_trace(&s3, &[0, 1]).unwrap();
    assert_eq!(kept.cov(), &s3.cov().view((0, 0), (4, 4)).into_owned());
    assert!(partial_trace(&s3, &[3]).is_err());
    assert!(partial_trace(&s3, &[1, 1]).is_err());
}

#[test]
fn basis_changes() {
    let s = thermal_state(3.0, 3.0).unwrap();
    assert_eq!(change_basis(&s, &BasisMap::identity(2)).unwrap(), s);
    let bs = change_basis(&s, &BasisMap::collective(2)).unwrap();
    assert!((bs.cov() - s.cov()).amax() < 1e-14);

    let (n1, n2) = (9.0, 2.0);
    let col = change_basis(&thermal_state(n1, n2).unwrap(), &BasisMap::collective(2)).unwrap();
    assert!((col.cov()[(0, 0)] - (n1 + n2) / 2.0).abs() < 1e-12);
    assert!((col.cov()[(0, 2)].abs() - (n1 - n2) / 2.0).abs() < 1e-12);

    let m = BasisMap::collective(2);
    let back = change_basis(&col, &m.inverse()).unwrap();
    assert!((back.cov() - thermal_state(n1, n2).unwrap().cov()).amax() < 1e-12);
}

#[test]
fn symplectic_spectra() {
    let nu = symplectic_eigenvalues(GaussianState::vacuum(3).cov()).unwrap();
    assert!(nu.len() == 3 && nu.iter().all(|v| (v - 0.5).abs() < 1e-12));
    assert!((symplectic_eigenvalues(&diag(&[4.0, 4.0])).unwrap()[0] - 4.0).abs() < 1e-12);
    let r: f64 = 0.8;
    let sq = diag(&[(-2.0 * r).exp() / 2.0, (2.0 * r).exp() / 2.0]);
    assert!((symplectic_eigenvalues(&sq).unwrap()[0] - 0.5).abs() < 1e-12);
}

fn collective_to_canonical(d: &[f64]) -> GaussianState {
    let col = GaussianState::new(DVector::zeros(4), diag(d)).unwrap();
    change_basis(&col, &BasisMap::collective(2).inverse()).unwrap()
}

#[test]
fn log_negativity_examples() {
    assert_eq!(log_negativity(&GaussianState::vacuum(2)).unwrap(), 0.0);

    let (chi, n, q) = (2.0_f64, 1e4, 1e6);
    let sq = 1.0 / (4.0 * chi * chi);
    let s = collective_to_canonical(&[sq + std::f64::consts::PI * n / (2.0 * q), n / 2.0, n / 2.0, sq]);
    let expected = -((0.5 / (chi * chi)) * (1.0 + 2.0 * std::f64::consts::PI * n * chi * chi / q).sqrt()).log2();
    let e = log_negativity(&s).unwrap();
    assert!((e - expected).abs() < 1e-3, "{e} vs {expected}");
    assert!((e - 2.84).abs() < 0.01);

    // 2 n e^-r >= 1 is separable
    let (n, r) = (3.0_f64, 1.0_f64);
    assert!(2.0 * n * (-r).exp() >= 1.0);
    let s = collective_to_canonical(&[n * (-r).exp(), n * r.exp(), n * r.exp(), n * (-r).exp()]);
    assert_eq!(log_negativity(&s).unwrap(), 0.0);
}

#[test]
fn rejects_unphysical_states() {
    let sub_vacuum = GaussianState::new(DVector::zeros(2), diag(&[0.1, 0.1])).unwrap();
    assert!(!sub_vacuum.is_bona_fide());
    assert!(matches!(sub_vacuum.validate(), Err(Error::NotBonaFide(_))));
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
    assert!(matches!(GaussianState::new(DVector::zeros(2), asym), Err(Error::NotSymmetric(_))));
    assert!(GaussianState::new(DVector::zeros(3), diag(&[1.0, 1.0])).is_err());
}
