//! Property tests of the Nevanlinna axioms, the boundary-limit criterion
//! equivalence and the soundness of certified tail bounds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use weyl_spectra::counterexample::{build_unbounded, CounterexampleSpec, WeightsMeta};
use weyl_spectra::herglotz::{
    boundary_value, default_y_ladder, evaluate, imag_quotient_limit, second_moment_at,
    HerglotzFunction, MatrixMeasure, QuotientClassification, SecondMomentResult,
    STABILIZATION_RTOL,
};
use weyl_spectra::linalg::{basis_vector, min_eigenvalue, CMatrix};

type CaseII = weyl_spectra::counterexample::CounterexampleMeasure;

fn case_ii(k: usize, j: usize) -> CaseII {
    build_unbounded(&CounterexampleSpec {
        mu1: 0.0,
        mu2: f64::INFINITY,
        k_points: k,
        j_satellites: j,
        defect: 1,
    })
    .unwrap()
}

/// Hermitian PSD matrix from raw entries (via G^H G).
fn psd_from(dim: usize, raw: &[f64]) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |i, jj| {
        let k = 2 * (i * dim + jj);
        Complex64::new(raw[k], raw[k + 1])
    });
    g.adjoint() * g
}

fn hermitian_from(dim: usize, raw: &[f64]) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |i, jj| {
        let k = 2 * (i * dim + jj);
        Complex64::new(raw[k], raw[k + 1])
    });
    let adj = g.adjoint();
    (g + adj) * Complex64::new(0.5, 0.0)
}

prop_compose! {
    fn arb_phi()(dim in 1usize..=3)(
        dim in Just(dim),
        ts in proptest::collection::vec(-10.0f64..10.0, 1..=6),
        weights in proptest::collection::vec(
            proptest::collection::vec(-1.0f64..1.0, 2 * dim * dim), 6),
        c0_raw in proptest::collection::vec(-1.0f64..1.0, 2 * dim * dim),
        c1_raw in proptest::collection::vec(-1.0f64..1.0, 2 * dim * dim),
    ) -> HerglotzFunction {
        let mut atoms = Vec::new();
        for (i, &t) in ts.iter().enumerate() {
            let w = psd_from(dim, &weights[i]);
            if w.norm() > 1e-6 {
                atoms.push((t, w));
            }
        }
        if atoms.is_empty() {
            atoms.push((0.0, CMatrix::identity(dim, dim)));
        }
        let measure = MatrixMeasure::new(dim, atoms, None).unwrap();
        let c0 = hermitian_from(dim, &c0_raw);
        let c1 = psd_from(dim, &c1_raw);
        HerglotzFunction::new(c0, c1, measure).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nevanlinna_positivity_and_symmetry(
        phi in arb_phi(),
        re in -10.0f64..10.0,
        im in 1e-3f64..10.0,
    ) {
        let z = Complex64::new(re, im);
        let up = evaluate(&phi, z, phi.measure.len()).unwrap();
        let d = phi.dim();
        let imag = CMatrix::from_fn(d, d, |i, j| {
            (up.value[(i, j)] - up.value[(j, i)].conj()) * Complex64::new(0.0, -0.5)
        });
        prop_assert!(min_eigenvalue(&imag) >= -(up.error_bound + 1e-10));
        let dn = evaluate(&phi, z.conj(), phi.measure.len()).unwrap();
        let adj = CMatrix::from_fn(d, d, |i, j| up.value[(j, i)].conj());
        prop_assert!((dn.value - adj).norm() <= up.error_bound + dn.error_bound + 1e-10);
    }

    #[test]
    fn quotient_and_second_moment_classify_identically(
        phi in arb_phi(),
        pick in 0usize..8,
        lambda_raw in -12.0f64..12.0,
    ) {
        // Half the time aim exactly at an atom.
        let atoms = phi.measure.atoms();
        let lambda = if pick < 4 && pick < atoms.len() {
            atoms[pick].t
        } else {
            lambda_raw
        };
        let h = basis_vector(phi.dim(), 0);
        let ys = default_y_ladder();
        let quotient = imag_quotient_limit(&phi, lambda, &h, &ys, 1e12, STABILIZATION_RTOL);
        let moment = second_moment_at(&phi.measure, lambda, &h, phi.measure.len(), 1e12);
        let (q, m) = (quotient.unwrap(), moment.unwrap());
        prop_assert_eq!(q.is_finite(), m.is_finite());
        if let (QuotientClassification::Finite { limit, error_bound: qe, .. },
                SecondMomentResult::Finite { value, error_bound: me }) = (&q, &m) {
            let c1_term = weyl_spectra::linalg::quadratic_form(&phi.c1, &h);
            prop_assert!((limit - value - c1_term).abs() <= qe + me + 1e-9);
        }
    }

    #[test]
    fn quotient_ladder_is_monotone(phi in arb_phi(), lambda in -12.0f64..12.0) {
        let h = basis_vector(phi.dim(), 0);
        let ys = default_y_ladder();
        if let Ok(QuotientClassification::Finite { table, .. } | QuotientClassification::Infinite { table, .. }) =
            imag_quotient_limit(&phi, lambda, &h, &ys, 1e12, STABILIZATION_RTOL)
        {
            for w in table.windows(2) {
                prop_assert!(w[1].1 >= w[0].1);
            }
        }
    }
}

#[test]
fn evaluate_matches_direct_double_summation() {
    // Truncated unbounded family, all retained atoms summed independently
    // in (k, j) order straight from the defining formulas.
    let cm = case_ii(3, 20);
    let z = Complex64::new(1.5, 0.1);
    let mut direct = Complex64::new(0.0, 0.0);
    for k in 1..=3u32 {
        for j in 1..=20u32 {
            let t = k as f64 + 1.0 / (j as f64 + 1.0);
            let f = 0.5f64.powi(j as i32) / ((j as f64 + 1.0) * (j as f64 + 1.0));
            direct += Complex64::new(f, 0.0)
                * (Complex64::new(1.0, 0.0) / (Complex64::new(t, 0.0) - z)
                    - Complex64::new(t / (1.0 + t * t), 0.0));
        }
    }
    let phi = HerglotzFunction::pure(cm.measure.clone());
    let v = evaluate(&phi, z, phi.measure.len()).unwrap();
    assert!(
        (v.value[(0, 0)] - direct).norm() <= 1e-12 + v.error_bound,
        "evaluate {} vs direct {}",
        v.value[(0, 0)],
        direct
    );
}

#[test]
fn second_moment_window_value_is_geometric_series() {
    let cm = case_ii(4, 60);
    let h = basis_vector(1, 0);
    for k in 1..=4 {
        let lam = k as f64;
        let window = cm.cluster_window(k);
        let r =
            weyl_spectra::herglotz::second_moment_window(&cm.measure, lam, &h, window).unwrap();
        let (v, e) = r.finite_value().unwrap();
        assert!((v - 1.0).abs() <= 1e-14 + e, "window sum {v} at k = {k}");
    }
}

#[test]
fn tail_bounds_are_sound_under_truncation_refinement() {
    let cm = case_ii(3, 30);
    let phi = HerglotzFunction::pure(cm.measure.clone());
    let n = phi.measure.len();
    for z in [
        Complex64::new(0.3, 0.7),
        Complex64::new(2.2, 0.05),
        Complex64::new(-4.0, 1.0),
    ] {
        let mut prev: Option<(Complex64, f64)> = None;
        let mut trunc = 8;
        while trunc <= n {
            let v = evaluate(&phi, z, trunc).unwrap();
            if let Some((pv, pe)) = prev {
                // Refinement never leaves the previous certified interval.
                assert!(
                    (v.value[(0, 0)] - pv).norm() <= pe + 1e-12,
                    "refinement escaped interval at {z}"
                );
                assert!(v.error_bound <= pe + 1e-12);
            }
            prev = Some((v.value[(0, 0)], v.error_bound));
            trunc *= 2;
        }
    }
    // Second-moment version at an accumulation point.
    let h = basis_vector(1, 0);
    let lam = 2.0;
    let full = second_moment_at(&cm.measure, lam, &h, n, 1e12).unwrap();
    let half = second_moment_at(&cm.measure, lam, &h, n / 2, 1e12).unwrap();
    let (fv, fe) = full.finite_value().unwrap();
    let (hv, he) = half.finite_value().unwrap();
    assert!((fv - hv).abs() <= he + 1e-12);
    assert!(fe <= he + 1e-12);
}

#[test]
fn tail_bounds_cover_what_a_refined_build_materializes() {
    // Prefix stability makes a (K', J') build a superset of a (K, J) one,
    // so the extra atoms it materializes are a chunk of the smaller
    // build's certified tail. The difference must sit inside the smaller
    // bounds, for evaluation and for second moments alike.
    let small = case_ii(3, 30);
    let big = case_ii(6, 60);
    let phi_small = HerglotzFunction::pure(small.measure.clone());
    let phi_big = HerglotzFunction::pure(big.measure.clone());
    for z in [
        Complex64::new(0.5, 0.3),
        Complex64::new(2.5, 1.0),
        Complex64::new(-1.0, 0.01),
    ] {
        let a = evaluate(&phi_small, z, phi_small.measure.len()).unwrap();
        let b = evaluate(&phi_big, z, phi_big.measure.len()).unwrap();
        let gap = (a.value[(0, 0)] - b.value[(0, 0)]).norm();
        assert!(
            gap <= a.error_bound + 1e-13,
            "evaluation drift {gap:.3e} exceeds the certified bound {:.3e} at {z}",
            a.error_bound
        );
    }
    let h = basis_vector(1, 0);
    for &lam in &small.accumulation_points {
        let a = second_moment_at(&small.measure, lam, &h, small.measure.len(), 1e12).unwrap();
        let b = second_moment_at(&big.measure, lam, &h, big.measure.len(), 1e12).unwrap();
        let (av, ae) = a.finite_value().unwrap();
        let (bv, _) = b.finite_value().unwrap();
        assert!(
            (av - bv).abs() <= ae + 1e-13,
            "second-moment drift at {lam}: {av} vs {bv}, bound {ae:.3e}"
        );
    }
    // Same comparison for the bounded construction.
    let spec = |k, j| weyl_spectra::counterexample::CounterexampleSpec {
        mu1: 0.0,
        mu2: 1.0,
        k_points: k,
        j_satellites: j,
        defect: 1,
    };
    let small = weyl_spectra::counterexample::build_bounded(&spec(2, 20)).unwrap();
    let big = weyl_spectra::counterexample::build_bounded(&spec(5, 40)).unwrap();
    for &lam in &small.accumulation_points {
        let a = second_moment_at(&small.measure, lam, &h, small.measure.len(), 1e12).unwrap();
        let b = second_moment_at(&big.measure, lam, &h, big.measure.len(), 1e12).unwrap();
        let (av, ae) = a.finite_value().unwrap();
        let (bv, _) = b.finite_value().unwrap();
        assert!(
            (av - bv).abs() <= ae + 1e-13,
            "bounded drift at {lam}: {av} vs {bv}, bound {ae:.3e}"
        );
    }
}

#[test]
fn boundary_value_matches_truncated_real_sum_away_from_atoms() {
    // Finite measure, evaluation point at distance >= 1 from every atom.
    let mu = MatrixMeasure::scalar(vec![(0.0, 1.0), (0.5, 0.25), (2.0, 0.8)], None).unwrap();
    let phi = HerglotzFunction::pure(mu);
    let lambda = 4.0;
    let bv = boundary_value(&phi, lambda, &default_y_ladder(), 1e12).unwrap();
    let direct: f64 = phi
        .measure
        .atoms()
        .iter()
        .map(|a| {
            let f = a.weight[(0, 0)].re;
            f * (1.0 / (a.t - lambda) - a.t / (1.0 + a.t * a.t))
        })
        .sum();
    assert!(
        (bv.value[(0, 0)].re - direct).abs() <= bv.error_bound + 1e-12,
        "boundary value {} vs direct {direct}",
        bv.value[(0, 0)].re
    );
}

#[test]
fn boundary_value_real_at_accumulation_point() {
    let cm = case_ii(3, 40);
    let phi = HerglotzFunction::pure(cm.measure.clone());
    let bv = boundary_value(&phi, 2.0, &default_y_ladder(), 1e12).unwrap();
    assert!(bv.anti_hermitian_norm <= bv.error_bound);
    // Direct sum of kernel terms over the materialized atoms.
    let direct: f64 = phi
        .measure
        .atoms()
        .iter()
        .map(|a| {
            let f = a.weight[(0, 0)].re;
            f * (1.0 / (a.t - 2.0) - a.t / (1.0 + a.t * a.t))
        })
        .sum();
    assert!((bv.value[(0, 0)].re - direct).abs() <= bv.error_bound + 1e-9);
}

#[test]
fn direct_sum_reproduces_scalar_second_moments_blockwise() {
    let cm = case_ii(2, 25);
    let d = 3;
    let big = cm.measure.direct_power(d).unwrap();
    let n = big.len();
    let scalar_h = basis_vector(1, 0);
    let scalar = second_moment_at(&cm.measure, 1.0, &scalar_h, cm.measure.len(), 1e12)
        .unwrap()
        .finite_value()
        .unwrap()
        .0;
    for dir in 0..d {
        let h = basis_vector(d, dir);
        let blockwise = second_moment_at(&big, 1.0, &h, n, 1e12)
            .unwrap()
            .finite_value()
            .unwrap()
            .0;
        assert!((blockwise - scalar).abs() <= 1e-12 * scalar.max(1.0));
    }
}

#[test]
fn unbounded_meta_records_shared_masses() {
    let cm = case_ii(2, 10);
    match &cm.weights {
        WeightsMeta::Unbounded { f, .. } => {
            assert_eq!(f.len(), 10);
            let expect: f64 = 0.5 / 4.0;
            assert_eq!(f[0], expect);
        }
        _ => panic!("expected unbounded meta"),
    }
    let _ = DMatrix::<f64>::zeros(1, 1);
}
