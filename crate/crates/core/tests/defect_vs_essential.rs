//! The headline phenomenon end to end: measures whose boundary criterion
//! stays finite at every accumulation point, while extension spectra pile
//! up inside the interval and remain nowhere dense at every truncation.

use weyl_spectra::counterexample::{
    build_bounded, essential_spectrum_accumulation, CounterexampleSpec,
};
use weyl_spectra::extension::{extension_eigenvalues, nowhere_dense_witness, Tau, TruncatedModel};
use weyl_spectra::herglotz::{second_moment_at, SecondMomentResult};
use weyl_spectra::linalg::basis_vector;

fn bounded(k: usize, j: usize) -> weyl_spectra::counterexample::CounterexampleMeasure {
    build_bounded(&CounterexampleSpec {
        mu1: 0.0,
        mu2: 1.0,
        k_points: k,
        j_satellites: j,
        defect: 1,
    })
    .unwrap()
}

#[test]
fn finite_criterion_yet_spectral_accumulation() {
    let cm = bounded(3, 60);
    let h = basis_vector(1, 0);
    let n = cm.measure.len();
    // Every accumulation point passes the finite-second-moment criterion...
    for &lam in &cm.accumulation_points {
        match second_moment_at(&cm.measure, lam, &h, n, 1e12).unwrap() {
            SecondMomentResult::Finite { value, error_bound } => {
                assert!(value.is_finite() && error_bound.is_finite());
            }
            other => panic!("criterion must hold at {lam}: {other:?}"),
        }
    }
    // ...while the atoms accumulate exactly there.
    let detected = essential_spectrum_accumulation(&cm, 1e-3);
    assert_eq!(detected.len(), cm.accumulation_points.len());
    for (d, l) in detected.iter().zip(&cm.accumulation_points) {
        assert!((d - l).abs() < 1e-6);
    }
}

#[test]
fn gap_scan_of_constructed_atom_sets() {
    // Direct gap scan of the atom abscissas at coarse resolution: every
    // window keeps a positive gap, while the windows holding an
    // accumulation point fill in as J doubles.
    let mut counts_near_accumulation: Vec<usize> = Vec::new();
    for j in [25usize, 50, 100] {
        let cm = bounded(3, j);
        let atoms: Vec<f64> = cm
            .measure
            .atoms()
            .iter()
            .map(|a| a.t)
            .filter(|&t| t > 0.0 && t < 1.0)
            .collect();
        let report = nowhere_dense_witness(&atoms, (0.0, 1.0), 1e-2);
        assert!(report.all_windows_have_gaps);
        let lam = *cm.accumulation_points.last().unwrap();
        let window = report
            .windows
            .iter()
            .find(|w| w.window.0 <= lam && lam < w.window.1)
            .unwrap();
        counts_near_accumulation.push(window.points_in_window);
    }
    for pair in counts_near_accumulation.windows(2) {
        assert!(
            pair[1] > pair[0],
            "density near the accumulation point must grow: {counts_near_accumulation:?}"
        );
    }
}

#[test]
fn truncated_spectra_stay_nowhere_dense_while_gaps_shrink() {
    let mut nearest_gap_history: Vec<Vec<f64>> = Vec::new();
    for j in [25usize, 50, 100, 200] {
        let cm = bounded(3, j);
        let model = TruncatedModel::plain(&cm.measure, cm.measure.len()).unwrap();
        let spectrum = extension_eigenvalues(&model, Tau::Finite(0.0), (0.0, 1.0)).unwrap();
        // Finite truncations always admit a gap in every window.
        let report = nowhere_dense_witness(&spectrum.eigenvalues, (0.0, 1.0), 1e-3);
        assert!(report.all_windows_have_gaps, "J = {j}");
        assert!(report.windows.iter().all(|w| w.gap_length > 0.0));
        // Distance from each accumulation point to the nearest spectral
        // point below it.
        let gaps: Vec<f64> = cm
            .accumulation_points
            .iter()
            .map(|&l| {
                l - spectrum
                    .eigenvalues
                    .iter()
                    .copied()
                    .filter(|&e| e < l)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        nearest_gap_history.push(gaps);
    }
    for pair in nearest_gap_history.windows(2) {
        for (new, old) in pair[1].iter().zip(&pair[0]) {
            assert!(new < old, "adjacent gap did not shrink: {new} vs {old}");
        }
    }
}
