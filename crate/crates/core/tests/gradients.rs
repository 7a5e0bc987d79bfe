mod common;

use common::gradcheck;

const TOLERANCE: f64 = 1e-4;

#[test]
fn all_backward_passes_match_finite_differences() {
    let results = gradcheck::suite();
    assert!(results.len() >= 20);
    let failures: Vec<_> = results.iter().filter(|r| r.1.is_nan() || r.1 >= TOLERANCE).collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn encoder_at_full_desk_width() {
    for (seed, pooling) in [(91, ara_core::encoder::Pooling::Cls), (92, ara_core::encoder::Pooling::Eos)] {
        let (t, e) = gradcheck::encoder_instance(seed, 32, 2, pooling);
        assert!(e < TOLERANCE, "{t}: {e}");
    }
}

#[test]
fn oracle_flags_a_corrupted_gradient() {
    use ara_core::params::ParamSet;
    let mut p = ParamSet::new();
    let w = p.add("w", &[3]);
    p.get_mut(w).copy_from_slice(&[0.5, -1.0, 2.0]);
    let loss = |q: &ParamSet| q.data().iter().map(|x| x * x * x).sum::<f64>();
    let exact: Vec<f64> = p.data().iter().map(|x| 3.0 * x * x).collect();
    let report = common::finite_difference_check(&p, &exact, 3, 1e-4, loss);
    assert!(report[0].1 < 1e-8);
    let mut wrong = exact.clone();
    wrong[1] *= 1.01;
    let report = common::finite_difference_check(&p, &wrong, 3, 1e-4, loss);
    assert!(report[0].1 > 1e-3);
}

#[test]
fn suite_errors_are_reported_per_instance() {
    for (label, err) in gradcheck::suite() {
        println!("{label}: {err:.2e}");
        assert!(err.is_finite());
    }
}
