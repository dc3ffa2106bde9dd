use std::path::Path;

use hapforge::formats::read_gray_png;
use hapforge::metrics::{mae, mae_ratio, ssim, t_test, SsimParams};
use hapforge::signals::FrictionTrace;
use ndarray::Array2;

mod common;
use common::scalar_loop_ssim;

fn pair() -> (Array2<f64>, Array2<f64>) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ssim");
    let load = |n: &str| read_gray_png(&dir.join(n)).unwrap().mapv(f64::from);
    (load("a.png"), load("b.png"))
}

#[test]
fn ssim_fixture_matches_scalar_loop() {
    let (a, b) = pair();
    let fast = ssim(&a, &b, &SsimParams::for_bit_depth(8)).unwrap();
    let slow = scalar_loop_ssim(&a, &b, 255.0);
    assert!((fast - slow).abs() < 1e-6, "{fast} vs {slow}");
}

#[test]
fn ssim_fixture_matches_reference_library_value() {
    // scikit-image structural_similarity, gaussian weights, population covariance.
    let (a, b) = pair();
    let v = ssim(&a, &b, &SsimParams::for_bit_depth(8)).unwrap();
    assert!((v - 0.6153896868042172).abs() < 1e-6, "{v}");
}

#[test]
fn ssim_of_identical_images_is_exactly_one() {
    let (a, _) = pair();
    assert_eq!(ssim(&a, &a, &SsimParams::for_bit_depth(8)).unwrap(), 1.0);
}

#[test]
fn welch_textbook_pair() {
    let t = t_test(&[5.1, 4.9, 5.0, 5.2], &[4.0, 4.2, 3.9, 4.1]).unwrap();
    assert!((t.t - 10.954451150103322).abs() < 1e-6, "{t:?}");
    assert!((t.df - 6.0).abs() < 1e-9, "{t:?}");
    assert!(
        (t.p - 3.43640280761215e-5).abs() < 1e-6 * 3.43640280761215e-5,
        "{t:?}"
    );
}

#[test]
fn welch_unequal_sizes_and_variances() {
    let a = [19.8, 20.4, 19.6, 17.8, 18.5, 18.9, 18.3, 18.9, 19.5, 22.0];
    let b = [
        28.2, 26.6, 20.1, 23.3, 25.2, 22.1, 17.7, 27.6, 20.6, 13.7, 23.2, 17.5, 20.6, 18.0, 23.9,
        21.6, 24.3, 20.4, 23.9, 13.3,
    ];
    let t = t_test(&a, &b).unwrap();
    assert!((t.t + 2.2255120399698532).abs() < 1e-9, "{t:?}");
    assert!((t.df - 24.524634944257348).abs() < 1e-9, "{t:?}");
    assert!((t.p - 0.03548453083001022).abs() < 1e-9, "{t:?}");
}

#[test]
fn mae_ratio_of_perturbed_constant_trace() {
    // Baseline 0.15 with alternating deviations of 9% of the mean: MAE is
    // 0.09 * 0.15 = 0.0135 and the ratio is 0.09.
    let truth = FrictionTrace::new(vec![0.15; 240], 60.0).unwrap();
    let pred = FrictionTrace::new(
        (0..240)
            .map(|i| if i % 2 == 0 { 0.1635 } else { 0.1365 })
            .collect(),
        60.0,
    )
    .unwrap();
    assert!((mae(&pred, &truth).unwrap() - 0.0135).abs() < 1e-12);
    assert!((mae_ratio(&pred, &truth).unwrap() - 0.09).abs() < 1e-12);
}
