//! Scores for generated signals: MAE, MAE ratio, SSIM and Welch's t-test.

use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::FrictionTrace;

pub fn mae_slices(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::invalid("mae", "empty input"));
    }
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

/// Mean absolute error between two equally long traces.
pub fn mae(pred: &FrictionTrace, truth: &FrictionTrace) -> Result<f64> {
    mae_slices(pred.samples(), truth.samples())
}

/// MAE divided by the mean of the ground truth.
pub fn mae_ratio(pred: &FrictionTrace, truth: &FrictionTrace) -> Result<f64> {
    let m = mae(pred, truth)?;
    let mean = crate::signals::mean_friction(truth);
    if mean <= 0.0 {
        return Err(Error::Degenerate("ground-truth mean is zero".into()));
    }
    Ok(m / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Side of the square Gaussian window (odd).
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range `L` of the pixel values.
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self::for_range(1.0)
    }
}

impl SsimParams {
    pub fn for_range(data_range: f64) -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range,
        }
    }

    /// Range of unsigned integer pixels of the given bit depth, `2^bits − 1`.
    pub fn for_bit_depth(bits: u32) -> Self {
        Self::for_range(((1u64 << bits) - 1) as f64)
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn taps(&self) -> Vec<f64> {
        let r = (self.window / 2) as f64;
        let w: Vec<f64> = (0..self.window)
            .map(|i| (-(i as f64 - r).powi(2) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    }
}

/// Valid-mode separable correlation with `taps` along both axes.
fn filter_valid(x: &Array2<f64>, taps: &[f64]) -> Array2<f64> {
    let (h, w) = x.dim();
    let k = taps.len();
    let rows: Array2<f64> = Array2::from_shape_fn((h, w + 1 - k), |(r, c)| {
        (0..k).map(|i| taps[i] * x[[r, c + i]]).sum::<f64>()
    });
    Array2::from_shape_fn((h + 1 - k, w + 1 - k), |(r, c)| {
        (0..k).map(|i| taps[i] * rows[[r + i, c]]).sum::<f64>()
    })
}

/// Mean structural similarity over all fully contained windows.
pub fn ssim(a: &Array2<f64>, b: &Array2<f64>, params: &SsimParams) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    let p = params;
    if p.window == 0 || p.window.is_multiple_of(2) || !(p.sigma > 0.0) || !(p.data_range > 0.0) {
        return Err(Error::invalid("ssim params", format!("{p:?}")));
    }
    let (h, w) = a.dim();
    if h < p.window || w < p.window {
        return Err(Error::invalid(
            "ssim",
            format!("{h}x{w} image is smaller than the {0}x{0} window", p.window),
        ));
    }
    let taps = p.taps();
    let mu_a = filter_valid(a, &taps);
    let mu_b = filter_valid(b, &taps);
    let aa = filter_valid(&(a * a), &taps);
    let bb = filter_valid(&(b * b), &taps);
    let ab = filter_valid(&(a * b), &taps);
    let c1 = (p.k1 * p.data_range).powi(2);
    let c2 = (p.k2 * p.data_range).powi(2);
    let mut sum = 0.0;
    for (((ma, mb), (saa, sbb)), sab) in mu_a
        .iter()
        .zip(mu_b.iter())
        .zip(aa.iter().zip(bb.iter()))
        .zip(ab.iter())
    {
        let va = saa - ma * ma;
        let vb = sbb - mb * mb;
        let cov = sab - ma * mb;
        sum +=
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(sum / mu_a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Welch's unequal-variance two-sample t-test.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid(
            "t-test",
            format!(
                "samples of size {} and {}; each needs at least 2",
                a.len(),
                b.len()
            ),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("t-test", "non-finite sample"));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 <= 0.0 {
        return Err(Error::Degenerate("both samples have zero variance".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    let p = student_t_two_sided(t, df);
    Ok(TTest { t, df, p })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    regularized_beta(x, 0.5 * df, 0.5).clamp(0.0, 1.0)
}

/// Natural log of Γ(x) for x > 0 (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let s = std::f64::consts::PI / (std::f64::consts::PI * x).sin();
        return s.abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta `I_x(a, b)` via Lentz's continued fraction.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    // The fraction converges fastest for x below the mean a / (a + b).
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_fraction(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_fraction(1.0 - x, b, a) / b
    }
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Scores of one evaluated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub id: String,
    pub mae: f64,
    pub mae_ratio: f64,
    pub ssim: f64,
    pub generated_mean_friction: f64,
    pub true_mean_friction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub mae_ratio: f64,
    pub ssim_mean: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub sample_count: usize,
}

impl EvalReport {
    /// Aggregates per-sample scores. MAE and MAE ratio are pooled over all
    /// samples; the t-test compares generated against true mean friction.
    pub fn from_scores(scores: &[SampleScore]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid("evaluation", "no samples"));
        }
        let n = scores.len() as f64;
        let mae = scores.iter().map(|s| s.mae).sum::<f64>() / n;
        let truth_mean = scores.iter().map(|s| s.true_mean_friction).sum::<f64>() / n;
        if truth_mean <= 0.0 {
            return Err(Error::Degenerate(
                "ground-truth mean friction is zero".into(),
            ));
        }
        let gen: Vec<f64> = scores.iter().map(|s| s.generated_mean_friction).collect();
        let truth: Vec<f64> = scores.iter().map(|s| s.true_mean_friction).collect();
        let t = t_test(&gen, &truth)?;
        let report = Self {
            mae,
            mae_ratio: mae / truth_mean,
            ssim_mean: scores.iter().map(|s| s.ssim).sum::<f64>() / n,
            t_statistic: t.t,
            p_value: t.p,
            sample_count: scores.len(),
        };
        if [
            report.mae,
            report.mae_ratio,
            report.ssim_mean,
            report.t_statistic,
            report.p_value,
        ]
        .iter()
        .any(|v| !v.is_finite())
        {
            return Err(Error::Degenerate(format!(
                "non-finite evaluation result {report:?}"
            )));
        }
        Ok(report)
    }

    pub fn to_record(&self) -> String {
        format!(
            "mae={}\nmae_ratio={}\nssim_mean={}\nt_statistic={}\np_value={}\nsample_count={}\n",
            self.mae,
            self.mae_ratio,
            self.ssim_mean,
            self.t_statistic,
            self.p_value,
            self.sample_count
        )
    }
}

pub fn scores_to_csv(scores: &[SampleScore]) -> String {
    let mut s = String::from("id,mae,mae_ratio,ssim,generated_mean_friction,true_mean_friction\n");
    for r in scores {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.id, r.mae, r.mae_ratio, r.ssim, r.generated_mean_friction, r.true_mean_friction
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(v: &[f64]) -> FrictionTrace {
        FrictionTrace::new(v.to_vec(), 60.0).unwrap()
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&trace(&[0.3, 0.2]), &trace(&[0.3, 0.2])).unwrap(), 0.0);
        assert_eq!(mae(&trace(&[0.0, 1.0]), &trace(&[1.0, 1.0])).unwrap(), 0.5);
        assert!(mae(&trace(&[0.0]), &trace(&[1.0, 1.0])).is_err());
        assert!((mae_ratio(&trace(&[0.1, 0.3]), &trace(&[0.2, 0.2])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gamma_reference_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn t_distribution_closed_forms() {
        // df = 1 is Cauchy: p = 1 − 2·atan(|t|)/π.
        for t in [0.3f64, 1.0, 4.0] {
            let expect = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_two_sided(t, 1.0) - expect).abs() < 1e-13);
        }
        // df = 2: p = 1 − |t| / sqrt(2 + t²).
        for t in [0.5f64, 2.0, 9.0] {
            let expect = 1.0 - t / (2.0 + t * t).sqrt();
            assert!((student_t_two_sided(t, 2.0) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn t_test_identical_and_swapped() {
        let a = [1.0, 2.0, 3.5];
        let r = t_test(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
        let b = [0.5, 2.5, 2.0, 1.0];
        let (x, y) = (t_test(&a, &b).unwrap(), t_test(&b, &a).unwrap());
        assert_eq!(x.t, -y.t);
        assert_eq!(x.p, y.p);
        assert!(t_test(&[1.0], &b).is_err());
        assert!(t_test(&[1.0, 1.0], &[2.0, 2.0]).is_err());
    }

    #[test]
    fn ssim_identity_and_constants() {
        let a = Array2::from_shape_fn((16, 20), |(r, c)| ((r * 7 + c * 13) % 11) as f64 / 10.0);
        assert_eq!(ssim(&a, &a, &SsimParams::default()).unwrap(), 1.0);

        let (mu, eps) = (0.5, 1e-3);
        let c = Array2::from_elem((12, 12), mu);
        let d = Array2::from_elem((12, 12), mu + eps);
        let p = SsimParams::default();
        let c1 = (p.k1 * p.data_range).powi(2);
        let expect = (2.0 * mu * (mu + eps) + c1) / (mu * mu + (mu + eps) * (mu + eps) + c1);
        let got = ssim(&c, &d, &p).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!(got < 1.0 && got > 0.99);
        assert!(ssim(&c, &Array2::zeros((12, 11)), &p).is_err());
        assert!(ssim(&Array2::zeros((8, 8)), &Array2::zeros((8, 8)), &p).is_err());
    }

    #[test]
    fn report_record() {
        let scores = vec![
            SampleScore {
                id: "a".into(),
                mae: 0.01,
                mae_ratio: 0.05,
                ssim: 0.5,
                generated_mean_friction: 0.21,
                true_mean_friction: 0.2,
            },
            SampleScore {
                id: "b".into(),
                mae: 0.03,
                mae_ratio: 0.1,
                ssim: 0.7,
                generated_mean_friction: 0.28,
                true_mean_friction: 0.3,
            },
        ];
        let r = EvalReport::from_scores(&scores).unwrap();
        assert!((r.mae - 0.02).abs() < 1e-15);
        assert!((r.mae_ratio - 0.08).abs() < 1e-12);
        assert!((r.ssim_mean - 0.6).abs() < 1e-12);
        assert!(r.to_record().starts_with("mae=0.02\nmae_ratio="));
        assert_eq!(scores_to_csv(&scores).lines().count(), 3);
    }

    proptest! {
        #[test]
        fn mae_symmetric_and_non_negative(v in proptest::collection::vec((0.0f64..2.0, 0.0f64..2.0), 1..50)) {
            let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let x = mae_slices(&a, &b).unwrap();
            prop_assert!(x >= 0.0);
            prop_assert_eq!(x, mae_slices(&b, &a).unwrap());
            prop_assert_eq!(mae_slices(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn t_test_shift_and_swap(a in proptest::collection::vec(-5.0f64..5.0, 3..12),
                                 b in proptest::collection::vec(-5.0f64..5.0, 3..12),
                                 shift in -10.0f64..10.0) {
            let (Ok(base), Ok(swapped)) = (t_test(&a, &b), t_test(&b, &a)) else { return Ok(()) };
            prop_assert!((0.0..=1.0).contains(&base.p));
            prop_assert_eq!(base.p, swapped.p);
            let sa: Vec<f64> = a.iter().map(|v| v + shift).collect();
            let sb: Vec<f64> = b.iter().map(|v| v + shift).collect();
            let shifted = t_test(&sa, &sb).unwrap();
            prop_assert!((shifted.p - base.p).abs() < 1e-8);
        }

        #[test]
        fn ssim_symmetric(seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::seed::rng(seed);
            let a = Array2::from_shape_fn((14, 15), |_| rng.random::<f64>());
            let b = Array2::from_shape_fn((14, 15), |_| rng.random::<f64>());
            let p = SsimParams::default();
            let (x, y) = (ssim(&a, &b, &p).unwrap(), ssim(&b, &a, &p).unwrap());
            prop_assert!((x - y).abs() < 1e-14);
            prop_assert!((-1.0..=1.0).contains(&x));
        }
    }
}
