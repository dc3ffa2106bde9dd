use hapforge::signals::{
    image_to_magnitude, istft, reconstruct_phase, spectrogram_to_image, stft, FrictionTrace,
    GriffinLim, PhaseInit, Reference, StftParams,
};
use proptest::prelude::*;

mod common;
use common::{random_trace, relative_l2};

#[test]
fn round_trip_on_many_lengths() {
    let p = StftParams::default();
    for len in [64, 65, 79, 80, 81, 200, 240, 511, 512, 1000] {
        let t = random_trace(len, len as u64);
        let back = istft(&stft(&t, &p).unwrap()).unwrap();
        assert_eq!(back.len(), len);
        assert!(
            relative_l2(back.samples(), t.samples()) < 1e-10,
            "len {len}"
        );
    }
}

#[test]
fn shapes_follow_frame_rule() {
    let p = StftParams::default();
    let spec = stft(&random_trace(240, 1), &p).unwrap();
    assert_eq!(spec.shape(), (33, 12));
    let spec = stft(&random_trace(64, 1), &p).unwrap();
    assert_eq!(spec.shape(), (33, 1));
}

#[test]
fn short_trace_is_rejected() {
    assert!(stft(&random_trace(63, 2), &StftParams::default()).is_err());
}

#[test]
fn pure_tone_peaks_in_its_bin() {
    // 15 Hz at 60 Hz sampling with a 64-point transform lands in bin 16; the
    // offset leaks into bins 0 and 1 through the window main lobe.
    let t = FrictionTrace::new(
        (0..512)
            .map(|i| 0.4 + 0.1 * (std::f64::consts::TAU * 15.0 * i as f64 / 60.0).sin())
            .collect(),
        60.0,
    )
    .unwrap();
    let mag = stft(&t, &StftParams::default()).unwrap().magnitude();
    for frame in mag.columns() {
        let peak = (2..frame.len())
            .max_by(|a, b| frame[*a].total_cmp(&frame[*b]))
            .unwrap();
        assert_eq!(peak, 16);
    }
}

#[test]
fn phase_reconstruction_error_never_rises() {
    for k in 0..20 {
        let target = stft(&random_trace(240, 500 + k), &StftParams::default())
            .unwrap()
            .to_magnitude_only();
        let r = reconstruct_phase(
            &target,
            &GriffinLim {
                iterations: 50,
                init: PhaseInit::Zero,
            },
        )
        .unwrap();
        for w in r.errors.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-9) + 1e-12,
                "target {k}: {} -> {}",
                w[0],
                w[1]
            );
        }
    }
}

#[test]
fn sinusoids_reconstruct_closely() {
    for (i, f) in [3.0, 7.5, 12.0, 20.0].iter().enumerate() {
        let t = FrictionTrace::new(
            (0..480)
                .map(|n| {
                    0.4 + 0.05 * (std::f64::consts::TAU * f * n as f64 / 60.0 + i as f64).sin()
                })
                .collect(),
            60.0,
        )
        .unwrap();
        let target = stft(&t, &StftParams::default())
            .unwrap()
            .to_magnitude_only();
        let r = reconstruct_phase(
            &target,
            &GriffinLim {
                iterations: 100,
                init: PhaseInit::Zero,
            },
        )
        .unwrap();
        assert!(
            *r.errors.last().unwrap() < 0.05,
            "{f} Hz: {:?}",
            r.errors.last()
        );
    }
}

#[test]
fn image_mapping_round_trips_above_floor() {
    let spec = stft(&random_trace(240, 77), &StftParams::default()).unwrap();
    let img = spectrogram_to_image(&spec, -80.0, Reference::Fixed(32.0)).unwrap();
    assert!(img.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
    let back = image_to_magnitude(&img).unwrap().magnitude();
    let mag = spec.magnitude();
    for (a, b) in back.iter().zip(mag.iter()) {
        if *b > 32.0 * 1e-4 {
            assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stft_is_linear(seed_a in any::<u64>(), seed_b in any::<u64>(), k in 0.1f64..3.0) {
        let p = StftParams::default();
        let (a, b) = (random_trace(160, seed_a), random_trace(160, seed_b));
        let sum = FrictionTrace::new(a.samples().iter().zip(b.samples()).map(|(x, y)| k * x + y).collect(), 60.0).unwrap();
        let (sa, sb, ss) = (stft(&a, &p).unwrap(), stft(&b, &p).unwrap(), stft(&sum, &p).unwrap());
        let (hapforge::signals::SpectrogramData::Complex(za), hapforge::signals::SpectrogramData::Complex(zb), hapforge::signals::SpectrogramData::Complex(zs)) =
            (&sa.data, &sb.data, &ss.data) else { panic!("complex spectrogram expected") };
        for ((x, y), z) in za.iter().zip(zb.iter()).zip(zs.iter()) {
            prop_assert!((x * k + y - z).norm() < 1e-9);
        }
    }

    #[test]
    fn round_trip_any_length(len in 64usize..600, s in any::<u64>()) {
        let t = random_trace(len, s);
        let back = istft(&stft(&t, &StftParams::default()).unwrap()).unwrap();
        prop_assert!(relative_l2(back.samples(), t.samples()) < 1e-10);
    }
}
