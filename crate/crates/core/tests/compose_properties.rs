use hapforge::compose::{
    build_normalization, grey_baseline, normalize_per_image, render_batch, resample_to_display,
    scale_height_map, to_friction_image, Resample,
};
use hapforge::photometric::HeightMap;
use hapforge::synth::VisualImage;
use ndarray::{Array2, Array3};
use proptest::prelude::*;

fn field(rows: usize, cols: usize, values: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |(r, c)| values[(r * cols + c) % values.len()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn per_image_normalization_ignores_friction(values in prop::collection::vec(0.0f64..10.0, 4..64), a in 0.01f64..5.0, b in 0.01f64..5.0) {
        prop_assume!(values.iter().any(|v| *v != values[0]));
        let h = HeightMap::new(field(6, 7, &values)).unwrap();
        prop_assume!(h.range() > 0.0);
        let x = normalize_per_image(&scale_height_map(&h, a, "x").unwrap()).unwrap();
        let y = normalize_per_image(&scale_height_map(&h, b, "y").unwrap()).unwrap();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn batch_spans_full_range(values in prop::collection::vec(0.0f64..10.0, 2..40), f in prop::collection::vec(0.05f64..1.0, 1..5)) {
        let h = HeightMap::new(field(5, 5, &values)).unwrap();
        let objects: Vec<_> = f.iter().enumerate().map(|(i, f)| (format!("o{i}"), h.clone(), *f)).collect();
        let scaled: Vec<_> = objects.iter().map(|(id, h, f)| scale_height_map(h, *f, id.clone()).unwrap()).collect();
        prop_assume!(build_normalization(&scaled).is_ok());
        let (_, images) = render_batch(&objects).unwrap();
        let all: Vec<u8> = images.iter().flat_map(|i| i.pixels.iter().copied()).collect();
        prop_assert_eq!(*all.iter().min().unwrap(), 0);
        prop_assert_eq!(*all.iter().max().unwrap(), 255);
    }

    #[test]
    fn higher_friction_never_renders_darker(f1 in 0.05f64..0.5, extra in 0.01f64..0.5) {
        let flat = HeightMap::new(Array2::from_elem((4, 4), 1.0)).unwrap();
        let (_, images) = render_batch(&[("lo".into(), flat.clone(), f1), ("hi".into(), flat, f1 + extra)]).unwrap();
        let lo_max = images[0].pixels.iter().max().unwrap();
        let hi_min = images[1].pixels.iter().min().unwrap();
        prop_assert!(hi_min >= lo_max);
    }
}

#[test]
fn flat_maps_at_two_frictions() {
    let flat = HeightMap::new(Array2::from_elem((8, 8), 1.0)).unwrap();
    let (ctx, images) =
        render_batch(&[("a".into(), flat.clone(), 0.3), ("b".into(), flat, 0.6)]).unwrap();
    assert_eq!((ctx.global_min, ctx.global_max), (0.3, 0.6));
    assert!(images[0].pixels.iter().all(|p| *p == 0));
    assert!(images[1].pixels.iter().all(|p| *p == 255));
}

#[test]
fn single_image_context_matches_per_image() {
    let h = HeightMap::new(field(4, 4, &[0.0, 0.3, 0.9, 0.5, 0.1])).unwrap();
    let m = scale_height_map(&h, 0.4, "x").unwrap();
    let ctx = build_normalization(std::slice::from_ref(&m)).unwrap();
    assert_eq!(
        to_friction_image(&m, &ctx).unwrap(),
        normalize_per_image(&m).unwrap()
    );
}

#[test]
fn display_resampling_shapes_and_corners() {
    let h = HeightMap::new(field(8, 10, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0])).unwrap();
    let (_, images) = render_batch(&[("x".into(), h, 0.5)]).unwrap();
    let img = &images[0];
    for mode in [Resample::Nearest, Resample::Bilinear] {
        let big = resample_to_display(img, (1280, 800), mode).unwrap();
        assert_eq!((big.width(), big.height()), (1280, 800));
        assert_eq!(big.display_target, Some((1280, 800)));
        assert_eq!(big.pixels[[0, 0]], img.pixels[[0, 0]]);
        assert_eq!(big.pixels[[799, 1279]], img.pixels[[7, 9]]);
    }
    let same = resample_to_display(img, (10, 8), Resample::Bilinear).unwrap();
    assert_eq!(same.pixels, img.pixels);
    assert!(resample_to_display(img, (0, 8), Resample::Nearest).is_err());
}

#[test]
fn grey_baseline_uses_luma_over_batch() {
    let dark = VisualImage::new(Array3::from_elem((4, 4, 3), 0.2)).unwrap();
    let bright = VisualImage::new(Array3::from_shape_fn((4, 4, 3), |(r, _, ch)| {
        if ch == 1 {
            0.3 + 0.1 * r as f64
        } else {
            0.8
        }
    }))
    .unwrap();
    let out = grey_baseline(&[dark, bright]).unwrap();
    assert!(out[0].pixels.iter().all(|p| *p == 0));
    assert_eq!(*out[1].pixels.iter().max().unwrap(), 255);
}
