use proptest::prelude::*;
use rpga::json::format_float;
use rpga::ppm;

proptest! {
    #[test]
    fn float_text_keeps_nine_significant_digits(x in -1e6f64..1e6) {
        let back: f64 = format_float(x).parse().unwrap();
        let tol = x.abs() * 1e-8;
        prop_assert!((back - x).abs() <= tol, "{x} -> {back}");
    }

    #[test]
    fn f32_values_survive_float_text(x in proptest::num::f32::NORMAL) {
        let back: f64 = format_float(x as f64).parse().unwrap();
        prop_assert_eq!(back as f32, x);
    }

    #[test]
    fn ppm_round_trips_any_bytes(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
        let rgb: Vec<u8> = (0..w * h * 3).map(|i| (seed.rotate_left(i as u32 % 64) >> 3) as u8).collect();
        let (dw, dh, back) = ppm::decode(&ppm::encode_rgb8(w, h, &rgb)).unwrap();
        prop_assert_eq!((dw, dh), (w, h));
        prop_assert_eq!(back, rgb);
    }

    #[test]
    fn gamma_encoding_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(ppm::encode_channel(lo) <= ppm::encode_channel(hi));
    }
}
