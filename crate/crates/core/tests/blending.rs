mod common;

use rpga_core::render;
use rpga_core::rng::CounterRng;

/// Compensated sum, so the check itself adds no rounding worth counting.
fn neumaier(v: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in v {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

fn ulps_from_one(x: f64) -> u64 {
    (x.to_bits() as i64 - 1f64.to_bits() as i64).unsigned_abs()
}

#[test]
fn weights_and_transmittance_partition_unity() {
    let mut rng = CounterRng::new(3);
    for _ in 0..50 {
        let n = 1 + (rng.next_u64() % 30) as usize;
        let cloud = common::random_cloud(&mut rng, n);
        let cam = common::random_camera(&mut rng, 32);
        let out = render::rasterize(&cloud, &cam, &vec![[0.5; 3]; n]).unwrap();
        let rec = out.contrib_records.as_ref().unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let mut v: Vec<f64> = rec.at(x, y).iter().map(|c| c.weight).collect();
                v.push(out.transmittance.at(x, y));
                let s = neumaier(&v);
                assert!(ulps_from_one(s) <= 4, "pixel ({x},{y}) sums to {s}");
                assert!((out.object_mask.at(x, y) + out.transmittance.at(x, y) - 1.0).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn transmittance_never_increases_along_blend_order() {
    let mut rng = CounterRng::new(8);
    for _ in 0..10 {
        let cloud = common::random_cloud(&mut rng, 20);
        let cam = common::random_camera(&mut rng, 32);
        let out = render::rasterize(&cloud, &cam, &vec![[1.0; 3]; 20]).unwrap();
        let rec = out.contrib_records.as_ref().unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let mut t = 1.0;
                for c in rec.at(x, y) {
                    assert!(c.weight >= 0.0 && c.weight <= t);
                    t -= c.weight;
                }
                assert!(out.transmittance.at(x, y) <= 1.0);
                // White splats: intensity equals coverage.
                let p = out.rgb.pixel(x, y);
                assert!((p[0] - out.object_mask.at(x, y)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn render_is_repeatable() {
    let mut rng = CounterRng::new(21);
    let cloud = common::random_cloud(&mut rng, 12);
    let cam = common::random_camera(&mut rng, 48);
    let colors: Vec<[f64; 3]> = (0..12).map(|i| [i as f64 / 12.0, 0.5, 1.0 - i as f64 / 12.0]).collect();
    let a = render::rasterize(&cloud, &cam, &colors).unwrap();
    let b = render::rasterize(&cloud, &cam, &colors).unwrap();
    assert_eq!(a, b);
}
