#![allow(dead_code)]

use rpga_core::rng::CounterRng;
use rpga_core::scene::{camera_from_config, Camera, EnvironmentMap, GaussianCloud, GaussianPrimitive, PhysicalConfiguration};
use rpga_core::Vec3;

/// A random unit quaternion `[w, x, y, z]`.
pub fn random_rotation(rng: &mut CounterRng) -> [f64; 4] {
    let q = [rng.normal(), rng.normal(), rng.normal(), rng.normal()];
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.map(|v| v / n)
}

/// `n` random primitives near the origin; every second one is camouflage.
pub fn random_cloud(rng: &mut CounterRng, n: usize) -> GaussianCloud {
    let primitives = (0..n)
        .map(|i| GaussianPrimitive {
            mean: Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-0.6, 0.6)),
            scale: Vec3::new(rng.uniform(0.15, 0.6), rng.uniform(0.15, 0.6), rng.uniform(0.02, 0.4)),
            rotation: random_rotation(rng),
            opacity: rng.uniform(0.3, 0.95),
            albedo: [rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)],
            roughness: rng.uniform(0.2, 1.0),
            metallic: rng.uniform(0.0, 0.8),
            camo: i % 2 == 0,
        })
        .collect();
    GaussianCloud {
        primitives,
        target_center: Vec3::zeros(),
    }
}

pub fn random_camera(rng: &mut CounterRng, size: usize) -> Camera {
    let cfg = PhysicalConfiguration {
        pitch_deg: rng.uniform(5.0, 60.0),
        azimuth_deg: rng.uniform(0.0, 359.0),
        distance_m: rng.uniform(5.0, 7.0),
        env_id: "e".into(),
    };
    camera_from_config(&cfg, Vec3::zeros(), 40.0, size, size).unwrap().camera
}

/// A smoothly varying sky so that shading depends on orientation.
pub fn gradient_env(id: &str) -> EnvironmentMap {
    let (w, h) = (16, 8);
    let mut radiance = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let t = y as f64 / h as f64;
            let s = x as f64 / w as f64;
            radiance.extend_from_slice(&[0.9 - 0.5 * t, 0.6 + 0.2 * s, 0.3 + 0.4 * t * s]);
        }
    }
    EnvironmentMap {
        id: id.to_string(),
        width: w,
        height: h,
        radiance,
        ambient: [0.05, 0.05, 0.05],
    }
}
