mod common;

use rpga_core::composite::{self, foreground_with_frozen_regions};
use rpga_core::rng::CounterRng;
use rpga_core::scene::GaussianCloud;
use rpga_core::shading::HemisphereQuadrature;
use rpga_core::Image;

/// `sum(weights * composite(cloud))` for a fixed weight image.
fn pixel_loss(
    cloud: &GaussianCloud,
    cam: &rpga_core::scene::Camera,
    env: &rpga_core::scene::EnvironmentMap,
    quad: &HemisphereQuadrature,
    bg: &Image,
    weights: &Image,
) -> f64 {
    let fg = foreground_with_frozen_regions(cloud, cam, env, quad).unwrap();
    let img = composite::composite(&fg.output, bg).unwrap();
    img.data.iter().zip(&weights.data).map(|(a, b)| a * b).sum()
}

#[test]
fn albedo_gradient_matches_central_differences() {
    let env = common::gradient_env("e");
    let quad = HemisphereQuadrature::canonical(6, 12).unwrap();
    let mut rng = CounterRng::new(77);
    let mut checked = 0;
    for _ in 0..6 {
        let n = 2 + (rng.next_u64() % 8) as usize;
        let cloud = common::random_cloud(&mut rng, n);
        let cam = common::random_camera(&mut rng, 32);
        let bg = Image::filled(32, 32, [0.2, 0.3, 0.4]);
        let mut weights = Image::new(32, 32);
        weights.data.iter_mut().for_each(|w| *w = rng.uniform(-1.0, 1.0));

        let fg = foreground_with_frozen_regions(&cloud, &cam, &env, &quad).unwrap();
        let grad = fg.albedo_gradient(&cloud, &weights).unwrap();
        let h = 1e-5;
        for (i, g) in cloud.primitives.iter().enumerate() {
            for k in 0..3 {
                if !g.camo {
                    assert_eq!(grad[i][k], 0.0);
                    continue;
                }
                let mut p = cloud.clone();
                p.primitives[i].albedo[k] += h;
                let mut m = cloud.clone();
                m.primitives[i].albedo[k] -= h;
                let fd = (pixel_loss(&p, &cam, &env, &quad, &bg, &weights) - pixel_loss(&m, &cam, &env, &quad, &bg, &weights))
                    / (2.0 * h);
                let an = grad[i][k];
                if an.abs() > 1e-6 {
                    checked += 1;
                    assert!((an - fd).abs() / an.abs() < 1e-3, "prim {i} ch {k}: {an} vs {fd}");
                }
            }
        }
    }
    assert!(checked > 10);
}

#[test]
fn adjoint_is_linear_in_upstream_gradient() {
    let env = common::gradient_env("e");
    let quad = HemisphereQuadrature::canonical(4, 8).unwrap();
    let mut rng = CounterRng::new(5);
    let cloud = common::random_cloud(&mut rng, 8);
    let cam = common::random_camera(&mut rng, 32);
    let fg = foreground_with_frozen_regions(&cloud, &cam, &env, &quad).unwrap();
    let mut g1 = Image::new(32, 32);
    let mut g2 = Image::new(32, 32);
    g1.data.iter_mut().for_each(|v| *v = rng.uniform(-1.0, 1.0));
    g2.data.iter_mut().for_each(|v| *v = rng.uniform(-1.0, 1.0));
    let (a, b) = (0.7, -1.9);
    let mut mix = Image::new(32, 32);
    for i in 0..mix.data.len() {
        mix.data[i] = a * g1.data[i] + b * g2.data[i];
    }
    let r1 = fg.albedo_gradient(&cloud, &g1).unwrap();
    let r2 = fg.albedo_gradient(&cloud, &g2).unwrap();
    let rm = fg.albedo_gradient(&cloud, &mix).unwrap();
    for i in 0..cloud.len() {
        for k in 0..3 {
            let expect = a * r1[i][k] + b * r2[i][k];
            assert!((rm[i][k] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }
}
