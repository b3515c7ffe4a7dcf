//! Fast self-checks of the library's mathematical identities, run by
//! `rpga verify`. Each check is seeded and deterministic.

use rpga_core::hpcm::{self, GlobalDifficultyTable};
use rpga_core::render;
use rpga_core::rng::CounterRng;
use rpga_core::scene::{
    camera_from_config, discretize_space, EnvironmentMap, GaussianCloud, GaussianPrimitive, PhysicalConfiguration,
};
use rpga_core::shading::{self, HemisphereQuadrature};
use rpga_core::Vec3;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn lse_gradient_equivalence(rng: &mut CounterRng) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let q = 2 + (rng.next_u64() % 30) as usize;
        let dim = 3;
        let tau = rng.uniform(0.2, 5.0);
        // L_i(a) = sum_k c_ik a_k^2 / 2 + d_i, with analytic gradient c_ik a_k.
        let c: Vec<Vec<f64>> = (0..q).map(|_| (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect();
        let d: Vec<f64> = (0..q).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let a: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let losses_at = |a: &[f64]| -> Vec<f64> {
            (0..q)
                .map(|i| d[i] + (0..dim).map(|k| 0.5 * c[i][k] * a[k] * a[k]).sum::<f64>())
                .collect()
        };
        let grads: Vec<Vec<f64>> = (0..q).map(|i| (0..dim).map(|k| c[i][k] * a[k]).collect()).collect();
        let g = hpcm::lse_parameter_gradient(&losses_at(&a), &grads, tau).expect("valid problem");
        let h = 1e-6;
        for k in 0..dim {
            let mut p = a.clone();
            p[k] += h;
            let mut m = a.clone();
            m[k] -= h;
            let fd = (hpcm::lse_objective(&losses_at(&p), tau).unwrap() - hpcm::lse_objective(&losses_at(&m), tau).unwrap())
                / (2.0 * h);
            worst = worst.max((fd - g[k]).abs() / g[k].abs().max(1e-3));
        }
    }
    check("lse_gradient_equivalence", worst < 1e-6, format!("max relative error {worst:.3e}"))
}

fn lse_sandwich(rng: &mut CounterRng) -> Check {
    let mut ok = true;
    for tau in [0.1, 1.0, 10.0] {
        for _ in 0..100 {
            let n = 1 + (rng.next_u64() % 50) as usize;
            let v: Vec<f64> = (0..n).map(|_| rng.uniform(-10.0, 10.0)).collect();
            let b = hpcm::check_bounds(&v, tau).expect("finite losses");
            ok &= b.max <= b.lse + 1e-9 && b.lse <= b.upper + 1e-9;
        }
    }
    check("lse_sandwich", ok, "300 vectors, tau in {0.1, 1, 10}".into())
}

fn furnace(rng: &mut CounterRng) -> Check {
    let env = EnvironmentMap::constant("white", 16, 8, [1.0; 3], [0.0; 3]);
    let quad = HemisphereQuadrature::canonical(32, 64).expect("valid quadrature");
    let cfg = PhysicalConfiguration {
        pitch_deg: 90.0,
        azimuth_deg: 0.0,
        distance_m: 5.0,
        env_id: "white".into(),
    };
    let cam = camera_from_config(&cfg, Vec3::zeros(), 40.0, 8, 8).expect("valid camera").camera;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let mut g = GaussianPrimitive::isotropic(Vec3::zeros(), 0.3);
        g.scale.z = 0.01;
        g.roughness = 1.0;
        g.metallic = 0.0;
        let albedo = [rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0)];
        g.albedo = albedo;
        let s = shading::shade(&g, &cam, &env, &quad).expect("visible surfel");
        // At m = 0 the specular lobe does not depend on albedo; removing a
        // black-albedo shade leaves the diffuse part, which should equal a * L.
        g.albedo = [0.0; 3];
        let spec = shading::shade(&g, &cam, &env, &quad).expect("visible surfel");
        for c in 0..3 {
            let diffuse = s.color[c] - spec.color[c];
            worst = worst.max((diffuse - albedo[c]).abs() / albedo[c]);
        }
    }
    check("furnace_diffuse", worst < 0.01, format!("max relative error {worst:.3e}"))
}

fn blending(rng: &mut CounterRng) -> Check {
    let mut worst = 0u64;
    for _ in 0..5 {
        let prims = (0..12)
            .map(|_| {
                let mut g = GaussianPrimitive::isotropic(
                    Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5)),
                    rng.uniform(0.2, 0.6),
                );
                g.opacity = rng.uniform(0.3, 0.95);
                g
            })
            .collect();
        let cloud = GaussianCloud {
            primitives: prims,
            target_center: Vec3::zeros(),
        };
        let cfg = PhysicalConfiguration {
            pitch_deg: rng.uniform(0.0, 60.0),
            azimuth_deg: rng.uniform(0.0, 359.0),
            distance_m: 6.0,
            env_id: "e".into(),
        };
        let cam = camera_from_config(&cfg, Vec3::zeros(), 40.0, 32, 32).expect("valid camera").camera;
        let out = render::rasterize(&cloud, &cam, &[[0.5; 3]; 12]).expect("renders");
        let rec = out.contrib_records.as_ref().expect("records kept");
        for y in 0..32 {
            for x in 0..32 {
                let (mut sum, mut comp) = (0.0f64, 0.0f64);
                for v in rec.at(x, y).iter().map(|c| c.weight).chain([out.transmittance.at(x, y)]) {
                    let t = sum + v;
                    comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
                    sum = t;
                }
                let total = sum + comp;
                worst = worst.max((total.to_bits() as i64 - 1f64.to_bits() as i64).unsigned_abs());
            }
        }
    }
    check("blend_conservation", worst <= 4, format!("worst {worst} ulp"))
}

fn grid_parity() -> Check {
    let pitch: Vec<f64> = (0..10).map(|i| i as f64 * 9.0).collect();
    let az: Vec<f64> = (0..18).map(|i| i as f64 * 20.0).collect();
    let dist = [5.0, 10.0, 15.0, 20.0];
    let envs: Vec<String> = (0..6).map(|i| format!("w{i}")).collect();
    let q = discretize_space(&pitch, &az, &dist, &envs).map(|s| s.len()).unwrap_or(0);
    check("grid_parity", q == 4320, format!("q = {q}"))
}

fn momentum_identities() -> Check {
    let mut t = GlobalDifficultyTable::with_defaults(3).expect("valid table");
    t.update_score(0, 2.0).expect("in range");
    let substitution = t.scores[0] == 6.0;
    let uniform = hpcm::softmax(&[4.0; 5], 1.0).iter().all(|p| *p == 0.2);
    let a = hpcm::softmax(&[1.0, 2.0, 3.0], 0.5);
    let b = hpcm::softmax(&[101.0, 102.0, 103.0], 0.5);
    let shift = a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-15);
    check(
        "momentum_softmax",
        substitution && uniform && shift,
        format!("substitution {substitution}, uniform {uniform}, shift {shift}"),
    )
}

pub fn run_all(seed: u64) -> Vec<Check> {
    let mut rng = CounterRng::new(seed);
    vec![
        lse_gradient_equivalence(&mut rng),
        lse_sandwich(&mut rng),
        furnace(&mut rng),
        blending(&mut rng),
        grid_parity(),
        momentum_identities(),
    ]
}
