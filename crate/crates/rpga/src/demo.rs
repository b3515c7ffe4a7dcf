//! The shipped 64×64 demo: a box-shaped vehicle made of surfels parked on a
//! smooth ground plane, seen from 32 configuration cells under two skies.

use rpga_core::render;
use rpga_core::scene::{
    discretize_space, EnvironmentMap, GaussianCloud, GaussianPrimitive, GroundTruthBox, Scene,
    DEFAULT_FOV_DEG,
};
use rpga_core::{Image, Vec3};

pub const DEMO_SIZE: usize = 64;
const ENV_WIDTH: usize = 32;
const ENV_HEIGHT: usize = 16;
const THIN: f64 = 0.02;

#[derive(Clone, Copy)]
struct Finish {
    albedo: [f64; 3],
    roughness: f64,
    metallic: f64,
    camo: bool,
}

const PAINT: Finish = Finish {
    albedo: [0.9, 0.9, 0.88],
    roughness: 0.45,
    metallic: 0.2,
    camo: true,
};

const GLASS: Finish = Finish {
    albedo: [0.04, 0.05, 0.06],
    roughness: 0.15,
    metallic: 0.6,
    camo: false,
};

const TIRE: Finish = Finish {
    albedo: [0.03, 0.03, 0.03],
    roughness: 0.9,
    metallic: 0.0,
    camo: false,
};

/// Surfels tiling the axis-aligned rectangle spanned by `lo..hi` with the
/// given counts; `axis` is the face normal and has `lo == hi` on it.
fn face(out: &mut Vec<GaussianPrimitive>, lo: [f64; 3], hi: [f64; 3], counts: [usize; 3], finish: Finish) {
    let mut step = [0.0; 3];
    for k in 0..3 {
        step[k] = (hi[k] - lo[k]) / counts[k] as f64;
    }
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            for l in 0..counts[2] {
                let idx = [i, j, l];
                let mut mean = [0.0; 3];
                let mut scale = [0.0; 3];
                for k in 0..3 {
                    mean[k] = lo[k] + (idx[k] as f64 + 0.5) * step[k];
                    scale[k] = if step[k] == 0.0 { THIN } else { 0.6 * step[k] };
                }
                out.push(GaussianPrimitive {
                    mean: Vec3::from(mean),
                    scale: Vec3::from(scale),
                    rotation: [1.0, 0.0, 0.0, 0.0],
                    opacity: 0.95,
                    albedo: finish.albedo,
                    roughness: finish.roughness,
                    metallic: finish.metallic,
                    camo: finish.camo,
                });
            }
        }
    }
}

/// Six faces of a box; `counts` gives the subdivisions along x, y, z.
fn box_faces(out: &mut Vec<GaussianPrimitive>, lo: [f64; 3], hi: [f64; 3], counts: [usize; 3], finish: Finish, bottom: bool) {
    let [nx, ny, nz] = counts;
    face(out, [lo[0], lo[1], hi[2]], [hi[0], hi[1], hi[2]], [nx, ny, 1], finish);
    if bottom {
        face(out, [lo[0], lo[1], lo[2]], [hi[0], hi[1], lo[2]], [nx, ny, 1], finish);
    }
    for y in [lo[1], hi[1]] {
        face(out, [lo[0], y, lo[2]], [hi[0], y, hi[2]], [nx, 1, nz], finish);
    }
    for x in [lo[0], hi[0]] {
        face(out, [x, lo[1], lo[2]], [x, hi[1], hi[2]], [1, ny, nz], finish);
    }
}

pub fn demo_cloud() -> GaussianCloud {
    let mut prims = Vec::new();
    box_faces(&mut prims, [-2.0, -0.9, 0.35], [2.0, 0.9, 1.25], [8, 4, 2], PAINT, false);
    box_faces(&mut prims, [-1.1, -0.75, 1.25], [0.8, 0.75, 1.8], [4, 3, 1], GLASS, false);
    for x in [-1.3, 1.3] {
        for y in [-0.92, 0.92] {
            prims.push(GaussianPrimitive {
                mean: Vec3::new(x, y, 0.35),
                scale: Vec3::new(0.22, THIN, 0.22),
                rotation: [1.0, 0.0, 0.0, 0.0],
                opacity: 1.0,
                albedo: TIRE.albedo,
                roughness: TIRE.roughness,
                metallic: TIRE.metallic,
                camo: TIRE.camo,
            });
        }
    }
    GaussianCloud {
        primitives: prims,
        target_center: Vec3::new(0.0, 0.0, 0.9),
    }
}

/// Equirectangular sky over ground with a soft sun lobe.
fn sky(id: &str, zenith: [f64; 3], horizon: [f64; 3], ground: [f64; 3], sun: (f64, f64, [f64; 3]), ambient: [f64; 3]) -> EnvironmentMap {
    let (sun_theta, sun_phi, sun_rgb) = sun;
    let sun_dir = Vec3::new(sun_theta.sin() * sun_phi.cos(), sun_theta.sin() * sun_phi.sin(), sun_theta.cos());
    let mut radiance = Vec::with_capacity(ENV_WIDTH * ENV_HEIGHT * 3);
    for y in 0..ENV_HEIGHT {
        let theta = (y as f64 + 0.5) / ENV_HEIGHT as f64 * std::f64::consts::PI;
        for x in 0..ENV_WIDTH {
            let phi = (x as f64 + 0.5) / ENV_WIDTH as f64 * 2.0 * std::f64::consts::PI;
            let d = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let lobe = d.dot(&sun_dir).max(0.0).powi(16);
            for c in 0..3 {
                let base = if theta < std::f64::consts::FRAC_PI_2 {
                    let t = theta / std::f64::consts::FRAC_PI_2;
                    zenith[c] * (1.0 - t) + horizon[c] * t
                } else {
                    ground[c]
                };
                radiance.push(base + lobe * sun_rgb[c]);
            }
        }
    }
    EnvironmentMap {
        id: id.to_string(),
        width: ENV_WIDTH,
        height: ENV_HEIGHT,
        radiance,
        ambient,
    }
}

pub fn demo_environments() -> Vec<EnvironmentMap> {
    vec![
        sky(
            "noon",
            [0.35, 0.5, 0.8],
            [0.7, 0.75, 0.8],
            [0.3, 0.28, 0.25],
            (0.3, 1.0, [6.0, 5.8, 5.2]),
            [0.08, 0.08, 0.08],
        ),
        sky(
            "dusk",
            [0.12, 0.12, 0.25],
            [0.6, 0.35, 0.18],
            [0.12, 0.1, 0.08],
            (1.45, 4.0, [4.0, 2.0, 0.8]),
            [0.04, 0.03, 0.03],
        ),
    ]
}

/// Ground plane photographed under "noon": a gentle vertical gradient.
pub fn demo_background() -> Image {
    let mut img = Image::new(DEMO_SIZE, DEMO_SIZE);
    for y in 0..DEMO_SIZE {
        let t = y as f64 / (DEMO_SIZE - 1) as f64;
        for x in 0..DEMO_SIZE {
            let s = x as f64 / (DEMO_SIZE - 1) as f64;
            let v = 0.22 + 0.08 * t + 0.02 * s;
            img.set_pixel(x, y, [v, v * 0.95, v * 0.85]);
        }
    }
    img
}

pub fn demo_scene() -> Scene {
    let envs = demo_environments();
    let ids: Vec<String> = envs.iter().map(|e| e.id.clone()).collect();
    let space = discretize_space(&[10.0, 30.0], &[45.0, 135.0, 225.0, 315.0], &[8.0, 11.0], &ids)
        .expect("demo grid is valid");
    let mut scene = Scene {
        cloud: demo_cloud(),
        environments: envs,
        background: demo_background(),
        ground_truth: GroundTruthBox {
            xmin: 0.0,
            ymin: 0.0,
            xmax: DEMO_SIZE as f64,
            ymax: DEMO_SIZE as f64,
            class_id: 0,
        },
        space,
        fov_deg: DEFAULT_FOV_DEG,
    };
    scene.ground_truth = average_object_box(&scene);
    scene
}

/// Mean over all cells of the object's mask bounding box (mask > 0.5),
/// rounded to whole pixels.
fn average_object_box(scene: &Scene) -> GroundTruthBox {
    let mut acc = [0.0; 4];
    let q = scene.space.len();
    for i in 0..q {
        let cam = scene.camera_for_cell(i).expect("demo cells are valid").camera;
        let mask = render::render_object_mask(&scene.cloud, &cam).expect("demo renders");
        let mut b = [f64::INFINITY, f64::INFINITY, 0.0f64, 0.0f64];
        for y in 0..mask.height {
            for x in 0..mask.width {
                if mask.at(x, y) > 0.5 {
                    b[0] = b[0].min(x as f64);
                    b[1] = b[1].min(y as f64);
                    b[2] = b[2].max(x as f64 + 1.0);
                    b[3] = b[3].max(y as f64 + 1.0);
                }
            }
        }
        for k in 0..4 {
            acc[k] += b[k] / q as f64;
        }
    }
    GroundTruthBox {
        xmin: acc[0].round(),
        ymin: acc[1].round(),
        xmax: acc[2].round(),
        ymax: acc[3].round(),
        class_id: 0,
    }
}
