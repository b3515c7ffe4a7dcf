//! Per-primitive physically based shading: Disney-style microfacet BRDF
//! (Lambert diffuse + GGX / height-correlated Smith / Schlick specular) lit by
//! an equirectangular environment map plus a constant ambient term.
//!
//! Shading is affine in albedo per channel, so the albedo Jacobian is
//! diagonal; it is still carried as a 3x3 matrix so the rasterizer adjoint does
//! not depend on that structure.

use alloc::vec::Vec;

use crate::math::{self, Mat3, Vec3, PI};
use crate::scene::{Camera, EnvironmentMap, GaussianPrimitive};
use crate::{Error, Result};

/// Lower bound on the GGX width `alpha = roughness^2`.
pub const MIN_GGX_ALPHA: f64 = 1e-3;

/// Dielectric reflectance at normal incidence.
pub const DIELECTRIC_F0: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BRDFSample {
    /// Reflectance, sr^-1.
    pub value: [f64; 3],
    pub wi: Vec3,
    pub cos_term: f64,
}

/// Surface normal of a flattened Gaussian: the rotation-frame axis with the
/// smallest scale, flipped to face the viewer. `view_dir` points from the
/// camera toward the primitive.
pub fn surfel_normal(g: &GaussianPrimitive, view_dir: &Vec3) -> Vec3 {
    let mut axis = 0;
    for k in 1..3 {
        if g.scale[k] < g.scale[axis] {
            axis = k;
        }
    }
    let n: Vec3 = g.rotation_matrix().column(axis).into_owned();
    if n.dot(&(-view_dir)) < 0.0 {
        -n
    } else {
        n
    }
}

/// Components of the microfacet BRDF that do not depend on albedo, for one
/// `(wi, wo)` pair.
#[derive(Debug, Clone, Copy)]
struct SpecularTerms {
    /// `D * G / (4 (n.wi) (n.wo))`
    dg: f64,
    /// Schlick weight `(1 - wo.h)^5`.
    fresnel_weight: f64,
}

fn specular_terms(roughness: f64, n: &Vec3, wi: &Vec3, wo: &Vec3) -> SpecularTerms {
    let nl = n.dot(wi);
    let nv = n.dot(wo);
    let h = math::normalize(&(wi + wo));
    let nh = n.dot(&h).max(0.0);
    let vh = wo.dot(&h).clamp(0.0, 1.0);

    let alpha = (roughness * roughness).max(MIN_GGX_ALPHA);
    let a2 = alpha * alpha;
    let denom = nh * nh * (a2 - 1.0) + 1.0;
    let d = a2 / (PI * denom * denom);

    // Height-correlated Smith masking-shadowing for GGX.
    let lambda_v = nl * math::sqrt(a2 + (1.0 - a2) * nv * nv);
    let lambda_l = nv * math::sqrt(a2 + (1.0 - a2) * nl * nl);
    let g = 2.0 * nl * nv / (lambda_v + lambda_l);

    let one_minus = 1.0 - vh;
    let fw = one_minus * one_minus * one_minus * one_minus * one_minus;
    SpecularTerms {
        dg: d * g / (4.0 * nl * nv),
        fresnel_weight: fw,
    }
}

/// BRDF value and its per-channel derivative with respect to albedo.
fn brdf_with_albedo_grad(
    albedo: [f64; 3],
    metallic: f64,
    spec: SpecularTerms,
) -> ([f64; 3], [f64; 3]) {
    let diffuse_k = (1.0 - metallic) / PI;
    let mut value = [0.0; 3];
    let mut grad = [0.0; 3];
    for c in 0..3 {
        let f0 = DIELECTRIC_F0 * (1.0 - metallic) + albedo[c] * metallic;
        let f = f0 + (1.0 - f0) * spec.fresnel_weight;
        value[c] = diffuse_k * albedo[c] + spec.dg * f;
        grad[c] = diffuse_k + spec.dg * metallic * (1.0 - spec.fresnel_weight);
    }
    (value, grad)
}

/// Evaluates the BRDF for incident `wi` and outgoing `wo` (both pointing away
/// from the surface).
pub fn eval_brdf(
    albedo: [f64; 3],
    roughness: f64,
    metallic: f64,
    n: &Vec3,
    wi: &Vec3,
    wo: &Vec3,
) -> Result<[f64; 3]> {
    if n.dot(wi) <= 0.0 {
        return Err(Error::Degenerate("incident direction below the surface".into()));
    }
    if n.dot(wo) <= 0.0 {
        return Err(Error::Degenerate("outgoing direction below the surface".into()));
    }
    let spec = specular_terms(roughness, n, wi, wo);
    Ok(brdf_with_albedo_grad(albedo, metallic, spec).0)
}

/// Diffuse lobe alone, `(1 - metallic) * albedo / pi`.
pub fn diffuse_term(albedo: [f64; 3], metallic: f64) -> [f64; 3] {
    let k = (1.0 - metallic) / PI;
    [k * albedo[0], k * albedo[1], k * albedo[2]]
}

/// Product quadrature over the upper hemisphere of `normal`. Polar bands use
/// midpoint nodes; each node carries the exact solid angle of its cell so the
/// weights partition `2 pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct HemisphereQuadrature {
    pub n_theta: usize,
    pub n_phi: usize,
    pub normal: Vec3,
    /// `(direction, solid-angle weight)`.
    pub nodes: Vec<(Vec3, f64)>,
}

pub fn build_quadrature(n: &Vec3, n_theta: usize, n_phi: usize) -> Result<HemisphereQuadrature> {
    if n_theta == 0 || n_phi == 0 {
        return Err(Error::invalid("quadrature", "sample counts must be >= 1"));
    }
    let normal = math::normalize(n);
    let (t, b) = math::tangent_frame(&normal);
    let dtheta = 0.5 * PI / n_theta as f64;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let lo = i as f64 * dtheta;
        let hi = (i + 1) as f64 * dtheta;
        let theta = lo + 0.5 * dtheta;
        let w = (math::cos(lo) - math::cos(hi)) * dphi;
        let (st, ct) = (math::sin(theta), math::cos(theta));
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            let local = Vec3::new(st * math::cos(phi), st * math::sin(phi), ct);
            let dir = t * local.x + b * local.y + normal * local.z;
            nodes.push((dir, w));
        }
    }
    Ok(HemisphereQuadrature {
        n_theta,
        n_phi,
        normal,
        nodes,
    })
}

impl HemisphereQuadrature {
    /// Rule around +z; use [`oriented`](Self::oriented) to move it onto a normal.
    pub fn canonical(n_theta: usize, n_phi: usize) -> Result<Self> {
        build_quadrature(&Vec3::new(0.0, 0.0, 1.0), n_theta, n_phi)
    }

    /// Rigidly rotates the rule so that its pole is `n`.
    pub fn oriented(&self, n: &Vec3) -> HemisphereQuadrature {
        let normal = math::normalize(n);
        let (t, b) = math::tangent_frame(&normal);
        let (t0, b0) = math::tangent_frame(&self.normal);
        let nodes = self
            .nodes
            .iter()
            .map(|(d, w)| {
                let local = Vec3::new(d.dot(&t0), d.dot(&b0), d.dot(&self.normal));
                (t * local.x + b * local.y + normal * local.z, *w)
            })
            .collect();
        HemisphereQuadrature {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            normal,
            nodes,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }
}

/// Bilinear equirectangular lookup with azimuth wrap-around; rows clamp at
/// the poles.
pub fn sample_env(env: &EnvironmentMap, direction: &Vec3) -> [f64; 3] {
    let d = math::normalize(direction);
    let theta = math::acos(d.z);
    let mut phi = math::atan2(d.y, d.x);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    let w = env.width as f64;
    let h = env.height as f64;
    let u = phi / (2.0 * PI) * w - 0.5;
    let v = theta / PI * h - 0.5;

    let xf = math::floor(u);
    let fx = u - xf;
    let x0 = (xf as i64).rem_euclid(env.width as i64) as usize;
    let x1 = (x0 + 1) % env.width;

    let (y0, y1, fy) = if v <= 0.0 {
        (0, 0, 0.0)
    } else if v >= h - 1.0 {
        (env.height - 1, env.height - 1, 0.0)
    } else {
        let yf = math::floor(v);
        (yf as usize, yf as usize + 1, v - yf)
    };

    let t00 = env.texel(x0, y0);
    let t10 = env.texel(x1, y0);
    let t01 = env.texel(x0, y1);
    let t11 = env.texel(x1, y1);
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = t00[c] * (1.0 - fx) + t10[c] * fx;
        let bot = t01[c] * (1.0 - fx) + t11[c] * fx;
        out[c] = top * (1.0 - fy) + bot * fy;
    }
    out
}

/// Outgoing radiance of one primitive toward the camera and its Jacobian
/// with respect to albedo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shading {
    /// Unclamped linear radiance, `>= 0`.
    pub color: [f64; 3],
    /// `d color / d albedo`.
    pub jacobian: Mat3,
}

impl Shading {
    /// Clamps to `[0, 1]` for the rasterizer and zeroes Jacobian rows of
    /// clamped channels.
    pub fn clamped(&self) -> Shading {
        let mut color = self.color;
        let mut jacobian = self.jacobian;
        for c in 0..3 {
            if !(0.0..=1.0).contains(&color[c]) {
                color[c] = color[c].clamp(0.0, 1.0);
                for k in 0..3 {
                    jacobian[(c, k)] = 0.0;
                }
            }
        }
        Shading { color, jacobian }
    }
}

/// Shades `g` as seen from `camera`. `quad` is a rule around +z (see
/// [`HemisphereQuadrature::canonical`]); it is rotated onto the primitive's
/// normal.
pub fn shade(
    g: &GaussianPrimitive,
    camera: &Camera,
    env: &EnvironmentMap,
    quad: &HemisphereQuadrature,
) -> Result<Shading> {
    let frame = camera.frame();
    let to_g = g.mean - camera.position;
    if to_g.dot(&frame.forward) <= 0.0 {
        return Err(Error::Degenerate("primitive is behind the camera".into()));
    }
    let view_dir = math::normalize(&to_g);
    let wo = -view_dir;
    let n = surfel_normal(g, &view_dir);
    // Grazing views would divide by zero in the specular lobe.
    let wo = if n.dot(&wo) < 1e-6 {
        math::normalize(&(wo + n * (1e-6 - n.dot(&wo))))
    } else {
        wo
    };
    let oriented = quad.oriented(&n);

    let mut color = [0.0; 3];
    let mut dcolor = [0.0; 3];
    for (wi, weight) in &oriented.nodes {
        let cos_term = n.dot(wi);
        if cos_term <= 0.0 {
            continue;
        }
        let radiance = sample_env(env, wi);
        let spec = specular_terms(g.roughness, &n, wi, &wo);
        let (value, grad) = brdf_with_albedo_grad(g.albedo, g.metallic, spec);
        let sample = BRDFSample {
            value,
            wi: *wi,
            cos_term,
        };
        for c in 0..3 {
            let k = radiance[c] * sample.cos_term * weight;
            color[c] += sample.value[c] * k;
            dcolor[c] += grad[c] * k;
        }
    }
    for c in 0..3 {
        color[c] += g.albedo[c] * env.ambient[c];
        dcolor[c] += env.ambient[c];
    }
    Ok(Shading {
        color,
        jacobian: Mat3::from_diagonal(&Vec3::new(dcolor[0], dcolor[1], dcolor[2])),
    })
}
