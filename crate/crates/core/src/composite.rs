//! Foreground/background compositing: the shaded splat render is laid over a
//! background relit from its capture environment to the target environment.

use alloc::vec::Vec;

use crate::image::Image;
use crate::math::Mat3;
use crate::render::{self, RenderOutput};
use crate::scene::{Camera, EnvironmentMap, GaussianCloud};
use crate::shading::{self, HemisphereQuadrature};
use crate::{Error, Result};

/// Maps a background captured under `env_src` to its appearance under
/// `env_tgt`. Implementations must preserve dimensions, keep values in
/// `[0, 1]`, and return the input unchanged when both environments agree.
pub trait BackgroundRelighter {
    fn relight(&self, background: &Image, env_src: &EnvironmentMap, env_tgt: &EnvironmentMap) -> Result<Image>;
}

pub const MIN_GAIN: f64 = 0.05;
pub const MAX_GAIN: f64 = 20.0;

/// Per-channel gain from the ratio of mean environment radiance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParametricRelighter;

impl BackgroundRelighter for ParametricRelighter {
    fn relight(&self, background: &Image, env_src: &EnvironmentMap, env_tgt: &EnvironmentMap) -> Result<Image> {
        relight_background_parametric(background, env_src, env_tgt)
    }
}

pub fn channel_gains(env_src: &EnvironmentMap, env_tgt: &EnvironmentMap) -> [f64; 3] {
    let src = env_src.mean_radiance();
    let tgt = env_tgt.mean_radiance();
    let mut g = [1.0; 3];
    for c in 0..3 {
        g[c] = (tgt[c] / src[c].max(1e-6)).clamp(MIN_GAIN, MAX_GAIN);
    }
    g
}

pub fn relight_background_parametric(
    bg: &Image,
    env_src: &EnvironmentMap,
    env_tgt: &EnvironmentMap,
) -> Result<Image> {
    if bg.width == 0 || bg.height == 0 || bg.data.len() != bg.width * bg.height * 3 {
        return Err(Error::DimensionMismatch("background image is malformed".into()));
    }
    if env_src.id == env_tgt.id {
        return Ok(bg.clone());
    }
    let gain = channel_gains(env_src, env_tgt);
    let data = bg
        .data
        .chunks_exact(3)
        .flat_map(|px| [0, 1, 2].map(|c| (px[c] * gain[c]).clamp(0.0, 1.0)))
        .collect();
    Image::from_data(bg.width, bg.height, data)
}

/// `mask * fg + (1 - mask) * bg` with the soft coverage mask of the render.
pub fn composite(fg: &RenderOutput, bg_relit: &Image) -> Result<Image> {
    if !fg.rgb.same_dims(bg_relit) {
        return Err(Error::DimensionMismatch(alloc::format!(
            "foreground {}x{} vs background {}x{}",
            fg.rgb.width,
            fg.rgb.height,
            bg_relit.width,
            bg_relit.height
        )));
    }
    let mask = &fg.object_mask.data;
    let data = fg
        .rgb
        .data
        .chunks_exact(3)
        .zip(bg_relit.data.chunks_exact(3))
        .zip(mask)
        .flat_map(|((f, b), m)| [0, 1, 2].map(|c| (m * f[c] + (1.0 - m) * b[c]).clamp(0.0, 1.0)))
        .collect();
    Image::from_data(bg_relit.width, bg_relit.height, data)
}

/// Pulls `dL/dI_det` back to `dL/d fg.rgb` (multiplies by the mask).
pub fn composite_backward(fg: &RenderOutput, dl_dcomposite: &Image) -> Result<Image> {
    if !fg.rgb.same_dims(dl_dcomposite) {
        return Err(Error::DimensionMismatch("gradient size differs from render".into()));
    }
    let data = dl_dcomposite
        .data
        .chunks_exact(3)
        .zip(&fg.object_mask.data)
        .flat_map(|(g, m)| [g[0] * m, g[1] * m, g[2] * m])
        .collect();
    Image::from_data(dl_dcomposite.width, dl_dcomposite.height, data)
}

/// A shaded foreground pass plus what the albedo adjoint needs.
#[derive(Debug, Clone)]
pub struct Foreground {
    pub output: RenderOutput,
    /// Clamped per-primitive colors handed to the rasterizer.
    pub colors: Vec<[f64; 3]>,
    /// Per-primitive `d color / d albedo`; zero for primitives that are not
    /// visible or whose channels were clamped.
    pub jacobians: Vec<Mat3>,
}

impl Foreground {
    /// Albedo gradient for `dl_dcomposite`; non-camouflage primitives get zero.
    pub fn albedo_gradient(&self, cloud: &GaussianCloud, dl_dcomposite: &Image) -> Result<Vec<[f64; 3]>> {
        let dl_dfg = composite_backward(&self.output, dl_dcomposite)?;
        render::backward_albedo(&self.output, cloud, &dl_dfg, &self.jacobians)
    }
}

/// Shades and rasterizes every primitive. Camouflage primitives carry the
/// optimizable albedo; the rest render with frozen attributes and receive no
/// gradient in [`Foreground::albedo_gradient`].
pub fn foreground_with_frozen_regions(
    cloud: &GaussianCloud,
    camera: &Camera,
    env: &EnvironmentMap,
    quad: &HemisphereQuadrature,
) -> Result<Foreground> {
    let mut colors = Vec::with_capacity(cloud.len());
    let mut jacobians = Vec::with_capacity(cloud.len());
    for (i, g) in cloud.primitives.iter().enumerate() {
        if render::project_gaussian(g, i, camera).is_none() {
            colors.push([0.0; 3]);
            jacobians.push(Mat3::zeros());
            continue;
        }
        let s = shading::shade(g, camera, env, quad)?.clamped();
        colors.push(s.color);
        jacobians.push(s.jacobian);
    }
    let output = render::rasterize(cloud, camera, &colors)?;
    Ok(Foreground {
        output,
        colors,
        jacobians,
    })
}
