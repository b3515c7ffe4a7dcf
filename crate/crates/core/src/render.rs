//! Tile-based Gaussian splat rasterizer with front-to-back alpha blending
//! and the albedo adjoint of the blended image.
//!
//! Each primitive carries one flat shaded color per view. Per pixel, splats
//! are blended in ascending depth (ties by source index). Every blend weight
//! is recorded so the backward pass is an exact transpose of the forward one.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::{Image, Mask};
use crate::math::{self, Mat2, Mat3, Vec3};
use crate::par;
use crate::scene::{Camera, GaussianCloud, GaussianPrimitive};
use crate::{Error, Result};

pub const TILE_SIZE: usize = 16;
pub const NEAR_PLANE: f64 = 0.01;
/// Isotropic screen-space low-pass added to every projected covariance, px^2.
pub const LOW_PASS: f64 = 0.3;
/// Splats with smaller effective opacity are skipped; blending stops once
/// transmittance falls below this value.
pub const ALPHA_EPS: f64 = 1.0 / 255.0;

/// Minimum scale accepted by [`evaluate_gaussian`].
pub const MIN_SCALE: f64 = 1e-9;

/// Unnormalized 3D Gaussian density `exp(-1/2 (x-mu)^T Sigma^-1 (x-mu))`.
pub fn evaluate_gaussian(g: &GaussianPrimitive, x: &Vec3) -> Result<f64> {
    if g.scale.iter().any(|s| !(*s >= MIN_SCALE)) {
        return Err(Error::Degenerate("covariance is singular".into()));
    }
    // Sigma^-1 = R diag(1/s^2) R^T, so the exponent is |diag(1/s) R^T d|^2.
    let local = g.rotation_matrix().transpose() * (x - g.mean);
    let m = local.component_div(&g.scale).norm_squared();
    Ok(math::exp(-0.5 * m))
}

/// World-space covariance `R diag(s^2) R^T`.
pub fn covariance_3d(g: &GaussianPrimitive) -> Mat3 {
    let r = g.rotation_matrix();
    let s2 = Mat3::from_diagonal(&g.scale.component_mul(&g.scale));
    r * s2 * r.transpose()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splat2D {
    pub mean2d: [f64; 2],
    /// Regularized screen covariance, px^2.
    pub cov2d: Mat2,
    /// Inverse of `cov2d`.
    pub conic: Mat2,
    /// Camera-space depth in meters.
    pub depth: f64,
    pub color: [f64; 3],
    pub opacity: f64,
    pub source_index: usize,
}

impl Splat2D {
    /// Effective opacity at a pixel-space point.
    #[inline]
    pub fn alpha_at(&self, px: f64, py: f64) -> f64 {
        let dx = px - self.mean2d[0];
        let dy = py - self.mean2d[1];
        let c = &self.conic;
        let power = -0.5 * (c[(0, 0)] * dx * dx + 2.0 * c[(0, 1)] * dx * dy + c[(1, 1)] * dy * dy);
        (self.opacity * math::exp(power)).min(1.0)
    }

    fn max_eigenvalue(&self) -> f64 {
        let a = self.cov2d[(0, 0)];
        let b = self.cov2d[(0, 1)];
        let d = self.cov2d[(1, 1)];
        let mid = 0.5 * (a + d);
        mid + math::sqrt((mid * mid - (a * d - b * b)).max(0.0))
    }

    /// Half-extent beyond which `alpha_at` is below [`ALPHA_EPS`].
    fn influence_radius(&self) -> f64 {
        if self.opacity <= ALPHA_EPS {
            return 0.0;
        }
        math::sqrt(2.0 * math::ln(self.opacity / ALPHA_EPS) * self.max_eigenvalue())
    }
}

/// Perspective-projects one primitive. Returns `None` when the mean is in
/// front of the near plane or the 3-sigma footprint misses the viewport.
/// The returned splat has a zero color; the rasterizer fills it in.
pub fn project_gaussian(g: &GaussianPrimitive, source_index: usize, camera: &Camera) -> Option<Splat2D> {
    let frame = camera.frame();
    let rel = g.mean - camera.position;
    let t = Vec3::new(rel.dot(&frame.right), rel.dot(&frame.down), rel.dot(&frame.forward));
    if t.z < NEAR_PLANE {
        return None;
    }
    let f = camera.focal();
    let (cx, cy) = camera.principal_point();
    let mean2d = [f * t.x / t.z + cx, f * t.y / t.z + cy];

    let w = Mat3::from_rows(&[frame.right.transpose(), frame.down.transpose(), frame.forward.transpose()]);
    let cov_cam = w * covariance_3d(g) * w.transpose();
    let jz = f / t.z;
    let j = nalgebra::Matrix2x3::new(jz, 0.0, -jz * t.x / t.z, 0.0, jz, -jz * t.y / t.z);
    let mut cov2d: Mat2 = j * cov_cam * j.transpose();
    // Symmetrize before regularizing so the inverse is exactly symmetric too.
    let off = 0.5 * (cov2d[(0, 1)] + cov2d[(1, 0)]);
    cov2d[(0, 1)] = off;
    cov2d[(1, 0)] = off;
    cov2d[(0, 0)] += LOW_PASS;
    cov2d[(1, 1)] += LOW_PASS;
    let det = cov2d[(0, 0)] * cov2d[(1, 1)] - off * off;
    if !(det > 0.0) {
        return None;
    }
    let conic = Mat2::new(cov2d[(1, 1)] / det, -off / det, -off / det, cov2d[(0, 0)] / det);
    let splat = Splat2D {
        mean2d,
        cov2d,
        conic,
        depth: t.z,
        color: [0.0; 3],
        opacity: g.opacity,
        source_index,
    };
    let r = 3.0 * math::sqrt(splat.max_eigenvalue());
    let (wf, hf) = (camera.width as f64, camera.height as f64);
    if mean2d[0] + r < 0.0 || mean2d[0] - r > wf || mean2d[1] + r < 0.0 || mean2d[1] - r > hf {
        return None;
    }
    Some(splat)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub source: u32,
    /// `alpha'_k * T_k`.
    pub weight: f64,
}

/// Blend records of one tile, pixels in row-major order within the tile.
#[derive(Debug, Clone, PartialEq)]
pub struct TileRecords {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    offsets: Vec<u32>,
    entries: Vec<Contribution>,
}

impl TileRecords {
    fn pixel(&self, lx: usize, ly: usize) -> &[Contribution] {
        let p = ly * self.width + lx;
        &self.entries[self.offsets[p] as usize..self.offsets[p + 1] as usize]
    }
}

/// Per-pixel ordered blend records, stored tile-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ContribRecords {
    tiles_x: usize,
    pub tiles: Vec<TileRecords>,
}

impl ContribRecords {
    /// Blend records of pixel `(x, y)` in blending order.
    pub fn at(&self, x: usize, y: usize) -> &[Contribution] {
        let tile = &self.tiles[(y / TILE_SIZE) * self.tiles_x + x / TILE_SIZE];
        tile.pixel(x - tile.x0, y - tile.y0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub rgb: Image,
    pub transmittance: Mask,
    /// `1 - transmittance`.
    pub object_mask: Mask,
    pub contrib_records: Option<ContribRecords>,
}

impl RenderOutput {
    pub fn width(&self) -> usize {
        self.rgb.width
    }

    pub fn height(&self) -> usize {
        self.rgb.height
    }
}

struct TileOutput {
    rgb: Vec<f64>,
    transmittance: Vec<f64>,
    records: Option<TileRecords>,
}

fn rasterize_impl(
    cloud: &GaussianCloud,
    camera: &Camera,
    colors: Option<&[[f64; 3]]>,
    keep_records: bool,
) -> Result<RenderOutput> {
    camera.validate()?;
    let (width, height) = (camera.width, camera.height);

    let mut splats: Vec<Splat2D> = cloud
        .primitives
        .iter()
        .enumerate()
        .filter_map(|(i, g)| {
            let mut s = project_gaussian(g, i, camera)?;
            if let Some(c) = colors {
                s.color = c[i];
            }
            Some(s)
        })
        .collect();
    splats.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.source_index.cmp(&b.source_index)));
    let bounds: Vec<[f64; 4]> = splats
        .iter()
        .map(|s| {
            let r = s.influence_radius();
            [s.mean2d[0] - r, s.mean2d[1] - r, s.mean2d[0] + r, s.mean2d[1] + r]
        })
        .collect();

    let tiles_x = width.div_ceil(TILE_SIZE);
    let tiles_y = height.div_ceil(TILE_SIZE);
    let tiles = par::map_indexed(tiles_x * tiles_y, |t| {
        let x0 = (t % tiles_x) * TILE_SIZE;
        let y0 = (t / tiles_x) * TILE_SIZE;
        let tw = TILE_SIZE.min(width - x0);
        let th = TILE_SIZE.min(height - y0);
        let (fx0, fy0, fx1, fy1) = (x0 as f64, y0 as f64, (x0 + tw) as f64, (y0 + th) as f64);
        let local: Vec<&Splat2D> = splats
            .iter()
            .zip(&bounds)
            .filter(|(_, b)| b[2] >= fx0 && b[0] <= fx1 && b[3] >= fy0 && b[1] <= fy1)
            .map(|(s, _)| s)
            .collect();

        let mut rgb = vec![0.0; tw * th * 3];
        let mut trans = vec![1.0; tw * th];
        let mut offsets = Vec::with_capacity(if keep_records { tw * th + 1 } else { 0 });
        let mut entries = Vec::new();
        for ly in 0..th {
            for lx in 0..tw {
                if keep_records {
                    offsets.push(entries.len() as u32);
                }
                let px = (x0 + lx) as f64 + 0.5;
                let py = (y0 + ly) as f64 + 0.5;
                let p = ly * tw + lx;
                let mut t_acc = 1.0;
                let mut c = [0.0; 3];
                for s in &local {
                    if t_acc < ALPHA_EPS {
                        break;
                    }
                    let alpha = s.alpha_at(px, py);
                    if alpha < ALPHA_EPS {
                        continue;
                    }
                    // The weight is the drop in transmittance, so the weights and the
                    // final transmittance telescope to 1 with minimal rounding.
                    let t_next = t_acc * (1.0 - alpha);
                    let w = t_acc - t_next;
                    for k in 0..3 {
                        c[k] += s.color[k] * w;
                    }
                    if keep_records {
                        entries.push(Contribution {
                            source: s.source_index as u32,
                            weight: w,
                        });
                    }
                    t_acc = t_next;
                }
                rgb[p * 3..p * 3 + 3].copy_from_slice(&c);
                trans[p] = t_acc;
            }
        }
        let records = keep_records.then(|| {
            offsets.push(entries.len() as u32);
            TileRecords {
                x0,
                y0,
                width: tw,
                height: th,
                offsets,
                entries,
            }
        });
        TileOutput {
            rgb,
            transmittance: trans,
            records,
        }
    });

    let mut rgb = Image::new(width, height);
    let mut transmittance = Mask::filled(width, height, 1.0);
    let mut tile_records = Vec::with_capacity(if keep_records { tiles.len() } else { 0 });
    for (t, tile) in tiles.into_iter().enumerate() {
        let x0 = (t % tiles_x) * TILE_SIZE;
        let y0 = (t / tiles_x) * TILE_SIZE;
        let tw = TILE_SIZE.min(width - x0);
        let th = TILE_SIZE.min(height - y0);
        for ly in 0..th {
            for lx in 0..tw {
                let p = ly * tw + lx;
                let (x, y) = (x0 + lx, y0 + ly);
                rgb.set_pixel(x, y, [tile.rgb[p * 3], tile.rgb[p * 3 + 1], tile.rgb[p * 3 + 2]]);
                transmittance.data[y * width + x] = tile.transmittance[p];
            }
        }
        if let Some(r) = tile.records {
            tile_records.push(r);
        }
    }
    let object_mask = Mask {
        width,
        height,
        data: transmittance.data.iter().map(|t| 1.0 - t).collect(),
    };
    Ok(RenderOutput {
        rgb,
        transmittance,
        object_mask,
        contrib_records: keep_records.then_some(ContribRecords {
            tiles_x,
            tiles: tile_records,
        }),
    })
}

/// Renders `cloud` with one shaded color per primitive, keeping blend records
/// for [`backward_albedo`].
pub fn rasterize(cloud: &GaussianCloud, camera: &Camera, shaded_colors: &[[f64; 3]]) -> Result<RenderOutput> {
    if shaded_colors.len() != cloud.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} shaded colors for {} primitives",
            shaded_colors.len(),
            cloud.len()
        )));
    }
    rasterize_impl(cloud, camera, Some(shaded_colors), true)
}

/// Coverage mask `1 - transmittance`, without colors or records.
pub fn render_object_mask(cloud: &GaussianCloud, camera: &Camera) -> Result<Mask> {
    Ok(rasterize_impl(cloud, camera, None, false)?.object_mask)
}

/// Pulls an image-space gradient back to per-primitive albedo gradients.
///
/// `dl_dpixels` is the gradient with respect to `output.rgb`;
/// `shading_jacobians[i]` is `d color_i / d albedo_i`. Primitives outside the
/// camouflage region get an exact zero.
pub fn backward_albedo(
    output: &RenderOutput,
    cloud: &GaussianCloud,
    dl_dpixels: &Image,
    shading_jacobians: &[Mat3],
) -> Result<Vec<[f64; 3]>> {
    let records = output
        .contrib_records
        .as_ref()
        .ok_or_else(|| Error::invalid("render_output", "blend records were not retained"))?;
    if shading_jacobians.len() != cloud.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} shading jacobians for {} primitives",
            shading_jacobians.len(),
            cloud.len()
        )));
    }
    if !dl_dpixels.same_dims(&output.rgb) {
        return Err(Error::DimensionMismatch("pixel gradient size differs from render".into()));
    }
    let n = cloud.len();
    let width = output.width();

    let partials = par::map_indexed(records.tiles.len(), |t| {
        let tile = &records.tiles[t];
        let mut acc = vec![[0.0f64; 3]; n];
        for ly in 0..tile.height {
            for lx in 0..tile.width {
                let idx = ((tile.y0 + ly) * width + tile.x0 + lx) * 3;
                let g = &dl_dpixels.data[idx..idx + 3];
                if g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0 {
                    continue;
                }
                for rec in tile.pixel(lx, ly) {
                    let a = &mut acc[rec.source as usize];
                    for k in 0..3 {
                        a[k] += rec.weight * g[k];
                    }
                }
            }
        }
        acc
    });

    let mut dcolor = vec![[0.0f64; 3]; n];
    for partial in &partials {
        for (d, p) in dcolor.iter_mut().zip(partial) {
            for k in 0..3 {
                d[k] += p[k];
            }
        }
    }
    Ok(dcolor
        .iter()
        .zip(&cloud.primitives)
        .zip(shading_jacobians)
        .map(|((dc, g), jac)| {
            if !g.camo {
                return [0.0; 3];
            }
            let v = jac.transpose() * Vec3::new(dc[0], dc[1], dc[2]);
            [v.x, v.y, v.z]
        })
        .collect())
}
