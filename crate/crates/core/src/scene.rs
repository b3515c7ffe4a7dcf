//! Scene description: Gaussian primitives with PBR attributes, environments,
//! cameras and the discretized physical configuration grid.
//!
//! Axis convention: right-handed, z-up. Azimuth is measured from +x toward
//! +y, pitch is elevation above the horizontal plane.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::image::Image;
use crate::math::{self, Vec3};
use crate::{Error, Result};

/// One splat: geometry plus physically disentangled surface attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    pub mean: Vec3,
    /// Per-axis standard deviation in meters, in the rotation frame.
    pub scale: Vec3,
    /// Unit quaternion `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub opacity: f64,
    pub albedo: [f64; 3],
    pub roughness: f64,
    pub metallic: f64,
    /// Whether this primitive belongs to the camouflage region (optimizable albedo).
    pub camo: bool,
}

impl GaussianPrimitive {
    /// An isotropic, axis-aligned primitive with mid-gray dielectric defaults.
    pub fn isotropic(mean: Vec3, sigma: f64) -> Self {
        GaussianPrimitive {
            mean,
            scale: Vec3::new(sigma, sigma, sigma),
            rotation: [1.0, 0.0, 0.0, 0.0],
            opacity: 1.0,
            albedo: [0.5, 0.5, 0.5],
            roughness: 1.0,
            metallic: 0.0,
            camo: false,
        }
    }

    /// Clamps opacity, albedo, roughness and metallic into `[0, 1]`.
    pub fn clamp_attributes(&mut self) {
        self.opacity = self.opacity.clamp(0.0, 1.0);
        for a in &mut self.albedo {
            *a = a.clamp(0.0, 1.0);
        }
        self.roughness = self.roughness.clamp(0.0, 1.0);
        self.metallic = self.metallic.clamp(0.0, 1.0);
    }

    pub fn rotation_matrix(&self) -> crate::Mat3 {
        let q = self.rotation;
        let n = math::sqrt(q.iter().map(|v| v * v).sum());
        math::quat_to_mat([q[0] / n, q[1] / n, q[2] / n, q[3] / n])
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let finite3 = |v: &Vec3| v.iter().all(|x| x.is_finite());
        if !finite3(&self.mean) {
            return Err(Error::invalid(format!("{path}.mean"), "non-finite"));
        }
        if !self.scale.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::invalid(
                format!("{path}.scale"),
                "components must be finite and > 0",
            ));
        }
        let qn = math::sqrt(self.rotation.iter().map(|v| v * v).sum());
        if !qn.is_finite() || (qn - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                format!("{path}.rotation"),
                format!("quaternion norm {qn} is not 1"),
            ));
        }
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !unit(self.opacity) {
            return Err(Error::invalid(format!("{path}.opacity"), "must lie in [0,1]"));
        }
        if !self.albedo.iter().all(|a| unit(*a)) {
            return Err(Error::invalid(format!("{path}.albedo"), "must lie in [0,1]"));
        }
        if !unit(self.roughness) {
            return Err(Error::invalid(format!("{path}.roughness"), "must lie in [0,1]"));
        }
        if !unit(self.metallic) {
            return Err(Error::invalid(format!("{path}.metallic"), "must lie in [0,1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCloud {
    pub primitives: Vec<GaussianPrimitive>,
    pub target_center: Vec3,
}

impl GaussianCloud {
    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Indices of camouflage primitives, in cloud order.
    pub fn camo_indices(&self) -> Vec<usize> {
        (0..self.primitives.len())
            .filter(|&i| self.primitives[i].camo)
            .collect()
    }

    /// Flattened `[r, g, b, r, g, b, ...]` albedo of the camouflage primitives.
    pub fn camo_albedo(&self) -> Vec<f64> {
        self.primitives
            .iter()
            .filter(|g| g.camo)
            .flat_map(|g| g.albedo)
            .collect()
    }

    /// Writes a flattened camouflage albedo vector back, clamping to `[0, 1]`.
    pub fn set_camo_albedo(&mut self, params: &[f64]) -> Result<()> {
        let n = self.primitives.iter().filter(|g| g.camo).count();
        if params.len() != 3 * n {
            return Err(Error::DimensionMismatch(format!(
                "{} camouflage primitives need {} albedo values, got {}",
                n,
                3 * n,
                params.len()
            )));
        }
        let mut chunks = params.chunks_exact(3);
        for g in self.primitives.iter_mut().filter(|g| g.camo) {
            let c = chunks.next().expect("length checked above");
            for k in 0..3 {
                g.albedo[k] = c[k].clamp(0.0, 1.0);
            }
        }
        Ok(())
    }

    /// Validation for a cloud that belongs to a scene. An empty cloud is
    /// still renderable, but a scene must contain at least one primitive.
    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(Error::invalid("gaussians", "must not be empty"));
        }
        if !self.target_center.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("target_center", "non-finite"));
        }
        for (i, g) in self.primitives.iter().enumerate() {
            g.validate(&format!("gaussians[{i}]"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConfiguration {
    pub pitch_deg: f64,
    pub azimuth_deg: f64,
    pub distance_m: f64,
    pub env_id: String,
}

impl PhysicalConfiguration {
    pub fn validate(&self) -> Result<()> {
        validate_pitch(self.pitch_deg, "pitch")?;
        validate_azimuth(self.azimuth_deg, "azimuth")?;
        validate_distance(self.distance_m, "distance")
    }
}

fn validate_pitch(v: f64, field: &str) -> Result<()> {
    if !(v.is_finite() && (0.0..=90.0).contains(&v)) {
        return Err(Error::invalid(field, format!("pitch {v} outside [0, 90]")));
    }
    Ok(())
}

fn validate_azimuth(v: f64, field: &str) -> Result<()> {
    if !(v.is_finite() && (0.0..360.0).contains(&v)) {
        return Err(Error::invalid(field, format!("azimuth {v} outside [0, 360)")));
    }
    Ok(())
}

fn validate_distance(v: f64, field: &str) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(field, format!("distance {v} must be > 0")));
    }
    Ok(())
}

/// Discretized physical configuration grid. Cell `i` enumerates
/// `(pitch, azimuth, distance, env)` in row-major order, env fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpace {
    pub pitch_bins: Vec<f64>,
    pub azimuth_bins: Vec<f64>,
    pub distance_bins: Vec<f64>,
    pub env_ids: Vec<String>,
}

/// Builds a configuration grid after checking every bin value.
pub fn discretize_space(
    pitch_bins: &[f64],
    azimuth_bins: &[f64],
    distance_bins: &[f64],
    env_ids: &[String],
) -> Result<ConfigurationSpace> {
    fn sorted(name: &str, v: &[f64], check: impl Fn(f64, &str) -> Result<()>) -> Result<()> {
        if v.is_empty() {
            return Err(Error::invalid(name, "dimension must not be empty"));
        }
        for (i, x) in v.iter().enumerate() {
            check(*x, &format!("{name}[{i}]"))?;
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(name, "bins must be strictly increasing"));
        }
        Ok(())
    }
    sorted("config_space.pitch", pitch_bins, validate_pitch)?;
    sorted("config_space.azimuth", azimuth_bins, validate_azimuth)?;
    sorted("config_space.distance", distance_bins, validate_distance)?;
    if env_ids.is_empty() {
        return Err(Error::invalid("config_space.envs", "dimension must not be empty"));
    }
    for (i, id) in env_ids.iter().enumerate() {
        if env_ids[..i].contains(id) {
            return Err(Error::invalid("config_space.envs", format!("duplicate id `{id}`")));
        }
    }
    Ok(ConfigurationSpace {
        pitch_bins: pitch_bins.to_vec(),
        azimuth_bins: azimuth_bins.to_vec(),
        distance_bins: distance_bins.to_vec(),
        env_ids: env_ids.to_vec(),
    })
}

/// Per-dimension bin indices of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellCoords {
    pub pitch: usize,
    pub azimuth: usize,
    pub distance: usize,
    pub env: usize,
}

impl ConfigurationSpace {
    /// Number of cells `q`.
    pub fn len(&self) -> usize {
        self.pitch_bins.len() * self.azimuth_bins.len() * self.distance_bins.len() * self.env_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords_of(&self, index: usize) -> Result<CellCoords> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            });
        }
        let ne = self.env_ids.len();
        let nd = self.distance_bins.len();
        let na = self.azimuth_bins.len();
        Ok(CellCoords {
            env: index % ne,
            distance: (index / ne) % nd,
            azimuth: (index / (ne * nd)) % na,
            pitch: index / (ne * nd * na),
        })
    }

    pub fn index_of_coords(&self, c: CellCoords) -> usize {
        ((c.pitch * self.azimuth_bins.len() + c.azimuth) * self.distance_bins.len() + c.distance)
            * self.env_ids.len()
            + c.env
    }

    pub fn config_of(&self, index: usize) -> Result<PhysicalConfiguration> {
        let c = self.coords_of(index)?;
        Ok(PhysicalConfiguration {
            pitch_deg: self.pitch_bins[c.pitch],
            azimuth_deg: self.azimuth_bins[c.azimuth],
            distance_m: self.distance_bins[c.distance],
            env_id: self.env_ids[c.env].clone(),
        })
    }

    /// Inverse of [`config_of`](Self::config_of); values must match bins exactly.
    pub fn index_of(&self, cfg: &PhysicalConfiguration) -> Option<usize> {
        let find = |bins: &[f64], v: f64| bins.iter().position(|b| *b == v);
        Some(self.index_of_coords(CellCoords {
            pitch: find(&self.pitch_bins, cfg.pitch_deg)?,
            azimuth: find(&self.azimuth_bins, cfg.azimuth_deg)?,
            distance: find(&self.distance_bins, cfg.distance_m)?,
            env: self.env_ids.iter().position(|e| *e == cfg.env_id)?,
        }))
    }
}

/// Equirectangular linear radiance map: row ↔ polar angle from +z, column ↔
/// azimuth from +x toward +y.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap {
    pub id: String,
    pub width: usize,
    pub height: usize,
    /// Interleaved RGB, row-major, `height * width * 3` values.
    pub radiance: Vec<f64>,
    /// Constant indirect illumination.
    pub ambient: [f64; 3],
}

impl EnvironmentMap {
    pub fn constant(id: &str, width: usize, height: usize, value: [f64; 3], ambient: [f64; 3]) -> Self {
        let mut radiance = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            radiance.extend_from_slice(&value);
        }
        EnvironmentMap {
            id: id.to_string(),
            width,
            height,
            radiance,
            ambient,
        }
    }

    #[inline]
    pub fn texel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.radiance[i], self.radiance[i + 1], self.radiance[i + 2]]
    }

    pub fn mean_radiance(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for px in self.radiance.chunks_exact(3) {
            for c in 0..3 {
                acc[c] += px[c];
            }
        }
        let n = (self.width * self.height).max(1) as f64;
        [acc[0] / n, acc[1] / n, acc[2] / n]
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if self.height == 0 || self.width != 2 * self.height {
            return Err(Error::invalid(
                format!("{path}.width"),
                format!("width {} must equal 2 x height {}", self.width, self.height),
            ));
        }
        if self.radiance.len() != self.width * self.height * 3 {
            return Err(Error::invalid(
                format!("{path}.radiance"),
                format!("expected {} values, got {}", self.width * self.height * 3, self.radiance.len()),
            ));
        }
        if !self.radiance.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::invalid(format!("{path}.radiance"), "values must be finite and >= 0"));
        }
        if !self.ambient.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::invalid(format!("{path}.ambient"), "values must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Pinhole camera. Camera space is x right, y down, z forward.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub vertical_fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

/// Orthonormal camera basis in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFrame {
    pub right: Vec3,
    pub down: Vec3,
    pub forward: Vec3,
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        let d = self.look_at - self.position;
        if math::norm(&d) == 0.0 {
            return Err(Error::Degenerate("camera position equals look_at".into()));
        }
        if math::norm(&d.cross(&self.up)) <= 1e-12 * math::norm(&d) * math::norm(&self.up) {
            return Err(Error::Degenerate("camera up is parallel to the view direction".into()));
        }
        if !(self.vertical_fov_deg > 0.0 && self.vertical_fov_deg < 180.0) {
            return Err(Error::invalid("camera.vertical_fov_deg", "must lie in (0, 180)"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("camera.size", "width and height must be > 0"));
        }
        Ok(())
    }

    pub fn frame(&self) -> CameraFrame {
        let forward = math::normalize(&(self.look_at - self.position));
        let right = math::normalize(&forward.cross(&self.up));
        let up = right.cross(&forward);
        CameraFrame {
            right,
            down: -up,
            forward,
        }
    }

    /// Focal length in pixels (square pixels).
    pub fn focal(&self) -> f64 {
        0.5 * self.height as f64 / math::tan(0.5 * math::deg_to_rad(self.vertical_fov_deg))
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (0.5 * self.width as f64, 0.5 * self.height as f64)
    }
}

/// Result of [`camera_from_config`]; `fallback_up` records that world-up
/// was parallel to the view direction and `(1, 0, 0)` was used instead.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraPlacement {
    pub camera: Camera,
    pub fallback_up: bool,
}

/// Places a camera on the sphere of radius `distance_m` around `target_center`.
pub fn camera_from_config(
    cfg: &PhysicalConfiguration,
    target_center: Vec3,
    fov_deg: f64,
    width: usize,
    height: usize,
) -> Result<CameraPlacement> {
    cfg.validate()?;
    let p = math::deg_to_rad(cfg.pitch_deg);
    let a = math::deg_to_rad(cfg.azimuth_deg);
    let dir = Vec3::new(math::cos(p) * math::cos(a), math::cos(p) * math::sin(a), math::sin(p));
    let position = target_center + dir * cfg.distance_m;
    let world_up = Vec3::new(0.0, 0.0, 1.0);
    let fallback_up = math::norm(&dir.cross(&world_up)) < 1e-9;
    let up = if fallback_up {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        world_up
    };
    let camera = Camera {
        position,
        look_at: target_center,
        up,
        vertical_fov_deg: fov_deg,
        width,
        height,
    };
    camera.validate()?;
    Ok(CameraPlacement { camera, fallback_up })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
    pub class_id: u32,
}

impl GroundTruthBox {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let ok = self.xmin.is_finite()
            && self.ymin.is_finite()
            && self.xmax.is_finite()
            && self.ymax.is_finite()
            && self.xmin < self.xmax
            && self.ymin < self.ymax
            && self.xmin >= 0.0
            && self.ymin >= 0.0
            && self.xmax <= width as f64
            && self.ymax <= height as f64;
        if !ok {
            return Err(Error::invalid(
                "ground_truth",
                format!("box must be non-degenerate and inside {width}x{height}"),
            ));
        }
        Ok(())
    }

    pub fn rect(&self) -> [f64; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }
}

/// Everything one attack needs besides the detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub cloud: GaussianCloud,
    pub environments: Vec<EnvironmentMap>,
    /// Background photographed under `environments[0]`, linear RGB.
    pub background: Image,
    pub ground_truth: GroundTruthBox,
    pub space: ConfigurationSpace,
    pub fov_deg: f64,
}

pub const DEFAULT_FOV_DEG: f64 = 40.0;

impl Scene {
    pub fn environment(&self, id: &str) -> Result<&EnvironmentMap> {
        self.environments
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::UnknownEnvironment(id.to_string()))
    }

    /// Environment under which the background image was captured.
    pub fn reference_environment(&self) -> &EnvironmentMap {
        &self.environments[0]
    }

    pub fn camera_for_cell(&self, index: usize) -> Result<CameraPlacement> {
        let cfg = self.space.config_of(index)?;
        camera_from_config(
            &cfg,
            self.cloud.target_center,
            self.fov_deg,
            self.background.width,
            self.background.height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.cloud.validate()?;
        if self.environments.is_empty() {
            return Err(Error::invalid("environments", "must not be empty"));
        }
        for (i, e) in self.environments.iter().enumerate() {
            if self.environments[..i].iter().any(|o| o.id == e.id) {
                return Err(Error::invalid(
                    format!("environments[{i}].id"),
                    format!("duplicate id `{}`", e.id),
                ));
            }
            e.validate(&format!("environments[{i}]"))?;
        }
        let s = &self.space;
        discretize_space(&s.pitch_bins, &s.azimuth_bins, &s.distance_bins, &s.env_ids)?;
        for id in &s.env_ids {
            self.environment(id)?;
        }
        if self.background.width == 0 || self.background.height == 0 {
            return Err(Error::invalid("background", "image must not be empty"));
        }
        if !self.background.data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(Error::invalid("background", "pixels must lie in [0,1]"));
        }
        self.ground_truth
            .validate(self.background.width, self.background.height)?;
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::invalid("fov_deg", "must lie in (0, 180)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn full_grid_has_4320_cells() {
        let pitch: Vec<f64> = (0..10).map(|i| i as f64 * 9.0).collect();
        let az: Vec<f64> = (0..18).map(|i| i as f64 * 20.0).collect();
        let dist = [5.0, 10.0, 15.0, 20.0];
        let envs = ids(&["sunny", "cloudy", "rain", "fog", "dusk", "night"]);
        let space = discretize_space(&pitch, &az, &dist, &envs).unwrap();
        assert_eq!(space.len(), 4320);
    }

    #[test]
    fn single_bin_grid() {
        let space = discretize_space(&[10.0], &[0.0], &[5.0], &ids(&["a"])).unwrap();
        assert_eq!(space.len(), 1);
        assert_eq!(space.config_of(0).unwrap().env_id, "a");
    }

    #[test]
    fn row_major_cell_five() {
        let space = discretize_space(&[10.0, 20.0], &[0.0, 90.0, 180.0], &[5.0], &ids(&["e"])).unwrap();
        // Hand enumeration: (p0,a0) (p0,a1) (p0,a2) (p1,a0) (p1,a1) (p1,a2)
        let cfg = space.config_of(5).unwrap();
        assert_eq!(cfg.pitch_deg, 20.0);
        assert_eq!(cfg.azimuth_deg, 180.0);
        assert_eq!(cfg.distance_m, 5.0);
        assert_eq!(cfg.env_id, "e");
        assert!(space.config_of(6).is_err());
    }

    #[test]
    fn rejects_empty_and_out_of_range_bins() {
        assert!(discretize_space(&[], &[0.0], &[1.0], &ids(&["a"])).is_err());
        assert!(discretize_space(&[91.0], &[0.0], &[1.0], &ids(&["a"])).is_err());
        assert!(discretize_space(&[10.0], &[360.0], &[1.0], &ids(&["a"])).is_err());
        assert!(discretize_space(&[10.0], &[0.0], &[0.0], &ids(&["a"])).is_err());
        assert!(discretize_space(&[10.0], &[0.0], &[1.0], &[]).is_err());
        assert!(discretize_space(&[20.0, 10.0], &[0.0], &[1.0], &ids(&["a"])).is_err());
        assert!(discretize_space(&[10.0], &[0.0], &[1.0], &ids(&["a", "a"])).is_err());
    }

    fn cfg(p: f64, a: f64, d: f64) -> PhysicalConfiguration {
        PhysicalConfiguration {
            pitch_deg: p,
            azimuth_deg: a,
            distance_m: d,
            env_id: "e".into(),
        }
    }

    #[test]
    fn camera_anchor_cases() {
        let c = camera_from_config(&cfg(0.0, 0.0, 10.0), Vec3::zeros(), 40.0, 32, 32).unwrap();
        assert!((c.camera.position - Vec3::new(10.0, 0.0, 0.0)).norm() < 1e-12);
        assert!(!c.fallback_up);

        let c = camera_from_config(&cfg(90.0, 123.0, 5.0), Vec3::zeros(), 40.0, 32, 32).unwrap();
        assert!((c.camera.position - Vec3::new(0.0, 0.0, 5.0)).norm() < 1e-12);
        assert!(c.fallback_up);
        assert_eq!(c.camera.up, Vec3::new(1.0, 0.0, 0.0));

        let c = camera_from_config(&cfg(30.0, 90.0, 10.0), Vec3::zeros(), 40.0, 32, 32).unwrap();
        let expect = Vec3::new(0.0, 10.0 * math::cos(math::PI / 6.0), 5.0);
        assert!((c.camera.position - expect).norm() < 1e-12);
        assert!((c.camera.position.y - 8.6603).abs() < 1e-4);
    }

    #[test]
    fn camera_frame_is_right_handed() {
        let c = camera_from_config(&cfg(20.0, 45.0, 7.0), Vec3::new(1.0, 2.0, 0.5), 40.0, 32, 32).unwrap();
        let f = c.camera.frame();
        assert!((f.right.cross(&f.down) - f.forward).norm() < 1e-12);
        // Down has a negative world-z component when the camera is upright.
        assert!(f.down.z < 0.0);
    }

    #[test]
    fn camo_albedo_roundtrip_clamps() {
        let mut a = GaussianPrimitive::isotropic(Vec3::zeros(), 0.1);
        a.camo = true;
        let b = GaussianPrimitive::isotropic(Vec3::zeros(), 0.1);
        let mut cloud = GaussianCloud {
            primitives: vec![a, b],
            target_center: Vec3::zeros(),
        };
        cloud.set_camo_albedo(&[1.5, -0.2, 0.25]).unwrap();
        assert_eq!(cloud.camo_albedo(), vec![1.0, 0.0, 0.25]);
        assert_eq!(cloud.primitives[1].albedo, [0.5; 3]);
        assert!(cloud.set_camo_albedo(&[0.1]).is_err());
    }

    #[test]
    fn primitive_validation_names_field() {
        let mut g = GaussianPrimitive::isotropic(Vec3::zeros(), 0.1);
        g.scale.y = 0.0;
        match g.validate("gaussians[2]") {
            Err(Error::Invalid { field, .. }) => assert_eq!(field, "gaussians[2].scale"),
            other => panic!("unexpected {other:?}"),
        }
        let mut g = GaussianPrimitive::isotropic(Vec3::zeros(), 0.1);
        g.albedo[1] = f64::NAN;
        assert!(g.validate("g").is_err());
        let mut g = GaussianPrimitive::isotropic(Vec3::zeros(), 0.1);
        g.rotation = [1.0, 0.1, 0.0, 0.0];
        assert!(g.validate("g").is_err());
    }
}
