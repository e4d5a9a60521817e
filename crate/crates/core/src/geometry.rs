//! Vectors, pointing angles, room surfaces and their reflection meshes.
//!
//! Frame: `x` runs across the room width, `y` along its length and `z` up
//! from the floor. Elevation is measured from the horizontal plane, positive
//! upward, and azimuth counter-clockwise from `+x`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Relative slack when deciding whether an element side divides an edge.
const DIVISIBILITY_TOL: f64 = 1e-9;

/// Pointing angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    azimuth_deg: f64,
    elevation_deg: f64,
}

impl Orientation {
    /// Azimuth is wrapped into `[0, 360)`; elevation must lie in `[-90, 90]`.
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        if !azimuth_deg.is_finite() || !elevation_deg.is_finite() {
            return Err(Error::invalid("orientation angles must be finite"));
        }
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(Error::invalid(format!(
                "elevation {elevation_deg} deg outside [-90, 90]"
            )));
        }
        let mut az = azimuth_deg.rem_euclid(360.0);
        if az >= 360.0 {
            az = 0.0;
        }
        Ok(Self {
            azimuth_deg: az,
            elevation_deg,
        })
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    pub fn direction(&self) -> Vec3 {
        direction_from_az_el(*self)
    }

    /// Inverse of [`direction_from_az_el`]. The azimuth of a vertical vector is 0.
    pub fn from_direction(dir: &Vec3) -> Result<Self> {
        let norm = dir.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("cannot orient along a zero vector"));
        }
        let d = dir / norm;
        let el = d.z.clamp(-1.0, 1.0).asin().to_degrees();
        let horizontal = d.x.hypot(d.y);
        let az = if horizontal < 1e-15 {
            0.0
        } else {
            d.y.atan2(d.x).to_degrees()
        };
        Self::new(az, el)
    }
}

/// Unit vector `(cos El cos Az, cos El sin Az, sin El)`.
pub fn direction_from_az_el(o: Orientation) -> Vec3 {
    let az = o.azimuth_deg.to_radians();
    let el = o.elevation_deg.to_radians();
    let (s_az, c_az) = az.sin_cos();
    let (s_el, c_el) = el.sin_cos();
    Vec3::new(c_el * c_az, c_el * s_az, s_el).normalize()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SurfaceId {
    Ceiling,
    Floor,
    /// `y = 0`
    Wall1,
    /// `x = width`
    Wall2,
    /// `y = length`
    Wall3,
    /// `x = 0`
    Wall4,
}

impl SurfaceId {
    pub const ALL: [SurfaceId; 6] = [
        SurfaceId::Ceiling,
        SurfaceId::Floor,
        SurfaceId::Wall1,
        SurfaceId::Wall2,
        SurfaceId::Wall3,
        SurfaceId::Wall4,
    ];

    pub fn is_wall(self) -> bool {
        !matches!(self, SurfaceId::Ceiling | SurfaceId::Floor)
    }
}

/// A rectangular room surface spanned by `origin + s·u + t·v`, `s, t ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub id: SurfaceId,
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    /// Unit normal pointing into the room.
    pub normal: Vec3,
    pub reflectivity: f64,
    pub lambertian_order: f64,
}

impl Surface {
    pub fn area(&self) -> f64 {
        self.u.cross(&self.v).norm()
    }

    /// True if `p` lies in the plane of the surface and strictly inside its edges.
    pub fn strictly_contains(&self, p: &Vec3) -> bool {
        let rel = p - self.origin;
        if rel.dot(&self.normal).abs() > 1e-9 {
            return false;
        }
        let s = rel.dot(&self.u) / self.u.norm_squared();
        let t = rel.dot(&self.v) / self.v.norm_squared();
        s > 0.0 && s < 1.0 && t > 0.0 && t < 1.0
    }
}

/// One reflecting patch of a meshed surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceElement {
    pub center: Vec3,
    pub area: f64,
    pub normal: Vec3,
    pub reflectivity: f64,
    pub surface: SurfaceId,
}

/// Number of whole `side` lengths in `len`, or `None` when it does not divide.
pub fn exact_divisions(len: f64, side: f64) -> Option<usize> {
    let ratio = len / side;
    let rounded = ratio.round();
    if rounded >= 1.0 && (ratio - rounded).abs() <= DIVISIBILITY_TOL * ratio.max(1.0) {
        Some(rounded as usize)
    } else {
        None
    }
}

fn divisions(len: f64, side: f64) -> usize {
    exact_divisions(len, side).unwrap_or_else(|| ((len / side).floor() as usize).max(1))
}

/// Splits a surface into a regular grid of elements of side `element_side`.
///
/// When the side does not divide an edge, the last partial row or column is
/// dropped and the remaining elements are stretched so the grid still covers
/// the surface exactly. Output is row-major in (u index, v index).
pub fn mesh_surface(s: &Surface, element_side: f64) -> Result<Vec<SurfaceElement>> {
    if !(element_side > 0.0) || !element_side.is_finite() {
        return Err(Error::invalid(format!(
            "element side must be positive, got {element_side}"
        )));
    }
    let len_u = s.u.norm();
    let len_v = s.v.norm();
    let nu = divisions(len_u, element_side);
    let nv = divisions(len_v, element_side);
    let du = s.u / nu as f64;
    let dv = s.v / nv as f64;
    let area = s.area() / (nu * nv) as f64;

    let mut out = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let center = s.origin + du * (i as f64 + 0.5) + dv * (j as f64 + 0.5);
            out.push(SurfaceElement {
                center,
                area,
                normal: s.normal,
                reflectivity: s.reflectivity,
                surface: s.id,
            });
        }
    }
    Ok(out)
}

/// Room dimensions, reflectivities and mesh resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomConfig {
    /// Extent along `x` (m).
    pub width: f64,
    /// Extent along `y` (m).
    pub length: f64,
    /// Extent along `z` (m).
    pub height: f64,
    pub rho_ceiling: f64,
    pub rho_walls: f64,
    pub rho_floor: f64,
    /// Element side used for single-bounce paths (m).
    pub first_order_side: f64,
    /// Element side used for both bounces of double-bounce paths (m).
    pub second_order_side: f64,
}

impl Default for RoomConfig {
    fn default() -> Self {
        Self {
            width: 4.0,
            length: 8.0,
            height: 3.0,
            rho_ceiling: 0.8,
            rho_walls: 0.8,
            rho_floor: 0.3,
            first_order_side: 0.05,
            second_order_side: 0.20,
        }
    }
}

impl RoomConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("width", self.width),
            ("length", self.length),
            ("height", self.height),
            ("first_order_side", self.first_order_side),
            ("second_order_side", self.second_order_side),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("rho_ceiling", self.rho_ceiling),
            ("rho_walls", self.rho_walls),
            ("rho_floor", self.rho_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn surfaces(&self) -> Vec<Surface> {
        let (w, l, h) = (self.width, self.length, self.height);
        let surface = |id, origin, u, v, normal, rho| Surface {
            id,
            origin,
            u,
            v,
            normal,
            reflectivity: rho,
            lambertian_order: 1.0,
        };
        let ex = Vec3::new(w, 0.0, 0.0);
        let ey = Vec3::new(0.0, l, 0.0);
        let ez = Vec3::new(0.0, 0.0, h);
        vec![
            surface(
                SurfaceId::Ceiling,
                Vec3::new(0.0, 0.0, h),
                ex,
                ey,
                Vec3::new(0.0, 0.0, -1.0),
                self.rho_ceiling,
            ),
            surface(
                SurfaceId::Floor,
                Vec3::zeros(),
                ex,
                ey,
                Vec3::z(),
                self.rho_floor,
            ),
            surface(
                SurfaceId::Wall1,
                Vec3::zeros(),
                ex,
                ez,
                Vec3::y(),
                self.rho_walls,
            ),
            surface(
                SurfaceId::Wall2,
                Vec3::new(w, 0.0, 0.0),
                ey,
                ez,
                -Vec3::x(),
                self.rho_walls,
            ),
            surface(
                SurfaceId::Wall3,
                Vec3::new(0.0, l, 0.0),
                ex,
                ez,
                -Vec3::y(),
                self.rho_walls,
            ),
            surface(
                SurfaceId::Wall4,
                Vec3::zeros(),
                ey,
                ez,
                Vec3::x(),
                self.rho_walls,
            ),
        ]
    }
}

/// An empty rectangular room with its two reflection meshes.
#[derive(Debug, Clone)]
pub struct Room {
    pub config: RoomConfig,
    pub surfaces: Vec<Surface>,
    /// Mesh for single-bounce paths.
    pub fine: Vec<SurfaceElement>,
    /// Mesh for double-bounce paths.
    pub coarse: Vec<SurfaceElement>,
}

impl Room {
    pub fn build(config: &RoomConfig) -> Result<Self> {
        config.validate()?;
        let surfaces = config.surfaces();
        let mesh_all = |side: f64| -> Result<Vec<SurfaceElement>> {
            let mut out = Vec::new();
            for s in &surfaces {
                out.extend(mesh_surface(s, side)?);
            }
            Ok(out)
        };
        let fine = mesh_all(config.first_order_side)?;
        let coarse = mesh_all(config.second_order_side)?;
        Ok(Self {
            config: config.clone(),
            surfaces,
            fine,
            coarse,
        })
    }

    pub fn surface(&self, id: SurfaceId) -> &Surface {
        self.surfaces
            .iter()
            .find(|s| s.id == id)
            .expect("room always has six surfaces")
    }

    /// Closed-box containment test.
    pub fn contains(&self, p: &Vec3) -> bool {
        let c = &self.config;
        (0.0..=c.width).contains(&p.x)
            && (0.0..=c.length).contains(&p.y)
            && (0.0..=c.height).contains(&p.z)
    }

    pub fn total_area(&self) -> f64 {
        self.surfaces.iter().map(Surface::area).sum()
    }
}
