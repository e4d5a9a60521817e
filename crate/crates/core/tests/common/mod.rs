//! Reference computations written without the library's geometry or channel
//! code, used to cross-check it.
#![allow(dead_code)]

use std::f64::consts::PI;

/// A patch of wall in the brute-force oracle.
#[derive(Debug, Clone, Copy)]
pub struct Patch {
    pub c: [f64; 3],
    pub n: [f64; 3],
    pub area: f64,
    pub rho: f64,
    pub wall: usize,
}

pub struct Emitter {
    pub p: [f64; 3],
    pub axis: [f64; 3],
    pub order: f64,
    pub power: f64,
}

pub struct Eye {
    pub p: [f64; 3],
    pub az_deg: f64,
    pub el_deg: f64,
    pub area: f64,
    pub fov_deg: f64,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn len(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: [f64; 3]) -> [f64; 3] {
    let l = len(a);
    [a[0] / l, a[1] / l, a[2] / l]
}

impl Eye {
    pub fn normal(&self) -> [f64; 3] {
        let (a, e) = (self.az_deg.to_radians(), self.el_deg.to_radians());
        [e.cos() * a.cos(), e.cos() * a.sin(), e.sin()]
    }

    /// Collected power per unit irradiance arriving from `from`.
    fn gain(&self, from: [f64; 3]) -> f64 {
        let v = sub(self.p, from);
        let cos_psi = -dot(unit(v), self.normal());
        if cos_psi <= 0.0 || cos_psi < self.fov_deg.to_radians().cos() - 1e-12 {
            0.0
        } else {
            self.area * cos_psi
        }
    }
}

/// Box `w × l × h` cut into `side`-sized squares; one wall index per face.
pub fn patches(
    w: f64,
    l: f64,
    h: f64,
    side: f64,
    rho_ceiling: f64,
    rho_walls: f64,
    rho_floor: f64,
) -> Vec<Patch> {
    let mut out = Vec::new();
    let steps = |extent: f64| (extent / side).round() as usize;
    let mut face = |wall: usize,
                    n: [f64; 3],
                    rho: f64,
                    e1: f64,
                    e2: f64,
                    place: &dyn Fn(f64, f64) -> [f64; 3]| {
        let (k1, k2) = (steps(e1), steps(e2));
        let (s1, s2) = (e1 / k1 as f64, e2 / k2 as f64);
        for i in 0..k1 {
            for j in 0..k2 {
                out.push(Patch {
                    c: place((i as f64 + 0.5) * s1, (j as f64 + 0.5) * s2),
                    n,
                    area: s1 * s2,
                    rho,
                    wall,
                });
            }
        }
    };
    face(0, [0.0, 0.0, -1.0], rho_ceiling, w, l, &|a, b| [a, b, h]);
    face(1, [0.0, 0.0, 1.0], rho_floor, w, l, &|a, b| [a, b, 0.0]);
    face(2, [0.0, 1.0, 0.0], rho_walls, w, h, &|a, b| [a, 0.0, b]);
    face(3, [-1.0, 0.0, 0.0], rho_walls, l, h, &|a, b| [w, a, b]);
    face(4, [0.0, -1.0, 0.0], rho_walls, w, h, &|a, b| [a, l, b]);
    face(5, [1.0, 0.0, 0.0], rho_walls, l, h, &|a, b| [0.0, a, b]);
    out
}

/// Closed-form direct link: `P (n+1)/(2π) cosⁿφ · A cosψ / d²` inside the FOV.
pub fn los_power(s: &Emitter, r: &Eye) -> f64 {
    let v = sub(r.p, s.p);
    let d = len(v);
    let cos_phi = dot(unit(v), unit(s.axis));
    if cos_phi <= 0.0 {
        return 0.0;
    }
    s.power * (s.order + 1.0) / (2.0 * PI) * cos_phi.powf(s.order) * r.gain(s.p) / (d * d)
}

/// Power landing on `p` straight from `s`.
fn hit(s: &Emitter, p: &Patch) -> f64 {
    let v = sub(p.c, s.p);
    let d = len(v);
    let u = unit(v);
    let cos_phi = dot(u, unit(s.axis));
    let cos_in = -dot(u, p.n);
    if cos_phi <= 0.0 || cos_in <= 0.0 {
        return 0.0;
    }
    s.power * (s.order + 1.0) / (2.0 * PI) * cos_phi.powf(s.order) * p.area * cos_in / (d * d)
}

/// Fraction of power re-emitted by `a` that lands on `b`.
fn transfer(a: &Patch, b: &Patch) -> f64 {
    let v = sub(b.c, a.c);
    let d = len(v);
    let u = unit(v);
    let cos_out = dot(u, a.n);
    let cos_in = -dot(u, b.n);
    if cos_out <= 0.0 || cos_in <= 0.0 {
        return 0.0;
    }
    a.rho * cos_out / PI * b.area * cos_in / (d * d)
}

/// Irradiance-to-detector factor for a re-emitting patch.
fn to_eye(p: &Patch, r: &Eye) -> f64 {
    let v = sub(r.p, p.c);
    let d = len(v);
    let cos_out = dot(unit(v), p.n);
    if cos_out <= 0.0 {
        return 0.0;
    }
    p.rho * cos_out / PI * r.gain(p.c) / (d * d)
}

/// Single-bounce received power, by brute force over sources and patches.
pub fn first_bounce(sources: &[Emitter], mesh: &[Patch], r: &Eye) -> f64 {
    let mut total = 0.0;
    for s in sources {
        for p in mesh {
            total += hit(s, p) * to_eye(p, r);
        }
    }
    total
}

/// Double-bounce received power over patch pairs on different faces.
pub fn second_bounce(sources: &[Emitter], mesh: &[Patch], r: &Eye) -> f64 {
    let mut total = 0.0;
    for s in sources {
        for a in mesh {
            let ha = hit(s, a);
            if ha == 0.0 {
                continue;
            }
            for b in mesh {
                if a.wall == b.wall {
                    continue;
                }
                total += ha * transfer(a, b) * to_eye(b, r);
            }
        }
    }
    total
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
