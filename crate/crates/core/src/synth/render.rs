use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scene::{ObjectSpec, PlaneSpec, SceneSpec, Shape};
use crate::frameio::{CameraIntrinsics, DepthImage};
use crate::geometry::{Point3, Pose, Vector3};

/// What the ray through a pixel hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelLabel {
    None,
    Plane(u32),
    Object(u32),
}

/// Raster encoding of labels: 0 for nothing, `1 + id` for objects and
/// `PLANE_LABEL_BASE + id` for planes.
pub const PLANE_LABEL_BASE: u16 = 60000;

impl PixelLabel {
    pub fn encode(self) -> u16 {
        match self {
            PixelLabel::None => 0,
            PixelLabel::Object(id) => id as u16 + 1,
            PixelLabel::Plane(id) => PLANE_LABEL_BASE + id as u16,
        }
    }

    pub fn decode(raw: u16) -> Self {
        match raw {
            0 => PixelLabel::None,
            r if r >= PLANE_LABEL_BASE => PixelLabel::Plane(u32::from(r - PLANE_LABEL_BASE)),
            r => PixelLabel::Object(u32::from(r - 1)),
        }
    }
}

/// A depth raster and the matching per-pixel labels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendering {
    pub depth: DepthImage,
    pub labels: Vec<PixelLabel>,
}

impl Rendering {
    pub fn label(&self, u: usize, v: usize) -> PixelLabel {
        self.labels[v * self.depth.width + u]
    }

    /// Labels of the valid pixels in back-projection order.
    pub fn point_labels(&self) -> Vec<PixelLabel> {
        self.depth.valid_pixels().map(|(u, v)| self.label(u, v)).collect()
    }
}

const MIN_T: f64 = 1e-9;

struct Ray {
    origin: Point3,
    dir: Vector3,
}

fn hit_plane(ray: &Ray, plane: &PlaneSpec) -> Option<f64> {
    let n = plane.unit_normal();
    let denom = n.dot(&ray.dir);
    if denom.abs() < 1e-12 {
        return None;
    }
    let c = plane.center();
    let t = n.dot(&(c - ray.origin)) / denom;
    if t <= MIN_T {
        return None;
    }
    let (u, v) = plane.axes();
    let rel = ray.origin + ray.dir * t - c;
    (rel.dot(&u).abs() <= plane.extent[0] / 2.0 && rel.dot(&v).abs() <= plane.extent[1] / 2.0)
        .then_some(t)
}

/// Ray expressed in the object's yaw-aligned frame centered at its position.
fn local_ray(ray: &Ray, obj: &ObjectSpec) -> (Vector3, Vector3) {
    let (s, c) = obj.yaw_deg.to_radians().sin_cos();
    let rot = |v: Vector3| Vector3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z);
    (rot(ray.origin - obj.center()), rot(ray.dir))
}

fn hit_box(q: &Vector3, d: &Vector3, half: [f64; 3]) -> Option<f64> {
    let mut near = f64::NEG_INFINITY;
    let mut far = f64::INFINITY;
    for a in 0..3 {
        if d[a].abs() < 1e-15 {
            if q[a].abs() > half[a] {
                return None;
            }
            continue;
        }
        let t1 = (-half[a] - q[a]) / d[a];
        let t2 = (half[a] - q[a]) / d[a];
        near = near.max(t1.min(t2));
        far = far.min(t1.max(t2));
    }
    (near <= far && near > MIN_T).then_some(near)
}

fn hit_sphere(q: &Vector3, d: &Vector3, r: f64) -> Option<f64> {
    let a = d.dot(d);
    let b = q.dot(d);
    let c = q.dot(q) - r * r;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / a;
    (t > MIN_T).then_some(t)
}

fn hit_cylinder(q: &Vector3, d: &Vector3, r: f64, half_h: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if t > MIN_T && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-15 {
        let b = q.x * d.x + q.y * d.y;
        let c = q.x * q.x + q.y * q.y - r * r;
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let t = (-b - disc.sqrt()) / a;
            if (q.z + t * d.z).abs() <= half_h {
                consider(t);
            }
        }
    }
    if d.z.abs() > 1e-15 {
        for cap in [-half_h, half_h] {
            let t = (cap - q.z) / d.z;
            let (x, y) = (q.x + t * d.x, q.y + t * d.y);
            if x * x + y * y <= r * r {
                consider(t);
            }
        }
    }
    best
}

fn hit_object(ray: &Ray, obj: &ObjectSpec) -> Option<f64> {
    let (q, d) = local_ray(ray, obj);
    let dims = &obj.dimensions;
    match obj.shape {
        Shape::Box => hit_box(&q, &d, [dims[0] / 2.0, dims[1] / 2.0, dims[2] / 2.0]),
        Shape::Sphere => hit_sphere(&q, &d, dims[0]),
        Shape::Cylinder => hit_cylinder(&q, &d, dims[0], dims[1] / 2.0),
    }
}

/// Casts one ray per pixel and keeps the nearest hit. The ray direction has
/// unit z in the camera frame, so the hit parameter is the depth itself.
/// Depth noise, if any, is drawn from `rng` in row-major pixel order.
pub fn render_depth<R: Rng>(
    scene: &SceneSpec,
    pose: &Pose,
    intrinsics: &CameraIntrinsics,
    noise_std: f64,
    rng: &mut R,
) -> Rendering {
    let (w, h) = (intrinsics.width, intrinsics.height);
    let mut depth = DepthImage::zeros(w, h);
    let mut labels = vec![PixelLabel::None; w * h];
    let noise = (noise_std > 0.0).then(|| Normal::new(0.0, noise_std).expect("positive std"));
    let origin = Point3::from(*pose.translation());
    let max_raw = f64::from(u16::MAX);

    for v in 0..h {
        for u in 0..w {
            let dir_cam = Vector3::new(
                (u as f64 - intrinsics.cx) / intrinsics.fx,
                (v as f64 - intrinsics.cy) / intrinsics.fy,
                1.0,
            );
            let ray = Ray {
                origin,
                dir: pose.transform_vector(&dir_cam),
            };
            let mut best: Option<(f64, PixelLabel)> = None;
            for (i, p) in scene.planes.iter().enumerate() {
                if let Some(t) = hit_plane(&ray, p) {
                    if best.is_none_or(|(b, _)| t < b) {
                        best = Some((t, PixelLabel::Plane(i as u32)));
                    }
                }
            }
            for (i, o) in scene.objects.iter().enumerate() {
                if let Some(t) = hit_object(&ray, o) {
                    if best.is_none_or(|(b, _)| t < b) {
                        best = Some((t, PixelLabel::Object(i as u32)));
                    }
                }
            }
            let Some((mut z, label)) = best else { continue };
            if let Some(n) = &noise {
                z += n.sample(rng);
            }
            let raw = (z / intrinsics.depth_scale).round();
            if raw >= 1.0 && raw <= max_raw {
                depth.set(u, v, raw as u16);
                labels[v * w + u] = label;
            }
        }
    }
    Rendering { depth, labels }
}
