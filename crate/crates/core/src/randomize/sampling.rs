use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{RandomizeError, RngStream};
use crate::{Aabb, Vec3};

/// Candidate attempts per active point in Bridson's algorithm.
pub const POISSON_ATTEMPTS: usize = 30;

/// Inclusive real interval sampled uniformly. `min == max` is a constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
}

impl ParamRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn constant(v: f64) -> Self {
        Self { min: v, max: v }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// Inclusive integer interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub min: u32,
    pub max: u32,
}

impl IntRange {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min <= self.max
    }
}

pub fn sample_uniform(range: ParamRange, stream: &mut RngStream) -> f64 {
    let u = stream.next_f64();
    if range.min == range.max {
        return range.min;
    }
    (range.min + (range.max - range.min) * u).clamp(range.min, range.max)
}

pub fn sample_int(range: IntRange, stream: &mut RngStream) -> u32 {
    stream.int_inclusive(range.min, range.max)
}

/// `true` with probability `p` (clamped to `[0, 1]`).
pub fn bernoulli(p: f64, stream: &mut RngStream) -> bool {
    stream.next_f64() < p.clamp(0.0, 1.0)
}

/// Uniform point inside an axis-aligned box.
pub fn sample_in_volume(volume: &Aabb, stream: &mut RngStream) -> Vec3 {
    Vec3::new(
        sample_uniform(ParamRange::new(volume.min.x, volume.max.x), stream),
        sample_uniform(ParamRange::new(volume.min.y, volume.max.y), stream),
        sample_uniform(ParamRange::new(volume.min.z, volume.max.z), stream),
    )
}

/// Picks a clip uniformly over clips, then a frame uniformly over that clip.
pub fn sample_pose_reference(
    frames_per_clip: &[usize],
    stream: &mut RngStream,
) -> Result<(usize, usize), RandomizeError> {
    if frames_per_clip.is_empty() {
        return Err(RandomizeError::EmptyLibrary);
    }
    if let Some(i) = frames_per_clip.iter().position(|&n| n == 0) {
        return Err(RandomizeError::EmptyClip(i));
    }
    let clip = stream.index(frames_per_clip.len());
    let frame = stream.index(frames_per_clip[clip]);
    Ok((clip, frame))
}

/// Bridson dart throwing inside `volume` with minimum pairwise distance
/// `separation`, stopping at `max_count` points or when saturated.
///
/// Axes with (near) zero extent are held fixed, so flat volumes produce a 2D
/// (or 1D) distribution.
pub fn poisson_disk(volume: &Aabb, separation: f64, max_count: usize, stream: &mut RngStream) -> Vec<Vec3> {
    let mut points: Vec<Vec3> = Vec::new();
    if max_count == 0 {
        return points;
    }
    let extent = volume.extent();
    let flat_tol = 1e-9 * (1.0 + extent.norm());
    let active_axes: Vec<usize> = (0..3).filter(|&a| extent[a] > flat_tol).collect();
    points.push(sample_in_volume(volume, stream));
    if active_axes.is_empty() || max_count == 1 || !(separation > 0.0) {
        return points;
    }

    let dims = active_axes.len() as f64;
    let cell = separation / dims.sqrt();
    let cell_of = |p: Vec3| -> [i64; 3] {
        let mut c = [0i64; 3];
        for &a in &active_axes {
            c[a] = ((p[a] - volume.min[a]) / cell).floor() as i64;
        }
        c
    };
    let reach = dims.sqrt().ceil() as i64;
    let mut grid: HashMap<[i64; 3], usize> = HashMap::new();
    grid.insert(cell_of(points[0]), 0);
    let mut active = vec![0usize];
    let sep2 = separation * separation;

    while !active.is_empty() && points.len() < max_count {
        let slot = stream.index(active.len());
        let center = points[active[slot]];
        let mut accepted = false;
        for _ in 0..POISSON_ATTEMPTS {
            let dir = random_direction(&active_axes, stream);
            let radius = separation * (1.0 + stream.next_f64());
            let cand = center + dir * radius;
            if !volume.contains(cand) {
                continue;
            }
            let c = cell_of(cand);
            let mut ok = true;
            'scan: for dx in -reach..=reach {
                for dy in -reach..=reach {
                    for dz in -reach..=reach {
                        let key = [c[0] + dx, c[1] + dy, c[2] + dz];
                        if let Some(&j) = grid.get(&key) {
                            if (points[j] - cand).norm_squared() < sep2 {
                                ok = false;
                                break 'scan;
                            }
                        }
                    }
                }
            }
            if ok {
                grid.insert(c, points.len());
                active.push(points.len());
                points.push(cand);
                accepted = true;
                break;
            }
        }
        if !accepted {
            active.swap_remove(slot);
        }
    }
    points
}

/// Unit vector uniformly distributed over the sphere spanned by `axes`.
fn random_direction(axes: &[usize], stream: &mut RngStream) -> Vec3 {
    loop {
        let mut v = [0.0f64; 3];
        for &a in axes {
            v[a] = 2.0 * stream.next_f64() - 1.0;
        }
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            return Vec3::new(v[0] / n, v[1] / n, v[2] / n);
        }
    }
}
