//! Flat Lambert shading, procedural textures and image post-processing.

use crate::scene::{Light, LightKind, Material, PostParams};
use crate::{CameraModel, Vec3};

use super::raster::{FrameBuffers, Surface};

pub const AMBIENT: f32 = 0.12;
pub const BACKGROUND_RGB: [f32; 3] = [0.62, 0.68, 0.74];

const LUMA: [f32; 3] = [0.2126, 0.7152, 0.0722];

pub(super) fn shade(
    camera: &CameraModel,
    buffers: &FrameBuffers,
    surfaces: &[Surface],
    normals: &[[f32; 3]],
    surface_of: &[u32],
    lights: &[Light],
) -> Vec<[f32; 3]> {
    let lights: Vec<&Light> = lights.iter().filter(|l| l.enabled && l.intensity > 0.0).collect();
    let mut rgb = vec![BACKGROUND_RGB; buffers.depth.len()];
    for y in 0..buffers.height {
        for x in 0..buffers.width {
            let i = buffers.index(x, y);
            let Some(s) = surfaces.get(surface_of[i] as usize) else { continue };
            let p = camera.unproject(x as f64 + 0.5, y as f64 + 0.5, buffers.depth[i] as f64);
            let n = Vec3::new(normals[i][0] as f64, normals[i][1] as f64, normals[i][2] as f64);
            let albedo = albedo(&s.material, s.transform.inverse_point(p));
            let mut e = [AMBIENT as f64; 3];
            for l in &lights {
                let (dir, falloff) = match l.kind {
                    LightKind::Directional => (-l.direction, 1.0),
                    LightKind::Point => {
                        let d = l.position - p;
                        let r2 = d.norm_squared().max(1e-6);
                        (d / r2.sqrt(), 1.0 / r2)
                    }
                };
                let k = n.dot(dir).max(0.0) * l.intensity * falloff;
                for c in 0..3 {
                    e[c] += k * l.color[c];
                }
            }
            rgb[i] = std::array::from_fn(|c| (albedo[c] * e[c] as f32).clamp(0.0, 1.0));
        }
    }
    rgb
}

/// Surface color at a point in the surface's local frame.
///
/// Texture ids cycle through stripes, checks, dots and a smooth gradient at
/// four frequencies; the hue rotation tints both pattern colors.
pub fn albedo(material: &Material, p: Vec3) -> [f32; 3] {
    let id = material.texture_id;
    let freq = 2.0 + 2.0 * ((id / 4) % 4) as f64;
    let t = match id % 4 {
        0 => 0.5 + 0.5 * (freq * std::f64::consts::PI * (p.x + p.y)).sin(),
        1 => (((freq * p.x).floor() + (freq * p.y).floor() + (freq * p.z).floor()) as i64).rem_euclid(2) as f64,
        2 => {
            let q = Vec3::new(frac(freq * p.x), frac(freq * p.y), frac(freq * p.z)) - Vec3::splat(0.5);
            if q.norm() < 0.35 {
                1.0
            } else {
                0.0
            }
        }
        _ => 0.5 + 0.5 * (freq * p.y).tanh(),
    };
    let hue = material.hue + 23.0 * id as f64;
    let a = hsv(hue, 0.55, 0.85);
    let b = hsv(hue + 40.0, 0.45, 0.4);
    std::array::from_fn(|c| (a[c] as f64 * t + b[c] as f64 * (1.0 - t)) as f32)
}

fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// HSV to RGB; hue in degrees (any value), s and v in `[0, 1]`.
pub fn hsv(hue: f64, s: f64, v: f64) -> [f32; 3] {
    let h = hue.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) as f32, (g + m) as f32, (b + m) as f32]
}

/// Applies white balance, exposure, contrast, saturation and vignette, in
/// that order, then clamps to `[0, 1]`. Steps whose parameter is neutral are
/// skipped, so neutral parameters leave an in-range image bit-identical.
pub fn post_process(rgb: &mut [[f32; 3]], width: u32, height: u32, params: &PostParams) {
    assert_eq!(rgb.len(), width as usize * height as usize, "rgb buffer size");
    let wb = params.white_balance as f32;
    let gain = 2f32.powf(params.exposure as f32);
    let k = params.contrast as f32;
    let sat = params.saturation as f32;
    let (cx, cy) = (width as f32 * 0.5, height as f32 * 0.5);
    let r_max2 = cx * cx + cy * cy;
    let vig = params.vignette as f32;
    for (i, px) in rgb.iter_mut().enumerate() {
        if wb != 0.0 {
            px[0] *= 1.0 + 0.3 * wb;
            px[2] *= 1.0 - 0.3 * wb;
        }
        if params.exposure != 0.0 {
            px.iter_mut().for_each(|c| *c *= gain);
        }
        if params.contrast != 1.0 {
            px.iter_mut().for_each(|c| *c = (*c - 0.5) * k + 0.5);
        }
        if params.saturation != 1.0 {
            let l = LUMA[0] * px[0] + LUMA[1] * px[1] + LUMA[2] * px[2];
            px.iter_mut().for_each(|c| *c = l + (*c - l) * sat);
        }
        if vig != 0.0 {
            let x = (i % width as usize) as f32 + 0.5 - cx;
            let y = (i / width as usize) as f32 + 0.5 - cy;
            let f = 1.0 - vig * (x * x + y * y) / r_max2;
            px.iter_mut().for_each(|c| *c *= f);
        }
        px.iter_mut().for_each(|c| *c = c.clamp(0.0, 1.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: u32, h: u32, v: f32) -> Vec<[f32; 3]> {
        vec![[v; 3]; (w * h) as usize]
    }

    #[test]
    fn neutral_is_bit_identical() {
        let mut img: Vec<[f32; 3]> = (0..64).map(|i| [i as f32 / 63.0, 0.3, 1.0 - i as f32 / 64.0]).collect();
        let before = img.clone();
        post_process(&mut img, 8, 8, &PostParams::NEUTRAL);
        assert_eq!(img, before);
    }

    #[test]
    fn exposure_doubles() {
        let mut img = gray(2, 2, 0.25);
        post_process(&mut img, 2, 2, &PostParams { exposure: 1.0, ..PostParams::NEUTRAL });
        assert!(img.iter().flatten().all(|&c| c == 0.5));
    }

    #[test]
    fn vignette_darkens_corners() {
        let (w, h) = (9, 7);
        let mut img = gray(w, h, 0.8);
        post_process(&mut img, w, h, &PostParams { vignette: 1.0, ..PostParams::NEUTRAL });
        let center = img[(3 * w + 4) as usize][0];
        for i in [0, (w - 1) as usize, ((h - 1) * w) as usize, (w * h - 1) as usize] {
            assert!(img[i][0] < center);
        }
        assert!((center - 0.8).abs() < 0.02);
    }

    #[test]
    fn saturation_zero_gives_gray_and_clamp_holds() {
        let mut img = vec![[0.9, 0.2, 0.1]; 4];
        post_process(&mut img, 2, 2, &PostParams { saturation: 0.0, contrast: 3.0, ..PostParams::NEUTRAL });
        for p in &img {
            assert_eq!(p[0], p[1]);
            assert_eq!(p[1], p[2]);
            assert!((0.0..=1.0).contains(&p[0]));
        }
    }

    #[test]
    fn white_balance_warms() {
        let mut img = gray(1, 1, 0.5);
        post_process(&mut img, 1, 1, &PostParams { white_balance: 0.5, ..PostParams::NEUTRAL });
        assert!(img[0][0] > 0.5 && img[0][2] < 0.5 && img[0][1] == 0.5);
    }

    #[test]
    fn textures_stay_in_range() {
        for id in 0..16 {
            for k in 0..50 {
                let p = Vec3::new(k as f64 * 0.13 - 3.0, k as f64 * 0.07, -(k as f64) * 0.11);
                let c = albedo(&Material { texture_id: id, hue: k as f64 * 17.0 - 400.0 }, p);
                assert!(c.iter().all(|v| (0.0..=1.0).contains(v)), "{id} {c:?}");
            }
        }
        assert_eq!(hsv(0.0, 1.0, 1.0), [1.0, 0.0, 0.0]);
        assert_eq!(hsv(480.0, 1.0, 1.0), hsv(120.0, 1.0, 1.0));
    }
}
