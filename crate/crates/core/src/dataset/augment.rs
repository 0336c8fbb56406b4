//! Classical image augmentation for the static-scene baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Scene;
use crate::autodiff::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub max_shift_px: f64,
    pub max_rot_deg: f64,
    pub zoom_range: (f64, f64),
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { max_shift_px: 6.0, max_rot_deg: 15.0, zoom_range: (0.9, 1.1) }
    }
}

impl AugmentConfig {
    pub fn none() -> Self {
        Self { max_shift_px: 0.0, max_rot_deg: 0.0, zoom_range: (1.0, 1.0) }
    }
}

/// Similarity transform about the image centre: zoom, rotate, then shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub dx: f64,
    pub dy: f64,
    pub angle_deg: f64,
    pub zoom: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { dx: 0.0, dy: 0.0, angle_deg: 0.0, zoom: 1.0 };

    fn sample(cfg: &AugmentConfig, rng: &mut impl Rng) -> Self {
        let sym = |rng: &mut dyn rand::RngCore, m: f64| if m > 0.0 { rng.gen_range(-m..=m) } else { 0.0 };
        let dx = sym(rng, cfg.max_shift_px);
        let dy = sym(rng, cfg.max_shift_px);
        let angle_deg = sym(rng, cfg.max_rot_deg);
        let (lo, hi) = cfg.zoom_range;
        let zoom = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        Affine { dx, dy, angle_deg, zoom }
    }
}

/// Resamples a `[1, H, W]` image under `t` with bilinear interpolation;
/// samples falling outside the frame read as background 0.
pub fn affine_transform(image: &Tensor<f32>, t: &Affine) -> Tensor<f32> {
    if *t == Affine::IDENTITY {
        return image.clone();
    }
    let (h, w) = (image.shape()[1], image.shape()[2]);
    let src = image.data();
    let at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 { 0.0 } else { src[y as usize * w + x as usize] as f64 }
    };
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let (sin, cos) = t.angle_deg.to_radians().sin_cos();
    let mut out = vec![0f32; w * h];
    for py in 0..h {
        for px in 0..w {
            // invert: p_out = c + zoom * R * (p_in - c) + shift
            let (ox, oy) = (px as f64 + 0.5 - cx - t.dx, py as f64 + 0.5 - cy - t.dy);
            let ix = (cos * ox + sin * oy) / t.zoom + cx - 0.5;
            let iy = (-sin * ox + cos * oy) / t.zoom + cy - 0.5;
            let (x0, y0) = (ix.floor(), iy.floor());
            let (fx, fy) = (ix - x0, iy - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let v = (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x0 + 1, y0))
                + fy * ((1.0 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1));
            out[py * w + px] = v as f32;
        }
    }
    Tensor::new(image.shape(), out).expect("same shape")
}

/// Independently transforms every image of the scene; poses are kept.
pub fn static_augment(scene: &Scene, rng: &mut impl Rng, cfg: &AugmentConfig) -> Scene {
    let mut out = scene.clone();
    for v in &mut out.views {
        let t = Affine::sample(cfg, rng);
        v.image = affine_transform(&v.image, &t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic_item, SceneView};
    use crate::mesh::normalize;
    use crate::raster::{render, snapshot_to_tensor};
    use crate::view::{CameraIntrinsics, ViewSampler};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dot_image(x: usize, y: usize) -> Tensor<f32> {
        let mut t = Tensor::zeros(&[1, 32, 32]);
        t.data_mut()[y * 32 + x] = 1.0;
        t
    }

    #[test]
    fn zero_config_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let img = Tensor::new(&[1, 4, 4], (0..16).map(|i| i as f32 / 16.0).collect()).unwrap();
        let scene = Scene { item: "a".into(), views: vec![SceneView { image: img, pose: [0.0; 6] }], target: None };
        assert_eq!(static_augment(&scene, &mut rng, &AugmentConfig::none()), scene);
    }

    #[test]
    fn shift_moves_pixel() {
        let t = Affine { dx: 3.0, ..Affine::IDENTITY };
        let out = affine_transform(&dot_image(10, 12), &t);
        assert_eq!(out, dot_image(13, 12));
    }

    #[test]
    fn half_turn_mirrors_about_centre() {
        let t = Affine { angle_deg: 180.0, ..Affine::IDENTITY };
        let out = affine_transform(&dot_image(10, 12), &t);
        // pixel centre (10.5, 12.5) maps to (21.5, 19.5)
        assert!((out.data()[19 * 32 + 21] - 1.0).abs() < 1e-6);
        assert!((out.data().iter().sum::<f32>() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn zoom_roundtrip_is_close() {
        let sampler = ViewSampler::new(CameraIntrinsics::default(), Default::default());
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for i in 0..20 {
            let (mesh, _) = generate_synthetic_item(&mut rng, 1 + (i % 3) as u8);
            let (mesh, _) = normalize(&mesh).unwrap();
            let pose = sampler.sample_indexed(&mesh, 5, "z", i).unwrap();
            let img = snapshot_to_tensor(&render(&mesh, &pose, &sampler.intrinsics));
            let zoomed = affine_transform(&img, &Affine { zoom: 1.1, ..Affine::IDENTITY });
            let back = affine_transform(&zoomed, &Affine { zoom: 1.0 / 1.1, ..Affine::IDENTITY });
            let err: f32 = img.data().iter().zip(back.data()).map(|(a, b)| (a - b).abs()).sum::<f32>() / img.len() as f32;
            assert!(err < 0.02, "mean abs error {err}");
        }
    }

    #[test]
    fn sampled_parameters_respect_ranges() {
        let cfg = AugmentConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = Affine::sample(&cfg, &mut rng);
            assert!(a.dx.abs() <= 6.0 && a.dy.abs() <= 6.0 && a.angle_deg.abs() <= 15.0);
            assert!((0.9..=1.1).contains(&a.zoom));
        }
    }
}
