#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use keyshap::gkr::RgbImage;
use keyshap::rng;
use rand::Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_keyshap")
}

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).display().to_string()
}

pub fn keyshap(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(root())
        .env_remove("KEYSHAP_ORACLE_CMD")
        .env_remove("KEYSHAP_ORACLE_TIMEOUT_MS")
        .output()
        .expect("spawn keyshap")
}

pub fn ok(args: &[&str]) -> Output {
    let out = keyshap(args);
    assert!(
        out.status.success(),
        "keyshap {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn serve_command() -> String {
    format!("{} oracle serve-synthetic --config {}", bin(), fixture("synthetic_coco.json"))
}

/// A small COCO-style keypoint dataset with matching PPM images.
/// Returns (annotations path, image directory).
pub fn write_dataset(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
    let images_dir = dir.join("images");
    fs::create_dir_all(&images_dir).unwrap();
    let mut r = rng::stream(&[seed]);
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut ann_id = 100;
    for id in 1..=6u64 {
        let (w, h) = (48 + 8 * id as u32, 40 + 4 * id as u32);
        let file_name = format!("{id:06}.ppm");
        let data: Vec<u8> = (0..w * h * 3).map(|k| ((k as u64 * 7 + id * 13) % 256) as u8).collect();
        RgbImage::new(w, h, data).unwrap().save(images_dir.join(&file_name)).unwrap();
        images.push(serde_json::json!({"id": id, "width": w, "height": h, "file_name": file_name}));
        for _ in 0..1 + id % 2 {
            let mut kps = Vec::new();
            let mut labeled = 0;
            for _ in 0..17 {
                let v: u8 = match r.gen_range(0..10) {
                    0 => 0,
                    1 => 1,
                    _ => 2,
                };
                if v == 0 {
                    kps.extend([0.0, 0.0, 0.0]);
                } else {
                    labeled += 1;
                    kps.extend([r.gen_range(0.0..w as f64), r.gen_range(0.0..h as f64), v as f64]);
                }
            }
            annotations.push(serde_json::json!({
                "id": ann_id, "image_id": id, "keypoints": kps, "num_keypoints": labeled
            }));
            ann_id += 1;
        }
    }
    let path = dir.join("annotations.json");
    let doc = serde_json::json!({"images": images, "annotations": annotations});
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    (path, images_dir)
}

/// Confidence CSV with two correlated blocks and a few missing cells.
pub fn write_confidences(path: &Path, seed: u64) {
    let mut r = rng::stream(&[seed]);
    let mut text = String::from("a,b,c,d\n");
    for row in 0..60 {
        let (u, v): (f64, f64) = (r.gen(), r.gen());
        let cells = [
            0.8 * u + 0.2 * r.gen::<f64>(),
            0.8 * u + 0.2 * r.gen::<f64>(),
            0.8 * v + 0.2 * r.gen::<f64>(),
            0.8 * v + 0.2 * r.gen::<f64>(),
        ];
        let line: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(k, c)| if (row + k) % 17 == 0 { String::new() } else { format!("{c:.4}") })
            .collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}
