use gaa::io::png::{load_rgb, save_mask, save_rgb};
use gaa::model_file::{load_model, save_model, PatchGeometry};
use gaa::overlay::{overlay_files, render_overlay};
use gaa_core::filtering::{extract_local_features, score_image, train_filter, ScoreMap, TrainConfig, Upsample};
use gaa_core::{BinaryMask, RgbImage};

fn texture(seed: u64) -> RgbImage {
    RgbImage::from_fn(32, 32, |x, y| {
        let v = ((x * 7 + y * 13 + seed as usize * 5) % 17) as u8;
        [100 + v, 90 + v, 80 + 2 * v]
    })
    .unwrap()
}

#[test]
fn model_file_round_trip() {
    let geometry = PatchGeometry { patch: 8, stride: 4 };
    let maps: Vec<_> =
        (0..4).map(|i| extract_local_features(&texture(i), geometry.patch, geometry.stride).unwrap()).collect();
    let cfg = TrainConfig { epochs: 3, hidden: 16, batch: 2, seed: 9, ..TrainConfig::default() };
    let model = train_filter(&maps, &cfg).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.model");
    save_model(&path, &model, geometry).unwrap();
    let (back, g) = load_model(&path).unwrap();
    assert_eq!(g, geometry);
    assert_eq!(back, model);
    let a = score_image(&model, &maps[0], 32, 32, Upsample::Bilinear).unwrap();
    let b = score_image(&back, &maps[0], 32, 32, Upsample::Bilinear).unwrap();
    assert_eq!(a, b);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(load_model(&path).is_err());
    std::fs::write(&path, [&bytes[..], &[0u8][..]].concat()).unwrap();
    assert!(load_model(&path).is_err());
    std::fs::write(&path, b"GAA-FILTER 2\n{}\n").unwrap();
    assert!(load_model(&path).is_err());
}

#[test]
fn overlay_examples() {
    let img = texture(1);
    let (w, h) = img.dims();
    assert_eq!(render_overlay(&img, &BinaryMask::new(w, h).unwrap(), None).unwrap(), img);

    let flat = RgbImage::filled(w, h, [40, 80, 120]).unwrap();
    let tinted = render_overlay(&flat, &BinaryMask::full(w, h).unwrap(), None).unwrap();
    let first = tinted.get(0, 0);
    assert_ne!(first, [40, 80, 120]);
    assert!(tinted.pixels().iter().all(|p| *p == first));

    let two = BinaryMask::from_fn(w, h, |x, y| (x, y) == (3, 4) || (x, y) == (20, 9)).unwrap();
    let out = render_overlay(&img, &two, None).unwrap();
    let changed: Vec<(usize, usize)> =
        (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).filter(|&(x, y)| out.get(x, y) != img.get(x, y)).collect();
    assert_eq!(changed, [(3, 4), (20, 9)]);

    let scores = ScoreMap::new(2, 2, vec![0.0, 1.0, 0.5, 0.25], h, w, Upsample::Bilinear).unwrap();
    assert_ne!(render_overlay(&img, &two, Some(&scores)).unwrap(), out);
    assert!(render_overlay(&img, &BinaryMask::new(w + 1, h).unwrap(), None).is_err());
    let small = ScoreMap::new(1, 1, vec![0.5], h, w - 1, Upsample::Bilinear).unwrap();
    assert!(render_overlay(&img, &two, Some(&small)).is_err());
}

#[test]
fn overlay_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (image, mask, out) = (dir.path().join("i.png"), dir.path().join("m.png"), dir.path().join("o/overlay.png"));
    let img = texture(2);
    save_rgb(&image, &img).unwrap();
    save_mask(&mask, &BinaryMask::from_fn(32, 32, |x, _| x < 4).unwrap()).unwrap();
    overlay_files(&image, &mask, None, 127, &out).unwrap();
    let o = load_rgb(&out).unwrap();
    assert_eq!(o.get(10, 10), img.get(10, 10));
    assert_ne!(o.get(1, 1), img.get(1, 1));
}
