use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dstaug::io::{encode_slice_pgm, read_label, read_manifest, read_volume, write_label, write_volume, Axis};
use dstaug::spatial::{crop_start, crop_volume};
use dstaug::{default_dst_config, gaussian_blur, Dims, LabelMap, PipelineConfig, Preset, SampleDraw, Volume, VolumeF32};
use dstaug_cli::{preset_document, BenchReport, NormalizeReport};

fn dst_aug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dst-aug"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gradient(dims: Dims, spacing: [f64; 3], lo: f32, hi: f32) -> VolumeF32 {
    let n = dims.len() as f32 - 1.0;
    let data = (0..dims.len()).map(|i| lo + (hi - lo) * ((i * 37) % dims.len()) as f32 / n).collect();
    Volume::new(dims, spacing, data).unwrap()
}

fn labels_for(dims: Dims, spacing: [f64; 3]) -> LabelMap {
    LabelMap::new(dims, spacing, (0..dims.len()).map(|i| (i % 3) as u16).collect()).unwrap()
}

/// Writes normalized `.nii` images with labels and a manifest.
fn normalized_dataset(dir: &Path, cases: &[(&str, Dims)]) -> PathBuf {
    let mut lines = String::new();
    for (id, dims) in cases {
        let v = gradient(*dims, [1.0; 3], 0.0, 1.0);
        write_volume(&v, dir.join(format!("{id}.nii"))).unwrap();
        write_label(&labels_for(*dims, [1.0; 3]), dir.join(format!("{id}_seg.nii"))).unwrap();
        lines.push_str(&format!("{{\"id\":\"{id}\",\"image\":\"{id}.nii\",\"label\":\"{id}_seg.nii\"}}\n"));
    }
    let m = dir.join("manifest.jsonl");
    std::fs::write(&m, lines).unwrap();
    m
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Resampling written out independently: output voxel `j` reads input
/// coordinate `j * target / spacing`, clamped to the grid, trilinearly.
fn oracle_resample(v: &VolumeF32, target: f64) -> (Dims, Vec<f64>) {
    let n = v.dims().as_array();
    let sp = v.spacing();
    let m: [usize; 3] = [0, 1, 2].map(|a| ((n[a] as f64 * sp[a] / target).round() as usize).max(1));
    let get = |x: usize, y: usize, z: usize| v.get(x.min(n[0] - 1), y.min(n[1] - 1), z.min(n[2] - 1)) as f64;
    let mut out = Vec::new();
    for k in 0..m[2] {
        for j in 0..m[1] {
            for i in 0..m[0] {
                let c: Vec<f64> = [i, j, k]
                    .iter()
                    .enumerate()
                    .map(|(a, &g)| (g as f64 * target / sp[a]).min(n[a] as f64 - 1.0))
                    .collect();
                let f: Vec<usize> = c.iter().map(|x| x.floor() as usize).collect();
                let t: Vec<f64> = c.iter().zip(&f).map(|(x, &fl)| x - fl as f64).collect();
                let mut acc = 0.0;
                for corner in 0..8 {
                    let b = [corner & 1, corner >> 1 & 1, corner >> 2];
                    let w: f64 = (0..3).map(|a| if b[a] == 1 { t[a] } else { 1.0 - t[a] }).product();
                    if w > 0.0 {
                        acc += w * get(f[0] + b[0], f[1] + b[1], f[2] + b[2]);
                    }
                }
                out.push(acc);
            }
        }
    }
    (Dims::new(m[0], m[1], m[2]), out)
}

#[test]
fn normalize_resamples_then_rescales() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let aniso = gradient(Dims::new(6, 8, 5), [2.0, 1.0, 0.5], -100.0, 400.0);
    write_volume(&aniso, d.join("a.nii")).unwrap();
    write_label(&labels_for(aniso.dims(), aniso.spacing()), d.join("a_seg.nii")).unwrap();
    write_volume(&Volume::filled(Dims::cube(4), [1.0; 3], 7.0f32).unwrap(), d.join("flat.vol")).unwrap();
    std::fs::write(
        d.join("m.jsonl"),
        "{\"id\":\"a\",\"image\":\"a.nii\",\"label\":\"a_seg.nii\",\"modality\":\"mri\"}\n{\"id\":\"flat\",\"image\":\"flat.vol\"}\n",
    )
    .unwrap();
    let out = d.join("out");
    let o = dst_aug(&["normalize", "--manifest", s(&d.join("m.jsonl")), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let m = read_manifest(out.join("manifest.jsonl")).unwrap();
    assert_eq!(m.len(), 2);
    assert_eq!(m.entries[0].modality.as_deref(), Some("mri"));
    let img: VolumeF32 = read_volume(&m.entries[0].image).unwrap();
    let (dims, want) = oracle_resample(&aniso, 1.0);
    assert_eq!(img.dims(), dims);
    assert_eq!(dims, Dims::new(12, 8, 3));
    assert_eq!(img.spacing(), [1.0; 3]);
    let (lo, hi) = want.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    for (got, w) in img.data().iter().zip(&want) {
        assert!((*got as f64 - (w - lo) / (hi - lo)).abs() < 1e-5);
    }
    let seg = read_label(m.entries[0].label.as_ref().unwrap()).unwrap();
    assert_eq!(seg.dims(), dims);

    let flat: VolumeF32 = read_volume(&m.entries[1].image).unwrap();
    assert!(flat.data().iter().all(|&v| v == 0.0));
    let report: NormalizeReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("normalize_report.json")).unwrap()).unwrap();
    assert_eq!(report.failures, 0);
    assert!(report.entries[0].warnings.is_empty());
    assert_eq!(report.entries[1].warnings.len(), 1);
}

#[test]
fn normalize_reports_failed_entries() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_volume(&gradient(Dims::cube(3), [1.0; 3], 0.0, 2.0), d.join("ok.nii")).unwrap();
    std::fs::write(
        d.join("m.jsonl"),
        "{\"id\":\"ok\",\"image\":\"ok.nii\"}\n{\"id\":\"gone\",\"image\":\"missing.nii\"}\n",
    )
    .unwrap();
    let out = d.join("out");
    let o = dst_aug(&["normalize", "--manifest", s(&d.join("m.jsonl")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let report: NormalizeReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("normalize_report.json")).unwrap()).unwrap();
    assert_eq!(report.failures, 1);
    assert!(!report.entries[1].ok);
    assert_eq!(read_manifest(out.join("manifest.jsonl")).unwrap().len(), 1);
}

#[test]
fn manifest_errors_are_listed_with_lines() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    std::fs::write(&m, "{\"id\":\"a\",\"image\":\"a.nii\"}\n{\"id\":\"a\",\"image\":\"b.nii\"}\n").unwrap();
    let o = dst_aug(&["normalize", "--manifest", s(&m), "--out", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2: duplicate id"), "{}", stderr(&o));
}

#[test]
fn augment_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let m = normalized_dataset(d, &[("p1", Dims::new(40, 36, 20)), ("p2", Dims::new(30, 30, 30))]);
    let run = |name: &str, threads: &str| {
        let out = d.join(name);
        let o = dst_aug(&[
            "augment", "--manifest", s(&m), "--preset", "mri_heart", "--out", s(&out),
            "--samples-per-image", "2", "--seed", "42", "--threads", threads,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        tree(&out)
    };
    let a = run("a", "1");
    assert_eq!(a.len(), 2 * 2 * 3 + 3);
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "4"));
    let other = d.join("seed7");
    dst_aug(&["augment", "--manifest", s(&m), "--preset", "mri_heart", "--out", s(&other), "--seed", "7"]);
    assert_ne!(tree(&other), a[..]);
}

#[test]
fn baseline_augment_writes_plain_crops() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let dims = Dims::new(40, 24, 30);
    let m = normalized_dataset(d, &[("c", dims)]);
    let mut cfg = default_dst_config(Preset::Baseline);
    cfg.crop_dims = Dims::new(16, 16, 16);
    std::fs::write(d.join("base.toml"), cfg.to_toml().unwrap()).unwrap();
    let out = d.join("out");
    let o = dst_aug(&[
        "augment", "--manifest", s(&m), "--config", s(&d.join("base.toml")), "--out", s(&out),
        "--samples-per-image", "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let input: VolumeF32 = read_volume(d.join("c.nii")).unwrap();
    for k in 0..3 {
        let sample = out.join(format!("samples/c/{k:04}"));
        let draw = SampleDraw::from_json(&std::fs::read_to_string(sample.join("draw.json")).unwrap()).unwrap();
        assert!(draw.activated_kinds().is_empty());
        let start = crop_start(&draw.spatial).unwrap();
        let got: VolumeF32 = read_volume(sample.join("image.nii")).unwrap();
        assert_eq!(got.data(), crop_volume(&input, start, cfg.crop_dims).data());
    }
}

#[test]
fn augment_refuses_unnormalized_images() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_volume(&gradient(Dims::cube(8), [1.0; 3], 0.0, 5.0), d.join("raw.nii")).unwrap();
    std::fs::write(d.join("m.jsonl"), "{\"id\":\"raw\",\"image\":\"raw.nii\"}\n").unwrap();
    let out = d.join("out");
    let o = dst_aug(&["augment", "--manifest", s(&d.join("m.jsonl")), "--preset", "top4", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let report = std::fs::read_to_string(out.join("augment_report.json")).unwrap();
    assert!(report.contains("dst-aug normalize"), "{report}");
}

#[test]
fn extended_ranges_need_the_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let m = normalized_dataset(d, &[("e", Dims::cube(20))]);
    let mut cfg = default_dst_config(Preset::MriHeart);
    cfg.crop_dims = Dims::cube(12);
    cfg.transforms[6].range = dstaug::Range::new(-45.0, 45.0);
    let path = d.join("wide.toml");
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();

    let base = ["augment", "--manifest", s(&m), "--config", s(&path)];
    let o = dst_aug(&[&base[..], &["--out", s(&d.join("o1"))]].concat());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--allow-extended"), "{}", stderr(&o));
    let o = dst_aug(&[&base[..], &["--out", s(&d.join("o2")), "--allow-extended"]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn preview_writes_one_file_per_enabled_transform() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let img = gradient(Dims::new(24, 20, 16), [1.0; 3], 0.0, 1.0);
    write_volume(&img, d.join("img.nii")).unwrap();

    let full = d.join("full");
    let o = dst_aug(&["preview", "--image", s(&d.join("img.nii")), "--preset", "mri_prostate", "--out", s(&full)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_dir(&full).unwrap().count(), 10);

    let blur = std::fs::read(full.join("01_blur.pgm")).unwrap();
    let normalized = img.clone().into_normalized().unwrap();
    let direct = gaussian_blur(&normalized, (0.25 + 1.5) / 2.0).unwrap();
    assert_eq!(blur, encode_slice_pgm(&direct, Axis::Z, 8).unwrap());

    let base = d.join("base");
    let o = dst_aug(&["preview", "--image", s(&d.join("img.nii")), "--preset", "baseline", "--out", s(&base)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<_> = std::fs::read_dir(&base).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, ["stacked.pgm"]);
}

#[test]
fn bench_validates_and_reports() {
    let o = dst_aug(&["bench", "--reps", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.json");
    let o = dst_aug(&["bench", "--crop", "12", "--input-sizes", "16,24", "--reps", "5", "--out", s(&path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: BenchReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report.cases.len(), 2);
    assert_eq!(report.cases[1].input_dims, Dims::cube(24));
    let from_file: BenchReport = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(from_file, report);
}

#[test]
fn dumped_presets_are_accepted_configs() {
    let o = dst_aug(&["presets", "--dump", "mri_prostate"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text, preset_document(Preset::MriProstate));
    assert!(text.contains("crop = [96, 96, 32]"));
    assert_eq!(PipelineConfig::from_toml(&text, false).unwrap(), default_dst_config(Preset::MriProstate));

    let dir = tempfile::tempdir().unwrap();
    let o = dst_aug(&["presets", "--dump", "--out", s(dir.path())]);
    assert!(o.status.success());
    for p in Preset::ALL {
        let doc = std::fs::read_to_string(dir.path().join(format!("{p}.toml"))).unwrap();
        assert_eq!(doc, preset_document(p));
    }

    let m = normalized_dataset(dir.path(), &[("t", Dims::cube(24))]);
    let o = dst_aug(&[
        "augment", "--manifest", s(&m), "--config", s(&dir.path().join("top4.toml")),
        "--out", s(&dir.path().join("aug")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = dst_aug(&["presets", "--dump", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}
