use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splitsum::brdf::BrdfLut;
use splitsum::envmap::{load_hdr, save_hdr, Image, RadianceMap};
use splitsum::fixtures;
use splitsum::occlusion::OcclusionTable;
use splitsum::prefilter::PrefilteredPyramid;
use splitsum::sampling::RngStream;
use splitsum::Rgb;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitsum")).args(args).output().expect("spawn splitsum")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_env(dir: &Path, name: &str, env: &RadianceMap) -> PathBuf {
    let p = dir.join(name);
    save_hdr(env.image(), &p).unwrap();
    p
}

fn write_scene(dir: &Path, env: &str, mesh: &str, extra: &str) -> PathBuf {
    let p = dir.join("scene.toml");
    let text = format!(
        "env = \"{env}\"\nmesh = \"{mesh}\"\n{extra}\n[camera]\nposition = [0.0, 0.0, 4.0]\nwidth = 24\nheight = 16\n"
    );
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout_value(out: &Output, key: &str) -> String {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().to_string()))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    let missing = dir.path().join("missing.hdr");
    let out = run(&["prefilter", s(&missing), s(&dir.path().join("pyr"))]);
    assert_eq!(out.status.code(), Some(2));
    let env = write_env(dir.path(), "env.hdr", &fixtures::standard_env(16));
    let out = run(&["prefilter", s(&env), s(&dir.path().join("pyr")), "--levels", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("pyr").join("pyramid.txt").exists());
}

#[test]
fn prefilter_constant_env_and_rerun() {
    let dir = TempDir::new().unwrap();
    let c = Rgb::new(0.5, 1.0, 2.0);
    let env = write_env(dir.path(), "env.hdr", &RadianceMap::constant(16, c));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["prefilter", s(&env), s(out), "--levels", "4", "--samples", "64", "--seed", "3"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let pyr = PrefilteredPyramid::load(&a).unwrap();
    assert_eq!(pyr.level_count(), 4);
    let meta = std::fs::read_to_string(a.join("pyramid.txt")).unwrap();
    assert!(meta.starts_with("levels 4\n"));
    for (_, level) in pyr.levels() {
        for t in level.texels() {
            assert!((*t - c).abs().max_channel() <= c.max_channel() / 128.0);
        }
    }
    for k in 0..4 {
        let f = format!("level_{k:02}.hdr");
        assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap());
    }
}

#[test]
fn bake_lut_size_and_roundtrip() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("brdf.lut");
    let o = run(&["bake-lut", s(&p), "--res", "16", "--samples", "256"]);
    assert!(o.status.success());
    let bytes = std::fs::read(&p).unwrap();
    let header = bytes.len() - 2 * 4 * 16 * 16;
    assert_eq!(header, 6 + 4);
    let lut = BrdfLut::load(&p).unwrap();
    let mut again = Vec::new();
    lut.write_to(&mut again).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn bake_occlusion_fixtures() {
    let dir = TempDir::new().unwrap();
    let env = write_env(dir.path(), "env.hdr", &fixtures::standard_env(16));
    let empty = dir.path().join("empty.occl");
    assert!(run(&["bake-occlusion", "builtin:empty", s(&env), s(&empty)]).status.success());
    let t = OcclusionTable::load(&empty).unwrap();
    let p = t.lookup(splitsum::Vec3::new(0.2, 0.1, 0.3));
    assert_eq!((p.o_d, p.o_s), (Rgb::WHITE, Rgb::WHITE));
    let boxed = dir.path().join("box.occl");
    let o = run(&["bake-occlusion", "builtin:inward_box", s(&env), s(&boxed), "--points", "32"]);
    assert!(o.status.success());
    let t = OcclusionTable::load(&boxed).unwrap();
    assert_eq!(t.records.len(), 32);
    assert!(t.records.iter().all(|(_, o)| o.o_d == Rgb::BLACK && o.o_s == Rgb::BLACK));
    let help = String::from_utf8(run(&["bake-occlusion", "--help"]).stdout).unwrap();
    assert!(help.contains("[default: 64]"));
}

#[test]
fn render_modes() {
    let dir = TempDir::new().unwrap();
    write_env(dir.path(), "black.hdr", &RadianceMap::constant(16, Rgb::BLACK));
    let scene = write_scene(dir.path(), "black.hdr", "builtin:sphere", "");
    let out = dir.path().join("ref.hdr");
    let o = run(&["render", s(&scene), s(&out), "--reference", "--spp", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(load_hdr(&out).unwrap().pixels().iter().all(|p| *p == Rgb::BLACK));

    write_env(dir.path(), "sky.hdr", &fixtures::standard_env(32));
    let field = dir.path().join("sky.illf");
    let o = run(&["fit-illum", s(&dir.path().join("sky.hdr")), s(&field), "--steps", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let extra = "[illumination]\nfield = \"sky.illf\"\n";
    let scene = write_scene(dir.path(), "sky.hdr", "builtin:sphere", extra);
    for illum in ["pyramid", "field", "mc"] {
        let img = dir.path().join(format!("{illum}.png"));
        let o = run(&["render", s(&scene), s(&img), "--illum", illum, "--light-samples", "256"]);
        assert!(o.status.success(), "{illum}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let a = dir.path().join("a.hdr");
    let b = dir.path().join("b.hdr");
    for p in [&a, &b] {
        let o = run(&["render", s(&scene), s(p), "--occlusion", "mc", "--illum", "mc", "--seed", "4"]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let o = run(&["render", s(&scene), s(&dir.path().join("x.exr"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_reports() {
    let dir = TempDir::new().unwrap();
    let mut rng = RngStream::new(1, 0);
    let px: Vec<Rgb> = (0..256).map(|_| Rgb::new(rng.uniform(), rng.uniform(), rng.uniform()) + Rgb::splat(0.05)).collect();
    let a = Image::new(16, 16, px.clone()).unwrap();
    let pa = dir.path().join("a.hdr");
    save_hdr(&a, &pa).unwrap();
    // reload so both sides carry identical quantization
    let a = load_hdr(&pa).unwrap();

    let same = run(&["compare", s(&pa), s(&pa)]);
    assert_eq!(stdout_value(&same, "psnr"), "inf");

    let pb = dir.path().join("b.hdr");
    save_hdr(&a.scaled(2.0), &pb).unwrap();
    let scaled = run(&["compare", s(&pa), s(&pb), "--channel-scale"]);
    assert_eq!(stdout_value(&scaled, "scales"), "0.500000 0.500000 0.500000");
    assert_eq!(stdout_value(&scaled, "psnr"), "inf");

    let peak = a.pixels().iter().map(|p| p.max_channel()).fold(0.0, f64::max);
    let mut last = f64::INFINITY;
    for amp in [0.01, 0.05, 0.1] {
        let mut rng = RngStream::new(2, 0);
        let noisy: Vec<Rgb> = a
            .pixels()
            .iter()
            .map(|&p| p + Rgb::new(rng.uniform(), rng.uniform(), rng.uniform()) * (amp * peak))
            .collect();
        let pn = dir.path().join("n.hdr");
        save_hdr(&Image::new(16, 16, noisy).unwrap(), &pn).unwrap();
        let psnr: f64 = stdout_value(&run(&["compare", s(&pa), s(&pn)]), "psnr").parse().unwrap();
        assert!(psnr.is_finite() && psnr < last);
        last = psnr;
    }

    let small = dir.path().join("small.hdr");
    save_hdr(&Image::filled(4, 4, Rgb::WHITE), &small).unwrap();
    assert_eq!(run(&["compare", s(&pa), s(&small)]).status.code(), Some(1));
}

#[test]
fn fit_illum_outputs() {
    let dir = TempDir::new().unwrap();
    let env = write_env(dir.path(), "sky.hdr", &fixtures::standard_env(16));
    let field = dir.path().join("big.illf");
    let log = dir.path().join("loss.csv");
    let report = dir.path().join("report.json");
    let o = run(&[
        "fit-illum",
        s(&env),
        s(&field),
        "--large",
        "--steps",
        "3",
        "--loss-log",
        s(&log),
        "--report",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dims = splitsum::illum_field::IllumField::load(&field).unwrap().mlp().dims();
    assert_eq!(dims, vec![74, 256, 256, 256, 256, 256, 3]);
    let lines = std::fs::read_to_string(&log).unwrap();
    assert_eq!(lines.lines().filter(|l| !l.starts_with("step")).count(), 3);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["steps"], 3);
    assert!(v["final_loss"].as_f64().unwrap().is_finite());
}
