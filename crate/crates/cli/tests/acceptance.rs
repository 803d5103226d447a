//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use statrs::distribution::{ChiSquared, ContinuousCDF};
use tempfile::TempDir;

use splitsum::brdf::{bake_brdf_lut, ggx_ndf, smith_visibility, BrdfLut, Material};
use splitsum::envmap::{decode_rgbe, encode_rgbe, read_hdr, save_hdr, write_hdr, Image, RadianceMap};
use splitsum::fixtures;
use splitsum::geometry::{Bvh, MaterialSource, TriangleMesh};
use splitsum::illum_field::{
    light_directions, loss_with_targets, recon_pairs, regularizer_targets, regularizer_tuples, FieldConfig, IllumField,
    TrainBatch,
};
use splitsum::metrics::compare_masked;
use splitsum::mlp::flatten;
use splitsum::occlusion::mc_occlusion_diffuse;
use splitsum::prefilter::{bake_pyramid, diffuse_irradiance_quadrature, draw_light_samples, mc_prefilter, PyramidConfig};
use splitsum::reference::{render_reference, ReferenceOptions, ReflectanceMode, ReflectanceOptions};
use splitsum::sampling::{cos_hemisphere, ggx_lobe, uniform_sphere, Onb, RngStream};
use splitsum::scene::Scene;
use splitsum::shading::{render, Background, Camera, IllumSource, OcclusionMode, RenderOptions, ShadeTerms};
use splitsum::{Error, Rgb, Vec3};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within_budget(detail: Check, elapsed: Duration, budget: Option<Duration>) -> (bool, String) {
    let (mut ok, mut msg) = match detail {
        Ok(m) => (true, m),
        Err(m) => (false, m),
    };
    if let Some(b) = budget {
        if elapsed > b {
            ok = false;
            msg = format!("{msg}; over the {:.0} s budget", b.as_secs_f64());
        }
    }
    (ok, msg)
}

fn main() {
    let criteria: Vec<(u32, &str, Option<u64>, fn() -> Check)> = vec![
        (1, "ratio estimator exactness", Some(1), ratio_exactness),
        (2, "split-sum vs reference, diffuse", Some(120), split_sum_diffuse),
        (3, "split-sum vs reference, glossy", Some(600), split_sum_glossy),
        (4, "BRDF lookup table", Some(60), brdf_lut),
        (5, "gradient check", Some(10), gradient_check),
        (6, "illumination fit", Some(600), illumination_fit),
        (7, "occlusion fixtures", Some(5), occlusion_fixtures),
        (8, "sampler correctness", Some(30), samplers),
        (9, "format roundtrips", Some(30), roundtrips),
        (10, "determinism", None, determinism),
    ];
    let mut failed = 0;
    for (n, name, budget, f) in criteria {
        let start = Instant::now();
        let detail = f();
        let elapsed = start.elapsed();
        let (ok, msg) = within_budget(detail, elapsed, budget.map(Duration::from_secs));
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {}: {name}: {msg} ({:.2} s)",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ratio_exactness() -> Check {
    let mut rng = RngStream::new(1, 0);
    let mut worst: f64 = 0.0;
    let mut degenerate = 0;
    for k in 0..100 {
        let c = Rgb::new(0.1 + rng.uniform(), 0.1 + 5.0 * rng.uniform(), 0.1 + 50.0 * rng.uniform());
        let env = RadianceMap::constant(16, c);
        let axis = uniform_sphere(&mut rng).dir;
        let rho = rng.uniform();
        let count = if k % 4 == 0 { 1 } else { 1 + rng.below(4096) };
        let samples = draw_light_samples(&env, count, &mut RngStream::new(2, k));
        match mc_prefilter(&env, axis, rho, &samples) {
            Ok(g) => worst = worst.max((g - c).abs().max_channel() / c.max_channel()),
            Err(Error::DegenerateEstimator(_)) => degenerate += 1,
            Err(e) => return Err(format!("probe {k}: {e}")),
        }
    }
    ensure(worst <= 1e-5, format!("worst relative error {worst:.2e} over 100 probes ({degenerate} degenerate sets)"))
}

fn sphere_camera() -> Camera {
    Camera::new(Vec3::new(0.0, 0.0, 4.0), Vec3::ZERO, Vec3::Y, 35f64.to_radians(), 128, 128).unwrap()
}

fn masked_psnr(a: &splitsum::shading::Render, b: &splitsum::shading::Render) -> Result<f64, String> {
    if a.coverage != b.coverage {
        return Err("coverage differs between renders".into());
    }
    compare_masked(&a.image, &b.image, false, Some(&a.coverage)).map(|c| c.psnr).map_err(|e| e.to_string())
}

fn split_vs_reference(env: &RadianceMap, material: Material, diffuse_only: bool) -> Result<f64, String> {
    let scene = Scene::new(fixtures::unit_sphere(), MaterialSource::Constant(material)).map_err(|e| e.to_string())?;
    let cam = sphere_camera();
    let cfg = PyramidConfig { levels: 6, samples_per_texel: 8192, level_width: Some(64), seed: 0 };
    let illum = IllumSource::Pyramid(bake_pyramid(env, &cfg).map_err(|e| e.to_string())?);
    let lut = bake_brdf_lut(64, 1024, 0).map_err(|e| e.to_string())?;
    let terms = if diffuse_only { ShadeTerms::DIFFUSE } else { ShadeTerms::ALL };
    let opts = RenderOptions { occlusion: OcclusionMode::None, background: Background::Black, terms, seed: 0 };
    let split = render(&scene, &cam, &illum, &lut, &opts).map_err(|e| e.to_string())?;
    let mode = if diffuse_only { ReflectanceMode::Diffuse } else { ReflectanceMode::Full };
    let ropts = ReferenceOptions {
        samples_per_pixel: 1024,
        visibility: false,
        reflectance: ReflectanceOptions { mode, kd_override: None },
        background: Background::Black,
        seed: 1,
    };
    let reference = render_reference(&scene, &cam, env, &ropts).map_err(|e| e.to_string())?;
    masked_psnr(&reference, &split)
}

fn fmt_db(p: f64) -> String {
    if p.is_finite() {
        format!("{p:.2} dB")
    } else {
        "inf dB".into()
    }
}

fn split_sum_diffuse() -> Check {
    let env = RadianceMap::constant(64, Rgb::new(1.0, 0.9, 0.8));
    let psnr = split_vs_reference(&env, Material::new(Rgb::splat(0.8), 0.0, 0.5), true)?;
    ensure(psnr >= 40.0, format!("PSNR {} (need ≥ 40)", fmt_db(psnr)))
}

fn split_sum_glossy() -> Check {
    let env = fixtures::high_frequency_env(64);
    let psnr = split_vs_reference(&env, Material::new(Rgb::splat(0.8), 0.0, 0.4), false)?;
    ensure(psnr >= 28.0, format!("PSNR {} (need ≥ 28)", fmt_db(psnr)))
}

/// Midpoint quadrature of the split-sum BRDF integrals over (θ, φ).
fn quadrature_f1_f2(mu: f64, rho: f64, nt: usize, np: usize) -> (f64, f64) {
    let v = Vec3::new((1.0 - mu * mu).sqrt(), 0.0, mu);
    let (dt, dp) = (0.5 * PI / nt as f64, 2.0 * PI / np as f64);
    let (mut f1, mut f2) = (0.0, 0.0);
    for a in 0..nt {
        let th = (a as f64 + 0.5) * dt;
        let (st, ct) = th.sin_cos();
        for b in 0..np {
            let ph = (b as f64 + 0.5) * dp;
            let l = Vec3::new(st * ph.cos(), st * ph.sin(), ct);
            let h = (l + v).normalize();
            let g = 4.0 * ct * mu * smith_visibility(ct, mu, rho);
            let f = ggx_ndf(h.z, rho) * g / (4.0 * mu * ct) * ct * st * dt * dp;
            let fc = (1.0 - v.dot(h)).powi(5);
            f1 += (1.0 - fc) * f;
            f2 += fc * f;
        }
    }
    (f1, f2)
}

fn brdf_lut() -> Check {
    let lut = bake_brdf_lut(64, 1024, 0).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in [16, 32, 48] {
        for j in [16, 32, 48] {
            let (mu, rho) = lut.cell_center(i, j);
            let (q1, q2) = quadrature_f1_f2(mu, rho, 512, 512);
            let (f1, f2) = lut.cell(i, j);
            worst = worst.max((f1 - q1).abs()).max((f2 - q2).abs());
        }
    }
    let mut max_sum: f64 = 0.0;
    let mut in_range = true;
    for &[f1, f2] in lut.cells() {
        let (f1, f2) = (f1 as f64, f2 as f64);
        in_range &= (0.0..=1.0).contains(&f1) && (0.0..=1.0).contains(&f2);
        max_sum = max_sum.max(f1 + f2);
    }
    ensure(
        worst <= 1e-2 && in_range && max_sum <= 1.0 + 1e-3,
        format!("worst probe error {worst:.2e}, max F1+F2 {max_sum:.5}, all cells in [0,1]: {in_range}"),
    )
}

fn gradient_check() -> Check {
    const FLOOR: f64 = 1e-8;
    let cfg = FieldConfig { hidden_layers: 2, hidden_width: 8, ..Default::default() };
    let field = IllumField::new(&cfg, 5).map_err(|e| e.to_string())?;
    let env = RadianceMap::from_fn(16, |d| Rgb::new(1.0 + d.x, 0.5 + d.y * d.y, 0.3)).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..10 {
        let mut rng = RngStream::new(seed, 0);
        let batch = TrainBatch {
            recon: recon_pairs(&env, 6, &mut rng),
            regularizer: regularizer_tuples(6, &mut rng),
            lights: light_directions(64, &mut rng),
            lambda_rec: 10.0,
            lambda_d: 10.0,
        };
        let targets = regularizer_targets(&field, &batch.regularizer, &batch.lights).map_err(|e| e.to_string())?;
        let (_, grads) = loss_with_targets(&field, &batch, &targets).map_err(|e| e.to_string())?;
        let analytic = flatten(&grads);
        let params = field.mlp().params();
        let h = 1e-4;
        for i in 0..params.len() {
            let eval = |delta: f64| {
                let mut p = params.clone();
                p[i] += delta;
                let mut f = field.clone();
                f.mlp_mut().set_params(&p).unwrap();
                loss_with_targets(&f, &batch, &targets).unwrap().0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let scale = analytic[i].abs().max(fd.abs()).max(FLOOR);
            worst = worst.max((analytic[i] - fd).abs() / scale);
            checked += 1;
        }
    }
    ensure(worst <= 1e-4, format!("worst relative difference {worst:.2e} over {checked} parameter checks"))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_splitsum"))
}

fn run(mut cmd: Command) -> Result<(), String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{:?} failed: {}", cmd, String::from_utf8_lossy(&out.stderr)))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn illumination_fit() -> Check {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let env = fixtures::standard_env(64);
    let env_path = dir.path().join("env.hdr");
    save_hdr(env.image(), &env_path).map_err(|e| e.to_string())?;
    // compare against the map as stored, i.e. after RGBE quantization
    let env = RadianceMap::from_image(splitsum::envmap::load_hdr(&env_path).unwrap()).unwrap();
    let field_path = dir.path().join("env.illf");
    let report_path = dir.path().join("report.json");
    let mut cmd = bin();
    cmd.args(["fit-illum", p(&env_path), p(&field_path), "--report", p(&report_path)]);
    run(cmd)?;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).map_err(|e| e.to_string())?).unwrap();
    let steps = report["steps"].as_u64().unwrap_or(u64::MAX);
    let initial = report["initial_regularizer_loss"].as_f64().unwrap_or(f64::NAN);
    let last = report["final_regularizer_loss"].as_f64().unwrap_or(f64::NAN);
    let psnr = report["psnr_rho0"].as_f64().unwrap_or(f64::INFINITY);
    let field = IllumField::load(&field_path).map_err(|e| e.to_string())?;
    let mut rng = RngStream::new(12, 0);
    let mut rel: Vec<f64> = (0..64)
        .map(|_| {
            let n = uniform_sphere(&mut rng).dir;
            let g = field.forward(n, 1.0).unwrap();
            let e = diffuse_irradiance_quadrature(&env, n);
            (g - e).abs().max_channel() / e.max_channel()
        })
        .collect();
    rel.sort_by(f64::total_cmp);
    let median = 0.5 * (rel[31] + rel[32]);
    ensure(
        steps <= 2000 && psnr >= 30.0 && last <= 0.1 * initial && median <= 0.05,
        format!(
            "{steps} steps, PSNR(ρ=0) {}, L_D {initial:.3e} -> {last:.3e} ({:.4}×), median irradiance error {:.2}%",
            fmt_db(psnr),
            last / initial,
            100.0 * median
        ),
    )
}

fn occlusion_fixtures() -> Check {
    let env = fixtures::standard_env(64);
    let mut rng = RngStream::new(7, 0);
    let empty = Bvh::build(TriangleMesh::empty());
    let mut empty_ok = true;
    for bvh in [None, Some(&empty)] {
        for _ in 0..20 {
            let n = uniform_sphere(&mut rng).dir;
            let x = Vec3::new(rng.uniform(), rng.uniform(), rng.uniform());
            let d = mc_occlusion_diffuse(x, n, &env, bvh, 64, 1e-4, &mut rng).map_err(|e| e.to_string())?;
            empty_ok &= d.value == Rgb::WHITE;
        }
    }
    let boxed = Bvh::build(fixtures::unit_box());
    let mut box_ok = true;
    for _ in 0..20 {
        let n = uniform_sphere(&mut rng).dir;
        let x = Vec3::new(rng.uniform(), rng.uniform(), rng.uniform()) * 1.8 - Vec3::splat(0.9);
        let d = mc_occlusion_diffuse(x, n, &env, Some(&boxed), 64, 1e-4, &mut rng).map_err(|e| e.to_string())?;
        box_ok &= d.value == Rgb::BLACK;
    }
    let constant = RadianceMap::constant(32, Rgb::splat(1.5));
    let wall = Bvh::build(fixtures::half_wall(1e4));
    let mut wrng = RngStream::new(8, 0);
    let est = mc_occlusion_diffuse(Vec3::new(1e-2, 0.0, 0.0), Vec3::Y, &constant, Some(&wall), 64, 1e-4, &mut wrng)
        .map_err(|e| e.to_string())?;
    let sigma = (0.25f64 / 64.0).sqrt();
    let dev = (est.value - Rgb::splat(0.5)).abs().max_channel();
    ensure(
        empty_ok && box_ok && dev <= 3.0 * sigma,
        format!(
            "empty exactly 1: {empty_ok}, box exactly 0: {box_ok}, half-wall {:.4} (|Δ| {:.4} ≤ 3σ = {:.4})",
            est.value.g,
            dev,
            3.0 * sigma
        ),
    )
}

/// Chi-square p-value of `counts` against `probs`, merging sparse bins.
fn chi_square_p(counts: &[usize], probs: &[f64], n: usize) -> f64 {
    let mut stat = 0.0;
    let mut bins = 0;
    let (mut acc_c, mut acc_p) = (0.0, 0.0);
    for (&c, &q) in counts.iter().zip(probs) {
        acc_c += c as f64;
        acc_p += q;
        if acc_p * n as f64 >= 5.0 {
            let e = acc_p * n as f64;
            stat += (acc_c - e).powi(2) / e;
            bins += 1;
            acc_c = 0.0;
            acc_p = 0.0;
        }
    }
    if acc_p > 0.0 {
        let e = acc_p * n as f64;
        stat += (acc_c - e).powi(2) / e;
        bins += 1;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

/// Histogram over (t = ⟨dir, axis⟩, φ) bins; `cdf_t` gives the exact
/// marginal CDF in t, φ is uniform.
fn sampler_p(mut draw: impl FnMut() -> Vec3, axis: Vec3, t_lo: f64, cdf_t: impl Fn(f64) -> f64) -> f64 {
    const NT: usize = 32;
    const NP: usize = 8;
    const N: usize = 100_000;
    let frame = Onb::from_normal(axis);
    let mut counts = vec![0usize; NT * NP];
    for _ in 0..N {
        let d = draw();
        let t = d.dot(axis).clamp(t_lo, 1.0);
        let phi = d.dot(frame.bitangent).atan2(d.dot(frame.tangent)).rem_euclid(2.0 * PI);
        let i = (((t - t_lo) / (1.0 - t_lo) * NT as f64) as usize).min(NT - 1);
        let j = ((phi / (2.0 * PI) * NP as f64) as usize).min(NP - 1);
        counts[i * NP + j] += 1;
    }
    let edge = |i: usize| t_lo + (1.0 - t_lo) * i as f64 / NT as f64;
    let probs: Vec<f64> = (0..NT * NP).map(|k| (cdf_t(edge(k / NP + 1)) - cdf_t(edge(k / NP))) / NP as f64).collect();
    chi_square_p(&counts, &probs, N)
}

/// `∫ pdf dω` by midpoint quadrature in t with `n` cells (the φ integral is 2π).
fn pdf_mass(pdf: impl Fn(f64) -> f64, t_lo: f64, n: usize) -> f64 {
    let dt = (1.0 - t_lo) / n as f64;
    (0..n).map(|i| pdf(t_lo + (i as f64 + 0.5) * dt)).sum::<f64>() * dt * 2.0 * PI
}

fn samplers() -> Check {
    let axis = Vec3::new(0.3, -0.5, 0.8).normalize();
    let mut notes = Vec::new();
    let mut ok = true;
    let mut record = |name: String, mass: f64, pval: f64| {
        let good = (mass - 1.0).abs() <= 1e-3 && pval >= 0.01;
        ok &= good;
        notes.push(format!("{name} mass {mass:.5} p {pval:.3}"));
    };

    let mut rng = RngStream::new(21, 0);
    let mass = pdf_mass(|_| 1.0 / (4.0 * PI), -1.0, 1 << 16);
    let pval = sampler_p(|| uniform_sphere(&mut rng).dir, axis, -1.0, |t| (t + 1.0) / 2.0);
    record("uniform".into(), mass, pval);

    let mut rng = RngStream::new(22, 0);
    let mass = pdf_mass(|t| t / PI, 0.0, 1 << 16);
    let pval = sampler_p(|| cos_hemisphere(axis, &mut rng).dir, axis, 0.0, |t| t * t);
    record("cosine".into(), mass, pval);

    for rho in [0.1, 0.5, 1.0] {
        let mut rng = RngStream::new(23, (rho * 10.0) as u64);
        let a2 = rho * rho;
        // D(t)/4 with cos²θ_h = (1 + t)/2
        let pdf = |t: f64| {
            let d = 0.5 * (1.0 + t) * (a2 - 1.0) + 1.0;
            a2 / (PI * d * d) / 4.0
        };
        let mass = pdf_mass(pdf, -1.0, 1 << 20);
        let cdf = |t: f64| {
            let s = (1.0 + t) / 2.0;
            a2 * s / (1.0 + s * (a2 - 1.0))
        };
        let pval = sampler_p(|| ggx_lobe(axis, rho, &mut rng).unwrap().dir, axis, -1.0, cdf);
        record(format!("ggx ρ={rho}"), mass, pval);
    }
    ensure(ok, notes.join(", "))
}

fn roundtrips() -> Check {
    let mut rng = RngStream::new(31, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000_000 {
        let scale = (rng.uniform() * 40.0 - 20.0).exp2();
        let px = Rgb::new(rng.uniform(), rng.uniform(), rng.uniform()) * scale;
        let back = decode_rgbe(encode_rgbe(px));
        let m = px.max_channel();
        if m > 0.0 {
            worst = worst.max((back - px).abs().max_channel() / m);
        }
    }

    let pixels: Vec<Rgb> = (0..64 * 32)
        .map(|_| Rgb::new(rng.uniform(), rng.uniform(), rng.uniform()) * (rng.uniform() * 20.0 - 10.0).exp2())
        .collect();
    let img = Image::new(64, 32, pixels).unwrap();
    let mut bytes = Vec::new();
    write_hdr(&img, &mut bytes).map_err(|e| e.to_string())?;
    let back = read_hdr(&bytes).map_err(|e| e.to_string())?;
    let hdr_ok = back.width() == 64
        && back.height() == 32
        && back.pixels().iter().zip(img.pixels()).all(|(b, a)| *b == decode_rgbe(encode_rgbe(*a)));

    let lut = bake_brdf_lut(16, 256, 3).map_err(|e| e.to_string())?;
    let mut lb = Vec::new();
    lut.write_to(&mut lb).map_err(|e| e.to_string())?;
    let lut_back = BrdfLut::from_bytes(&lb).map_err(|e| e.to_string())?;
    let lut_ok = lut_back == lut;

    let field = IllumField::new(&FieldConfig::default(), 4).map_err(|e| e.to_string())?;
    let mut fb = Vec::new();
    field.write_to(&mut fb).map_err(|e| e.to_string())?;
    let field_back = IllumField::from_bytes(&fb).map_err(|e| e.to_string())?;
    let quantized: Vec<f64> = field.mlp().params().iter().map(|&x| x as f32 as f64).collect();
    let field_ok = field_back.mlp().params() == quantized && field_back.encoding() == field.encoding();

    ensure(
        worst <= 1.0 / 128.0 && hdr_ok && lut_ok && field_ok,
        format!(
            "RGBE worst error {worst:.2e} of max channel (limit {:.2e}) over 10^6 pixels, HDR file {hdr_ok}, LUT {lut_ok}, field {field_ok}",
            1.0 / 128.0
        ),
    )
}

fn determinism() -> Check {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let env_path = dir.path().join("env.hdr");
    save_hdr(fixtures::high_frequency_env(64).image(), &env_path).map_err(|e| e.to_string())?;
    let scene = dir.path().join("scene.toml");
    std::fs::write(
        &scene,
        "env = \"env.hdr\"\nmesh = \"builtin:wall_on_ground\"\nseed = 5\n\
         [material]\nalbedo = [0.7, 0.5, 0.3]\nmetalness = 0.2\nroughness = 0.4\n\
         [camera]\nposition = [2.0, 1.5, 2.5]\nwidth = 64\nheight = 48\nfov_degrees = 50.0\n\
         [occlusion]\nmode = \"mc\"\n",
    )
    .map_err(|e| e.to_string())?;
    let mut renders = Vec::new();
    let mut fits = Vec::new();
    let mut references = Vec::new();
    for (k, threads) in ["1", "1", "4", "4"].iter().enumerate() {
        let img = dir.path().join(format!("r{k}.hdr"));
        let mut cmd = bin();
        cmd.args(["--threads", threads, "render", p(&scene), p(&img), "--light-samples", "1024"]);
        run(cmd)?;
        renders.push(std::fs::read(&img).map_err(|e| e.to_string())?);

        let refimg = dir.path().join(format!("ref{k}.hdr"));
        let mut cmd = bin();
        cmd.args(["--threads", threads, "render", p(&scene), p(&refimg), "--reference", "--spp", "16"]);
        run(cmd)?;
        references.push(std::fs::read(&refimg).map_err(|e| e.to_string())?);

        let field = dir.path().join(format!("f{k}.illf"));
        let mut cmd = bin();
        cmd.args(["--threads", threads, "fit-illum", p(&env_path), p(&field), "--steps", "150", "--seed", "9"]);
        run(cmd)?;
        fits.push(std::fs::read(&field).map_err(|e| e.to_string())?);
    }
    let same = |v: &Vec<Vec<u8>>| v.iter().all(|b| *b == v[0]);
    let (r, f, g) = (same(&renders), same(&fits), same(&references));
    ensure(
        r && f && g,
        format!("render identical: {r}, reference render identical: {g}, fit identical: {f} (2 runs each at 1 and 4 threads)"),
    )
}
