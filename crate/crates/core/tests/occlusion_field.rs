use splitsum::fixtures;
use splitsum::geometry::{default_t_min, sample_surface, Bvh, MaterialSource, TriangleMesh};
use splitsum::occlusion::{estimate_occlusion, fit_occlusion_field, OcclusionFitConfig};
use splitsum::sampling::RngStream;
use splitsum::Vec3;

fn probes(mesh: &TriangleMesh, count: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = RngStream::new(seed, 0);
    sample_surface(mesh, count, &mut rng, &MaterialSource::Constant(Default::default()))
        .unwrap()
        .into_iter()
        .map(|p| p.position)
        .collect()
}

#[test]
fn unoccluded_surface_predicts_ones() {
    let env = fixtures::standard_env(32);
    let quad = TriangleMesh::quad(Vec3::new(-1.0, 0.0, -1.0), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 2.0))
        .flipped();
    assert!(quad.face_normal(0).y > 0.0);
    let field = fit_occlusion_field(&quad, &env, &OcclusionFitConfig::default()).unwrap();
    for x in probes(&quad, 200, 7) {
        let p = field.predict(x);
        assert!(p.o_d.min_channel() >= 0.95 && p.o_s.min_channel() >= 0.95, "{p:?}");
    }
}

#[test]
fn box_interior_predicts_zeros() {
    let env = fixtures::standard_env(32);
    let mesh = fixtures::inward_box();
    let field = fit_occlusion_field(&mesh, &env, &OcclusionFitConfig::default()).unwrap();
    for x in probes(&mesh, 200, 8) {
        let p = field.predict(x);
        assert!(p.o_d.max_channel() <= 0.05 && p.o_s.max_channel() <= 0.05, "{p:?}");
    }
}

#[test]
fn wall_on_ground_matches_fresh_estimates() {
    let env = fixtures::standard_env(32);
    let mesh = fixtures::wall_on_ground();
    let cfg = OcclusionFitConfig::default();
    let field = fit_occlusion_field(&mesh, &env, &cfg).unwrap();
    let bvh = Bvh::build(mesh.clone());
    let t_min = default_t_min(&mesh);
    let mut rng = RngStream::new(9, 1);
    let held_out = sample_surface(&mesh, 200, &mut rng, &cfg.materials).unwrap();
    let good = held_out
        .iter()
        .filter(|p| {
            let e = estimate_occlusion(p, &env, Some(&bvh), 256, t_min, &mut rng).unwrap();
            let q = field.predict(p.position);
            (q.o_d - e.o_d).abs().max_channel() <= 0.1 && (q.o_s - e.o_s).abs().max_channel() <= 0.1
        })
        .count();
    assert!(good >= 160, "{good} of 200 within 0.1");
}

#[test]
fn fit_is_deterministic() {
    let env = fixtures::standard_env(16);
    let cfg = OcclusionFitConfig { points: 64, samples: 8, steps: 20, batch: 32, ..Default::default() };
    let a = fit_occlusion_field(&fixtures::wall_on_ground(), &env, &cfg).unwrap();
    let b = fit_occlusion_field(&fixtures::wall_on_ground(), &env, &cfg).unwrap();
    assert_eq!(a, b);
}
