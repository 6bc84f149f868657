use std::f64::consts::PI;

use wgcdm::dipole::{assemble_sigma, stationary_amplitudes, Realization, SeedTag, SourceSpec};
use wgcdm::geometry::WaveguideGeometry;
use wgcdm::green::{KernelOptions, Point3};
use wgcdm::transport::{
    field_at_point, generate_realization, scan_curve, transmission_one, DetectorGrid, SimulationConfig, K0,
};

fn config(a: f64, b: f64, lengths: Vec<f64>, realizations: usize) -> SimulationConfig {
    let mut cfg = SimulationConfig::new(WaveguideGeometry::new(a, b).unwrap(), 2e-3, 1.0, lengths).unwrap();
    cfg.realizations_per_length = realizations;
    cfg.master_seed = 4242;
    cfg
}

fn run_on_threads(cfg: &SimulationConfig, threads: usize) -> wgcdm::transport::TransmissionCurve {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| scan_curve(cfg).unwrap())
}

#[test]
fn curves_do_not_depend_on_thread_count() {
    let cfg = config(4.0, 2.0, vec![150.0, 300.0], 6);
    let one = run_on_threads(&cfg, 1);
    let many = run_on_threads(&cfg, 4);
    assert_eq!(one, many);
    let cfg = config(8.0, 8.0, vec![40.0], 3);
    assert_eq!(run_on_threads(&cfg, 1), run_on_threads(&cfg, 3));
}

#[test]
fn single_shot_curve_is_reproducible() {
    let cfg = config(4.0, 2.0, vec![200.0, 400.0], 1);
    let first = scan_curve(&cfg).unwrap();
    assert_eq!(first, scan_curve(&cfg).unwrap());
    assert!(first.points.iter().all(|p| p.n_realizations == 1 && p.stderr == 0.0));
}

#[test]
fn remote_source_gauge() {
    let cfg = config(4.0, 2.0, vec![400.0], 8);
    let opts = KernelOptions::default();
    let mut far = cfg.source;
    far.position.z = -1000.0;
    for ri in 0..8 {
        let real = generate_realization(&cfg, 0, ri).unwrap();
        let near = transmission_one(&real, &cfg.source, &cfg.detector, K0, &opts).unwrap().transmission;
        let moved = transmission_one(&real, &far, &cfg.detector, K0, &opts).unwrap().transmission;
        assert!((moved - near).abs() < 5e-3 * near, "realization {ri}: {near} vs {moved}");
    }
}

#[test]
fn detector_grid_refinement() {
    let opts = KernelOptions::default();
    for cfg in [config(4.0, 2.0, vec![300.0], 6), config(8.0, 8.0, vec![60.0], 4)] {
        let fine = DetectorGrid { nx: 32, ny: 32, ..cfg.detector };
        let (mut coarse_sum, mut fine_sum) = (0.0, 0.0);
        for ri in 0..cfg.realizations_per_length as u32 {
            let real = generate_realization(&cfg, 0, ri).unwrap();
            coarse_sum += transmission_one(&real, &cfg.source, &cfg.detector, K0, &opts).unwrap().transmission;
            fine_sum += transmission_one(&real, &cfg.source, &fine, K0, &opts).unwrap().transmission;
        }
        assert!((fine_sum - coarse_sum).abs() < 5e-3 * coarse_sum, "{coarse_sum} vs {fine_sum}");
    }
}

#[test]
fn far_field_has_the_te10_profile() {
    let cfg = config(4.0, 2.0, vec![300.0], 1);
    let opts = KernelOptions::default();
    let real = generate_realization(&cfg, 0, 0).unwrap();
    let sigma = assemble_sigma(&real, K0, &opts).unwrap();
    let b = stationary_amplitudes(&sigma, &cfg.source, &real, K0, &opts).unwrap().amplitudes;
    let points = cfg.detector.points(&cfg.geom, 300.0);
    let intensity: Vec<f64> = points
        .iter()
        .map(|p| field_at_point(&b, &real, &cfg.source, p, K0, &opts).unwrap().norm_squared())
        .collect();
    let profile: Vec<f64> = points.iter().map(|p| (PI * p.x / cfg.geom.a).sin().powi(2)).collect();
    let peak = intensity.iter().cloned().fold(0.0, f64::max);
    let profile_peak = profile.iter().cloned().fold(0.0, f64::max);
    for (i, shape) in intensity.iter().zip(&profile) {
        assert!((i / peak - shape / profile_peak).abs() < 1e-2);
    }
}

#[test]
fn single_scatterer_matches_one_dimensional_transmission() {
    let geom = WaveguideGeometry::new(4.0, 2.0).unwrap();
    let opts = KernelOptions::default();
    let tag = SeedTag {
        master_seed: 0,
        length_index: 0,
        realization_index: 0,
    };
    for detuning in [0.0, 0.7, -2.0] {
        let source = SourceSpec::new(Point3::new(2.0, 1.0, -500.0), Point3::new(0.0, 1.0, 0.0), detuning, &geom).unwrap();
        let real = Realization::new(vec![Point3::new(2.0, 1.0, 5.0)], geom, 10.0, 0.05, tag).unwrap();
        let sigma = assemble_sigma(&real, K0, &opts).unwrap();
        let s = sigma.block(0, 0)[(1, 1)];
        // All of the single atom's emission goes into TE10.
        let (shift, gamma) = (s.re, -2.0 * s.im);
        let delta_eff = detuning - shift;
        let expected = delta_eff.powi(2) / (delta_eff.powi(2) + gamma.powi(2) / 4.0);
        let t = transmission_one(&real, &source, &DetectorGrid::default(), K0, &opts).unwrap().transmission;
        assert!((t - expected).abs() < 1e-9 * expected.max(1e-3), "detuning {detuning}: {t} vs {expected}");
    }
}

#[test]
fn far_detuned_medium_is_transparent() {
    let mut cfg = config(4.0, 2.0, vec![400.0], 4);
    cfg.detuning = 1e3;
    cfg.source.detuning = 1e3;
    let curve = scan_curve(&cfg).unwrap();
    assert!((curve.points[0].mean - 1.0).abs() < 1e-2, "{}", curve.points[0].mean);
}
