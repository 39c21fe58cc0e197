mod common;

use common::scalar_filter;
use motionaware_core::kf::{predict, run_bank, update, DEFAULT_INITIAL_VARIANCE, OUT_OF_SUPPORT_XI};
use motionaware_core::sim::{simulate_trajectory, SceneSpec};
use motionaware_core::{
    build_field, encode_image, segment, zone_dynamics, DetectorConfig, GpHyper, KfState,
    MaskPolicy, Point, SlicParams, SpatialGrid, Trajectory, Velocity, Zone, ZoneDynamics,
    ZoneGroup, ZoneMap,
};
use nalgebra::{Matrix2, Rotation2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const DT: f64 = 0.2;
const Q: f64 = 0.0025;
const R: f64 = 0.01;

/// Single zone covering the whole grid.
fn one_zone(grid: &SpatialGrid, u: Velocity) -> ZoneMap {
    let zone = Zone {
        id: 1,
        cells: (0..grid.len()).collect(),
        u,
        group: ZoneGroup::Straight,
    };
    ZoneMap::new(vec![zone], grid.len()).unwrap()
}

/// Positions driven by `x ← x + dt·u + w`, observed with noise `v`.
fn model_consistent(n: usize, start: Point, u: Velocity, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Normal::new(0.0, Q.sqrt()).unwrap();
    let v = Normal::new(0.0, R.sqrt()).unwrap();
    let mut x = start;
    (0..n)
        .map(|_| {
            let z = x + Point::new(v.sample(&mut rng), v.sample(&mut rng));
            x += u * DT + Point::new(w.sample(&mut rng), w.sample(&mut rng));
            z
        })
        .collect()
}

fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

#[test]
fn noiseless_model_data_gives_zero_innovation() {
    let grid = SpatialGrid::new([-10.0, -10.0], 1.0, 60, 40).unwrap();
    let u = Velocity::new(0.9, 0.3);
    let zones = one_zone(&grid, u);
    let dynamics = [ZoneDynamics::new(1, u, DT, Q, R).unwrap()];
    let pts: Vec<Point> = (0..100).map(|i| Point::new(0.0, 0.0) + u * DT * i as f64).collect();
    let traj = Trajectory::from_positions(&pts, DT).unwrap();
    let recs = run_bank(&traj, &zones, &grid, &dynamics, &DetectorConfig::default()).unwrap();
    assert!(recs.iter().all(|r| r.xi < 1e-12 && !r.abnormal));
}

#[test]
fn innovations_are_white_on_model_consistent_data() {
    let grid = SpatialGrid::new([-10.0, -10.0], 1.0, 200, 40).unwrap();
    let u = Velocity::new(1.0, 0.05);
    let zones = one_zone(&grid, u);
    let dynamics = [ZoneDynamics::new(1, u, DT, Q, R).unwrap()];
    for seed in 0..5 {
        let pts = model_consistent(800, Point::new(0.0, 0.0), u, seed);
        let traj = Trajectory::from_positions(&pts, DT).unwrap();
        let recs = run_bank(&traj, &zones, &grid, &dynamics, &DetectorConfig::default()).unwrap();
        // Skip the transient while P settles.
        let tail = &recs[50..];
        assert!(tail.len() >= 500);
        for axis in 0..2 {
            let e: Vec<f64> = tail.iter().map(|r| r.eps[axis]).collect();
            let rho = lag1_autocorrelation(&e);
            assert!(rho.abs() <= 0.2, "seed {seed} axis {axis}: lag-1 autocorrelation {rho}");
        }
    }
}

#[test]
fn xi_is_rotation_invariant() {
    let grid = SpatialGrid::new([-30.0, -30.0], 1.0, 60, 60).unwrap();
    let u = Velocity::new(0.8, -0.4);
    let pts = model_consistent(120, Point::new(-5.0, 3.0), u, 9);
    let base = run_bank(
        &Trajectory::from_positions(&pts, DT).unwrap(),
        &one_zone(&grid, u),
        &grid,
        &[ZoneDynamics::new(1, u, DT, Q, R).unwrap()],
        &DetectorConfig::default(),
    )
    .unwrap();
    for angle in [0.3, 1.0, std::f64::consts::FRAC_PI_2, 2.5] {
        let rot = Rotation2::new(angle);
        let rpts: Vec<Point> = pts.iter().map(|p| rot * p).collect();
        let ru = rot * u;
        let recs = run_bank(
            &Trajectory::from_positions(&rpts, DT).unwrap(),
            &one_zone(&grid, ru),
            &grid,
            &[ZoneDynamics::new(1, ru, DT, Q, R).unwrap()],
            &DetectorConfig::default(),
        )
        .unwrap();
        for (a, b) in base.iter().zip(&recs) {
            assert!((a.xi - b.xi).abs() < 1e-12);
            assert!((rot * a.eps - b.eps).norm() < 1e-12);
        }
    }
}

#[test]
fn covariance_stays_symmetric_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let detector = DetectorConfig::default();
    for _ in 0..50 {
        let q = rng.random_range(0.0..0.1);
        let r = rng.random_range(1e-4..1.0);
        let d = ZoneDynamics::new(1, Velocity::new(rng.random_range(-2.0..2.0), 0.5), DT, q, r)
            .unwrap();
        let a = rng.random_range(-1.0..1.0);
        let p0 = Matrix2::new(1.0, a, a, 1.0) * rng.random_range(1e-6..2.0);
        let mut s = KfState::new(Point::zeros(), p0, Some(1));
        for k in 0..200 {
            s = predict(&s, &d).unwrap();
            if rng.random_bool(0.8) {
                let z = Point::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
                s = update(&s, &z, &d, &detector, k, k as f64 * DT).unwrap().0;
            }
            assert_eq!(s.p[(0, 1)], s.p[(1, 0)]);
            let eig = s.p.symmetric_eigen().eigenvalues;
            assert!(eig.min() >= -1e-10, "eigenvalues {eig}");
        }
    }
}

#[test]
fn large_measurement_noise_freezes_estimate() {
    let d = ZoneDynamics::new(1, Velocity::new(1.0, 0.0), 1.0, 0.0, 1e12).unwrap();
    let s = predict(&KfState::new(Point::zeros(), Matrix2::identity(), Some(1)), &d).unwrap();
    let (next, rec) = update(&s, &Point::new(1.3, 0.4), &d, &DetectorConfig::default(), 1, 1.0).unwrap();
    assert!((next.x - s.x).norm() < 1e-6);
    assert!((rec.xi - 0.5).abs() < 1e-12 && rec.abnormal);
}

#[test]
fn patrol_run_matches_direct_recomputation() {
    let train_spec = SceneSpec::default();
    let train = simulate_trajectory(&train_spec, None).unwrap();
    let grid = SpatialGrid::covering(&train_spec.arena, 1.0).unwrap();
    let field = build_field(
        &[train.trajectory],
        &grid,
        GpHyper::for_cell_size(1.0),
        MaskPolicy::default(),
        Some(1500),
    )
    .unwrap()
    .field;
    let image = encode_image(&field).unwrap();
    let zones = segment(&field, &image, &SlicParams::default()).unwrap();
    let dynamics: Vec<ZoneDynamics> = zones
        .zones()
        .iter()
        .map(|z| zone_dynamics(z, train_spec.dt, Q).unwrap())
        .collect();

    let test_spec = SceneSpec { n_laps: 2, seed: 77, ..SceneSpec::default() };
    let test = simulate_trajectory(&test_spec, None).unwrap();
    let recs = run_bank(&test.trajectory, &zones, &grid, &dynamics, &DetectorConfig::default())
        .unwrap();

    let zs: Vec<(f64, f64)> = test.trajectory.positions().map(|p| (p.x, p.y)).collect();
    let lookup = |z: (f64, f64)| {
        let m = grid.locate_cell(&Point::new(z.0, z.1))?;
        let u = zones.zone(zones.zone_of_cell(m)?)?.u;
        Some((u.x, u.y))
    };
    let oracle = scalar_filter(&zs, test_spec.dt, Q, R, DEFAULT_INITIAL_VARIANCE, lookup);

    assert_eq!(recs.len(), test.trajectory.len() - 1);
    for ((rec, want), sample) in recs.iter().zip(&oracle).zip(&test.trajectory.samples()[1..]) {
        assert_eq!(rec.k, sample.k);
        match want {
            Some(w) => {
                assert!((rec.xi - w.xi).abs() < 1e-12);
                assert!((rec.eps.x - w.eps.0).abs() < 1e-12);
                assert!((rec.eps.y - w.eps.1).abs() < 1e-12);
            }
            None => {
                assert!(rec.out_of_support && rec.abnormal);
                assert_eq!(rec.xi, OUT_OF_SUPPORT_XI);
            }
        }
    }
    let in_support: Vec<f64> = recs.iter().filter(|r| !r.out_of_support).map(|r| r.xi).collect();
    let frac = in_support.iter().filter(|&&x| x > 0.4).count() as f64 / in_support.len() as f64;
    assert!(frac < 0.05, "abnormal fraction on normal laps {frac}");
}

#[test]
fn records_follow_samples_one_to_one() {
    let grid = SpatialGrid::new([0.0, 0.0], 1.0, 10, 10).unwrap();
    let mut cells: Vec<usize> = (0..grid.len()).collect();
    cells.retain(|&m| grid.row_col(m).1 < 5);
    let zone = Zone { id: 1, cells, u: Velocity::new(1.0, 0.0), group: ZoneGroup::Straight };
    let zones = ZoneMap::new(vec![zone], grid.len()).unwrap();
    let dynamics = [ZoneDynamics::new(1, Velocity::new(1.0, 0.0), 1.0, Q, R).unwrap()];
    let pts: Vec<Point> = (0..9).map(|i| Point::new(0.5 + i as f64, 5.0)).collect();
    let traj = Trajectory::from_positions(&pts, 1.0).unwrap();
    let recs = run_bank(&traj, &zones, &grid, &dynamics, &DetectorConfig::default()).unwrap();
    let ks: Vec<u64> = recs.iter().map(|r| r.k).collect();
    assert_eq!(ks, (1..9).collect::<Vec<u64>>());
    for r in &recs {
        assert_eq!(r.out_of_support, r.zone.is_none());
        assert_eq!(r.out_of_support, r.k >= 5);
    }
}
