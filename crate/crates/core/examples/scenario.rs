//! Runs the shared-level pipeline on the synthetic patrol scenario and
//! prints the detection summary.

use motionaware_core::kf::{abnormal_runs, run_bank};
use motionaware_core::sim::{simulate_trajectory, Avoidance, SceneSpec};
use motionaware_core::{
    build_field, encode_image, segment, zone_dynamics, DetectorConfig, GpHyper, MaskPolicy,
    SlicParams, SpatialGrid, ZoneGroup,
};

fn main() -> motionaware_core::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let seed = args.first().copied().unwrap_or(1.0) as u64;
    let train_spec = SceneSpec { seed, ..SceneSpec::default() };
    let test_spec = SceneSpec { n_laps: 4, seed: seed + 1000, ..SceneSpec::default() };

    let train = simulate_trajectory(&train_spec, None)?;
    let grid = SpatialGrid::covering(&train_spec.arena, 1.0)?;
    let built = build_field(
        std::slice::from_ref(&train.trajectory),
        &grid,
        GpHyper::for_cell_size(1.0),
        MaskPolicy::default(),
        Some(1500),
    )?;
    let field = built.field;
    let image = encode_image(&field)?;
    let zones = segment(&field, &image, &SlicParams::default())?;
    println!(
        "points {} used {} unmasked {} zones {} straight {} curve {}",
        built.pooled_points,
        built.used_points,
        field.unmasked_count(),
        zones.len(),
        zones.ids_in_group(ZoneGroup::Straight).len(),
        zones.ids_in_group(ZoneGroup::Curve).len()
    );
    for z in zones.zones() {
        println!("  zone {:2} n={:3} u=({:+.2},{:+.2}) {:?}", z.id, z.cells.len(), z.u.x, z.u.y, z.group);
    }
    let dynamics: Vec<_> = zones
        .zones()
        .iter()
        .map(|z| zone_dynamics(z, test_spec.dt, 0.0025))
        .collect::<Result<_, _>>()?;

    let test = simulate_trajectory(&test_spec, Some(Avoidance::new(2, 1.2)))?;
    let recs = run_bank(&test.trajectory, &zones, &grid, &dynamics, &DetectorConfig::default())?;
    let lap_of = &test.lap[1..];
    let detour = &test.in_detour[1..];
    let normal: Vec<_> = recs.iter().zip(lap_of).filter(|(_, l)| **l != 2).map(|(r, _)| r).collect();
    let frac = normal.iter().filter(|r| r.abnormal).count() as f64 / normal.len() as f64;
    println!("normal-lap abnormal fraction {frac:.4}");
    let runs = abnormal_runs(&recs);
    for (a, b) in &runs {
        let inside = (*a..=*b).any(|i| detour[i]);
        let peak = recs[*a..=*b].iter().map(|r| r.xi).fold(0.0, f64::max);
        println!("  run k={}..{} detour={inside} peak={peak:.3}", recs[*a].k, recs[*b].k);
    }
    let mut curve = Vec::new();
    let mut straight = Vec::new();
    for r in recs.iter().filter(|r| !r.out_of_support) {
        match zones.zone(r.zone.unwrap()).unwrap().group {
            ZoneGroup::Curve => curve.push(r.xi),
            ZoneGroup::Straight => straight.push(r.xi),
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.get(v.len() / 2).copied().unwrap_or(f64::NAN)
    };
    println!("median xi curve {:.4} straight {:.4}", median(&mut curve), median(&mut straight));
    let maxn = normal.iter().filter(|r| !r.out_of_support).map(|r| r.xi).fold(0.0, f64::max);
    println!("max normal xi {maxn:.3}");
    Ok(())
}
