//! Metric axioms and the straight-line bound for the distance engine.

use szego_core::metric::{DistanceGrid, GridSpec};
use szego_core::quadrature::BoundarySurface;
use szego_core::Paravector;

use super::{ball_points, metric, rng};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{timed, Check, SuiteReport};

const TRIPLES: usize = 100;
const SAMPLE_RADIUS: f64 = 0.6;

pub fn run(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let sig = cfg.signature();
    let m = cfg.m;
    let mut report = SuiteReport::new("distance", m, cfg.seed);
    let met = metric(cfg, BoundarySurface::unit_ball(sig), cfg.degree)?;
    let spec = GridSpec { step: cfg.grid_step, ..GridSpec::default() };
    let (grid, build) = timed(|| DistanceGrid::build(&met, spec));
    let grid = grid?;

    let mut r = rng(cfg, 900);
    let triples: Vec<[Paravector<f64>; 3]> = (0..TRIPLES)
        .map(|_| {
            let p = ball_points(&mut r, &Paravector::zero(sig), SAMPLE_RADIUS, 3);
            [p[0].clone(), p[1].clone(), p[2].clone()]
        })
        .collect();

    let (res, secs) = timed(|| -> CliResult<Stats> {
        let mut s = Stats::default();
        for t in &triples {
            let d = grid.distance_matrix(t)?;
            let v = &d.values;
            for i in 0..3 {
                for j in 0..3 {
                    s.asymmetry = s.asymmetry.max((v[i][j] - v[j][i]).abs());
                    s.straight_excess = s.straight_excess.max(v[i][j] - d.straight[i][j]);
                    for k in 0..3 {
                        s.triangle_excess = s.triangle_excess.max(v[i][k] - v[i][j] - v[j][k]);
                        let p = &d.pairwise;
                        s.pairwise_triangle_excess = s.pairwise_triangle_excess.max(p[i][k] - p[i][j] - p[j][k]);
                    }
                    if i < j {
                        s.queries += 1;
                        if v[i][j] < d.straight[i][j] {
                            s.path_wins += 1;
                        }
                        s.max_gain = s.max_gain.max(1.0 - v[i][j] / d.straight[i][j]);
                    }
                }
            }
        }
        Ok(s)
    });
    let s = res?;
    report.push(
        Check::at_most(&format!("distance_symmetry_m{m}"), "distance is symmetric: d(a,b) = d(b,a) bit for bit", s.asymmetry, 0.0)
            .criterion(11)
            .runtime(secs + build)
            .detail("nodes", grid.node_count() as f64)
            .detail("edges", grid.edge_count() as f64)
            .detail("grid_step", cfg.grid_step),
    );
    report.push(
        Check::at_most(
            &format!("distance_triangle_inequality_m{m}"),
            "triangle inequality d(a,c) <= d(a,b) + d(b,c) on random triples (shared graph per triple)",
            s.triangle_excess,
            1e-9,
        )
        .criterion(11)
        .detail("triples", TRIPLES as f64),
    );
    report.push(
        Check::at_most(
            &format!("distance_straight_line_bound_m{m}"),
            "distance does not exceed the metric length of the straight segment",
            s.straight_excess,
            0.0,
        )
        .criterion(11),
    );
    report.push(
        Check::at_least(
            &format!("distance_path_improves_on_segment_m{m}"),
            "fraction of pairs where the graph distance is shorter than the straight segment",
            s.path_wins as f64 / s.queries.max(1) as f64,
            0.0,
        )
        .record()
        .detail("max_relative_gain", s.max_gain),
    );
    report.push(
        Check::at_most(
            &format!("distance_triangle_inequality_independent_queries_m{m}"),
            "triangle inequality for independently smoothed single-pair queries",
            s.pairwise_triangle_excess,
            1e-9,
        )
        .record()
        .note("each query smooths its own path, so separate queries need not be mutually consistent"),
    );
    Ok(report)
}

#[derive(Default)]
struct Stats {
    asymmetry: f64,
    triangle_excess: f64,
    straight_excess: f64,
    pairwise_triangle_excess: f64,
    path_wins: usize,
    queries: usize,
    max_gain: f64,
}
