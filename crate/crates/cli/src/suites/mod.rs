//! Verification suites. Each check carries a descriptive anchor naming the
//! identity or bound it exercises and, where applicable, the acceptance
//! criterion it gates.

mod algebra;
mod calculus;
mod caratheodory;
mod curvature;
mod distance;
mod kernel;
mod transformation;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use szego_core::metric::SzegoMetric;
use szego_core::quadrature::BoundarySurface;
use szego_core::szego::{KernelSpec, TruncatedSzegoKernel};
use szego_core::Paravector;

use crate::cache::load_or_build;
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{timed, SuiteReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Algebra,
    Calculus,
    Kernel,
    Transformation,
    Curvature,
    Caratheodory,
    Distance,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Self::Algebra,
        Self::Calculus,
        Self::Kernel,
        Self::Transformation,
        Self::Curvature,
        Self::Caratheodory,
        Self::Distance,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Algebra => "algebra",
            Self::Calculus => "calculus",
            Self::Kernel => "kernel",
            Self::Transformation => "transformation",
            Self::Curvature => "curvature",
            Self::Caratheodory => "caratheodory",
            Self::Distance => "distance",
            Self::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::EACH
            .into_iter()
            .chain([Self::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}'"))
    }
}

pub fn run(suite: Suite, cfg: &RunConfig) -> CliResult<SuiteReport> {
    if suite == Suite::All {
        let mut all = SuiteReport::new("all", cfg.m, cfg.seed);
        for s in Suite::EACH {
            all.extend(run(s, cfg)?);
        }
        return Ok(all);
    }
    let (report, secs) = timed(|| match suite {
        Suite::Algebra => algebra::run(cfg),
        Suite::Calculus => calculus::run(cfg),
        Suite::Kernel => kernel::run(cfg),
        Suite::Transformation => transformation::run(cfg),
        Suite::Curvature => curvature::run(cfg),
        Suite::Caratheodory => caratheodory::run(cfg),
        Suite::Distance => distance::run(cfg),
        Suite::All => unreachable!(),
    });
    let mut report = report?;
    report.runtime_seconds = secs;
    Ok(report)
}

/// Independent stream per check so adding a check does not perturb the others.
pub fn rng(cfg: &RunConfig, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    r.set_stream(stream);
    r
}

/// Uniform sample from the ball `|x − center| ≤ radius` in `R^dim`.
pub fn ball_point(rng: &mut impl Rng, center: &Paravector<f64>, radius: f64) -> Paravector<f64> {
    let dim = center.comps().len();
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 && n2 > 0.0 {
            let comps = center.comps().iter().zip(&v).map(|(c, x)| c + radius * x).collect();
            return Paravector::new(comps).expect("matching dimension");
        }
    }
}

pub fn ball_points(rng: &mut impl Rng, center: &Paravector<f64>, radius: f64, count: usize) -> Vec<Paravector<f64>> {
    (0..count).map(|_| ball_point(rng, center, radius)).collect()
}

pub(crate) fn kernel(cfg: &RunConfig, surface: BoundarySurface, degree: u32, quad_order: usize) -> CliResult<TruncatedSzegoKernel> {
    let mut spec = KernelSpec::new(surface, degree, quad_order);
    spec.options.mode = cfg.mode;
    Ok(load_or_build(spec, cfg.cache_dir.as_deref())?.0)
}

pub(crate) fn metric(cfg: &RunConfig, surface: BoundarySurface, degree: u32) -> CliResult<SzegoMetric> {
    Ok(SzegoMetric::new(kernel(cfg, surface, degree, 2 * degree as usize + 2)?))
}

pub(crate) fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |a: f64, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}
