//! Run configuration: a TOML file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use szego_core::calculus::FdScheme;
use szego_core::mobius::HelperMap;
use szego_core::quadrature::BoundarySurface;
use szego_core::szego::{KernelSpec, OrthoMode};
use szego_core::Signature;

use crate::error::{CliError, CliResult};

/// Environment variable naming the config file when `--config` is absent.
pub const CONFIG_ENV: &str = "SZEGO_CONFIG";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// The unit ball of `R^{m+1}`.
    Ball,
    /// The image of the unit ball under the helper Möbius map.
    Helper,
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ball => "ball",
            Self::Helper => "helper",
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ball" => Ok(Self::Ball),
            "helper" => Ok(Self::Helper),
            other => Err(format!("unknown domain '{other}' (expected ball or helper)")),
        }
    }
}

/// Optional settings, as read from a file or collected from flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub m: Option<usize>,
    pub degree: Option<u32>,
    pub quad_order: Option<usize>,
    pub fd_step: Option<f64>,
    pub curvature_step: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub domain: Option<Domain>,
    pub helper_pole_distance: Option<f64>,
    pub grid_step: Option<f64>,
    pub points: Option<usize>,
    pub mode: Option<String>,
}

impl Settings {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::ConfigRead { path: path.display().to_string(), source })?;
        toml::from_str(&text).map_err(|source| CliError::ConfigParse { path: path.display().to_string(), source })
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            m: over.m.or(self.m),
            degree: over.degree.or(self.degree),
            quad_order: over.quad_order.or(self.quad_order),
            fd_step: over.fd_step.or(self.fd_step),
            curvature_step: over.curvature_step.or(self.curvature_step),
            tol: over.tol.or(self.tol),
            seed: over.seed.or(self.seed),
            cache_dir: over.cache_dir.or(self.cache_dir),
            out: over.out.or(self.out),
            domain: over.domain.or(self.domain),
            helper_pole_distance: over.helper_pole_distance.or(self.helper_pole_distance),
            grid_step: over.grid_step.or(self.grid_step),
            points: over.points.or(self.points),
            mode: over.mode.or(self.mode),
        }
    }
}

/// Fully resolved and validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub m: usize,
    pub degree: u32,
    pub quad_order: usize,
    pub fd_step: f64,
    pub curvature_step: f64,
    pub tol: f64,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub domain: Domain,
    pub helper_pole_distance: f64,
    pub grid_step: f64,
    pub points: usize,
    #[serde(serialize_with = "serialize_mode")]
    pub mode: OrthoMode,
}

fn serialize_mode<S: serde::Serializer>(mode: &OrthoMode, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(mode.name())
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::resolve(Settings::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub const MAX_M: usize = 3;

    pub fn resolve(s: Settings) -> CliResult<Self> {
        let degree = s.degree.unwrap_or(8);
        let mode = match s.mode.as_deref() {
            None => OrthoMode::RealSpan,
            Some(text) => OrthoMode::parse(text).map_err(|e| CliError::Config(e.to_string()))?,
        };
        let cfg = Self {
            m: s.m.unwrap_or(2),
            degree,
            quad_order: s.quad_order.unwrap_or(2 * degree as usize + 2),
            fd_step: s.fd_step.unwrap_or(1e-4),
            curvature_step: s.curvature_step.unwrap_or(szego_core::metric::CURVATURE_STEP),
            tol: s.tol.unwrap_or(1e-6),
            seed: s.seed.unwrap_or(20_240_917),
            cache_dir: s.cache_dir,
            out: s.out,
            domain: s.domain.unwrap_or(Domain::Ball),
            helper_pole_distance: s.helper_pole_distance.unwrap_or(10.0),
            grid_step: s.grid_step.unwrap_or(0.1),
            points: s.points.unwrap_or(20),
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.m == 0 || self.m > Self::MAX_M {
            return bad(format!("m = {} is outside 1..={}", self.m, Self::MAX_M));
        }
        if self.degree == 0 {
            return bad("degree must be at least 1".into());
        }
        if self.quad_order < 2 * self.degree as usize + 2 {
            return bad(format!(
                "quadrature order {} is below 2N+2 = {} for degree {}",
                self.quad_order,
                2 * self.degree + 2,
                self.degree
            ));
        }
        if !(FdScheme::MIN_STEP..=FdScheme::MAX_STEP).contains(&self.fd_step) {
            return bad(format!("fd step {:e} outside [{:e}, {:e}]", self.fd_step, FdScheme::MIN_STEP, FdScheme::MAX_STEP));
        }
        if !(self.curvature_step > 0.0 && self.curvature_step < 0.1) {
            return bad(format!("curvature step {:e} must lie in (0, 0.1)", self.curvature_step));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tolerance {:e} must be positive", self.tol));
        }
        if !(self.helper_pole_distance > 1.0 && self.helper_pole_distance.is_finite()) {
            return bad(format!("helper pole distance {} must exceed 1", self.helper_pole_distance));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return bad(format!("grid step {} must lie in (0, 0.5]", self.grid_step));
        }
        if self.points == 0 {
            return bad("points must be at least 1".into());
        }
        Ok(())
    }

    pub fn signature(&self) -> Signature {
        Signature::new(self.m).expect("validated")
    }

    pub fn helper(&self) -> HelperMap {
        HelperMap::unit_image(self.helper_pole_distance)
    }

    pub fn surface(&self) -> CliResult<BoundarySurface> {
        let sig = self.signature();
        Ok(match self.domain {
            Domain::Ball => BoundarySurface::unit_ball(sig),
            Domain::Helper => BoundarySurface::mobius_image_of_unit_ball(self.helper().vahlen(sig)?)?,
        })
    }

    pub fn kernel_spec(&self) -> CliResult<KernelSpec> {
        let mut spec = KernelSpec::new(self.surface()?, self.degree, self.quad_order);
        spec.options.mode = self.mode;
        Ok(spec)
    }

    pub fn fd_scheme(&self) -> FdScheme {
        FdScheme::new(self.fd_step).expect("validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: Settings = toml::from_str("m = 1\ndegree = 5\ntol = 1e-8").unwrap();
        let flags = Settings { degree: Some(6), ..Settings::default() };
        let cfg = RunConfig::resolve(file.overlay(flags)).unwrap();
        assert_eq!((cfg.m, cfg.degree, cfg.quad_order, cfg.tol), (1, 6, 14, 1e-8));
    }

    #[test]
    fn low_quadrature_order_rejected() {
        let s = Settings { degree: Some(6), quad_order: Some(13), ..Settings::default() };
        assert!(matches!(RunConfig::resolve(s), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Settings>("order = 3").is_err());
    }

    #[test]
    fn m_bounded() {
        assert!(RunConfig::resolve(Settings { m: Some(4), ..Settings::default() }).is_err());
        assert!(RunConfig::resolve(Settings { m: Some(0), ..Settings::default() }).is_err());
    }
}
