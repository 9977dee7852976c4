//! On-disk kernel cache keyed by the content hash of the kernel spec.

use std::path::{Path, PathBuf};

use szego_core::szego::{KernelSpec, TruncatedSzegoKernel};

use crate::error::{CliError, CliResult};
use crate::report::write_atomic;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheOutcome {
    Loaded,
    Built,
    Disabled,
}

pub fn cache_path(dir: &Path, spec: &KernelSpec) -> PathBuf {
    dir.join(format!("{}.szk", spec.cache_key()))
}

/// Loads the kernel from `dir` when present, otherwise builds and stores it.
/// A file whose recorded key differs from `spec` is an error, never rebuilt over.
pub fn load_or_build(spec: KernelSpec, dir: Option<&Path>) -> CliResult<(TruncatedSzegoKernel, CacheOutcome)> {
    let Some(dir) = dir else {
        return Ok((TruncatedSzegoKernel::build(spec)?, CacheOutcome::Disabled));
    };
    let path = cache_path(dir, &spec);
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        let kernel = TruncatedSzegoKernel::from_cache(spec, &text)
            .map_err(|source| CliError::Cache { path: path.display().to_string(), source })?;
        return Ok((kernel, CacheOutcome::Loaded));
    }
    let kernel = TruncatedSzegoKernel::build(spec)?;
    write_atomic(&path, kernel.to_cache_string().as_bytes())?;
    Ok((kernel, CacheOutcome::Built))
}

#[cfg(test)]
mod tests {
    use super::*;
    use szego_core::quadrature::BoundarySurface;
    use szego_core::{Paravector, Signature};

    #[test]
    fn second_call_loads_identical_kernel() {
        let dir = std::env::temp_dir().join(format!("szego-cache-unit-{}", std::process::id()));
        let spec = KernelSpec::new(BoundarySurface::unit_ball(Signature::new(2).unwrap()), 3, 8);
        let (a, first) = load_or_build(spec.clone(), Some(&dir)).unwrap();
        let (b, second) = load_or_build(spec, Some(&dir)).unwrap();
        assert_eq!((first, second), (CacheOutcome::Built, CacheOutcome::Loaded));
        let z = Paravector::from_slice(&[0.1, -0.2, 0.3]).unwrap();
        assert_eq!(a.eval(&z, &z), b.eval(&z, &z));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
