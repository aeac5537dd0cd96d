//! On-disk cache of period data, keyed by curve coefficients, tolerances and marking.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::curve::{build_homology_basis, period_matrix, BasisScheme, HyperellipticCurve, PeriodData, PeriodExport, Tolerances};
use crate::error::Result;
use crate::kernels::KernelContext;

pub const CACHE_ENV: &str = "CONIC_SPECTRA_CACHE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
}

#[derive(Debug, Clone, Default)]
pub struct PeriodCache {
    dir: Option<PathBuf>,
}

pub fn cache_key(curve: &HyperellipticCurve, tol: Tolerances, scheme: BasisScheme) -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    for c in curve.coeffs() {
        h.update(c.re.to_bits().to_le_bytes());
        h.update(c.im.to_bits().to_le_bytes());
    }
    for t in [tol.period, tol.root, tol.separation] {
        h.update(t.to_bits().to_le_bytes());
    }
    h.update(format!("{scheme:?}").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl PeriodCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        PeriodCache { dir }
    }

    /// Directory from `CONIC_SPECTRA_CACHE`, if set and non-empty.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn file(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("periods-{key}.json")))
    }

    /// Period data for the curve, from disk when possible. Unreadable or stale
    /// entries are recomputed and overwritten; write failures are not fatal.
    pub fn periods(&self, curve: &HyperellipticCurve, scheme: BasisScheme) -> Result<(PeriodData, CacheStatus)> {
        let key = cache_key(curve, curve.tolerances(), scheme);
        let Some(path) = self.file(&key) else {
            let basis = build_homology_basis(curve, scheme)?;
            return Ok((period_matrix(curve, &basis)?, CacheStatus::Disabled));
        };
        if let Some(pd) = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str::<PeriodExport>(&t).ok())
            .filter(|e| e.scheme == scheme && e.genus == curve.genus())
            .and_then(|e| e.to_period_data().ok())
        {
            return Ok((pd, CacheStatus::Hit));
        }
        let basis = build_homology_basis(curve, scheme)?;
        let pd = period_matrix(curve, &basis)?;
        if let Ok(text) = serde_json::to_string(&pd.export(curve)) {
            let _ = std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")));
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            if std::fs::write(&tmp, text).is_ok() {
                let _ = std::fs::rename(&tmp, &path);
            }
        }
        Ok((pd, CacheStatus::Miss))
    }

    pub fn kernel_context(&self, curve: HyperellipticCurve, scheme: BasisScheme) -> Result<(KernelContext, CacheStatus)> {
        let (pd, status) = self.periods(&curve, scheme)?;
        let basis = build_homology_basis(&curve, scheme)?;
        Ok((KernelContext::from_parts(curve, basis, pd)?, status))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::quintic_test_curve;

    #[test]
    fn hit_reproduces_miss() {
        let dir = std::env::temp_dir().join(format!("conic-spectra-cache-test-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let cache = PeriodCache::new(Some(dir.clone()));
        let curve = quintic_test_curve().build(Tolerances::default()).unwrap();
        let (a, s1) = cache.periods(&curve, BasisScheme::Lexicographic).unwrap();
        let (b, s2) = cache.periods(&curve, BasisScheme::Lexicographic).unwrap();
        assert_eq!((s1, s2), (CacheStatus::Miss, CacheStatus::Hit));
        assert_eq!(a.export(&curve), b.export(&curve));
        assert_eq!(a.im_inv, b.im_inv);
        let other = cache_key(&curve, Tolerances::default().scaled(0.5), BasisScheme::Lexicographic);
        assert_ne!(other, cache_key(&curve, Tolerances::default(), BasisScheme::Lexicographic));
        // a corrupt entry is replaced
        let f = cache.file(&cache_key(&curve, curve.tolerances(), BasisScheme::Lexicographic)).unwrap();
        std::fs::write(&f, "{").unwrap();
        assert_eq!(cache.periods(&curve, BasisScheme::Lexicographic).unwrap().1, CacheStatus::Miss);
        let _ = std::fs::remove_dir_all(&dir);
    }
}
