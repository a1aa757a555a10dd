//! On-disk store of hitting profiles keyed by `(λ, n, u)`.
//!
//! File layout: header lines `version=1`, `lambda=`, `n=`, `u=`, `residual=`,
//! `method=`, then one `x<TAB>ln φ(x)` line per state.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use barw_core::solver::{hitting_profile, HARMONICITY_TOL};
use barw_core::{BarwError, HittingProfile, ModelParams, SolveMethod};

use crate::error::{CliError, CliResult};
use crate::output::fmt_f64;

pub const CACHE_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CacheLookup {
    Hit(HittingProfile),
    Miss,
    /// A file exists for the key but its version or residual disqualifies it.
    Stale(String),
}

#[derive(Clone, Debug)]
pub struct ProfileCache {
    dir: PathBuf,
}

struct Parsed {
    version: String,
    lambda: f64,
    n: usize,
    u: usize,
    residual: f64,
    method: SolveMethod,
    ln_phi: Vec<f64>,
}

impl ProfileCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ProfileCache { dir: dir.into() }
    }

    pub fn path_for(&self, lambda: f64, n: usize, u: usize) -> PathBuf {
        self.dir.join(format!("phi_lambda{lambda}_n{n}_u{u}.tsv"))
    }

    pub fn lookup(&self, params: &ModelParams, u: usize) -> CliResult<CacheLookup> {
        let path = self.path_for(params.lambda(), params.n(), u);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(CacheLookup::Miss),
            Err(source) => return Err(CliError::Io { path, source }),
        };
        let parsed = parse(&text, &path)?;
        if parsed.version != CACHE_VERSION.to_string() {
            return Ok(CacheLookup::Stale(format!("version {}", parsed.version)));
        }
        if parsed.lambda != params.lambda() || parsed.n != params.n() || parsed.u != u {
            return Ok(CacheLookup::Miss);
        }
        if !(parsed.residual <= HARMONICITY_TOL) {
            return Ok(CacheLookup::Stale(format!(
                "recorded residual {:e}",
                parsed.residual
            )));
        }
        if parsed.ln_phi.len() != u {
            return Err(parse_error(
                &path,
                0,
                format!("expected {u} entries, found {}", parsed.ln_phi.len()),
            ));
        }
        match HittingProfile::from_log_phi(*params, u, &parsed.ln_phi, parsed.method) {
            Ok(p) => Ok(CacheLookup::Hit(p)),
            Err(e @ (BarwError::SolverFailure { .. } | BarwError::Domain(_))) => {
                Ok(CacheLookup::Stale(format!("stored values rejected: {e}")))
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn store(&self, profile: &HittingProfile) -> CliResult<PathBuf> {
        let params = profile.params();
        let path = self.path_for(params.lambda(), params.n(), profile.u());
        let mut text = format!(
            "version={CACHE_VERSION}\nlambda={}\nn={}\nu={}\nresidual={}\nmethod={}\n",
            params.lambda(),
            params.n(),
            profile.u(),
            fmt_f64(profile.residual()),
            profile.method().as_str(),
        );
        for x in 0..profile.u() {
            text.push_str(&format!("{x}\t{}\n", fmt_f64(profile.ln_phi(x))));
        }
        let io = |source| CliError::Io {
            path: self.dir.clone(),
            source,
        };
        fs::create_dir_all(&self.dir).map_err(io)?;
        fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    /// Cached profile, or a fresh solve that is then stored. Refuses to
    /// overwrite a stale entry.
    pub fn get_or_solve(&self, params: &ModelParams, u: usize) -> CliResult<HittingProfile> {
        match self.lookup(params, u)? {
            CacheLookup::Hit(p) => Ok(p),
            CacheLookup::Stale(reason) => Err(CliError::StaleCache {
                path: self.path_for(params.lambda(), params.n(), u),
                reason,
            }),
            CacheLookup::Miss => {
                let p = hitting_profile(params, u)?;
                self.store(&p)?;
                Ok(p)
            }
        }
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    BarwError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
    .into()
}

fn parse(text: &str, path: &Path) -> CliResult<Parsed> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = |key: &str| -> CliResult<(usize, String)> {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_error(path, 0, format!("missing `{key}=` header")))?;
        match line.split_once('=') {
            Some((k, v)) if k == key => Ok((ln, v.to_string())),
            _ => Err(parse_error(
                path,
                ln,
                format!("expected `{key}=`, got `{line}`"),
            )),
        }
    };
    fn value<T: std::str::FromStr>(path: &Path, (ln, v): (usize, String), key: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        v.parse()
            .map_err(|e| parse_error(path, ln, format!("{key}: {e}")))
    }
    let version = header("version")?.1;
    let lambda = value(path, header("lambda")?, "lambda")?;
    let n = value(path, header("n")?, "n")?;
    let u = value(path, header("u")?, "u")?;
    let residual = value(path, header("residual")?, "residual")?;
    let method = value::<SolveMethod>(path, header("method")?, "method")?;
    let mut ln_phi = Vec::new();
    for (ln, line) in lines {
        let (x, v) = line.split_once('\t').ok_or_else(|| {
            parse_error(path, ln, format!("expected `x<TAB>log_phi`, got `{line}`"))
        })?;
        let x: usize = x
            .parse()
            .map_err(|e| parse_error(path, ln, format!("x: {e}")))?;
        if x != ln_phi.len() {
            return Err(parse_error(
                path,
                ln,
                format!("expected state {}, got {x}", ln_phi.len()),
            ));
        }
        let v: f64 = v
            .parse()
            .map_err(|e| parse_error(path, ln, format!("log_phi: {e}")))?;
        ln_phi.push(v);
    }
    Ok(Parsed {
        version,
        lambda,
        n,
        u,
        residual,
        method,
        ln_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp() -> ModelParams {
        ModelParams::new(2.0, 50).unwrap()
    }

    #[test]
    fn empty_dir_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ProfileCache::new(dir.path());
        assert!(matches!(
            cache.lookup(&mp(), 10).unwrap(),
            CacheLookup::Miss
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ProfileCache::new(dir.path());
        let fresh = cache.get_or_solve(&mp(), 10).unwrap();
        let CacheLookup::Hit(back) = cache.lookup(&mp(), 10).unwrap() else {
            panic!("expected a hit");
        };
        for x in 0..10 {
            assert_eq!(back.ln_phi(x).to_bits(), fresh.ln_phi(x).to_bits());
        }
        assert_eq!(back.method(), fresh.method());
    }

    fn rewrite(cache: &ProfileCache, f: impl Fn(&str) -> String) {
        let path = cache.path_for(2.0, 50, 10);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, f(&text)).unwrap();
    }

    #[test]
    fn tampered_lambda_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ProfileCache::new(dir.path());
        cache.get_or_solve(&mp(), 10).unwrap();
        rewrite(&cache, |t| t.replace("lambda=2\n", "lambda=2.5\n"));
        assert!(matches!(
            cache.lookup(&mp(), 10).unwrap(),
            CacheLookup::Miss
        ));
    }

    #[test]
    fn version_or_residual_mismatch_is_stale() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ProfileCache::new(dir.path());
        cache.get_or_solve(&mp(), 10).unwrap();
        rewrite(&cache, |t| t.replace("version=1\n", "version=0\n"));
        assert!(matches!(
            cache.lookup(&mp(), 10).unwrap(),
            CacheLookup::Stale(_)
        ));
        let err = cache.get_or_solve(&mp(), 10).unwrap_err();
        assert!(matches!(err, CliError::StaleCache { .. }));

        rewrite(&cache, |t| {
            let mut out: Vec<String> = t.lines().map(String::from).collect();
            out[0] = "version=1".into();
            out[4] = "residual=1e-3".into();
            out.join("\n") + "\n"
        });
        assert!(matches!(
            cache.lookup(&mp(), 10).unwrap(),
            CacheLookup::Stale(_)
        ));
    }

    #[test]
    fn corrupted_file_names_itself() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ProfileCache::new(dir.path());
        cache.get_or_solve(&mp(), 10).unwrap();
        rewrite(&cache, |t| t.replace("\t", " "));
        let err = cache.lookup(&mp(), 10).unwrap_err();
        let path = cache.path_for(2.0, 50, 10);
        assert!(
            err.to_string().contains(&path.display().to_string()),
            "{err}"
        );
        assert_eq!(err.exit_code(), 1);
    }
}
