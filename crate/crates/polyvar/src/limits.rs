//! Desk-scale caps on input sizes.

use std::sync::OnceLock;

use crate::error::{PolyError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_dim: usize,
    pub max_pieces: usize,
    pub max_constraints: usize,
    pub max_terms: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_dim: 8,
            max_pieces: 16,
            max_constraints: 32,
            max_terms: 4,
        }
    }
}

impl Limits {
    /// Parses overrides such as `dim=10,pieces=32,constraints=64,terms=6`.
    pub fn parse_overrides(self, spec: &str) -> Result<Limits> {
        let mut out = self;
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| PolyError::Invalid(format!("bad limit override `{part}`")))?;
            let v: usize = v
                .trim()
                .parse()
                .map_err(|_| PolyError::Invalid(format!("bad limit value `{part}`")))?;
            match k.trim() {
                "dim" => out.max_dim = v,
                "pieces" => out.max_pieces = v,
                "constraints" => out.max_constraints = v,
                "terms" => out.max_terms = v,
                other => return Err(PolyError::Invalid(format!("unknown limit `{other}`"))),
            }
        }
        Ok(out)
    }

    /// Defaults, adjusted by the `POLYVAR_LIMITS` environment variable if set.
    pub fn from_env() -> Limits {
        static CACHE: OnceLock<Limits> = OnceLock::new();
        *CACHE.get_or_init(|| match std::env::var("POLYVAR_LIMITS") {
            Ok(s) => Limits::default().parse_overrides(&s).unwrap_or_default(),
            Err(_) => Limits::default(),
        })
    }

    pub fn check(&self, what: &'static str, found: usize, limit: usize) -> Result<()> {
        if found > limit {
            Err(PolyError::LimitExceeded { what, limit, found })
        } else {
            Ok(())
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        self.check("dimension", d, self.max_dim)
    }

    pub fn check_pieces(&self, p: usize) -> Result<()> {
        self.check("pieces", p, self.max_pieces)
    }

    pub fn check_constraints(&self, c: usize) -> Result<()> {
        self.check("constraints per piece", c, self.max_constraints)
    }

    pub fn check_terms(&self, t: usize) -> Result<()> {
        self.check("terms", t, self.max_terms)
    }
}
