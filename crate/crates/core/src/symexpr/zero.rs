//! Zero testing: structural first, then seeded random sampling.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::{Expr, Node};
use super::symbol::Sym;
use super::ExprError;

pub const DEFAULT_SEED: u64 = 0x5eed_2003;

/// Sampling box and thresholds for probabilistic zero tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroTest {
    pub seed: u64,
    pub samples: usize,
    pub lo: f64,
    pub hi: f64,
    /// Draws with `|value| < exclude` are rejected.
    pub exclude: f64,
    /// Relative tolerance against the summed term magnitudes.
    pub rel_tol: f64,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest {
            seed: DEFAULT_SEED,
            samples: 128,
            lo: -2.0,
            hi: 2.0,
            exclude: 1e-3,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Evidence {
    Structural,
    Probabilistic { samples: usize, max_rel: f64 },
    Witness { point: Vec<(Sym, f64)>, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroCheck {
    pub zero: bool,
    pub evidence: Evidence,
}

impl ZeroCheck {
    pub fn structural(&self) -> bool {
        matches!(self.evidence, Evidence::Structural)
    }

    pub fn kind(&self) -> &'static str {
        match self.evidence {
            Evidence::Structural => "structural",
            Evidence::Probabilistic { .. } => "probabilistic",
            Evidence::Witness { .. } => "probabilistic",
        }
    }
}

/// Upper bound on |e| built from the magnitudes of its terms.
fn magnitude(e: &Expr, lookup: &dyn Fn(Sym) -> Option<f64>) -> f64 {
    match e.node() {
        Node::Add(ts) => ts.iter().map(|t| magnitude(t, lookup)).sum(),
        Node::Mul(fs) => fs.iter().map(|f| magnitude(f, lookup)).product(),
        _ => e.eval_raw(lookup).map(f64::abs).unwrap_or(f64::NAN),
    }
}

impl ZeroTest {
    pub fn with_seed(seed: u64) -> Self {
        ZeroTest {
            seed,
            ..Self::default()
        }
    }

    /// Deterministic sample points for `syms`; the stream depends only on the
    /// seed and the symbol list.
    pub fn points(&self, syms: &[Sym], count: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count)
            .map(|_| syms.iter().map(|_| self.draw(&mut rng)).collect())
            .collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let v: f64 = rng.random_range(self.lo..self.hi);
            if v.abs() >= self.exclude {
                return v;
            }
        }
    }

    pub fn is_zero(&self, e: &Expr) -> Result<ZeroCheck, ExprError> {
        if e.is_zero_structural() {
            return Ok(ZeroCheck {
                zero: true,
                evidence: Evidence::Structural,
            });
        }
        let syms: Vec<Sym> = e.free_symbols().into_iter().collect();
        if syms.is_empty() {
            // nonzero rational constant, or an unevaluated constant expression
            let v = e.eval_raw(&|_| None)?;
            return Ok(ZeroCheck {
                zero: v == 0.0,
                evidence: if v == 0.0 {
                    Evidence::Probabilistic {
                        samples: 1,
                        max_rel: 0.0,
                    }
                } else {
                    Evidence::Witness {
                        point: vec![],
                        value: v,
                    }
                },
            });
        }
        let mut nonfinite = 0usize;
        let mut max_rel: f64 = 0.0;
        for pt in self.points(&syms, self.samples) {
            let lookup = |s: Sym| syms.iter().position(|t| *t == s).map(|i| pt[i]);
            let v = e.eval_raw(&lookup)?;
            let scale = magnitude(e, &lookup);
            if !v.is_finite() || !scale.is_finite() {
                nonfinite += 1;
                continue;
            }
            let rel = if scale > 0.0 { v.abs() / scale } else { 0.0 };
            if rel > self.rel_tol {
                return Ok(ZeroCheck {
                    zero: false,
                    evidence: Evidence::Witness {
                        point: syms.iter().copied().zip(pt.iter().copied()).collect(),
                        value: v,
                    },
                });
            }
            max_rel = max_rel.max(rel);
        }
        if nonfinite * 2 > self.samples {
            return Err(ExprError::Domain {
                nonfinite,
                total: self.samples,
            });
        }
        Ok(ZeroCheck {
            zero: true,
            evidence: Evidence::Probabilistic {
                samples: self.samples - nonfinite,
                max_rel,
            },
        })
    }

    /// Convenience: `true` iff `is_zero` succeeds and reports zero.
    pub fn zero(&self, e: &Expr) -> bool {
        self.is_zero(e).map(|c| c.zero).unwrap_or(false)
    }

    /// `a - b` is zero.
    pub fn equal(&self, a: &Expr, b: &Expr) -> bool {
        self.zero(&(a - b))
    }

    /// Checks every expression, returning the first failure.
    pub fn all_zero<'a, I: IntoIterator<Item = &'a Expr>>(&self, es: I) -> Result<ZeroCheck, ExprError> {
        let mut structural = true;
        let mut samples = 0;
        let mut max_rel: f64 = 0.0;
        for e in es {
            let c = self.is_zero(e)?;
            if !c.zero {
                return Ok(c);
            }
            if let Evidence::Probabilistic { samples: s, max_rel: r } = c.evidence {
                structural = false;
                samples = samples.max(s);
                max_rel = max_rel.max(r);
            }
        }
        Ok(ZeroCheck {
            zero: true,
            evidence: if structural {
                Evidence::Structural
            } else {
                Evidence::Probabilistic { samples, max_rel }
            },
        })
    }
}

/// Union of the free symbols of several expressions, sorted.
pub fn symbols_of<'a, I: IntoIterator<Item = &'a Expr>>(es: I) -> Vec<Sym> {
    let mut set = BTreeSet::new();
    for e in es {
        set.extend(e.free_symbols());
    }
    set.into_iter().collect()
}
