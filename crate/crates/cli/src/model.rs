use std::collections::BTreeMap;
use std::path::Path;

use multisym_core::geom::Chart;
use multisym_core::lagrangian::va_index;
use multisym_core::{parse_expr, Boundary, Expr, Sym, SymbolTable};

use crate::CliError;

/// A parsed model file.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub lagrangian: String,
    /// Velocities `v^A_α(x, y, p)` in field-major order, when supplied.
    pub inverse_legendre: Option<Vec<Expr>>,
    pub constraints: Vec<(String, Expr)>,
    /// A Hamiltonian on the restricted multimomentum chart for models whose
    /// Legendre map cannot be inverted.
    pub hamiltonian: Option<String>,
    pub numeric: Option<Numeric>,
}

#[derive(Clone, Debug)]
pub struct Numeric {
    /// Spatial cells (m = 2) or steps (m = 1); overrides `dx`.
    pub grid: Option<usize>,
    pub dt: Option<f64>,
    pub dx: Option<f64>,
    pub t_end: f64,
    pub bc: Boundary,
    pub init_phi: Vec<Expr>,
    pub init_dphi: Vec<Expr>,
    pub seed: Option<u64>,
    /// Exact solution in the base coordinates, one expression per field.
    pub exact: Option<Vec<Expr>>,
    pub tol: f64,
}

impl Numeric {
    /// The base step: `dx` for fields, the time step for mechanics.
    pub fn step(&self, m: usize) -> Option<f64> {
        if let Some(g) = self.grid {
            return Some(if m == 1 { self.t_end / g as f64 } else { 1.0 / g as f64 });
        }
        if m == 1 {
            self.dt.or(self.dx)
        } else {
            self.dx
        }
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Model { line, msg: msg.into() }
}

impl Model {
    pub fn load(path: &Path) -> Result<Model, CliError> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Model::parse(&src)
    }

    pub fn parse(src: &str) -> Result<Model, CliError> {
        let mut sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let text = raw.split('#').next().unwrap().trim();
            if text.is_empty() {
                continue;
            }
            if let Some(name) = text.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, "unterminated section header"))?
                    .trim();
                if !matches!(
                    name,
                    "model" | "lagrangian" | "inverse_legendre" | "constraints" | "hamiltonian" | "numeric"
                ) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                if sections.contains_key(name) {
                    return Err(err(line, format!("duplicate section [{name}]")));
                }
                sections.insert(name.to_string(), (line, BTreeMap::new()));
                current = Some(name.to_string());
                continue;
            }
            let sec = current
                .as_ref()
                .ok_or_else(|| err(line, "key outside of any section"))?;
            let (k, v) = text.split_once('=').ok_or_else(|| err(line, "expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(err(line, "empty key or value"));
            }
            let map = &mut sections.get_mut(sec).unwrap().1;
            if map
                .insert(
                    k.to_string(),
                    Entry {
                        line,
                        value: v.to_string(),
                    },
                )
                .is_some()
            {
                return Err(err(line, format!("duplicate key '{k}'")));
            }
        }

        let take = |sec: &str| sections.get(sec);
        let (mline, model) = take("model").ok_or_else(|| err(0, "missing [model] section"))?;
        let get = |map: &BTreeMap<String, Entry>, k: &str, line: usize| -> Result<(usize, String), CliError> {
            map.get(k)
                .map(|e| (e.line, e.value.clone()))
                .ok_or_else(|| err(line, format!("missing key '{k}'")))
        };
        let unknown = |map: &BTreeMap<String, Entry>, allowed: &[&str]| -> Result<(), CliError> {
            match map.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
                Some((k, e)) => Err(err(e.line, format!("unknown key '{k}'"))),
                None => Ok(()),
            }
        };
        unknown(model, &["name", "m", "N"])?;
        let name = get(model, "name", *mline)?.1;
        let (l, m) = get(model, "m", *mline)?;
        let m: usize = m.parse().map_err(|_| err(l, "m must be an integer"))?;
        if !(1..=3).contains(&m) {
            return Err(err(l, format!("m must be 1, 2 or 3 (got {m})")));
        }
        let (l, n) = get(model, "N", *mline)?;
        let n: usize = n.parse().map_err(|_| err(l, "N must be an integer"))?;
        if n == 0 || n > 9 {
            return Err(err(l, format!("N must be between 1 and 9 (got {n})")));
        }

        let (lline, lag) = take("lagrangian").ok_or_else(|| err(0, "missing [lagrangian] section"))?;
        unknown(lag, &["expr"])?;
        let (l, lagrangian) = get(lag, "expr", *lline)?;
        let jet = Chart::jet(m, n).table();
        parse_expr(&lagrangian, &jet).map_err(|e| err(l, e.to_string()))?;

        let restricted = Chart::restricted_multimomentum(m, n).table();
        let inverse_legendre = match take("inverse_legendre") {
            None => None,
            Some((_, map)) => {
                let mut vel = vec![None; n * m];
                for (k, e) in map {
                    let slot = match jet.lookup(k) {
                        Some(Sym::V(a, al)) => va_index(m, a as usize, al as usize),
                        _ => return Err(err(e.line, format!("'{k}' is not a velocity coordinate"))),
                    };
                    vel[slot] = Some(parse_expr(&e.value, &restricted).map_err(|x| err(e.line, x.to_string()))?);
                }
                let mut out = Vec::with_capacity(n * m);
                for (i, v) in vel.into_iter().enumerate() {
                    let (a, al) = (i / m + 1, i % m + 1);
                    out.push(v.ok_or_else(|| err(0, format!("[inverse_legendre] is missing v_{a}_{al}")))?);
                }
                Some(out)
            }
        };

        let constraints = match take("constraints") {
            None => vec![],
            Some((_, map)) => {
                let mut out: Vec<(usize, String, Expr)> = Vec::new();
                for (k, e) in map {
                    let c = parse_expr(&e.value, &restricted).map_err(|x| err(e.line, x.to_string()))?;
                    out.push((e.line, k.clone(), c));
                }
                out.sort_by_key(|(l, _, _)| *l);
                out.into_iter().map(|(_, k, c)| (k, c)).collect()
            }
        };

        let hamiltonian = match take("hamiltonian") {
            None => None,
            Some((hl, map)) => {
                unknown(map, &["expr"])?;
                let (l, h) = get(map, "expr", *hl)?;
                parse_expr(&h, &restricted).map_err(|x| err(l, x.to_string()))?;
                Some(h)
            }
        };

        let numeric = match take("numeric") {
            None => None,
            Some((nl, map)) => Some(parse_numeric(map, *nl, m, n)?),
        };

        Ok(Model {
            name,
            m,
            n,
            lagrangian,
            inverse_legendre,
            constraints,
            hamiltonian,
            numeric,
        })
    }
}

fn parse_numeric(map: &BTreeMap<String, Entry>, nline: usize, m: usize, n: usize) -> Result<Numeric, CliError> {
    const KEYS: [&str; 10] = [
        "grid",
        "dt",
        "dx",
        "t_end",
        "bc",
        "init_phi",
        "init_dphi",
        "seed",
        "exact",
        "tol",
    ];
    if let Some((k, e)) = map.iter().find(|(k, _)| !KEYS.contains(&k.as_str())) {
        return Err(err(e.line, format!("unknown key '{k}'")));
    }
    let float = |k: &str| -> Result<Option<f64>, CliError> {
        map.get(k)
            .map(|e| {
                e.value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v > 0.0)
                    .ok_or_else(|| err(e.line, format!("{k} must be a positive number")))
            })
            .transpose()
    };
    let grid = map
        .get("grid")
        .map(|e| {
            e.value
                .parse::<usize>()
                .ok()
                .filter(|g| *g > 0)
                .ok_or_else(|| err(e.line, "grid must be a positive integer"))
        })
        .transpose()?;
    let seed = map
        .get("seed")
        .map(|e| {
            e.value
                .parse::<u64>()
                .map_err(|_| err(e.line, "seed must be an unsigned integer"))
        })
        .transpose()?;
    let bc = match map.get("bc") {
        None => {
            if m == 1 {
                Boundary::None
            } else {
                Boundary::Periodic
            }
        }
        Some(e) => match e.value.as_str() {
            "periodic" => Boundary::Periodic,
            "dirichlet" => Boundary::Dirichlet,
            other => return Err(err(e.line, format!("bc must be periodic or dirichlet (got {other})"))),
        },
    };
    // initial data lives on the slice x_1 = 0; for mechanics it is a number
    let base = SymbolTable::new(m, n);
    let exprs = |k: &str, allow: &[Sym]| -> Result<Option<Vec<Expr>>, CliError> {
        let Some(e) = map.get(k) else { return Ok(None) };
        let parts: Vec<&str> = e.value.split(';').map(str::trim).collect();
        if parts.len() != n {
            return Err(err(e.line, format!("{k} needs {n} ';'-separated expressions")));
        }
        parts
            .iter()
            .map(|p| {
                let x = parse_expr(p, &base).map_err(|x| err(e.line, x.to_string()))?;
                if let Some(s) = x.free_symbols().into_iter().find(|s| !allow.contains(s)) {
                    return Err(err(e.line, format!("{k} may not depend on {s}")));
                }
                Ok(x)
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    };
    let slice: &[Sym] = if m == 1 { &[] } else { &[Sym::X(2)] };
    let all: Vec<Sym> = (1..=m as u8).map(Sym::X).collect();
    let t_end = float("t_end")?.ok_or_else(|| err(nline, "missing key 't_end'"))?;
    Ok(Numeric {
        grid,
        dt: float("dt")?,
        dx: float("dx")?,
        t_end,
        bc,
        init_phi: exprs("init_phi", slice)?.ok_or_else(|| err(nline, "missing key 'init_phi'"))?,
        init_dphi: exprs("init_dphi", slice)?.unwrap_or_else(|| vec![Expr::zero(); n]),
        seed,
        exact: exprs("exact", &all)?,
        tol: float("tol")?.unwrap_or(5e-3),
    })
}
