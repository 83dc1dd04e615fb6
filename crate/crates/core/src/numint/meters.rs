use nalgebra::{DMatrix, DVector};

use crate::fieldop::FieldOperator;
use crate::hamiltonian::HamiltonianSystem;
use crate::lagrangian::{g_index, va_index, LagrangianSystem};
use crate::symexpr::{Compiled, Expr, Sym};

use super::{Boundary, NumIntError, NumericSection};

/// Points closer than this to a non-periodic edge are not metered: nested
/// five-point stencils (momenta of difference quotients) need four.
pub const INTERIOR_MARGIN: usize = 4;

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

#[derive(Clone, Debug, PartialEq)]
pub struct MeterReport {
    pub name: String,
    pub max: f64,
    pub l2: f64,
    pub points: usize,
    /// Pointwise max-abs residual; NaN outside the metered interior.
    pub field: Vec<f64>,
}

impl MeterReport {
    fn from_field(name: &str, s: &NumericSection, field: Vec<f64>) -> MeterReport {
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        let mut points = 0;
        // serial accumulation in grid order keeps norms reproducible
        for v in field.iter().filter(|v| !v.is_nan()) {
            max = max.max(v.abs());
            sum += v * v;
            points += 1;
        }
        MeterReport {
            name: name.to_string(),
            max,
            l2: (sum * s.grid.cell(s.m)).sqrt(),
            points,
            field,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// The operator's own tables.
    Fixed,
    /// The member of the operator family closest to the section at each
    /// point (least squares over the homogeneous directions).
    Matched,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorResidual {
    pub f_family: MeterReport,
    pub g_family: MeterReport,
    pub h_family: Option<MeterReport>,
}

fn stencil(s: &NumericSection, arr: &[f64], axis: usize, c: &[f64; 5], scale: f64) -> Vec<f64> {
    let g = &s.grid;
    let [n0, n1] = g.shape;
    let periodic = axis == 1 && g.boundary == Boundary::Periodic;
    let mut out = vec![f64::NAN; arr.len()];
    for i in 0..n0 {
        for j in 0..n1 {
            let mut acc = 0.0;
            let mut ok = true;
            for (k, ck) in c.iter().enumerate() {
                if *ck == 0.0 {
                    continue;
                }
                let off = k as isize - 2;
                let (ii, jj) = if axis == 0 {
                    (i as isize + off, j as isize)
                } else {
                    (i as isize, j as isize + off)
                };
                let (ii, jj) = if periodic {
                    (ii, jj.rem_euclid(n1 as isize))
                } else {
                    (ii, jj)
                };
                if ii < 0 || jj < 0 || ii >= n0 as isize || jj >= n1 as isize {
                    ok = false;
                    break;
                }
                acc += ck * arr[g.index(ii as usize, jj as usize)];
            }
            if ok {
                out[g.index(i, j)] = acc / scale;
            }
        }
    }
    out
}

fn d1(s: &NumericSection, arr: &[f64], axis: usize) -> Vec<f64> {
    stencil(s, arr, axis, &D1, s.grid.step[axis])
}

fn d2(s: &NumericSection, arr: &[f64], axis: usize) -> Vec<f64> {
    stencil(s, arr, axis, &D2, s.grid.step[axis] * s.grid.step[axis])
}

fn metered(s: &NumericSection, i: usize, j: usize) -> bool {
    let [n0, n1] = s.grid.shape;
    let inside = |k: usize, n: usize| k >= INTERIOR_MARGIN && k + INTERIOR_MARGIN < n;
    inside(i, n0) && (s.m == 1 || s.grid.boundary == Boundary::Periodic || inside(j, n1))
}

/// `j²φ` by difference quotients: arrays in the order of `layout`.
struct Jet {
    layout: Vec<Sym>,
    arrays: Vec<Vec<f64>>,
}

impl Jet {
    fn new(sys: &LagrangianSystem, s: &NumericSection) -> Jet {
        let (m, n) = (s.m, s.n);
        let mut layout = sys.chart().coords().to_vec();
        let mut arrays = Vec::new();
        for al in 0..m {
            let mut c = vec![0.0; s.grid.len()];
            for i in 0..s.grid.shape[0] {
                for j in 0..s.grid.shape[1] {
                    c[s.grid.index(i, j)] = s.grid.coord(i, j)[al];
                }
            }
            arrays.push(c);
        }
        arrays.extend(s.phi.iter().cloned());
        for a in 0..n {
            for al in 0..m {
                arrays.push(d1(s, &s.phi[a], al));
            }
        }
        for a in 1..=n {
            for al in 1..=m {
                for nu in al..=m {
                    layout.push(Sym::W(a as u8, al as u8, nu as u8));
                    let phi = &s.phi[a - 1];
                    arrays.push(if al == nu {
                        d2(s, phi, al - 1)
                    } else {
                        d1(s, &d1(s, phi, al - 1), nu - 1)
                    });
                }
            }
        }
        Jet { layout, arrays }
    }

    fn slots(&self, k: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.arrays.iter().map(|a| a[k]));
    }

    fn compile(&self, e: &Expr) -> Result<Compiled, NumIntError> {
        Ok(Compiled::new(e, &self.layout)?)
    }

    /// Pointwise values of a jet function, NaN where the jet is unknown.
    fn eval_array(&self, e: &Expr, s: &NumericSection) -> Result<Vec<f64>, NumIntError> {
        let c = self.compile(e)?;
        let needed = e.free_symbols();
        let used: Vec<usize> = (0..self.layout.len())
            .filter(|i| needed.contains(&self.layout[*i]))
            .collect();
        let mut slots = Vec::new();
        Ok((0..s.grid.len())
            .map(|k| {
                self.slots(k, &mut slots);
                if used.iter().any(|i| slots[*i].is_nan()) {
                    f64::NAN
                } else {
                    c.eval(&slots)
                }
            })
            .collect())
    }
}

fn check_shape(sys: &LagrangianSystem, s: &NumericSection) -> Result<(), NumIntError> {
    if sys.m() != s.m || sys.n() != s.n {
        return Err(NumIntError::InitialData(
            "section does not match the system dimensions".into(),
        ));
    }
    if s.grid.shape[0] <= 2 * INTERIOR_MARGIN {
        return Err(NumIntError::GridTooSmall);
    }
    Ok(())
}

fn max_abs(vals: impl Iterator<Item = f64>) -> f64 {
    vals.fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Euler–Lagrange residuals with difference-quotient derivatives.
pub fn el_residual(sys: &LagrangianSystem, s: &NumericSection) -> Result<MeterReport, NumIntError> {
    check_shape(sys, s)?;
    let jet = Jet::new(sys, s);
    let eqs: Vec<Compiled> = sys
        .euler_lagrange_equations()
        .iter()
        .map(|e| jet.compile(e))
        .collect::<Result<_, _>>()?;
    let mut field = vec![f64::NAN; s.grid.len()];
    let mut slots = Vec::new();
    for i in 0..s.grid.shape[0] {
        for j in 0..s.grid.shape[1] {
            if !metered(s, i, j) {
                continue;
            }
            let k = s.grid.index(i, j);
            jet.slots(k, &mut slots);
            field[k] = max_abs(eqs.iter().map(|c| c.eval(&slots)));
        }
    }
    Ok(MeterReport::from_field("el_residual", s, field))
}

/// Momenta `∂L/∂v` and affine momentum along `j¹φ`.
fn momenta(sys: &LagrangianSystem, s: &NumericSection, jet: &Jet) -> Result<(Vec<Vec<f64>>, Vec<f64>), NumIntError> {
    let (m, n) = (s.m, s.n);
    let mut p = Vec::with_capacity(n * m);
    for a in 1..=n {
        for eta in 1..=m {
            p.push(jet.eval_array(sys.dl_dv(a, eta), s)?);
        }
    }
    let pa = jet.eval_array(&sys.energy_term(), s)?;
    Ok((p, pa))
}

/// The three component families of the integral-section system for `k`
/// along `j¹φ`: contact (`∂φ/∂x − f`), momenta (`∂(p∘j¹φ)/∂x^α − g`) and
/// affine momentum (`∂(p∘j¹φ)/∂x^α − h`).
pub fn operator_residual(
    k: &FieldOperator,
    sys: &LagrangianSystem,
    s: &NumericSection,
    gauge: Gauge,
) -> Result<OperatorResidual, NumIntError> {
    check_shape(sys, s)?;
    let (m, n) = (s.m, s.n);
    let jet = Jet::new(sys, s);
    let (p, pa) = momenta(sys, s, &jet)?;
    let dp: Vec<Vec<Vec<f64>>> = p.iter().map(|arr| (0..m).map(|al| d1(s, arr, al)).collect()).collect();
    let dpa: Vec<Vec<f64>> = (0..m).map(|al| d1(s, &pa, al)).collect();
    let dphi: Vec<Vec<Vec<f64>>> = s
        .phi
        .iter()
        .map(|arr| (0..m).map(|al| d1(s, arr, al)).collect())
        .collect();

    let f_c: Vec<Compiled> = k.f_table().iter().map(|e| jet.compile(e)).collect::<Result<_, _>>()?;
    let g_c: Vec<Compiled> = k.g_table().iter().map(|e| jet.compile(e)).collect::<Result<_, _>>()?;
    let h_c: Option<Vec<Compiled>> = match k.h_table() {
        Some(h) => Some(h.iter().map(|e| jet.compile(e)).collect::<Result<_, _>>()?),
        None => None,
    };
    let ng = n * m * m;
    let kernel: Vec<Vec<Compiled>> = match gauge {
        Gauge::Fixed => Vec::new(),
        Gauge::Matched => k
            .kernel()
            .iter()
            .map(|b| b.iter().map(|e| jet.compile(e)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?,
    };

    let len = s.grid.len();
    let (mut ff, mut gf, mut hf) = (vec![f64::NAN; len], vec![f64::NAN; len], vec![f64::NAN; len]);
    let mut slots = Vec::new();
    let mut target = vec![0.0; ng];
    let mut g0 = vec![0.0; ng];
    for i in 0..s.grid.shape[0] {
        for j in 0..s.grid.shape[1] {
            if !metered(s, i, j) {
                continue;
            }
            let idx = s.grid.index(i, j);
            jet.slots(idx, &mut slots);
            let mut fmax: f64 = 0.0;
            for a in 1..=n {
                for al in 1..=m {
                    let r = dphi[a - 1][al - 1][idx] - f_c[va_index(m, a, al)].eval(&slots);
                    fmax = fmax.max(r.abs());
                }
            }
            ff[idx] = fmax;
            for a in 1..=n {
                for eta in 1..=m {
                    for al in 1..=m {
                        let gi = g_index(m, a, eta, al);
                        target[gi] = dp[va_index(m, a, eta)][al - 1][idx];
                        g0[gi] = g_c[gi].eval(&slots);
                    }
                }
            }
            let mut coeffs: Vec<f64> = Vec::new();
            let mut resid: Vec<f64> = target.iter().zip(&g0).map(|(t, g)| t - g).collect();
            if !kernel.is_empty() {
                let kmat = DMatrix::from_fn(ng, kernel.len(), |r, c| kernel[c][r].eval(&slots));
                let rhs = DVector::from_column_slice(&resid);
                let finite = kmat.iter().chain(rhs.iter()).all(|v| v.is_finite());
                if let Some(c) = finite
                    .then(|| kmat.clone().svd(true, true).solve(&rhs, 1e-12).ok())
                    .flatten()
                {
                    let fit = &kmat * &c;
                    for (r, f) in resid.iter_mut().zip(fit.iter()) {
                        *r -= f;
                    }
                    coeffs = c.iter().copied().collect();
                }
            }
            gf[idx] = max_abs(resid.into_iter());
            if let Some(h_c) = &h_c {
                let mut hmax: f64 = 0.0;
                for al in 0..m {
                    let mut h = h_c[al].eval(&slots);
                    for (c, b) in coeffs.iter().zip(&kernel) {
                        h += c * b[ng + al].eval(&slots);
                    }
                    hmax = hmax.max((dpa[al][idx] - h).abs());
                }
                hf[idx] = hmax;
            }
        }
    }
    Ok(OperatorResidual {
        f_family: MeterReport::from_field("operator_residual.f", s, ff),
        g_family: MeterReport::from_field("operator_residual.g", s, gf),
        h_family: h_c.map(|_| MeterReport::from_field("operator_residual.h", s, hf)),
    })
}

/// HDW residuals along `ψ = (φ, ∂L/∂v∘j¹φ)`.
pub fn hdw_residual(
    hs: &HamiltonianSystem,
    sys: &LagrangianSystem,
    s: &NumericSection,
) -> Result<MeterReport, NumIntError> {
    check_shape(sys, s)?;
    let (m, n) = (s.m, s.n);
    let jet = Jet::new(sys, s);
    let (p, _) = momenta(sys, s, &jet)?;

    let mut layout = hs.chart().coords().to_vec();
    let mut arrays: Vec<Vec<f64>> = jet.arrays[..m + n].to_vec();
    arrays.extend(p.iter().cloned());
    for a in 1..=n {
        for al in 1..=m {
            layout.push(Sym::U(a as u8, al as u8));
            arrays.push(d1(s, &s.phi[a - 1], al - 1));
        }
    }
    for a in 1..=n {
        for eta in 1..=m {
            for be in 1..=m {
                layout.push(Sym::Q(a as u8, eta as u8, be as u8));
                arrays.push(d1(s, &p[va_index(m, a, eta)], be - 1));
            }
        }
    }
    let (vel, div) = hs.hdw_equations();
    let eqs: Vec<Compiled> = vel
        .iter()
        .chain(&div)
        .map(|e| Compiled::new(e, &layout))
        .collect::<Result<_, _>>()?;
    let mut field = vec![f64::NAN; s.grid.len()];
    let mut slots = Vec::with_capacity(layout.len());
    for i in 0..s.grid.shape[0] {
        for j in 0..s.grid.shape[1] {
            if !metered(s, i, j) {
                continue;
            }
            let k = s.grid.index(i, j);
            slots.clear();
            slots.extend(arrays.iter().map(|a| a[k]));
            field[k] = max_abs(eqs.iter().map(|c| c.eval(&slots)));
        }
    }
    Ok(MeterReport::from_field("hdw_residual", s, field))
}

/// Relative drift of `∫ (v^A_1 ∂L/∂v^A_1 − L) dx_2` over the time slices
/// where the derivatives are available.
pub fn energy_drift(sys: &LagrangianSystem, s: &NumericSection) -> Result<f64, NumIntError> {
    check_shape(sys, s)?;
    let jet = Jet::new(sys, s);
    let dens = Expr::add_all((1..=s.n).map(|a| Expr::sym(Sym::V(a as u8, 1)) * sys.dl_dv(a, 1))) - sys.lagrangian();
    let e = jet.eval_array(&dens, s)?;
    let [n0, n1] = s.grid.shape;
    let w = if s.m == 1 { 1.0 } else { s.grid.step[1] };
    let mut totals = Vec::new();
    for i in 0..n0 {
        let row: Vec<f64> = (0..n1).map(|j| e[s.grid.index(i, j)]).collect();
        let vals: Vec<f64> = if s.m == 2 && s.grid.boundary != Boundary::Periodic {
            row[INTERIOR_MARGIN..n1 - INTERIOR_MARGIN].to_vec()
        } else {
            row
        };
        if vals.iter().all(|v| v.is_finite()) {
            totals.push(vals.iter().sum::<f64>() * w);
        }
    }
    let Some(first) = totals.first().copied() else {
        return Err(NumIntError::GridTooSmall);
    };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    Ok(totals.iter().map(|t| (t - first).abs()).fold(0.0, f64::max) / scale)
}
