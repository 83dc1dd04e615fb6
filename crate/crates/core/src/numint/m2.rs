use nalgebra::{DMatrix, DVector};

use crate::lagrangian::LagrangianSystem;
use crate::symexpr::{Compiled, Expr, Sym, ZeroTest};

use super::{Boundary, Grid, NumIntError, NumericSection};

/// Leapfrog setup on `[0, t_end] × [0, 1]`. `x_1` is time, `x_2` space.
#[derive(Clone, Debug)]
pub struct M2Setup {
    pub dx: f64,
    /// Defaults to `dx / 2`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub boundary: Boundary,
    /// `φ^A(0, x_2)`, one expression per field in `x_2`.
    pub init_phi: Vec<Expr>,
    /// `∂φ^A/∂x_1(0, x_2)`.
    pub init_dphi: Vec<Expr>,
}

pub const CFL_DEFAULT: f64 = 0.5;

struct Accel {
    n: usize,
    a: Vec<Compiled>,
    r0: Vec<Compiled>,
}

impl Accel {
    /// Solves the field equations for `∂²φ/∂x_1²`, given everything else.
    fn eval(&self, slots: &[f64], out: &mut [f64]) -> bool {
        let n = self.n;
        if n == 1 {
            out[0] = -self.r0[0].eval(slots) / self.a[0].eval(slots);
            return out[0].is_finite();
        }
        let a = DMatrix::from_fn(n, n, |i, j| self.a[i * n + j].eval(slots));
        let b = DVector::from_fn(n, |i, _| -self.r0[i].eval(slots));
        match a.lu().solve(&b) {
            Some(x) => {
                out.copy_from_slice(x.as_slice());
                out.iter().all(|v| v.is_finite())
            }
            None => false,
        }
    }
}

fn layout(n: usize) -> Vec<Sym> {
    let mut l = vec![Sym::X(1), Sym::X(2)];
    l.extend((1..=n).map(|a| Sym::Y(a as u8)));
    for a in 1..=n {
        l.push(Sym::V(a as u8, 1));
        l.push(Sym::V(a as u8, 2));
    }
    l.extend((1..=n).map(|a| Sym::W(a as u8, 2, 2)));
    l
}

/// Hyperbolicity and the characteristic speed bound `max √(−L_{v2v2}/L_{v1v1})`.
fn wave_speed(sys: &LagrangianSystem, zt: &ZeroTest) -> Result<f64, NumIntError> {
    let n = sys.n();
    for a in 1..=n {
        for b in 1..=n {
            if !sys.hess(a, 1, b, 2).is_zero_structural() {
                return Err(NumIntError::MixedDerivative);
            }
        }
    }
    let syms = sys.chart().coords().to_vec();
    let mut c2max: f64 = 0.0;
    for pt in zt.points(&syms, 32) {
        let look = |s: Sym| syms.iter().position(|t| *t == s).map(|i| pt[i]);
        for a in 1..=n {
            let htt = sys.hess(a, 1, a, 1).eval_raw(&look)?;
            let hxx = sys.hess(a, 2, a, 2).eval_raw(&look)?;
            if !(htt > 0.0 && hxx < 0.0) {
                return Err(NumIntError::NotHyperbolic(format!(
                    "field {a}: velocity Hessian diagonal ({htt}, {hxx}) does not have signature (+, −)"
                )));
            }
            c2max = c2max.max(-hxx / htt);
        }
    }
    Ok(c2max.sqrt())
}

pub fn integrate_m2(sys: &LagrangianSystem, setup: &M2Setup, zt: &ZeroTest) -> Result<NumericSection, NumIntError> {
    if sys.m() != 2 {
        return Err(NumIntError::Dimension(sys.m()));
    }
    let n = sys.n();
    if setup.init_phi.len() != n || setup.init_dphi.len() != n {
        return Err(NumIntError::InitialData(format!(
            "expected {n} initial expressions each for φ and ∂φ/∂x_1"
        )));
    }
    for e in setup.init_phi.iter().chain(&setup.init_dphi) {
        if let Some(s) = e.free_symbols().into_iter().find(|s| *s != Sym::X(2)) {
            return Err(NumIntError::InitialData(format!(
                "initial data may depend on x_2 only; found {s}"
            )));
        }
    }
    if !(setup.dx > 0.0 && setup.t_end > 0.0) {
        return Err(NumIntError::InitialData("need dx > 0 and t_end > 0".into()));
    }
    let reg = sys.classify(zt)?;
    if !reg.is_regular() {
        return Err(NumIntError::NotRegular(reg.label()));
    }
    let c = wave_speed(sys, zt)?;
    let dx = setup.dx;
    let dt = setup.dt.unwrap_or(CFL_DEFAULT * dx);
    let limit = if c > 0.0 { dx / c } else { f64::INFINITY };
    if dt > limit * (1.0 + 1e-12) {
        return Err(NumIntError::Cfl { dt, limit });
    }

    // field equations, linear in the ∂²/∂x_1² symbols
    let el = sys.euler_lagrange_equations();
    let w11: Vec<Sym> = (1..=n).map(|a| Sym::W(a as u8, 1, 1)).collect();
    for r in &el {
        if (1..=n).any(|b| !r.diff(Sym::W(b as u8, 1, 2)).is_zero_structural()) {
            return Err(NumIntError::MixedDerivative);
        }
    }
    let lay = layout(n);
    let mut a = Vec::with_capacity(n * n);
    let mut r0 = Vec::with_capacity(n);
    for r in &el {
        for s in &w11 {
            a.push(Compiled::new(&r.diff(*s), &lay)?);
        }
        r0.push(Compiled::new(
            &r.subs_with(&|s| w11.contains(&s).then(Expr::zero)),
            &lay,
        )?);
    }
    let accel = Accel { n, a, r0 };

    let cells = (1.0 / dx).round() as usize;
    if cells < 8 {
        return Err(NumIntError::GridTooSmall);
    }
    let dx = 1.0 / cells as f64;
    let nx = if setup.boundary == Boundary::Dirichlet {
        cells + 1
    } else {
        cells
    };
    let steps = (setup.t_end / dt).round().max(1.0) as usize;
    let dt = setup.t_end / steps as f64;
    let grid = Grid {
        origin: [0.0, 0.0],
        step: [dt, dx],
        shape: [steps + 1, nx],
        boundary: setup.boundary,
    };
    let periodic = setup.boundary == Boundary::Periodic;

    let compile_x = |e: &Expr| Compiled::new(e, &[Sym::X(2)]);
    let mut phi0 = vec![vec![0.0; nx]; n];
    let mut vt0 = vec![vec![0.0; nx]; n];
    let mut vx0 = vec![vec![0.0; nx]; n];
    let mut wxx0 = vec![vec![0.0; nx]; n];
    for f in 0..n {
        let p = compile_x(&setup.init_phi[f])?;
        let px = compile_x(&setup.init_phi[f].diff(Sym::X(2)))?;
        let pxx = compile_x(&setup.init_phi[f].diff(Sym::X(2)).diff(Sym::X(2)))?;
        let d = compile_x(&setup.init_dphi[f])?;
        for j in 0..nx {
            let x = [j as f64 * dx];
            phi0[f][j] = p.eval(&x);
            vt0[f][j] = d.eval(&x);
            vx0[f][j] = px.eval(&x);
            wxx0[f][j] = pxx.eval(&x);
        }
    }
    if phi0.iter().chain(&vt0).flatten().any(|v| !v.is_finite()) {
        return Err(NumIntError::InitialData(
            "initial data is not finite on the grid".into(),
        ));
    }

    // rows[f][i] is the time slice i of field f
    let mut rows: Vec<Vec<Vec<f64>>> = (0..n).map(|f| vec![phi0[f].clone()]).collect();
    let mut slots = vec![0.0; lay.len()];
    let mut acc = vec![0.0; n];
    let fill = |slots: &mut [f64], t: f64, x: f64, y: &[f64], vt: &[f64], vx: &[f64], wxx: &[f64]| {
        slots[0] = t;
        slots[1] = x;
        for f in 0..n {
            slots[2 + f] = y[f];
            slots[2 + n + 2 * f] = vt[f];
            slots[2 + n + 2 * f + 1] = vx[f];
            slots[2 + 3 * n + f] = wxx[f];
        }
    };
    let interior = |j: usize| periodic || (j > 0 && j + 1 < nx);
    let blow_up = |rows: &Vec<Vec<Vec<f64>>>, at: f64| {
        let len = rows[0].len();
        let mut grid = grid.clone();
        grid.shape[0] = len;
        NumIntError::BlowUp {
            at,
            section: Box::new(NumericSection {
                m: 2,
                n,
                grid,
                phi: rows.iter().map(|r| r.concat()).collect(),
                scheme: "leapfrog",
            }),
        }
    };

    // first step: Taylor with the exact initial derivatives
    let mut acc0 = vec![vec![0.0; nx]; n];
    let mut next = vec![vec![0.0; nx]; n];
    let col = |arr: &Vec<Vec<f64>>, j: usize| -> Vec<f64> { arr.iter().map(|r| r[j]).collect() };
    for j in 0..nx {
        if !interior(j) {
            for f in 0..n {
                next[f][j] = phi0[f][j];
            }
            continue;
        }
        fill(
            &mut slots,
            0.0,
            j as f64 * dx,
            &col(&phi0, j),
            &col(&vt0, j),
            &col(&vx0, j),
            &col(&wxx0, j),
        );
        if !accel.eval(&slots, &mut acc) {
            return Err(blow_up(&rows, 0.0));
        }
        for f in 0..n {
            acc0[f][j] = acc[f];
            next[f][j] = phi0[f][j] + dt * vt0[f][j] + 0.5 * dt * dt * acc[f];
        }
    }
    for f in 0..n {
        rows[f].push(next[f].clone());
    }

    let (mut y, mut vt, mut vx, mut wxx) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for step in 1..steps {
        let t = step as f64 * dt;
        for j in 0..nx {
            if !interior(j) {
                for f in 0..n {
                    next[f][j] = phi0[f][j];
                }
                continue;
            }
            let (jm, jp) = if periodic {
                ((j + nx - 1) % nx, (j + 1) % nx)
            } else {
                (j - 1, j + 1)
            };
            for f in 0..n {
                let cur = &rows[f][step];
                let prev = &rows[f][step - 1];
                y[f] = cur[j];
                vx[f] = (cur[jp] - cur[jm]) / (2.0 * dx);
                wxx[f] = (cur[jp] - 2.0 * cur[j] + cur[jm]) / (dx * dx);
                vt[f] = if step == 1 {
                    vt0[f][j] + dt * acc0[f][j]
                } else {
                    (3.0 * cur[j] - 4.0 * prev[j] + rows[f][step - 2][j]) / (2.0 * dt)
                };
            }
            fill(&mut slots, t, j as f64 * dx, &y, &vt, &vx, &wxx);
            if !accel.eval(&slots, &mut acc) {
                return Err(blow_up(&rows, t));
            }
            for f in 0..n {
                next[f][j] = 2.0 * rows[f][step][j] - rows[f][step - 1][j] + dt * dt * acc[f];
            }
        }
        if next.iter().flatten().any(|v| !v.is_finite()) {
            return Err(blow_up(&rows, t + dt));
        }
        for f in 0..n {
            rows[f].push(next[f].clone());
        }
    }
    Ok(NumericSection {
        m: 2,
        n,
        grid,
        phi: rows.iter().map(|r| r.concat()).collect(),
        scheme: "leapfrog",
    })
}
