use crate::lagrangian::{g_index, LagrangianSystem};
use crate::symexpr::{Compiled, ZeroTest};

use super::{Boundary, Grid, NumIntError, NumericSection};

/// Classical RK4 for `y'' = G(x, y, y')` on `[x0, x_end]`. The step is
/// adjusted so the last point lands on `x_end`.
pub fn integrate_m1(
    sys: &LagrangianSystem,
    y0: &[f64],
    v0: &[f64],
    x0: f64,
    x_end: f64,
    h: f64,
    zt: &ZeroTest,
) -> Result<NumericSection, NumIntError> {
    if sys.m() != 1 {
        return Err(NumIntError::Dimension(sys.m()));
    }
    let n = sys.n();
    if y0.len() != n || v0.len() != n {
        return Err(NumIntError::InitialData(format!("expected {n} values for y and v")));
    }
    let usable = h > 0.0 && x_end > x0;
    if !usable {
        return Err(NumIntError::InitialData("need h > 0 and x_end > x0".into()));
    }
    let reg = sys.classify(zt)?;
    if !reg.is_regular() {
        return Err(NumIntError::NotRegular(reg.label()));
    }
    let el = sys.solve_el_coefficients(zt)?;
    if !el.obstructions.is_empty() {
        return Err(NumIntError::NotRegular("second-order system is obstructed".into()));
    }
    let layout = sys.chart().coords().to_vec();
    let accel: Vec<Compiled> = (1..=n)
        .map(|a| Compiled::new(&el.g[g_index(1, a, 1, 1)], &layout))
        .collect::<Result<_, _>>()?;

    let steps = ((x_end - x0) / h).round().max(1.0) as usize;
    let h = (x_end - x0) / steps as f64;
    let grid = Grid {
        origin: [x0, 0.0],
        step: [h, 1.0],
        shape: [steps + 1, 1],
        boundary: Boundary::None,
    };
    let mut phi = vec![Vec::with_capacity(steps + 1); n];

    // state = (y_1..y_N, v_1..v_N)
    let deriv = |x: f64, s: &[f64], out: &mut [f64], slots: &mut Vec<f64>| {
        slots.clear();
        slots.push(x);
        slots.extend_from_slice(s);
        for a in 0..n {
            out[a] = s[n + a];
            out[n + a] = accel[a].eval(slots);
        }
    };
    let mut s: Vec<f64> = y0.iter().chain(v0).copied().collect();
    let mut slots = Vec::with_capacity(1 + 2 * n);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]);
    let mut tmp = vec![0.0; 2 * n];
    for (a, col) in phi.iter_mut().enumerate() {
        col.push(s[a]);
    }
    for step in 0..steps {
        let x = x0 + step as f64 * h;
        deriv(x, &s, &mut k1, &mut slots);
        for i in 0..2 * n {
            tmp[i] = s[i] + 0.5 * h * k1[i];
        }
        deriv(x + 0.5 * h, &tmp, &mut k2, &mut slots);
        for i in 0..2 * n {
            tmp[i] = s[i] + 0.5 * h * k2[i];
        }
        deriv(x + 0.5 * h, &tmp, &mut k3, &mut slots);
        for i in 0..2 * n {
            tmp[i] = s[i] + h * k3[i];
        }
        deriv(x + h, &tmp, &mut k4, &mut slots);
        for i in 0..2 * n {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if s.iter().any(|v| !v.is_finite()) {
            let mut grid = grid.clone();
            grid.shape[0] = step + 1;
            return Err(NumIntError::BlowUp {
                at: x + h,
                section: Box::new(NumericSection {
                    m: 1,
                    n,
                    grid,
                    phi,
                    scheme: "rk4",
                }),
            });
        }
        for (a, col) in phi.iter_mut().enumerate() {
            col.push(s[a]);
        }
    }
    Ok(NumericSection {
        m: 1,
        n,
        grid,
        phi,
        scheme: "rk4",
    })
}
