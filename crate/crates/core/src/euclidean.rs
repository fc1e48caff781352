//! Euclidean ground state and the sharp constant `K_{q,d}`.
//!
//! The positive radial solution of `v'' + (d-1)/r v' = v - v^{q-1}` is found
//! by shooting on `a = v(0)`: too small an amplitude turns back up while still
//! positive, too large crosses zero. The quotient terms are accumulated along
//! the integration and the exponentially small tail beyond the cut is added
//! from the linearized decay `v ~ r^{-(d-1)/2} e^{-r}`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmlError};
use crate::exponents::{unit_sphere_area, ExponentSet};
use crate::quadrature::gauss_legendre4;

/// Relative amplitude at which the shot trajectory is cut and replaced by
/// its linear tail.
const TAIL_CUT: f64 = 1e-6;

/// Tolerance of the scaling stationarity check in [`kqd`].
pub const STATIONARITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGroundState {
    pub d: usize,
    pub q: f64,
    pub shoot_amplitude: f64,
    /// `ln(a/10⁻¹⁰) + 10`.
    pub radius_max: f64,
    /// Radius where the shot profile hands over to the analytic tail.
    pub cut_radius: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    /// `‖∇v‖₂²`.
    pub a_term: f64,
    /// `‖v‖₂²`.
    pub b_term: f64,
    /// `‖v‖_q²`.
    pub c_term: f64,
    /// `∫ v^q`.
    pub d_term: f64,
    pub bisection_steps: usize,
}

impl RadialGroundState {
    /// `(A + B)/C`.
    pub fn quotient(&self) -> f64 {
        (self.a_term + self.b_term) / self.c_term
    }

    /// `|(d-2)A + dB - (2d/q)(A+B)| / (A+B)`, the derivative of the quotient
    /// under `v ↦ v(·/σ)` at `σ = 1`, relative.
    pub fn stationarity_defect(&self) -> f64 {
        let d = self.d as f64;
        let s = self.a_term + self.b_term;
        ((d - 2.0) * self.a_term + d * self.b_term - 2.0 * d / self.q * s).abs() / s
    }

    /// `|A + B - ∫v^q| / (A+B)`: the Euler–Lagrange identity tested against `v`.
    pub fn virial_defect(&self) -> f64 {
        let s = self.a_term + self.b_term;
        (s - self.d_term).abs() / s
    }

    /// Profile value: cubic Hermite on the shot, analytic beyond it.
    pub fn value_at(&self, r: f64) -> f64 {
        if r >= self.cut_radius {
            return tail(self.d, self.cut_radius, *self.values.last().unwrap(), r);
        }
        let i = match self.radii.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => return self.values[i],
            Err(0) => return self.values[0],
            Err(i) => i - 1,
        };
        let h = self.radii[i + 1] - self.radii[i];
        let t = (r - self.radii[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.values[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1]
    }
}

fn tail(d: usize, r0: f64, v0: f64, r: f64) -> f64 {
    v0 * (r0 / r).powf((d as f64 - 1.0) / 2.0) * (-(r - r0)).exp()
}

fn nonlinearity(v: f64, q: f64) -> f64 {
    v - v.abs().powf(q - 2.0) * v
}

type State = [f64; 5];

/// `y = (v, v', ∫v'² r^{d-1}, ∫v² r^{d-1}, ∫|v|^q r^{d-1})`.
fn rhs(r: f64, y: &State, d: f64, q: f64) -> State {
    let rd = r.powf(d - 1.0);
    [
        y[1],
        nonlinearity(y[0], q) - (d - 1.0) / r * y[1],
        y[1] * y[1] * rd,
        y[0] * y[0] * rd,
        y[0].abs().powf(q) * rd,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    /// Turned upward while positive: amplitude too small.
    Under,
    /// Crossed zero: amplitude too large.
    Over,
    /// Reached the cut amplitude while still decreasing.
    Cut,
}

struct Shot {
    outcome: Outcome,
    radii: Vec<f64>,
    states: Vec<State>,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp45_step(r: f64, y: &State, h: f64, d: f64, q: f64) -> (State, f64) {
    let mut k = [[0.0; 5]; 7];
    k[0] = rhs(r, y, d, q);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for c in 0..5 {
                ys[c] += h * A[s][j] * kj[c];
            }
        }
        k[s] = rhs(r + C[s] * h, &ys, d, q);
    }
    let mut y5 = *y;
    let mut err = 0.0f64;
    for c in 0..5 {
        let mut inc5 = 0.0;
        let mut inc4 = 0.0;
        for s in 0..7 {
            inc5 += B5[s] * k[s][c];
            inc4 += B4[s] * k[s][c];
        }
        y5[c] += h * inc5;
        // error control on (v, v') only; the accumulated integrals follow
        if c < 2 {
            let scale = 1e-14 + 1e-12 * y[c].abs().max(y5[c].abs());
            err = err.max((h * (inc5 - inc4)).abs() / scale);
        }
    }
    (y5, err)
}

/// Series start `v = a + c₂r² + c₄r⁴` at a small radius.
fn series_start(a: f64, d: f64, q: f64) -> (f64, State) {
    let fa = nonlinearity(a, q);
    let dfa = 1.0 - (q - 1.0) * a.powf(q - 2.0);
    let c2 = fa / (2.0 * d);
    let c4 = dfa * c2 / (4.0 * (d + 2.0));
    let r0 = 1e-3 / (1.0 + a.powf((q - 2.0) / 2.0));
    let v = a + c2 * r0 * r0 + c4 * r0.powi(4);
    let dv = 2.0 * c2 * r0 + 4.0 * c4 * r0.powi(3);
    let y = [
        v,
        dv,
        4.0 * c2 * c2 * r0.powf(d + 2.0) / (d + 2.0),
        a * a * r0.powf(d) / d,
        a.powf(q) * r0.powf(d) / d,
    ];
    (r0, y)
}

fn shoot(a: f64, d: usize, q: f64, keep: bool) -> Result<Shot> {
    let df = d as f64;
    let (mut r, mut y) = series_start(a, df, q);
    let mut h = r;
    let mut radii = vec![0.0, r];
    let mut states = vec![[a, 0.0, 0.0, 0.0, 0.0], y];
    let cut = TAIL_CUT * a;
    for _ in 0..200_000 {
        let (y_new, err) = dp45_step(r, &y, h, df, q);
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            if h < 1e-14 {
                return Err(SmlError::NoConvergence { what: "radial shooting step", iterations: 0, residual: err });
            }
            continue;
        }
        r += h;
        y = y_new;
        if keep {
            radii.push(r);
            states.push(y);
        }
        if y[0] < 0.0 {
            return Ok(Shot { outcome: Outcome::Over, radii, states });
        }
        if y[1] > 0.0 {
            return Ok(Shot { outcome: Outcome::Under, radii, states });
        }
        if y[0] < cut {
            // an overshooting trajectory also passes through (0, cut)
            let rate = -y[1] / y[0];
            let expected = 1.0 + (df - 1.0) / (2.0 * r);
            if (rate - expected).abs() > 0.05 * expected {
                let outcome = if rate > expected { Outcome::Over } else { Outcome::Under };
                return Ok(Shot { outcome, radii, states });
            }
            if !keep {
                radii.push(r);
                states.push(y);
            }
            return Ok(Shot { outcome: Outcome::Cut, radii, states });
        }
        h *= (0.9 * err.max(1e-10).powf(-0.2)).min(5.0);
        h = h.min(0.25);
    }
    Err(SmlError::NoConvergence { what: "radial shooting", iterations: 200_000, residual: y[0] })
}

/// Ground state of `-Δv + v = v^{q-1}` in `ℝ^d` with amplitude bracketed to
/// relative `tol`.
pub fn shoot_ground_state(e: &ExponentSet, tol: f64) -> Result<RadialGroundState> {
    e.require_above_2()?;
    if !(tol > 0.0) {
        return Err(SmlError::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let (d, q) = (e.d, e.q);
    // a ≤ 1 turns upward immediately
    let mut lo = 1.0;
    let mut hi = 2.0;
    let mut expansions = 0;
    while shoot(hi, d, q, false)?.outcome != Outcome::Over {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 40 {
            return Err(SmlError::BracketFailure(format!("no overshooting amplitude below {hi} for d={d}, q={q}")));
        }
    }
    let mut steps = 0;
    let mut cut_shot = None;
    while hi - lo > tol.max(4.0 * f64::EPSILON) * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        steps += 1;
        let s = shoot(mid, d, q, false)?;
        match s.outcome {
            Outcome::Over => hi = mid,
            Outcome::Under => lo = mid,
            Outcome::Cut => {
                // already on the separatrix to the cut amplitude
                cut_shot = Some(mid);
                break;
            }
        }
        if steps > 200 {
            break;
        }
    }
    let a = cut_shot.unwrap_or(lo);
    let shot = shoot(a, d, q, true)?;
    // keep the stretch before the trajectory leaves the separatrix
    let mut end = shot.states.len() - 1;
    if shot.outcome != Outcome::Cut {
        // the residual unstable mode grows like e^{r}; back off to the last
        // point where the decay rate still matches the linear tail
        while end > 2 {
            let [v, dv, ..] = shot.states[end];
            let r = shot.radii[end];
            let rate = -dv / v;
            let expected = 1.0 + (d as f64 - 1.0) / (2.0 * r);
            if v > 0.0 && (rate - expected).abs() < 0.05 * expected {
                break;
            }
            end -= 1;
        }
    }
    let radii: Vec<f64> = shot.radii[..=end].to_vec();
    let states = &shot.states[..=end];
    let r_cut = radii[end];
    let [v_cut, dv_cut, a_int, b_int, d_int] = states[end];
    if !(v_cut > 0.0) || v_cut > 1e-3 * a {
        return Err(SmlError::NoConvergence { what: "ground-state tail matching", iterations: steps, residual: v_cut / a });
    }
    let area = unit_sphere_area(d - 1);
    let df = d as f64;
    let far = r_cut + 60.0;
    let tv = |r: f64| tail(d, r_cut, v_cut, r);
    let t_rate = |r: f64| 1.0 + (df - 1.0) / (2.0 * r);
    let scale_slope = if v_cut > 0.0 { -dv_cut / v_cut / t_rate(r_cut) } else { 1.0 };
    let a_tail = composite_gl4(&|r| (tv(r) * t_rate(r) * scale_slope).powi(2) * r.powf(df - 1.0), r_cut, far, 600);
    let b_tail = composite_gl4(&|r| tv(r).powi(2) * r.powf(df - 1.0), r_cut, far, 600);
    let d_tail = composite_gl4(&|r| tv(r).powf(q) * r.powf(df - 1.0), r_cut, far, 600);
    let a_term = area * (a_int + a_tail);
    let b_term = area * (b_int + b_tail);
    let d_term = area * (d_int + d_tail);
    Ok(RadialGroundState {
        d,
        q,
        shoot_amplitude: a,
        radius_max: (a / 1e-10).ln() + 10.0,
        cut_radius: r_cut,
        values: states.iter().map(|s| s[0]).collect(),
        slopes: states.iter().map(|s| s[1]).collect(),
        radii,
        a_term,
        b_term,
        c_term: d_term.powf(2.0 / q),
        d_term,
        bisection_steps: steps,
    })
}

fn composite_gl4(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| gauss_legendre4(f, a + i as f64 * h, a + (i + 1) as f64 * h)).sum()
}

/// Sharp constant `K_{q,d} = inf (‖∇v‖² + ‖v‖²)/‖v‖_q²` over `H¹(ℝ^d)`.
pub fn kqd(e: &ExponentSet) -> Result<f64> {
    Ok(kqd_with_state(e)?.0)
}

/// [`kqd`] together with the ground state it was computed from.
pub fn kqd_with_state(e: &ExponentSet) -> Result<(f64, RadialGroundState)> {
    let g = shoot_ground_state(e, 1e-15)?;
    let defect = g.stationarity_defect();
    if defect > STATIONARITY_TOLERANCE {
        return Err(SmlError::NoConvergence { what: "ground-state scaling stationarity", iterations: g.bisection_steps, residual: defect });
    }
    Ok((g.quotient(), g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::build_exponents;

    #[test]
    fn soliton_d1_q4() {
        let e = build_exponents(1, 4.0).unwrap();
        let g = shoot_ground_state(&e, 1e-15).unwrap();
        assert!((g.shoot_amplitude - 2f64.sqrt()).abs() < 1e-8);
        for r in [0.5f64, 1.0, 3.0, 8.0, 20.0] {
            let exact = 2f64.sqrt() / r.cosh();
            assert!((g.value_at(r) - exact).abs() < 1e-6 * 2f64.sqrt(), "r={r}");
        }
        // A = 2∫ 2 sech² tanh² = 4/3, B = 2∫ 2 sech² = 4
        assert!((g.a_term - 4.0 / 3.0).abs() < 1e-9);
        assert!((g.b_term - 4.0).abs() < 1e-9);
        assert!((g.quotient() - 4.0 / 3f64.sqrt()).abs() < 1e-9);
        assert!(g.stationarity_defect() < 1e-9);
        assert!(g.virial_defect() < 1e-9);
    }

    #[test]
    fn profile_decreases_and_is_small_at_radius_max() {
        let e = build_exponents(2, 4.0).unwrap();
        let g = shoot_ground_state(&e, 1e-15).unwrap();
        assert!(g.values.windows(2).all(|w| w[1] < w[0]));
        assert!(g.value_at(g.radius_max) <= 1e-8 * g.shoot_amplitude);
        assert!((g.shoot_amplitude - 2.2062).abs() < 1e-4);
    }

    #[test]
    fn rejects_below_two() {
        let e = build_exponents(2, 1.5).unwrap();
        assert!(shoot_ground_state(&e, 1e-10).is_err());
    }
}
