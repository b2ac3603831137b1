//! Stagnant-film tip kinetics.
//!
//! The envelope speed follows from the 2D Ivantsov relation recast over a
//! stagnant film: the concentration difference across the film determines a
//! tip Peclet number, and the selection criterion `v = (Pe/Pe_iv)^2` turns it
//! into a dimensionless speed. All maps here are smooth and strictly monotone,
//! so inversion uses bracketed bisection refined by secant steps.

use crate::error::{Error, Result};

const SQRT_PI: f64 = 1.7724538509055160273;
const TWO_OVER_SQRT_PI: f64 = 1.1283791670955125739;

/// Below this Peclet the film difference is zero exactly; avoids the
/// 0 * inf cancellation in the prefactor.
const PE_TINY: f64 = 1e-8;

/// Complementary error function, accurate to ~1e-15 relative over the
/// argument range used here. Power series below 2, Lentz continued
/// fraction above.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 2.0 {
        erf_series(x)
    } else {
        1.0 - erfc_cf(x)
    }
}

/// erf(x) = (2x/sqrt(pi)) exp(-x^2) sum_n (2x^2)^n / (1*3*...*(2n+1)), x >= 0.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= 2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
        if term < 1e-18 * sum || n > 200 {
            break;
        }
    }
    TWO_OVER_SQRT_PI * x * (-x2).exp() * sum
}

/// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
/// evaluated with the modified Lentz algorithm, x >= 2.
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = tiny;
    let mut c = f;
    let mut d = 0.0;
    let mut n = 0u32;
    loop {
        let (a, b) = if n == 0 { (1.0, x) } else { (n as f64 / 2.0, x) };
        d = b + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = b + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        n += 1;
        if (delta - 1.0).abs() < 1e-17 || n > 300 {
            break;
        }
    }
    (-x * x).exp() / SQRT_PI * f
}

// 20-point Gauss-Legendre rule on [-1, 1]: positive abscissae and weights.
const GL_X: [f64; 10] = [
    0.0765265211334973,
    0.2277858511416451,
    0.3737060887154195,
    0.5108670019508271,
    0.6360536807265150,
    0.7463319064601508,
    0.8391169718222188,
    0.9122344282513259,
    0.9639719272779138,
    0.9931285991850949,
];
const GL_W: [f64; 10] = [
    0.1527533871307258,
    0.1491729864726037,
    0.1420961093183820,
    0.1316886384491766,
    0.1181945319615184,
    0.1019301198172404,
    0.0832767415767048,
    0.0626720483341091,
    0.0406014298003869,
    0.0176140071391521,
];

/// erf(b) - erf(a) evaluated as (2/sqrt(pi)) * integral of exp(-t^2) over
/// [a, b] with composite Gauss-Legendre quadrature. The quadrature form has
/// no cancellation, which matters at small Peclet where erfc(a) and erfc(b)
/// are both close to 1.
pub fn erf_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -erf_diff(b, a);
    }
    // exp(-t^2) < 3e-25 beyond 7.5: truncating there is far below the
    // accuracy of the quadrature and keeps wide film arguments cheap
    let b = b.min(7.5);
    if a >= b {
        return 0.0;
    }
    let segments = (((b - a) / 0.4).ceil() as usize).max(1);
    let seg_len = (b - a) / segments as f64;
    let mut total = 0.0;
    for s in 0..segments {
        let lo = a + s as f64 * seg_len;
        let mid = lo + 0.5 * seg_len;
        let half = 0.5 * seg_len;
        let mut acc = 0.0;
        for k in 0..10 {
            let dx = half * GL_X[k];
            acc += GL_W[k] * ((-(mid + dx) * (mid + dx)).exp() + (-(mid - dx) * (mid - dx)).exp());
        }
        total += acc * half;
    }
    TWO_OVER_SQRT_PI * total
}

/// Full 2D Ivantsov relation: supersaturation sustained by a free tip at
/// Peclet number `pe`.
pub fn ivantsov(pe: f64) -> f64 {
    if pe <= 0.0 {
        return 0.0;
    }
    let s = pe.sqrt();
    (SQRT_PI * s) * pe.exp() * erfc(s)
}

/// Stagnant-film Ivantsov relation: concentration difference across a film
/// of thickness parameter `delta`,
/// u_delta = sqrt(pi*Pe) exp(Pe) [erfc(sqrt(Pe)) - erfc(sqrt(Pe(1+delta*Pe)))].
pub fn u_delta_of_pe(pe: f64, delta: f64) -> Result<f64> {
    if pe < 0.0 {
        return Err(Error::Domain(format!("pe = {pe} must be nonnegative")));
    }
    if delta <= 0.0 {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    if pe < PE_TINY {
        return Ok(0.0);
    }
    let a = pe.sqrt();
    let b = (pe * (1.0 + delta * pe)).sqrt();
    Ok(SQRT_PI * a * pe.exp() * erf_diff(a, b))
}

/// Bracketed root of a strictly increasing function on [lo, hi]:
/// bisection with secant refinement.
fn solve_increasing<F>(f: F, mut lo: f64, mut hi: f64, tol: f64, what: &str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::Convergence(format!(
            "{what}: root not bracketed on [{lo}, {hi}]"
        )));
    }
    for iter in 0..200 {
        // Secant candidate on even iterations, bisection on odd ones so the
        // bracket is guaranteed to shrink.
        let mut x = if iter % 2 == 0 && f_hi != f_lo {
            lo - f_lo * (hi - lo) / (f_hi - f_lo)
        } else {
            0.5 * (lo + hi)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx.abs() <= tol || hi - lo < 1e-15 * hi.max(1.0) {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Peclet number of the free tip: the root of ivantsov(Pe) = omega0.
pub fn solve_pe_iv(omega0: f64, tol: f64) -> Result<f64> {
    if !(0.0 < omega0 && omega0 < 1.0) {
        return Err(Error::Domain(format!(
            "omega0 = {omega0} must lie in (0, 1)"
        )));
    }
    let mut hi = 10.0;
    while ivantsov(hi) < omega0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Convergence(
                "pe_iv bracket expansion failed".into(),
            ));
        }
    }
    solve_increasing(|pe| ivantsov(pe) - omega0, 0.0, hi, tol, "solve_pe_iv")
}

/// Invert the film relation: the unique Pe with u_delta_of_pe(Pe) = u_delta.
pub fn pe_of_u_delta(u_delta: f64, delta: f64, pe_max: f64, tol: f64) -> Result<f64> {
    if u_delta < 0.0 {
        return Err(Error::Domain(format!(
            "u_delta = {u_delta} must be nonnegative"
        )));
    }
    if u_delta == 0.0 {
        return Ok(0.0);
    }
    let u_max = u_delta_of_pe(pe_max, delta)?;
    if u_delta > u_max {
        return Err(Error::Saturated {
            u_delta,
            pe_max,
        });
    }
    solve_increasing(
        |pe| u_delta_of_pe(pe, delta).unwrap_or(f64::NAN) - u_delta,
        0.0,
        pe_max,
        tol,
        "pe_of_u_delta",
    )
}

/// Tip selection criterion: v = (Pe / Pe_iv)^2.
pub fn tip_speed(pe: f64, pe_iv: f64) -> Result<f64> {
    if pe < 0.0 {
        return Err(Error::Domain(format!("pe = {pe} must be nonnegative")));
    }
    if pe_iv <= 0.0 {
        return Err(Error::Domain(format!("pe_iv = {pe_iv} must be positive")));
    }
    let r = pe / pe_iv;
    Ok(r * r)
}

/// Immutable kinetics parameters shared by both solvers.
///
/// `delta` is the geometric stagnant-film thickness: the probe sits at
/// x + delta*n ahead of the envelope. The film relation itself takes the
/// thickness relative to the steady tip radius; in the dimensionless units
/// used here (tip selection R^2 v = const) that parameter is delta/Pe_iv^2.
/// Feeding the geometric delta straight into the relation would predict
/// initial speeds three orders of magnitude above the steady value and the
/// envelope would outrun its own diffusion field.
#[derive(Debug, Clone, Copy)]
pub struct KineticsParams {
    pub omega0: f64,
    pub delta: f64,
    pub pe_iv: f64,
    /// Film-thickness parameter passed to the Ivantsov film relation.
    pub film_delta: f64,
    pub pe_max: f64,
    pub tol: f64,
}

impl KineticsParams {
    pub fn new(omega0: f64, delta: f64, pe_max: f64, tol: f64) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::Domain(format!("delta = {delta} must be positive")));
        }
        let pe_iv = solve_pe_iv(omega0, tol)?;
        if !(pe_iv < pe_max) {
            return Err(Error::Domain(format!(
                "pe_max = {pe_max} must exceed pe_iv = {pe_iv}"
            )));
        }
        Ok(KineticsParams {
            omega0,
            delta,
            pe_iv,
            film_delta: delta / (pe_iv * pe_iv),
            pe_max,
            tol,
        })
    }

    /// Tip speed from a raw probe concentration: clamp to [0, omega0],
    /// invert the film relation, apply the selection criterion. Saturation
    /// above the invertible range falls back to pe_max.
    pub fn speed_from_probe(&self, u_probe: f64) -> Result<f64> {
        let u = u_probe.clamp(0.0, self.omega0);
        let pe = match pe_of_u_delta(u, self.film_delta, self.pe_max, self.tol) {
            Ok(pe) => pe,
            Err(Error::Saturated { .. }) => self.pe_max,
            Err(e) => return Err(e),
        };
        tip_speed(pe, self.pe_iv)
    }
}

/// Precomputed monotone u_probe -> v lookup, for the inner loops of both
/// drivers where inverting the film relation per probe would dominate the
/// step cost. Built once per run; linear interpolation on a log-spaced
/// Peclet grid keeps the relative error around 1e-5.
#[derive(Debug, Clone)]
pub struct SpeedTable {
    us: Vec<f64>,
    vs: Vec<f64>,
    omega0: f64,
}

impl SpeedTable {
    pub fn new(kin: &KineticsParams, points: usize) -> Result<Self> {
        let points = points.max(16);
        let pe_lo = 1e-9;
        let mut us = vec![0.0];
        let mut vs = vec![0.0];
        for k in 0..points {
            let pe = pe_lo * (kin.pe_max / pe_lo).powf(k as f64 / (points - 1) as f64);
            let u = u_delta_of_pe(pe, kin.film_delta)?;
            if u > *us.last().unwrap() {
                us.push(u);
                vs.push(tip_speed(pe, kin.pe_iv)?);
            }
        }
        Ok(SpeedTable {
            us,
            vs,
            omega0: kin.omega0,
        })
    }

    /// Same contract as `KineticsParams::speed_from_probe`: clamp to
    /// [0, omega0], invert, square the Peclet ratio; saturation above the
    /// tabulated range returns the largest tabulated speed.
    pub fn speed_from_probe(&self, u_probe: f64) -> f64 {
        let u = u_probe.clamp(0.0, self.omega0);
        match self.us.binary_search_by(|x| x.total_cmp(&u)) {
            Ok(i) => self.vs[i],
            Err(0) => self.vs[0],
            Err(i) if i == self.us.len() => *self.vs.last().unwrap(),
            Err(i) => {
                let f = (u - self.us[i - 1]) / (self.us[i] - self.us[i - 1]);
                self.vs[i - 1] + f * (self.vs[i] - self.vs[i - 1])
            }
        }
    }
}
