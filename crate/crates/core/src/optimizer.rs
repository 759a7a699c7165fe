//! Box-constrained Nelder-Mead.
//!
//! Every trial point is clipped componentwise onto the box before it is
//! evaluated. One iteration is one reflect/expand/contract/shrink cycle.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Simplex diameter below which the search is reported as degenerate.
pub const DEGENERATE_DIAMETER: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmCoefficients<T> {
    pub reflection: T,
    pub expansion: T,
    pub contraction: T,
    pub shrink: T,
}

impl<T: Real> Default for NmCoefficients<T> {
    fn default() -> Self {
        NmCoefficients { reflection: T::one(), expansion: T::lit(2.0), contraction: T::lit(0.5), shrink: T::lit(0.5) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmOptions<T> {
    pub max_iterations: usize,
    pub coefficients: NmCoefficients<T>,
    /// Initial vertex offset as a fraction of each coordinate's range.
    pub initial_step: T,
    pub f_tolerance: T,
    pub x_tolerance: T,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub trace: bool,
}

impl<T: Real> NmOptions<T> {
    /// Defaults with the same box `[lower, upper]` for all `dim` coordinates.
    pub fn with_box(dim: usize, lower: T, upper: T) -> Self {
        NmOptions {
            max_iterations: 100,
            coefficients: NmCoefficients::default(),
            initial_step: T::lit(0.05),
            f_tolerance: T::lit(1e-12),
            x_tolerance: T::lit(1e-12),
            lower: vec![lower; dim],
            upper: vec![upper; dim],
            trace: true,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let c = &self.coefficients;
        let bad = |m: &str| Err(Error::InvalidInput(format!("Nelder-Mead options: {m}")));
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(c.reflection > T::zero()
            && c.expansion > T::one()
            && c.expansion > c.reflection
            && c.contraction > T::zero()
            && c.contraction < T::one()
            && c.shrink > T::zero()
            && c.shrink < T::one())
        {
            return bad("coefficients need ρ > 0, χ > max(1, ρ), 0 < ψ < 1, 0 < σ < 1");
        }
        if !(self.initial_step > T::zero() && self.initial_step <= T::one()) {
            return bad("initial_step must lie in (0, 1]");
        }
        if !(self.f_tolerance >= T::zero() && self.x_tolerance >= T::zero()) {
            return bad("tolerances must be non-negative");
        }
        if self.lower.len() != dim || self.upper.len() != dim {
            return bad("bounds do not match the dimension of x0");
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return bad("every coordinate needs finite lower < upper");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Reflect,
    Expand,
    ContractOutside,
    ContractInside,
    Shrink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry<T> {
    /// 1-based iteration number.
    pub iteration: usize,
    pub step: StepKind,
    pub best_value: T,
    pub best_point: Vec<T>,
    /// Largest pairwise vertex distance after the step.
    pub diameter: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult<T> {
    pub best_point: Vec<T>,
    pub best_value: T,
    pub initial_value: T,
    pub iterations: usize,
    pub evaluations: usize,
    /// Stopped by the `f`/`x` tolerances before the budget ran out.
    pub converged: bool,
    /// Stopped because the simplex collapsed below [`DEGENERATE_DIAMETER`].
    pub degenerate: bool,
    pub trace: Vec<TraceEntry<T>>,
}

impl<T: Real> NmResult<T> {
    /// CSV rows `iteration,step,best_value,diameter,x0,x1,…`.
    pub fn write_trace_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let dim = self.best_point.len();
        let mut header = String::from("iteration,step,best_value,diameter");
        for k in 0..dim {
            header.push_str(&format!(",x{k}"));
        }
        writeln!(out, "{header}")?;
        for e in &self.trace {
            let step = match e.step {
                StepKind::Reflect => "reflect",
                StepKind::Expand => "expand",
                StepKind::ContractOutside => "contract-outside",
                StepKind::ContractInside => "contract-inside",
                StepKind::Shrink => "shrink",
            };
            write!(out, "{},{},{},{}", e.iteration, step, e.best_value, e.diameter)?;
            for x in &e.best_point {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn clip<T: Real>(x: &mut [T], lower: &[T], upper: &[T]) {
    for ((v, &l), &u) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.max(l).min(u);
    }
}

/// `a + t·(a − b)`.
fn along<T: Real>(a: &[T], b: &[T], t: T) -> Vec<T> {
    a.iter().zip(b).map(|(&ai, &bi)| ai + t * (ai - bi)).collect()
}

fn diameter<T: Real>(sim: &[Vec<T>]) -> T {
    let mut d = T::zero();
    for i in 0..sim.len() {
        for j in i + 1..sim.len() {
            let s = sim[i].iter().zip(&sim[j]).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
            d = d.max(s.sqrt());
        }
    }
    d
}

fn cmp_values<T: Real>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Minimizes an infallible `f`.
pub fn nelder_mead<T: Real, F: FnMut(&[T]) -> T>(mut f: F, x0: &[T], opts: &NmOptions<T>) -> Result<NmResult<T>> {
    try_nelder_mead(|x| Ok(f(x)), x0, opts)
}

/// Minimizes a fallible `f`; the first error aborts the search.
pub fn try_nelder_mead<T: Real, F: FnMut(&[T]) -> Result<T>>(mut f: F, x0: &[T], opts: &NmOptions<T>) -> Result<NmResult<T>> {
    let n = x0.len();
    if n == 0 {
        return Err(Error::InvalidInput("Nelder-Mead needs at least one coordinate".into()));
    }
    opts.validate(n)?;
    let (lo, hi) = (&opts.lower, &opts.upper);
    if x0.iter().zip(lo).zip(hi).any(|((&x, &l), &u)| !(x >= l && x <= u)) {
        return Err(Error::InvalidInput("x0 lies outside the bounds".into()));
    }
    let NmCoefficients { reflection: rho, expansion: chi, contraction: psi, shrink: sigma } = opts.coefficients;

    let mut evaluations = 0usize;
    let mut eval = |x: &[T]| -> Result<T> {
        evaluations += 1;
        let v = f(x)?;
        Ok(if v.is_nan() { T::infinity() } else { v })
    };

    let mut sim: Vec<Vec<T>> = vec![x0.to_vec()];
    for k in 0..n {
        let step = opts.initial_step * (hi[k] - lo[k]);
        let mut y = x0.to_vec();
        y[k] = (x0[k] + step).min(hi[k]);
        if y[k] == x0[k] {
            y[k] = (x0[k] - step).max(lo[k]);
        }
        sim.push(y);
    }
    let mut fsim = Vec::with_capacity(n + 1);
    for x in &sim {
        fsim.push(eval(x)?);
    }
    let initial_value = fsim[0];

    let sort = |sim: &mut Vec<Vec<T>>, fsim: &mut Vec<T>| {
        let mut order: Vec<usize> = (0..sim.len()).collect();
        order.sort_by(|&a, &b| cmp_values(&fsim[a], &fsim[b]));
        *sim = order.iter().map(|&i| sim[i].clone()).collect();
        *fsim = order.iter().map(|&i| fsim[i]).collect();
    };
    sort(&mut sim, &mut fsim);

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut degenerate = false;
    while iterations < opts.max_iterations {
        let f_spread = fsim.iter().skip(1).fold(T::zero(), |acc, &v| acc.max((v - fsim[0]).abs()));
        let x_spread = sim
            .iter()
            .skip(1)
            .flat_map(|x| x.iter().zip(&sim[0]).map(|(&a, &b)| (a - b).abs()))
            .fold(T::zero(), T::max);
        if f_spread <= opts.f_tolerance && x_spread <= opts.x_tolerance {
            converged = true;
            break;
        }

        let inv_n = T::one() / T::from_usize_lossy(n);
        let mut xbar = vec![T::zero(); n];
        for x in &sim[..n] {
            for (c, &v) in xbar.iter_mut().zip(x) {
                *c = *c + v * inv_n;
            }
        }
        let worst = sim[n].clone();

        let mut xr = along(&xbar, &worst, rho);
        clip(&mut xr, lo, hi);
        let fr = eval(&xr)?;

        let mut shrink = false;
        let step = if fr < fsim[0] {
            let mut xe = along(&xbar, &worst, rho * chi);
            clip(&mut xe, lo, hi);
            let fe = eval(&xe)?;
            if fe < fr {
                sim[n] = xe;
                fsim[n] = fe;
                StepKind::Expand
            } else {
                sim[n] = xr;
                fsim[n] = fr;
                StepKind::Reflect
            }
        } else if fr < fsim[n - 1] {
            sim[n] = xr;
            fsim[n] = fr;
            StepKind::Reflect
        } else if fr < fsim[n] {
            let mut xc = along(&xbar, &worst, psi * rho);
            clip(&mut xc, lo, hi);
            let fc = eval(&xc)?;
            if fc <= fr {
                sim[n] = xc;
                fsim[n] = fc;
                StepKind::ContractOutside
            } else {
                shrink = true;
                StepKind::Shrink
            }
        } else {
            let mut xcc = along(&xbar, &worst, -psi);
            clip(&mut xcc, lo, hi);
            let fcc = eval(&xcc)?;
            if fcc < fsim[n] {
                sim[n] = xcc;
                fsim[n] = fcc;
                StepKind::ContractInside
            } else {
                shrink = true;
                StepKind::Shrink
            }
        };
        if shrink {
            let best = sim[0].clone();
            for j in 1..=n {
                let mut y: Vec<T> = best.iter().zip(&sim[j]).map(|(&b, &x)| b + sigma * (x - b)).collect();
                clip(&mut y, lo, hi);
                fsim[j] = eval(&y)?;
                sim[j] = y;
            }
        }
        sort(&mut sim, &mut fsim);
        iterations += 1;

        let diam = diameter(&sim);
        if opts.trace {
            trace.push(TraceEntry { iteration: iterations, step, best_value: fsim[0], best_point: sim[0].clone(), diameter: diam });
        }
        if diam < T::lit(DEGENERATE_DIAMETER) {
            degenerate = true;
            break;
        }
    }

    Ok(NmResult {
        best_point: sim[0].clone(),
        best_value: fsim[0],
        initial_value,
        iterations,
        evaluations,
        converged,
        degenerate,
        trace,
    })
}
