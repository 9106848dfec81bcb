//! Dense log-barrier interior-point solver for small smooth convex programs.
//!
//! Maximizes a concave objective subject to sparse linear rows, convex
//! quadratic rows `(c + dᵀx)² ≤ e + fᵀx` and per-variable bounds. Starting
//! points that are not strictly feasible go through a phase-I problem first.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Newton steps allowed per barrier stage before the path parameter moves on.
const STAGE_STEP_CAP: usize = 200;

/// Sparse vector as `(index, value)` pairs.
pub type Sparse = Vec<(usize, f64)>;

fn sdot(a: &[(usize, f64)], x: &DVector<f64>) -> f64 {
    a.iter().map(|&(i, v)| v * x[i]).sum()
}

/// Smooth concave objective to be maximized.
pub trait ConcaveObjective: Send + Sync {
    /// `-inf` (or NaN) outside the domain.
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Adds `scale·∇²f(x)` into `h`.
    fn add_hessian(&self, x: &DVector<f64>, scale: f64, h: &mut DMatrix<f64>);
}

/// `Σ w_i ln(1 + x_i) + cᵀx + c₀`.
#[derive(Debug, Clone, Default)]
pub struct SeparableObjective {
    pub log_terms: Sparse,
    pub linear: Sparse,
    pub constant: f64,
}

impl ConcaveObjective for SeparableObjective {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.constant + sdot(&self.linear, x);
        for &(i, w) in &self.log_terms {
            if x[i] <= -1.0 {
                return f64::NEG_INFINITY;
            }
            v += w * x[i].ln_1p();
        }
        v
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        for &(i, c) in &self.linear {
            g[i] += c;
        }
        for &(i, w) in &self.log_terms {
            g[i] += w / (1.0 + x[i]);
        }
        g
    }

    fn add_hessian(&self, x: &DVector<f64>, scale: f64, h: &mut DMatrix<f64>) {
        for &(i, w) in &self.log_terms {
            let u = 1.0 + x[i];
            h[(i, i)] -= scale * w / (u * u);
        }
    }
}

/// `aᵀx ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub a: Sparse,
    pub b: f64,
}

/// `(c + dᵀx)² − (e + fᵀx) ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRow {
    pub c: f64,
    pub d: Sparse,
    pub e: f64,
    pub f: Sparse,
}

impl QuadRow {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let l = self.c + sdot(&self.d, x);
        l * l - (self.e + sdot(&self.f, x))
    }
}

/// A smooth convex program in the solver's standard form.
pub struct SmoothConvexProgram {
    pub dim: usize,
    pub objective: Box<dyn ConcaveObjective>,
    pub linear_ineq: Vec<LinearRow>,
    pub quad_ineq: Vec<QuadRow>,
    /// Per-variable `(lower, upper)`; infinite entries are ignored.
    pub bounds: Vec<(f64, f64)>,
}

impl SmoothConvexProgram {
    pub fn new(dim: usize, objective: Box<dyn ConcaveObjective>) -> Self {
        SmoothConvexProgram {
            dim,
            objective,
            linear_ineq: Vec::new(),
            quad_ineq: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
        }
    }

    /// Number of scalar inequalities seen by the barrier.
    pub fn constraint_count(&self) -> usize {
        let finite = self
            .bounds
            .iter()
            .map(|(l, u)| l.is_finite() as usize + u.is_finite() as usize)
            .sum::<usize>();
        self.linear_ineq.len() + self.quad_ineq.len() + finite
    }

    /// Largest constraint value `g_i(x)`; negative means strictly feasible.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for r in &self.linear_ineq {
            worst = worst.max(sdot(&r.a, x) - r.b);
        }
        for q in &self.quad_ineq {
            worst = worst.max(q.eval(x));
        }
        for (i, &(l, u)) in self.bounds.iter().enumerate() {
            if l.is_finite() {
                worst = worst.max(l - x[i]);
            }
            if u.is_finite() {
                worst = worst.max(x[i] - u);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IpmStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// One Newton step, for line-delimited JSON tracing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub stage: usize,
    pub iteration: usize,
    pub t: f64,
    pub objective: f64,
    pub decrement: f64,
}

pub fn write_trace_jsonl<W: Write>(rows: &[TraceRow], mut out: W) -> std::io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub x_star: DVector<f64>,
    pub obj: f64,
    pub iterations: usize,
    pub status: IpmStatus,
    /// Duality-gap bound `m/t` at exit.
    pub gap: f64,
    /// Objective at the end of each barrier stage.
    pub stage_objectives: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct IpmOptions {
    pub t0: f64,
    pub t_factor: f64,
    pub ls_alpha: f64,
    pub ls_beta: f64,
    pub gap_tol: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub trace: bool,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            t0: 1.0,
            t_factor: 10.0,
            ls_alpha: 0.25,
            ls_beta: 0.5,
            gap_tol: 1e-9,
            newton_tol: 1e-10,
            max_newton: 3000,
            trace: false,
        }
    }
}

/// Maximizes `prog` from `x0` with default options.
pub fn solve_ipm(prog: &SmoothConvexProgram, x0: &DVector<f64>) -> SolverReport {
    solve_ipm_with(prog, x0, &IpmOptions::default())
}

pub fn solve_ipm_with(prog: &SmoothConvexProgram, x0: &DVector<f64>, opts: &IpmOptions) -> SolverReport {
    #[cfg(debug_assertions)]
    check_concavity(prog, x0);

    let infeasible = |x: DVector<f64>| SolverReport {
        obj: prog.objective.value(&x),
        x_star: x,
        iterations: 0,
        status: IpmStatus::Infeasible,
        gap: f64::INFINITY,
        stage_objectives: Vec::new(),
        trace: Vec::new(),
    };
    let start = if prog.max_violation(x0) < 0.0 && prog.objective.value(x0).is_finite() {
        x0.clone()
    } else {
        match phase_one(prog, x0, opts) {
            Some(x) => x,
            None => return infeasible(x0.clone()),
        }
    };
    let barrier = Barrier::new(prog);
    barrier.run(start, opts, None)
}

/// Finds a strictly feasible point by minimizing the largest violation `s`.
fn phase_one(prog: &SmoothConvexProgram, x0: &DVector<f64>, opts: &IpmOptions) -> Option<DVector<f64>> {
    let n = prog.dim;
    let s_idx = n;
    let mut aux = SmoothConvexProgram::new(
        n + 1,
        Box::new(SeparableObjective {
            log_terms: Vec::new(),
            linear: vec![(s_idx, -1.0)],
            constant: 0.0,
        }),
    );
    for r in &prog.linear_ineq {
        let mut a = r.a.clone();
        a.push((s_idx, -1.0));
        aux.linear_ineq.push(LinearRow { a, b: r.b });
    }
    for q in &prog.quad_ineq {
        let mut f = q.f.clone();
        f.push((s_idx, 1.0));
        aux.quad_ineq.push(QuadRow {
            c: q.c,
            d: q.d.clone(),
            e: q.e,
            f,
        });
    }
    for (i, &(l, u)) in prog.bounds.iter().enumerate() {
        if l.is_finite() {
            aux.linear_ineq.push(LinearRow {
                a: vec![(i, -1.0), (s_idx, -1.0)],
                b: -l,
            });
        }
        if u.is_finite() {
            aux.linear_ineq.push(LinearRow {
                a: vec![(i, 1.0), (s_idx, -1.0)],
                b: u,
            });
        }
    }
    let v0 = prog.max_violation(x0);
    let scale = v0.abs().max(1.0);
    aux.bounds[s_idx] = (-scale, f64::INFINITY);
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(x0);
    z[s_idx] = v0 + scale;

    let done = |z: &DVector<f64>| {
        let x = z.rows(0, n).into_owned();
        prog.max_violation(&x) < 0.0 && prog.objective.value(&x).is_finite()
    };
    let report = Barrier::new(&aux).run(z, opts, Some(&done));
    let x = report.x_star.rows(0, n).into_owned();
    if done(&report.x_star) {
        Some(x)
    } else {
        None
    }
}

/// Constraint data flattened into rows `sᵢ(x) > 0` for fast barrier evaluation.
struct Barrier<'a> {
    prog: &'a SmoothConvexProgram,
    rows: Vec<LinearRow>,
}

impl<'a> Barrier<'a> {
    fn new(prog: &'a SmoothConvexProgram) -> Self {
        let mut rows = prog.linear_ineq.clone();
        for (i, &(l, u)) in prog.bounds.iter().enumerate() {
            if l.is_finite() {
                rows.push(LinearRow { a: vec![(i, -1.0)], b: -l });
            }
            if u.is_finite() {
                rows.push(LinearRow { a: vec![(i, 1.0)], b: u });
            }
        }
        Barrier { prog, rows }
    }

    fn m(&self) -> usize {
        self.rows.len() + self.prog.quad_ineq.len()
    }

    /// `−t·f(x) − Σ ln sᵢ(x)`, or `+inf` outside the strict interior.
    fn value(&self, x: &DVector<f64>, t: f64) -> f64 {
        let mut acc = 0.0;
        for r in &self.rows {
            let s = r.b - sdot(&r.a, x);
            if !(s > 0.0) {
                return f64::INFINITY;
            }
            acc -= s.ln();
        }
        for q in &self.prog.quad_ineq {
            let s = -q.eval(x);
            if !(s > 0.0) {
                return f64::INFINITY;
            }
            acc -= s.ln();
        }
        let f = self.prog.objective.value(x);
        if !f.is_finite() {
            return f64::INFINITY;
        }
        acc - t * f
    }

    fn grad_hess(&self, x: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.prog.dim;
        let mut g = -self.prog.objective.gradient(x) * t;
        let mut h = DMatrix::zeros(n, n);
        self.prog.objective.add_hessian(x, -t, &mut h);
        for r in &self.rows {
            let s = r.b - sdot(&r.a, x);
            let inv = 1.0 / s;
            for &(i, ai) in &r.a {
                g[i] += ai * inv;
                for &(j, aj) in &r.a {
                    h[(i, j)] += ai * aj * inv * inv;
                }
            }
        }
        let mut grad_q: Vec<(usize, f64)> = Vec::new();
        for q in &self.prog.quad_ineq {
            let lin = q.c + sdot(&q.d, x);
            let s = -(lin * lin - (q.e + sdot(&q.f, x)));
            let inv = 1.0 / s;
            grad_q.clear();
            for &(i, di) in &q.d {
                grad_q.push((i, 2.0 * lin * di));
            }
            for &(i, fi) in &q.f {
                grad_q.push((i, -fi));
            }
            for &(i, gi) in &grad_q {
                g[i] += gi * inv;
                for &(j, gj) in &grad_q {
                    h[(i, j)] += gi * gj * inv * inv;
                }
            }
            for &(i, di) in &q.d {
                for &(j, dj) in &q.d {
                    h[(i, j)] += 2.0 * di * dj * inv;
                }
            }
        }
        (g, h)
    }

    fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
        let n = g.len();
        let d = DVector::from_fn(n, |i, _| {
            let v = h[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        });
        let mut hs = h.clone();
        for j in 0..n {
            for i in 0..n {
                hs[(i, j)] *= d[i] * d[j];
            }
        }
        let rhs = -g.component_mul(&d);
        let mut reg = 0.0;
        for _ in 0..12 {
            let mut m = hs.clone();
            if reg > 0.0 {
                for i in 0..n {
                    m[(i, i)] += reg;
                }
            }
            if let Some(ch) = m.cholesky() {
                let y = ch.solve(&rhs);
                if y.iter().all(|v| v.is_finite()) {
                    return Some(y.component_mul(&d));
                }
            }
            reg = if reg == 0.0 { 1e-12 } else { reg * 100.0 };
        }
        None
    }

    fn run(
        &self,
        mut x: DVector<f64>,
        opts: &IpmOptions,
        early_stop: Option<&dyn Fn(&DVector<f64>) -> bool>,
    ) -> SolverReport {
        let m = self.m().max(1) as f64;
        let mut t = opts.t0;
        let mut iterations = 0;
        let mut stage = 0;
        let mut stage_objectives = Vec::new();
        let mut trace = Vec::new();
        let mut status = IpmStatus::Optimal;

        'outer: loop {
            let mut stage_steps = 0;
            loop {
                if iterations >= opts.max_newton {
                    status = IpmStatus::MaxIter;
                    break 'outer;
                }
                let (g, h) = self.grad_hess(&x, t);
                let Some(dx) = Self::newton_direction(&g, &h) else {
                    status = IpmStatus::MaxIter;
                    break 'outer;
                };
                let lambda2 = -g.dot(&dx);
                if opts.trace {
                    trace.push(TraceRow {
                        stage,
                        iteration: iterations,
                        t,
                        objective: self.prog.objective.value(&x),
                        decrement: lambda2,
                    });
                }
                if !(lambda2 > 0.0) || lambda2 / 2.0 <= opts.newton_tol {
                    break;
                }
                let f0 = self.value(&x, t);
                let mut step = 1.0;
                let mut accepted = false;
                let mut stalled = false;
                for _ in 0..80 {
                    let cand = &x + &dx * step;
                    let f1 = self.value(&cand, t);
                    if f1.is_finite() && f1 <= f0 - opts.ls_alpha * step * lambda2 {
                        stalled = f1 >= f0;
                        x = cand;
                        accepted = true;
                        break;
                    }
                    step *= opts.ls_beta;
                }
                iterations += 1;
                stage_steps += 1;
                if let Some(stop) = early_stop {
                    if stop(&x) {
                        break 'outer;
                    }
                }
                if !accepted {
                    // Rounding dominates once the decrement is this small.
                    if lambda2 < 1e-6 {
                        break;
                    }
                    status = IpmStatus::MaxIter;
                    break 'outer;
                }
                // Steps below the rounding floor of the barrier value.
                if stalled || stage_steps >= STAGE_STEP_CAP {
                    break;
                }
            }
            stage_objectives.push(self.prog.objective.value(&x));
            stage += 1;
            if m / t < opts.gap_tol {
                break;
            }
            t *= opts.t_factor;
        }
        SolverReport {
            obj: self.prog.objective.value(&x),
            x_star: x,
            iterations,
            status,
            gap: m / t,
            stage_objectives,
            trace,
        }
    }
}

#[cfg(debug_assertions)]
fn check_concavity(prog: &SmoothConvexProgram, x: &DVector<f64>) {
    if !prog.objective.value(x).is_finite() {
        return;
    }
    let n = prog.dim;
    let mut h = DMatrix::zeros(n, n);
    prog.objective.add_hessian(x, 1.0, &mut h);
    let sym = (&h + h.transpose()) * 0.5;
    let top = sym.symmetric_eigenvalues().max();
    let scale = sym.amax().max(1.0);
    debug_assert!(top <= 1e-9 * scale, "objective Hessian is not negative semidefinite");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_sum(dim: usize) -> Box<SeparableObjective> {
        Box::new(SeparableObjective {
            log_terms: (0..dim).map(|i| (i, 1.0)).collect(),
            ..Default::default()
        })
    }

    #[test]
    fn bound_is_hit_by_monotone_objective() {
        let mut p = SmoothConvexProgram::new(1, log_sum(1));
        p.linear_ineq.push(LinearRow { a: vec![(0, 1.0)], b: 5.0 });
        p.bounds[0].0 = 0.0;
        let r = solve_ipm(&p, &DVector::from_element(1, 1.0));
        assert_eq!(r.status, IpmStatus::Optimal);
        assert!((r.x_star[0] - 5.0).abs() < 1e-8);
    }

    #[test]
    fn symmetric_allocation() {
        let mut p = SmoothConvexProgram::new(3, log_sum(3));
        p.linear_ineq.push(LinearRow {
            a: (0..3).map(|i| (i, 1.0)).collect(),
            b: 3.0,
        });
        for b in &mut p.bounds {
            b.0 = 0.0;
        }
        let r = solve_ipm(&p, &DVector::from_element(3, 0.5));
        for i in 0..3 {
            assert!((r.x_star[i] - 1.0).abs() < 1e-7);
        }
        assert!(r.stage_objectives.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn infeasible_start_is_repaired() {
        let mut p = SmoothConvexProgram::new(2, log_sum(2));
        p.linear_ineq.push(LinearRow { a: vec![(0, 1.0), (1, 1.0)], b: 2.0 });
        p.bounds = vec![(0.0, f64::INFINITY); 2];
        let r = solve_ipm(&p, &DVector::from_vec(vec![5.0, 5.0]));
        assert_eq!(r.status, IpmStatus::Optimal);
        assert!((r.x_star[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn empty_feasible_set_is_reported() {
        let mut p = SmoothConvexProgram::new(1, log_sum(1));
        p.bounds[0] = (2.0, 1.0);
        let r = solve_ipm(&p, &DVector::from_element(1, 1.5));
        assert_eq!(r.status, IpmStatus::Infeasible);
    }

    #[test]
    fn quadratic_constraint_is_respected() {
        // maximize x + y with x² + y² ≤ 1 written as two cones via an auxiliary.
        // Here: (x)² ≤ 1 − y  ⇒ optimum x = 1/2, y = 3/4.
        let obj = SeparableObjective {
            linear: vec![(0, 1.0), (1, 1.0)],
            ..Default::default()
        };
        let mut p = SmoothConvexProgram::new(2, Box::new(obj));
        p.quad_ineq.push(QuadRow {
            c: 0.0,
            d: vec![(0, 1.0)],
            e: 1.0,
            f: vec![(1, -1.0)],
        });
        let r = solve_ipm(&p, &DVector::from_vec(vec![0.0, 0.0]));
        assert!((r.x_star[0] - 0.5).abs() < 1e-7);
        assert!((r.x_star[1] - 0.75).abs() < 1e-7);
    }

    #[test]
    fn trace_serializes_as_jsonl() {
        let mut p = SmoothConvexProgram::new(1, log_sum(1));
        p.bounds[0] = (0.0, 2.0);
        let opts = IpmOptions {
            trace: true,
            ..Default::default()
        };
        let r = solve_ipm_with(&p, &DVector::from_element(1, 1.0), &opts);
        let mut buf = Vec::new();
        write_trace_jsonl(&r.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.trace.len());
        assert!(text.lines().all(|l| serde_json::from_str::<TraceRow>(l).is_ok()));
    }
}
