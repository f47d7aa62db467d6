//! Full-batch L-BFGS with a strong-Wolfe line search (bracketing with cubic
//! interpolation, then zoom).

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsSettings {
    pub history: usize,
    /// Trial step of every line search; the very first one is additionally
    /// capped by `1 / ‖g‖₁`.
    pub learning_rate: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            history: 10,
            learning_rate: 1.0,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 20,
        }
    }
}

/// Result of [`LbfgsState::run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepOutcome {
    pub iterations: usize,
    pub evaluations: usize,
    pub fallbacks: usize,
    /// No further progress is possible (zero gradient or no descent).
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimiser of the cubic through `(x1, f1, g1)` and `(x2, f2, g2)`, clipped to `bounds`.
fn cubic_interpolate(x1: f64, f1: f64, g1: f64, x2: f64, f2: f64, g2: f64, bounds: Option<(f64, f64)>) -> f64 {
    let (lo, hi) = bounds.unwrap_or(if x1 <= x2 { (x1, x2) } else { (x2, x1) });
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_sq = d1 * d1 - g1 * g2;
    if d2_sq >= 0.0 {
        let d2 = d2_sq.sqrt();
        let pos = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        if pos.is_finite() {
            return pos.max(lo).min(hi);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone)]
struct Point {
    t: f64,
    f: f64,
    g: Vec<f64>,
    gtd: f64,
}

/// Strong-Wolfe search along `d` from `x` (value `f`, gradient `g`). Returns
/// the accepted point and the number of evaluations.
#[allow(clippy::too_many_arguments)]
fn strong_wolfe<F>(
    objective: &mut F,
    x: &[f64],
    t0: f64,
    d: &[f64],
    f: f64,
    g: &[f64],
    gtd: f64,
    s: &LbfgsSettings,
) -> (Point, usize)
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let d_norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut trial = vec![0.0; n];
    let mut eval = |t: f64, grad: &mut Vec<f64>| -> f64 {
        for i in 0..n {
            trial[i] = x[i] + t * d[i];
        }
        objective(&trial, grad)
    };
    let tolerance_change = 1e-9;
    let mut g_new = vec![0.0; n];
    let mut t = t0;
    let mut f_new = eval(t, &mut g_new);
    let mut evals = 1;
    let mut gtd_new = dot(&g_new, d);
    let mut prev = Point { t: 0.0, f, g: g.to_vec(), gtd };
    let mut bracket: Vec<Point> = Vec::new();
    let mut done = false;
    let mut ls_iter = 0;
    while ls_iter < s.max_line_search {
        let cur = Point { t, f: f_new, g: g_new.clone(), gtd: gtd_new };
        if !f_new.is_finite() || f_new > f + s.c1 * t * gtd || (ls_iter > 1 && f_new >= prev.f) {
            bracket = vec![prev, cur];
            break;
        }
        if gtd_new.abs() <= -s.c2 * gtd {
            bracket = vec![cur];
            done = true;
            break;
        }
        if gtd_new >= 0.0 {
            bracket = vec![prev, cur];
            break;
        }
        let min_step = t + 0.01 * (t - prev.t);
        let max_step = t * 10.0;
        let next = cubic_interpolate(prev.t, prev.f, prev.gtd, t, f_new, gtd_new, Some((min_step, max_step)));
        prev = cur;
        t = next;
        f_new = eval(t, &mut g_new);
        evals += 1;
        gtd_new = dot(&g_new, d);
        ls_iter += 1;
    }
    if bracket.is_empty() {
        bracket = vec![
            Point { t: 0.0, f, g: g.to_vec(), gtd },
            Point { t, f: f_new, g: g_new.clone(), gtd: gtd_new },
        ];
    }
    if bracket.len() == 1 {
        return (bracket.pop().unwrap(), evals);
    }
    let order = |b: &[Point]| if b[0].f <= b[1].f { (0, 1) } else { (1, 0) };
    let (mut low, mut high) = order(&bracket);
    let mut insufficient = false;
    while !done && ls_iter < s.max_line_search {
        let (b0, b1) = (&bracket[0], &bracket[1]);
        if (b1.t - b0.t).abs() * d_norm < tolerance_change {
            break;
        }
        let mut t = cubic_interpolate(b0.t, b0.f, b0.gtd, b1.t, b1.f, b1.gtd, None);
        let (bmin, bmax) = (b0.t.min(b1.t), b0.t.max(b1.t));
        let eps = 0.1 * (bmax - bmin);
        if (bmax - t).min(t - bmin) < eps {
            if insufficient || t >= bmax || t <= bmin {
                t = if (t - bmax).abs() < (t - bmin).abs() { bmax - eps } else { bmin + eps };
                insufficient = false;
            } else {
                insufficient = true;
            }
        } else {
            insufficient = false;
        }
        f_new = eval(t, &mut g_new);
        evals += 1;
        gtd_new = dot(&g_new, d);
        ls_iter += 1;
        let cur = Point { t, f: f_new, g: g_new.clone(), gtd: gtd_new };
        if !f_new.is_finite() || f_new > f + s.c1 * t * gtd || f_new >= bracket[low].f {
            bracket[high] = cur;
            (low, high) = order(&bracket);
        } else {
            if gtd_new.abs() <= -s.c2 * gtd {
                done = true;
            } else if gtd_new * (bracket[high].t - bracket[low].t) >= 0.0 {
                bracket[high] = bracket[low].clone();
            }
            bracket[low] = cur;
        }
    }
    (bracket.swap_remove(low), evals)
}

/// Optimiser state carried across calls so training can be split into epochs.
#[derive(Debug, Clone)]
pub struct LbfgsState {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    settings: LbfgsSettings,
    /// `(s, y, 1 / yᵀs)` pairs, oldest first.
    memory: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    gamma: f64,
    iterations: usize,
}

impl LbfgsState {
    pub fn new<F>(x0: Vec<f64>, settings: LbfgsSettings, objective: &mut F) -> Self
    where
        F: FnMut(&[f64], &mut [f64]) -> f64,
    {
        let mut g = vec![0.0; x0.len()];
        let f = objective(&x0, &mut g);
        Self {
            x: x0,
            f,
            g,
            settings,
            memory: VecDeque::new(),
            gamma: 1.0,
            iterations: 0,
        }
    }

    fn direction(&self) -> Vec<f64> {
        let mut q: Vec<f64> = self.g.iter().map(|v| -v).collect();
        let mut alpha = vec![0.0; self.memory.len()];
        for (i, (s, y, rho)) in self.memory.iter().enumerate().rev() {
            alpha[i] = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qv, yv)| *qv -= alpha[i] * yv);
        }
        q.iter_mut().for_each(|v| *v *= self.gamma);
        for (i, (s, y, rho)) in self.memory.iter().enumerate() {
            let beta = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qv, sv)| *qv += (alpha[i] - beta) * sv);
        }
        q
    }

    fn remember(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let ys = dot(&y, &s);
        let yy = dot(&y, &y);
        // Scale-free curvature test, so tiny losses still build a model.
        if ys > 1e-10 * (yy * dot(&s, &s)).sqrt() {
            if self.memory.len() == self.settings.history {
                self.memory.pop_front();
            }
            self.gamma = ys / yy;
            self.memory.push_back((s, y, 1.0 / ys));
        }
    }

    /// Backtracking steepest-descent step used when the line search fails.
    fn gradient_step<F>(&mut self, objective: &mut F) -> (bool, usize)
    where
        F: FnMut(&[f64], &mut [f64]) -> f64,
    {
        let gmax = self.g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut t = self.settings.learning_rate / gmax.max(1e-300);
        let mut trial = vec![0.0; self.x.len()];
        let mut grad = vec![0.0; self.x.len()];
        for evals in 1..=self.settings.max_line_search {
            for i in 0..trial.len() {
                trial[i] = self.x[i] - t * self.g[i];
            }
            let f = objective(&trial, &mut grad);
            if f.is_finite() && f < self.f {
                let s: Vec<f64> = trial.iter().zip(&self.x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = grad.iter().zip(&self.g).map(|(a, b)| a - b).collect();
                self.x.copy_from_slice(&trial);
                self.f = f;
                self.g.copy_from_slice(&grad);
                self.memory.clear();
                self.gamma = 1.0;
                self.remember(s, y);
                return (true, evals);
            }
            t *= 0.5;
        }
        (false, self.settings.max_line_search)
    }

    /// Runs up to `max_iterations` quasi-Newton iterations.
    pub fn run<F>(&mut self, objective: &mut F, max_iterations: usize) -> StepOutcome
    where
        F: FnMut(&[f64], &mut [f64]) -> f64,
    {
        let mut out = StepOutcome::default();
        for _ in 0..max_iterations {
            if self.g.iter().all(|&v| v == 0.0) {
                out.converged = true;
                break;
            }
            let mut d = self.direction();
            let mut gtd = dot(&self.g, &d);
            if !(gtd < 0.0) {
                // Stale curvature pairs; restart from steepest descent.
                self.memory.clear();
                self.gamma = 1.0;
                d = self.g.iter().map(|v| -v).collect();
                gtd = dot(&self.g, &d);
            }
            let t0 = if self.iterations == 0 {
                let g1: f64 = self.g.iter().map(|v| v.abs()).sum();
                (1.0f64).min(1.0 / g1) * self.settings.learning_rate
            } else {
                self.settings.learning_rate
            };
            let (point, evals) = strong_wolfe(objective, &self.x, t0, &d, self.f, &self.g, gtd, &self.settings);
            out.evaluations += evals;
            out.iterations += 1;
            self.iterations += 1;
            if point.f.is_finite() && point.f < self.f {
                let s: Vec<f64> = d.iter().map(|v| v * point.t).collect();
                let y: Vec<f64> = point.g.iter().zip(&self.g).map(|(a, b)| a - b).collect();
                self.x.iter_mut().zip(&s).for_each(|(xv, sv)| *xv += sv);
                self.f = point.f;
                self.g = point.g;
                self.remember(s, y);
            } else {
                out.fallbacks += 1;
                let (moved, evals) = self.gradient_step(objective);
                out.evaluations += evals;
                if !moved {
                    out.converged = true;
                    break;
                }
            }
        }
        out
    }
}

/// Convenience wrapper: `iterations` L-BFGS iterations from `x0`.
pub fn minimize<F>(objective: &mut F, x0: Vec<f64>, settings: LbfgsSettings, iterations: usize) -> (LbfgsState, StepOutcome)
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut state = LbfgsState::new(x0, settings, objective);
    let outcome = state.run(objective, iterations);
    (state, outcome)
}
