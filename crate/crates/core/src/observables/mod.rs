//! Path functionals: integrals `F_a^b(f)`, evaluations `F_t(f)`, left limits
//! `F_t^⋆(f)`, their algebra, the shift action and dependence windows.

mod spec;
mod testfn;
mod window;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::path::{grid_steps, PathKind, SampledPath, GRID_TOL};

pub use spec::ObservableSpec;
pub use testfn::{GradientFn, ScalarFn, TestFunction, TestFunctionSpec, UserFunction};
pub use window::{Lower, Upper, Window};

pub type PathFn = Arc<dyn Fn(&SampledPath) -> f64 + Send + Sync>;

/// A user supplied path functional. The declared window is trusted.
#[derive(Clone)]
pub struct PathClosure {
    pub name: String,
    pub f: PathFn,
    pub bound: f64,
    pub window: Window,
    /// The closure is read on `ϑ_offset x`.
    pub offset: f64,
}

impl fmt::Debug for PathClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathClosure")
            .field("name", &self.name)
            .field("bound", &self.bound)
            .field("window", &self.window)
            .field("offset", &self.offset)
            .finish()
    }
}

impl PartialEq for PathClosure {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && Arc::ptr_eq(&self.f, &other.f)
            && self.window == other.window
            && self.offset == other.offset
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Const(f64),
    /// `∫_a^b f(x(s)) ds`.
    Integral { f: TestFunction, a: f64, b: f64 },
    /// `f(x(t))`.
    Eval { f: TestFunction, t: f64 },
    /// `f(x(t-))`.
    LeftLim { f: TestFunction, t: f64 },
    Sum(Box<Observable>, Box<Observable>),
    Product(Box<Observable>, Box<Observable>),
    Scale(f64, Box<Observable>),
    Closure(PathClosure),
}

impl Observable {
    pub fn integral(f: TestFunction, a: f64, b: f64) -> Self {
        Observable::Integral { f, a, b }
    }

    pub fn eval(f: TestFunction, t: f64) -> Self {
        Observable::Eval { f, t }
    }

    pub fn left_lim(f: TestFunction, t: f64) -> Self {
        Observable::LeftLim { f, t }
    }

    pub fn closure(
        name: impl Into<String>,
        bound: f64,
        window: Window,
        f: impl Fn(&SampledPath) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Observable::Closure(PathClosure { name: name.into(), f: Arc::new(f), bound, window, offset: 0.0 })
    }

    pub fn scale(self, c: f64) -> Self {
        Observable::Scale(c, Box::new(self))
    }

    pub fn window(&self) -> Window {
        match self {
            Observable::Const(_) => Window::Empty,
            Observable::Integral { a, b, .. } => Window::half_open(a.min(*b), a.max(*b)),
            Observable::Eval { t, .. } => Window::point(*t),
            Observable::LeftLim { t, .. } => Window::left_germ(*t),
            Observable::Sum(f, g) | Observable::Product(f, g) => f.window().hull(&g.window()),
            Observable::Scale(_, f) => f.window(),
            Observable::Closure(c) => c.window.translate(c.offset),
        }
    }

    pub fn bound(&self) -> f64 {
        match self {
            Observable::Const(c) => c.abs(),
            Observable::Integral { f, a, b } => {
                if a == b {
                    0.0
                } else {
                    (b - a).abs() * f.bound()
                }
            }
            Observable::Eval { f, .. } | Observable::LeftLim { f, .. } => f.bound(),
            Observable::Sum(f, g) => f.bound() + g.bound(),
            Observable::Product(f, g) => f.bound() * g.bound(),
            Observable::Scale(c, f) => c.abs() * f.bound(),
            Observable::Closure(c) => c.bound,
        }
    }

    /// Visits every test function in the tree.
    pub fn test_functions(&self) -> Vec<&TestFunction> {
        let mut out = Vec::new();
        self.collect_fns(&mut out);
        out
    }

    fn collect_fns<'a>(&'a self, out: &mut Vec<&'a TestFunction>) {
        match self {
            Observable::Integral { f, .. } | Observable::Eval { f, .. } | Observable::LeftLim { f, .. } => out.push(f),
            Observable::Sum(f, g) | Observable::Product(f, g) => {
                f.collect_fns(out);
                g.collect_fns(out);
            }
            Observable::Scale(_, f) => f.collect_fns(out),
            Observable::Const(_) | Observable::Closure(_) => {}
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.test_functions().into_iter().try_for_each(|f| f.validate(dim))
    }

    /// Translation by an arbitrary real `s`; closures are read on `ϑ_s x`.
    pub(crate) fn translate(&self, s: f64) -> Observable {
        match self {
            Observable::Const(c) => Observable::Const(*c),
            Observable::Integral { f, a, b } => Observable::Integral { f: f.clone(), a: a + s, b: b + s },
            Observable::Eval { f, t } => Observable::Eval { f: f.clone(), t: t + s },
            Observable::LeftLim { f, t } => Observable::LeftLim { f: f.clone(), t: t + s },
            Observable::Sum(f, g) => Observable::Sum(Box::new(f.translate(s)), Box::new(g.translate(s))),
            Observable::Product(f, g) => Observable::Product(Box::new(f.translate(s)), Box::new(g.translate(s))),
            Observable::Scale(c, f) => Observable::Scale(*c, Box::new(f.translate(s))),
            Observable::Closure(c) => Observable::Closure(PathClosure { offset: c.offset + s, ..c.clone() }),
        }
    }

    fn has_closure(&self) -> bool {
        match self {
            Observable::Closure(_) => true,
            Observable::Sum(f, g) | Observable::Product(f, g) => f.has_closure() || g.has_closure(),
            Observable::Scale(_, f) => f.has_closure(),
            _ => false,
        }
    }
}

impl Add for Observable {
    type Output = Observable;
    fn add(self, rhs: Observable) -> Observable {
        Observable::Sum(Box::new(self), Box::new(rhs))
    }
}

impl Mul for Observable {
    type Output = Observable;
    fn mul(self, rhs: Observable) -> Observable {
        Observable::Product(Box::new(self), Box::new(rhs))
    }
}

impl Neg for Observable {
    type Output = Observable;
    fn neg(self) -> Observable {
        self.scale(-1.0)
    }
}

impl Sub for Observable {
    type Output = Observable;
    fn sub(self, rhs: Observable) -> Observable {
        self + (-rhs)
    }
}

fn integrate(f: &TestFunction, x: &SampledPath, a: f64, b: f64, buf: &mut [f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -integrate(f, x, b, a, buf);
    }
    let dt = x.dt();
    // beyond the window the path is constant
    let (lo_t, hi_t) = (x.t_min(), x.t_max());
    let mut total = 0.0;
    if a < lo_t {
        let end = b.min(lo_t);
        x.evaluate_into(a, buf);
        total += (end - a) * f.eval(buf);
    }
    if b > hi_t {
        let start = a.max(hi_t);
        x.evaluate_into(b, buf);
        total += (b - start) * f.eval(buf);
    }
    let (a, b) = (a.max(lo_t), b.min(hi_t));
    if a >= b {
        return total;
    }
    let first = (a / dt + GRID_TOL).floor() as i64;
    let last = (b / dt - GRID_TOL).ceil() as i64;
    match x.kind() {
        PathKind::Cadlag => {
            for k in first..last {
                let (s, e) = ((k as f64 * dt).max(a), ((k + 1) as f64 * dt).min(b));
                if e > s {
                    total += (e - s) * f.eval(x.node_at_index(k));
                }
            }
        }
        PathKind::Continuous => {
            x.evaluate_into(a, buf);
            let mut prev = (a, f.eval(buf));
            for k in (first + 1)..=last {
                let t = (k as f64 * dt).min(b);
                if t <= prev.0 {
                    continue;
                }
                x.evaluate_into(t, buf);
                let v = f.eval(buf);
                total += 0.5 * (t - prev.0) * (prev.1 + v);
                prev = (t, v);
            }
        }
    }
    total
}

/// Evaluates `F(x)`.
pub fn apply(obs: &Observable, x: &SampledPath) -> f64 {
    let mut buf = vec![0.0; x.dim()];
    apply_with(obs, x, &mut buf)
}

fn apply_with(obs: &Observable, x: &SampledPath, buf: &mut [f64]) -> f64 {
    match obs {
        Observable::Const(c) => *c,
        Observable::Integral { f, a, b } => integrate(f, x, *a, *b, buf),
        Observable::Eval { f, t } => {
            x.evaluate_into(*t, buf);
            f.eval(buf)
        }
        Observable::LeftLim { f, t } => {
            x.left_limit_into(*t, buf);
            f.eval(buf)
        }
        Observable::Sum(f, g) => apply_with(f, x, buf) + apply_with(g, x, buf),
        Observable::Product(f, g) => apply_with(f, x, buf) * apply_with(g, x, buf),
        Observable::Scale(c, f) => c * apply_with(f, x, buf),
        Observable::Closure(c) => {
            if c.offset == 0.0 {
                (c.f)(x)
            } else {
                let k = (c.offset / x.dt()).round() as i64;
                (c.f)(&x.shift_steps(k))
            }
        }
    }
}

/// `Θ_t F`, with `(Θ_t F)(x) = F(ϑ_t x)`.
pub fn shift_obs(obs: &Observable, t: f64, dt: f64) -> Result<Observable> {
    grid_steps(t, dt).map_err(|_| Error::NonGridShift { shift: t, dt })?;
    Ok(obs.translate(t))
}

/// The derivation `𝔻₀` on the algebra generated by the integrals.
pub fn d0_derivative(obs: &Observable) -> Result<Observable> {
    Ok(match obs {
        Observable::Const(_) => Observable::Const(0.0),
        Observable::Integral { f, a, b } => {
            Observable::left_lim(f.clone(), *b) - Observable::left_lim(f.clone(), *a)
        }
        Observable::Sum(f, g) => d0_derivative(f)? + d0_derivative(g)?,
        Observable::Scale(c, f) => d0_derivative(f)?.scale(*c),
        Observable::Product(f, g) => {
            d0_derivative(f)? * g.as_ref().clone() + f.as_ref().clone() * d0_derivative(g)?
        }
        Observable::Eval { .. } => return Err(Error::NotInD0Domain("point evaluation".into())),
        Observable::LeftLim { .. } => return Err(Error::NotInD0Domain("left limit".into())),
        Observable::Closure(c) => return Err(Error::NotInD0Domain(format!("closure {}", c.name))),
    })
}

/// `|(Θ_t F - F)(x) - ∫_0^t (Θ_s 𝔻₀F)(x) ds|` with the midpoint rule in `s`.
pub fn check_cocycle(obs: &Observable, x: &SampledPath, t: f64, quad_step: f64) -> Result<f64> {
    let g = d0_derivative(obs)?;
    if !(t > 0.0) || !(quad_step > 0.0) {
        return Err(Error::InvalidParameter(format!("need t > 0 and quad_step > 0, got {t} and {quad_step}")));
    }
    let lhs = apply(&shift_obs(obs, t, x.dt())?, x) - apply(obs, x);
    let n = (t / quad_step).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let rhs: f64 = (0..n).map(|i| apply(&g.translate((i as f64 + 0.5) * h), x)).sum::<f64>() * h;
    Ok((lhs - rhs).abs())
}

/// `window(F) ⊆ I`.
pub fn depends_only_on(obs: &Observable, interval: &Window) -> bool {
    obs.window().is_subset_of(interval)
}

/// `F` is determined by the path strictly before `t`. For continuous paths the
/// value at `t` itself is the left limit, so `(-∞, t]` is allowed.
pub fn is_past_determined(obs: &Observable, t: f64, kind: PathKind) -> bool {
    match kind {
        PathKind::Cadlag => depends_only_on(obs, &Window::before(t)),
        PathKind::Continuous => depends_only_on(obs, &Window::up_to(t)),
    }
}

/// `n ∫_{t-2/n}^{t-1/n} f(x(s)) ds`, whose limsup is `F_t^⋆(f)`.
pub fn left_average(f: &TestFunction, x: &SampledPath, t: f64, n: u64) -> f64 {
    let n = n as f64;
    let mut buf = vec![0.0; x.dim()];
    n * integrate(f, x, t - 2.0 / n, t - 1.0 / n, &mut buf)
}

/// Slow reference for `F_t^⋆(f)`: the largest average over `n ∈ [n_min, 2 n_min]`.
pub fn left_lim_reference(f: &TestFunction, x: &SampledPath, t: f64, n_min: u64) -> f64 {
    (n_min..=2 * n_min).map(|n| left_average(f, x, t, n)).fold(f64::NEG_INFINITY, f64::max)
}

/// True when the tree contains a user closure.
pub fn has_closure(obs: &Observable) -> bool {
    obs.has_closure()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(kind: PathKind) -> SampledPath {
        SampledPath::from_fn(kind, -3.0, 3.0, 0.01, 1, |t| vec![t]).unwrap()
    }

    #[test]
    fn integral_of_identity() {
        let x = line(PathKind::Continuous);
        let f = Observable::integral(TestFunction::Coordinate(0), 0.0, 1.0);
        assert!((apply(&f, &x) - 0.5).abs() < 1e-12);
        // càdlàg reading holds the left node on each cell
        let c = line(PathKind::Cadlag);
        assert!((apply(&f, &c) - (0.5 - 0.005)).abs() < 1e-12);
    }

    #[test]
    fn integral_outside_window_uses_constant_extension() {
        let x = SampledPath::constant(PathKind::Cadlag, -1.0, 1.0, 0.1, &[2.0]).unwrap();
        let f = Observable::integral(TestFunction::Coordinate(0), -5.0, 5.0);
        assert!((apply(&f, &x) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn eval_and_left_limit() {
        let x = SampledPath::from_fn(PathKind::Cadlag, -1.0, 1.0, 0.1, 1, |t| vec![if t >= 0.0 { 1.0 } else { 0.0 }]).unwrap();
        let cos0 = Observable::eval(TestFunction::cosine(1.0), 0.0);
        assert_eq!(apply(&cos0, &SampledPath::constant(PathKind::Continuous, -1.0, 1.0, 0.1, &[0.0]).unwrap()), 1.0);
        assert_eq!(apply(&Observable::left_lim(TestFunction::Coordinate(0), 0.0), &x), 0.0);
        assert_eq!(apply(&Observable::eval(TestFunction::Coordinate(0), 0.0), &x), 1.0);
        assert_eq!(left_lim_reference(&TestFunction::Coordinate(0), &x, 0.0, 100), 0.0);
    }

    #[test]
    fn shift_is_structural() {
        let f = Observable::integral(TestFunction::cosine(2.0), -1.0, 0.5);
        assert_eq!(shift_obs(&f, 0.25, 0.05).unwrap(), Observable::integral(TestFunction::cosine(2.0), -0.75, 0.75));
        assert_eq!(shift_obs(&f, 0.0, 0.05).unwrap(), f);
        assert!(matches!(shift_obs(&f, 0.013, 0.01), Err(Error::NonGridShift { .. })));
        let x = line(PathKind::Continuous);
        let g = shift_obs(&f, 0.3, 0.01).unwrap();
        assert!((apply(&g, &x) - apply(&f, &x.shift(0.3).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn closure_shift() {
        let f = Observable::closure("x(0)", 10.0, Window::point(0.0), |p| p.evaluate(0.0).0[0]);
        let x = line(PathKind::Cadlag);
        let g = shift_obs(&f, 0.5, 0.01).unwrap();
        assert_eq!(g.window(), Window::point(0.5));
        assert_eq!(apply(&g, &x), apply(&f, &x.shift(0.5).unwrap()));
    }

    #[test]
    fn derivative_rules() {
        let f = TestFunction::gaussian(0.0, 1.0);
        let i = Observable::integral(f.clone(), -1.0, 0.0);
        assert_eq!(
            d0_derivative(&i).unwrap(),
            Observable::left_lim(f.clone(), 0.0) - Observable::left_lim(f.clone(), -1.0)
        );
        let j = Observable::integral(TestFunction::Coordinate(0), 0.0, 1.0);
        let p = i.clone() * j.clone();
        assert_eq!(
            d0_derivative(&p).unwrap(),
            d0_derivative(&i).unwrap() * j.clone() + i.clone() * d0_derivative(&j).unwrap()
        );
        assert_eq!(d0_derivative(&Observable::Const(3.0)).unwrap(), Observable::Const(0.0));
        assert!(matches!(d0_derivative(&Observable::eval(f, 0.0)), Err(Error::NotInD0Domain(_))));
    }

    #[test]
    fn cocycle_on_line() {
        let x = line(PathKind::Continuous);
        let f = Observable::integral(TestFunction::Coordinate(0), 0.0, 1.0);
        assert!(check_cocycle(&f, &x, 0.5, 0.01).unwrap() < 1e-10);
        assert_eq!(check_cocycle(&Observable::Const(2.0), &x, 0.5, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn windows() {
        let f = TestFunction::cosine(1.0);
        assert!(depends_only_on(&Observable::integral(f.clone(), -2.0, -1.0), &Window::before(0.0)));
        assert!(!depends_only_on(&Observable::eval(f.clone(), 1.0), &Window::before(0.0)));
        assert!(depends_only_on(&Observable::left_lim(f.clone(), 0.0), &Window::before(0.0)));
        let f0 = Observable::eval(f, 0.0);
        assert!(is_past_determined(&f0, 0.0, PathKind::Continuous));
        assert!(!is_past_determined(&f0, 0.0, PathKind::Cadlag));
    }

    #[test]
    fn bounds_compose() {
        let f = Observable::integral(TestFunction::cosine(1.0), 0.0, 2.0) * Observable::eval(TestFunction::gaussian(0.0, 1.0), 1.0);
        assert_eq!((f.clone() + Observable::Const(-3.0)).bound(), 5.0);
        assert_eq!(f.scale(-0.5).bound(), 1.0);
    }
}
