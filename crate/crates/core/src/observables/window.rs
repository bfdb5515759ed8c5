use serde::{Deserialize, Serialize};

use crate::path::{PathKind, GRID_TOL};

/// Left end of a dependence window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lower {
    NegInf,
    /// Every left neighbourhood `[t - ε, ...)` of `t`; the window of a left limit.
    Germ(f64),
    Closed(f64),
    Open(f64),
}

/// Right end of a dependence window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Upper {
    Open(f64),
    Closed(f64),
    PosInf,
}

impl Lower {
    fn key(self) -> (f64, u8) {
        match self {
            Lower::NegInf => (f64::NEG_INFINITY, 0),
            Lower::Germ(t) => (t, 0),
            Lower::Closed(t) => (t, 1),
            Lower::Open(t) => (t, 2),
        }
    }

    fn translate(self, s: f64) -> Self {
        match self {
            Lower::NegInf => Lower::NegInf,
            Lower::Germ(t) => Lower::Germ(t + s),
            Lower::Closed(t) => Lower::Closed(t + s),
            Lower::Open(t) => Lower::Open(t + s),
        }
    }
}

impl Upper {
    fn key(self) -> (f64, u8) {
        match self {
            Upper::Open(t) => (t, 0),
            Upper::Closed(t) => (t, 1),
            Upper::PosInf => (f64::INFINITY, 2),
        }
    }

    fn translate(self, s: f64) -> Self {
        match self {
            Upper::Open(t) => Upper::Open(t + s),
            Upper::Closed(t) => Upper::Closed(t + s),
            Upper::PosInf => Upper::PosInf,
        }
    }
}

fn key_le(a: (f64, u8), b: (f64, u8)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 <= b.1)
}

/// An interval of times over-approximating what an observable reads.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Empty,
    Interval { lo: Lower, hi: Upper },
}

impl Window {
    pub const FULL: Window = Window::Interval { lo: Lower::NegInf, hi: Upper::PosInf };

    /// `(-∞, t)`.
    pub fn before(t: f64) -> Self {
        Window::Interval { lo: Lower::NegInf, hi: Upper::Open(t) }
    }

    /// `(-∞, t]`.
    pub fn up_to(t: f64) -> Self {
        Window::Interval { lo: Lower::NegInf, hi: Upper::Closed(t) }
    }

    /// `[t, ∞)`.
    pub fn from(t: f64) -> Self {
        Window::Interval { lo: Lower::Closed(t), hi: Upper::PosInf }
    }

    /// `[a, b)`.
    pub fn half_open(a: f64, b: f64) -> Self {
        if a < b {
            Window::Interval { lo: Lower::Closed(a), hi: Upper::Open(b) }
        } else {
            Window::Empty
        }
    }

    pub fn point(t: f64) -> Self {
        Window::Interval { lo: Lower::Closed(t), hi: Upper::Closed(t) }
    }

    /// The left germ at `t`.
    pub fn left_germ(t: f64) -> Self {
        Window::Interval { lo: Lower::Germ(t), hi: Upper::Open(t) }
    }

    pub fn is_subset_of(&self, other: &Window) -> bool {
        match (self, other) {
            (Window::Empty, _) => true,
            (_, Window::Empty) => false,
            (Window::Interval { lo: l1, hi: h1 }, Window::Interval { lo: l2, hi: h2 }) => {
                key_le(l2.key(), l1.key()) && key_le(h1.key(), h2.key())
            }
        }
    }

    pub fn hull(&self, other: &Window) -> Window {
        match (self, other) {
            (Window::Empty, w) | (w, Window::Empty) => *w,
            (Window::Interval { lo: l1, hi: h1 }, Window::Interval { lo: l2, hi: h2 }) => Window::Interval {
                lo: if key_le(l1.key(), l2.key()) { *l1 } else { *l2 },
                hi: if key_le(h1.key(), h2.key()) { *h2 } else { *h1 },
            },
        }
    }

    pub fn translate(&self, s: f64) -> Window {
        match self {
            Window::Empty => Window::Empty,
            Window::Interval { lo, hi } => Window::Interval { lo: lo.translate(s), hi: hi.translate(s) },
        }
    }

    /// Grid indices of the nodes that can influence a value read on this window
    /// from a path of the given kind and step.
    pub fn node_range(&self, kind: PathKind, dt: f64) -> Option<(i64, i64)> {
        let Window::Interval { lo, hi } = self else {
            return None;
        };
        let down = |t: f64| (t / dt + GRID_TOL).floor() as i64;
        let up = |t: f64| (t / dt - GRID_TOL).ceil() as i64;
        let first = match *lo {
            Lower::NegInf => i64::MIN,
            Lower::Germ(t) => up(t) - 1,
            Lower::Closed(t) | Lower::Open(t) => down(t),
        };
        let last = match (*hi, kind) {
            (Upper::PosInf, _) => i64::MAX,
            (Upper::Open(t), PathKind::Cadlag) => up(t) - 1,
            (Upper::Closed(t), PathKind::Cadlag) => down(t),
            (Upper::Open(t) | Upper::Closed(t), PathKind::Continuous) => up(t),
        };
        (first <= last).then_some((first, last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn containment() {
        let past = Window::before(0.0);
        assert!(Window::half_open(-2.0, -1.0).is_subset_of(&past));
        assert!(!Window::point(1.0).is_subset_of(&past));
        assert!(Window::left_germ(0.0).is_subset_of(&past));
        assert!(!Window::point(0.0).is_subset_of(&past));
        assert!(Window::point(0.0).is_subset_of(&Window::up_to(0.0)));
        assert!(Window::Empty.is_subset_of(&Window::Empty));
        assert!(!Window::half_open(-1.0, 0.0).is_subset_of(&Window::Empty));
    }

    #[test]
    fn hull_and_translate() {
        let w = Window::half_open(-1.0, 0.0).hull(&Window::point(2.0));
        assert_eq!(w, Window::Interval { lo: Lower::Closed(-1.0), hi: Upper::Closed(2.0) });
        assert_eq!(Window::half_open(0.0, 1.0).translate(0.5), Window::half_open(0.5, 1.5));
        let g = Window::left_germ(1.0).hull(&Window::half_open(1.0, 2.0));
        assert_eq!(g, Window::Interval { lo: Lower::Germ(1.0), hi: Upper::Open(2.0) });
    }

    #[test]
    fn node_ranges() {
        let dt = 0.1;
        assert_eq!(Window::left_germ(0.0).node_range(PathKind::Cadlag, dt), Some((-1, -1)));
        assert_eq!(Window::half_open(0.0, 1.0).node_range(PathKind::Cadlag, dt), Some((0, 9)));
        assert_eq!(Window::half_open(0.0, 1.0).node_range(PathKind::Continuous, dt), Some((0, 10)));
        assert_eq!(Window::point(0.25).node_range(PathKind::Continuous, dt), Some((2, 3)));
        assert_eq!(Window::Empty.node_range(PathKind::Cadlag, dt), None);
    }
}
