//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
//! integrands, with mapped semi-infinite tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    /// Sum of the per-interval Kronrod-Gauss differences (max over components).
    pub error: f64,
    pub evaluations: usize,
}

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 0.0,
            rel: 1e-10,
            max_intervals: 20_000,
        }
    }
}

/// An integration range: finite, or a tail `[a, inf)` / `(-inf, a]` mapped
/// onto `[0, 1)` by `x = a +- scale * t / (1 - t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Finite(f64, f64),
    Upper { from: f64, scale: f64 },
    Lower { to: f64, scale: f64 },
}

impl Segment {
    fn unit_bounds(&self) -> (f64, f64) {
        match *self {
            Segment::Finite(a, b) => (a, b),
            _ => (0.0, 1.0),
        }
    }

    // (x, dx/dt) for the mapped variable.
    fn map(&self, t: f64) -> (f64, f64) {
        match *self {
            Segment::Finite(..) => (t, 1.0),
            Segment::Upper { from, scale } => {
                let u = 1.0 - t;
                (from + scale * t / u, scale / (u * u))
            }
            Segment::Lower { to, scale } => {
                let u = 1.0 - t;
                (to - scale * t / u, scale / (u * u))
            }
        }
    }
}

struct Piece<const N: usize> {
    seg: usize,
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Piece<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Piece<N> {}
impl<const N: usize> PartialOrd for Piece<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Piece<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<const N: usize, F>(f: &F, seg: &Segment, a: f64, b: f64) -> Result<([f64; N], f64)>
where
    F: Fn(f64) -> Result<[f64; N]> + Sync,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let nodes: Vec<f64> = (0..15)
        .map(|k| match k {
            0..=6 => c - h * XGK[k],
            7 => c,
            _ => c + h * XGK[14 - k],
        })
        .collect();
    let values: Vec<[f64; N]> = nodes
        .par_iter()
        .map(|&t| {
            let (x, jac) = seg.map(t);
            let mut v = f(x)?;
            for y in v.iter_mut() {
                *y *= jac;
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let mut kr = [0.0; N];
    let mut ga = [0.0; N];
    for (k, v) in values.iter().enumerate() {
        let j = if k <= 7 { k } else { 14 - k };
        for i in 0..N {
            kr[i] += WGK[j] * v[i];
            if j % 2 == 1 {
                ga[i] += WG[j / 2] * v[i];
            }
        }
    }
    let mut err = 0.0f64;
    for i in 0..N {
        kr[i] *= h;
        ga[i] *= h;
        if !kr[i].is_finite() {
            return Err(Error::Domain(format!("non-finite integrand near x = {}", seg.map(c).0)));
        }
        err = err.max((kr[i] - ga[i]).abs());
    }
    Ok((kr, err))
}

/// Integrates `f` over the union of `segments`, bisecting the interval with
/// the largest error estimate until the total estimate drops below
/// `max(tol.abs, tol.rel * max_i |I_i|)`.
pub fn integrate<const N: usize, F>(f: F, segments: &[Segment], tol: Tolerance) -> Result<Integral<N>>
where
    F: Fn(f64) -> Result<[f64; N]> + Sync,
{
    if segments.is_empty() {
        return Err(Error::Domain("no integration segments".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for (seg, s) in segments.iter().enumerate() {
        let (a, b) = s.unit_bounds();
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(a < b) {
            return Err(Error::Domain(format!("empty segment [{a}, {b}]")));
        }
        let (value, error) = kronrod(&f, s, a, b)?;
        evaluations += 15;
        heap.push(Piece { seg, a, b, value, error });
    }
    loop {
        let mut total = [0.0; N];
        let mut err = 0.0;
        for p in heap.iter() {
            for (t, v) in total.iter_mut().zip(&p.value) {
                *t += v;
            }
            err += p.error;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= tol.abs.max(tol.rel * scale) {
            return Ok(Integral {
                value: total,
                error: err,
                evaluations,
            });
        }
        if heap.len() >= tol.max_intervals {
            log::warn!("quadrature stopped at {} intervals, error estimate {err:e}", heap.len());
            return Ok(Integral {
                value: total,
                error: err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        let s = &segments[worst.seg];
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = kronrod(&f, s, a, b)?;
            evaluations += 15;
            heap.push(Piece {
                seg: worst.seg,
                a,
                b,
                value,
                error,
            });
        }
    }
}

/// Segments covering the real line with the given (unsorted, possibly
/// repeated) breakpoints and tails of width `tail_scale`.
pub fn real_line(breakpoints: &[f64], tail_scale: f64) -> Vec<Segment> {
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    if pts.is_empty() {
        pts.push(0.0);
    }
    let mut segs = vec![Segment::Lower {
        to: pts[0],
        scale: tail_scale,
    }];
    segs.extend(pts.windows(2).map(|w| Segment::Finite(w[0], w[1])));
    segs.push(Segment::Upper {
        from: *pts.last().expect("non-empty"),
        scale: tail_scale,
    });
    segs
}
