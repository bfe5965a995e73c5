//! Globally adaptive 21-point Gauss–Kronrod quadrature over a list of mapped
//! segments: finite intervals, semi-infinite tails (`x = 1/u`), and symmetric
//! principal-value windows `∫ [f(c+t) + f(c−t)] dt`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525478826,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// Tolerances for [`integrate`]. Converged when the summed error estimate is
/// at most `max(abs_tol, rel_tol · |I|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-9,
            max_panels: 1 << 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Region of integration together with its change of variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    /// `∫_lo^hi f(x) dx`.
    Interval { lo: f64, hi: f64 },
    /// `∫_start^∞ f(x) dx` with `x = 1/u`; requires `start > 0`.
    UpperTail { start: f64 },
    /// `∫_{-∞}^end f(x) dx` with `x = 1/u`; requires `end < 0`.
    LowerTail { end: f64 },
    /// `∫_lo^hi [f(center + t) + f(center − t)] dt`, `0 ≤ lo < hi`.
    Symmetric { center: f64, lo: f64, hi: f64 },
}

impl Segment {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Segment::Interval { lo, hi } => (lo, hi),
            Segment::UpperTail { start } => (0.0, 1.0 / start),
            Segment::LowerTail { end } => (1.0 / end, 0.0),
            Segment::Symmetric { lo, hi, .. } => (lo, hi),
        }
    }

    #[inline]
    fn eval<F: Fn(f64) -> f64>(&self, f: &F, s: f64) -> f64 {
        match *self {
            Segment::Interval { .. } => f(s),
            Segment::UpperTail { .. } | Segment::LowerTail { .. } => f(1.0 / s) / (s * s),
            Segment::Symmetric { center, .. } => f(center + s) + f(center - s),
        }
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gk21<F: Fn(f64) -> f64>(f: &F, seg: &Segment, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = seg.eval(f, center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let f1 = seg.eval(f, center - x);
        let f2 = seg.eval(f, center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtw = 2 * j;
        let x = half * XGK[jtw];
        let f1 = seg.eval(f, center - x);
        let f2 = seg.eval(f, center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    let habs = half.abs();
    let value = res_k * half;
    (value, rescale_error(err, res_abs * habs, res_asc * habs))
}

struct Panel {
    segment: usize,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

#[derive(PartialEq)]
struct Keyed(f64, usize);

impl Eq for Keyed {}

impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Keyed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// Integrates `f` over the union of `segments`, each split initially at the
/// given interior `cuts` (in the segment's own variable) when they fall inside.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    segments: &[(Segment, Vec<f64>)],
    cfg: &QuadConfig,
) -> Result<Estimate> {
    let mut panels: Vec<Panel> = Vec::new();
    for (idx, (seg, cuts)) in segments.iter().enumerate() {
        let (a, b) = seg.bounds();
        if !(b > a) {
            continue;
        }
        let mut pts = vec![a];
        let mut inner: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        pts.extend(inner);
        pts.push(b);
        for w in pts.windows(2) {
            let (value, error) = gk21(&f, seg, w[0], w[1]);
            panels.push(Panel {
                segment: idx,
                lo: w[0],
                hi: w[1],
                value,
                error,
            });
        }
    }

    let mut heap: BinaryHeap<Keyed> = panels
        .iter()
        .enumerate()
        .map(|(i, p)| Keyed(p.error, i))
        .collect();
    let mut frozen_error = 0.0;
    let mut active = panels.len();

    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if err <= target {
            return Ok(Estimate {
                value: total,
                error: err,
                panels: active,
            });
        }
        let stuck = frozen_error > target;
        let Some(Keyed(_, i)) = heap.pop() else {
            return Err(quad_failure(segments, total, err, active));
        };
        if active >= cfg.max_panels || stuck {
            return Err(quad_failure(segments, total, err, active));
        }
        let (seg_idx, lo, hi) = (panels[i].segment, panels[i].lo, panels[i].hi);
        let mid = 0.5 * (lo + hi);
        let width_floor = 64.0 * f64::EPSILON * (lo.abs() + hi.abs()).max(f64::MIN_POSITIVE);
        if hi - lo <= width_floor || mid <= lo || mid >= hi {
            frozen_error += panels[i].error;
            continue;
        }
        let seg = &segments[seg_idx].0;
        let (v1, e1) = gk21(&f, seg, lo, mid);
        let (v2, e2) = gk21(&f, seg, mid, hi);
        panels[i] = Panel {
            segment: seg_idx,
            lo,
            hi: mid,
            value: v1,
            error: e1,
        };
        panels.push(Panel {
            segment: seg_idx,
            lo: mid,
            hi,
            value: v2,
            error: e2,
        });
        heap.push(Keyed(e1, i));
        heap.push(Keyed(e2, panels.len() - 1));
        active += 1;
    }
}

fn quad_failure(segments: &[(Segment, Vec<f64>)], estimate: f64, error: f64, panels: usize) -> Error {
    let lower = segments
        .iter()
        .map(|(s, _)| match *s {
            Segment::Interval { lo, .. } => lo,
            Segment::UpperTail { start } => start,
            Segment::LowerTail { .. } => f64::NEG_INFINITY,
            Segment::Symmetric { center, hi, .. } => center - hi,
        })
        .fold(f64::INFINITY, f64::min);
    let upper = segments
        .iter()
        .map(|(s, _)| match *s {
            Segment::Interval { hi, .. } => hi,
            Segment::UpperTail { .. } => f64::INFINITY,
            Segment::LowerTail { end } => end,
            Segment::Symmetric { center, hi, .. } => center + hi,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Error::Quadrature {
        lower,
        upper,
        estimate,
        error,
        panels,
    }
}

/// `∫_lo^hi f(x) dx` with breakpoints.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    cuts: &[f64],
    cfg: &QuadConfig,
) -> Result<Estimate> {
    integrate(f, &[(Segment::Interval { lo, hi }, cuts.to_vec())], cfg)
}

/// `∫_lo^∞ f(x) dx` with `lo ≥ 0`: the finite part up to `tail_start` uses
/// `cuts`, the rest the `x = 1/u` map.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    tail_start: f64,
    cuts: &[f64],
    cfg: &QuadConfig,
) -> Result<Estimate> {
    let tail_start = tail_start.max(lo).max(f64::MIN_POSITIVE);
    let segments = [
        (
            Segment::Interval {
                lo,
                hi: tail_start,
            },
            cuts.to_vec(),
        ),
        (Segment::UpperTail { start: tail_start }, tail_cuts(tail_start, cuts)),
    ];
    integrate(f, &segments, cfg)
}

/// Breakpoints beyond the tail start mapped into the `u = 1/x` variable.
pub(crate) fn tail_cuts(start: f64, cuts: &[f64]) -> Vec<f64> {
    cuts.iter()
        .filter(|&&c| c > start)
        .map(|&c| 1.0 / c)
        .collect()
}
