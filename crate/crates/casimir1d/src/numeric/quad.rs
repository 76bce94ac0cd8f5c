//! Globally adaptive Gauss–Kronrod (10/21) quadrature with user breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_394,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights belonging to XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            max_intervals: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    pub intervals: usize,
    pub converged: bool,
}

impl Quad {
    /// Sum of two independent integrals.
    pub fn plus(self, other: Quad) -> Quad {
        Quad {
            value: self.value + other.value,
            error: self.error + other.error,
            evals: self.evals + other.evals,
            intervals: self.intervals + other.intervals,
            converged: self.converged && other.converged,
        }
    }

    pub fn scaled(self, c: f64) -> Quad {
        Quad {
            value: c * self.value,
            error: c.abs() * self.error,
            ..self
        }
    }

    /// Turns a non-converged result into [`Error::Tolerance`].
    pub fn require(self, what: &str) -> Result<Quad> {
        if self.converged && self.value.is_finite() {
            Ok(self)
        } else {
            Err(Error::Tolerance {
                what: what.to_string(),
                estimate: self.value,
                error: self.error,
            })
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// ∫|f| over the segment.
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Kronrod value, error estimate and ∫|f| over [a, b].
fn gk21<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut resabs = fc.abs() * WGK[10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * h;
    resasc *= h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if !result.is_finite() {
        err = f64::INFINITY;
    }
    (result, err, resabs * h.abs())
}

/// Attainable tolerance: the requested one, but never below the rounding
/// level of ∫|f| (a cancelling integral cannot be resolved any finer).
fn effective_tol(opts: &QuadOptions, value: f64, abs: f64) -> f64 {
    opts.abs_tol.max(opts.rel_tol * value.abs()).max(50.0 * f64::EPSILON * abs)
}

/// ∫_a^b f(x) dx, subdividing first at the given breakpoints (those outside
/// (a, b) are ignored).
pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Quad {
    if a == b {
        return Quad {
            converged: true,
            ..Quad::default()
        };
    }
    if b < a {
        let q = integrate(f, b, a, breakpoints, opts);
        return q.scaled(-1.0);
    }
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b && x.is_finite())
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut edges = Vec::with_capacity(pts.len() + 2);
    edges.push(a);
    edges.extend(pts);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut total_abs = 0.0;
    let mut evals = 0;
    for w in edges.windows(2) {
        let (v, e, r) = gk21(f, w[0], w[1]);
        evals += 21;
        total += v;
        total_err += e;
        total_abs += r;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
            abs: r,
        });
    }

    let limit = opts.max_intervals.max(edges.len());
    loop {
        let tol = effective_tol(opts, total, total_abs);
        if total_err <= tol || heap.len() >= limit {
            break;
        }
        let seg = heap.pop().expect("heap holds at least one segment");
        let m = 0.5 * (seg.a + seg.b);
        if m <= seg.a || m >= seg.b {
            // Interval exhausted at machine resolution.
            heap.push(Segment {
                error: 0.0,
                ..seg
            });
            total_err -= seg.error;
            continue;
        }
        let (v1, e1, r1) = gk21(f, seg.a, m);
        let (v2, e2, r2) = gk21(f, m, seg.b);
        evals += 42;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        total_abs += r1 + r2 - seg.abs;
        heap.push(Segment {
            a: seg.a,
            b: m,
            value: v1,
            error: e1,
            abs: r1,
        });
        heap.push(Segment {
            a: m,
            b: seg.b,
            value: v2,
            error: e2,
            abs: r2,
        });
    }

    // Re-sum to shed accumulated rounding from incremental updates.
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: f64 = segs.iter().map(|s| s.value).sum();
    let error: f64 = segs.iter().map(|s| s.error).sum();
    let abs: f64 = segs.iter().map(|s| s.abs).sum();
    let tol = effective_tol(opts, value, abs);
    Quad {
        value,
        error,
        evals,
        intervals: segs.len(),
        converged: error <= tol && value.is_finite(),
    }
}

/// ∫_0^b f(x) dx for integrands with an integrable (e.g. logarithmic)
/// singularity at 0, via x = e^u. The neglected piece below b·e^{−60} is
/// below any attainable tolerance for |f| growing at most like |ln x|.
pub fn integrate_from_zero_log<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    b: f64,
    opts: &QuadOptions,
) -> Quad {
    integrate_from_zero_log_floor(f, b, 0.0, opts)
}

/// As [`integrate_from_zero_log`], but never samples below `x_min`. Useful
/// when the singular point is only known to floating-point precision: the
/// skipped piece ∫_0^{x_min} is of order x_min·|ln x_min|.
pub fn integrate_from_zero_log_floor<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    b: f64,
    x_min: f64,
    opts: &QuadOptions,
) -> Quad {
    let ub = b.ln();
    let lo = (ub - 60.0).max(x_min.ln());
    if lo >= ub {
        return Quad {
            converged: true,
            ..Quad::default()
        };
    }
    let g = |u: f64| {
        let x = u.exp();
        f(x) * x
    };
    let pts: Vec<f64> = [ub - 40.0, ub - 20.0, ub - 5.0].into_iter().filter(|&u| u > lo).collect();
    integrate(&g, lo, ub, &pts, opts)
}
