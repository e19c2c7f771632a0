//! C ABI over `julia-cycles`.
//!
//! Handles (`JcExpr`, `JcRaster`, `JcCycleList`) are opaque and owned by the
//! caller once returned; release them with the matching `*_free` function.
//! Every fallible call returns a [`JcStatus`]; on failure the message is
//! available from [`jc_last_error`] on the same thread. Panics never cross
//! the boundary and are reported as `JC_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use julia_cycles::cycles::{find_cycles, Cycle, CycleClass, CycleSettings};
use julia_cycles::dynamics::{marty_raster, GridSpec, JuliaRaster, PixelFlag};
use julia_cycles::fnexpr::{eval_jet, iterate_jet, parse, Expr};
use julia_cycles::newton::Region;
use julia_cycles::sphere::{
    chordal_distance, marty_derivative, spherical_derivative, Chart, Jet, SpherePoint,
};
use julia_cycles::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    EvalError = 4,
    InvalidArgument = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for JcComplex {
    fn from(z: Complex64) -> Self {
        JcComplex { re: z.re, im: z.im }
    }
}

impl From<JcComplex> for Complex64 {
    fn from(z: JcComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// A point of the Riemann sphere; `value` is ignored when `is_infinite`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcSpherePoint {
    pub is_infinite: bool,
    pub value: JcComplex,
}

impl From<JcSpherePoint> for SpherePoint {
    fn from(p: JcSpherePoint) -> Self {
        if p.is_infinite {
            SpherePoint::Infinity
        } else {
            SpherePoint::new(p.value.into())
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JcChart {
    /// `value = f(z)`.
    Identity = 0,
    /// `value = 1/f(z)`.
    Reciprocal = 1,
}

/// Value and derivative of a function at `base`, in the given chart.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcJet {
    pub chart: JcChart,
    pub value: JcComplex,
    pub deriv: JcComplex,
    pub base: JcComplex,
}

impl From<Jet> for JcJet {
    fn from(j: Jet) -> Self {
        let chart = match j.chart {
            Chart::Identity => JcChart::Identity,
            Chart::Reciprocal => JcChart::Reciprocal,
        };
        JcJet {
            chart,
            value: j.value.into(),
            deriv: j.deriv.into(),
            base: j.base.into(),
        }
    }
}

impl From<JcJet> for Jet {
    fn from(j: JcJet) -> Self {
        let chart = match j.chart {
            JcChart::Identity => Chart::Identity,
            JcChart::Reciprocal => Chart::Reciprocal,
        };
        Jet {
            chart,
            value: j.value.into(),
            deriv: j.deriv.into(),
            base: j.base.into(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JcPixelFlag {
    Julia = 0,
    Fatou = 1,
    PoleOrbit = 2,
}

impl From<PixelFlag> for JcPixelFlag {
    fn from(f: PixelFlag) -> Self {
        match f {
            PixelFlag::Julia => JcPixelFlag::Julia,
            PixelFlag::Fatou => JcPixelFlag::Fatou,
            PixelFlag::PoleOrbit => JcPixelFlag::PoleOrbit,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JcCycleClass {
    Repelling = 0,
    Attracting = 1,
    Indifferent = 2,
}

/// Summary of one cycle; the orbit itself is read with
/// [`jc_cycle_list_points`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcCycleInfo {
    pub period: usize,
    pub representative: JcComplex,
    pub multiplier: JcComplex,
    pub kind: JcCycleClass,
    pub residual: f64,
}

/// Parsed expression.
pub struct JcExpr(Expr);

/// Julia raster.
pub struct JcRaster(JuliaRaster);

/// Cycles in increasing period.
pub struct JcCycleList(Vec<Cycle>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: JcStatus, msg: impl Into<Vec<u8>>) -> JcStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> JcStatus) -> JcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(JcStatus::Ok) => {
            set_error("");
            JcStatus::Ok
        }
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(JcStatus::Panic, msg)
        }
    }
}

macro_rules! deref {
    ($p:expr) => {
        match $p.as_ref() {
            Some(v) => v,
            None => {
                return fail(
                    JcStatus::NullPointer,
                    concat!("`", stringify!($p), "` is null"),
                )
            }
        }
    };
}

macro_rules! out {
    ($p:expr) => {
        match $p.as_mut() {
            Some(v) => v,
            None => {
                return fail(
                    JcStatus::NullPointer,
                    concat!("`", stringify!($p), "` is null"),
                )
            }
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jc_version() -> *const c_char {
    static VERSION: &str = concat!("julia-cycles ", env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn jc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn jc_expr_parse(text: *const c_char, out: *mut *mut JcExpr) -> JcStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        if text.is_null() {
            return fail(JcStatus::NullPointer, "`text` is null");
        }
        let text = match CStr::from_ptr(text).to_str() {
            Ok(t) => t,
            Err(e) => return fail(JcStatus::InvalidUtf8, e.to_string()),
        };
        match parse(text) {
            Ok(e) => {
                *out = Box::into_raw(Box::new(JcExpr(e)));
                JcStatus::Ok
            }
            Err(e) => fail(JcStatus::ParseError, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn jc_expr_free(expr: *mut JcExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Canonical, fully parenthesised text of `expr`. Free the result with
/// [`jc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn jc_expr_to_string(expr: *const JcExpr, out: *mut *mut c_char) -> JcStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        let e = deref!(expr);
        match CString::new(e.0.to_string()) {
            Ok(s) => {
                *out = s.into_raw();
                JcStatus::Ok
            }
            Err(e) => fail(JcStatus::InvalidArgument, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn jc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn jc_eval_jet(
    expr: *const JcExpr,
    z: JcComplex,
    out: *mut JcJet,
) -> JcStatus {
    guard(|| {
        let e = deref!(expr);
        let out = out!(out);
        match eval_jet(&e.0, z.into()) {
            Ok(j) => {
                *out = j.into();
                JcStatus::Ok
            }
            Err(err) => fail(JcStatus::EvalError, err.to_string()),
        }
    })
}

/// Jet of the `n`-th iterate; `deriv` is the chain-rule derivative `(f^n)'(z)`.
#[no_mangle]
pub unsafe extern "C" fn jc_iterate_jet(
    expr: *const JcExpr,
    z: JcComplex,
    n: usize,
    out: *mut JcJet,
) -> JcStatus {
    guard(|| {
        let e = deref!(expr);
        let out = out!(out);
        match iterate_jet(&e.0, z.into(), n) {
            Ok(j) => {
                *out = j.into();
                JcStatus::Ok
            }
            Err(err) => fail(JcStatus::EvalError, err.to_string()),
        }
    })
}

/// Chordal distance on the sphere of diameter 2.
#[no_mangle]
pub extern "C" fn jc_chordal_distance(a: JcSpherePoint, b: JcSpherePoint) -> f64 {
    chordal_distance(a.into(), b.into())
}

/// `|f'(z)| (1 + |z|^2) / (1 + |f(z)|^2)`; NaN for a null jet.
#[no_mangle]
pub unsafe extern "C" fn jc_spherical_derivative(jet: *const JcJet) -> f64 {
    jet.as_ref()
        .map_or(f64::NAN, |j| spherical_derivative(&(*j).into()))
}

/// `|f'(z)| / (1 + |f(z)|^2)`; NaN for a null jet.
#[no_mangle]
pub unsafe extern "C" fn jc_marty_derivative(jet: *const JcJet) -> f64 {
    jet.as_ref()
        .map_or(f64::NAN, |j| marty_derivative(&(*j).into()))
}

/// Classifies every pixel of an `nx × ny` grid of the given size around
/// `center` by growth of the iterates' spherical derivative.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn jc_raster_new(
    expr: *const JcExpr,
    center: JcComplex,
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    nmax: usize,
    growth_threshold: f64,
    out: *mut *mut JcRaster,
) -> JcStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        let e = deref!(expr);
        let grid = match GridSpec::new(center.into(), width, height, nx, ny) {
            Ok(g) => g,
            Err(err) => return fail(JcStatus::InvalidArgument, err.to_string()),
        };
        match marty_raster(&e.0, &grid, nmax, growth_threshold) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(JcRaster(r)));
                JcStatus::Ok
            }
            Err(err) => fail(JcStatus::InvalidArgument, err.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn jc_raster_free(raster: *mut JcRaster) {
    if !raster.is_null() {
        drop(Box::from_raw(raster));
    }
}

#[no_mangle]
pub unsafe extern "C" fn jc_raster_size(
    raster: *const JcRaster,
    nx: *mut usize,
    ny: *mut usize,
) -> JcStatus {
    guard(|| {
        let r = deref!(raster);
        *out!(nx) = r.0.grid.nx;
        *out!(ny) = r.0.grid.ny;
        JcStatus::Ok
    })
}

/// Flag of pixel `(i, j)`; row `j = 0` is the top edge.
#[no_mangle]
pub unsafe extern "C" fn jc_raster_flag(
    raster: *const JcRaster,
    i: usize,
    j: usize,
    out: *mut JcPixelFlag,
) -> JcStatus {
    guard(|| {
        let r = deref!(raster);
        let out = out!(out);
        if i >= r.0.grid.nx || j >= r.0.grid.ny {
            return fail(
                JcStatus::OutOfRange,
                format!("pixel ({i}, {j}) outside {}x{}", r.0.grid.nx, r.0.grid.ny),
            );
        }
        *out = r.0.flag_at(i, j).into();
        JcStatus::Ok
    })
}

/// Sample point of pixel `(i, j)`.
#[no_mangle]
pub unsafe extern "C" fn jc_raster_point(
    raster: *const JcRaster,
    i: usize,
    j: usize,
    out: *mut JcComplex,
) -> JcStatus {
    guard(|| {
        let r = deref!(raster);
        let out = out!(out);
        if i >= r.0.grid.nx || j >= r.0.grid.ny {
            return fail(
                JcStatus::OutOfRange,
                format!("pixel ({i}, {j}) outside {}x{}", r.0.grid.nx, r.0.grid.ny),
            );
        }
        *out = r.0.grid.point(i, j).into();
        JcStatus::Ok
    })
}

/// Counts of Julia, Fatou and pole-orbit pixels.
#[no_mangle]
pub unsafe extern "C" fn jc_raster_counts(
    raster: *const JcRaster,
    julia: *mut usize,
    fatou: *mut usize,
    pole_orbit: *mut usize,
) -> JcStatus {
    guard(|| {
        let c = deref!(raster).0.counts();
        *out!(julia) = c.julia;
        *out!(fatou) = c.fatou;
        *out!(pole_orbit) = c.pole_orbit;
        JcStatus::Ok
    })
}

/// Cycles of period dividing `period` from an `nre × nim` Newton seed
/// lattice on the rectangle, with default tolerances.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn jc_find_cycles(
    expr: *const JcExpr,
    period: usize,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nre: usize,
    nim: usize,
    out: *mut *mut JcCycleList,
) -> JcStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        let e = deref!(expr);
        if period == 0 || nre == 0 || nim == 0 {
            return fail(
                JcStatus::InvalidArgument,
                "period and lattice sizes must be positive",
            );
        }
        if !(re_min <= re_max && im_min <= im_max) {
            return fail(JcStatus::InvalidArgument, "empty region");
        }
        let region = Region::new(re_min, re_max, im_min, im_max);
        let cycles = find_cycles(&e.0, period, &region, (nre, nim), &CycleSettings::default());
        *out = Box::into_raw(Box::new(JcCycleList(cycles)));
        JcStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn jc_cycle_list_free(list: *mut JcCycleList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

/// Number of cycles; 0 for a null list.
#[no_mangle]
pub unsafe extern "C" fn jc_cycle_list_len(list: *const JcCycleList) -> usize {
    list.as_ref().map_or(0, |l| l.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn jc_cycle_list_get(
    list: *const JcCycleList,
    index: usize,
    out: *mut JcCycleInfo,
) -> JcStatus {
    guard(|| {
        let l = deref!(list);
        let out = out!(out);
        let Some(c) = l.0.get(index) else {
            return fail(
                JcStatus::OutOfRange,
                format!("cycle {index} of {}", l.0.len()),
            );
        };
        let kind = match c.class {
            CycleClass::Repelling => JcCycleClass::Repelling,
            CycleClass::Attracting => JcCycleClass::Attracting,
            CycleClass::Indifferent => JcCycleClass::Indifferent,
        };
        *out = JcCycleInfo {
            period: c.period,
            representative: c.representative().into(),
            multiplier: c.multiplier.into(),
            kind,
            residual: c.residual,
        };
        JcStatus::Ok
    })
}

/// Copies the orbit of cycle `index` into `buf`. `written` receives the
/// orbit length; `JC_STATUS_BUFFER_TOO_SMALL` if `cap` is less than that.
#[no_mangle]
pub unsafe extern "C" fn jc_cycle_list_points(
    list: *const JcCycleList,
    index: usize,
    buf: *mut JcComplex,
    cap: usize,
    written: *mut usize,
) -> JcStatus {
    guard(|| {
        let l = deref!(list);
        let written = out!(written);
        let Some(c) = l.0.get(index) else {
            return fail(
                JcStatus::OutOfRange,
                format!("cycle {index} of {}", l.0.len()),
            );
        };
        *written = c.points.len();
        if cap < c.points.len() {
            return fail(
                JcStatus::BufferTooSmall,
                format!("need {} points, have room for {cap}", c.points.len()),
            );
        }
        if buf.is_null() {
            return fail(JcStatus::NullPointer, "`buf` is null");
        }
        for (k, z) in c.points.iter().enumerate() {
            *buf.add(k) = (*z).into();
        }
        JcStatus::Ok
    })
}
