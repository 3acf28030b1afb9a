//! C ABI over `pnsgd-privacy`.
//!
//! Every fallible function returns a [`PnsgdStatus`] and writes results
//! through out-pointers, which are left untouched on failure. The message
//! of the most recent failure on the calling thread is available from
//! [`pnsgd_last_error_message`].
//!
//! Handles are created by `*_new*` functions and must be released with the
//! matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pnsgd_privacy::bounds::{
    ab_constants, delta_star_fixed_gaussian, delta_star_fixed_laplace, fixed_scale, online_delta_bracket,
    online_delta_finite, online_scale, per_index_delta, randomly_stopped_delta, shuffled_delta,
    shuffled_delta_fixed_noise,
};
use pnsgd_privacy::composition::{
    compose_epochs, dp_to_gdp, dp_to_rdp, gdp_compose, gdp_to_dp, rdp_to_dp, GdpParam, Method, RdpPoint,
};
use pnsgd_privacy::special::{lambert_w0, log_q, q_function, theta};
use pnsgd_privacy::{Geometry, LossProfile, NoiseKind, NoiseModel, PrivacyBudget, PrivacyError, Schedule, ScheduleMode};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnsgdStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    IndexOutOfRange = 3,
    GeometryMismatch = 4,
    NonConvergence = 5,
    Quadrature = 6,
    DimensionMismatch = 7,
    NoRoot = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnsgdNoiseKind {
    Gaussian = 0,
    Laplace = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnsgdGeometryKind {
    /// Convex set of diameter `diameter`; pairs with Gaussian noise.
    Ball = 0,
    /// Interval `[lower, upper]`; pairs with Laplace noise.
    Interval = 1,
}

/// Fields not used by `kind` are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PnsgdGeometry {
    pub kind: PnsgdGeometryKind,
    pub diameter: f64,
    pub lower: f64,
    pub upper: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PnsgdLossProfile {
    pub lipschitz: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub learning_rate: f64,
}

/// Noise model, loss profile and geometry of one PNSGD run.
pub struct PnsgdMechanism {
    noise: NoiseModel,
    profile: LossProfile,
    geometry: Geometry,
}

/// A noise-decay schedule bound to a noise kind, loss profile and geometry.
pub struct PnsgdSchedule {
    schedule: Schedule,
    kind: NoiseKind,
    profile: LossProfile,
    geometry: Geometry,
}

enum Failure {
    Null(&'static str),
    Privacy(PrivacyError),
}

impl From<PrivacyError> for Failure {
    fn from(e: PrivacyError) -> Self {
        Failure::Privacy(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn status_of(e: &PrivacyError) -> PnsgdStatus {
    match e {
        PrivacyError::Domain { .. } => PnsgdStatus::Domain,
        PrivacyError::IndexOutOfRange { .. } => PnsgdStatus::IndexOutOfRange,
        PrivacyError::GeometryMismatch { .. } => PnsgdStatus::GeometryMismatch,
        PrivacyError::NonConvergence { .. } => PnsgdStatus::NonConvergence,
        PrivacyError::Quadrature { .. } => PnsgdStatus::Quadrature,
        PrivacyError::DimensionMismatch { .. } => PnsgdStatus::DimensionMismatch,
        PrivacyError::NoRoot(_) => PnsgdStatus::NoRoot,
    }
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PnsgdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            PnsgdStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer passed as `{name}`"));
            PnsgdStatus::NullPointer
        }
        Ok(Err(Failure::Privacy(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            PnsgdStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be null or valid for reads of `T`.
unsafe fn read<'a, T>(ptr: *const T, name: &'static str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or(Failure::Null(name))
}

/// # Safety
/// `ptr` must be null or valid for writes of `T`.
unsafe fn write<T>(ptr: *mut T, name: &'static str, value: T) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    ptr.write(value);
    Ok(())
}

fn noise_kind(kind: PnsgdNoiseKind) -> NoiseKind {
    match kind {
        PnsgdNoiseKind::Gaussian => NoiseKind::Gaussian,
        PnsgdNoiseKind::Laplace => NoiseKind::Laplace,
    }
}

fn geometry(g: &PnsgdGeometry) -> Result<Geometry, PrivacyError> {
    match g.kind {
        PnsgdGeometryKind::Ball => Geometry::ball(g.diameter),
        PnsgdGeometryKind::Interval => Geometry::interval(g.lower, g.upper),
    }
}

fn profile(p: &PnsgdLossProfile) -> Result<LossProfile, PrivacyError> {
    LossProfile::new(p.lipschitz, p.smoothness, p.strong_convexity, p.learning_rate)
}

/// Message of the last failure on this thread, or null after a success.
///
/// The pointer stays valid until the next call into this library from the
/// same thread.
#[no_mangle]
pub extern "C" fn pnsgd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pnsgd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Gaussian upper tail `Q(t)`.
#[no_mangle]
pub extern "C" fn pnsgd_q_function(t: f64) -> f64 {
    q_function(t)
}

/// `ln Q(t)`, finite far past the underflow of `Q`.
#[no_mangle]
pub extern "C" fn pnsgd_log_q(t: f64) -> f64 {
    log_q(t)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_theta(gamma: f64, r: f64, out: *mut f64) -> PnsgdStatus {
    guard(|| write(out, "out", theta(gamma, r)?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_lambert_w0(x: f64, out: *mut f64) -> PnsgdStatus {
    guard(|| write(out, "out", lambert_w0(x)?))
}

/// Limit of the shuffled bound under the fixed schedule with constant `c1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_delta_star_fixed(kind: PnsgdNoiseKind, epsilon: f64, c1: f64, out: *mut f64) -> PnsgdStatus {
    guard(|| {
        let star = match noise_kind(kind) {
            NoiseKind::Laplace => delta_star_fixed_laplace(epsilon, c1)?,
            NoiseKind::Gaussian => delta_star_fixed_gaussian(epsilon, c1)?,
        };
        write(out, "out", star)
    })
}

/// # Safety
/// `profile` and `geometry` must be valid for reads, `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_mechanism_new(
    kind: PnsgdNoiseKind,
    scale: f64,
    profile: *const PnsgdLossProfile,
    geometry: *const PnsgdGeometry,
    out: *mut *mut PnsgdMechanism,
) -> PnsgdStatus {
    guard(|| {
        let mechanism = PnsgdMechanism {
            noise: NoiseModel::new(noise_kind(kind), scale)?,
            profile: self::profile(read(profile, "profile")?)?,
            geometry: self::geometry(read(geometry, "geometry")?)?,
        };
        write(out, "out", Box::into_raw(Box::new(mechanism)))
    })
}

/// # Safety
/// `mechanism` must be null or come from [`pnsgd_mechanism_new`] and not
/// have been freed.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_mechanism_free(mechanism: *mut PnsgdMechanism) {
    if !mechanism.is_null() {
        drop(Box::from_raw(mechanism));
    }
}

fn constants(m: &PnsgdMechanism, epsilon: f64) -> Result<pnsgd_privacy::BoundConstants, PrivacyError> {
    ab_constants(&m.noise, &m.profile, &m.geometry, epsilon)
}

/// The pair `(A, B)` of the per-index bound `A·B^{n−i}`.
///
/// # Safety
/// `mechanism` must be a live handle; `out_a` and `out_b` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_mechanism_constants(
    mechanism: *const PnsgdMechanism,
    epsilon: f64,
    out_a: *mut f64,
    out_b: *mut f64,
) -> PnsgdStatus {
    guard(|| {
        let c = constants(read(mechanism, "mechanism")?, epsilon)?;
        if out_b.is_null() {
            return Err(Failure::Null("out_b"));
        }
        write(out_a, "out_a", c.a)?;
        write(out_b, "out_b", c.b)
    })
}

/// # Safety
/// `mechanism` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_mechanism_per_index_delta(
    mechanism: *const PnsgdMechanism,
    epsilon: f64,
    n: u64,
    index: u64,
    out: *mut f64,
) -> PnsgdStatus {
    guard(|| {
        let c = constants(read(mechanism, "mechanism")?, epsilon)?;
        write(out, "out", per_index_delta(&c, n, index)?)
    })
}

/// # Safety
/// `mechanism` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_mechanism_randomly_stopped_delta(
    mechanism: *const PnsgdMechanism,
    epsilon: f64,
    n: u64,
    index: u64,
    out: *mut f64,
) -> PnsgdStatus {
    guard(|| {
        let c = constants(read(mechanism, "mechanism")?, epsilon)?;
        write(out, "out", randomly_stopped_delta(&c, n, index)?)
    })
}

/// # Safety
/// `mechanism` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_mechanism_shuffled_delta(
    mechanism: *const PnsgdMechanism,
    epsilon: f64,
    n: u64,
    out: *mut f64,
) -> PnsgdStatus {
    guard(|| {
        let c = constants(read(mechanism, "mechanism")?, epsilon)?;
        write(out, "out", shuffled_delta(&c, n)?)
    })
}

unsafe fn schedule_new(
    schedule: Result<Schedule, PrivacyError>,
    kind: PnsgdNoiseKind,
    profile: *const PnsgdLossProfile,
    geometry: *const PnsgdGeometry,
    out: *mut *mut PnsgdSchedule,
) -> PnsgdStatus {
    guard(|| {
        let handle = PnsgdSchedule {
            schedule: schedule?,
            kind: noise_kind(kind),
            profile: self::profile(read(profile, "profile")?)?,
            geometry: self::geometry(read(geometry, "geometry")?)?,
        };
        write(out, "out", Box::into_raw(Box::new(handle)))
    })
}

/// Fixed schedule: one noise level per dataset size `n`.
///
/// # Safety
/// `profile` and `geometry` must be valid for reads, `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_schedule_new_fixed(
    kind: PnsgdNoiseKind,
    c1: f64,
    c2: f64,
    profile: *const PnsgdLossProfile,
    geometry: *const PnsgdGeometry,
    out: *mut *mut PnsgdSchedule,
) -> PnsgdStatus {
    schedule_new(Schedule::fixed(c1, c2), kind, profile, geometry, out)
}

/// Online schedule: the `j`-th update uses the fixed-schedule level at `j^alpha`.
///
/// # Safety
/// `profile` and `geometry` must be valid for reads, `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_schedule_new_online(
    kind: PnsgdNoiseKind,
    c1: f64,
    c2: f64,
    alpha: f64,
    profile: *const PnsgdLossProfile,
    geometry: *const PnsgdGeometry,
    out: *mut *mut PnsgdSchedule,
) -> PnsgdStatus {
    schedule_new(Schedule::online(c1, c2, alpha), kind, profile, geometry, out)
}

/// # Safety
/// `schedule` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_schedule_free(schedule: *mut PnsgdSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Noise scale at dataset size `n` (fixed) or update index `n` (online).
///
/// # Safety
/// `schedule` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_schedule_scale(schedule: *const PnsgdSchedule, n: u64, out: *mut f64) -> PnsgdStatus {
    guard(|| {
        let s = read(schedule, "schedule")?;
        let scale = match s.schedule.mode {
            ScheduleMode::Fixed => fixed_scale(n, &s.schedule, &s.profile, &s.geometry, s.kind)?,
            ScheduleMode::Online { .. } => online_scale(n, &s.schedule, &s.profile, &s.geometry, s.kind)?,
        };
        write(out, "out", scale)
    })
}

/// Shuffled `δ` at size `n` under a fixed schedule.
///
/// # Safety
/// `schedule` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_schedule_shuffled_delta(
    schedule: *const PnsgdSchedule,
    epsilon: f64,
    n: u64,
    out: *mut f64,
) -> PnsgdStatus {
    guard(|| {
        let s = read(schedule, "schedule")?;
        write(out, "out", shuffled_delta_fixed_noise(n, epsilon, &s.schedule, &s.profile, &s.geometry, s.kind)?)
    })
}

/// Online bound for differing index `index` after `n` updates.
///
/// # Safety
/// `schedule` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_schedule_online_delta(
    schedule: *const PnsgdSchedule,
    epsilon: f64,
    n: u64,
    index: u64,
    out: *mut f64,
) -> PnsgdStatus {
    guard(|| {
        let s = read(schedule, "schedule")?;
        write(out, "out", online_delta_finite(n, index, epsilon, &s.schedule, &s.profile, &s.geometry, s.kind)?)
    })
}

/// Lower and upper integral bounds on the `n → ∞` limit of the online bound.
///
/// # Safety
/// `schedule` must be a live handle; `out_lower` and `out_upper` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_schedule_online_bracket(
    schedule: *const PnsgdSchedule,
    epsilon: f64,
    index: u64,
    out_lower: *mut f64,
    out_upper: *mut f64,
) -> PnsgdStatus {
    guard(|| {
        let s = read(schedule, "schedule")?;
        let b = online_delta_bracket(index, epsilon, &s.schedule, &s.profile, &s.geometry, s.kind)?;
        if out_upper.is_null() {
            return Err(Failure::Null("out_upper"));
        }
        write(out_lower, "out_lower", b.lower)?;
        write(out_upper, "out_upper", b.upper)
    })
}

/// `μ` such that `μ`-GDP implies `(epsilon, delta)`-DP exactly.
///
/// # Safety
/// `out_mu` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_dp_to_gdp(epsilon: f64, delta: f64, out_mu: *mut f64) -> PnsgdStatus {
    guard(|| write(out_mu, "out_mu", dp_to_gdp(&PrivacyBudget::new(epsilon, delta)?)?.mu))
}

/// # Safety
/// `out_delta` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_gdp_to_dp(mu: f64, epsilon: f64, out_delta: *mut f64) -> PnsgdStatus {
    guard(|| write(out_delta, "out_delta", gdp_to_dp(&GdpParam::new(mu)?, epsilon)?.delta))
}

/// # Safety
/// `out_mu` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_gdp_compose(mu: f64, epochs: u64, out_mu: *mut f64) -> PnsgdStatus {
    guard(|| write(out_mu, "out_mu", gdp_compose(&GdpParam::new(mu)?, epochs)?.mu))
}

/// Rényi epsilon at `order`; may be negative.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_dp_to_rdp(epsilon: f64, delta: f64, order: f64, out: *mut f64) -> PnsgdStatus {
    guard(|| write(out, "out", dp_to_rdp(&PrivacyBudget::new(epsilon, delta)?, order)?.epsilon))
}

/// # Safety
/// `out_epsilon` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_rdp_to_dp(order: f64, rdp_epsilon: f64, delta: f64, out_epsilon: *mut f64) -> PnsgdStatus {
    guard(|| write(out_epsilon, "out_epsilon", rdp_to_dp(&RdpPoint::new(order, rdp_epsilon)?, delta)?.epsilon))
}

/// `epochs`-fold composition of a per-epoch guarantee through GDP; writes
/// the `δ` at `epsilon_target`.
///
/// # Safety
/// `out_delta` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_compose_gdp(
    epsilon: f64,
    delta: f64,
    epochs: u64,
    epsilon_target: f64,
    out_delta: *mut f64,
) -> PnsgdStatus {
    guard(|| {
        let c = compose_epochs(&PrivacyBudget::new(epsilon, delta)?, epochs, Method::Gdp { epsilon_target })?;
        write(out_delta, "out_delta", c.budget.delta)
    })
}

/// `epochs`-fold composition through RDP at `order`; writes the `ε` at
/// `delta_target`.
///
/// # Safety
/// `out_epsilon` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pnsgd_compose_rdp(
    epsilon: f64,
    delta: f64,
    epochs: u64,
    order: f64,
    delta_target: f64,
    out_epsilon: *mut f64,
) -> PnsgdStatus {
    guard(|| {
        let method = Method::Rdp { alpha: order, delta_target };
        let c = compose_epochs(&PrivacyBudget::new(epsilon, delta)?, epochs, method)?;
        write(out_epsilon, "out_epsilon", c.budget.epsilon)
    })
}
