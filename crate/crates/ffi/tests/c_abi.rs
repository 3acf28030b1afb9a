use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use pnsgd_privacy::bounds::{ab_constants, online_delta_bracket, shuffled_delta_fixed_noise};
use pnsgd_privacy::composition::{dp_to_gdp, gdp_to_dp, GdpParam};
use pnsgd_privacy::special::theta;
use pnsgd_privacy::{Geometry, LossProfile, NoiseKind, NoiseModel, PrivacyBudget, Schedule};
use pnsgd_privacy_ffi::*;

const PROFILE: PnsgdLossProfile = PnsgdLossProfile {
    lipschitz: 10.0,
    smoothness: 0.5,
    strong_convexity: 0.0,
    learning_rate: 0.1,
};

const INTERVAL: PnsgdGeometry = PnsgdGeometry {
    kind: PnsgdGeometryKind::Interval,
    diameter: 0.0,
    lower: 0.0,
    upper: 1.0,
};

const BALL: PnsgdGeometry = PnsgdGeometry {
    kind: PnsgdGeometryKind::Ball,
    diameter: 1.0,
    lower: 0.0,
    upper: 0.0,
};

fn last_error() -> Option<String> {
    let p = pnsgd_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn profile() -> LossProfile {
    LossProfile::new(10.0, 0.5, 0.0, 0.1).unwrap()
}

#[test]
fn scalar_functions_match_the_library() {
    let mut out = f64::NAN;
    assert_eq!(unsafe { pnsgd_theta(1.0f64.exp(), 2.0, &mut out) }, PnsgdStatus::Ok);
    assert_eq!(out, theta(1.0f64.exp(), 2.0).unwrap());
    assert_eq!(unsafe { pnsgd_lambert_w0(1.0, &mut out) }, PnsgdStatus::Ok);
    assert!((out - 0.567_143_290_409_783_8).abs() < 1e-15);
    assert_eq!(pnsgd_q_function(0.0), 0.5);
    assert!(pnsgd_log_q(40.0) < -800.0);
    let version = unsafe { CStr::from_ptr(pnsgd_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn errors_set_status_and_message() {
    let mut out = 7.0;
    assert_eq!(unsafe { pnsgd_theta(0.5, 1.0, &mut out) }, PnsgdStatus::Domain);
    assert_eq!(out, 7.0);
    assert!(last_error().unwrap().contains("domain"));
    assert_eq!(unsafe { pnsgd_theta(1.0, 1.0, ptr::null_mut()) }, PnsgdStatus::NullPointer);
    assert!(last_error().unwrap().contains("out"));
    assert_eq!(unsafe { pnsgd_theta(1.0, 1.0, &mut out) }, PnsgdStatus::Ok);
    assert_eq!(last_error(), None);
}

#[test]
fn mechanism_handle_round_trip() {
    let mut m: *mut PnsgdMechanism = ptr::null_mut();
    let v = 1.0 / (0.2 * 3f64.ln());
    assert_eq!(unsafe { pnsgd_mechanism_new(PnsgdNoiseKind::Laplace, v, &PROFILE, &INTERVAL, &mut m) }, PnsgdStatus::Ok);
    let c = ab_constants(&NoiseModel::laplace(v).unwrap(), &profile(), &Geometry::interval(0.0, 1.0).unwrap(), 1.0).unwrap();
    let (mut a, mut b, mut delta) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(pnsgd_mechanism_constants(m, 1.0, &mut a, &mut b), PnsgdStatus::Ok);
        assert_eq!((a, b), (c.a, c.b));
        assert_eq!(pnsgd_mechanism_per_index_delta(m, 1.0, 10, 10, &mut delta), PnsgdStatus::Ok);
        assert_eq!(delta, c.a);
        assert_eq!(pnsgd_mechanism_randomly_stopped_delta(m, 1.0, 10, 11, &mut delta), PnsgdStatus::IndexOutOfRange);
        assert_eq!(pnsgd_mechanism_shuffled_delta(m, 1.0, 1, &mut delta), PnsgdStatus::Ok);
        assert_eq!(delta, c.a);
        pnsgd_mechanism_free(m);
        pnsgd_mechanism_free(ptr::null_mut());
    }
}

#[test]
fn mismatched_geometry_is_reported() {
    let mut m: *mut PnsgdMechanism = ptr::null_mut();
    let mut delta = 0.0;
    unsafe {
        assert_eq!(pnsgd_mechanism_new(PnsgdNoiseKind::Gaussian, 1.0, &PROFILE, &INTERVAL, &mut m), PnsgdStatus::Ok);
        assert_eq!(pnsgd_mechanism_shuffled_delta(m, 1.0, 100, &mut delta), PnsgdStatus::GeometryMismatch);
        pnsgd_mechanism_free(m);
        assert_eq!(pnsgd_mechanism_new(PnsgdNoiseKind::Gaussian, -1.0, &PROFILE, &BALL, &mut m), PnsgdStatus::Domain);
        assert_eq!(pnsgd_mechanism_new(PnsgdNoiseKind::Gaussian, 1.0, ptr::null(), &BALL, &mut m), PnsgdStatus::NullPointer);
    }
}

#[test]
fn fixed_schedule_handle() {
    let mut s: *mut PnsgdSchedule = ptr::null_mut();
    let (mut scale, mut delta, mut star) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(pnsgd_schedule_new_fixed(PnsgdNoiseKind::Laplace, 1e5, 2.0, &PROFILE, &INTERVAL, &mut s), PnsgdStatus::Ok);
        assert_eq!(pnsgd_schedule_scale(s, 100_000, &mut scale), PnsgdStatus::Ok);
        assert!((scale - 4.5512).abs() < 1e-4);
        assert_eq!(pnsgd_schedule_shuffled_delta(s, 1.0, 100_000, &mut delta), PnsgdStatus::Ok);
        assert_eq!(pnsgd_schedule_online_delta(s, 1.0, 200, 100, &mut delta), PnsgdStatus::Domain);
        pnsgd_schedule_free(s);
        assert_eq!(pnsgd_delta_star_fixed(PnsgdNoiseKind::Laplace, 1.0, 1e5, &mut star), PnsgdStatus::Ok);
    }
    let lib = shuffled_delta_fixed_noise(
        100_000,
        1.0,
        &Schedule::fixed(1e5, 2.0).unwrap(),
        &profile(),
        &Geometry::interval(0.0, 1.0).unwrap(),
        NoiseKind::Laplace,
    )
    .unwrap();
    unsafe {
        assert_eq!(pnsgd_schedule_new_fixed(PnsgdNoiseKind::Laplace, 1e5, 2.0, &PROFILE, &INTERVAL, &mut s), PnsgdStatus::Ok);
        assert_eq!(pnsgd_schedule_shuffled_delta(s, 1.0, 100_000, &mut delta), PnsgdStatus::Ok);
        pnsgd_schedule_free(s);
    }
    assert_eq!(delta, lib);
    assert!((star - 6.065_306_597_126_334e-6).abs() < 1e-18);
}

#[test]
fn online_schedule_handle() {
    let p = PnsgdLossProfile { learning_rate: 0.01, ..PROFILE };
    let mut s: *mut PnsgdSchedule = ptr::null_mut();
    let (mut lower, mut upper, mut finite) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(
            pnsgd_schedule_new_online(PnsgdNoiseKind::Laplace, 100.0, 100.0, 1.5, &p, &INTERVAL, &mut s),
            PnsgdStatus::Ok
        );
        assert_eq!(pnsgd_schedule_online_bracket(s, 1.0, 100, &mut lower, &mut upper), PnsgdStatus::Ok);
        assert_eq!(pnsgd_schedule_online_delta(s, 1.0, 10_000, 100, &mut finite), PnsgdStatus::Ok);
        assert_eq!(pnsgd_schedule_shuffled_delta(s, 1.0, 100, &mut finite), PnsgdStatus::Domain);
        assert_eq!(pnsgd_schedule_online_delta(s, 1.0, 10_000, 100, &mut finite), PnsgdStatus::Ok);
        pnsgd_schedule_free(s);
    }
    let lib = online_delta_bracket(
        100,
        1.0,
        &Schedule::online(100.0, 100.0, 1.5).unwrap(),
        &LossProfile::new(10.0, 0.5, 0.0, 0.01).unwrap(),
        &Geometry::interval(0.0, 1.0).unwrap(),
        NoiseKind::Laplace,
    )
    .unwrap();
    assert_eq!((lower, upper), (lib.lower, lib.upper));
    assert!(finite >= lower);
}

#[test]
fn composition_functions() {
    let (mut mu, mut delta, mut eps) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(pnsgd_dp_to_gdp(1.0, 6.0653e-6, &mut mu), PnsgdStatus::Ok);
        assert_eq!(mu, dp_to_gdp(&PrivacyBudget::new(1.0, 6.0653e-6).unwrap()).unwrap().mu);
        assert_eq!(pnsgd_gdp_compose(mu, 4, &mut mu), PnsgdStatus::Ok);
        assert_eq!(pnsgd_gdp_to_dp(mu, 1.0, &mut delta), PnsgdStatus::Ok);
        assert_eq!(delta, gdp_to_dp(&GdpParam::new(mu).unwrap(), 1.0).unwrap().delta);
        let mut composed = 0.0;
        assert_eq!(pnsgd_compose_gdp(1.0, 6.0653e-6, 4, 1.0, &mut composed), PnsgdStatus::Ok);
        assert!((composed - delta).abs() <= 1e-12 * delta);
        assert_eq!(pnsgd_dp_to_rdp(1.0, 1e-5, 16.0, &mut eps), PnsgdStatus::Ok);
        let mut back = 0.0;
        assert_eq!(pnsgd_rdp_to_dp(16.0, eps, 1e-5, &mut back), PnsgdStatus::Ok);
        assert!((back - 1.0).abs() < 1e-15);
        assert_eq!(pnsgd_compose_rdp(0.0, 1e-5, 3, 2.0, 1e-5, &mut eps), PnsgdStatus::Domain);
        assert_eq!(pnsgd_dp_to_gdp(1.0, 0.0, &mut mu), PnsgdStatus::NoRoot);
    }
}

/// Directory holding the static library built for this test run.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = artifact_dir().join("libpnsgd_privacy_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("probe.c");
    std::fs::write(
        &source,
        r#"
#include <math.h>
#include <stdio.h>
#include "pnsgd_privacy.h"

int main(void) {
    PnsgdLossProfile profile = {10.0, 0.5, 0.0, 0.1};
    PnsgdGeometry interval = {PNSGD_GEOMETRY_KIND_INTERVAL, 0.0, 0.0, 1.0};
    PnsgdSchedule *s = NULL;
    double scale = 0.0, delta = 0.0;
    if (pnsgd_schedule_new_fixed(PNSGD_NOISE_KIND_LAPLACE, 1e5, 2.0, &profile, &interval, &s) != PNSGD_STATUS_OK) return 1;
    if (pnsgd_schedule_scale(s, 100000, &scale) != PNSGD_STATUS_OK) return 2;
    if (pnsgd_schedule_shuffled_delta(s, 1.0, 100000, &delta) != PNSGD_STATUS_OK) return 3;
    pnsgd_schedule_free(s);
    if (pnsgd_theta(0.5, 1.0, &scale) != PNSGD_STATUS_DOMAIN) return 4;
    if (pnsgd_last_error_message() == NULL) return 5;
    printf("%.17g\n", delta);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("probe");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&source)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "probe exited with {:?}", out.status.code());
    let printed: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    let lib = shuffled_delta_fixed_noise(
        100_000,
        1.0,
        &Schedule::fixed(1e5, 2.0).unwrap(),
        &profile(),
        &Geometry::interval(0.0, 1.0).unwrap(),
        NoiseKind::Laplace,
    )
    .unwrap();
    assert_eq!(printed, lib);
}
