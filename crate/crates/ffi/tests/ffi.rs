use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use freqcache::harness::scene::{generate_scene, SceneKind, SceneSpec};
use freqcache_ffi::*;

fn scene(kind: SceneKind, h: usize, w: usize, len: usize) -> Vec<Vec<f64>> {
    let mut spec = SceneSpec::new(kind, h, w, len, 11);
    spec.patch_size = 8;
    generate_scene(&spec)
        .unwrap()
        .frames
        .into_iter()
        .map(|f| f.data().to_vec())
        .collect()
}

fn last_error() -> String {
    let p = fqc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn small_config() -> FqcConfig {
    FqcConfig {
        patch_size: 8,
        ..fqc_config_default()
    }
}

#[test]
fn session_round_trip() {
    let frames = scene(SceneKind::Translate, 32, 32, 3);
    let cfg = small_config();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(fqc_session_new(&cfg, &mut s), FqcStatus::Ok);
        let mut summary = FqcDecisionSummary::default();
        let mut has = true;
        assert_eq!(
            fqc_session_push(s, frames[0].as_ptr(), 32, 32, &mut summary, &mut has),
            FqcStatus::Ok
        );
        assert!(!has);
        assert!(fqc_session_decision_json(s).is_null());

        assert_eq!(
            fqc_session_push(s, frames[1].as_ptr(), 32, 32, &mut summary, &mut has),
            FqcStatus::Ok
        );
        assert!(has);
        assert_eq!(summary.step, 1);
        assert_eq!(summary.n_tokens, 16);
        assert_eq!((summary.di, summary.dj), (3, 5));
        assert!(!summary.flushed);

        let mut len = 0;
        let mut buf = vec![usize::MAX; 16];
        assert_eq!(
            fqc_session_reuse_set(s, buf.as_mut_ptr(), 16, &mut len),
            FqcStatus::Ok
        );
        assert_eq!(len, summary.k_final);

        if len > 0 {
            assert_eq!(
                fqc_session_reuse_set(s, buf.as_mut_ptr(), len - 1, &mut len),
                FqcStatus::InvalidArgument
            );
        }

        let json = fqc_session_decision_json(s);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        fqc_string_free(json);
        assert!(text.starts_with("{\"step\":1,"));
        assert!(text.contains("\"displacement\":{\"di\":3,\"dj\":5,\"di_p\":0,\"dj_p\":1}"));
        fqc_session_free(s);
    }
}

#[test]
fn errors_and_null_pointers() {
    unsafe {
        assert_eq!(
            fqc_session_new(ptr::null(), ptr::null_mut()),
            FqcStatus::NullPointer
        );
        assert!(last_error().contains("out"));

        let bad = FqcConfig {
            tau_mig: 2.0,
            ..small_config()
        };
        let mut s = ptr::null_mut();
        assert_eq!(fqc_session_new(&bad, &mut s), FqcStatus::InvalidArgument);
        assert!(last_error().contains("tau_mig"));
        assert!(s.is_null());

        let cfg = small_config();
        assert_eq!(fqc_session_new(&cfg, &mut s), FqcStatus::Ok);
        let frame = vec![0.5; 30 * 32];
        let mut has = false;
        assert_eq!(
            fqc_session_push(s, frame.as_ptr(), 30, 32, ptr::null_mut(), &mut has),
            FqcStatus::DimensionMismatch
        );
        let nan = vec![f64::NAN; 32 * 32];
        assert_eq!(
            fqc_session_push(s, nan.as_ptr(), 32, 32, ptr::null_mut(), &mut has),
            FqcStatus::InvalidArgument
        );
        assert_eq!(
            fqc_session_push(s, ptr::null(), 32, 32, ptr::null_mut(), &mut has),
            FqcStatus::NullPointer
        );
        fqc_session_free(s);
        fqc_session_free(ptr::null_mut());
        fqc_string_free(ptr::null_mut());
    }
}

#[test]
fn black_frame_flushes_instead_of_failing() {
    let cfg = small_config();
    let mut s = ptr::null_mut();
    let black = vec![0.0; 32 * 32];
    unsafe {
        assert_eq!(fqc_session_new(&cfg, &mut s), FqcStatus::Ok);
        let mut has = false;
        let mut summary = FqcDecisionSummary::default();
        assert_eq!(
            fqc_session_push(s, black.as_ptr(), 32, 32, &mut summary, &mut has),
            FqcStatus::Ok
        );
        assert_eq!(
            fqc_session_push(s, black.as_ptr(), 32, 32, &mut summary, &mut has),
            FqcStatus::Ok
        );
        assert!(summary.flushed);
        assert_eq!(summary.k_final, 0);
        fqc_session_free(s);
    }
}

#[test]
fn stateless_calls() {
    let frames = scene(SceneKind::Translate, 32, 32, 2);
    let (mut di, mut dj, mut sim) = (0, 0, 0.0);
    unsafe {
        assert_eq!(
            fqc_phase_correlation(
                frames[0].as_ptr(),
                frames[1].as_ptr(),
                32,
                32,
                &mut di,
                &mut dj
            ),
            FqcStatus::Ok
        );
        assert_eq!((di, dj), (3, 5));
        assert_eq!(
            fqc_sim_freq(frames[0].as_ptr(), frames[1].as_ptr(), 32, 32, &mut sim),
            FqcStatus::Ok
        );
        assert!(sim > 1.0 - 1e-9);

        let flat = vec![0.25; 64];
        assert_eq!(
            fqc_phase_correlation(flat.as_ptr(), flat.as_ptr(), 8, 8, &mut di, &mut dj),
            FqcStatus::NoTexture
        );
        let (mut raw, mut norm) = (-1.0, -1.0);
        assert_eq!(
            fqc_spectral_entropy(flat.as_ptr(), 8, 8, true, &mut raw, &mut norm),
            FqcStatus::Ok
        );
        assert_eq!((raw, norm), (0.0, 0.0));
        assert_eq!(
            fqc_spectral_entropy(flat.as_ptr(), 8, 8, false, &mut raw, &mut norm),
            FqcStatus::DegenerateSpectrum
        );
    }
    let v = unsafe { CStr::from_ptr(fqc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/freqcache.h")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !have_cc() {
        eprintln!("no C compiler on PATH; header check skipped");
        return;
    }
    for (lang, std) in [("c", "-std=c11"), ("c++", "-std=c++17")] {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, std])
            .arg(header())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{lang}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn c_program_links_static_library() {
    if !have_cc() {
        eprintln!("no C compiler on PATH; link check skipped");
        return;
    }
    // Test binaries live in target/<profile>/deps; the static library sits one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("libfreqcache_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());

    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ffi_c");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "freqcache.h"

int main(void) {
    double a[64], b[64];
    unsigned s = 7;
    for (int i = 0; i < 64; ++i) {
        s = s * 1103515245u + 12345u;
        a[i] = (double)((s >> 16) & 0xff) / 255.0;
    }
    /* b(r, c) = a(r - 2, c - 1) cyclically */
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            b[r * 8 + c] = a[((r + 6) % 8) * 8 + (c + 7) % 8];
    int64_t di = 0, dj = 0;
    if (fqc_phase_correlation(a, b, 8, 8, &di, &dj) != FQC_STATUS_OK) return 1;
    fqc_config cfg = fqc_config_default();
    cfg.patch_size = 4;
    fqc_session *session = NULL;
    if (fqc_session_new(&cfg, &session) != FQC_STATUS_OK) return 2;
    fqc_decision_summary sum;
    bool has = false;
    fqc_session_push(session, a, 8, 8, &sum, &has);
    if (fqc_session_push(session, b, 8, 8, &sum, &has) != FQC_STATUS_OK || !has) return 3;
    if (fqc_session_push(session, a, 4, 4, &sum, &has) != FQC_STATUS_DIMENSION_MISMATCH) return 4;
    printf("%lld %lld %zu %s\n", (long long)di, (long long)dj, sum.n_tokens,
           fqc_last_error_message() ? "err" : "none");
    fqc_session_free(session);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("main");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "link: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status);
    assert_eq!(String::from_utf8_lossy(&run.stdout), "2 1 4 err\n");
}
