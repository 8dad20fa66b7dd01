use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use signlink_ffi::*;

fn core_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn cstr(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    sl_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = sl_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_str().unwrap().to_owned()
}

unsafe fn load() -> *mut SlEngine {
    let model = cstr(&core_fixture("reference_model.lstm"));
    let mut engine = ptr::null_mut();
    assert_eq!(sl_engine_load(model.as_ptr(), ptr::null(), 0, 0, &mut engine), SlStatus::Ok);
    assert!(sl_last_error().is_null());
    engine
}

#[test]
fn session_lines_match_frozen_log() {
    unsafe {
        let engine = load();
        assert_eq!(sl_engine_input_dim(engine), 258);
        let mut session = ptr::null_mut();
        assert_eq!(sl_session_new(engine, 1, &mut session), SlStatus::Ok);
        // The session keeps the engine alive.
        sl_engine_free(engine);

        let stream = std::fs::read_to_string(core_fixture("blood_episode.jsonl")).unwrap();
        let mut log = String::new();
        for line in stream.lines() {
            let line = CString::new(line).unwrap();
            let mut out = ptr::null_mut();
            assert_eq!(sl_session_push(session, line.as_ptr(), &mut out), SlStatus::Ok);
            log.push_str(&take(out));
        }
        sl_session_free(session);

        let expected = std::fs::read_to_string(core_fixture("blood_episode.log")).unwrap();
        assert_eq!(log.lines().count(), expected.lines().count());
        assert!(log.ends_with("\"text\":\"I am bleeding.\",\"matched\":true}\n"), "{}", log.lines().last().unwrap());
        let parse = |s: &str| -> Vec<records::Record> { s.lines().map(records::parse).collect() };
        assert_eq!(parse(&log), parse(&expected));
    }
}

#[test]
fn replay_file_matches_session_push() {
    unsafe {
        let engine = load();
        let path = cstr(&core_fixture("blood_episode.jsonl"));
        let mut out = ptr::null_mut();
        assert_eq!(sl_replay_file(engine, path.as_ptr(), &mut out), SlStatus::Ok);
        let log = take(out);

        let mut session = ptr::null_mut();
        assert_eq!(sl_session_new(engine, 2, &mut session), SlStatus::Ok);
        let mut pushed = String::new();
        for line in std::fs::read_to_string(core_fixture("blood_episode.jsonl")).unwrap().lines() {
            let line = CString::new(line).unwrap();
            let mut out = ptr::null_mut();
            assert_eq!(sl_session_push(session, line.as_ptr(), &mut out), SlStatus::Ok);
            pushed.push_str(&take(out));
        }
        assert_eq!(log, pushed);
        sl_session_free(session);
        sl_engine_free(engine);
    }
}

#[test]
fn protocol_errors_are_replies() {
    unsafe {
        let engine = load();
        let mut session = ptr::null_mut();
        assert_eq!(sl_session_new(engine, 3, &mut session), SlStatus::Ok);
        let line = CString::new("{\"type\":\"subtitle\"}").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(sl_session_push(session, line.as_ptr(), &mut out), SlStatus::Ok);
        let reply = take(out);
        assert!(reply.contains("\"code\":\"unknown_type\""), "{reply}");
        assert!(reply.ends_with('\n'));
        sl_session_free(session);
        sl_engine_free(engine);
    }
}

#[test]
fn failures_set_status_and_message() {
    unsafe {
        let mut engine = ptr::null_mut();
        assert_eq!(sl_engine_load(ptr::null(), ptr::null(), 0, 0, &mut engine), SlStatus::NullArgument);
        assert!(last_error().contains("model_path"));

        let missing = CString::new("/nonexistent/model.lstm").unwrap();
        assert_eq!(sl_engine_load(missing.as_ptr(), ptr::null(), 0, 0, &mut engine), SlStatus::Io);
        assert!(last_error().contains("/nonexistent/model.lstm"));
        assert!(engine.is_null());

        let dir = tempfile::tempdir().unwrap();
        let junk = dir.path().join("junk.lstm");
        std::fs::write(&junk, "not a model\n").unwrap();
        let junk = cstr(&junk);
        assert_ne!(sl_engine_load(junk.as_ptr(), ptr::null(), 0, 0, &mut engine), SlStatus::Ok);
        assert!(engine.is_null());

        let bad_utf8 = [0xffu8 as c_char, 0];
        assert_eq!(sl_engine_load(bad_utf8.as_ptr(), ptr::null(), 0, 0, &mut engine), SlStatus::InvalidUtf8);

        let engine = load();
        let mut session = ptr::null_mut();
        assert_eq!(sl_session_new(ptr::null(), 0, &mut session), SlStatus::NullArgument);
        assert_eq!(sl_session_new(engine, 0, ptr::null_mut()), SlStatus::NullArgument);

        let stream = dir.path().join("regress.jsonl");
        let coords = vec!["0.0"; 258].join(",");
        std::fs::write(
            &stream,
            format!(
                "{{\"type\":\"hello\",\"version\":1}}\n{{\"type\":\"frame\",\"t\":50,\"coords\":[{coords}]}}\n{{\"type\":\"frame\",\"t\":40,\"coords\":[{coords}]}}\n"
            ),
        )
        .unwrap();
        let stream = cstr(&stream);
        let mut out = ptr::null_mut();
        assert_eq!(sl_replay_file(engine, stream.as_ptr(), &mut out), SlStatus::TimestampRegression);
        assert!(out.is_null());
        assert!(last_error().contains("regression"));

        sl_engine_free(engine);
        sl_engine_free(ptr::null_mut());
        sl_session_free(ptr::null_mut());
        sl_string_free(ptr::null_mut());
        assert_eq!(sl_protocol_version(), 1);
    }
}

#[test]
fn header_is_generated_and_compiles() {
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("signlink.h")).unwrap();
    for sym in [
        "sl_engine_load",
        "sl_engine_free",
        "sl_session_new",
        "sl_session_push",
        "sl_session_free",
        "sl_replay_file",
        "sl_string_free",
        "sl_last_error",
        "SL_STATUS_OK = 0",
        "SL_STATUS_PANIC = 8",
        "typedef struct SlEngine SlEngine",
        "typedef struct SlSession SlSession",
    ] {
        assert!(header.contains(sym), "missing {sym}");
    }

    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping compile check");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "signlink.h"
int run(const char *model, const char *line) {
    SlEngine *engine = NULL;
    SlSession *session = NULL;
    char *out = NULL;
    if (sl_engine_load(model, NULL, 0, 0, &engine) != SL_STATUS_OK) return 1;
    if (sl_session_new(engine, 1, &session) != SL_STATUS_OK) return 2;
    SlStatus s = sl_session_push(session, line, &out);
    sl_string_free(out);
    sl_session_free(session);
    sl_engine_free(engine);
    return s == SL_STATUS_OK && sl_last_error() == NULL ? 0 : 3;
}
"#,
    )
    .unwrap();
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-c", "-o"])
        .arg(dir.path().join("use.o"))
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

/// Minimal record comparison: exact text, except `confidence` values which
/// are compared to 1e-9.
mod records {
    #[derive(Debug)]
    pub struct Record {
        text: String,
        confidence: Option<f64>,
    }

    impl PartialEq for Record {
        fn eq(&self, other: &Self) -> bool {
            self.text == other.text
                && match (self.confidence, other.confidence) {
                    (Some(a), Some(b)) => (a - b).abs() <= 1e-9,
                    (None, None) => true,
                    _ => false,
                }
        }
    }

    pub fn parse(line: &str) -> Record {
        let Some(start) = line.find("\"confidence\":") else {
            return Record {
                text: line.to_owned(),
                confidence: None,
            };
        };
        let rest = &line[start + 13..];
        let end = rest.find([',', '}']).unwrap();
        Record {
            text: format!("{}{}", &line[..start], &rest[end..]),
            confidence: Some(rest[..end].parse().unwrap()),
        }
    }
}
