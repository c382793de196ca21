//! End-to-end tests of the `fha` binary: output goldens, the exit-code
//! contract, stdin/stdout plumbing, and agreement between `run` and the
//! `extract | eval-lambda` pipe on the shipped example programs.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fha() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fha"))
}

fn program(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../programs")
        .join(name)
}

fn stdout_of(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr_of(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Run a subcommand with the given input fed to stdin.
fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = fha()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn fha");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().expect("wait for fha")
}

#[test]
fn run_prints_the_caught_exception() {
    let out = fha()
        .args(["run"])
        .arg(program("exc_catch.fha"))
        .output()
        .unwrap();
    assert_eq!(stdout_of(&out), "inr ff\n", "stderr: {}", stderr_of(&out));
    assert!(out.status.success());
}

#[test]
fn check_prints_ok() {
    let out = fha()
        .args(["check"])
        .arg(program("church_two.fha"))
        .output()
        .unwrap();
    assert_eq!(stdout_of(&out), "ok\n", "stderr: {}", stderr_of(&out));
    assert!(out.status.success());
}

#[test]
fn extract_pipes_into_eval_lambda() {
    let extracted = fha()
        .args(["extract"])
        .arg(program("true.fha"))
        .output()
        .unwrap();
    assert!(
        extracted.status.success(),
        "stderr: {}",
        stderr_of(&extracted)
    );
    let out = with_stdin(&["eval-lambda", "-"], &stdout_of(&extracted));
    assert_eq!(stdout_of(&out), "tt\n", "stderr: {}", stderr_of(&out));
    assert!(out.status.success());
}

#[test]
fn both_backends_agree_on_every_terminating_example() {
    for name in [
        "true.fha",
        "church_two.fha",
        "exc_catch.fha",
        "exc_throw.fha",
        "countdown.fha",
        "state.fha",
        "choice.fha",
    ] {
        let run = fha().args(["run"]).arg(program(name)).output().unwrap();
        assert!(
            run.status.success(),
            "{name} run failed: {}",
            stderr_of(&run)
        );
        let extracted = fha().args(["extract"]).arg(program(name)).output().unwrap();
        assert!(
            extracted.status.success(),
            "{name} extract failed: {}",
            stderr_of(&extracted)
        );
        let decoded = with_stdin(&["eval-lambda", "-"], &stdout_of(&extracted));
        assert!(
            decoded.status.success(),
            "{name} eval-lambda failed: {}",
            stderr_of(&decoded)
        );
        assert_eq!(
            stdout_of(&run),
            stdout_of(&decoded),
            "backends disagree on {name}"
        );
    }
}

#[test]
fn timeouts_print_the_outcome_and_exit_3() {
    let out = fha()
        .args(["run", "--fuel", "1000"])
        .arg(program("diverge.fha"))
        .output()
        .unwrap();
    assert_eq!(stdout_of(&out), "timeout(1000)\n");
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exhausted_beta_budgets_exit_3() {
    let out = with_stdin(
        &["eval-lambda", "--lam-budget", "500", "-"],
        "(\\x. x x) (\\x. x x)",
    );
    assert_eq!(out.status.code(), Some(3), "stdout: {}", stdout_of(&out));
    let divergent = fha()
        .args(["extract"])
        .arg(program("diverge.fha"))
        .output()
        .unwrap();
    assert!(divergent.status.success());
    let out = with_stdin(&["eval-lambda", "-"], &stdout_of(&divergent));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn type_errors_exit_1() {
    let out = with_stdin(&["check", "-"], "main[total] VoidH : Bool = val ()");
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("type mismatch"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn parse_errors_exit_1() {
    let out = with_stdin(&["check", "-"], "main[total] VoidH : Bool = val (");
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("<stdin>"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn missing_files_exit_2() {
    let out = fha().args(["run", "no_such_file.fha"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unhandled_operations_are_stuck_and_exit_1() {
    let src = "effect St { get : Unit ~> Bool ; put : Bool ~> Unit }\n\
               main[total] St : Bool = force (get ())";
    let out = with_stdin(&["run", "-"], src);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stdout_of(&out).starts_with("stuck"),
        "stdout: {}",
        stdout_of(&out)
    );
}

#[test]
fn output_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let lam = dir.path().join("true.lam");
    let out = fha()
        .args(["extract", "-o"])
        .arg(&lam)
        .arg(program("true.fha"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let out = fha().args(["eval-lambda"]).arg(&lam).output().unwrap();
    assert_eq!(stdout_of(&out), "tt\n");
}

/// An inert effect declared from scratch, for files that must stand alone.
const NIL_EFFECT: &str = "effect Nil = hfunctor {
  carrier = \\(F : Ty -> Ty). \\(x : Ty). Empty;
  hfmap =
    /\\(F : Ty -> Ty). \\(fF : forall (a : Ty). forall (b : Ty). (a -> b) -> F a -> F b).
    /\\(a : Ty). /\\(b : Ty). \\(f : a -> b). \\(x : Empty). x;
  hmap =
    /\\(F : Ty -> Ty). \\(fF : forall (a : Ty). forall (b : Ty). (a -> b) -> F a -> F b).
    /\\(G : Ty -> Ty). \\(fG : forall (a : Ty). forall (b : Ty). (a -> b) -> G a -> G b).
    \\(s : forall (a : Ty). F a -> G a).
    /\\(c : Ty). \\(x : Empty). x
}";

#[test]
fn no_prelude_drops_the_standard_names() {
    let out = fha()
        .args(["check", "--no-prelude"])
        .arg(program("exc_catch.fha"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // A self-contained file still checks.
    let src = format!("{NIL_EFFECT}\nmain[total] Nil : Bool = val tt");
    let out = with_stdin(&["check", "--no-prelude", "-"], &src);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
}

#[test]
fn fha_prelude_env_substitutes_the_prelude() {
    let dir = tempfile::tempdir().unwrap();
    let custom = dir.path().join("prelude.fha");
    std::fs::write(&custom, fha_core::stdlib::prelude_source()).unwrap();
    let out = fha()
        .args(["run"])
        .arg(program("exc_catch.fha"))
        .env("FHA_PRELUDE", &custom)
        .output()
        .unwrap();
    assert_eq!(stdout_of(&out), "inr ff\n", "stderr: {}", stderr_of(&out));

    // A prelude that lacks hExc makes the same program fail to check.
    let bare = dir.path().join("bare.fha");
    std::fs::write(&bare, NIL_EFFECT.replace("Nil", "VoidH")).unwrap();
    let out = fha()
        .args(["check"])
        .arg(program("exc_catch.fha"))
        .env("FHA_PRELUDE", &bare)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn selftest_prints_nine_passes() {
    let out = fha().args(["selftest"]).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 9, "output: {text}");
    for line in lines {
        assert!(line.contains("PASS"), "{line}");
    }
}
