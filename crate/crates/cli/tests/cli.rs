use std::path::PathBuf;
use std::process::{Command, Output};

fn write_source(name: &str, src: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("quill-cli-{}-{name}.ql", std::process::id()));
    std::fs::write(&path, src).unwrap();
    path
}

fn quill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quill")).args(args).output().unwrap()
}

fn quill_on(name: &str, src: &str, args: &[&str]) -> Output {
    let path = write_source(name, src);
    let mut all: Vec<&str> = args.to_vec();
    all.push(path.to_str().unwrap());
    let out = quill(&all);
    std::fs::remove_file(&path).ok();
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ID_INL: &str = "def main = (\\x -> x) (inl (\\y -> y));\n";

#[test]
fn infer_prints_one_scheme_per_definition() {
    let o = quill_on("infer", "def id = \\x -> x;\ndef k = \\x -> \\y -> x;\n", &["infer"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "id : forall t f. t -f> t\nk : forall t u g f. (Un u, t >= f) => t -g> u -f> t\n"
    );
}

#[test]
fn discarding_a_token_is_a_type_error() {
    let src = "con MkTok : (exists u. u) ->* Tok;\ndef bad = (\\x -> \\y -> y) (MkTok (\\z -> z));\n";
    let o = quill_on("discard", src, &["infer"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Un Tok"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn syntax_errors_and_missing_files_are_input_errors() {
    let o = quill_on("syntax", "def main = \\x -> ;", &["infer"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: 1:"), "{}", stderr(&o));
    let o = quill(&["infer", "/nonexistent/quill/input.ql"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_prints_the_value() {
    let o = quill_on("run", ID_INL, &["run"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "inl <fun>\n");
}

#[test]
fn trace_and_audit_output() {
    let o = quill_on("trace", ID_INL, &["run", "--trace", "--audit"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "APP 0 [] [0]\nLAM 0 [0] []\nINL 2 [2] []\nLAM 1 [1] []\ninl#2 <fun#1>\n\
         audit: introduced 3, eliminated 1, discarded [], duplicated [], violations 0\n"
    );
}

#[test]
fn exhausted_budget_exits_four() {
    let o = quill_on("budget", ID_INL, &["run", "--budget", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("budget"), "{}", stderr(&o));
}

#[test]
fn run_without_main_is_an_input_error() {
    let o = quill_on("nomain", "def id = \\x -> x;\n", &["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_accepts_elaborations() {
    let o = quill_on("check", "def id = \\x -> x;\ndef main = id id;\n", &["check"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "id : checked\nmain : checked\n");
}

#[test]
fn corpus_passes() {
    let o = quill(&["corpus"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    assert!(last.ends_with("entries passed"), "{last}");
    assert!(!out.contains("FAIL"));
}
