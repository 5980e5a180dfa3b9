//! The binary end to end on a tiny corpus, plus exit codes.

mod common;

use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triad-coref"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn full_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("tiny.conf"), common::TINY_CONFIG).unwrap();
    ok(dir, &["synth", "--seed", "3", "--docs", "3", "--entities", "3", "--mentions", "2", "--vocab", "60", "--out", "corpus.conll"]);

    let log = ok(dir, &["train", "--config", "tiny.conf", "--corpus", "corpus.conll", "--out", "tri", "--until", "2"]);
    assert_eq!(log.lines().count(), 2);
    assert!(log.lines().all(|l| l.split_whitespace().count() == 4), "{log}");
    ok(dir, &["train", "--corpus", "corpus.conll", "--out", "tri", "--resume", "--until", "3"]);
    let logged = std::fs::read_to_string(dir.join("tri/loss.log")).unwrap();
    let first: Vec<&str> = logged.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(first, ["0", "1", "2"]);

    std::fs::write(dir.join("dyad.conf"), format!("{}kind = dyad\n", common::TINY_CONFIG)).unwrap();
    ok(dir, &["train", "--config", "dyad.conf", "--corpus", "corpus.conll", "--out", "dy", "--until", "1"]);

    ok(dir, &["score", "--model", "tri", "--corpus", "corpus.conll", "--out", "aff.txt"]);
    let listing = ok(dir, &["cluster", "--affinity", "aff.txt", "--corpus", "corpus.conll", "--conll-out", "resp.conll"]);
    assert!(listing.contains("synth/0000"));
    let response = std::fs::read_to_string(dir.join("resp.conll")).unwrap();
    assert!(response.starts_with("#begin document (synth/0000); part 000"));

    let table = ok(dir, &["evaluate", "--model", "tri", "--model", "dy", "--corpus", "corpus.conll", "--histogram"]);
    assert!(table.contains("triad + post") && table.contains("dyad + post"), "{table}");
    assert!(table.contains("0.triad.avg_f1=") && table.contains("1.dyad.avg_f1="));
    let bare = ok(dir, &["evaluate", "--model", "tri", "--corpus", "corpus.conll", "--no-propername", "--no-speaker-sub", "--no-pronoun-fix"]);
    assert!(bare.lines().nth(1).unwrap().starts_with("triad "), "{bare}");

    let cmp = ok(dir, &["compare", "--dyad", "dy", "--triad", "tri", "--corpus", "corpus.conll", "--doc", "synth/0000", "--pair", "0,1"]);
    assert!(!cmp.is_empty());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&run(dir, &["no-such-command"])), 1);
    assert_eq!(code(&run(dir, &["cluster"])), 1);
    assert_eq!(code(&run(dir, &["--help"])), 0);
    assert_eq!(code(&run(dir, &["evaluate", "--model", "missing", "--corpus", "missing.conll"])), 2);

    std::fs::write(dir.join("bad.conll"), "#begin document (x); part 000\nx 0 0 w NN - - - - - - (1\n#end document\n").unwrap();
    let out = run(dir, &["train", "--corpus", "bad.conll", "--out", "m"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.conll:2"));

    std::fs::write(dir.join("bad.conf"), "no_such_key = 1\n").unwrap();
    ok(dir, &["synth", "--docs", "1", "--out", "c.conll"]);
    assert_eq!(code(&run(dir, &["train", "--config", "bad.conf", "--corpus", "c.conll", "--out", "m"])), 2);

    ok(dir, &["synth", "--docs", "1", "--entities", "1", "--mentions", "2", "--out", "two.conll"]);
    let out = run(dir, &["train", "--corpus", "two.conll", "--out", "m2"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
