#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// The `ccrm` binary with endpoint overrides and log noise removed.
pub fn ccrm() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ccrm"));
    cmd.env_remove("CCRM_WIKI_API")
        .env_remove("CCRM_VIEWS_API")
        .env("RUST_LOG", "error");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    ccrm().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Relative path to contents for every file below `root`.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .replace('\\', "/");
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Replays the bundled cassettes into `<work>/snap` and analyzes them into
/// `<work>/out`; returns the exit codes.
pub fn replay_and_analyze(work: &Path) -> (i32, i32) {
    let f = fixtures();
    let snap = work.join("snap");
    let ingest = run(&[
        "ingest",
        "--seeds",
        path(&f.join("seeds.tsv")),
        "--months",
        "2013-05:2014-06",
        "--replay",
        path(&f.join("http")),
        "--out",
        path(&snap),
    ]);
    let analyze = run(&[
        "analyze",
        "--snapshot",
        path(&snap),
        "--out",
        path(&work.join("out")),
    ]);
    (code(&ingest), code(&analyze))
}

/// `n` pair keys with strictly decreasing scores.
pub fn ranking_tsv(n: usize) -> String {
    let mut out = String::from("key\tscore\n");
    let mut written = 0;
    'outer: for a in 0.. {
        for b in a + 1..a + 40 {
            if written == n {
                break 'outer;
            }
            out.push_str(&format!("c{a:03}|c{b:03}\t{}\n", (n - written) as f64));
            written += 1;
        }
    }
    out
}
