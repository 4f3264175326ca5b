//! Shared helpers for the binary-level tests.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use fcw_core::kinematics::file::write_episode;
use fcw_core::kinematics::Episode;

pub fn fcw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcw"))
        .args(args)
        .output()
        .expect("spawn fcw")
}

pub fn fcw_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcw"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn fcw")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

pub fn write_episodes(dir: &Path, episodes: &[Episode]) {
    std::fs::create_dir_all(dir).unwrap();
    for e in episodes {
        write_episode(&dir.join(format!("{}.json", e.id)), e).unwrap();
    }
}

/// Every regular file under `dir` with its bytes, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}
