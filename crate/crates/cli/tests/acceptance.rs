//! Acceptance criteria 1 to 10, one line each. Runs without the libtest
//! harness so the lines always reach the terminal.

use hankel_tw::suite::{
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8,
    criterion_9, CriterionOutcome, SuiteOptions,
};
use std::process::{Command, ExitCode};

fn line(id: u8, name: &str, pass: bool, detail: &str) {
    println!("acceptance {id:>2} {name:<38} {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn show(c: &CriterionOutcome) -> bool {
    let mut detail = match c.runtime_s {
        Some(t) => format!("({t:.3} s)"),
        None => String::new(),
    };
    if !c.failures.is_empty() {
        detail.push_str(&format!(" failed: {}", c.failures.join("; ")));
    }
    line(c.id, &c.name, c.pass, &detail);
    c.pass
}

/// Two deterministic `verify-all` runs must write identical bytes.
fn criterion_10() -> bool {
    let dir = tempfile::tempdir().expect("temp dir");
    let bin = env!("CARGO_BIN_EXE_hankel-tw");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("run{k}.json"));
        let status = Command::new(bin)
            .args(["verify-all", "--deterministic", "--out"])
            .arg(&path)
            .stderr(std::process::Stdio::null())
            .status()
            .expect("run verify-all");
        if !status.success() {
            line(10, "determinism", false, &format!("verify-all exited with {status}"));
            return false;
        }
        outputs.push(std::fs::read(&path).expect("read report"));
    }
    let same = outputs[0] == outputs[1];
    line(10, "determinism", same, &format!("({} bytes)", outputs[0].len()));
    same
}

fn main() -> ExitCode {
    let opts = SuiteOptions::default();
    let runners: [fn(&SuiteOptions) -> CriterionOutcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut all = true;
    for run in runners {
        all &= show(&run(&opts));
    }
    all &= criterion_10();
    println!("acceptance: {}", if all { "all criteria pass" } else { "FAILURES" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
