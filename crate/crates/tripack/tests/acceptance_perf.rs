//! Performance acceptance: wall-clock budgets and the memory ceiling.
//! Kept in its own test binary so no sibling test competes with the timer.

use std::time::Instant;

use tripack::graph::GraphState;
use tripack::process;
use tripack::trajectory::TrajectoryParams;

/// Criterion 9 — a full instrumented run finishes within 60 s at n = 2048
/// and 600 s at n = 4096; engine state stays within the documented
/// 5n² + 4096 bytes, and a child process's kernel-reported peak RSS stays
/// within 8n² bytes plus a fixed 128 MiB runtime allowance.
#[test]
fn criterion_09_time_and_memory_budgets() {
    let params = TrajectoryParams::default();

    for n in [2048usize, 4096] {
        let g = GraphState::init_complete(n).unwrap();
        let cap = 5 * n * n + 4096;
        assert!(
            g.memory_bytes() <= cap,
            "state for n = {n} holds {} bytes, documented cap {cap}",
            g.memory_bytes()
        );
    }

    let started = Instant::now();
    let rec = process::run(2048, 0x97ACCE, None, &params);
    let t_2048 = started.elapsed().as_secs_f64();
    assert_eq!(rec.final_edges, 2048 * 2047 / 2 - 3 * rec.steps);
    assert!(t_2048 <= 60.0, "n = 2048 run took {t_2048:.1} s, budget 60 s");

    let started = Instant::now();
    let rec = process::run(4096, 0x97ACCE, None, &params);
    let t_4096 = started.elapsed().as_secs_f64();
    assert_eq!(rec.final_edges, 4096 * 4095 / 2 - 3 * rec.steps);
    assert!(t_4096 <= 600.0, "n = 4096 run took {t_4096:.1} s, budget 600 s");

    // Whole-process peak RSS of a child run, as accounted by the kernel.
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_tripack"))
        .args(["run", "--n", "2048", "--seed", "7", "--out", "/dev/null"])
        .output()
        .expect("child run must spawn");
    assert!(out.status.success(), "child run failed: {:?}", out.status);
    let peak_kib = unsafe {
        let mut usage: libc::rusage = std::mem::zeroed();
        assert_eq!(libc::getrusage(libc::RUSAGE_CHILDREN, &mut usage), 0);
        usage.ru_maxrss as u64 // kibibytes on Linux
    };
    let cap_kib = (8 * 2048 * 2048 + 128 * 1024 * 1024) / 1024;
    assert!(
        peak_kib <= cap_kib,
        "child peak RSS {peak_kib} KiB above the documented {cap_kib} KiB"
    );

    println!(
        "criterion 9: PASS — n=2048 in {t_2048:.1}s (≤60), n=4096 in {t_4096:.1}s (≤600), \
         state ≤ 5n²+4096 B at both sizes, child peak RSS {peak_kib} KiB ≤ {cap_kib} KiB"
    );
}
