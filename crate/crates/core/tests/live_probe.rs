//! Probing real sockets on this host. Tests skip when the sandbox forbids
//! ICMP sockets entirely.

use std::net::UdpSocket;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use delaybw::probe::{self, ProbeError, ProbePlan};
use delaybw::sample::ProbeMethod;

fn quick_plan(target: &str) -> ProbePlan {
    let mut plan = ProbePlan::new(target);
    plan.sizes_payload_bytes = vec![64, 1000];
    plan.count_per_size = 5;
    plan.inter_probe_gap_s = 0.01;
    plan.timeout_s = 0.5;
    plan
}

#[test]
fn icmp_loopback() {
    match probe::run_session(&quick_plan("127.0.0.1")) {
        Ok(samples) => {
            assert_eq!(samples.len(), 10);
            assert!(samples.iter().all(|s| s.is_consistent()));
            let delivered: Vec<f64> = samples.iter().filter_map(|s| s.rtt_s).collect();
            assert!(!delivered.is_empty());
            assert!(delivered.iter().all(|&r| r < 0.005), "{delivered:?}");
        }
        Err(ProbeError::PermissionDenied(_)) => eprintln!("skipping: ICMP sockets not permitted"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn unreachable_target_loses_everything() {
    // TEST-NET-2; nothing answers there from this host.
    let mut plan = quick_plan("198.51.100.1");
    plan.count_per_size = 1;
    plan.timeout_s = 0.2;
    match probe::run_session(&plan) {
        Err(ProbeError::AllProbesLost(2)) => {}
        Err(ProbeError::PermissionDenied(_)) => eprintln!("skipping: ICMP sockets not permitted"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unreachable_target_cli_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_delaybw"))
        .current_dir(dir.path())
        .args([
            "probe",
            "198.51.100.1",
            "--count",
            "1",
            "--gap",
            "0.01",
            "--timeout",
            "0.2",
        ])
        .output()
        .unwrap();
    let code = o.status.code();
    // 1 covers hosts without ICMP permission
    assert!(code == Some(2) || code == Some(1), "{code:?}");
}

#[test]
fn udp_through_in_process_reflector() {
    let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    let port = socket.local_addr().unwrap().port();
    let stop = Arc::new(AtomicBool::new(false));
    let reflector = {
        let stop = Arc::clone(&stop);
        thread::spawn(move || probe::serve_reflector(&socket, &stop))
    };

    let mut plan = quick_plan("127.0.0.1");
    plan.method = ProbeMethod::UdpEcho;
    plan.udp_port = Some(port);
    let samples = probe::run_session(&plan).unwrap();
    stop.store(true, Ordering::Relaxed);
    let echoed = reflector.join().unwrap().unwrap();

    assert_eq!(samples.len(), 10);
    assert_eq!(echoed, 10);
    assert!(samples.iter().all(|s| !s.lost && s.rtt_s.unwrap() < 0.005));
    assert!(samples.iter().all(|s| s.method == ProbeMethod::UdpEcho));
}

#[test]
fn loopback_is_one_hop() {
    match probe::discover_hops("127.0.0.1", 5, Duration::from_millis(500)) {
        Ok(n) => assert_eq!(n, 1),
        Err(ProbeError::PermissionDenied(_)) => eprintln!("skipping: raw ICMP not permitted"),
        Err(e) => panic!("{e}"),
    }
}
