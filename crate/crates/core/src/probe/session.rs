use std::collections::HashMap;
use std::io;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use super::{wire_size, ProbeError, ProbePlan};
use crate::sample::{ProbeMethod, ProbeSample};

/// How often the receiver thread checks for shutdown.
const RECV_POLL: Duration = Duration::from_millis(20);

/// A probe about to be sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EchoProbe {
    pub seq: u64,
    pub payload_bytes: u32,
    /// Microseconds since session start, embedded in the payload.
    pub sent_at_us: u64,
    pub nonce: u32,
}

/// A reply decoded by a transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EchoReply {
    /// Sequence number as carried on the wire (see [`EchoTransport::seq_tag`]).
    pub seq_tag: u32,
    pub nonce: u32,
    pub sent_at_us: u64,
    pub received_at: Instant,
}

pub trait EchoReceiver: Send + 'static {
    /// Waits up to `timeout` for the next reply belonging to this session.
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<EchoReply>>;
}

pub trait EchoTransport {
    type Receiver: EchoReceiver;

    fn method(&self) -> ProbeMethod;

    /// The part of `seq` that survives the round trip.
    fn seq_tag(&self, seq: u64) -> u32;

    fn send(&mut self, probe: &EchoProbe) -> io::Result<()>;

    fn receiver(&self) -> io::Result<Self::Receiver>;
}

struct Pending {
    index: usize,
    sent: Instant,
    sent_at_us: u64,
}

/// One probing session. Not shareable across callers; the sender loop owns
/// all sent/matched/lost state and the receiver thread only forwards replies.
pub struct Session {
    plan: ProbePlan,
    path_id: String,
    nonce: u32,
}

impl Session {
    pub fn new(plan: &ProbePlan, path_id: impl Into<String>) -> Self {
        Session {
            plan: plan.clone(),
            path_id: path_id.into(),
            nonce: rand::random(),
        }
    }

    pub fn with_nonce(mut self, nonce: u32) -> Self {
        self.nonce = nonce;
        self
    }

    pub fn run<T: EchoTransport>(&self, mut transport: T) -> Result<Vec<ProbeSample>, ProbeError> {
        self.plan.validate()?;
        let method = transport.method();
        let gap = Duration::from_secs_f64(self.plan.inter_probe_gap_s);
        let timeout = Duration::from_secs_f64(self.plan.timeout_s);

        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::channel::<io::Result<EchoReply>>();
        let mut receiver = transport.receiver()?;
        let recv_stop = Arc::clone(&stop);
        let handle = thread::spawn(move || {
            while !recv_stop.load(Ordering::Relaxed) {
                match receiver.recv(RECV_POLL) {
                    Ok(Some(reply)) => {
                        if tx.send(Ok(reply)).is_err() {
                            break;
                        }
                    }
                    Ok(None) => {}
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });

        let result = self.drive(&mut transport, &rx, method, gap, timeout);
        stop.store(true, Ordering::Relaxed);
        drop(rx);
        let _ = handle.join();

        let samples = result?;
        if samples.iter().all(|s| s.lost) {
            return Err(ProbeError::AllProbesLost(samples.len()));
        }
        Ok(samples)
    }

    fn drive<T: EchoTransport>(
        &self,
        transport: &mut T,
        rx: &mpsc::Receiver<io::Result<EchoReply>>,
        method: ProbeMethod,
        gap: Duration,
        timeout: Duration,
    ) -> Result<Vec<ProbeSample>, ProbeError> {
        let mut samples: Vec<ProbeSample> = Vec::with_capacity(self.plan.total_probes());
        let mut pending: HashMap<u32, Pending> = HashMap::new();
        let epoch = Instant::now();
        let mut last_deadline = epoch;

        let schedule = (0..self.plan.count_per_size)
            .flat_map(|_| self.plan.sizes_payload_bytes.iter().copied())
            .enumerate();

        for (k, payload_bytes) in schedule {
            let due = epoch + gap * k as u32;
            self.pump(rx, &mut pending, &mut samples, timeout, due, false)?;

            let seq = k as u64;
            let sent = Instant::now();
            let sent_at_us = sent.duration_since(epoch).as_micros() as u64;
            samples.push(ProbeSample::lost(
                self.path_id.clone(),
                seq,
                payload_bytes,
                wire_size(payload_bytes, method),
                sent_at_us,
                method,
            ));
            let probe = EchoProbe {
                seq,
                payload_bytes,
                sent_at_us,
                nonce: self.nonce,
            };
            match transport.send(&probe) {
                Ok(()) => {
                    pending.insert(
                        transport.seq_tag(seq),
                        Pending {
                            index: samples.len() - 1,
                            sent,
                            sent_at_us,
                        },
                    );
                    last_deadline = sent + timeout;
                }
                Err(e) if e.kind() == io::ErrorKind::PermissionDenied => {
                    return Err(ProbeError::PermissionDenied(method.as_str()));
                }
                // Unroutable destinations fail at send time; the probe is lost.
                Err(_) => {}
            }
        }

        self.pump(rx, &mut pending, &mut samples, timeout, last_deadline, true)?;
        Ok(samples)
    }

    /// Matches replies until `until`, or until nothing is outstanding when `drain` is set.
    fn pump(
        &self,
        rx: &mpsc::Receiver<io::Result<EchoReply>>,
        pending: &mut HashMap<u32, Pending>,
        samples: &mut [ProbeSample],
        timeout: Duration,
        until: Instant,
        drain: bool,
    ) -> Result<(), ProbeError> {
        loop {
            if drain && pending.is_empty() {
                return Ok(());
            }
            let now = Instant::now();
            if now >= until {
                return Ok(());
            }
            match rx.recv_timeout(until - now) {
                Ok(Ok(reply)) => {
                    if reply.nonce != self.nonce {
                        continue;
                    }
                    let matches = pending
                        .get(&reply.seq_tag)
                        .is_some_and(|p| p.sent_at_us == reply.sent_at_us);
                    if !matches {
                        continue;
                    }
                    let p = pending.remove(&reply.seq_tag).expect("checked above");
                    let rtt = reply.received_at.saturating_duration_since(p.sent);
                    if rtt <= timeout {
                        let s = &mut samples[p.index];
                        s.rtt_s = Some(rtt.as_secs_f64());
                        s.lost = false;
                    }
                }
                Ok(Err(e)) => return Err(e.into()),
                Err(mpsc::RecvTimeoutError::Timeout) => return Ok(()),
                Err(mpsc::RecvTimeoutError::Disconnected) => return Err(io::Error::other("receiver stopped").into()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    /// Loops probes back through a channel after a fixed delay; drops those
    /// whose sequence number is in `drop`.
    struct Loopback {
        delay: Duration,
        drop: Vec<u64>,
        inbox: Arc<Mutex<Vec<(Instant, EchoReply)>>>,
    }

    struct LoopbackRx {
        inbox: Arc<Mutex<Vec<(Instant, EchoReply)>>>,
    }

    impl EchoReceiver for LoopbackRx {
        fn recv(&mut self, timeout: Duration) -> io::Result<Option<EchoReply>> {
            let end = Instant::now() + timeout;
            loop {
                {
                    let mut q = self.inbox.lock().unwrap();
                    let now = Instant::now();
                    if let Some(pos) = q.iter().position(|(at, _)| *at <= now) {
                        let (_, mut r) = q.remove(pos);
                        r.received_at = now;
                        return Ok(Some(r));
                    }
                }
                if Instant::now() >= end {
                    return Ok(None);
                }
                thread::sleep(Duration::from_micros(200));
            }
        }
    }

    impl EchoTransport for Loopback {
        type Receiver = LoopbackRx;

        fn method(&self) -> ProbeMethod {
            ProbeMethod::UdpEcho
        }

        fn seq_tag(&self, seq: u64) -> u32 {
            seq as u32
        }

        fn send(&mut self, p: &EchoProbe) -> io::Result<()> {
            if !self.drop.contains(&p.seq) {
                let now = Instant::now();
                let reply = EchoReply {
                    seq_tag: p.seq as u32,
                    nonce: p.nonce,
                    sent_at_us: p.sent_at_us,
                    received_at: now,
                };
                self.inbox.lock().unwrap().push((now + self.delay, reply));
            }
            Ok(())
        }

        fn receiver(&self) -> io::Result<LoopbackRx> {
            Ok(LoopbackRx {
                inbox: Arc::clone(&self.inbox),
            })
        }
    }

    fn plan(count: usize) -> ProbePlan {
        let mut p = ProbePlan::new("fake");
        p.method = ProbeMethod::UdpEcho;
        p.count_per_size = count;
        p.inter_probe_gap_s = 0.002;
        p.timeout_s = 0.2;
        p
    }

    fn transport(delay_ms: u64, drop: Vec<u64>) -> Loopback {
        Loopback {
            delay: Duration::from_millis(delay_ms),
            drop,
            inbox: Arc::default(),
        }
    }

    #[test]
    fn all_probes_answered() {
        let s = Session::new(&plan(4), "fake").run(transport(3, vec![])).unwrap();
        assert_eq!(s.len(), 8);
        assert!(s.iter().all(|x| !x.lost && x.is_consistent()));
        assert!(s.iter().all(|x| x.rtt_s.unwrap() >= 0.003 && x.rtt_s.unwrap() < 0.2));
        let sizes: Vec<u32> = s.iter().map(|x| x.payload_bytes).collect();
        assert_eq!(sizes, vec![100, 1124, 100, 1124, 100, 1124, 100, 1124]);
        assert!(s
            .windows(2)
            .all(|w| w[0].sent_at_us <= w[1].sent_at_us && w[0].seq < w[1].seq));
        assert_eq!(s[1].wire_bits, wire_size(1124, ProbeMethod::UdpEcho));
    }

    #[test]
    fn dropped_probes_are_lost() {
        let s = Session::new(&plan(3), "fake").run(transport(1, vec![1, 4])).unwrap();
        let lost: Vec<u64> = s.iter().filter(|x| x.lost).map(|x| x.seq).collect();
        assert_eq!(lost, vec![1, 4]);
        assert!(s.iter().all(ProbeSample::is_consistent));
    }

    #[test]
    fn late_replies_count_as_lost() {
        let mut p = plan(1);
        p.timeout_s = 0.02;
        let err = Session::new(&p, "fake").run(transport(60, vec![])).unwrap_err();
        assert!(matches!(err, ProbeError::AllProbesLost(2)));
    }

    #[test]
    fn foreign_nonce_is_ignored() {
        struct Spoof(Loopback);
        impl EchoTransport for Spoof {
            type Receiver = LoopbackRx;
            fn method(&self) -> ProbeMethod {
                ProbeMethod::UdpEcho
            }
            fn seq_tag(&self, seq: u64) -> u32 {
                seq as u32
            }
            fn send(&mut self, p: &EchoProbe) -> io::Result<()> {
                let forged = EchoProbe {
                    nonce: p.nonce ^ 1,
                    ..*p
                };
                self.0.send(&forged)
            }
            fn receiver(&self) -> io::Result<LoopbackRx> {
                self.0.receiver()
            }
        }
        let mut p = plan(1);
        p.timeout_s = 0.05;
        let err = Session::new(&p, "fake").run(Spoof(transport(1, vec![]))).unwrap_err();
        assert!(matches!(err, ProbeError::AllProbesLost(2)));
    }
}
