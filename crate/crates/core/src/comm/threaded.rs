//! In-process backend: one thread per rank, collectives meet at a shared
//! rendezvous guarded by a mutex and condition variable.

use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use super::{check_root, CommError, Communicator};
use crate::error::DEFAULT_COLLECTIVE_TIMEOUT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Allreduce,
    Broadcast { root: usize },
    Gather { root: usize },
    Barrier,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::Allreduce => "allreduce_sum",
            Op::Broadcast { .. } => "broadcast",
            Op::Gather { .. } => "gather",
            Op::Barrier => "barrier",
        }
    }
}

#[derive(Debug)]
enum Payload {
    Floats(Vec<f64>),
    Bytes(Vec<u8>),
    Scalar(f64),
    Empty,
}

#[derive(Debug)]
struct Contribution {
    op: Op,
    payload: Payload,
}

#[derive(Debug, Default)]
struct State {
    generation: u64,
    arrived: usize,
    slots: Vec<Option<Contribution>>,
    // Result of the most recent completed round. A rank still waiting on
    // round g can only observe g+1 here: round g+2 needs that rank too.
    completed: Option<Arc<Vec<Contribution>>>,
    broken: Option<String>,
}

#[derive(Debug)]
struct Rendezvous {
    size: usize,
    timeout: Duration,
    state: Mutex<State>,
    cv: Condvar,
}

impl Rendezvous {
    fn lock(&self) -> MutexGuard<'_, State> {
        // a panicking rank poisons nothing we cannot recover from
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn exchange(&self, rank: usize, contribution: Contribution) -> Result<Arc<Vec<Contribution>>, CommError> {
        let op = contribution.op;
        let mut st = self.lock();
        if let Some(why) = &st.broken {
            return Err(CommError::Broken(why.clone()));
        }
        if st.slots[rank].is_some() {
            return Err(CommError::Protocol(format!("rank {rank} entered a collective twice")));
        }
        st.slots[rank] = Some(contribution);
        st.arrived += 1;
        let my_generation = st.generation;
        if st.arrived == self.size {
            let all: Vec<Contribution> = st.slots.iter_mut().map(|s| s.take().expect("slot filled")).collect();
            let all = Arc::new(all);
            st.completed = Some(Arc::clone(&all));
            st.arrived = 0;
            st.generation += 1;
            self.cv.notify_all();
            return Ok(all);
        }
        let deadline = Instant::now() + self.timeout;
        while st.generation == my_generation {
            if let Some(why) = &st.broken {
                return Err(CommError::Broken(why.clone()));
            }
            let now = Instant::now();
            if now >= deadline {
                st.broken = Some(format!("rank {rank} timed out in {}", op.name()));
                self.cv.notify_all();
                return Err(CommError::Timeout { rank, op: op.name(), after: self.timeout });
            }
            st = self.cv.wait_timeout(st, deadline - now).unwrap_or_else(|e| e.into_inner()).0;
        }
        Ok(Arc::clone(st.completed.as_ref().expect("completed round")))
    }

    fn mark_broken(&self, why: String) {
        let mut st = self.lock();
        st.broken.get_or_insert(why);
        self.cv.notify_all();
    }
}

/// Handle for one rank of an [`InProcessWorld`].
#[derive(Debug)]
pub struct InProcessComm {
    rank: usize,
    shared: Arc<Rendezvous>,
}

impl InProcessComm {
    fn collective(&self, op: Op, payload: Payload) -> Result<Arc<Vec<Contribution>>, CommError> {
        let all = self.shared.exchange(self.rank, Contribution { op, payload })?;
        if let Some((r, c)) = all.iter().enumerate().find(|(_, c)| c.op != op) {
            return Err(CommError::Protocol(format!(
                "rank {} called {:?} while rank {r} called {:?}",
                self.rank, op, c.op
            )));
        }
        Ok(all)
    }
}

impl Communicator for InProcessComm {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.shared.size
    }

    fn allreduce_sum(&self, local: &[f64]) -> Result<Vec<f64>, CommError> {
        let all = self.collective(Op::Allreduce, Payload::Floats(local.to_vec()))?;
        let mut acc: Option<Vec<f64>> = None;
        for (r, c) in all.iter().enumerate() {
            let Payload::Floats(v) = &c.payload else { unreachable!("allreduce payload") };
            match acc.as_mut() {
                None => acc = Some(v.clone()),
                Some(a) if a.len() == v.len() => a.iter_mut().zip(v).for_each(|(x, y)| *x += y),
                Some(a) => {
                    return Err(CommError::Protocol(format!(
                        "allreduce length mismatch: rank 0 sent {}, rank {r} sent {}",
                        a.len(),
                        v.len()
                    )))
                }
            }
        }
        Ok(acc.unwrap_or_default())
    }

    fn broadcast(&self, value: &[u8], root: usize) -> Result<Vec<u8>, CommError> {
        check_root(root, self.size())?;
        let payload = if self.rank == root { Payload::Bytes(value.to_vec()) } else { Payload::Empty };
        let all = self.collective(Op::Broadcast { root }, payload)?;
        match &all[root].payload {
            Payload::Bytes(b) => Ok(b.clone()),
            _ => unreachable!("root contributes bytes"),
        }
    }

    fn gather(&self, value: f64, root: usize) -> Result<Option<Vec<f64>>, CommError> {
        check_root(root, self.size())?;
        let all = self.collective(Op::Gather { root }, Payload::Scalar(value))?;
        if self.rank != root {
            return Ok(None);
        }
        Ok(Some(
            all.iter()
                .map(|c| match c.payload {
                    Payload::Scalar(v) => v,
                    _ => unreachable!("gather payload"),
                })
                .collect(),
        ))
    }

    fn barrier(&self) -> Result<(), CommError> {
        self.collective(Op::Barrier, Payload::Empty).map(|_| ())
    }
}

/// A fixed number of ranks executing concurrently in this process.
#[derive(Debug, Clone)]
pub struct InProcessWorld {
    size: usize,
    timeout: Duration,
}

impl InProcessWorld {
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "a world needs at least one rank");
        Self { size, timeout: DEFAULT_COLLECTIVE_TIMEOUT }
    }

    /// Maximum time a rank waits inside a collective for its peers.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Runs `body` once per rank, each on its own thread, and returns the
    /// per-rank results in rank order. A panic on any rank is re-raised
    /// after every rank has finished.
    pub fn run<T, F>(&self, body: F) -> Vec<T>
    where
        T: Send,
        F: Fn(InProcessComm) -> T + Sync,
    {
        let shared = Arc::new(Rendezvous {
            size: self.size,
            timeout: self.timeout,
            state: Mutex::new(State { slots: (0..self.size).map(|_| None).collect(), ..State::default() }),
            cv: Condvar::new(),
        });
        let body = &body;
        let results: Vec<thread::Result<T>> = thread::scope(|s| {
            let handles: Vec<_> = (0..self.size)
                .map(|rank| {
                    let shared = Arc::clone(&shared);
                    thread::Builder::new()
                        .name(format!("rank-{rank}"))
                        .spawn_scoped(s, move || {
                            let guard = Arc::clone(&shared);
                            let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                                body(InProcessComm { rank, shared })
                            }));
                            if out.is_err() {
                                // wake peers blocked on this rank instead of letting them time out
                                guard.mark_broken(format!("rank {rank} panicked"));
                            }
                            out
                        })
                        .expect("spawn rank thread")
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("rank thread")).collect()
        });
        results.into_iter().map(|r| r.unwrap_or_else(|e| std::panic::resume_unwind(e))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allreduce_examples() {
        let out = InProcessWorld::new(4).run(|c| c.allreduce_sum(&[1.0, 2.0]).unwrap());
        assert!(out.iter().all(|v| v == &[4.0, 8.0]));
        let out = InProcessWorld::new(3).run(|c| c.allreduce_sum(&[c.rank() as f64]).unwrap());
        assert!(out.iter().all(|v| v == &[3.0]));
    }

    #[test]
    fn allreduce_length_mismatch_is_protocol_error() {
        let out = InProcessWorld::new(2).run(|c| c.allreduce_sum(&vec![1.0; c.rank() + 1]));
        for r in out {
            assert!(matches!(r, Err(CommError::Protocol(_))));
        }
    }

    #[test]
    fn mixed_collectives_are_protocol_error() {
        let out =
            InProcessWorld::new(2).run(
                |c| {
                    if c.rank() == 0 {
                        c.barrier()
                    } else {
                        c.allreduce_sum(&[1.0]).map(|_| ())
                    }
                },
            );
        assert!(out.iter().all(|r| matches!(r, Err(CommError::Protocol(_)))));
    }

    #[test]
    fn subset_collective_times_out() {
        let world = InProcessWorld::new(2).with_timeout(Duration::from_millis(100));
        let out = world.run(|c| if c.rank() == 0 { c.allreduce_sum(&[1.0]).map(|_| ()) } else { Ok(()) });
        assert!(matches!(out[0], Err(CommError::Timeout { rank: 0, .. })));
        assert!(out[1].is_ok());
    }

    #[test]
    fn broadcast_examples() {
        let out = InProcessWorld::new(4).run(|c| {
            let mine: &[u8] = if c.rank() == 2 { &[1, 2, 3] } else { &[9] };
            c.broadcast(mine, 2).unwrap()
        });
        assert!(out.iter().all(|v| v == &[1, 2, 3]));
        let out = InProcessWorld::new(2).run(|c| c.broadcast(&[], 1).unwrap());
        assert!(out.iter().all(|v| v.is_empty()));
        let out = InProcessWorld::new(2).run(|c| c.broadcast(&[], 2));
        assert!(out.iter().all(|r| matches!(r, Err(CommError::InvalidRoot { root: 2, size: 2 }))));
    }

    #[test]
    fn gather_orders_by_rank() {
        let out = InProcessWorld::new(3).run(|c| c.gather(c.rank() as f64, 0).unwrap());
        assert_eq!(out[0], Some(vec![0.0, 1.0, 2.0]));
        assert_eq!(out[1], None);
        assert_eq!(out[2], None);
        let out = InProcessWorld::new(2).run(|c| c.gather(7.0, 1).unwrap());
        assert_eq!(out[1], Some(vec![7.0, 7.0]));
    }

    #[test]
    fn barrier_waits_for_last_entry() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let entered = AtomicUsize::new(0);
        let out = InProcessWorld::new(4).run(|c| {
            thread::sleep(Duration::from_millis(10 * c.rank() as u64));
            entered.fetch_add(1, Ordering::SeqCst);
            c.barrier().unwrap();
            entered.load(Ordering::SeqCst)
        });
        assert!(out.iter().all(|&n| n == 4));
    }

    #[test]
    fn repeated_barriers_complete() {
        let out = InProcessWorld::new(4).run(|c| {
            for _ in 0..100 {
                c.barrier().unwrap();
            }
            true
        });
        assert!(out.into_iter().all(|x| x));
    }

    #[test]
    fn panicking_rank_breaks_peers_quickly() {
        let world = InProcessWorld::new(2).with_timeout(Duration::from_secs(30));
        let start = Instant::now();
        let caught = std::panic::catch_unwind(|| {
            world.run(|c| {
                if c.rank() == 1 {
                    panic!("boom");
                }
                c.barrier()
            })
        });
        assert!(caught.is_err());
        assert!(start.elapsed() < Duration::from_secs(10));
    }
}
