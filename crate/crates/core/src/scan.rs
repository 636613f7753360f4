//! Reader/worker fan-out used by every dump pass.
//!
//! One reader packs lines into batches and hands them to workers through a
//! bounded queue, blocking when the queue is full. Each worker folds lines into
//! its own state; callers merge the per-worker states afterwards.

use crossbeam_channel::{bounded, Receiver, Sender};

use crate::dump::{DumpError, LineReader};

const BATCH_BYTES: usize = 1 << 20;
const BATCH_LINES: usize = 4096;

struct Batch {
    data: Vec<u8>,
    ends: Vec<usize>,
}

impl Batch {
    fn new() -> Self {
        Self {
            data: Vec::with_capacity(BATCH_BYTES),
            ends: Vec::with_capacity(BATCH_LINES),
        }
    }

    fn clear(&mut self) {
        self.data.clear();
        self.ends.clear();
    }

    fn is_full(&self) -> bool {
        self.data.len() >= BATCH_BYTES || self.ends.len() >= BATCH_LINES
    }

    fn lines(&self) -> impl Iterator<Item = &[u8]> {
        let mut start = 0;
        self.ends.iter().map(move |&end| {
            let line = &self.data[start..end];
            start = end;
            line
        })
    }
}

/// Result of one pass: per-worker states, in worker order, and the line count.
pub struct ScanOutput<S> {
    pub states: Vec<S>,
    pub lines: u64,
}

/// Feeds every line of `reader` to `fold` on `workers` threads.
pub fn parallel_scan<S, I, F>(
    mut reader: LineReader,
    workers: usize,
    init: I,
    fold: F,
) -> Result<ScanOutput<S>, DumpError>
where
    S: Send,
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &[u8]) + Sync,
{
    let workers = workers.max(1);
    let queue = 2 * workers;
    let (full_tx, full_rx): (Sender<Batch>, Receiver<Batch>) = bounded(queue);
    let (empty_tx, empty_rx): (Sender<Batch>, Receiver<Batch>) = bounded(queue + workers + 1);

    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                let full_rx = full_rx.clone();
                let empty_tx = empty_tx.clone();
                let (init, fold) = (&init, &fold);
                scope.spawn(move || {
                    let mut state = init();
                    for mut batch in full_rx {
                        for line in batch.lines() {
                            fold(&mut state, line);
                        }
                        batch.clear();
                        let _ = empty_tx.try_send(batch);
                    }
                    state
                })
            })
            .collect();
        drop(full_rx);
        drop(empty_tx);

        let read_result = (|| {
            let mut batch = Batch::new();
            while reader.read_line_into(&mut batch.data)? {
                batch.ends.push(batch.data.len());
                if batch.is_full() {
                    let next = empty_rx.try_recv().unwrap_or_else(|_| Batch::new());
                    if full_tx.send(std::mem::replace(&mut batch, next)).is_err() {
                        break;
                    }
                }
            }
            if !batch.ends.is_empty() {
                let _ = full_tx.send(batch);
            }
            Ok(())
        })();
        drop(full_tx);

        let states = handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect();
        read_result.map(|()| ScanOutput {
            states,
            lines: reader.lines_read(),
        })
    })
}
