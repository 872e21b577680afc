#![allow(dead_code)]

use std::time::{Duration, Instant};

use stylize_core::mesh::write_obj;
use stylize_core::TriangleMesh;
use stylize_studio::{Event, Frame};
use tokio::sync::mpsc::Receiver;

pub fn obj_text(mesh: &TriangleMesh) -> String {
    let mut out = Vec::new();
    write_obj(mesh, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

/// Waits up to `timeout` for the next frame, skipping failure events.
pub fn next_frame(rx: &mut Receiver<Event>, timeout: Duration) -> Option<Frame> {
    let deadline = Instant::now() + timeout;
    while Instant::now() < deadline {
        match rx.try_recv() {
            Ok(Event::Frame(f)) => return Some(f),
            Ok(Event::Failed(msg)) => panic!("loop failed: {msg}"),
            Err(_) => std::thread::sleep(Duration::from_millis(2)),
        }
    }
    None
}

pub fn frames(rx: &mut Receiver<Event>, n: usize) -> Vec<Frame> {
    (0..n)
        .map(|i| next_frame(rx, Duration::from_secs(20)).unwrap_or_else(|| panic!("frame {i} missing")))
        .collect()
}

pub fn drain(rx: &mut Receiver<Event>) -> Vec<Frame> {
    let mut out = Vec::new();
    while let Some(f) = next_frame(rx, Duration::from_millis(300)) {
        out.push(f);
    }
    out
}

pub fn wait_until(timeout: Duration, mut f: impl FnMut() -> bool) -> bool {
    let deadline = Instant::now() + timeout;
    while Instant::now() < deadline {
        if f() {
            return true;
        }
        std::thread::sleep(Duration::from_millis(5));
    }
    false
}
