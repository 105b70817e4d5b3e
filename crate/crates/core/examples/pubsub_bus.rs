use std::sync::Arc;
use std::thread;

use memestream::parallel::bus::{Bus, ChannelBus, DirectBus};

fn main() -> memestream::Result<()> {
    let direct = DirectBus::new();
    let a = direct.subscribe("sync");
    let b = direct.subscribe("sync");
    for msg in ["one", "two", "three"] {
        direct.publish("sync", Arc::from(msg.as_bytes()))?;
    }
    direct.publish("elsewhere", Arc::from(&b"ignored"[..]))?;
    while let Some(m) = a.pop() {
        println!("a got {}", String::from_utf8_lossy(&m));
    }
    println!("b has {} pending", std::iter::from_fn(|| b.pop()).count());

    let mut bus = ChannelBus::new();
    let inboxes: Vec<_> = (0..3).map(|_| bus.subscribe("sync")).collect();
    let handles: Vec<_> = inboxes
        .into_iter()
        .enumerate()
        .map(|(i, rx)| thread::spawn(move || rx.iter().take(2).map(|m| format!("worker {i}: {}", String::from_utf8_lossy(&m))).collect::<Vec<_>>()))
        .collect();
    bus.publish("sync", Arc::from(&b"SYNCINIT"[..]))?;
    bus.publish("sync", Arc::from(&b"CDELTA"[..]))?;
    for h in handles {
        for line in h.join().unwrap() {
            println!("{line}");
        }
    }
    Ok(())
}
