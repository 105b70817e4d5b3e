//! In-process publish/subscribe. Every subscriber of a topic receives every
//! message published to it, in publish order.

use std::cell::RefCell;
use std::collections::{BTreeMap, VecDeque};
use std::rc::Rc;
use std::sync::Arc;

use crossbeam_channel::{unbounded, Receiver, Sender};

use crate::error::{Error, Result};

pub type Payload = Arc<[u8]>;

pub trait Bus {
    fn publish(&self, topic: &str, payload: Payload) -> Result<()>;
}

/// Single-threaded bus backed by per-subscriber queues.
#[derive(Default)]
pub struct DirectBus {
    topics: RefCell<BTreeMap<String, Vec<Rc<RefCell<VecDeque<Payload>>>>>>,
}

/// Handle to one subscriber's queue on a [`DirectBus`].
#[derive(Clone)]
pub struct DirectSubscription {
    queue: Rc<RefCell<VecDeque<Payload>>>,
}

impl DirectSubscription {
    pub fn pop(&self) -> Option<Payload> {
        self.queue.borrow_mut().pop_front()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.borrow().is_empty()
    }
}

impl DirectBus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subscribe(&self, topic: &str) -> DirectSubscription {
        let queue = Rc::new(RefCell::new(VecDeque::new()));
        self.topics.borrow_mut().entry(topic.to_string()).or_default().push(queue.clone());
        DirectSubscription { queue }
    }
}

impl Bus for DirectBus {
    fn publish(&self, topic: &str, payload: Payload) -> Result<()> {
        if let Some(subs) = self.topics.borrow().get(topic) {
            for q in subs {
                q.borrow_mut().push_back(payload.clone());
            }
        }
        Ok(())
    }
}

/// Thread-safe bus: one unbounded channel per subscriber.
#[derive(Default, Clone)]
pub struct ChannelBus {
    topics: BTreeMap<String, Vec<Sender<Payload>>>,
}

impl ChannelBus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a subscriber. Subscriptions must be made before the bus is
    /// shared with publishers.
    pub fn subscribe(&mut self, topic: &str) -> Receiver<Payload> {
        let (tx, rx) = unbounded();
        self.topics.entry(topic.to_string()).or_default().push(tx);
        rx
    }
}

impl Bus for ChannelBus {
    fn publish(&self, topic: &str, payload: Payload) -> Result<()> {
        if let Some(subs) = self.topics.get(topic) {
            for tx in subs {
                tx.send(payload.clone())
                    .map_err(|_| Error::Aborted(format!("subscriber of {topic} went away")))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Payload {
        Arc::from(s.as_bytes())
    }

    #[test]
    fn direct_fan_out_is_fifo() {
        let bus = DirectBus::new();
        let a = bus.subscribe("t");
        let b = bus.subscribe("t");
        let other = bus.subscribe("u");
        for m in ["1", "2", "3"] {
            bus.publish("t", p(m)).unwrap();
        }
        for sub in [&a, &b] {
            let got: Vec<Payload> = std::iter::from_fn(|| sub.pop()).collect();
            assert_eq!(got, vec![p("1"), p("2"), p("3")]);
        }
        assert!(other.is_empty());
    }

    #[test]
    fn channel_fan_out_across_threads() {
        let mut bus = ChannelBus::new();
        let subs: Vec<_> = (0..3).map(|_| bus.subscribe("t")).collect();
        std::thread::scope(|s| {
            s.spawn(|| {
                for i in 0..100 {
                    bus.publish("t", p(&i.to_string())).unwrap();
                }
            });
        });
        for rx in subs {
            let got: Vec<String> = rx.try_iter().map(|b| String::from_utf8(b.to_vec()).unwrap()).collect();
            assert_eq!(got, (0..100).map(|i| i.to_string()).collect::<Vec<_>>());
        }
    }
}
