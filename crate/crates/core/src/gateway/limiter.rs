use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};

/// Counting semaphore. Permits are returned when the [`Permit`] drops.
#[derive(Debug)]
pub struct Semaphore {
    available: Mutex<usize>,
    released: Condvar,
    capacity: usize,
}

impl Semaphore {
    pub fn new(capacity: usize) -> Arc<Self> {
        let capacity = capacity.max(1);
        Arc::new(Self { available: Mutex::new(capacity), released: Condvar::new(), capacity })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn acquire(self: &Arc<Self>) -> Permit {
        let mut available = self.available.lock().expect("semaphore poisoned");
        while *available == 0 {
            available = self.released.wait(available).expect("semaphore poisoned");
        }
        *available -= 1;
        Permit { owner: Arc::clone(self) }
    }

    pub fn in_use(&self) -> usize {
        self.capacity - *self.available.lock().expect("semaphore poisoned")
    }
}

#[must_use = "the permit is released as soon as it is dropped"]
#[derive(Debug)]
pub struct Permit {
    owner: Arc<Semaphore>,
}

impl Drop for Permit {
    fn drop(&mut self) {
        let mut available = self.owner.available.lock().expect("semaphore poisoned");
        *available += 1;
        self.owner.released.notify_one();
    }
}

/// Hands out one shared semaphore per endpoint so that every model pointing
/// at the same server respects a single in-flight cap.
#[derive(Debug, Default, Clone)]
pub struct EndpointLimiter {
    by_endpoint: Arc<Mutex<HashMap<String, Arc<Semaphore>>>>,
}

impl EndpointLimiter {
    pub fn new() -> Self {
        Self::default()
    }

    /// The first caller for an endpoint fixes its capacity.
    pub fn semaphore_for(&self, endpoint: &str, cap: usize) -> Arc<Semaphore> {
        let mut map = self.by_endpoint.lock().expect("limiter poisoned");
        Arc::clone(map.entry(endpoint.to_string()).or_insert_with(|| Semaphore::new(cap)))
    }

    pub fn acquire(&self, endpoint: &str, cap: usize) -> Permit {
        self.semaphore_for(endpoint, cap).acquire()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::thread;
    use std::time::Duration;

    use super::*;

    #[test]
    fn cap_is_never_exceeded() {
        let limiter = EndpointLimiter::new();
        let peak = Arc::new(AtomicUsize::new(0));
        let live = Arc::new(AtomicUsize::new(0));
        thread::scope(|s| {
            for _ in 0..12 {
                let limiter = limiter.clone();
                let peak = Arc::clone(&peak);
                let live = Arc::clone(&live);
                s.spawn(move || {
                    let _permit = limiter.acquire("http://stub", 3);
                    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    thread::sleep(Duration::from_millis(10));
                    live.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 3);
        assert_eq!(limiter.semaphore_for("http://stub", 99).in_use(), 0);
    }

    #[test]
    fn endpoints_are_independent() {
        let limiter = EndpointLimiter::new();
        let _a = limiter.acquire("a", 1);
        // would block forever if "b" shared "a"'s semaphore
        let _b = limiter.acquire("b", 1);
        assert_eq!(limiter.semaphore_for("a", 1).in_use(), 1);
    }
}
