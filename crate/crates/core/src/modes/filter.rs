use std::collections::VecDeque;

/// Boxcar average over the last `len` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingAverage {
    buf: VecDeque<f64>,
    len: usize,
    sum: f64,
    since_resum: usize,
}

impl MovingAverage {
    pub fn new(len: usize) -> Self {
        let len = len.max(1);
        Self {
            buf: VecDeque::with_capacity(len),
            len,
            sum: 0.0,
            since_resum: 0,
        }
    }

    /// Filter whose window spans `window` seconds at sample interval `dt`.
    pub fn with_window(window: f64, dt: f64) -> Self {
        Self::new((window / dt).round() as usize)
    }

    /// Fills the window with `value`.
    pub fn reset(&mut self, value: f64) {
        self.buf.clear();
        self.buf.extend(std::iter::repeat_n(value, self.len));
        self.sum = value * self.len as f64;
        self.since_resum = 0;
    }

    pub fn push(&mut self, x: f64) -> f64 {
        if self.buf.len() == self.len {
            self.sum -= self.buf.pop_front().unwrap_or(0.0);
        }
        self.buf.push_back(x);
        self.sum += x;
        self.since_resum += 1;
        if self.since_resum >= self.len {
            // bound rounding drift from the running sum
            self.sum = self.buf.iter().sum();
            self.since_resum = 0;
        }
        self.value()
    }

    pub fn value(&self) -> f64 {
        if self.buf.is_empty() {
            0.0
        } else {
            self.sum / self.buf.len() as f64
        }
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.len
    }
}
