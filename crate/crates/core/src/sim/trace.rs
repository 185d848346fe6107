use std::io::Write;

use crate::{Error, Result};

/// Decimated time series with named channels, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    names: Vec<String>,
    times: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        Self {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            times: Vec::new(),
            columns: vec![Vec::new(); names.len()],
        }
    }

    /// Appends a sample. Times must be strictly increasing.
    pub fn push(&mut self, t: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.names.len() {
            return Err(Error::config(format!(
                "trace row has {} values for {} channels",
                values.len(),
                self.names.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::config(format!(
                    "trace time {t} does not follow {last}"
                )));
            }
        }
        self.times.push(t);
        for (col, v) in self.columns.iter_mut().zip(values) {
            col.push(*v);
        }
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sample spacing (assumes the uniform spacing the simulator produces).
    pub fn dt(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        Some((self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64)
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// Index range of samples with `t0 <= t < t1`.
    pub fn range(&self, t0: f64, t1: f64) -> std::ops::Range<usize> {
        let a = self.times.partition_point(|&t| t < t0);
        let b = self.times.partition_point(|&t| t < t1);
        a..b.max(a)
    }

    /// Samples of `name` with `t0 <= t < t1`, plus the time of the first one.
    pub fn window(&self, name: &str, t0: f64, t1: f64) -> Option<(&[f64], f64)> {
        let col = self.channel(name)?;
        let r = self.range(t0, t1);
        let start_t = self.times.get(r.start).copied().unwrap_or(t0);
        Some((&col[r], start_t))
    }

    pub fn mean(&self, name: &str, t0: f64, t1: f64) -> Option<f64> {
        let (w, _) = self.window(name, t0, t1)?;
        if w.is_empty() {
            return None;
        }
        Some(w.iter().sum::<f64>() / w.len() as f64)
    }

    /// Value of `name` at the last sample with time <= t.
    pub fn value_at(&self, name: &str, t: f64) -> Option<f64> {
        let col = self.channel(name)?;
        let i = self.times.partition_point(|&x| x <= t);
        (i > 0).then(|| col[i - 1])
    }

    /// CSV with a header row and 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (i, t) in self.times.iter().enumerate() {
            write!(w, "{t:.16e}")?;
            for col in &self.columns {
                write!(w, ",{:.16e}", col[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}
