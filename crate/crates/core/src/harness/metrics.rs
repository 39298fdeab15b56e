use std::io::{BufRead, Write};

use super::HarnessError;

pub const METRICS_HEADER: &str =
    "env_steps,episodes,success_rate,mean_episode_return,violation_rate,lambda,alpha_um,alpha_se,swu,wall_time";

/// One line of the training metrics stream. Rates and returns cover the
/// window since the previous row; `NaN` marks a window with no finished episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub env_steps: u64,
    pub episodes: u64,
    pub success_rate: f64,
    pub mean_episode_return: f64,
    pub violation_rate: f64,
    pub lambda: f64,
    pub alpha_um: f64,
    pub alpha_se: f64,
    pub swu: f64,
    pub wall_time: f64,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        // `{:?}` prints the shortest text that parses back to the same double.
        format!(
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.env_steps,
            self.episodes,
            self.success_rate,
            self.mean_episode_return,
            self.violation_rate,
            self.lambda,
            self.alpha_um,
            self.alpha_se,
            self.swu,
            self.wall_time
        )
    }

    pub fn from_csv(line: &str) -> Result<Self, HarnessError> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 10 {
            return Err(HarnessError::Schema(format!(
                "expected 10 columns, got {} in `{line}`",
                f.len()
            )));
        }
        let num = |k: usize| -> Result<f64, HarnessError> {
            f[k].parse::<f64>()
                .map_err(|_| HarnessError::Schema(format!("column {k}: `{}` is not a number", f[k])))
        };
        let int = |k: usize| -> Result<u64, HarnessError> {
            f[k].parse::<u64>()
                .map_err(|_| HarnessError::Schema(format!("column {k}: `{}` is not a count", f[k])))
        };
        Ok(Self {
            env_steps: int(0)?,
            episodes: int(1)?,
            success_rate: num(2)?,
            mean_episode_return: num(3)?,
            violation_rate: num(4)?,
            lambda: num(5)?,
            alpha_um: num(6)?,
            alpha_se: num(7)?,
            swu: num(8)?,
            wall_time: num(9)?,
        })
    }
}

/// Appends rows to a CSV sink, writing the header before the first row of an
/// empty sink.
pub struct MetricsWriter<W: Write> {
    sink: W,
    header_written: bool,
}

impl<W: Write> MetricsWriter<W> {
    /// `has_header` is true when the sink already holds the header (resuming).
    pub fn new(sink: W, has_header: bool) -> Self {
        Self {
            sink,
            header_written: has_header,
        }
    }

    pub fn write_header(&mut self) -> std::io::Result<()> {
        if !self.header_written {
            writeln!(self.sink, "{METRICS_HEADER}")?;
            self.header_written = true;
        }
        Ok(())
    }

    pub fn emit(&mut self, row: &MetricsRow) -> std::io::Result<()> {
        self.write_header()?;
        writeln!(self.sink, "{}", row.to_csv())?;
        self.sink.flush()
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.sink.flush()
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

pub fn read_metrics<R: BufRead>(src: R) -> Result<Vec<MetricsRow>, HarnessError> {
    let mut lines = src.lines();
    match lines.next() {
        Some(h) if h.as_ref().map(|s| s.trim() == METRICS_HEADER).unwrap_or(false) => {}
        Some(Err(e)) => return Err(e.into()),
        _ => return Err(HarnessError::Schema("missing or unexpected metrics header".into())),
    }
    let mut rows = Vec::new();
    for l in lines {
        let l = l?;
        if !l.trim().is_empty() {
            rows.push(MetricsRow::from_csv(&l)?);
        }
    }
    Ok(rows)
}

/// Running sums over a span of environment steps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WindowStats {
    pub steps: u64,
    pub violations: f64,
    pub episodes: u64,
    pub successes: u64,
    pub return_sum: f64,
}

impl WindowStats {
    pub fn record_step(&mut self, r_c: f64) {
        self.steps += 1;
        self.violations += -r_c;
    }

    pub fn record_episode(&mut self, ret: f64, success: bool) {
        self.episodes += 1;
        self.successes += success as u64;
        self.return_sum += ret;
    }

    /// `−mean r_c` over the window.
    pub fn violation_rate(&self) -> f64 {
        if self.steps == 0 {
            f64::NAN
        } else {
            self.violations / self.steps as f64
        }
    }

    pub fn success_rate(&self) -> f64 {
        if self.episodes == 0 {
            f64::NAN
        } else {
            self.successes as f64 / self.episodes as f64
        }
    }

    pub fn mean_return(&self) -> f64 {
        if self.episodes == 0 {
            f64::NAN
        } else {
            self.return_sum / self.episodes as f64
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.steps as f64,
            self.violations,
            self.episodes as f64,
            self.successes as f64,
            self.return_sum,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            steps: v[0] as u64,
            violations: v[1],
            episodes: v[2] as u64,
            successes: v[3] as u64,
            return_sum: v[4],
        }
    }
}

/// `min{1, target/measured} × utility/base`; a zero measured rate gives a
/// first factor of 1.
pub fn compute_swu(target_rate: f64, measured_rate: f64, utility: f64, utility_base: f64) -> Result<f64, HarnessError> {
    if !(utility_base > 0.0) {
        return Err(HarnessError::Swu(format!("utility base must be positive, got {utility_base}")));
    }
    if !(measured_rate >= 0.0) || !(target_rate >= 0.0) {
        return Err(HarnessError::Swu("rates must be non-negative".into()));
    }
    let safety = if measured_rate == 0.0 {
        1.0
    } else {
        (target_rate / measured_rate).min(1.0)
    };
    Ok(safety * utility / utility_base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: u64) -> MetricsRow {
        MetricsRow {
            env_steps: k * 40,
            episodes: k,
            success_rate: 0.1 + k as f64 / 3.0,
            mean_episode_return: f64::NAN,
            violation_rate: 1.0 / 7.0,
            lambda: std::f64::consts::LN_2,
            alpha_um: 1e-300,
            alpha_se: 0.0,
            swu: f64::NAN,
            wall_time: 0.0,
        }
    }

    #[test]
    fn header_once_and_round_trip() {
        let mut w = MetricsWriter::new(Vec::new(), false);
        w.write_header().unwrap();
        let text = String::from_utf8(w.into_inner()).unwrap();
        assert_eq!(text.lines().count(), 1);

        let mut w = MetricsWriter::new(Vec::new(), false);
        for k in 0..3 {
            w.emit(&row(k)).unwrap();
        }
        let bytes = w.into_inner();
        assert_eq!(String::from_utf8(bytes.clone()).unwrap().lines().count(), 4);
        let back = read_metrics(&bytes[..]).unwrap();
        for (k, r) in back.iter().enumerate() {
            let orig = row(k as u64);
            assert_eq!(r.to_csv(), orig.to_csv());
            assert_eq!(r.success_rate.to_bits(), orig.success_rate.to_bits());
        }
    }

    #[test]
    fn schema_errors() {
        assert!(read_metrics(&b"a,b\n1,2\n"[..]).is_err());
        let bad = format!("{METRICS_HEADER}\n1,2,3\n");
        assert!(matches!(read_metrics(bad.as_bytes()), Err(HarnessError::Schema(_))));
    }

    #[test]
    fn swu_fixtures() {
        assert_eq!(compute_swu(5e-4, 1e-3, 0.8, 1.0).unwrap(), 0.4);
        assert_eq!(compute_swu(5e-4, 1e-4, 0.8, 1.0).unwrap(), 0.8);
        assert_eq!(compute_swu(5e-4, 0.0, 0.8, 2.0).unwrap(), 0.4);
        assert!(compute_swu(5e-4, 1e-3, 0.8, 0.0).is_err());
        assert!(compute_swu(5e-4, 1e-3, 0.8, -1.0).is_err());
    }

    #[test]
    fn violation_accounting() {
        let mut w = WindowStats::default();
        let rcs = [-1.0, 0.0, 0.0, -1.0, 0.0];
        for r in rcs {
            w.record_step(r);
        }
        let total: f64 = rcs.iter().map(|r| -r).sum();
        assert_eq!(w.steps as f64 * w.violation_rate(), total);
    }
}
