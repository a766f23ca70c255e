//! Trajectory records and their CSV form.
//!
//! A record file is a block of `# key = value` header lines followed by a CSV
//! table with the columns in [`COLUMNS`].

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::fock_ops::C64;
use crate::model::SystemParams;

pub const COLUMNS: [&str; 11] = [
    "tau",
    "q",
    "p",
    "alpha_abs2",
    "norm",
    "center_a_re",
    "center_a_im",
    "center_b_re",
    "center_b_im",
    "top_pop_a",
    "top_pop_b",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub tau: f64,
    pub q: f64,
    pub p: f64,
    pub alpha_abs2: f64,
    pub norm: f64,
    pub center_a: C64,
    pub center_b: C64,
    pub top_a: f64,
    pub top_b: f64,
}

impl Sample {
    pub fn classical(tau: f64, q: f64, p: f64, alpha: C64) -> Self {
        Self {
            tau,
            q,
            p,
            alpha_abs2: alpha.norm_sqr(),
            norm: 1.0,
            center_a: C64::new(0.0, 0.0),
            center_b: C64::new(0.0, 0.0),
            top_a: 0.0,
            top_b: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub engine: String,
    pub params: SystemParams,
    pub seed: Option<u64>,
    pub trajectory: u64,
    pub dt: f64,
    pub truncation: Option<(usize, usize)>,
    /// Free-form reproduction metadata (initial condition, scheme options, ...).
    pub extra: Vec<(String, String)>,
}

impl RecordHeader {
    pub fn new(engine: &str, params: SystemParams, dt: f64) -> Self {
        Self {
            engine: engine.to_string(),
            params,
            seed: None,
            trajectory: 0,
            dt,
            truncation: None,
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub header: RecordHeader,
    pub samples: Vec<Sample>,
}

impl TrajectoryRecord {
    pub fn new(header: RecordHeader) -> Self {
        Self {
            header,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, s: Sample) {
        debug_assert!(self.samples.last().map_or(true, |l| s.tau > l.tau));
        self.samples.push(s);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    pub fn qs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.q).collect()
    }

    /// `(τ, q, p)` triples for the transition detector.
    pub fn phase_series(&self) -> Vec<(f64, f64, f64)> {
        self.samples.iter().map(|s| (s.tau, s.q, s.p)).collect()
    }

    pub fn max_top_population(&self) -> f64 {
        self.samples.iter().map(|s| s.top_a.max(s.top_b)).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let h = &self.header;
        let mut head = String::new();
        let p = &h.params;
        let _ = writeln!(head, "# engine = {}", h.engine);
        let _ = writeln!(head, "# delta0 = {:?}", p.delta0);
        let _ = writeln!(head, "# kappa = {:?}", p.kappa);
        let _ = writeln!(head, "# gamma_m = {:?}", p.gamma_m);
        let _ = writeln!(head, "# g0 = {:?}", p.g0);
        let _ = writeln!(head, "# alpha_l = {:?}", p.alpha_l);
        let _ = writeln!(head, "# p_tilde = {:?}", p.p_tilde);
        if let Some(seed) = h.seed {
            let _ = writeln!(head, "# seed = {seed}");
        }
        let _ = writeln!(head, "# trajectory = {}", h.trajectory);
        let _ = writeln!(head, "# dt = {:?}", h.dt);
        if let Some((na, nb)) = h.truncation {
            let _ = writeln!(head, "# n_a = {na}");
            let _ = writeln!(head, "# n_b = {nb}");
        }
        for (k, v) in &h.extra {
            let _ = writeln!(head, "# {k} = {v}");
        }
        w.write_all(head.as_bytes())?;
        writeln!(w, "{}", COLUMNS.join(","))?;
        for s in &self.samples {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                s.tau,
                s.q,
                s.p,
                s.alpha_abs2,
                s.norm,
                s.center_a.re,
                s.center_a.im,
                s.center_b.re,
                s.center_b.im,
                s.top_a,
                s.top_b
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut samples = Vec::new();
        let mut saw_columns = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::Format(format!("line {}: header without '='", lineno + 1)))?;
                kv.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            if !saw_columns {
                if line != COLUMNS.join(",") {
                    return Err(Error::Format(format!("line {}: unexpected column header", lineno + 1)));
                }
                saw_columns = true;
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != COLUMNS.len() {
                return Err(Error::Format(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 1,
                    COLUMNS.len(),
                    vals.len()
                )));
            }
            let s = Sample {
                tau: vals[0],
                q: vals[1],
                p: vals[2],
                alpha_abs2: vals[3],
                norm: vals[4],
                center_a: C64::new(vals[5], vals[6]),
                center_b: C64::new(vals[7], vals[8]),
                top_a: vals[9],
                top_b: vals[10],
            };
            if let Some(prev) = samples.last() {
                let prev: &Sample = prev;
                if !(s.tau > prev.tau) {
                    return Err(Error::Format(format!("line {}: tau not strictly increasing", lineno + 1)));
                }
            }
            samples.push(s);
        }
        let take = |key: &str| -> Result<String> {
            kv.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::Format(format!("missing header key '{key}'")))
        };
        let num = |key: &str| -> Result<f64> {
            take(key)?
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("header '{key}': {e}")))
        };
        let params = SystemParams {
            delta0: num("delta0")?,
            kappa: num("kappa")?,
            gamma_m: num("gamma_m")?,
            g0: num("g0")?,
            alpha_l: num("alpha_l")?,
            p_tilde: num("p_tilde")?,
        };
        let known = [
            "engine", "delta0", "kappa", "gamma_m", "g0", "alpha_l", "p_tilde", "seed", "trajectory", "dt", "n_a", "n_b",
        ];
        let parse_u = |key: &str| -> Result<Option<u64>> {
            match kv.iter().find(|(k, _)| k == key) {
                None => Ok(None),
                Some((_, v)) => v
                    .parse::<u64>()
                    .map(Some)
                    .map_err(|e| Error::Format(format!("header '{key}': {e}"))),
            }
        };
        let truncation = match (parse_u("n_a")?, parse_u("n_b")?) {
            (Some(a), Some(b)) => Some((a as usize, b as usize)),
            _ => None,
        };
        let header = RecordHeader {
            engine: take("engine")?,
            params,
            seed: parse_u("seed")?,
            trajectory: parse_u("trajectory")?.unwrap_or(0),
            dt: num("dt")?,
            truncation,
            extra: kv.into_iter().filter(|(k, _)| !known.contains(&k.as_str())).collect(),
        };
        Ok(Self { header, samples })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let params = SystemParams::preset(0.1).unwrap();
        let mut header = RecordHeader::new("qsd_ito", params, 2.0 * std::f64::consts::PI * 1e-3).with("init", "attractor");
        header.seed = Some(42);
        header.trajectory = 7;
        header.truncation = Some((24, 24));
        let mut rec = TrajectoryRecord::new(header);
        for k in 0..5 {
            let t = k as f64 * 0.1;
            rec.push(Sample {
                tau: t,
                q: t.sin() / 3.0,
                p: -t.cos(),
                alpha_abs2: 1.0 / 7.0,
                norm: 1.0 - 1e-13,
                center_a: C64::new(1.0 / 3.0, -2.0),
                center_b: C64::new(0.1, 0.2),
                top_a: 1e-9,
                top_b: 3e-12,
            });
        }
        let text = rec.to_csv_string();
        let back = TrajectoryRecord::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn rejects_non_monotone_tau() {
        let text = format!(
            "# engine = classical\n# delta0 = -0.7\n# kappa = 1.0\n# gamma_m = 0.001\n# g0 = 0.1\n# alpha_l = 4.0\n# p_tilde = 1.28\n# dt = 0.01\n{}\n1,0,0,0,1,0,0,0,0,0,0\n1,0,0,0,1,0,0,0,0,0,0\n",
            COLUMNS.join(",")
        );
        assert!(TrajectoryRecord::read_csv(text.as_bytes()).is_err());
    }
}
