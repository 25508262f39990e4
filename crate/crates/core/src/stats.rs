//! Line-delimited JSON run statistics.

use std::collections::HashMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum StatsRecord {
    Cooperation {
        t: f64,
        component: usize,
        phase: u64,
        routes: usize,
        distance: f64,
        delta: usize,
        pool_size: usize,
    },
    Generation {
        t: f64,
        generation: usize,
        routes: usize,
        distance: f64,
        stagnation: usize,
        replaced: usize,
    },
    Summary {
        t: f64,
        routes: usize,
        distance: f64,
        wall_time: f64,
        threads: usize,
    },
    BenchRun {
        threads: usize,
        repeat: usize,
        wall_time: f64,
        routes: usize,
        distance: f64,
        generations: usize,
    },
    Speedup {
        threads: usize,
        median_time: f64,
        speedup: Option<f64>,
        median_distance: f64,
    },
}

impl StatsRecord {
    fn clock(&mut self) -> Option<(&'static str, usize, &mut f64)> {
        match self {
            StatsRecord::Cooperation { t, component, .. } => Some(("cooperation", *component, t)),
            StatsRecord::Generation { t, .. } => Some(("generation", 0, t)),
            StatsRecord::Summary { t, .. } => Some(("summary", 0, t)),
            _ => None,
        }
    }
}

/// Appends records one per line. Timestamps are nudged forward where needed
/// so each component's records are strictly increasing in time.
pub struct StatsWriter<W: Write> {
    out: W,
    last: HashMap<(&'static str, usize), f64>,
    written: usize,
}

impl<W: Write> StatsWriter<W> {
    pub fn new(out: W) -> Self {
        StatsWriter {
            out,
            last: HashMap::new(),
            written: 0,
        }
    }

    pub fn emit(&mut self, mut record: StatsRecord) -> io::Result<()> {
        if let Some((kind, component, t)) = record.clock() {
            if let Some(&prev) = self.last.get(&(kind, component)) {
                if *t <= prev {
                    *t = prev.next_up();
                }
            }
            self.last.insert((kind, component), *t);
        }
        serde_json::to_writer(&mut self.out, &record)?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses a stats stream, failing on the first malformed line.
pub fn parse_stats(text: &str) -> Result<Vec<StatsRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
