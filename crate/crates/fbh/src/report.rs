use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    /// Outside tolerance but within the statistical allowance of a Monte-Carlo
    /// check. Does not fail the run.
    Warn,
    Fail,
}

/// One named check and the tolerance it was judged against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub name: String,
    pub status: Status,
    pub metric: f64,
    pub tolerance: f64,
}

impl Outcome {
    /// Passes when `metric <= tolerance`. NaN fails.
    pub fn at_most(name: impl Into<String>, metric: f64, tolerance: f64) -> Self {
        let status = if metric <= tolerance { Status::Pass } else { Status::Fail };
        Self {
            name: name.into(),
            status,
            metric,
            tolerance,
        }
    }

    /// Passes when `metric > tolerance`.
    pub fn above(name: impl Into<String>, metric: f64, tolerance: f64) -> Self {
        let status = if metric > tolerance { Status::Pass } else { Status::Fail };
        Self {
            name: name.into(),
            status,
            metric,
            tolerance,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            metric: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub spec_digest: Option<String>,
    pub results: Vec<Outcome>,
    pub seed: u64,
    pub wall_time: f64,
    /// Command-specific payload.
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub output: serde_json::Value,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(Outcome::passed)
    }
}

/// Rolls a group of outcomes into one, carrying the metric that came closest
/// to its tolerance.
pub fn summarize(name: &str, outcomes: &[Outcome]) -> Outcome {
    let status = if outcomes.iter().any(|o| o.status == Status::Fail) {
        Status::Fail
    } else if outcomes.iter().any(|o| o.status == Status::Warn) {
        Status::Warn
    } else {
        Status::Pass
    };
    // ratios only mean something for upper bounds with a positive tolerance
    let ratio = |o: &Outcome| if o.tolerance > 0.0 { o.metric / o.tolerance } else { f64::NEG_INFINITY };
    let worst = outcomes
        .iter()
        .filter(|o| o.status == status)
        .max_by(|a, b| ratio(a).total_cmp(&ratio(b)));
    Outcome {
        name: name.to_string(),
        status,
        metric: worst.map_or(0.0, |o| o.metric),
        tolerance: worst.map_or(0.0, |o| o.tolerance),
    }
}
