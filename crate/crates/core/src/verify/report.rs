use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Diagnostic only; never a failure.
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub status: Status,
    pub max_violation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckLine {
    /// Passes when `max_violation ≤ tolerance`.
    pub fn bounded(name: &str, max_violation: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let status = if max_violation <= tolerance { Status::Pass } else { Status::Fail };
        Self {
            name: name.into(),
            status,
            max_violation,
            tolerance,
            detail: detail.into(),
        }
    }

    pub fn info(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Info,
            max_violation: f64::NAN,
            tolerance: f64::NAN,
            detail: detail.into(),
        }
    }

    pub fn failed(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Fail,
            max_violation: f64::NAN,
            tolerance: f64::NAN,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {} max_violation={:.3e} tolerance={:.1e}",
            self.name,
            self.status.as_str(),
            self.max_violation,
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub lines: Vec<CheckLine>,
}

impl Report {
    pub fn push(&mut self, line: CheckLine) {
        self.lines.push(line);
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.status != Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckLine> {
        self.lines.iter().find(|l| l.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}
