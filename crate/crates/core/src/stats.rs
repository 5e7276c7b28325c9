//! Corpus statistics: element, screenshot and trace counts per source.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{GroundingRecord, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataType {
    Grounding,
    Planning,
}

impl DataType {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Grounding => "grounding",
            Self::Planning => "planning",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Bucket {
    elements: u64,
    traces: u64,
    total_steps: u64,
    shots: BTreeSet<String>,
}

impl Bucket {
    fn absorb(&mut self, other: Bucket) {
        self.elements += other.elements;
        self.traces += other.traces;
        self.total_steps += other.total_steps;
        self.shots.extend(other.shots);
    }

    fn row(&self, source_tag: &str, data_type: Option<DataType>) -> StatsRow {
        StatsRow {
            source_tag: source_tag.to_string(),
            data_type,
            elements: self.elements,
            screenshots: self.shots.len() as u64,
            traces: self.traces,
            total_steps: self.total_steps,
            avg_steps: AvgSteps::new(self.total_steps, self.traces),
        }
    }
}

/// Streaming accumulator. Partitions can be filled independently and
/// combined with [`StatsAccumulator::merge`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatsAccumulator {
    buckets: BTreeMap<(String, DataType), Bucket>,
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_grounding(&mut self, r: &GroundingRecord) {
        let b = self.bucket(&r.source_tag, DataType::Grounding);
        b.elements += 1;
        if !b.shots.contains(&r.screenshot_ref) {
            b.shots.insert(r.screenshot_ref.clone());
        }
    }

    pub fn add_trajectory(&mut self, t: &Trajectory) {
        let b = self.bucket(&t.source_tag, DataType::Planning);
        b.traces += 1;
        b.total_steps += t.steps.len() as u64;
        for s in &t.steps {
            if !b.shots.contains(&s.observation.screenshot_ref) {
                b.shots.insert(s.observation.screenshot_ref.clone());
            }
        }
    }

    pub fn merge(&mut self, other: StatsAccumulator) {
        for (k, b) in other.buckets {
            self.buckets.entry(k).or_default().absorb(b);
        }
    }

    fn bucket(&mut self, tag: &str, dt: DataType) -> &mut Bucket {
        self.buckets.entry((tag.to_string(), dt)).or_default()
    }

    pub fn report(&self) -> StatsReport {
        let mut total = Bucket::default();
        let rows = self
            .buckets
            .iter()
            .map(|((tag, dt), b)| {
                total.absorb(b.clone());
                b.row(tag, Some(*dt))
            })
            .collect();
        StatsReport {
            rows,
            total: total.row("total", None),
        }
    }
}

pub fn compute_stats<'a, 'b>(
    grounding: impl IntoIterator<Item = &'a GroundingRecord>,
    trajectories: impl IntoIterator<Item = &'b Trajectory>,
) -> StatsReport {
    let mut acc = StatsAccumulator::new();
    grounding.into_iter().for_each(|r| acc.add_grounding(r));
    trajectories.into_iter().for_each(|t| acc.add_trajectory(t));
    acc.report()
}

/// Mean steps per trace, kept in tenths, rounded half up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AvgSteps {
    tenths: u64,
}

impl AvgSteps {
    pub fn new(total_steps: u64, traces: u64) -> Option<Self> {
        (traces > 0).then(|| Self {
            tenths: (20 * total_steps + traces) / (2 * traces),
        })
    }

    pub fn tenths(&self) -> u64 {
        self.tenths
    }

    pub fn as_f64(&self) -> f64 {
        self.tenths as f64 / 10.0
    }
}

impl fmt::Display for AvgSteps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.tenths / 10, self.tenths % 10)
    }
}

impl Serialize for AvgSteps {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for AvgSteps {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(serde::de::Error::custom("avg_steps must be a non-negative number"));
        }
        Ok(Self {
            tenths: (v * 10.0).round() as u64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub source_tag: String,
    /// `None` on the total row.
    pub data_type: Option<DataType>,
    pub elements: u64,
    pub screenshots: u64,
    pub traces: u64,
    pub total_steps: u64,
    /// Absent (null) when there are no traces.
    pub avg_steps: Option<AvgSteps>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub rows: Vec<StatsRow>,
    /// Screenshots counted as distinct refs across every row.
    pub total: StatsRow,
}

/// Compact count: 950, 28.7K, 232K, 1.2M.
pub fn format_count(n: u64) -> String {
    let (unit, suffix) = match n {
        0..=999 => return n.to_string(),
        1_000..=999_999 => (1_000, "K"),
        _ => (1_000_000, "M"),
    };
    let tenths = (20 * n + unit) / (2 * unit);
    if tenths % 10 == 0 {
        format!("{}{suffix}", tenths / 10)
    } else {
        format!("{}.{}{suffix}", tenths / 10, tenths % 10)
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = ["source", "type", "elements", "screenshots", "traces", "avg steps"];
        let cells: Vec<[String; 6]> = self
            .rows
            .iter()
            .chain(std::iter::once(&self.total))
            .map(|r| {
                [
                    r.source_tag.clone(),
                    r.data_type.map_or("-", |d| d.as_str()).to_string(),
                    format_count(r.elements),
                    format_count(r.screenshots),
                    format_count(r.traces),
                    r.avg_steps.map_or_else(|| "-".to_string(), |a| a.to_string()),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, row: &[&str]| -> fmt::Result {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    f.write_str("  ")?;
                }
                if i < 2 {
                    write!(f, "{c:<w$}", w = widths[i])?;
                } else {
                    write!(f, "{c:>w$}", w = widths[i])?;
                }
            }
            writeln!(f)
        };
        line(f, &header)?;
        for row in &cells {
            line(f, &row.iter().map(String::as_str).collect::<Vec<_>>())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Action, NormPoint, Observation, ScreenSize, Step, SynthesisKind};

    fn traj(tag: &str, len: u32, shot_prefix: &str) -> Trajectory {
        let screen = ScreenSize::new(100, 200).unwrap();
        Trajectory {
            task: "t".into(),
            source_tag: tag.into(),
            steps: (1..=len)
                .map(|i| Step {
                    index: i,
                    observation: Observation {
                        screenshot_ref: format!("{shot_prefix}{i}.png"),
                        screen,
                    },
                    action: Action::Wait,
                    low_level_instruction: None,
                })
                .collect(),
        }
    }

    fn grec(tag: &str, shot: &str) -> GroundingRecord {
        GroundingRecord {
            screenshot_ref: shot.into(),
            screen: ScreenSize::new(100, 200).unwrap(),
            element_desc: "x".into(),
            target_box: None,
            target_point: NormPoint::ORIGIN,
            source_tag: tag.into(),
            synthesis_kind: SynthesisKind::Unspecified,
        }
    }

    #[test]
    fn avg_steps_example() {
        let ts: Vec<_> = [7, 9, 10, 8].iter().map(|&n| traj("m", n, "s")).collect();
        let rep = compute_stats([], &ts);
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.rows[0].traces, 4);
        assert_eq!(rep.rows[0].avg_steps.unwrap().to_string(), "8.5");
        assert_eq!(rep.rows[0].screenshots, 10);
    }

    #[test]
    fn rounding_half_up() {
        assert_eq!(AvgSteps::new(1, 4).unwrap().to_string(), "0.3"); // 0.25
        assert_eq!(AvgSteps::new(3, 8).unwrap().to_string(), "0.4"); // 0.375
        assert_eq!(AvgSteps::new(2, 3).unwrap().to_string(), "0.7");
        assert_eq!(AvgSteps::new(5, 0), None);
    }

    #[test]
    fn empty_inputs() {
        let rep = compute_stats([], []);
        assert!(rep.rows.is_empty());
        assert_eq!(rep.total.elements, 0);
        assert_eq!(rep.total.screenshots, 0);
        assert_eq!(rep.total.avg_steps, None);
        let json = serde_json::to_value(&rep).unwrap();
        assert!(json["total"]["avg_steps"].is_null());
    }

    #[test]
    fn total_counts_distinct_refs_across_streams() {
        let g = vec![grec("a", "s1.png"), grec("a", "s1.png"), grec("b", "x.png")];
        let t = vec![traj("c", 2, "s")];
        let rep = compute_stats(&g, &t);
        assert_eq!(rep.total.elements, 3);
        assert_eq!(rep.total.screenshots, 3); // s1, s2, x
        assert_eq!(rep.rows.iter().find(|r| r.source_tag == "a").unwrap().screenshots, 1);
    }

    #[test]
    fn count_formatting() {
        assert_eq!(format_count(232_000), "232K");
        assert_eq!(format_count(28_700), "28.7K");
        assert_eq!(format_count(999), "999");
        assert_eq!(format_count(1_250_000), "1.3M");
    }

    #[test]
    fn table_and_json() {
        let rep = compute_stats(&[grec("a", "s.png")], &[traj("b", 3, "t")]);
        let text = rep.to_string();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().last().unwrap().starts_with("total"));
        let back: StatsReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
        assert_eq!(back, rep);
    }
}
