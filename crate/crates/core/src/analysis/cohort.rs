use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Region, StressStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Control,
    Aneurysm,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Control => "control",
            Group::Aneurysm => "aneurysm",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "control" => Ok(Group::Control),
            "aneurysm" => Ok(Group::Aneurysm),
            _ => Err(Error::InvalidGroup(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientStats {
    pub patient_id: String,
    pub group: Group,
    pub stats: StressStats,
}

impl PatientStats {
    /// Numeric CSV columns after `patient_id, group`.
    fn columns(&self) -> Vec<Option<f64>> {
        let mut c = vec![Some(self.stats.n_elements as f64), Some(self.stats.peak)];
        for r in &self.stats.regions {
            match r.moments {
                Some(m) => c.extend([Some(m.mean), Some(m.std), Some(m.peak)]),
                None => c.extend([None, None, None]),
            }
        }
        c
    }
}

/// Mean and population standard deviation over patients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(MeanStd {
            n: values.len(),
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: Group,
    /// Sorted by patient id.
    pub patients: Vec<PatientStats>,
    pub peak: MeanStd,
    /// Over the patients whose region is non-empty.
    pub region_means: [Option<MeanStd>; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    /// Control first, then aneurysm; groups without patients are omitted.
    pub groups: Vec<GroupSummary>,
}

/// Groups per-patient statistics and summarises each group.
///
/// `patients` holds `(patient_id, group tag, stats)`.
pub fn cohort_table(patients: &[(String, String, StressStats)]) -> Result<CohortSummary> {
    if patients.is_empty() {
        return Err(Error::EmptyInput("cohort"));
    }
    let mut rows = patients
        .iter()
        .map(|(id, tag, stats)| {
            Ok(PatientStats {
                patient_id: id.clone(),
                group: tag.parse()?,
                stats: stats.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| (a.group, &a.patient_id).cmp(&(b.group, &b.patient_id)));

    let mut groups = Vec::new();
    for g in [Group::Control, Group::Aneurysm] {
        let members: Vec<PatientStats> = rows.iter().filter(|p| p.group == g).cloned().collect();
        if members.is_empty() {
            continue;
        }
        let peaks: Vec<f64> = members.iter().map(|p| p.stats.peak).collect();
        let region_means = Region::ALL.map(|r| {
            let v: Vec<f64> = members
                .iter()
                .filter_map(|p| p.stats.region(r).moments.map(|m| m.mean))
                .collect();
            MeanStd::of(&v)
        });
        groups.push(GroupSummary {
            group: g,
            peak: MeanStd::of(&peaks).expect("non-empty group"),
            region_means,
            patients: members,
        });
    }
    Ok(CohortSummary { groups })
}

pub const CSV_PREFIX: &str = "GROUP:";

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["patient_id", "group", "n_elements", "peak_kPa"]
        .map(String::from)
        .to_vec();
    for r in Region::ALL {
        for s in ["mean_kPa", "std_kPa", "peak_kPa"] {
            h.push(format!("{}_{s}", r.name()));
        }
    }
    h
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl CohortSummary {
    /// One row per patient, then per group a `GROUP:<name>:mean` and a
    /// `GROUP:<name>:std` row holding the mean and population standard
    /// deviation of every numeric column over that group's patient rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
        w.write_record(csv_header()).map_err(err)?;
        for g in &self.groups {
            for p in &g.patients {
                let mut rec = vec![p.patient_id.clone(), g.group.to_string()];
                rec.extend(p.columns().into_iter().map(cell));
                w.write_record(&rec).map_err(err)?;
            }
        }
        for g in &self.groups {
            let cols: Vec<Vec<Option<f64>>> = g.patients.iter().map(PatientStats::columns).collect();
            let ncol = cols[0].len();
            let summaries: Vec<Option<MeanStd>> = (0..ncol)
                .map(|c| MeanStd::of(&cols.iter().filter_map(|r| r[c]).collect::<Vec<_>>()))
                .collect();
            for (label, pick) in [("mean", 0), ("std", 1)] {
                let mut rec = vec![format!("{CSV_PREFIX}{}:{label}", g.group), g.group.to_string()];
                rec.extend(
                    summaries
                        .iter()
                        .map(|s| cell(s.map(|s| if pick == 0 { s.mean } else { s.std }))),
                );
                w.write_record(&rec).map_err(err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{Moments, RegionStats};

    fn stats(peak: f64, means: [Option<f64>; 4]) -> StressStats {
        let regions = Region::ALL.map(|r| {
            let m = means[r.index()];
            RegionStats {
                region: r,
                count: if m.is_some() { 10 } else { 0 },
                moments: m.map(|mean| Moments {
                    mean,
                    std: 0.1 * mean,
                    peak: (1.5 * mean).min(peak),
                }),
            }
        });
        StressStats {
            n_elements: regions.iter().map(|r| r.count).sum(),
            peak,
            regions,
        }
    }

    fn p(id: &str, g: &str, s: StressStats) -> (String, String, StressStats) {
        (id.into(), g.into(), s)
    }

    #[test]
    fn singleton_groups() {
        let a = stats(200.0, [Some(100.0), Some(110.0), Some(120.0), Some(90.0)]);
        let b = stats(300.0, [Some(150.0), Some(160.0), None, Some(140.0)]);
        let c = cohort_table(&[p("a", "control", a.clone()), p("b", "aneurysm", b)]).unwrap();
        assert_eq!(c.groups.len(), 2);
        let ctl = &c.groups[0];
        assert_eq!(ctl.group, Group::Control);
        assert_eq!((ctl.peak.mean, ctl.peak.std), (200.0, 0.0));
        assert_eq!(ctl.region_means[2].unwrap().mean, 120.0);
        assert!(c.groups[1].region_means[2].is_none());
    }

    #[test]
    fn identical_patients() {
        let a = stats(250.0, [Some(100.0), Some(110.0), Some(120.0), Some(90.0)]);
        let c = cohort_table(&[p("x", "aneurysm", a.clone()), p("y", "aneurysm", a)]).unwrap();
        let g = &c.groups[0];
        assert_eq!(g.peak.std, 0.0);
        assert!(g.region_means.iter().all(|m| m.unwrap().std == 0.0));
    }

    #[test]
    fn five_patient_recomputation() {
        let peaks = [210.0, 190.0, 330.0, 270.0, 300.0];
        let arch = [120.0, 100.0, 180.0, 150.0, 165.0];
        let groups = ["control", "control", "aneurysm", "aneurysm", "Aneurysm"];
        let input: Vec<_> = (0..5)
            .map(|i| {
                p(
                    &format!("p{i}"),
                    groups[i],
                    stats(peaks[i], [Some(80.0), Some(90.0), Some(arch[i]), Some(70.0)]),
                )
            })
            .collect();
        let c = cohort_table(&input).unwrap();
        // By hand: control peaks {210, 190}: mean 200, std 10.
        assert_eq!((c.groups[0].peak.mean, c.groups[0].peak.std), (200.0, 10.0));
        // Aneurysm peaks {330, 270, 300}: mean 300, std sqrt(600).
        assert_eq!(c.groups[1].peak.mean, 300.0);
        assert_eq!(c.groups[1].peak.std, 600.0f64.sqrt());
        // Aneurysm arch means {180, 150, 165}: mean 165, std sqrt(150).
        let am = c.groups[1].region_means[Region::Arch.index()].unwrap();
        assert_eq!((am.mean, am.std, am.n), (165.0, 150.0f64.sqrt(), 3));

        let csv = c.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 5 + 4);
        assert!(lines[0].starts_with("patient_id,group,n_elements,peak_kPa,root_mean_kPa,root_std_kPa,root_peak_kPa"));
        assert!(lines[1].starts_with("p0,control,40,210,80,8,"));
        let mean_row: Vec<&str> = lines[8].split(',').collect();
        assert_eq!(&mean_row[..4], ["GROUP:aneurysm:mean", "aneurysm", "40", "300"]);
        assert_eq!(mean_row[4 + 3 * Region::Arch.index()], "165");
    }

    #[test]
    fn permutation_gives_identical_csv() {
        let input: Vec<_> = (0..6)
            .map(|i| {
                let g = if i % 2 == 0 { "control" } else { "aneurysm" };
                p(
                    &format!("id{i}"),
                    g,
                    stats(
                        100.0 + 17.3 * i as f64,
                        [Some(50.0 + i as f64 * 3.1), None, Some(60.0), Some(40.0 + i as f64)],
                    ),
                )
            })
            .collect();
        let mut rev = input.clone();
        rev.reverse();
        assert_eq!(
            cohort_table(&input).unwrap().to_csv().unwrap(),
            cohort_table(&rev).unwrap().to_csv().unwrap()
        );
    }

    #[test]
    fn unknown_group() {
        let a = stats(1.0, [Some(1.0); 4]);
        assert!(matches!(cohort_table(&[p("a", "patient", a)]), Err(Error::InvalidGroup(t)) if t == "patient"));
        assert!(matches!(cohort_table(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn empty_region_leaves_blank_cells() {
        let a = stats(5.0, [Some(1.0), None, Some(2.0), Some(3.0)]);
        let csv = cohort_table(&[p("a", "control", a)]).unwrap().to_csv().unwrap();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(&row[7..10], ["", "", ""]);
    }
}
