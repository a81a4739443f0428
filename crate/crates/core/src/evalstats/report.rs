use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cmi::{cmi, CmiConfig};
use super::granulated::{granulated_kendall, Granulated};
use super::kendall::kendall_tau;
use super::regression::{regression_r2, DEFAULT_FOLDS};
use super::HyperparamConfig;
use crate::measures::MeasureTable;
use crate::{Error, Result};

/// Axis excluded from the ψ columns and from the conditioning subsets.
pub const SEED_AXIS: &str = "seed";

/// Axis order of the granulated table.
pub const TABLE2_AXES: [&str; 5] = ["width", "dropout", "augmentation", "weight_decay", "depth"];

pub const TABLE1_HEADER: &str = "measure,kendall_tau,adjusted_r2,cmi,cv_r2";
pub const TABLE2_HEADER: &str = "measure,width,dropout,augmentation,weight_decay,depth,kendall_tau,psi";

/// Columns of a model table that are metrics rather than hyperparameters.
const METRIC_COLUMNS: [&str; 6] = ["model_id", "gap", "train_err01", "test_err01", "train_ce", "test_ce"];

/// Generalization gap and hyperparameters of each model in a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelGaps {
    pub ids: Vec<String>,
    pub gaps: Vec<f64>,
    pub hyperparams: Vec<HyperparamConfig>,
}

impl ModelGaps {
    pub fn push(&mut self, id: impl Into<String>, gap: f64, hyperparams: HyperparamConfig) {
        self.ids.push(id.into());
        self.gaps.push(gap);
        self.hyperparams.push(hyperparams);
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Hyperparameter axes shared by all models, in first-model order.
    pub fn axes(&self) -> Vec<String> {
        self.hyperparams.first().map(|h| h.names().map(String::from).collect()).unwrap_or_default()
    }

    /// Parses a model table with at least `model_id` and `gap` columns; every column
    /// that is not a known metric is read as a hyperparameter axis.
    pub fn from_csv(text: &str) -> Result<Self> {
        let schema = |location: String, message: String| Error::Schema { location, message };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| schema("row 1".into(), "empty model table".into()))?;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        let find = |name: &str| {
            cols.iter()
                .position(|c| *c == name)
                .ok_or_else(|| schema("row 1".into(), format!("missing column {name:?}")))
        };
        let (id_col, gap_col) = (find("model_id")?, find("gap")?);
        let axis_cols: Vec<usize> = (0..cols.len()).filter(|&i| !METRIC_COLUMNS.contains(&cols[i])).collect();
        let mut out = ModelGaps::default();
        for (i, line) in lines {
            let row = i + 1;
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != cols.len() {
                return Err(schema(format!("row {row}"), format!("expected {} columns, found {}", cols.len(), fields.len())));
            }
            let num = |c: usize| {
                fields[c]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| schema(format!("row {row} column {}", cols[c]), format!("not a finite number: {:?}", fields[c])))
            };
            let mut hp = HyperparamConfig::default();
            for &c in &axis_cols {
                hp.set(cols[c], num(c)?);
            }
            if out.ids.contains(&fields[id_col].to_string()) {
                return Err(schema(format!("row {row}"), format!("duplicate model id {:?}", fields[id_col])));
            }
            out.push(fields[id_col], num(gap_col)?, hp);
        }
        if out.is_empty() {
            return Err(schema("row 2".into(), "no model rows".into()));
        }
        Ok(out)
    }
}

/// Evaluation of one measure against the generalization gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub measure: String,
    pub models: usize,
    pub kendall_tau: Option<f64>,
    pub granulated: Option<Granulated>,
    pub cmi: Option<f64>,
    pub cmi_argmin: Vec<String>,
    pub pairs_used: usize,
    pub tie_pairs_dropped: usize,
    pub cv_r2: Option<f64>,
    pub adjusted_r2: Option<f64>,
    /// Why a statistic is missing, keyed by statistic name.
    pub undefined: BTreeMap<String, String>,
}

/// Per-measure statistics in the layout of the correlation and granulated tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub axes: Vec<String>,
    /// Sorted by measure name.
    pub rows: Vec<MeasureReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub cmi: CmiConfig,
    pub folds: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { cmi: CmiConfig::default(), folds: DEFAULT_FOLDS }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl EvalReport {
    /// Evaluates every measure in `table` against the gaps in `models`.
    ///
    /// Models without a value for a measure are left out of that measure's row.
    /// Fails with [`Error::Undefined`] when the gaps themselves make every statistic
    /// meaningless (fewer than two models or constant gaps).
    pub fn compute(table: &MeasureTable, models: &ModelGaps, config: &ReportConfig) -> Result<Self> {
        if models.len() < 2 {
            return Err(Error::Undefined(format!("need at least 2 models, got {}", models.len())));
        }
        if models.gaps.iter().all(|&g| g == models.gaps[0]) {
            return Err(Error::Undefined("generalization gap is constant across models".into()));
        }
        let axes = models.axes();
        let psi_axes: Vec<&str> = axes.iter().map(String::as_str).filter(|a| *a != SEED_AXIS).collect();
        let mut rows = Vec::new();
        for measure in table.measures() {
            let idx: Vec<usize> =
                (0..models.len()).filter(|&i| table.value(&models.ids[i], &measure).is_some()).collect();
            if idx.is_empty() {
                continue;
            }
            let mu: Vec<f64> = idx.iter().map(|&i| table.value(&models.ids[i], &measure).unwrap()).collect();
            let g: Vec<f64> = idx.iter().map(|&i| models.gaps[i]).collect();
            let hp: Vec<HyperparamConfig> = idx.iter().map(|&i| models.hyperparams[i].clone()).collect();
            let mut undefined = BTreeMap::new();
            let mut keep = |name: &str, r: Result<f64>| match r {
                Ok(v) => Some(v),
                Err(e) => {
                    undefined.insert(name.to_string(), e.to_string());
                    None
                }
            };

            let kendall = keep("kendall_tau", kendall_tau(&mu, &g));
            let granulated = match granulated_kendall(&hp, &mu, &g, &psi_axes) {
                Ok(gr) => Some(gr),
                Err(e) => {
                    undefined.insert("psi".into(), e.to_string());
                    None
                }
            };
            let (cmi_value, argmin, pairs, ties) = match cmi(&hp, &mu, &g, &psi_axes, &config.cmi) {
                Ok(r) => (Some(r.value), r.argmin, r.pairs_used, r.tie_pairs_dropped),
                Err(e) => {
                    undefined.insert("cmi".into(), e.to_string());
                    (None, Vec::new(), 0, 0)
                }
            };
            let features: Vec<Vec<f64>> = mu.iter().map(|&v| vec![v]).collect();
            let (cv_r2, adjusted_r2) = match regression_r2(&features, &g, config.folds) {
                Ok(r) => (Some(r.cv_r2), Some(r.adjusted_r2)),
                Err(e) => {
                    undefined.insert("r2".into(), e.to_string());
                    (None, None)
                }
            };
            rows.push(MeasureReport {
                measure,
                models: idx.len(),
                kendall_tau: kendall,
                granulated,
                cmi: cmi_value,
                cmi_argmin: argmin,
                pairs_used: pairs,
                tie_pairs_dropped: ties,
                cv_r2,
                adjusted_r2,
                undefined,
            });
        }
        if rows.is_empty() {
            return Err(Error::Schema { location: "measure table".into(), message: "no measure matches a model".into() });
        }
        Ok(Self { axes, rows })
    }

    pub fn row(&self, measure: &str) -> Option<&MeasureReport> {
        self.rows.iter().find(|r| r.measure == measure)
    }

    /// `measure,kendall_tau,adjusted_r2,cmi,cv_r2`; undefined cells are empty.
    pub fn table1_csv(&self) -> String {
        let mut out = format!("{TABLE1_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.measure,
                cell(r.kendall_tau),
                cell(r.adjusted_r2),
                cell(r.cmi),
                cell(r.cv_r2)
            ));
        }
        out
    }

    /// Per-axis `ψᵢ`, the overall τ and `Ψ`; axes absent from the sweep are empty.
    pub fn table2_csv(&self) -> String {
        let mut out = format!("{TABLE2_HEADER}\n");
        for r in &self.rows {
            let gr = r.granulated.as_ref();
            let per_axis: Vec<String> = TABLE2_AXES.iter().map(|a| cell(gr.and_then(|g| g.axis(a)))).collect();
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.measure,
                per_axis.join(","),
                cell(r.kendall_tau),
                cell(gr.and_then(|g| g.psi))
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::MeasureValue;

    fn sweep() -> (MeasureTable, ModelGaps) {
        let mut table = MeasureTable::new();
        let mut models = ModelGaps::default();
        let mut k = 0;
        for w in [1.0, 2.0, 3.0] {
            for d in [1.0, 2.0] {
                for s in [0.0, 1.0] {
                    let id = format!("m{k}");
                    let gap = w * 0.1 + d * 0.01 + s * 0.001;
                    models.push(&id, gap, HyperparamConfig::default().with("width", w).with("depth", d).with("seed", s));
                    table.insert(MeasureValue::new(&id, "probe", gap)).unwrap();
                    table.insert(MeasureValue::new(&id, "flat", 1.0)).unwrap();
                    k += 1;
                }
            }
        }
        (table, models)
    }

    #[test]
    fn probe_equal_to_gap_is_perfect() {
        let (table, models) = sweep();
        let rep = EvalReport::compute(&table, &models, &ReportConfig::default()).unwrap();
        let probe = rep.row("probe").unwrap();
        assert_eq!(probe.kendall_tau, Some(1.0));
        assert!((probe.cv_r2.unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(probe.granulated.as_ref().unwrap().psi, Some(1.0));
        let flat = rep.row("flat").unwrap();
        assert_eq!(flat.kendall_tau, Some(0.0));
        assert_eq!(rep.rows[0].measure, "flat");
    }

    #[test]
    fn csv_layout() {
        let (table, models) = sweep();
        let rep = EvalReport::compute(&table, &models, &ReportConfig::default()).unwrap();
        let t1 = rep.table1_csv();
        assert!(t1.starts_with(TABLE1_HEADER));
        assert!(t1.contains("probe,1.000000,1.000000,"));
        let t2 = rep.table2_csv();
        let probe_line = t2.lines().find(|l| l.starts_with("probe")).unwrap();
        assert_eq!(probe_line, "probe,1.000000,,,,1.000000,1.000000,1.000000");
    }

    #[test]
    fn constant_gaps_are_undefined() {
        let (table, mut models) = sweep();
        models.gaps.iter_mut().for_each(|g| *g = 0.1);
        assert!(matches!(EvalReport::compute(&table, &models, &ReportConfig::default()), Err(Error::Undefined(_))));
    }

    #[test]
    fn model_table_round_trip() {
        let csv = "model_id,gap,train_err01,test_err01,train_ce,test_ce,width,seed\na,0.1,0,0.1,0.2,0.3,16,0\nb,0.2,0,0.2,0.2,0.4,32,1\n";
        let m = ModelGaps::from_csv(csv).unwrap();
        assert_eq!(m.ids, vec!["a", "b"]);
        assert_eq!(m.axes(), vec!["width", "seed"]);
        assert_eq!(m.hyperparams[1].get("width"), Some(32.0));
        let bad = ModelGaps::from_csv("model_id,gap\na,x\n").unwrap_err();
        assert!(bad.to_string().contains("row 2"));
    }
}
