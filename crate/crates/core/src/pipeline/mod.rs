//! Stage functions behind the command-line front end.
//!
//! Every stage writes its artifact into the run directory as soon as it
//! finishes, so a failure later on leaves earlier outputs in place. All JSON
//! documents carry the run seed and config hash at the top level.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::attribution::{self, dual_axis_report, markdown_table, DualAxisReport};
use crate::circuit::{
    self, cluster_communities, defaults, graph_stats, synthesize_circuit, Circuit, GraphStats,
    GroupConfig,
};
use crate::dynamics::{lorenz_trajectory, propagation_check, write_trace_csv, FeasibilityReport, PulseConfig};
use crate::error::{Error, Result};
use crate::plot;
use crate::snn::{
    self, build_model, evaluate, lorenz_dataset, EpochRecord, EvalMetrics, EvalMode, LorenzDataset, SnnModel,
};
use crate::transfer::{bundled_table, load_accuracy_table, score_all, ModelScore, SweepKind};

pub use config::{
    AblationConfig, FeasibilityConfig, PathwaySpec, RunConfig, TransferConfig, DEFAULT_SEED, OUTPUT_ROOT_ENV,
};

/// A JSON document tagged with the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub seed: u64,
    pub config_hash: String,
    #[serde(flatten)]
    pub body: T,
}

/// Resolved configuration plus its output location.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: RunConfig,
    pub hash: String,
    pub out: PathBuf,
}

impl Run {
    pub fn new(config: RunConfig) -> Result<Self> {
        let config = config.resolved()?;
        let hash = config.hash();
        let out = config.output_path();
        Ok(Self { config, hash, out })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn ensure_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        self.ensure_dir()?;
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf> {
        let doc = Artifact {
            seed: self.config.seed,
            config_hash: self.hash.clone(),
            body,
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::parse(name, e))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<Artifact<T>> {
        read_artifact(self.path(name))
    }

    /// The circuit named by the config, tagged with the run seed and hash.
    pub fn circuit(&self) -> Result<Circuit> {
        let c = match (&self.config.matrix, &self.config.synthesis) {
            (Some(p), _) => circuit::load_circuit(p)?,
            (None, Some(spec)) => synthesize_circuit(spec)?,
            (None, None) => unreachable!("checked by RunConfig::resolved"),
        };
        Ok(c.with_metadata("run.seed", self.config.seed.to_string())
            .with_metadata("run.config_hash", self.hash.clone()))
    }

    pub fn groups(&self, c: &Circuit) -> Result<GroupConfig> {
        let gc = match &self.config.groups {
            Some(p) => GroupConfig::load(p)?,
            None => defaults::group_config(),
        };
        gc.validate(c)?;
        Ok(gc)
    }

    pub fn dataset(&self) -> Result<LorenzDataset> {
        lorenz_dataset(&self.config.lorenz, &self.config.train)
    }

    /// Ablation group list with `all` expanded.
    pub fn sweep_groups(&self, gc: &GroupConfig) -> Vec<String> {
        let g = &self.config.ablation.groups;
        if g.len() == 1 && g[0] == "all" {
            gc.names().map(String::from).collect()
        } else {
            g.clone()
        }
    }
}

pub fn read_artifact<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Artifact<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub source: String,
    pub stats: GraphStats,
    pub communities: Vec<Vec<String>>,
}

/// Graph statistics and feature-based communities. Writes `stats.json` and
/// `circuit.json`.
pub fn cmd_stats(run: &Run) -> Result<StatsDoc> {
    let c = run.circuit()?;
    let k = run.config.communities.clamp(1, c.n());
    let doc = StatsDoc {
        source: c.metadata().get("source").cloned().unwrap_or_else(|| "file".into()),
        stats: graph_stats(&c),
        communities: cluster_communities(&c, k)?,
    };
    run.ensure_dir()?;
    circuit::save_circuit(&c, run.path("circuit.json"))?;
    run.write_json("stats.json", &doc)?;
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityDoc {
    pub pulse: PulseConfig,
    pub reports: Vec<FeasibilityReport>,
    /// Each pathway re-run with the source group's projections removed.
    pub controls: Vec<FeasibilityReport>,
}

/// Pulse propagation along every configured pathway. Writes
/// `feasibility.json` and, if enabled, `trace_<pathway>.csv`.
pub fn cmd_simulate(run: &Run) -> Result<FeasibilityDoc> {
    let c = run.circuit()?;
    let gc = run.groups(&c)?;
    let fc = &run.config.feasibility;
    let (lif, syn) = (&run.config.model.lif, &run.config.model.syn);
    let mut reports = Vec::new();
    let mut controls = Vec::new();
    for p in &fc.pathways {
        let (rep, trace) = propagation_check(&c, &gc, &p.name, &p.source, &p.target, &fc.pulse, lif, syn)?;
        if fc.traces {
            let mut buf = Vec::new();
            write_trace_csv(&trace, &mut buf)?;
            run.write_text(&format!("trace_{}.csv", p.name), &String::from_utf8_lossy(&buf))?;
        }
        reports.push(rep);
        let cut = c.ablate_indices(&gc.indices(&p.source, &c)?);
        let name = format!("{}_control", p.name);
        controls.push(propagation_check(&cut, &gc, &name, &p.source, &p.target, &fc.pulse, lif, syn)?.0);
    }
    let doc = FeasibilityDoc {
        pulse: fc.pulse.clone(),
        reports,
        controls,
    };
    run.write_json("feasibility.json", &doc)?;
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingDoc {
    pub history: Vec<EpochRecord>,
    pub selected_epoch: usize,
    pub updates: usize,
    pub train_windows: usize,
    pub val_windows: usize,
    pub test_windows: usize,
    /// Held-out metrics of the untrained and trained model.
    pub untrained: EvalMetrics,
    pub trained: EvalMetrics,
    /// Relative held-out MSE reduction, percent.
    pub improvement_pct: f64,
}

/// Builds and trains the network. Writes `model.json` (checkpoint),
/// `training.json` and `lorenz.svg`.
pub fn cmd_train(run: &Run) -> Result<(SnnModel, TrainingDoc)> {
    let c = run.circuit()?;
    let gc = run.groups(&c)?;
    let m0 = build_model(&c, &gc, &run.config.model, run.config.seed)?;
    let data = run.dataset()?;
    let untrained = evaluate(&m0, &data.test, EvalMode::TeacherForced)?;
    let out = snn::train(&m0, &run.config.train, &data.train, &data.val)?;
    let trained = evaluate(&out.model, &data.test, EvalMode::TeacherForced)?;
    let doc = TrainingDoc {
        history: out.history,
        selected_epoch: out.selected_epoch,
        updates: out.updates,
        train_windows: data.train.len(),
        val_windows: data.val.len(),
        test_windows: data.test.len(),
        improvement_pct: 100.0 * (untrained.mse - trained.mse) / untrained.mse,
        untrained,
        trained,
    };
    let meta = serde_json::json!({
        "seed": run.config.seed,
        "config_hash": run.hash,
        "config": run.config,
    });
    run.ensure_dir()?;
    snn::save_checkpoint(&out.model, meta, run.path("model.json"))?;
    run.write_json("training.json", &doc)?;
    run.write_text("lorenz.svg", &plot::lorenz_preview(&lorenz_trajectory(&run.config.lorenz)?))?;
    Ok((out.model, doc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalDoc {
    pub checkpoint: String,
    pub split: String,
    pub mode: EvalMode,
    pub metrics: EvalMetrics,
}

/// Evaluates a checkpoint on a split of the configured dataset. Writes
/// `eval.json`.
pub fn cmd_eval(run: &Run, checkpoint: &Path, split: &str, mode: EvalMode) -> Result<EvalDoc> {
    let (m, _) = snn::load_checkpoint(checkpoint)?;
    let data = run.dataset()?;
    let windows = match split {
        "train" => &data.train,
        "val" => &data.val,
        "test" => &data.test,
        other => {
            return Err(Error::Config(format!("split must be train, val or test, got `{other}`")));
        }
    };
    let doc = EvalDoc {
        checkpoint: checkpoint.display().to_string(),
        split: split.to_string(),
        mode,
        metrics: evaluate(&m, windows, mode)?,
    };
    run.write_json("eval.json", &doc)?;
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationDoc {
    pub baseline: EvalMetrics,
    pub epsilon: f64,
    pub groups: Vec<String>,
    pub report: DualAxisReport,
}

/// Ablation sweep on the held-out split. Writes `ablation.json`,
/// `ablation.md` and `ablation.svg`.
pub fn cmd_ablate(run: &Run, m: &SnnModel) -> Result<AblationDoc> {
    let gc = run.groups(m.circuit())?;
    let groups = run.sweep_groups(&gc);
    let data = run.dataset()?;
    let sweep = attribution::run_ablation_sweep(m, &gc, &data.test, &groups, run.config.ablation.epsilon)?;
    let report = dual_axis_report(&sweep.records, &gc);
    let doc = AblationDoc {
        baseline: sweep.baseline,
        epsilon: sweep.epsilon,
        groups,
        report,
    };
    run.write_json("ablation.json", &doc)?;
    run.write_text("ablation.md", &markdown_table(&doc.report))?;
    run.write_text("ablation.svg", &plot::ablation_chart(&doc.report))?;
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresDoc {
    pub kind: SweepKind,
    pub table: String,
    pub scores: Vec<ModelScore>,
}

/// Degradation scores for one sweep table (bundled when `table` is `None`).
/// Writes `scores_<kind>.json` and `degradation_<kind>.svg`.
pub fn cmd_scores(run: &Run, kind: SweepKind, table: Option<&Path>, model: Option<&str>) -> Result<ScoresDoc> {
    let (t, source) = match table {
        Some(p) => (load_accuracy_table(p, kind)?, p.display().to_string()),
        None => (bundled_table(kind), "bundled".to_string()),
    };
    let mut scores = score_all(&t)?;
    if let Some(name) = model {
        scores.retain(|s| s.model == name);
        if scores.is_empty() {
            return Err(Error::Table(format!("no rows for model {name}")));
        }
    }
    let tag = match kind {
        SweepKind::Budget => "budget",
        SweepKind::Noise => "noise",
    };
    let doc = ScoresDoc {
        kind,
        table: source,
        scores,
    };
    run.write_json(&format!("scores_{tag}.json"), &doc)?;
    run.write_text(&format!("degradation_{tag}.svg"), &plot::degradation_chart(&t))?;
    Ok(doc)
}

fn transfer_scores(run: &Run) -> Result<Vec<ScoresDoc>> {
    let tc = &run.config.transfer;
    Ok(vec![
        cmd_scores(run, SweepKind::Budget, tc.budget_table.as_deref(), None)?,
        cmd_scores(run, SweepKind::Noise, tc.noise_table.as_deref(), None)?,
    ])
}

/// Markdown summary of whatever stage artifacts exist in the run directory.
/// Writes `report.md`.
pub fn cmd_report(run: &Run) -> Result<String> {
    use std::fmt::Write as _;
    let exists = |name: &str| run.path(name).exists();
    if !["stats.json", "feasibility.json", "training.json", "ablation.json"]
        .iter()
        .any(|n| exists(n))
    {
        return Err(Error::FileNotFound(run.path("ablation.json")));
    }
    let mut s = String::from("# Run report\n\n");
    let _ = writeln!(s, "seed {} | config {}\n", run.config.seed, run.hash);
    if exists("stats.json") {
        let d = run.read_json::<StatsDoc>("stats.json")?.body;
        let g = &d.stats;
        let _ = writeln!(
            s,
            "## Graph\n\n{} nodes, {} edges, density {:.4}, spectral radius {:.4}, {} communities\n",
            g.n,
            g.nonzero_edges,
            g.density,
            g.spectral_radius,
            d.communities.len()
        );
    }
    if exists("feasibility.json") {
        let d = run.read_json::<FeasibilityDoc>("feasibility.json")?.body;
        s.push_str("## Propagation\n\n| Pathway | Target | Spikes | First spike | Peak current | Criterion | Propagated |\n|---|---|---:|---:|---:|---|:---:|\n");
        for r in d.reports.iter().chain(&d.controls) {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {:.4} | {} | {} |",
                r.pathway,
                r.target_group,
                r.target_activity,
                r.first_target_spike.map_or("-".into(), |t| t.to_string()),
                r.peak_target_current,
                r.criterion,
                if r.propagated { "yes" } else { "no" }
            );
        }
        s.push('\n');
    }
    if exists("training.json") {
        let d = run.read_json::<TrainingDoc>("training.json")?.body;
        let t = &d.trained;
        let _ = writeln!(
            s,
            "## Network\n\nheld-out MSE {:.4} (untrained {:.4}, {:.1}% lower), R2 {}, corr {}, {:.1} spikes/sample; epoch {} of {}\n",
            t.mse,
            d.untrained.mse,
            d.improvement_pct,
            t.r2.map_or("n/a".into(), |v| format!("{v:.4}")),
            t.corr.map_or("n/a".into(), |v| format!("{v:.4}")),
            t.spikes_per_sample,
            d.selected_epoch,
            d.history.len() - 1
        );
    }
    if exists("ablation.json") {
        let d = run.read_json::<AblationDoc>("ablation.json")?.body;
        run.write_text("ablation.svg", &plot::ablation_chart(&d.report))?;
        s.push_str(&markdown_table(&d.report));
        s.push('\n');
    }
    for tag in ["budget", "noise"] {
        let name = format!("scores_{tag}.json");
        if exists(&name) {
            let d = run.read_json::<ScoresDoc>(&name)?.body;
            let _ = writeln!(s, "## {} degradation\n\n| Model | Score |\n|---|---:|", tag);
            for m in &d.scores {
                let _ = writeln!(s, "| {} | {:.2} |", m.model, m.score);
            }
            s.push('\n');
        }
    }
    run.write_text("report.md", &s)?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub stats: StatsDoc,
    pub feasibility: FeasibilityDoc,
    pub training: TrainingDoc,
    pub ablation: AblationDoc,
    pub transfer: Vec<ScoresDoc>,
}

/// build -> feasibility -> train -> sweep -> transfer -> report. Errors are
/// tagged with the failing stage. Writes `report.json` and `config.toml`
/// besides the per-stage artifacts.
pub fn cmd_pipeline(run: &Run) -> Result<PipelineReport> {
    run.write_text("config.toml", &run.config.to_toml())?;
    let stats = cmd_stats(run).map_err(|e| e.in_stage("build"))?;
    let feasibility = cmd_simulate(run).map_err(|e| e.in_stage("feasibility"))?;
    let (model, training) = cmd_train(run).map_err(|e| e.in_stage("train"))?;
    let ablation = cmd_ablate(run, &model).map_err(|e| e.in_stage("sweep"))?;
    let transfer = transfer_scores(run).map_err(|e| e.in_stage("transfer"))?;
    let report = PipelineReport {
        stats,
        feasibility,
        training,
        ablation,
        transfer,
    };
    run.write_json("report.json", &report).map_err(|e| e.in_stage("report"))?;
    cmd_report(run).map_err(|e| e.in_stage("report"))?;
    Ok(report)
}
