use crate::CliError;
use spikemotion::bench::{Shape, SyntheticSceneSpec};
use spikemotion::hsmd::{BackendKind, BackendParams, ComputeMode, HsmdConfig};
use spikemotion::mhsnn::{MhsnnParams, SuiteSpec, TrainOptions};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Every tunable of the tool. Loaded from a flat `key = value` file; `#`
/// starts a comment. Absent keys keep their defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct ToolConfig {
    pub hsmd: HsmdConfig,
    pub backend: BackendKind,
    pub backend_params: BackendParams,
    pub mhsnn: MhsnnParams,
    pub train: TrainOptions,
    pub suite: SuiteSpec,
    pub scene: SyntheticSceneSpec,
    /// Frames per classification window; 0 means the whole sequence.
    pub window: usize,
    pub jobs: usize,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub weights: Option<PathBuf>,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            hsmd: HsmdConfig::default(),
            backend: BackendKind::RunningGaussian,
            backend_params: BackendParams::default(),
            mhsnn: MhsnnParams::default(),
            train: TrainOptions::default(),
            suite: SuiteSpec::default(),
            scene: SyntheticSceneSpec::default(),
            window: 0,
            jobs: 1,
            input: None,
            output: None,
            weights: None,
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config {
        key: key.to_string(),
        reason: format!("cannot parse {value:?}"),
    })
}

fn invalid(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

impl ToolConfig {
    /// Applies one assignment. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let h = &mut self.hsmd;
        let m = &mut self.mhsnn;
        let r = &mut self.train.resume;
        let s = &mut self.suite;
        let sc = &mut self.scene;
        match key {
            "c_p2c" => h.c_p2c = num(key, value)?,
            "w_l2_l3" => h.w_l2_l3 = num(key, value)?,
            "w_l2_l4" => h.w_l2_l4 = num(key, value)?,
            "w_l3_l4" => h.w_l3_l4 = num(key, value)?,
            "steps_per_frame" => h.steps_per_frame = num(key, value)?,
            "dt" => h.dt = num(key, value)?,
            "mask_threshold" => h.mask_threshold = num(key, value)?,
            "filter_u" => h.filter_u = num(key, value)?,
            "filter_v" => h.filter_v = num(key, value)?,
            "workers" => h.workers = num(key, value)?,
            "mode" => {
                h.mode = ComputeMode::parse(value)
                    .ok_or_else(|| invalid(key, "expected dense or sparse"))?
            }
            "c_m" => h.lif.c_m = num(key, value)?,
            "r_m" => h.lif.r_m = num(key, value)?,
            "e_l" => h.lif.e_l = num(key, value)?,
            "v_reset" => h.lif.v_reset = num(key, value)?,
            "v_min" => h.lif.v_min = num(key, value)?,
            "v_th" => h.lif.v_th = num(key, value)?,
            "tau_m" => h.lif.tau_m = num(key, value)?,
            "t_ref" => h.lif.t_ref = num(key, value)?,
            "backend" => {
                self.backend = BackendKind::parse(value)
                    .ok_or_else(|| invalid(key, "expected diff or gauss"))?
            }
            "alpha" => self.backend_params.alpha = num(key, value)?,
            "diff_threshold" => self.backend_params.diff_threshold = num(key, value)?,
            "k_sigma" => self.backend_params.k_sigma = num(key, value)?,
            "min_std" => self.backend_params.min_std = num(key, value)?,
            "m_f" => m.m_f = num(key, value)?,
            "binarize_threshold" => m.binarize_threshold = num(key, value)?,
            "l1_gain" => m.l1_gain = num(key, value)?,
            "l2_gain" => m.l2_gain = num(key, value)?,
            "l3_gain" => m.l3_gain = num(key, value)?,
            "l4_gain" => m.l4_gain = num(key, value)?,
            "l4_v_th" => m.l4.v_th = num(key, value)?,
            "iterations" => self.train.iterations = num(key, value)?,
            "sequential" => self.train.sequential = num(key, value)?,
            "a_ex" => r.a_ex = num(key, value)?,
            "a_ih" => r.a_ih = num(key, value)?,
            "tau_ex" => r.tau_ex = num(key, value)?,
            "tau_ih" => r.tau_ih = num(key, value)?,
            "a_bias" => r.a_bias = num(key, value)?,
            "lr" => r.lr = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "suite_size" => s.size = num(key, value)?,
            "suite_frames" => s.n_frames = num(key, value)?,
            "per_direction" => s.per_direction = num(key, value)?,
            "train_fraction" => s.train_fraction = num(key, value)?,
            "speed" => s.speed = num(key, value)?,
            "suite_seed" => s.seed = num(key, value)?,
            "scene_width" => sc.width = num(key, value)?,
            "scene_height" => sc.height = num(key, value)?,
            "scene_frames" => sc.n_frames = num(key, value)?,
            "scene_object" => {
                let side = num(key, value)?;
                sc.shape = Shape::Rect {
                    width: side,
                    height: side,
                }
            }
            "scene_velocity_row" => sc.velocity.0 = num(key, value)?,
            "scene_velocity_col" => sc.velocity.1 = num(key, value)?,
            "scene_noise" => sc.noise_sigma = num(key, value)?,
            "scene_seed" => sc.seed = num(key, value)?,
            "jobs" => self.jobs = num(key, value)?,
            "input" => self.input = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            "weights" => self.weights = Some(PathBuf::from(value)),
            _ => return Err(invalid(key, "unknown key")),
        }
        Ok(())
    }

    /// Checks every section against its module's own rules.
    pub fn validate(&self) -> Result<(), CliError> {
        let wrap = |e: &dyn std::fmt::Display| CliError::Validation(e.to_string());
        self.hsmd.validate().map_err(|e| wrap(&e))?;
        self.backend_params.validate().map_err(|e| wrap(&e))?;
        self.mhsnn.validate().map_err(|e| wrap(&e))?;
        self.train.resume.validate().map_err(|e| wrap(&e))?;
        self.suite.validate().map_err(|e| wrap(&e))?;
        self.scene.validate().map_err(|e| wrap(&e))?;
        if self.jobs == 0 {
            return Err(invalid("jobs", "must be >= 1"));
        }
        Ok(())
    }
}

/// Parses config text; see [`ToolConfig`].
pub fn parse_config_str(text: &str) -> Result<ToolConfig, CliError> {
    let mut cfg = ToolConfig::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(&format!("line {}", n + 1), "expected key=value"))?;
        cfg.set(key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ToolConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}
