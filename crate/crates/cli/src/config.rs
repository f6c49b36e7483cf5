//! Optional TOML configuration. Every key mirrors a flag; resolution order
//! is flag > config file > built-in default.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use listrank_core::eval_metrics::EvalOptions;
use listrank_core::parallel;
use listrank_core::prompt_builder::RenderOptions;
use listrank_core::rerank_engine::{HttpBackendConfig, WindowConfig};
use serde::Deserialize;

/// Environment variable holding the http backend's bearer token. Kept out
/// of flags and config files so it never lands in manifests or shell
/// history.
pub const API_TOKEN_VAR: &str = "LISTRANK_API_TOKEN";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub render: RenderSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub http: HttpSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub size: Option<usize>,
    pub stride: Option<usize>,
    pub passes: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSection {
    pub token_budget: Option<usize>,
    pub passage_word_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub max_grade: Option<i32>,
    pub rel_threshold: Option<i32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpSection {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    pub initial_backoff_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub max_tokens: Option<u32>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Global options after the config file has been folded in. Subcommands
/// call the accessors with their own flags to finish resolution.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    workers_flag: Option<usize>,
    pub config: FileConfig,
    pub config_path: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(
        config_path: Option<PathBuf>,
        seed_flag: Option<u64>,
        workers_flag: Option<usize>,
    ) -> anyhow::Result<Self> {
        let config = match &config_path {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let seed = seed_flag.or(config.seed).unwrap_or(0);
        Ok(Settings {
            seed,
            workers_flag,
            config,
            config_path,
        })
    }

    /// Worker count with a caller-chosen fallback (http backends pass 1,
    /// everything else passes the logical core count).
    pub fn workers_or(&self, fallback: usize) -> usize {
        self.workers_flag
            .or(self.config.workers)
            .unwrap_or(fallback)
            .max(1)
    }

    pub fn workers(&self) -> usize {
        self.workers_or(parallel::default_workers())
    }

    pub fn window(&self, flags: &crate::args::WindowArgs) -> anyhow::Result<WindowConfig> {
        let defaults = WindowConfig::default();
        let window_size = flags
            .window_size
            .or(self.config.window.size)
            .unwrap_or(defaults.window_size);
        let stride = flags
            .stride
            .or(self.config.window.stride)
            .unwrap_or(defaults.stride);
        let passes = flags
            .passes
            .or(self.config.window.passes)
            .unwrap_or(defaults.passes);
        WindowConfig::new(window_size, stride, passes).context("window geometry")
    }

    pub fn render(&self) -> RenderOptions {
        let defaults = RenderOptions::default();
        RenderOptions {
            token_budget: self
                .config
                .render
                .token_budget
                .unwrap_or(defaults.token_budget),
            passage_word_cap: self
                .config
                .render
                .passage_word_cap
                .unwrap_or(defaults.passage_word_cap),
        }
    }

    pub fn eval_options(
        &self,
        max_grade_flag: Option<i32>,
        rel_threshold_flag: Option<i32>,
        workers: usize,
    ) -> EvalOptions {
        let defaults = EvalOptions::default();
        EvalOptions {
            max_grade: max_grade_flag
                .or(self.config.eval.max_grade)
                .unwrap_or(defaults.max_grade),
            rel_threshold: rel_threshold_flag
                .or(self.config.eval.rel_threshold)
                .unwrap_or(defaults.rel_threshold),
            workers,
        }
    }

    /// Http backend settings; endpoint and model must come from a flag or
    /// the config file, the token only from the environment.
    pub fn http_config(
        &self,
        endpoint_flag: Option<String>,
        model_flag: Option<String>,
    ) -> anyhow::Result<HttpBackendConfig> {
        let defaults = HttpBackendConfig::default();
        let http = &self.config.http;
        let endpoint = endpoint_flag
            .or_else(|| http.endpoint.clone())
            .context("http backend needs --endpoint (or [http] endpoint in the config)")?;
        let model = model_flag
            .or_else(|| http.model.clone())
            .context("http backend needs --model (or [http] model in the config)")?;
        Ok(HttpBackendConfig {
            endpoint,
            model,
            api_token: std::env::var(API_TOKEN_VAR).ok(),
            timeout: http
                .timeout_secs
                .map(Duration::from_secs)
                .unwrap_or(defaults.timeout),
            max_retries: http.max_retries.unwrap_or(defaults.max_retries),
            initial_backoff: http
                .initial_backoff_ms
                .map(Duration::from_millis)
                .unwrap_or(defaults.initial_backoff),
            max_in_flight: http.max_in_flight.unwrap_or(defaults.max_in_flight),
            max_tokens: http.max_tokens.unwrap_or(defaults.max_tokens),
        })
    }
}
