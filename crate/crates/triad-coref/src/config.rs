//! Flat `key = value` settings files. Every training, window, model,
//! feature and clustering field has a key; unknown keys are rejected.

use std::fmt::Write as _;
use std::str::FromStr;

use triad_coref_core::affinity::Aggregation;
use triad_coref_core::clustering::Linkage;
use triad_coref_core::model::ModelKind;
use triad_coref_core::postprocess::ClusterSettings;

use crate::training::TrainConfig;
use crate::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Settings {
    pub train: TrainConfig,
    pub cluster: ClusterSettings,
    pub aggregation: Aggregation,
}

fn bad(key: &str, value: &str) -> AppError {
    AppError::Config(format!("invalid value {value:?} for {key}"))
}

fn num<T: FromStr>(key: &str, value: &str) -> AppResult<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn optional<T: FromStr>(key: &str, value: &str) -> AppResult<Option<T>> {
    if value == "none" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

fn list<T: FromStr>(key: &str, value: &str) -> AppResult<Vec<T>> {
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn schedule(key: &str, value: &str) -> AppResult<Vec<(usize, f64)>> {
    value
        .split(',')
        .map(|entry| {
            let (at, lr) = entry.trim().split_once(':').ok_or_else(|| bad(key, value))?;
            Ok((num(key, at.trim())?, num(key, lr.trim())?))
        })
        .collect()
}

fn opt_text<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl Settings {
    /// Applies one key. Values use the same syntax as [`Settings::render`].
    pub fn set(&mut self, key: &str, value: &str) -> AppResult<()> {
        let t = &mut self.train;
        match key {
            "kind" => t.kind = ModelKind::parse(value).ok_or_else(|| bad(key, value))?,
            "seed" => t.seed = num(key, value)?,
            "files_per_subepoch" => t.files_per_subepoch = num(key, value)?,
            "total_subepochs" => t.total_subepochs = num(key, value)?,
            "lr_schedule" => t.lr_schedule = schedule(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "grad_clip" => t.grad_clip = optional(key, value)?,
            "producers" => t.producers = num(key, value)?,
            "queue_capacity" => t.queue_capacity = num(key, value)?,
            "train_window" => t.polyads.train_window = num(key, value)?,
            "eval_window" => t.polyads.eval_window = num(key, value)?,
            "max_third_members" => t.polyads.max_third_members = optional(key, value)?,
            "word_emb_dim" => t.model.word_emb_dim = num(key, value)?,
            "pos_emb_dim" => t.model.pos_emb_dim = num(key, value)?,
            "word_lstm_hidden" => t.model.word_lstm_hidden = num(key, value)?,
            "pos_lstm_hidden" => t.model.pos_lstm_hidden = num(key, value)?,
            "pair_hidden" => t.model.pair_hidden = list(key, value)?,
            "shared_context_dim" => t.model.shared_context_dim = num(key, value)?,
            "decoder_dim" => t.model.decoder_dim = num(key, value)?,
            "input_dropout" => t.model.input_dropout = num(key, value)?,
            "pair_dropout" => t.model.pair_dropout = num(key, value)?,
            "context" => t.features.context = num(key, value)?,
            "max_mention_len" => t.features.max_mention_len = num(key, value)?,
            "max_token_distance" => t.features.max_distance = num(key, value)?,
            "threshold" => self.cluster.threshold = num(key, value)?,
            "linkage" => self.cluster.linkage = Linkage::parse(value).ok_or_else(|| bad(key, value))?,
            "max_distance" => self.cluster.distances.max_distance = num(key, value)?,
            "out_of_window" => self.cluster.distances.out_of_window = num(key, value)?,
            "aggregation" => {
                self.aggregation = match value {
                    "mean" => Aggregation::Mean,
                    "max" => Aggregation::Max,
                    v => match v.strip_prefix("top") {
                        Some(k) => Aggregation::TopK(num(key, k)?),
                        None => return Err(bad(key, value)),
                    },
                }
            }
            _ => return Err(AppError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses a settings file over the defaults and validates the result.
    pub fn parse(text: &str) -> AppResult<Self> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| AppError::Config(format!("line {}: expected key = value", i + 1)))?;
            s.set(key.trim(), value.trim())
                .map_err(|e| AppError::Config(format!("line {}: {}", i + 1, e.to_string().trim_start_matches("configuration: "))))?;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> AppResult<()> {
        self.train.validate()?;
        let c = &self.cluster;
        if !(c.threshold > 0.0 && c.distances.max_distance >= 1.0 && c.distances.out_of_window > 0.0) {
            return Err(AppError::Config(
                "threshold and out_of_window must be positive and max_distance at least 1".into(),
            ));
        }
        if self.aggregation == Aggregation::TopK(0) {
            return Err(AppError::Config("aggregation top0 keeps nothing".into()));
        }
        Ok(())
    }

    /// Every key with its current value, one per line, in a fixed order.
    pub fn render(&self) -> String {
        let t = &self.train;
        let m = &t.model;
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("string write");
        put("kind", t.kind.name().into());
        put("seed", t.seed.to_string());
        put("files_per_subepoch", t.files_per_subepoch.to_string());
        put("total_subepochs", t.total_subepochs.to_string());
        put(
            "lr_schedule",
            t.lr_schedule.iter().map(|(s, lr)| format!("{s}:{lr:e}")).collect::<Vec<_>>().join(","),
        );
        put("batch_size", t.batch_size.to_string());
        put("grad_clip", opt_text(t.grad_clip));
        put("producers", t.producers.to_string());
        put("queue_capacity", t.queue_capacity.to_string());
        put("train_window", t.polyads.train_window.to_string());
        put("eval_window", t.polyads.eval_window.to_string());
        put("max_third_members", opt_text(t.polyads.max_third_members));
        put("word_emb_dim", m.word_emb_dim.to_string());
        put("pos_emb_dim", m.pos_emb_dim.to_string());
        put("word_lstm_hidden", m.word_lstm_hidden.to_string());
        put("pos_lstm_hidden", m.pos_lstm_hidden.to_string());
        put(
            "pair_hidden",
            m.pair_hidden.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        );
        put("shared_context_dim", m.shared_context_dim.to_string());
        put("decoder_dim", m.decoder_dim.to_string());
        put("input_dropout", m.input_dropout.to_string());
        put("pair_dropout", m.pair_dropout.to_string());
        put("context", t.features.context.to_string());
        put("max_mention_len", t.features.max_mention_len.to_string());
        put("max_token_distance", t.features.max_distance.to_string());
        put("threshold", self.cluster.threshold.to_string());
        put("linkage", self.cluster.linkage.name().into());
        put("max_distance", self.cluster.distances.max_distance.to_string());
        put("out_of_window", self.cluster.distances.out_of_window.to_string());
        put(
            "aggregation",
            match self.aggregation {
                Aggregation::Mean => "mean".into(),
                Aggregation::Max => "max".into(),
                Aggregation::TopK(k) => format!("top{k}"),
            },
        );
        out
    }
}
