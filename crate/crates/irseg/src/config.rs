//! TOML run configuration.
//!
//! ```toml
//! seed = 3
//! out = "runs/gda"
//! manifest = "data/manifest.csv"
//! clear_sky_dir = "data/clear_sky"
//! model = "gda"
//!
//! [features]
//! variant = "x3"
//! neighborhood = "first_order"
//!
//! [cv]
//! variants = ["x1", "x3", "x4"]
//! neighborhoods = ["single", "first_order"]
//! ```

use std::path::{Path, PathBuf};

use irseg_core::features::{FeatureSpec, FeatureVariant, Neighborhood};
use irseg_core::model::{ModelKind, ModelParams};
use irseg_core::synth::SceneConfig;
use irseg_core::SiteParams;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides both the model seed and the synthetic scene seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub manifest: Option<PathBuf>,
    pub clear_sky_dir: Option<PathBuf>,
    pub model: ModelKind,
    pub features: FeatureSpec,
    pub params: ModelParams,
    pub site: SiteParams,
    pub cv: CvGrid,
    pub lambda: LambdaGrid,
    pub synth: SceneConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: PathBuf::from("irseg-out"),
            manifest: None,
            clear_sky_dir: None,
            model: ModelKind::Gda,
            features: FeatureSpec::default(),
            params: ModelParams::default(),
            site: SiteParams::default(),
            cv: CvGrid::default(),
            lambda: LambdaGrid::default(),
            synth: SceneConfig::default(),
        }
    }
}

/// Cross-validation grid; empty lists fall back to per-model defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvGrid {
    pub variants: Vec<FeatureVariant>,
    pub neighborhoods: Vec<Neighborhood>,
    pub expansion_orders: Vec<u32>,
    /// `γ`, `C` or GP prior variance.
    pub hyperparameters: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Default for CvGrid {
    fn default() -> Self {
        Self {
            variants: FeatureVariant::ALL.to_vec(),
            neighborhoods: Neighborhood::ALL.to_vec(),
            expansion_orders: Vec::new(),
            hyperparameters: Vec::new(),
            betas: Vec::new(),
        }
    }
}

/// Log-spaced values over `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
}

impl CvGrid {
    pub fn expansion_orders_for(&self, kind: ModelKind) -> Vec<u32> {
        if !kind.uses_expansion() {
            vec![1]
        } else if self.expansion_orders.is_empty() {
            vec![1, 2]
        } else {
            self.expansion_orders.clone()
        }
    }

    pub fn hyperparameters_for(&self, kind: ModelKind, params: &ModelParams) -> Vec<f64> {
        if !kind.uses_expansion() {
            vec![params.hyperparameter]
        } else if self.hyperparameters.is_empty() {
            log_space(1e-4, 1e4, 9)
        } else {
            self.hyperparameters.clone()
        }
    }

    pub fn betas_for(&self, kind: ModelKind, params: &ModelParams) -> Vec<f64> {
        // unsupervised MRF variants keep the configured coupling
        if !matches!(kind, ModelKind::Mrf | ModelKind::SaMrf) {
            vec![params.beta]
        } else if self.betas.is_empty() {
            vec![0.0, 0.5, 1.0, 2.0, 4.0]
        } else {
            self.betas.clone()
        }
    }

    /// Every feature spec of the grid for `kind`, expansion order outermost.
    pub fn specs_for(&self, kind: ModelKind, bias: f64) -> Vec<FeatureSpec> {
        let mut out = Vec::new();
        for order in self.expansion_orders_for(kind) {
            for &n in &self.neighborhoods {
                for &v in &self.variants {
                    out.push(FeatureSpec::new(v, n).with_expansion(order, bias));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            min: 1e-2,
            max: 1e2,
            count: 101,
        }
    }
}

impl LambdaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max >= self.min && self.count > 0) {
            return Err(Error::Config("lambda grid needs 0 < min <= max and count > 0".into()));
        }
        if *self == Self::default() {
            return Ok(irseg_core::eval::default_lambda_grid());
        }
        Ok(log_space(self.min, self.max, self.count))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.out);
        cfg.manifest.as_mut().map(fix);
        cfg.clear_sky_dir.as_mut().map(fix);
        Ok(cfg)
    }

    /// Folds the top-level seed into the model and scene seeds.
    pub fn apply_seed(&mut self) {
        if let Some(s) = self.seed {
            self.params.seed = s;
            self.params.anneal.seed = s;
            self.synth.seed = s;
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn fields_parse() {
        let cfg = RunConfig::parse(
            r#"
            seed = 5
            model = "sa-icm-mrf"
            clear_sky_dir = "cs"
            [features]
            variant = "x4"
            neighborhood = "second_order"
            [params]
            beta = 0.5
            [site]
            site_elevation = 0.1
            [cv]
            betas = [0.0, 1.0]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.model, ModelKind::SaIcmMrf);
        assert_eq!(cfg.features.variant, FeatureVariant::X4);
        assert_eq!(cfg.features.expansion_order, 1);
        assert_eq!(cfg.params.beta, 0.5);
        assert_eq!(cfg.params.gamma_cov, 1.0);
        assert_eq!(cfg.site.site_elevation, 0.1);
        assert_eq!(cfg.site.lapse_rate, 9.8);
        assert_eq!(cfg.cv.betas, [0.0, 1.0]);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(RunConfig::parse("sed = 1").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig {
            seed: Some(9),
            manifest: Some("m.csv".into()),
            ..RunConfig::default()
        };
        let back = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn grids() {
        assert_eq!(LambdaGrid::default().values().unwrap().len(), 101);
        let g = log_space(1e-4, 1e4, 9);
        assert!((g[4] - 1.0).abs() < 1e-12);
        let cv = CvGrid::default();
        let p = ModelParams::default();
        assert_eq!(cv.specs_for(ModelKind::Gda, 1.0).len(), 12);
        assert_eq!(cv.specs_for(ModelKind::Rr, 1.0).len(), 24);
        assert_eq!(cv.hyperparameters_for(ModelKind::Gda, &p), [1.0]);
        assert_eq!(cv.betas_for(ModelKind::Mrf, &p).len(), 5);
        assert_eq!(cv.betas_for(ModelKind::IcmMrf, &p), [1.0]);
    }
}
