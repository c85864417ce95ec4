use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corrector::Variant;
use crate::eps::NeumannData;
use crate::fem::MaterialParams;
use crate::geometry::{DomainShape, InclusionShape};
use crate::{Error, Result};

fn default_h_cell() -> f64 {
    1.0 / 64.0
}

fn default_rule() -> String {
    "eps/8".into()
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Plain, Variant::Mollified]
}

fn default_samples() -> usize {
    10_000
}

fn default_workers() -> usize {
    1
}

/// JSON configuration shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub domain: DomainShape,
    pub inclusion: InclusionShape,
    pub params: MaterialParams,
    pub g: NeumannData,
    pub eps_list: Vec<f64>,
    /// Cell mesh size for the standalone tensor and cell checks.
    #[serde(default = "default_h_cell")]
    pub h_cell: f64,
    /// `"eps/K"`: the ε-mesh resolves each period with K divisions.
    #[serde(default = "default_rule")]
    pub h_domain_rule: String,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Corrector cache root; defaults to `<output>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub ellipticity_samples: usize,
    /// ε values solved concurrently.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl StudyConfig {
    /// The acceptance configuration: unit disk pair, λ = μ = μ̃ = 1, S = diag(1, −1).
    pub fn acceptance() -> Self {
        Self {
            domain: DomainShape::disk(0.5),
            inclusion: InclusionShape::disk([0.0, 0.0], 0.25),
            params: MaterialParams { lambda: 1.0, mu: 1.0, mu_tilde: 1.0 },
            g: NeumannData::equilibrated_linear([[1.0, 0.0], [0.0, -1.0]]),
            eps_list: vec![0.25, 0.125, 0.0625],
            h_cell: default_h_cell(),
            h_domain_rule: default_rule(),
            variants: default_variants(),
            output_dir: None,
            cache_dir: None,
            seed: 0,
            ellipticity_samples: default_samples(),
            workers: default_workers(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.domain.validate()?;
        self.inclusion.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.eps_list.len() < 3 {
            return Err(Error::Config(format!("eps_list needs at least 3 values, got {}", self.eps_list.len())));
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Config("every eps must lie in (0, 1)".into()));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("eps_list must be strictly decreasing".into()));
        }
        if !(self.h_cell > 0.0 && self.h_cell < 0.5) {
            return Err(Error::Config(format!("h_cell must lie in (0, 0.5), got {}", self.h_cell)));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("at least one variant is required".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.divisions()?;
        Ok(())
    }

    /// K from the `"eps/K"` rule.
    pub fn divisions(&self) -> Result<usize> {
        let rule = self.h_domain_rule.replace(' ', "");
        let k = rule
            .strip_prefix("eps/")
            .and_then(|k| k.parse::<usize>().ok())
            .ok_or_else(|| Error::Config(format!("h_domain_rule must read \"eps/K\", got {:?}", self.h_domain_rule)))?;
        if k < 4 {
            return Err(Error::Config(format!("h_domain_rule {rule} under-resolves the inclusions (need K >= 4)")));
        }
        Ok(k)
    }

    pub fn h_domain(&self, eps: f64) -> Result<f64> {
        Ok(eps / self.divisions()? as f64)
    }

    pub fn cache_root(&self, out: &Path) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| out.join("cache"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_round_trip() {
        let c = StudyConfig::acceptance();
        c.validate().unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(StudyConfig::from_json(&s).unwrap(), c);
        assert_eq!(c.divisions().unwrap(), 8);
    }

    #[test]
    fn invalid_configurations() {
        let mut c = StudyConfig::acceptance();
        c.params.mu_tilde = -1.0;
        assert!(matches!(c.validate(), Err(Error::InvalidMaterial(_))));
        let mut c = StudyConfig::acceptance();
        c.eps_list = vec![0.25, 0.125];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = StudyConfig::acceptance();
        c.eps_list = vec![0.125, 0.25, 0.0625];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = StudyConfig::acceptance();
        c.h_domain_rule = "h/3".into();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(matches!(StudyConfig::from_json("{\"domain\": 3}"), Err(Error::Config(_))));
    }
}
