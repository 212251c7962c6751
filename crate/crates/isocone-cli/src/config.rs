use isocone::coupling::Resolutions;
use isocone::envelope::SlopeBody;
use isocone::experiments::CorpusMember;
use isocone::{Cone, HomWeight, StarSet};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must match the verb on the command line when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb: Option<String>,
    #[serde(default)]
    pub cone: ConeSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<SetSpec>,
    /// Replaces the default thirty-member corpus of `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<Vec<CorpusMember>>,
    #[serde(default)]
    pub resolutions: ResolutionSpec,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub angles: [f64; 2],
}

impl Default for ConeSpec {
    fn default() -> Self {
        ConeSpec { angles: [0.0, FRAC_PI_2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Monomial([f64; 2]),
    SphericalProfile { alpha: f64, samples: Vec<f64> },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Monomial([1.0, 1.0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Ball { rho: f64 },
    TranslatedBall { x0: [f64; 2], rho: f64 },
    /// `r = 1 + eps η̃`.
    Star { eps: f64, eta: EtaSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaSpec {
    FourierCos(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    /// The sector of the disk of radius `rho` over the cone.
    SectorDisk { rho: f64 },
    Polygon { vertices: Vec<[f64; 2]>, spacing: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionSpec {
    pub n_theta: usize,
    pub mesh_h: f64,
    pub n_slope: usize,
    /// Defaults to the scaling with `sqrt(mesh_h)` used by the coupling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_h: Option<f64>,
}

impl Default for ResolutionSpec {
    fn default() -> Self {
        ResolutionSpec { n_theta: 4096, mesh_h: 0.02, n_slope: 512, eval_h: None }
    }
}

/// Verb-specific parameters; each verb reads the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<bool>,
    /// Cone openings for a sweep over sectors `[0, β]` instead of the corpus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub openings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_box: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sep: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_origin: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_knots: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| format!("malformed config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let r = &self.resolutions;
        let eval_ok = r.eval_h.is_none_or(|v| v > 0.0);
        if r.n_theta == 0 || !(r.mesh_h > 0.0) || r.n_slope == 0 || !eval_ok {
            return Err("all resolutions must be positive".into());
        }
        Ok(())
    }

    /// Canonical serialisation, the input of the config hash.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn cone(&self) -> isocone::Result<Cone> {
        Cone::new(self.cone.angles[0], self.cone.angles[1])
    }

    pub fn weight(&self) -> isocone::Result<HomWeight> {
        let cone = self.cone()?;
        match &self.weight {
            WeightSpec::Monomial(a) => HomWeight::monomial(cone, *a),
            WeightSpec::SphericalProfile { alpha, samples } => HomWeight::spherical_profile(cone, *alpha, samples.clone()),
        }
    }

    pub fn resolutions(&self) -> Resolutions {
        let r = &self.resolutions;
        let mut res = Resolutions::new(r.mesh_h);
        res.n_slope = r.n_slope;
        if let Some(e) = r.eval_h {
            res.eval_h = e;
        }
        res
    }

    /// The configured set, the unit ball by default.
    pub fn star_set(&self, w: Option<&HomWeight>) -> isocone::Result<StarSet> {
        let cone = self.cone()?;
        let n = self.resolutions.n_theta;
        match &self.set {
            None => StarSet::ball(cone, n, 1.0),
            Some(SetSpec::Ball { rho }) => StarSet::ball(cone, n, *rho),
            Some(SetSpec::TranslatedBall { x0, rho }) => StarSet::translated_ball(cone, n, *x0, *rho),
            Some(SetSpec::Star { eps, eta: EtaSpec::FourierCos(m) }) => match w {
                Some(w) => StarSet::perturbed_ball(w, n, *eps, *m),
                None => Err(isocone::Error::InvalidArgument("a perturbed set needs a weight".into())),
            },
        }
    }

    pub fn body(&self) -> isocone::Result<Option<SlopeBody>> {
        match &self.params.body {
            None => Ok(None),
            Some(BodySpec::SectorDisk { rho }) => {
                let cone = self.cone()?;
                let n = self.resolutions.n_slope;
                SlopeBody::sector_disk(cone, *rho, (n / 2).max(2), n).map(Some)
            }
            Some(BodySpec::Polygon { vertices, spacing }) => SlopeBody::polygon(vertices.clone(), *spacing).map(Some),
        }
    }
}
