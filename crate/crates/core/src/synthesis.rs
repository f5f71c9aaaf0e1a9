//! Pseudo dense-label synthesis: mixing ground truth with foundation-model
//! predictions under random simplex weights, then moving the result along
//! camera rays by a random factor.
//!
//! Every random choice comes from a [`SeededRng`] seeded per image, and is
//! written to a [`SynthesisProvenance`] so a label can be replayed exactly.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::align::{affine_align, AlignmentMode};
use crate::error::{Error, Result};
use crate::grid::DepthMap;
use crate::rng::{log_uniform, seeded_rng, SeededRng};
use crate::scalar::Scalar;

/// Tolerance on weight sums.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Whether a prediction is metric or defined only up to an affine transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    Relative,
    Metric,
}

impl ScaleKind {
    /// Relative predictions are fit to the reference; metric ones keep their own scale.
    pub fn default_alignment(self) -> AlignmentMode {
        match self {
            ScaleKind::Relative => AlignmentMode::AffineLsq,
            ScaleKind::Metric => AlignmentMode::None,
        }
    }
}

/// A dense depth prediction from one foundation model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelPrediction<T> {
    pub model_id: String,
    pub depth: DepthMap<T>,
    pub scale_kind: ScaleKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelWeight {
    pub model_id: String,
    pub lambda: f64,
}

/// Interpolation weights: one λ per model plus the ground-truth share `1 − Σλ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixWeights {
    pub lambdas: Vec<ModelWeight>,
    pub gt_weight: f64,
}

impl MixWeights {
    pub fn lambda_sum(&self) -> f64 {
        self.lambdas.iter().map(|w| w.lambda).sum()
    }

    fn check(&self, labeled: bool) -> Result<()> {
        if let Some(w) = self.lambdas.iter().find(|w| !(w.lambda >= 0.0 && w.lambda <= 1.0)) {
            return Err(Error::Weight(format!("λ for {} is {}, outside [0, 1]", w.model_id, w.lambda)));
        }
        let sum = self.lambda_sum();
        if sum > 1.0 + WEIGHT_TOL {
            return Err(Error::Weight(format!("Σλ = {sum} exceeds 1")));
        }
        if !labeled && sum < 1.0 - WEIGHT_TOL {
            return Err(Error::Weight(format!("Σλ = {sum} must equal 1 without ground truth")));
        }
        if !labeled && self.gt_weight != 0.0 {
            return Err(Error::Weight(format!("ground-truth weight {} without ground truth", self.gt_weight)));
        }
        if !(self.gt_weight >= 0.0) || (labeled && (self.gt_weight - (1.0 - sum)).abs() > WEIGHT_TOL) {
            return Err(Error::Weight(format!("ground-truth weight {} inconsistent with Σλ = {sum}", self.gt_weight)));
        }
        Ok(())
    }
}

/// Multiplier applied to a whole depth map to move it along camera rays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RelocationFactor(f64);

impl RelocationFactor {
    pub const IDENTITY: Self = Self(1.0);

    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() && theta > 0.0 {
            Ok(Self(theta))
        } else {
            Err(Error::Factor(theta))
        }
    }

    pub fn theta(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RelocationFactor {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RelocationFactor> for f64 {
    fn from(f: RelocationFactor) -> f64 {
        f.0
    }
}

fn default_p_interpolation() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_theta_range() -> [f64; 2] {
    [0.5, 2.0]
}
fn default_depth_max() -> f64 {
    100.0
}

/// Knobs of the label synthesizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Probability of drawing simplex weights; otherwise one source is picked whole.
    #[serde(default = "default_p_interpolation")]
    pub p_interpolation: f64,
    #[serde(default = "default_true")]
    pub relocation: bool,
    /// Log-uniform range of the relocation factor.
    #[serde(default = "default_theta_range")]
    pub theta_range: [f64; 2],
    /// Restricts synthesis to these model ids; `None` uses every prediction.
    #[serde(default)]
    pub models: Option<Vec<String>>,
    /// Per-model override of the alignment implied by the prediction's scale kind.
    #[serde(default)]
    pub alignment: BTreeMap<String, AlignmentMode>,
    /// Labels whose maximum exceeds this (meters) are flagged, never clamped.
    #[serde(default = "default_depth_max")]
    pub depth_max: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            p_interpolation: default_p_interpolation(),
            relocation: true,
            theta_range: default_theta_range(),
            models: None,
            alignment: BTreeMap::new(),
            depth_max: default_depth_max(),
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_interpolation) {
            return Err(Error::Config(format!("p_interpolation {} outside [0, 1]", self.p_interpolation)));
        }
        let [lo, hi] = self.theta_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::Config(format!("theta_range [{lo}, {hi}] needs 0 < min <= max")));
        }
        if !(self.depth_max > 0.0) {
            return Err(Error::Config(format!("depth_max {} must be positive", self.depth_max)));
        }
        Ok(())
    }

    fn alignment_for(&self, pred: &ModelPrediction<impl Scalar>) -> AlignmentMode {
        self.alignment.get(&pred.model_id).copied().unwrap_or_else(|| pred.scale_kind.default_alignment())
    }
}

/// How one prediction was brought onto the reference scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub model_id: String,
    pub requested: AlignmentMode,
    pub applied: AlignmentMode,
    /// Model id of the reference, `"gt"` for ground truth, `None` when nothing was available.
    pub reference: Option<String>,
    pub fallback: bool,
    pub scale: f64,
    pub shift: f64,
}

/// Everything needed to reproduce one synthesized label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisProvenance {
    pub image_id: String,
    pub seed: u64,
    pub weights: MixWeights,
    pub theta: RelocationFactor,
    pub alignment: Vec<AlignmentRecord>,
    /// The simplex branch was taken (as opposed to picking one source whole).
    pub interpolated: bool,
    /// The label's maximum exceeds `depth_max`.
    pub exceeds_depth_max: bool,
}

/// Pixelwise `Σ λᵗ·Rᵗ + (1 − Σλᵗ)·gt`.
///
/// Only sources with a positive weight participate; the output mask is the
/// intersection of their masks. `w` must list the predictions in order.
pub fn interpolate<T: Scalar>(
    gt: Option<&DepthMap<T>>,
    preds: &[ModelPrediction<T>],
    w: &MixWeights,
) -> Result<DepthMap<T>> {
    if w.lambdas.len() != preds.len()
        || w.lambdas.iter().zip(preds).any(|(l, p)| l.model_id != p.model_id)
    {
        return Err(Error::Weight("weights do not reference exactly the given predictions".into()));
    }
    w.check(gt.is_some())?;

    let shape = gt.or(preds.first().map(|p| &p.depth)).ok_or(Error::EmptyDepth)?;
    for p in preds {
        if !p.depth.same_shape(shape) {
            return Err(Error::Shape(format!(
                "prediction {} is {}x{}, expected {}x{}",
                p.model_id,
                p.depth.width(),
                p.depth.height(),
                shape.width(),
                shape.height()
            )));
        }
    }
    if let Some(g) = gt {
        if !g.same_shape(shape) {
            return Err(Error::Shape("ground truth shape differs".into()));
        }
    }

    let mut sources: Vec<(T, &DepthMap<T>)> = preds
        .iter()
        .zip(&w.lambdas)
        .filter(|(_, l)| l.lambda > 0.0)
        .map(|(p, l)| (T::lit(l.lambda), &p.depth))
        .collect();
    if let Some(g) = gt.filter(|_| w.gt_weight > 0.0) {
        sources.push((T::lit(w.gt_weight), g));
    }
    if sources.is_empty() {
        return Err(Error::Weight("no source has a positive weight".into()));
    }

    let n = shape.len();
    let mut values = vec![T::zero(); n];
    let mut valid = vec![false; n];
    for i in 0..n {
        if !sources.iter().all(|(_, m)| m.is_valid(i)) {
            continue;
        }
        let (mut acc, mut lo, mut hi) = (T::zero(), T::infinity(), T::neg_infinity());
        for (wt, m) in &sources {
            let v = m.values()[i];
            acc = acc + *wt * v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // Rounding can leave the convex hull by an ulp.
        values[i] = acc.max(lo).min(hi);
        valid[i] = true;
    }
    DepthMap::from_parts(shape.width(), shape.height(), values, valid)
}

/// Multiplies every valid depth by θ.
pub fn relocate<T: Scalar>(d: &DepthMap<T>, theta: RelocationFactor) -> Result<DepthMap<T>> {
    if d.valid_count() == 0 {
        return Err(Error::EmptyDepth);
    }
    let t = T::lit(theta.theta());
    Ok(d.map_valid(|v| t * v))
}

/// Uniform draw from the simplex with `parts` components, by sorted uniform spacings.
fn simplex(rng: &mut SeededRng, parts: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..parts - 1).map(|_| rng.random::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.push(1.0);
    let mut prev = 0.0;
    cuts.into_iter()
        .map(|c| {
            let s = c - prev;
            prev = c;
            s
        })
        .collect()
}

/// Draws interpolation weights for `model_ids`.
///
/// With probability `p_interpolation` the weights are uniform on the simplex
/// over the models plus ground truth (labeled) or over the models alone
/// (unlabeled). Otherwise a single source is picked uniformly and gets all the
/// weight.
pub fn draw_mix(rng: &mut SeededRng, model_ids: &[&str], labeled: bool, cfg: &SynthesisConfig) -> MixWeights {
    draw_mix_branch(rng, model_ids, labeled, cfg).0
}

/// [`draw_mix`] plus whether the simplex branch was taken.
fn draw_mix_branch(
    rng: &mut SeededRng,
    model_ids: &[&str],
    labeled: bool,
    cfg: &SynthesisConfig,
) -> (MixWeights, bool) {
    assert!(!model_ids.is_empty() || labeled, "draw_mix needs a model or ground truth");
    let parts = model_ids.len() + usize::from(labeled);
    let interpolate = rng.random::<f64>() < cfg.p_interpolation;

    let mut lambdas: Vec<f64> = if interpolate {
        simplex(rng, parts)
    } else {
        let mut one_hot = vec![0.0; parts];
        one_hot[rng.random_range(0..parts)] = 1.0;
        one_hot
    };
    lambdas.truncate(model_ids.len());

    let gt_weight = if labeled {
        let mut sum: f64 = lambdas.iter().sum();
        while sum > 1.0 {
            let big = lambdas.iter_mut().max_by(|a, b| a.total_cmp(b)).expect("sum > 1 implies a model");
            *big = (*big - (sum - 1.0)).max(0.0);
            sum = lambdas.iter().sum();
        }
        1.0 - sum
    } else {
        let (last, head) = lambdas.split_last_mut().expect("unlabeled draws have a model");
        *last = (1.0 - head.iter().sum::<f64>()).max(0.0);
        0.0
    };

    let weights = MixWeights {
        lambdas: model_ids
            .iter()
            .zip(lambdas)
            .map(|(id, lambda)| ModelWeight { model_id: (*id).to_owned(), lambda })
            .collect(),
        gt_weight,
    };
    (weights, interpolate)
}

/// Log-uniform relocation factor on `theta_range`; exactly 1 when relocation is off.
pub fn draw_theta(rng: &mut SeededRng, cfg: &SynthesisConfig) -> Result<RelocationFactor> {
    let [lo, hi] = cfg.theta_range;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
        return Err(Error::Config(format!("theta_range [{lo}, {hi}] needs 0 < min <= max")));
    }
    if !cfg.relocation {
        return Ok(RelocationFactor::IDENTITY);
    }
    RelocationFactor::new(log_uniform(rng, lo, hi))
}

/// Applies the per-model alignment and returns the aligned predictions plus their records.
fn align_predictions<T: Scalar>(
    gt: Option<&DepthMap<T>>,
    preds: &[&ModelPrediction<T>],
    mode_for: impl Fn(&ModelPrediction<T>) -> AlignmentMode,
) -> Result<(Vec<ModelPrediction<T>>, Vec<AlignmentRecord>)> {
    // Without ground truth, relative predictions are fit to the first metric one.
    let reference: Option<(String, &DepthMap<T>)> = match gt {
        Some(g) => Some(("gt".to_owned(), g)),
        None => preds
            .iter()
            .find(|p| p.scale_kind == ScaleKind::Metric)
            .map(|p| (p.model_id.clone(), &p.depth)),
    };

    let mut aligned = Vec::with_capacity(preds.len());
    let mut records = Vec::with_capacity(preds.len());
    for p in preds {
        let requested = mode_for(p);
        let (out, used_ref) = match (&reference, requested) {
            (_, AlignmentMode::None) | (None, _) => {
                (affine_align(&p.depth, &p.depth, AlignmentMode::None)?, None)
            }
            (Some((id, r)), mode) => (affine_align(&p.depth, r, mode)?, Some(id.clone())),
        };
        records.push(AlignmentRecord {
            model_id: p.model_id.clone(),
            requested,
            applied: out.applied,
            reference: used_ref,
            fallback: out.fallback,
            scale: out.scale,
            shift: out.shift,
        });
        aligned.push(ModelPrediction { model_id: p.model_id.clone(), depth: out.map, scale_kind: p.scale_kind });
    }
    Ok((aligned, records))
}

fn check_inputs<T: Scalar>(gt: Option<&DepthMap<T>>, preds: &[&ModelPrediction<T>]) -> Result<()> {
    if gt.is_none() && preds.is_empty() {
        return Err(Error::Config("an unlabeled image needs at least one prediction".into()));
    }
    if let Some(g) = gt {
        if let Some(p) = preds.iter().find(|p| !p.depth.same_shape(g)) {
            return Err(Error::Shape(format!(
                "prediction {} is {}x{}, ground truth is {}x{}",
                p.model_id,
                p.depth.width(),
                p.depth.height(),
                g.width(),
                g.height()
            )));
        }
    }
    Ok(())
}

fn finish<T: Scalar>(label: DepthMap<T>, theta: RelocationFactor, depth_max: f64) -> Result<(DepthMap<T>, bool)> {
    let label = relocate(&label, theta).map_err(|_| Error::EmptyResult)?;
    if label.valid_count() == 0 {
        return Err(Error::EmptyResult);
    }
    let max = label.iter_valid().map(|(_, v)| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
    Ok((label, max > depth_max))
}

/// Synthesizes one pseudo dense label.
///
/// Aligns each prediction, draws the mixing weights, interpolates, draws θ
/// and relocates. `seed` fully determines the random choices; see
/// [`crate::rng::derive_seed`] for deriving it per image and draw.
pub fn synthesize_label<T: Scalar>(
    image_id: &str,
    gt: Option<&DepthMap<T>>,
    preds: &[ModelPrediction<T>],
    cfg: &SynthesisConfig,
    seed: u64,
) -> Result<(DepthMap<T>, SynthesisProvenance)> {
    cfg.validate()?;
    let selected: Vec<&ModelPrediction<T>> = preds
        .iter()
        .filter(|p| cfg.models.as_ref().is_none_or(|m| m.contains(&p.model_id)))
        .collect();
    check_inputs(gt, &selected)?;

    let (aligned, alignment) = align_predictions(gt, &selected, |p| cfg.alignment_for(p))?;
    let mut rng = seeded_rng(seed);
    let ids: Vec<&str> = aligned.iter().map(|p| p.model_id.as_str()).collect();
    let (weights, interpolated) = draw_mix_branch(&mut rng, &ids, gt.is_some(), cfg);
    let mixed = interpolate(gt, &aligned, &weights)?;
    let theta = draw_theta(&mut rng, cfg)?;
    let (label, exceeds_depth_max) = finish(mixed, theta, cfg.depth_max)?;

    let provenance = SynthesisProvenance {
        image_id: image_id.to_owned(),
        seed,
        weights,
        theta,
        alignment,
        interpolated,
        exceeds_depth_max,
    };
    Ok((label, provenance))
}

/// Rebuilds a label from its provenance without drawing any random numbers.
pub fn replay_label<T: Scalar>(
    gt: Option<&DepthMap<T>>,
    preds: &[ModelPrediction<T>],
    provenance: &SynthesisProvenance,
) -> Result<DepthMap<T>> {
    let requested: BTreeMap<&str, AlignmentMode> =
        provenance.alignment.iter().map(|r| (r.model_id.as_str(), r.requested)).collect();
    let selected: Vec<&ModelPrediction<T>> = provenance
        .weights
        .lambdas
        .iter()
        .map(|w| {
            preds
                .iter()
                .find(|p| p.model_id == w.model_id)
                .ok_or_else(|| Error::Weight(format!("provenance references missing model {}", w.model_id)))
        })
        .collect::<Result<_>>()?;
    check_inputs(gt, &selected)?;
    let (aligned, _) = align_predictions(gt, &selected, |p| {
        requested.get(p.model_id.as_str()).copied().unwrap_or(AlignmentMode::None)
    })?;
    let mixed = interpolate(gt, &aligned, &provenance.weights)?;
    Ok(finish(mixed, provenance.theta, f64::INFINITY)?.0)
}
