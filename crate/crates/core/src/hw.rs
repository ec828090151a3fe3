//! Simple-cell responses, pooling over a group, and layered HW networks.
//!
//! A layer maps a unit input `x` to one pooled value per (template, bias) pair:
//! `pool_g |<x, g t> + b|_+`. Signature entries are ordered template-major,
//! bias-minor; reports index signatures that way.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relu;
use crate::signal::{apply, cyclic_group, FiniteGroup, Permutation, Signal};

/// Beyond this `|xi|`, Mex is evaluated as the exact max (or min).
pub const MEX_XI_INF: f64 = 1e6;
/// Below this `|xi|`, Mex is evaluated as the exact mean.
pub const MEX_XI_ZERO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PoolingSpec {
    Sum,
    Max,
    Mean,
    /// `sum_g s_g^n / sum_g' (1 + s_g')^(n-1)`.
    ///
    /// By default the pooled values are rectified responses. With `raw` set,
    /// layers feed unrectified `<x, g t> + b`; no guarantees hold in that mode.
    SoftMax {
        n: u32,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        raw: bool,
    },
    /// `(1/xi) log(mean_i exp(xi s_i))`; min, mean and max at `xi = -inf, 0, +inf`.
    Mex { xi: f64 },
}

impl PoolingSpec {
    pub fn softmax(n: u32) -> Self {
        PoolingSpec::SoftMax { n, raw: false }
    }

    pub fn mex(xi: f64) -> Self {
        PoolingSpec::Mex { xi }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PoolingSpec::SoftMax { n, .. } if n < 1 => {
                Err(Error::InvalidArgument("softmax order must be >= 1".into()))
            }
            PoolingSpec::Mex { xi } if !xi.is_finite() => {
                Err(Error::InvalidArgument("mex xi must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    fn is_raw(&self) -> bool {
        matches!(self, PoolingSpec::SoftMax { raw: true, .. })
    }
}

/// `|<x, g t> + b|_+`.
pub fn simple_response(x: &Signal, t: &Signal, g: &Permutation, b: f64) -> Result<f64> {
    let gt = apply(g, t)?;
    if gt.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: gt.dim(),
            got: x.dim(),
        });
    }
    Ok(relu(x.dot(&gt) + b))
}

/// Pools a nonempty list of responses.
pub fn pool(values: &[f64], spec: &PoolingSpec) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyPool);
    }
    spec.validate()?;
    let n = values.len() as f64;
    let max = || values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = || values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = || values.iter().sum::<f64>() / n;
    Ok(match *spec {
        PoolingSpec::Sum => values.iter().sum(),
        PoolingSpec::Max => max(),
        PoolingSpec::Mean => mean(),
        PoolingSpec::SoftMax { n: order, .. } => {
            let denom: f64 = values.iter().map(|s| (1.0 + s).powi(order as i32 - 1)).sum();
            if denom.abs() < 1e-300 {
                return Err(Error::SoftMaxDenominatorZero);
            }
            values.iter().map(|s| s.powi(order as i32)).sum::<f64>() / denom
        }
        PoolingSpec::Mex { xi } => {
            if xi.abs() < MEX_XI_ZERO {
                mean()
            } else if xi > MEX_XI_INF {
                max()
            } else if xi < -MEX_XI_INF {
                min()
            } else {
                let zmax = values.iter().map(|s| xi * s).fold(f64::NEG_INFINITY, f64::max);
                // log(mean exp(z - zmax)) via expm1/ln_1p keeps the small-xi regime accurate.
                let excess: f64 = values.iter().map(|s| (xi * s - zmax).exp_m1()).sum();
                let lse = zmax + (excess / n).ln_1p();
                (lse / xi).clamp(min(), max())
            }
        }
    })
}

/// How the group of a layer is specified in configuration documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Cyclic,
    Trivial,
}

/// JSON form of a layer: `{dim, group, templates, biases, pooling}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub dim: usize,
    pub group: GroupKind,
    pub templates: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub pooling: PoolingSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwLayer {
    templates: Vec<Signal>,
    biases: Vec<f64>,
    group: FiniteGroup,
    pooling: PoolingSpec,
}

impl HwLayer {
    pub fn new(
        templates: Vec<Signal>,
        biases: Vec<f64>,
        group: FiniteGroup,
        pooling: PoolingSpec,
    ) -> Result<Self> {
        pooling.validate()?;
        if templates.is_empty() || biases.is_empty() {
            return Err(Error::InvalidArgument(
                "a layer needs at least one template and one bias".into(),
            ));
        }
        if let Some(t) = templates.iter().find(|t| t.dim() != group.dim()) {
            return Err(Error::DimensionMismatch {
                expected: group.dim(),
                got: t.dim(),
            });
        }
        Ok(HwLayer {
            templates,
            biases,
            group,
            pooling,
        })
    }

    pub fn from_config(cfg: &LayerConfig) -> Result<Self> {
        let group = match cfg.group {
            GroupKind::Cyclic => cyclic_group(cfg.dim.max(1)),
            GroupKind::Trivial => FiniteGroup::trivial(cfg.dim.max(1)),
        };
        let templates = cfg
            .templates
            .iter()
            .map(|t| Signal::normalize(t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(templates, cfg.biases.clone(), group, cfg.pooling)
    }

    pub fn to_config(&self) -> LayerConfig {
        let trivial = self.group.order() == 1;
        LayerConfig {
            dim: self.input_dim(),
            group: if trivial { GroupKind::Trivial } else { GroupKind::Cyclic },
            templates: self.templates.iter().map(|t| t.as_slice().to_vec()).collect(),
            biases: self.biases.clone(),
            pooling: self.pooling,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.group.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.templates.len() * self.biases.len()
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn pooling(&self) -> PoolingSpec {
        self.pooling
    }

    /// The signature of `x`, template-major and bias-minor.
    pub fn forward(&self, x: &Signal) -> Result<Vec<f64>> {
        self.forward_slice(x.as_slice())
    }

    fn forward_slice(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let raw = self.pooling.is_raw();
        let mut out = Vec::with_capacity(self.output_dim());
        let mut values = vec![0.0; self.group.order()];
        for t in &self.templates {
            let dots: Vec<f64> = self
                .group
                .elements()
                .iter()
                .map(|g| crate::dot(x, &g.permute(t.as_slice())))
                .collect();
            for &b in &self.biases {
                for (v, d) in values.iter_mut().zip(&dots) {
                    *v = if raw { d + b } else { relu(d + b) };
                }
                out.push(pool(&values, &self.pooling)?);
            }
        }
        Ok(out)
    }

    pub fn forward_batch(&self, xs: &[Signal]) -> Result<Vec<Vec<f64>>> {
        xs.par_iter().map(|x| self.forward(x)).collect()
    }

    /// `max_g || forward(g x) - forward(x) ||_inf` over the layer's own actions.
    pub fn invariance_gap(&self, x: &Signal) -> Result<f64> {
        let base = self.forward(x)?;
        let mut gap = 0.0_f64;
        for g in self.group.elements() {
            let moved = self.forward(&apply(g, x)?)?;
            for (a, b) in moved.iter().zip(&base) {
                gap = gap.max((a - b).abs());
            }
        }
        Ok(gap)
    }
}

pub fn layer_forward(x: &Signal, layer: &HwLayer) -> Result<Vec<f64>> {
    layer.forward(x)
}

pub fn invariance_gap(x: &Signal, layer: &HwLayer) -> Result<f64> {
    layer.invariance_gap(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwNetwork {
    layers: Vec<HwLayer>,
    renormalize_between_layers: bool,
}

impl HwNetwork {
    pub fn new(layers: Vec<HwLayer>) -> Result<Self> {
        Self::with_renormalization(layers, true)
    }

    pub fn with_renormalization(layers: Vec<HwLayer>, renormalize: bool) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network has no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[1].input_dim() != pair[0].output_dim() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].output_dim(),
                    got: pair[1].input_dim(),
                });
            }
        }
        Ok(HwNetwork {
            layers,
            renormalize_between_layers: renormalize,
        })
    }

    pub fn layers(&self) -> &[HwLayer] {
        &self.layers
    }

    /// Runs the layers in order. The final signature is returned as computed.
    pub fn forward(&self, x: &Signal) -> Result<Vec<f64>> {
        let mut h = self.layers[0].forward(x)?;
        for layer in &self.layers[1..] {
            if self.renormalize_between_layers {
                let next = Signal::normalize(&h).map_err(|_| Error::ZeroSignature)?;
                h = layer.forward(&next)?;
            } else {
                h = layer.forward_slice(&h)?;
            }
        }
        Ok(h)
    }
}

pub fn network_forward(x: &Signal, net: &HwNetwork) -> Result<Vec<f64>> {
    net.forward(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(v: &[f64]) -> Signal {
        Signal::normalize(v).unwrap()
    }

    fn id(d: usize) -> Permutation {
        Permutation::identity(d)
    }

    #[test]
    fn simple_response_examples() {
        let e0 = sig(&[1.0, 0.0]);
        assert_eq!(simple_response(&e0, &e0, &id(2), 0.0).unwrap(), 1.0);
        assert_eq!(simple_response(&sig(&[0.0, 1.0]), &e0, &id(2), -0.5).unwrap(), 0.0);
        let r = simple_response(&sig(&[0.6, 0.8]), &e0, &id(2), 0.1).unwrap();
        assert!((r - 0.7).abs() < 1e-15);
        assert!(simple_response(&sig(&[1.0, 0.0, 0.0]), &e0, &id(2), 0.0).is_err());
    }

    #[test]
    fn pool_examples() {
        assert!((pool(&[1.0, 0.0], &PoolingSpec::softmax(2)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let mex1 = pool(&[0.0, 1.0], &PoolingSpec::mex(1.0)).unwrap();
        assert!((mex1 - ((1.0 + 1f64.exp()) / 2.0).ln()).abs() < 1e-14);
        assert!((mex1 - 0.62011).abs() < 1e-5);
        let near_mean = pool(&[1.0, 2.0, 3.0], &PoolingSpec::mex(1e-6)).unwrap();
        assert!((near_mean - 2.0).abs() < 1e-5);
        let near_max = pool(&[1.0, 2.0, 3.0, 4.0], &PoolingSpec::mex(100.0)).unwrap();
        assert!(4.0 - near_max <= 4f64.ln() / 100.0 + 1e-15);
        assert!(near_max <= 4.0);
        assert_eq!(pool(&[], &PoolingSpec::Sum), Err(Error::EmptyPool));
    }

    #[test]
    fn pool_limits_and_dispatch() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pool(&v, &PoolingSpec::mex(0.0)).unwrap(), 2.5);
        assert_eq!(pool(&v, &PoolingSpec::mex(2e6)).unwrap(), 4.0);
        assert_eq!(pool(&v, &PoolingSpec::mex(-2e6)).unwrap(), 1.0);
        assert!((pool(&v, &PoolingSpec::mex(-100.0)).unwrap() - 1.0).abs() < 0.05);
        assert_eq!(pool(&v, &PoolingSpec::Sum).unwrap(), 10.0);
        assert_eq!(pool(&v, &PoolingSpec::Max).unwrap(), 4.0);
        assert_eq!(pool(&v, &PoolingSpec::Mean).unwrap(), 2.5);
        // overflow-free at large but finite xi
        assert!((pool(&[800.0, 0.0], &PoolingSpec::mex(1e3)).unwrap() - (800.0 - 2f64.ln() / 1e3)).abs() < 1e-9);
    }

    #[test]
    fn softmax_validation() {
        assert!(pool(&[1.0], &PoolingSpec::softmax(0)).is_err());
        assert!(pool(&[1.0], &PoolingSpec::mex(f64::NAN)).is_err());
        let raw = PoolingSpec::SoftMax { n: 2, raw: true };
        assert_eq!(pool(&[-1.0], &raw), Err(Error::SoftMaxDenominatorZero));
    }

    fn one_template_layer(pooling: PoolingSpec) -> HwLayer {
        HwLayer::new(vec![sig(&[1.0, 0.0])], vec![0.0], cyclic_group(2), pooling).unwrap()
    }

    #[test]
    fn layer_forward_examples() {
        let x = sig(&[1.0, 0.0]);
        assert_eq!(one_template_layer(PoolingSpec::Sum).forward(&x).unwrap(), vec![1.0]);
        assert_eq!(one_template_layer(PoolingSpec::Max).forward(&x).unwrap(), vec![1.0]);
        assert_eq!(one_template_layer(PoolingSpec::Mean).forward(&x).unwrap(), vec![0.5]);
    }

    #[test]
    fn signature_order_is_template_major() {
        let layer = HwLayer::new(
            vec![sig(&[1.0, 0.0]), sig(&[0.0, 1.0])],
            vec![0.0, -0.5],
            FiniteGroup::trivial(2),
            PoolingSpec::Sum,
        )
        .unwrap();
        let out = layer.forward(&sig(&[0.6, 0.8])).unwrap();
        let expect = [0.6, 0.1, 0.8, 0.3];
        assert_eq!(out.len(), 4);
        for (a, b) in out.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn network_examples() {
        let x = sig(&[0.6, 0.8]);
        let l = HwLayer::new(
            vec![sig(&[1.0, 0.0]), sig(&[0.0, 1.0])],
            vec![0.0],
            FiniteGroup::trivial(2),
            PoolingSpec::Sum,
        )
        .unwrap();
        let single = HwNetwork::new(vec![l.clone()]).unwrap();
        assert_eq!(single.forward(&x).unwrap(), l.forward(&x).unwrap());

        let two = HwNetwork::new(vec![l.clone(), l.clone()]).unwrap();
        let first = l.forward(&x).unwrap();
        let expect = l.forward(&Signal::normalize(&first).unwrap()).unwrap();
        assert_eq!(two.forward(&x).unwrap(), expect);

        let dead = HwLayer::new(vec![sig(&[1.0, 0.0])], vec![-1.0, -2.0], cyclic_group(2), PoolingSpec::Sum).unwrap();
        let follow = HwLayer::new(vec![sig(&[1.0, 0.0])], vec![0.0], FiniteGroup::trivial(2), PoolingSpec::Sum).unwrap();
        let net = HwNetwork::new(vec![dead, follow]).unwrap();
        assert_eq!(net.forward(&x), Err(Error::ZeroSignature));

        let bad = HwLayer::new(vec![sig(&[1.0, 0.0, 0.0])], vec![0.0], FiniteGroup::trivial(3), PoolingSpec::Sum).unwrap();
        assert!(HwNetwork::new(vec![l, bad]).is_err());
    }

    #[test]
    fn subset_pooling_breaks_invariance() {
        let subset = FiniteGroup::from_elements_unchecked(vec![
            Permutation::shift(4, 0),
            Permutation::shift(4, 1),
        ])
        .unwrap();
        let layer = HwLayer::new(vec![sig(&[1.0, 0.0, 0.0, 0.0])], vec![0.0], subset, PoolingSpec::Sum).unwrap();
        let gaps: Vec<f64> = (0..4)
            .map(|i| {
                let mut v = [0.0; 4];
                v[i] = 1.0;
                layer.invariance_gap(&sig(&v)).unwrap()
            })
            .collect();
        assert!(gaps.iter().any(|&g| g > 0.0), "{gaps:?}");
    }

    #[test]
    fn config_roundtrip() {
        let json = r#"{"dim":2,"group":"cyclic","templates":[[3,4]],"biases":[0.0,0.1],
            "pooling":{"kind":"mex","xi":2.5}}"#;
        let cfg: LayerConfig = serde_json::from_str(json).unwrap();
        let layer = HwLayer::from_config(&cfg).unwrap();
        assert_eq!(layer.output_dim(), 2);
        assert_eq!(layer.pooling(), PoolingSpec::mex(2.5));
        let back: LayerConfig = serde_json::from_str(&serde_json::to_string(&layer.to_config()).unwrap()).unwrap();
        assert_eq!(HwLayer::from_config(&back).unwrap(), layer);
        let sm: PoolingSpec = serde_json::from_str(r#"{"kind":"softmax","n":3}"#).unwrap();
        assert_eq!(sm, PoolingSpec::softmax(3));
        assert!(serde_json::from_str::<LayerConfig>(r#"{"dim":2,"group":"cyclic","templates":[],"biases":[],"pooling":{"kind":"sum"},"extra":1}"#).is_err());
    }

    fn pooling_kinds() -> Vec<PoolingSpec> {
        vec![
            PoolingSpec::Sum,
            PoolingSpec::Max,
            PoolingSpec::Mean,
            PoolingSpec::softmax(3),
            PoolingSpec::mex(5.0),
        ]
    }

    proptest! {
        #[test]
        fn full_group_pooling_is_invariant(v in prop::collection::vec(-1.0f64..1.0, 2..9), t in prop::collection::vec(-1.0f64..1.0, 9), b in -0.5f64..0.5) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-3) && t.iter().any(|x| x.abs() > 1e-3));
            let d = v.len();
            let tpl = Signal::normalize(&t[..d]);
            prop_assume!(tpl.is_ok());
            for spec in pooling_kinds() {
                let layer = HwLayer::new(vec![tpl.clone().unwrap()], vec![0.0, b], cyclic_group(d), spec).unwrap();
                let gap = layer.invariance_gap(&sig(&v)).unwrap();
                prop_assert!(gap <= 1e-12, "{spec:?} gap {gap}");
            }
        }

        #[test]
        fn mex_is_monotone_and_bounded(vals in prop::collection::vec(0.0f64..5.0, 1..8), a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let m1 = pool(&vals, &PoolingSpec::mex(lo)).unwrap();
            let m2 = pool(&vals, &PoolingSpec::mex(hi)).unwrap();
            prop_assert!(m1 <= m2 + 1e-12);
            let mn = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let mx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m1 >= mn && m1 <= mx);
        }

        #[test]
        fn softmax_order_one_is_scaled_sum(vals in prop::collection::vec(0.0f64..5.0, 1..10)) {
            let s = pool(&vals, &PoolingSpec::softmax(1)).unwrap();
            prop_assert_eq!(s, vals.iter().sum::<f64>() / vals.len() as f64);
        }

        #[test]
        fn rectified_signatures_are_nonnegative(v in prop::collection::vec(-1.0f64..1.0, 4), b in -1.0f64..1.0) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
            for spec in [PoolingSpec::Sum, PoolingSpec::Max, PoolingSpec::Mean, PoolingSpec::softmax(2)] {
                let layer = HwLayer::new(vec![sig(&[0.5, -0.5, 0.5, 0.5])], vec![b], cyclic_group(4), spec).unwrap();
                prop_assert!(layer.forward(&sig(&v)).unwrap().iter().all(|&s| s >= 0.0));
            }
        }
    }
}
