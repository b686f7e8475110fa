//! A single sparse distributed coding field ("mac").
//!
//! A mac is `Q` winner-take-all competitive modules (CMs) of `K` binary units each. Its
//! code for an input is one winner per CM, so sparseness is structural. Inputs reach the
//! units through three binary weight matrices: bottom-up (U), horizontal (H) and top-down
//! (D). Learning is single-trial: every active presynaptic line is wired to every winner.
//!
//! Code selection is driven by familiarity `G`, the mean over CMs of the best normalized
//! unit input. Near `G = 1` the best-matching units win (completion); as `G` falls toward
//! zero the per-CM choice flattens to uniform (separation).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitMatrix;
use crate::error::{Error, Result};
use crate::ops::OpCounts;

/// Code selection parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsaParams {
    pub beta_max: f64,
    /// Exponent applied to `G` in `beta(G) = beta_max * G^g_exponent`.
    pub g_exponent: f64,
    /// At or below this familiarity every CM draws uniformly.
    pub g_uniform_floor: f64,
    /// Exponents `(w_U, w_H, w_D)` for the multiplicative source combination.
    pub source_weights: [f64; 3],
    pub retrieval_argmax: bool,
}

impl Default for CsaParams {
    fn default() -> Self {
        Self {
            beta_max: 12.0,
            g_exponent: 1.0,
            g_uniform_floor: 0.02,
            source_weights: [1.0, 1.0, 1.0],
            retrieval_argmax: true,
        }
    }
}

impl CsaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_max > 0.0 && self.beta_max.is_finite()) {
            return Err(Error::Config(format!(
                "beta_max must be > 0, got {}",
                self.beta_max
            )));
        }
        if !(self.g_exponent >= 1.0 && self.g_exponent.is_finite()) {
            return Err(Error::Config(format!(
                "g_exponent must be >= 1, got {}",
                self.g_exponent
            )));
        }
        if !(0.0..1.0).contains(&self.g_uniform_floor) {
            return Err(Error::Config(format!(
                "g_uniform_floor must lie in [0, 1), got {}",
                self.g_uniform_floor
            )));
        }
        if self
            .source_weights
            .iter()
            .any(|w| !(*w >= 0.0 && w.is_finite()))
        {
            return Err(Error::Config("source weights must be non-negative".into()));
        }
        if self.source_weights[0] <= 0.0 {
            return Err(Error::Config("bottom-up source weight must be > 0".into()));
        }
        Ok(())
    }

    /// Softmax inverse temperature for a given familiarity.
    pub fn expansivity(&self, g: f64) -> f64 {
        self.beta_max * g.clamp(0.0, 1.0).powf(self.g_exponent)
    }

    /// Picks one winner per CM.
    ///
    /// In retrieval mode with `retrieval_argmax` set, each CM takes its highest-`V` unit
    /// (lowest index on ties) and `rng` is not touched. Otherwise each CM samples from
    /// `p(u) ∝ exp(beta(G) * V(u))`, or uniformly when `G <= g_uniform_floor`.
    pub fn select_code<R: Rng + ?Sized>(
        &self,
        acts: &UnitActivations,
        g: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Code {
        self.select_code_counted(acts, g, mode, rng, &mut OpCounts::default())
    }

    pub fn select_code_counted<R: Rng + ?Sized>(
        &self,
        acts: &UnitActivations,
        g: f64,
        mode: Mode,
        rng: &mut R,
        ops: &mut OpCounts,
    ) -> Code {
        let k = acts.k;
        let mut winners = Vec::with_capacity(acts.q);
        if mode == Mode::Retrieval && self.retrieval_argmax {
            for cm in acts.v.chunks_exact(k) {
                ops.unit_updates += k as u64;
                winners.push(argmax_lowest(cm) as u32);
            }
            return Code { winners };
        }

        if g <= self.g_uniform_floor {
            for _ in 0..acts.q {
                ops.unit_updates += k as u64;
                ops.random_draws += 1;
                winners.push(rng.gen_range(0..k as u32));
            }
            return Code { winners };
        }

        let beta = self.expansivity(g);
        let mut weights = vec![0.0f64; k];
        for (cm, &vmax) in acts.v.chunks_exact(k).zip(&acts.cm_max) {
            for (w, &v) in weights.iter_mut().zip(cm) {
                *w = (beta * (v - vmax)).exp();
            }
            ops.unit_updates += k as u64;
            ops.random_draws += 1;
            let total: f64 = weights.iter().sum();
            let mut draw = rng.gen::<f64>() * total;
            let mut pick = k - 1;
            for (i, &w) in weights.iter().enumerate() {
                if draw < w {
                    pick = i;
                    break;
                }
                draw -= w;
            }
            winners.push(pick as u32);
        }
        Code { winners }
    }
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Learning samples codes; retrieval is deterministic when `retrieval_argmax` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Learning,
    Retrieval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacConfig {
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "nU")]
    pub n_u: usize,
    #[serde(rename = "nH", default)]
    pub n_h: usize,
    #[serde(rename = "nD", default)]
    pub n_d: usize,
    #[serde(default)]
    pub csa: CsaParams,
}

impl MacConfig {
    pub fn new(q: usize, k: usize, n_u: usize) -> Self {
        Self {
            q,
            k,
            n_u,
            n_h: 0,
            n_d: 0,
            csa: CsaParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 1 {
            return Err(Error::Config("Q must be >= 1".into()));
        }
        if self.k < 2 {
            return Err(Error::Config("K must be >= 2".into()));
        }
        if self.n_u < 1 {
            return Err(Error::Config("nU must be >= 1".into()));
        }
        if self.k > u32::MAX as usize || self.q.checked_mul(self.k).is_none() {
            return Err(Error::Config("Q*K overflows".into()));
        }
        self.csa.validate()
    }

    pub fn units(&self) -> usize {
        self.q * self.k
    }
}

/// Active presynaptic indices per source, sorted and deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputVector {
    pub active_u: Vec<u32>,
    pub active_h: Vec<u32>,
    pub active_d: Vec<u32>,
}

impl InputVector {
    pub fn new(mut active_u: Vec<u32>, mut active_h: Vec<u32>, mut active_d: Vec<u32>) -> Self {
        for set in [&mut active_u, &mut active_h, &mut active_d] {
            set.sort_unstable();
            set.dedup();
        }
        Self {
            active_u,
            active_h,
            active_d,
        }
    }

    pub fn bottom_up(active_u: Vec<u32>) -> Self {
        Self::new(active_u, Vec::new(), Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.active_u.is_empty() && self.active_h.is_empty() && self.active_d.is_empty()
    }
}

/// One winner per competitive module.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Code {
    pub winners: Vec<u32>,
}

impl Code {
    pub fn new(winners: Vec<u32>) -> Self {
        Self { winners }
    }

    pub fn q(&self) -> usize {
        self.winners.len()
    }

    /// Flat unit indices (`cm * K + winner`) of the active units.
    pub fn units(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.winners
            .iter()
            .enumerate()
            .map(move |(cm, &w)| cm * k + w as usize)
    }

    pub fn check(&self, q: usize, k: usize) -> Result<()> {
        if self.winners.len() != q {
            return Err(Error::Shape(format!(
                "code has {} winners, expected Q={q}",
                self.winners.len()
            )));
        }
        if let Some(w) = self.winners.iter().find(|&&w| w as usize >= k) {
            return Err(Error::Shape(format!("winner {w} out of range for K={k}")));
        }
        Ok(())
    }
}

/// Number of CMs in which two codes pick the same winner.
pub fn code_intersection(a: &Code, b: &Code) -> Result<usize> {
    if a.q() != b.q() {
        return Err(Error::Shape(format!(
            "codes have different Q ({} vs {})",
            a.q(),
            b.q()
        )));
    }
    Ok(a.winners
        .iter()
        .zip(&b.winners)
        .filter(|(x, y)| x == y)
        .count())
}

/// Normalized combined input per unit, plus the per-CM maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitActivations {
    pub q: usize,
    pub k: usize,
    pub v: Vec<f64>,
    pub cm_max: Vec<f64>,
}

impl UnitActivations {
    pub fn zeros(q: usize, k: usize) -> Self {
        Self {
            q,
            k,
            v: vec![0.0; q * k],
            cm_max: vec![0.0; q],
        }
    }

    /// Familiarity: mean over CMs of the best unit's normalized input.
    pub fn familiarity(&self) -> f64 {
        if self.q == 0 {
            return 0.0;
        }
        self.cm_max.iter().sum::<f64>() / self.q as f64
    }
}

pub fn compute_familiarity(acts: &UnitActivations) -> f64 {
    acts.familiarity()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mac {
    config: MacConfig,
    w_u: BitMatrix,
    w_h: BitMatrix,
    w_d: BitMatrix,
    stored_count: u64,
}

impl Mac {
    pub fn new(config: MacConfig) -> Result<Self> {
        config.validate()?;
        let units = config.units();
        Ok(Self {
            w_u: BitMatrix::zeros(units, config.n_u),
            w_h: BitMatrix::zeros(units, config.n_h),
            w_d: BitMatrix::zeros(units, config.n_d),
            stored_count: 0,
            config,
        })
    }

    pub(crate) fn from_parts(
        config: MacConfig,
        w_u: BitMatrix,
        w_h: BitMatrix,
        w_d: BitMatrix,
        stored_count: u64,
    ) -> Result<Self> {
        config.validate()?;
        let units = config.units();
        let dims_ok = [(&w_u, config.n_u), (&w_h, config.n_h), (&w_d, config.n_d)]
            .iter()
            .all(|(m, n)| m.rows() == units && m.cols() == *n);
        if !dims_ok {
            return Err(Error::Format(
                "weight matrix dimensions disagree with header".into(),
            ));
        }
        Ok(Self {
            config,
            w_u,
            w_h,
            w_d,
            stored_count,
        })
    }

    pub fn config(&self) -> &MacConfig {
        &self.config
    }

    pub fn weights_u(&self) -> &BitMatrix {
        &self.w_u
    }

    pub fn weights_h(&self) -> &BitMatrix {
        &self.w_h
    }

    pub fn weights_d(&self) -> &BitMatrix {
        &self.w_d
    }

    /// Number of learning events applied. Diagnostic only; code selection never reads it.
    pub fn stored_count(&self) -> u64 {
        self.stored_count
    }

    pub fn weight_count(&self) -> u64 {
        (self.config.units() * (self.config.n_u + self.config.n_h + self.config.n_d)) as u64
    }

    pub fn ones_count(&self) -> u64 {
        self.w_u.count_ones() + self.w_h.count_ones() + self.w_d.count_ones()
    }

    fn check_input(&self, input: &InputVector) -> Result<()> {
        let sources = [
            ("U", &input.active_u, self.config.n_u),
            ("H", &input.active_h, self.config.n_h),
            ("D", &input.active_d, self.config.n_d),
        ];
        for (name, set, n) in sources {
            if let Some(&j) = set.iter().find(|&&j| j as usize >= n) {
                return Err(Error::Shape(format!(
                    "{name} index {j} out of range (n{name}={n})"
                )));
            }
        }
        Ok(())
    }

    pub fn compute_activations(&self, input: &InputVector) -> Result<UnitActivations> {
        self.compute_activations_counted(input, &mut OpCounts::default())
    }

    /// Per-unit `V(u) = Π_X (matches_X(u) / |active_X|)^{w_X}` over non-empty sources.
    pub fn compute_activations_counted(
        &self,
        input: &InputVector,
        ops: &mut OpCounts,
    ) -> Result<UnitActivations> {
        self.check_input(input)?;
        if input.is_empty() {
            return Err(Error::EmptyInput);
        }
        let (q, k) = (self.config.q, self.config.k);
        let mut acts = UnitActivations::zeros(q, k);
        acts.v.iter_mut().for_each(|v| *v = 1.0);

        let weights = self.config.csa.source_weights;
        let sources = [
            (&self.w_u, &input.active_u, weights[0]),
            (&self.w_h, &input.active_h, weights[1]),
            (&self.w_d, &input.active_d, weights[2]),
        ];
        for (matrix, active, exponent) in sources {
            if active.is_empty() {
                continue;
            }
            let denom = active.len() as f64;
            for (u, v) in acts.v.iter_mut().enumerate() {
                let row = matrix.row(u);
                let mut hits = 0u32;
                for &j in active {
                    let j = j as usize;
                    hits += ((row[j >> 6] >> (j & 63)) & 1) as u32;
                }
                ops.weight_row_reads += 1;
                ops.weight_bit_reads += active.len() as u64;
                let frac = f64::from(hits) / denom;
                *v *= if exponent == 1.0 {
                    frac
                } else {
                    frac.powf(exponent)
                };
            }
        }

        for (cm, max) in acts.v.chunks_exact(k).zip(acts.cm_max.iter_mut()) {
            *max = cm.iter().copied().fold(0.0, f64::max);
        }
        ops.unit_updates += (q * k) as u64;
        Ok(acts)
    }

    pub fn select_code<R: Rng + ?Sized>(
        &self,
        acts: &UnitActivations,
        g: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Code {
        self.config.csa.select_code(acts, g, mode, rng)
    }

    /// Wires every active presynaptic line to every winner. Returns the number of weights
    /// that went from 0 to 1; no weight is ever cleared.
    pub fn learn(&mut self, input: &InputVector, code: &Code) -> Result<usize> {
        self.learn_counted(input, code, &mut OpCounts::default())
    }

    pub fn learn_counted(
        &mut self,
        input: &InputVector,
        code: &Code,
        ops: &mut OpCounts,
    ) -> Result<usize> {
        self.check_input(input)?;
        code.check(self.config.q, self.config.k)?;
        let k = self.config.k;
        let mut fresh = 0;
        let sources = [
            (&mut self.w_u, &input.active_u),
            (&mut self.w_h, &input.active_h),
            (&mut self.w_d, &input.active_d),
        ];
        for (matrix, active) in sources {
            for u in code.units(k) {
                for &j in active {
                    fresh += usize::from(matrix.set(u, j as usize));
                }
                ops.weight_writes += active.len() as u64;
            }
        }
        self.stored_count += 1;
        Ok(fresh)
    }

    /// Activations, familiarity and code in one call.
    pub fn encode<R: Rng + ?Sized>(
        &self,
        input: &InputVector,
        mode: Mode,
        rng: &mut R,
        ops: &mut OpCounts,
    ) -> Result<(Code, f64)> {
        let acts = self.compute_activations_counted(input, ops)?;
        let g = acts.familiarity();
        let code = self
            .config
            .csa
            .select_code_counted(&acts, g, mode, rng, ops);
        Ok((code, g))
    }
}
