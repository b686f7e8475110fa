use rayon::prelude::*;

use super::config::{LevelConfig, ModelConfig, Placement};
use super::trace::{ActiveMac, BinaryVector, Trace, TraceStep};
use crate::bits::BitMatrix;
use crate::classify::ClassField;
use crate::error::{Error, Result};
use crate::mac::{Code, InputVector, Mac, MacConfig, Mode};
use crate::ops::OpCounts;
use crate::preprocess::BinaryFrame;
use crate::seed;

/// One level of macs together with its receptive-field wiring.
#[derive(Debug, Clone)]
pub struct Level {
    pub(crate) config: LevelConfig,
    pub(crate) placement: Placement,
    /// Units per element of the level below (1 for pixels).
    pub(crate) lower_units: usize,
    /// Per mac: lower-grid element indices in its receptive field.
    pub(crate) rfs: Vec<Vec<u32>>,
    /// Per lower element: macs of this level whose receptive field contains it.
    pub(crate) covering: Vec<Vec<u32>>,
    /// Per mac: overlying macs feeding top-down input, in presynaptic order.
    pub(crate) parents: Vec<Vec<u32>>,
    pub(crate) pi_max: Vec<usize>,
    pub(crate) macs: Vec<Mac>,
    pub(crate) recon: Vec<Option<BitMatrix>>,
}

impl Level {
    pub fn config(&self) -> &LevelConfig {
        &self.config
    }

    pub fn grid(&self) -> [usize; 2] {
        self.config.grid
    }

    pub fn mac_count(&self) -> usize {
        self.macs.len()
    }

    pub fn mac(&self, index: usize) -> &Mac {
        &self.macs[index]
    }

    pub fn macs(&self) -> &[Mac] {
        &self.macs
    }

    pub fn rf(&self, index: usize) -> &[u32] {
        &self.rfs[index]
    }

    pub fn covering(&self, lower_element: usize) -> &[u32] {
        &self.covering[lower_element]
    }

    pub fn pi_max(&self, index: usize) -> usize {
        self.pi_max[index]
    }

    pub fn units_per_mac(&self) -> usize {
        self.config.mac_cfg.q * self.config.mac_cfg.k
    }

    pub fn reconstruction(&self, index: usize) -> Option<&BitMatrix> {
        self.recon[index].as_ref()
    }

    fn position(&self, index: usize) -> [usize; 2] {
        [index / self.config.grid[1], index % self.config.grid[1]]
    }

    /// A mac is eligible iff its receptive field holds between `pi_min` and its `pi_max`
    /// active elements, and at least one.
    fn gate(&self, index: usize, lower_active: &[bool]) -> bool {
        let count = self.rfs[index]
            .iter()
            .filter(|&&e| lower_active[e as usize])
            .count();
        count >= self.config.pi_min.max(1) && count <= self.pi_max[index]
    }

    /// Bottom-up presynaptic indices given the lower level's active elements.
    fn bottom_up(&self, index: usize, lower: &LowerState<'_>) -> Vec<u32> {
        let rf = &self.rfs[index];
        match lower {
            LowerState::Pixels(frame) => rf
                .iter()
                .enumerate()
                .filter(|(_, &e)| frame.bits[e as usize])
                .map(|(p, _)| p as u32)
                .collect(),
            LowerState::Codes { codes, k } => {
                let mut out = Vec::new();
                for (p, &e) in rf.iter().enumerate() {
                    if let Some(code) = &codes[e as usize] {
                        let base = p * self.lower_units;
                        out.extend(code.units(*k).map(|u| (base + u) as u32));
                    }
                }
                out
            }
        }
    }
}

enum LowerState<'a> {
    Pixels(&'a BinaryFrame),
    Codes { codes: &'a [Option<Code>], k: usize },
}

impl LowerState<'_> {
    fn active(&self) -> Vec<bool> {
        match self {
            LowerState::Pixels(frame) => frame.bits.clone(),
            LowerState::Codes { codes, .. } => codes.iter().map(Option::is_some).collect(),
        }
    }
}

/// Per-sequence dynamic state: current codes, persistence deadlines and the step index.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    t: usize,
    codes: Vec<Vec<Option<Code>>>,
    /// Step at which each mac's current code stops persisting.
    until: Vec<Vec<usize>>,
}

impl RunState {
    pub fn step(&self) -> usize {
        self.t
    }

    pub fn codes(&self, level: usize) -> &[Option<Code>] {
        &self.codes[level - 1]
    }
}

/// Summary sizes of a built model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ModelStats {
    pub macs: usize,
    pub units: usize,
    pub weights: u64,
    pub weights_set: u64,
    pub stored: u64,
}

/// Result of one frame: the trace step and the primitive operations it cost.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub step: TraceStep,
    pub ops: OpCounts,
    /// Mean familiarity of the macs that chose a fresh code, per level.
    pub familiarity: Vec<Option<f64>>,
}

struct Decision {
    mac: usize,
    code: Code,
    input: InputVector,
    g: f64,
    ops: OpCounts,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub(crate) config: ModelConfig,
    pub(crate) levels: Vec<Level>,
    /// Frames processed in learning mode; keys the learning-mode random streams.
    pub(crate) clock: u64,
    pub(crate) class_field: Option<ClassField>,
}

impl Model {
    /// Instantiates every mac with zero weights and materializes receptive fields.
    pub fn build(config: ModelConfig) -> Result<Self> {
        if config.levels.is_empty() {
            return Err(Error::Config("model needs at least one level".into()));
        }
        if config.input_dims.contains(&0) {
            return Err(Error::Config("input_dims must be positive".into()));
        }
        let mut levels: Vec<Level> = Vec::with_capacity(config.levels.len());
        for (i, lc) in config.levels.iter().enumerate() {
            if lc.persistence == 0 {
                return Err(Error::Config(format!(
                    "level {} persistence must be >= 1",
                    i + 1
                )));
            }
            if i > 0 && lc.persistence < config.levels[i - 1].persistence {
                return Err(Error::Config(
                    "persistence must not decrease with level".into(),
                ));
            }
            let placement = Placement {
                lower: config.lower_dims(i),
                grid: lc.grid,
                shape: lc.rf_shape,
                stride: lc.rf_stride,
            };
            placement
                .validate()
                .map_err(|e| Error::Config(format!("level {}: {e}", i + 1)))?;

            let lower_units = if i == 0 {
                1
            } else {
                let below = &config.levels[i - 1].mac_cfg;
                below.q * below.k
            };
            let lower_count = placement.lower[0] * placement.lower[1];
            let mut rfs = Vec::with_capacity(lc.grid[0] * lc.grid[1]);
            let mut covering = vec![Vec::new(); lower_count];
            for r in 0..lc.grid[0] {
                for c in 0..lc.grid[1] {
                    let rf = placement.elements(r, c);
                    for &e in &rf {
                        covering[e as usize].push(rfs.len() as u32);
                    }
                    rfs.push(rf);
                }
            }

            let mut pi_max = Vec::with_capacity(rfs.len());
            for rf in &rfs {
                let bound = lc.pi_max.unwrap_or(rf.len() / 2).min(rf.len());
                if lc.pi_min > bound {
                    return Err(Error::Config(format!(
                        "level {}: pi_min {} exceeds pi_max {} for a {}-element field",
                        i + 1,
                        lc.pi_min,
                        bound,
                        rf.len()
                    )));
                }
                pi_max.push(bound);
            }
            if let Some(p) = lc.pi_max {
                let full = lc.rf_shape[0] * lc.rf_shape[1];
                if p > full {
                    return Err(Error::Config(format!(
                        "level {}: pi_max {p} exceeds the {full}-element receptive field",
                        i + 1
                    )));
                }
            }

            levels.push(Level {
                config: lc.clone(),
                placement,
                lower_units,
                rfs,
                covering,
                parents: Vec::new(),
                pi_max,
                macs: Vec::new(),
                recon: Vec::new(),
            });
        }

        // top-down parents come from the covering lists of the level above
        for i in 0..levels.len() {
            let count = levels[i].rfs.len();
            levels[i].parents = match levels.get(i + 1) {
                Some(above) if levels[i].config.top_down => {
                    (0..count).map(|m| above.covering[m].clone()).collect()
                }
                _ => vec![Vec::new(); count],
            };
            if levels[i].config.top_down && i + 1 == levels.len() {
                return Err(Error::Config(
                    "the top level cannot take top-down input".into(),
                ));
            }
        }

        for i in 0..levels.len() {
            let above_units = levels.get(i + 1).map_or(0, Level::units_per_mac);
            let level = &mut levels[i];
            let lc = &level.config;
            let units = lc.mac_cfg.q * lc.mac_cfg.k;
            let mut macs = Vec::with_capacity(level.rfs.len());
            let mut recon = Vec::with_capacity(level.rfs.len());
            for (m, rf) in level.rfs.iter().enumerate() {
                let cfg = MacConfig {
                    q: lc.mac_cfg.q,
                    k: lc.mac_cfg.k,
                    n_u: rf.len() * level.lower_units,
                    n_h: if lc.horizontal { units } else { 0 },
                    n_d: level.parents[m].len() * above_units,
                    csa: lc.mac_cfg.csa.clone(),
                };
                macs.push(
                    Mac::new(cfg).map_err(|e| Error::Config(format!("level {}: {e}", i + 1)))?,
                );
                recon.push(
                    lc.reconstruct
                        .then(|| BitMatrix::zeros(units, rf.len() * level.lower_units)),
                );
            }
            level.macs = macs;
            level.recon = recon;
        }

        let class_field = config.classes.map(|c| {
            let top = levels.last().expect("non-empty");
            ClassField::new(c, top.mac_count() * top.units_per_mac())
        });
        Ok(Self {
            config,
            levels,
            clock: 0,
            class_field,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Level by 1-based number (1 = the first level above the input).
    pub fn level(&self, level: usize) -> &Level {
        &self.levels[level - 1]
    }

    pub fn top(&self) -> &Level {
        self.levels.last().expect("non-empty")
    }

    pub fn class_field(&self) -> Option<&ClassField> {
        self.class_field.as_ref()
    }

    pub fn class_field_mut(&mut self) -> Option<&mut ClassField> {
        self.class_field.as_mut()
    }

    /// Length of the flat top-level unit vector.
    pub fn top_units(&self) -> usize {
        let top = self.top();
        top.mac_count() * top.units_per_mac()
    }

    pub fn stats(&self) -> ModelStats {
        let mut s = ModelStats {
            macs: 0,
            units: 0,
            weights: 0,
            weights_set: 0,
            stored: 0,
        };
        for level in &self.levels {
            s.macs += level.mac_count();
            s.units += level.mac_count() * level.units_per_mac();
            for (mac, recon) in level.macs.iter().zip(&level.recon) {
                s.weights += mac.weight_count();
                s.weights_set += mac.ones_count();
                s.stored += mac.stored_count();
                if let Some(r) = recon {
                    s.weights += (r.rows() * r.cols()) as u64;
                    s.weights_set += r.count_ones();
                }
            }
        }
        s
    }

    pub(crate) fn shape(&self) -> Vec<[usize; 4]> {
        self.levels
            .iter()
            .map(|l| {
                [
                    l.config.grid[0],
                    l.config.grid[1],
                    l.config.mac_cfg.q,
                    l.config.mac_cfg.k,
                ]
            })
            .collect()
    }

    pub fn new_state(&self) -> RunState {
        RunState {
            t: 0,
            codes: self
                .levels
                .iter()
                .map(|l| vec![None; l.mac_count()])
                .collect(),
            until: self.levels.iter().map(|l| vec![0; l.mac_count()]).collect(),
        }
    }

    /// Macs of `level` whose receptive-field activity lies inside the gate bounds.
    /// `lower_active` flags the active elements of the level below (pixels for level 1).
    pub fn gate_macs(&self, level: usize, lower_active: &[bool]) -> Result<Vec<usize>> {
        let lvl = self
            .levels
            .get(level.wrapping_sub(1))
            .ok_or_else(|| Error::Shape(format!("no level {level}")))?;
        let expected = lvl.placement.lower[0] * lvl.placement.lower[1];
        if lower_active.len() != expected {
            return Err(Error::Shape(format!(
                "{} lower elements given, level {level} expects {expected}",
                lower_active.len()
            )));
        }
        Ok((0..lvl.mac_count())
            .filter(|&m| lvl.gate(m, lower_active))
            .collect())
    }

    fn check_frame(&self, frame: &BinaryFrame) -> Result<()> {
        let [h, w] = self.config.input_dims;
        if (frame.height, frame.width) != (h, w) {
            return Err(Error::Shape(format!(
                "frame is {}x{} (w x h), model expects {w}x{h}",
                frame.width, frame.height
            )));
        }
        Ok(())
    }

    /// Runs one frame bottom-up. In learning mode the chosen codes are stored; in
    /// retrieval mode the model is left untouched (see [`Model::recall_frame`]).
    pub fn process_frame(
        &mut self,
        state: &mut RunState,
        frame: &BinaryFrame,
        mode: Mode,
    ) -> Result<FrameOutput> {
        match mode {
            Mode::Retrieval => self.recall_frame(state, frame),
            Mode::Learning => {
                self.check_frame(frame)?;
                let key = self.clock;
                self.clock += 1;
                let (mut out, decisions) = self.run_frame(state, frame, Mode::Learning, key);
                out.ops += self.apply_learning(state, frame, &decisions);
                Ok(out)
            }
        }
    }

    /// Retrieval-mode frame processing through a shared reference.
    pub fn recall_frame(&self, state: &mut RunState, frame: &BinaryFrame) -> Result<FrameOutput> {
        self.check_frame(frame)?;
        let key = state.t as u64;
        Ok(self.run_frame(state, frame, Mode::Retrieval, key).0)
    }

    /// Chooses codes level by level and advances `state`; returns the fresh decisions so
    /// the caller can store them. A level's codes depend only on the levels below at this
    /// step and on the previous step, never on weights written during this step.
    fn run_frame(
        &self,
        state: &mut RunState,
        frame: &BinaryFrame,
        mode: Mode,
        key: u64,
    ) -> (FrameOutput, Vec<Vec<Decision>>) {
        let t = state.t;
        let seed = self.config.seed;
        let prev_codes = state.codes.clone();
        let mut ops = OpCounts::default();
        let mut familiarity = Vec::with_capacity(self.levels.len());
        let mut active = Vec::new();
        let mut all_decisions = Vec::with_capacity(self.levels.len());

        for (li, level) in self.levels.iter().enumerate() {
            let next = {
                let lower = self.lower_state(li, frame, state);
                let lower_active = lower.active();
                let above_k = self.config.levels.get(li + 1).map(|l| l.mac_cfg.k);
                let above_prev = prev_codes.get(li + 1);
                let level_key = li as u64 + 1;

                let persisting: Vec<bool> = (0..level.mac_count())
                    .map(|m| state.codes[li][m].is_some() && state.until[li][m] > t)
                    .collect();

                let decisions: Vec<Decision> = (0..level.mac_count())
                    .into_par_iter()
                    .filter(|&m| !persisting[m] && level.gate(m, &lower_active))
                    .map(|m| {
                        let mut mac_ops = OpCounts::default();
                        let active_u = level.bottom_up(m, &lower);
                        let active_h = match &prev_codes[li][m] {
                            Some(code) if level.config.horizontal => code
                                .units(level.config.mac_cfg.k)
                                .map(|u| u as u32)
                                .collect(),
                            _ => Vec::new(),
                        };
                        let mut active_d = Vec::new();
                        if let (Some(prev_above), Some(k_above)) = (above_prev, above_k) {
                            let span = self.levels[li + 1].units_per_mac();
                            for (p, &parent) in level.parents[m].iter().enumerate() {
                                if let Some(code) = &prev_above[parent as usize] {
                                    active_d
                                        .extend(code.units(k_above).map(|u| (p * span + u) as u32));
                                }
                            }
                        }
                        let input = InputVector::new(active_u, active_h, active_d);
                        let mut rng = seed::stream(seed, &[level_key, m as u64, key]);
                        let (code, g) = level.macs[m]
                            .encode(&input, mode, &mut rng, &mut mac_ops)
                            .expect("gated input is non-empty and in range");
                        Decision {
                            mac: m,
                            code,
                            input,
                            g,
                            ops: mac_ops,
                        }
                    })
                    .collect();

                familiarity.push(if decisions.is_empty() {
                    None
                } else {
                    Some(decisions.iter().map(|d| d.g).sum::<f64>() / decisions.len() as f64)
                });

                // persisting macs hold, fresh decisions replace, the rest go quiet
                let mut next: Vec<Option<Code>> = (0..level.mac_count())
                    .map(|m| persisting[m].then(|| state.codes[li][m].clone()).flatten())
                    .collect();
                for d in &decisions {
                    ops += d.ops;
                    next[d.mac] = Some(d.code.clone());
                    state.until[li][d.mac] = t + level.config.persistence;
                }
                all_decisions.push(decisions);
                next
            };

            for (m, code) in next.iter().enumerate() {
                if let Some(code) = code {
                    active.push(ActiveMac {
                        level: li + 1,
                        mac: level.position(m),
                        code: code.clone(),
                    });
                }
            }
            state.codes[li] = next;
        }

        let step = TraceStep {
            t,
            active,
            active_pixels: frame.count_ones(),
        };
        state.t += 1;
        let out = FrameOutput {
            step,
            ops,
            familiarity,
        };
        (out, all_decisions)
    }

    fn lower_state<'a>(
        &self,
        li: usize,
        frame: &'a BinaryFrame,
        state: &'a RunState,
    ) -> LowerState<'a> {
        if li == 0 {
            LowerState::Pixels(frame)
        } else {
            LowerState::Codes {
                codes: &state.codes[li - 1],
                k: self.levels[li - 1].config.mac_cfg.k,
            }
        }
    }

    /// Stores fresh codes and, where enabled, the top-down projection of every active mac
    /// onto its receptive field's currently active inputs.
    fn apply_learning(
        &mut self,
        state: &RunState,
        frame: &BinaryFrame,
        decisions: &[Vec<Decision>],
    ) -> OpCounts {
        let mut ops = OpCounts::default();
        for (li, level_decisions) in decisions.iter().enumerate() {
            let mut by_mac: Vec<Option<&Decision>> = vec![None; self.levels[li].mac_count()];
            for d in level_decisions {
                by_mac[d.mac] = Some(d);
            }
            let learn_ops: Vec<OpCounts> = self.levels[li]
                .macs
                .par_iter_mut()
                .zip(by_mac.par_iter())
                .map(|(mac, d)| {
                    let mut o = OpCounts::default();
                    if let Some(d) = d {
                        mac.learn_counted(&d.input, &d.code, &mut o)
                            .expect("decision inputs match the mac");
                    }
                    o
                })
                .collect();
            for o in learn_ops {
                ops += o;
            }

            if self.levels[li].config.reconstruct {
                let level = &self.levels[li];
                let lower = self.lower_state(li, frame, state);
                let inputs: Vec<Option<Vec<u32>>> = (0..level.mac_count())
                    .map(|m| {
                        state.codes[li][m]
                            .as_ref()
                            .map(|_| level.bottom_up(m, &lower))
                    })
                    .collect();
                let k = level.config.mac_cfg.k;
                let level = &mut self.levels[li];
                for (m, input) in inputs.into_iter().enumerate() {
                    if let (Some(code), Some(input), Some(r)) =
                        (&state.codes[li][m], input, level.recon[m].as_mut())
                    {
                        for u in code.units(k) {
                            for &j in &input {
                                r.set(u, j as usize);
                            }
                        }
                    }
                }
            }
        }
        ops
    }

    /// Resets persistence and horizontal context, then processes every frame in order.
    pub fn process_sequence(&mut self, frames: &[BinaryFrame], mode: Mode) -> Result<Trace> {
        if frames.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut state = self.new_state();
        let mut trace = Trace::new(self.shape());
        for frame in frames {
            trace
                .steps
                .push(self.process_frame(&mut state, frame, mode)?.step);
        }
        Ok(trace)
    }

    /// Retrieval-mode sequence processing through a shared reference.
    pub fn recall_sequence(&self, frames: &[BinaryFrame]) -> Result<Trace> {
        if frames.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut state = self.new_state();
        let mut trace = Trace::new(self.shape());
        for frame in frames {
            trace.steps.push(self.recall_frame(&mut state, frame)?.step);
        }
        Ok(trace)
    }

    /// Flat binary vector over all top-level units, set for the winners active on the
    /// trace's final step.
    pub fn top_code_vector(&self, trace: &Trace) -> Result<BinaryVector> {
        let last = trace.steps.last().ok_or(Error::EmptySequence)?;
        if trace.shape != self.shape() {
            return Err(Error::Shape(
                "trace was recorded on a different model".into(),
            ));
        }
        Ok(self.top_vector_of(&last.active))
    }

    pub(crate) fn top_vector_of(&self, active: &[ActiveMac]) -> BinaryVector {
        let depth = self.depth();
        let top = self.top();
        let (cols, k, units) = (top.grid()[1], top.config.mac_cfg.k, top.units_per_mac());
        let mut ones: Vec<u32> = active
            .iter()
            .filter(|a| a.level == depth)
            .flat_map(|a| {
                let base = (a.mac[0] * cols + a.mac[1]) * units;
                a.code.units(k).map(move |u| (base + u) as u32)
            })
            .collect();
        ones.sort_unstable();
        BinaryVector {
            len: self.top_units(),
            ones,
        }
    }

    /// Reconstructs an input frame by following the learned top-down projections from
    /// the given codes at `level` down to the pixels.
    pub fn decode_topdown(&self, level: usize, codes: &[(usize, Code)]) -> Result<BinaryFrame> {
        if level == 0 || level > self.depth() {
            return Err(Error::Shape(format!("no level {level}")));
        }
        if let Some(l) = self.levels[..level]
            .iter()
            .position(|l| !l.config.reconstruct)
        {
            return Err(Error::Config(format!(
                "level {} has no top-down projection",
                l + 1
            )));
        }
        let lvl = &self.levels[level - 1];
        let k = lvl.config.mac_cfg.k;
        let mut units: Vec<Vec<usize>> = vec![Vec::new(); lvl.mac_count()];
        for (m, code) in codes {
            if *m >= lvl.mac_count() {
                return Err(Error::Shape(format!("mac {m} out of range")));
            }
            code.check(lvl.config.mac_cfg.q, k)?;
            units[*m].extend(code.units(k));
        }

        for li in (0..level).rev() {
            let l = &self.levels[li];
            let lower_count = l.placement.lower[0] * l.placement.lower[1];
            if li == 0 {
                let mut bits = vec![false; lower_count];
                for (m, active) in units.iter().enumerate() {
                    let recon = l.recon[m].as_ref().expect("checked above");
                    for &u in active {
                        for j in recon.row_ones(u) {
                            bits[l.rfs[m][j] as usize] = true;
                        }
                    }
                }
                let [h, w] = self.config.input_dims;
                return BinaryFrame::from_bits(w, h, bits);
            }
            let mut lower_units: Vec<Vec<usize>> = vec![Vec::new(); lower_count];
            for (m, active) in units.iter().enumerate() {
                let recon = l.recon[m].as_ref().expect("checked above");
                for &u in active {
                    for j in recon.row_ones(u) {
                        let (pos, unit) = (j / l.lower_units, j % l.lower_units);
                        lower_units[l.rfs[m][pos] as usize].push(unit);
                    }
                }
            }
            for v in &mut lower_units {
                v.sort_unstable();
                v.dedup();
            }
            units = lower_units;
        }
        unreachable!("level 1 returns the frame")
    }
}
