use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::history::HistoryContext;
use crate::maze::{Action, OBS_CHANNELS};

/// Per-step input: observation channels followed by the incoming-action one-hot.
pub const INPUT_WIDTH: usize = OBS_CHANNELS + Action::COUNT;

/// Position channels are scaled by this factor before entering the encoder.
pub const DEFAULT_POSITION_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_width: usize,
    pub hidden: usize,
    pub skills: usize,
    pub horizon: usize,
    pub include_actions: bool,
    pub position_scale: f64,
}

impl Architecture {
    pub fn new(hidden: usize, skills: usize, horizon: usize, include_actions: bool) -> Self {
        Architecture {
            input_width: INPUT_WIDTH,
            hidden,
            skills,
            horizon,
            include_actions,
            position_scale: DEFAULT_POSITION_SCALE,
        }
    }

    /// Number of trainable scalars.
    pub fn param_count(&self) -> usize {
        let h = self.hidden;
        3 * h * self.input_width + 3 * h * h + 3 * h + self.skills * h + self.skills
    }

    fn layout(&self) -> Layout {
        let (h, i, z) = (self.hidden, self.input_width, self.skills);
        let w = 0;
        let u = w + 3 * h * i;
        let b = u + 3 * h * h;
        let wo = b + 3 * h;
        let bo = wo + z * h;
        Layout { w, u, b, wo, bo }
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    w: usize,
    u: usize,
    b: usize,
    wo: usize,
    bo: usize,
}

/// Encodes a context as a flat `len × input_width` sequence, oldest first.
pub fn encode_context(arch: &Architecture, h: &HistoryContext) -> Vec<f64> {
    let skip = h.len().saturating_sub(arch.horizon);
    let mut out = Vec::with_capacity((h.len() - skip) * arch.input_width);
    for e in h.entries().skip(skip) {
        let ch = e.obs.channels();
        out.push(ch[0] * arch.position_scale);
        out.push(ch[1] * arch.position_scale);
        out.extend_from_slice(&ch[2..]);
        let mut onehot = [0.0; Action::COUNT];
        if arch.include_actions {
            if let Some(a) = e.action_in {
                onehot[a.index()] = 1.0;
            }
        }
        out.extend_from_slice(&onehot);
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gated recurrent encoder with an affine head producing one value per skill.
///
/// Gate equations (per step, `h₀ = 0`):
/// `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
/// `n = tanh(W_n x + U_n (r ⊙ h) + b_n)`, `h' = (1 − z) ⊙ n + z ⊙ h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillValueModel {
    arch: Architecture,
    params: Vec<f64>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    len: usize,
    hs: Vec<f64>,
    zs: Vec<f64>,
    rs: Vec<f64>,
    ns: Vec<f64>,
}

impl ForwardCache {
    fn final_hidden(&self, hidden: usize) -> &[f64] {
        &self.hs[self.len * hidden..(self.len + 1) * hidden]
    }
}

impl SkillValueModel {
    pub fn zeros(arch: Architecture) -> Self {
        SkillValueModel {
            params: vec![0.0; arch.param_count()],
            arch,
        }
    }

    /// Uniform `±1/√H` initialisation for every parameter.
    pub fn random<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let bound = 1.0 / (arch.hidden as f64).sqrt();
        let params = (0..arch.param_count())
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        SkillValueModel { arch, params }
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Option<Self> {
        (params.len() == arch.param_count()).then_some(SkillValueModel { arch, params })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `Q(h, ·)` for a history context.
    pub fn forward(&self, h: &HistoryContext) -> Vec<f64> {
        self.forward_encoded(&encode_context(&self.arch, h))
    }

    pub fn forward_encoded(&self, input: &[f64]) -> Vec<f64> {
        let mut cache = ForwardCache::default();
        self.forward_cached(input, &mut cache)
    }

    pub(crate) fn forward_cached(&self, input: &[f64], cache: &mut ForwardCache) -> Vec<f64> {
        let Architecture {
            input_width: iw,
            hidden: hd,
            skills: nz,
            ..
        } = self.arch;
        let l = self.arch.layout();
        let p = &self.params;
        let len = input.len() / iw;
        cache.len = len;
        cache.hs.clear();
        cache.hs.resize((len + 1) * hd, 0.0);
        cache.zs.clear();
        cache.zs.resize(len * hd, 0.0);
        cache.rs.clear();
        cache.rs.resize(len * hd, 0.0);
        cache.ns.clear();
        cache.ns.resize(len * hd, 0.0);
        let mut rh = vec![0.0; hd];

        for t in 0..len {
            let x = &input[t * iw..(t + 1) * iw];
            let (hprev, rest) = cache.hs.split_at_mut((t + 1) * hd);
            let hprev = &hprev[t * hd..];
            let hnext = &mut rest[..hd];
            // Reset and update gates.
            for j in 0..hd {
                let mut az = p[l.b + j];
                let mut ar = p[l.b + hd + j];
                let wz = &p[l.w + j * iw..l.w + (j + 1) * iw];
                let wr = &p[l.w + (hd + j) * iw..l.w + (hd + j + 1) * iw];
                for k in 0..iw {
                    az += wz[k] * x[k];
                    ar += wr[k] * x[k];
                }
                let uz = &p[l.u + j * hd..l.u + (j + 1) * hd];
                let ur = &p[l.u + (hd + j) * hd..l.u + (hd + j + 1) * hd];
                for k in 0..hd {
                    az += uz[k] * hprev[k];
                    ar += ur[k] * hprev[k];
                }
                cache.zs[t * hd + j] = sigmoid(az);
                cache.rs[t * hd + j] = sigmoid(ar);
            }
            for k in 0..hd {
                rh[k] = cache.rs[t * hd + k] * hprev[k];
            }
            for j in 0..hd {
                let mut an = p[l.b + 2 * hd + j];
                let wn = &p[l.w + (2 * hd + j) * iw..l.w + (2 * hd + j + 1) * iw];
                for k in 0..iw {
                    an += wn[k] * x[k];
                }
                let un = &p[l.u + (2 * hd + j) * hd..l.u + (2 * hd + j + 1) * hd];
                for k in 0..hd {
                    an += un[k] * rh[k];
                }
                let n = an.tanh();
                cache.ns[t * hd + j] = n;
                let z = cache.zs[t * hd + j];
                hnext[j] = (1.0 - z) * n + z * hprev[j];
            }
        }

        let hlast = cache.final_hidden(hd);
        (0..nz)
            .map(|s| {
                let row = &p[l.wo + s * hd..l.wo + (s + 1) * hd];
                p[l.bo + s] + row.iter().zip(hlast).map(|(w, h)| w * h).sum::<f64>()
            })
            .collect()
    }

    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂Q` for the cached pass.
    pub(crate) fn backward(
        &self,
        input: &[f64],
        cache: &ForwardCache,
        dq: &[f64],
        grad: &mut [f64],
    ) {
        let Architecture {
            input_width: iw,
            hidden: hd,
            skills: nz,
            ..
        } = self.arch;
        let l = self.arch.layout();
        let p = &self.params;
        let len = cache.len;

        let hlast = cache.final_hidden(hd);
        let mut dh = vec![0.0; hd];
        for s in 0..nz {
            if dq[s] == 0.0 {
                continue;
            }
            grad[l.bo + s] += dq[s];
            for j in 0..hd {
                grad[l.wo + s * hd + j] += dq[s] * hlast[j];
                dh[j] += dq[s] * p[l.wo + s * hd + j];
            }
        }

        let mut dh_prev = vec![0.0; hd];
        let mut da_z = vec![0.0; hd];
        let mut da_r = vec![0.0; hd];
        let mut da_n = vec![0.0; hd];
        let mut rh = vec![0.0; hd];
        let mut d_rh = vec![0.0; hd];
        for t in (0..len).rev() {
            let x = &input[t * iw..(t + 1) * iw];
            let hprev = &cache.hs[t * hd..(t + 1) * hd];
            let zs = &cache.zs[t * hd..(t + 1) * hd];
            let rs = &cache.rs[t * hd..(t + 1) * hd];
            let ns = &cache.ns[t * hd..(t + 1) * hd];
            for j in 0..hd {
                let dn = dh[j] * (1.0 - zs[j]);
                let dz = dh[j] * (hprev[j] - ns[j]);
                dh_prev[j] = dh[j] * zs[j];
                da_n[j] = dn * (1.0 - ns[j] * ns[j]);
                da_z[j] = dz * zs[j] * (1.0 - zs[j]);
                rh[j] = rs[j] * hprev[j];
                d_rh[j] = 0.0;
            }
            // Candidate path.
            for j in 0..hd {
                let g = da_n[j];
                if g == 0.0 {
                    continue;
                }
                grad[l.b + 2 * hd + j] += g;
                let wrow = l.w + (2 * hd + j) * iw;
                for k in 0..iw {
                    grad[wrow + k] += g * x[k];
                }
                let urow = l.u + (2 * hd + j) * hd;
                for k in 0..hd {
                    grad[urow + k] += g * rh[k];
                    d_rh[k] += g * p[urow + k];
                }
            }
            for j in 0..hd {
                let dr = d_rh[j] * hprev[j];
                dh_prev[j] += d_rh[j] * rs[j];
                da_r[j] = dr * rs[j] * (1.0 - rs[j]);
            }
            // Gate paths.
            for (gate, da) in [(0usize, &da_z), (1usize, &da_r)] {
                for j in 0..hd {
                    let g = da[j];
                    if g == 0.0 {
                        continue;
                    }
                    grad[l.b + gate * hd + j] += g;
                    let wrow = l.w + (gate * hd + j) * iw;
                    for k in 0..iw {
                        grad[wrow + k] += g * x[k];
                    }
                    let urow = l.u + (gate * hd + j) * hd;
                    for k in 0..hd {
                        grad[urow + k] += g * hprev[k];
                        dh_prev[k] += g * p[urow + k];
                    }
                }
            }
            std::mem::swap(&mut dh, &mut dh_prev);
        }
    }
}
