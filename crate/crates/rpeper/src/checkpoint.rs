//! Parameter checkpoints.
//!
//! A network is stored as `<stem>.bin`, holding every parameter as a
//! little-endian f64 (per layer: weights row-major, then bias), and a JSON
//! sidecar `<stem>.json` describing the layer shapes and activations. An
//! EMCN critic is a directory with one such pair per part and a
//! `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rpeper_core::emcn::EmcnCritic;
use rpeper_core::nn::{Activation, Dense, DenseNet, Parameters};

use crate::harness::write_atomic;
use crate::{Error, Result};

pub const NET_FORMAT: &str = "rpeper-dense";
pub const CRITIC_FORMAT: &str = "rpeper-emcn";
pub const VERSION: u32 = 1;

const CRITIC_PARTS: [&str; 4] = ["trunk", "q_head", "reward_head", "transition_head"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerShape {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSidecar {
    pub format: String,
    pub version: u32,
    pub param_count: usize,
    pub layers: Vec<LayerShape>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticManifest {
    pub format: String,
    pub version: u32,
    pub state_dim: usize,
    pub action_dim: usize,
    /// Part names; each has `<name>.bin` and `<name>.json` beside the manifest.
    pub parts: Vec<String>,
}

pub fn sidecar(net: &DenseNet) -> NetSidecar {
    NetSidecar {
        format: NET_FORMAT.into(),
        version: VERSION,
        param_count: net.param_count(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerShape {
                input_dim: l.input_dim(),
                output_dim: l.output_dim(),
                activation: l.activation().name().into(),
            })
            .collect(),
    }
}

pub fn encode_params(net: &DenseNet) -> Vec<u8> {
    net.flatten().iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_net(meta: &NetSidecar, bytes: &[u8]) -> Result<DenseNet> {
    const WHAT: &str = "network checkpoint";
    if meta.format != NET_FORMAT || meta.version != VERSION {
        return Err(Error::format(WHAT, format!("unsupported format {} v{}", meta.format, meta.version)));
    }
    if bytes.len() != meta.param_count * 8 {
        return Err(Error::format(
            WHAT,
            format!("expected {} bytes, found {}", meta.param_count * 8, bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut rest = values.as_slice();
    let mut layers = Vec::with_capacity(meta.layers.len());
    for shape in &meta.layers {
        let activation = Activation::from_name(&shape.activation)
            .ok_or_else(|| Error::format(WHAT, format!("unknown activation `{}`", shape.activation)))?;
        let nw = shape.input_dim * shape.output_dim;
        if rest.len() < nw + shape.output_dim {
            return Err(Error::format(WHAT, "layer shapes exceed param_count"));
        }
        let (w, tail) = rest.split_at(nw);
        let (b, tail) = tail.split_at(shape.output_dim);
        rest = tail;
        layers.push(Dense::new(w.to_vec(), b.to_vec(), shape.input_dim, shape.output_dim, activation)?);
    }
    if !rest.is_empty() {
        return Err(Error::format(WHAT, "param_count exceeds layer shapes"));
    }
    Ok(DenseNet::from_layers(layers)?)
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn save_net(net: &DenseNet, stem: &Path) -> Result<()> {
    write_atomic(&with_ext(stem, "bin"), &encode_params(net))?;
    let json = serde_json::to_string_pretty(&sidecar(net))? + "\n";
    write_atomic(&with_ext(stem, "json"), json.as_bytes())
}

pub fn load_net(stem: &Path) -> Result<DenseNet> {
    let meta_path = with_ext(stem, "json");
    let text = fs::read_to_string(&meta_path).map_err(Error::io(&meta_path))?;
    let meta: NetSidecar = serde_json::from_str(&text)?;
    let bin = with_ext(stem, "bin");
    decode_net(&meta, &fs::read(&bin).map_err(Error::io(&bin))?)
}

pub fn save_critic(critic: &EmcnCritic, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let nets = [
        critic.trunk(),
        critic.q_head(),
        critic.reward_head(),
        critic.transition_head(),
    ];
    for (name, net) in CRITIC_PARTS.iter().zip(nets) {
        save_net(net, &dir.join(name))?;
    }
    let manifest = CriticManifest {
        format: CRITIC_FORMAT.into(),
        version: VERSION,
        state_dim: critic.state_dim(),
        action_dim: critic.action_dim(),
        parts: CRITIC_PARTS.iter().map(|s| s.to_string()).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)? + "\n";
    write_atomic(&dir.join("manifest.json"), json.as_bytes())
}

pub fn load_critic(dir: &Path) -> Result<EmcnCritic> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(Error::io(&path))?;
    let m: CriticManifest = serde_json::from_str(&text)?;
    if m.format != CRITIC_FORMAT || m.version != VERSION {
        return Err(Error::format("critic manifest", format!("unsupported format {} v{}", m.format, m.version)));
    }
    if m.parts != CRITIC_PARTS {
        return Err(Error::format("critic manifest", format!("parts must be {CRITIC_PARTS:?}")));
    }
    let [trunk, q, r, t] = CRITIC_PARTS.map(|name| load_net(&dir.join(name)));
    Ok(EmcnCritic::from_parts(trunk?, q?, r?, t?, m.state_dim, m.action_dim)?)
}
