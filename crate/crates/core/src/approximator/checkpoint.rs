//! Text checkpoint format for networks.
//!
//! The first line is a JSON header describing the layer shapes and
//! activations; every following line holds one parameter in
//! [`Network::params`] order, printed in shortest round-trip form so a
//! reload is bit-exact.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::network::{Activation, Layer, Network};
use crate::error::{Error, Result};

pub const FORMAT: &str = "vlbirl-network";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    layers: Vec<LayerHeader>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerHeader {
    input_dim: usize,
    output_dim: usize,
    activation: Activation,
}

pub fn write_network<W: Write>(net: &Network, mut out: W) -> Result<()> {
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        layers: net
            .layers()
            .iter()
            .map(|l| LayerHeader { input_dim: l.input_dim, output_dim: l.output_dim, activation: l.activation })
            .collect(),
    };
    serde_json::to_writer(&mut out, &header)?;
    writeln!(out)?;
    for p in net.params() {
        writeln!(out, "{p}")?;
    }
    Ok(())
}

pub fn read_network<R: BufRead>(input: R) -> Result<Network> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty checkpoint".into()))??;
    let header: Header = serde_json::from_str(&first)?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint {} v{}", header.format, header.version)));
    }
    let layers = header
        .layers
        .iter()
        .map(|h| Layer::zeros(h.input_dim, h.output_dim, h.activation))
        .collect();
    let mut net = Network::from_layers(layers)?;
    let params = lines
        .filter_map(|l| match l {
            Ok(s) if s.trim().is_empty() => None,
            other => Some(other),
        })
        .map(|l| {
            let l = l?;
            l.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad parameter `{l}`: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    net.set_params(&params)?;
    if !net.is_finite() {
        return Err(Error::NonFinite("checkpoint parameters".into()));
    }
    Ok(net)
}

pub fn save_network(net: &Network, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_network(net, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_network(path: &std::path::Path) -> Result<Network> {
    let file = std::fs::File::open(path)?;
    read_network(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SimRng;
    use rand::SeedableRng;

    #[test]
    fn reload_is_bit_exact() {
        let mut rng = SimRng::seed_from_u64(5);
        let net = Network::new(&[7, 16, 16, 2], Activation::LeakyRelu, Activation::Identity, &mut rng);
        let mut buf = Vec::new();
        write_network(&net, &mut buf).unwrap();
        let back = read_network(buf.as_slice()).unwrap();
        assert_eq!(back, net);
        let mut again = Vec::new();
        write_network(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn header_names_activations() {
        let net = Network::zeros(&[2, 3, 1], Activation::Tanh, Activation::Sigmoid);
        let mut buf = Vec::new();
        write_network(&net, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.contains("\"tanh\"") && header.contains("\"sigmoid\""), "{header}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let net = Network::zeros(&[2, 1], Activation::Identity, Activation::Identity);
        let mut buf = Vec::new();
        write_network(&net, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert!(read_network(cut.as_bytes()).is_err());
        assert!(read_network("".as_bytes()).is_err());
    }
}
