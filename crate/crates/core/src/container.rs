//! Binary container for large networks and prune masks.
//!
//! Layout, everything little-endian:
//!
//! ```text
//! magic  b"LFG1"
//! u32    depth ℓ
//! u32*ℓ+1  target widths n_0..n_ℓ
//! u32*ℓ  intermediate widths M_1..M_ℓ
//! u32    mode: 0 = batch, 1 = recycle
//! u32    masked: 0 = unpruned (mask section is all ones), 1 = pruned
//! u64    seed
//! u64    recycling pool size m (0 in batch mode)
//! f64    eps_w
//! f64*5  sampling ranges: alpha_prime, beta_prime, q, alpha, beta
//! u64*ℓ  neurons consumed per layer
//! per layer i: in-weights f64 row-major (M_i × n_{i−1}),
//!              then out-weights f64 row-major (n_i × M_i)
//! per layer i: in-mask bits, then out-mask bits, each row-major LSB-first,
//!              zero-padded to whole bytes per matrix
//! ```
//!
//! Round-trips are bit-exact: floats are stored by their IEEE-754 bits, and
//! reading then rewriting a container reproduces the original byte stream.
//! A pruned container is self-describing: the surviving assignments and the
//! virtual weight matrices are reconstructed from the masks and weights.

use std::io::{Read, Write};

use crate::construction::{
    masked_paths, Assignment, BuildMode, LargeNetwork, PruneResult, Side, GRD_GAMMA,
};
use crate::decomposition::{interval_index, GrdParams};
use crate::error::{Error, Result};
use crate::mask::BitMatrix;
use crate::matrix::Matrix;
use crate::network::{ActivationKind, Architecture};
use crate::sampling::RangeSpec;

const MAGIC: &[u8; 4] = b"LFG1";
const MAX_DEPTH: u32 = 64;
const MAX_WIDTH: u32 = 1 << 28;

/// A decoded container: the sampled network and, if the file was written from
/// a prune result, the reconstructed masks.
#[derive(Debug, Clone)]
pub struct Container {
    pub large: LargeNetwork,
    pub prune: Option<PruneResult>,
}

/// Serialize an unpruned network (mask section all ones).
pub fn write_large<W: Write>(w: &mut W, g: &LargeNetwork) -> Result<()> {
    write_impl(w, g, None)
}

/// Serialize a pruned network.
pub fn write_pruned<W: Write>(w: &mut W, g: &LargeNetwork, p: &PruneResult) -> Result<()> {
    if p.in_masks.len() != g.target_arch().depth() {
        return Err(Error::Dimension {
            context: "prune masks",
            expected: g.target_arch().depth(),
            got: p.in_masks.len(),
        });
    }
    write_impl(w, g, Some(p))
}

pub fn large_to_bytes(g: &LargeNetwork) -> Vec<u8> {
    let mut buf = Vec::new();
    write_large(&mut buf, g).expect("writing to memory cannot fail");
    buf
}

pub fn pruned_to_bytes(g: &LargeNetwork, p: &PruneResult) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_pruned(&mut buf, g, p)?;
    Ok(buf)
}

fn write_impl<W: Write>(w: &mut W, g: &LargeNetwork, p: Option<&PruneResult>) -> Result<()> {
    let arch = g.target_arch();
    let ell = arch.depth();
    w.write_all(MAGIC)?;
    write_u32(w, ell as u32)?;
    for &width in arch.widths() {
        write_u32(w, width as u32)?;
    }
    for &m in g.m_widths() {
        write_u32(w, m as u32)?;
    }
    write_u32(w, match g.mode() {
        BuildMode::Thm1 => 0,
        BuildMode::Recycle => 1,
    })?;
    write_u32(w, p.is_some() as u32)?;
    write_u64(w, g.seed())?;
    write_u64(w, g.pool_m() as u64)?;
    write_f64(w, g.eps_w())?;
    let r = g.range();
    for v in [r.alpha_prime, r.beta_prime, r.q, r.alpha, r.beta] {
        write_f64(w, v)?;
    }
    for i in 0..ell {
        let consumed = p.map_or(g.m_widths()[i], |p| p.neurons_consumed[i]);
        write_u64(w, consumed as u64)?;
    }
    for i in 0..ell {
        for v in g.in_weights()[i].data() {
            write_f64(w, *v)?;
        }
        for v in g.out_weights()[i].data() {
            write_f64(w, *v)?;
        }
    }
    for i in 0..ell {
        let mi = g.m_widths()[i];
        let (n_in, n_out) = (arch.width(i), arch.width(i + 1));
        let (in_mask, out_mask) = match p {
            Some(p) => (p.in_masks[i].to_bytes(), p.out_masks[i].to_bytes()),
            None => (
                BitMatrix::ones(mi, n_in).to_bytes(),
                BitMatrix::ones(n_out, mi).to_bytes(),
            ),
        };
        w.write_all(&in_mask)?;
        w.write_all(&out_mask)?;
    }
    Ok(())
}

/// Deserialize a container written by [`write_large`] or [`write_pruned`].
pub fn read_container<R: Read>(r: &mut R) -> Result<Container> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let ell = read_u32(r)?;
    if ell == 0 || ell > MAX_DEPTH {
        return Err(Error::Format(format!("depth {ell} outside 1..={MAX_DEPTH}")));
    }
    let ell = ell as usize;
    let mut widths = Vec::with_capacity(ell + 1);
    for _ in 0..=ell {
        let v = read_u32(r)?;
        if v == 0 || v > MAX_WIDTH {
            return Err(Error::Format(format!("width {v} outside 1..={MAX_WIDTH}")));
        }
        widths.push(v as usize);
    }
    let mut m_widths = Vec::with_capacity(ell);
    for _ in 0..ell {
        let v = read_u32(r)?;
        if v == 0 || v > MAX_WIDTH {
            return Err(Error::Format(format!(
                "intermediate width {v} outside 1..={MAX_WIDTH}"
            )));
        }
        m_widths.push(v as usize);
    }
    let total: u128 = m_widths
        .iter()
        .enumerate()
        .map(|(i, &mi)| (widths[i] + widths[i + 1]) as u128 * mi as u128)
        .sum();
    if total > crate::construction::MAX_TOTAL_WEIGHTS {
        return Err(Error::Format(format!(
            "container declares {total} weights, over the cap"
        )));
    }
    let mode = match read_u32(r)? {
        0 => BuildMode::Thm1,
        1 => BuildMode::Recycle,
        other => return Err(Error::Format(format!("unknown mode {other}"))),
    };
    let masked = match read_u32(r)? {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("unknown masked flag {other}"))),
    };
    let seed = read_u64(r)?;
    let pool_m = read_u64(r)? as usize;
    let eps_w = read_f64(r)?;
    let range = RangeSpec {
        alpha_prime: read_f64(r)?,
        beta_prime: read_f64(r)?,
        q: read_f64(r)?,
        alpha: read_f64(r)?,
        beta: read_f64(r)?,
    };
    let mut consumed = Vec::with_capacity(ell);
    for _ in 0..ell {
        consumed.push(read_u64(r)? as usize);
    }
    let mut in_weights = Vec::with_capacity(ell);
    let mut out_weights = Vec::with_capacity(ell);
    for i in 0..ell {
        let (n_in, n_out, mi) = (widths[i], widths[i + 1], m_widths[i]);
        in_weights.push(read_matrix(r, mi, n_in)?);
        out_weights.push(read_matrix(r, n_out, mi)?);
    }
    let mut in_masks = Vec::with_capacity(ell);
    let mut out_masks = Vec::with_capacity(ell);
    for i in 0..ell {
        let (n_in, n_out, mi) = (widths[i], widths[i + 1], m_widths[i]);
        in_masks.push(read_mask(r, mi, n_in)?);
        out_masks.push(read_mask(r, n_out, mi)?);
    }

    let arch = Architecture::uniform(widths, ActivationKind::Relu)?;
    let large = LargeNetwork::from_parts(
        arch, m_widths, in_weights, out_weights, range, seed, mode, eps_w, pool_m,
    );
    let prune = if masked {
        Some(reconstruct_prune(&large, in_masks, out_masks, consumed)?)
    } else {
        None
    };
    Ok(Container { large, prune })
}

/// Rebuild assignments and virtual weights from masks: a surviving neuron's
/// side is the sign of its kept out-weight, its interval is the bucket of its
/// product magnitude, and each virtual weight is the signed product sum over
/// its surviving neurons in index order.
fn reconstruct_prune(
    g: &LargeNetwork,
    in_masks: Vec<BitMatrix>,
    out_masks: Vec<BitMatrix>,
    neurons_consumed: Vec<usize>,
) -> Result<PruneResult> {
    let mut result = PruneResult {
        in_masks,
        out_masks,
        assignments: Vec::new(),
        virtual_plus: Vec::new(),
        virtual_minus: Vec::new(),
        neurons_consumed,
    };
    let w_max = 1.5 * g.range().beta_prime;
    let grd = GrdParams::new(GRD_GAMMA, g.eps_w() / 2.0, w_max)?;
    let k = grd.k();
    let ell = g.target_arch().depth();
    // masked_paths also validates the one-in-one-out invariant.
    let paths = masked_paths(g, &result)?;
    for layer in 0..ell {
        let n_in = g.target_arch().width(layer);
        let n_out = g.target_arch().width(layer + 1);
        let mut v_plus = Matrix::zeros(n_out, n_in);
        let mut v_minus = Matrix::zeros(n_out, n_in);
        let in_mask = &result.in_masks[layer];
        let out_mask = &result.out_masks[layer];
        for z in 0..g.m_widths()[layer] {
            let Some(col) = in_mask.row_ones(z).next() else {
                continue;
            };
            let row = (0..n_out)
                .find(|&j1| out_mask.get(j1, z))
                .expect("validated by masked_paths");
            let out_w = g.out_weights()[layer].get(row, z);
            let in_w = g.in_weights()[layer].get(z, col);
            let side = if out_w > 0.0 { Side::Plus } else { Side::Minus };
            let product = out_w * in_w;
            let interval = interval_index(product.abs() / w_max, GRD_GAMMA, k)?
                .ok_or_else(|| {
                    Error::Format(format!(
                        "surviving product at layer {layer}, neuron {z} falls outside \
                         the bucketed range"
                    ))
                })?;
            result.assignments.push(Assignment {
                layer,
                row,
                col,
                side,
                interval,
                neuron: z,
            });
            // Neuron index order matches how the prune paths accumulate.
            match side {
                Side::Plus => v_plus.set(row, col, v_plus.get(row, col) + product),
                Side::Minus => v_minus.set(row, col, v_minus.get(row, col) + product),
            }
        }
        result.virtual_plus.push(v_plus);
        result.virtual_minus.push(v_minus);
    }
    drop(paths);
    result.assignments.sort_by_key(|a| {
        (a.layer, a.row, a.col, a.side, a.interval, a.neuron)
    });
    Ok(result)
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_bits().to_le_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Matrix> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(read_f64(r)?);
    }
    Matrix::from_vec(rows, cols, data)
}

fn read_mask<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<BitMatrix> {
    let mut bytes = vec![0u8; (rows * cols).div_ceil(8)];
    r.read_exact(&mut bytes)?;
    BitMatrix::from_bytes(rows, cols, &bytes)
        .ok_or_else(|| Error::Format("mask padding bits must be zero".into()))
}
