use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{relu, GnnError};
use crate::graph::{EDGE_FEATURE_LEN, TAG_VOCAB_VERSION};

const MAGIC: &[u8; 4] = b"RGNP";
const FORMAT_VERSION: u16 = 1;
pub(crate) const KIND_FULL: u8 = 0;
pub(crate) const KIND_FROZEN: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// `out x in`
    pub w_self: Array2<f64>,
    /// `out x in`
    pub w_nbr: Array2<f64>,
    pub bias: Array1<f64>,
}

impl ConvLayer {
    pub fn input_dim(&self) -> usize {
        self.w_self.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w_self.nrows()
    }

    fn zeros(input: usize, output: usize) -> Self {
        Self {
            w_self: Array2::zeros((output, input)),
            w_nbr: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }
}

/// Pretraining head: `sigmoid(w2 . relu(W1 e + b1) + b2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMlp {
    /// `hidden x input`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

impl EdgeMlp {
    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub(crate) fn logit(&self, e: &Array1<f64>) -> f64 {
        let hidden = (self.w1.dot(e) + &self.b1).mapv(relu);
        hidden.dot(&self.w2) + self.b2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNetParams {
    pub layers: Vec<ConvLayer>,
    pub mlp: EdgeMlp,
    pub rng_seed: u64,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..limit))
}

impl GraphNetParams {
    /// Glorot-uniform weights and zero biases drawn from `seed`.
    pub fn init(input_dim: usize, hidden: usize, layer_count: usize, mlp_hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(layer_count);
        let mut width = input_dim;
        for _ in 0..layer_count {
            layers.push(ConvLayer {
                w_self: glorot(&mut rng, hidden, width),
                w_nbr: glorot(&mut rng, hidden, width),
                bias: Array1::zeros(hidden),
            });
            width = hidden;
        }
        let mlp_in = 2 * width + EDGE_FEATURE_LEN;
        let mlp = EdgeMlp {
            w1: glorot(&mut rng, mlp_hidden, mlp_in),
            b1: Array1::zeros(mlp_hidden),
            w2: glorot(&mut rng, 1, mlp_hidden).row(0).to_owned(),
            b2: 0.0,
        };
        Self { layers, mlp, rng_seed: seed }
    }

    pub fn zeros(input_dim: usize, hidden: usize, layer_count: usize, mlp_hidden: usize, seed: u64) -> Self {
        let mut layers = Vec::with_capacity(layer_count);
        let mut width = input_dim;
        for _ in 0..layer_count {
            layers.push(ConvLayer::zeros(width, hidden));
            width = hidden;
        }
        let mlp_in = 2 * width + EDGE_FEATURE_LEN;
        Self {
            layers,
            mlp: EdgeMlp {
                w1: Array2::zeros((mlp_hidden, mlp_in)),
                b1: Array1::zeros(mlp_hidden),
                w2: Array1::zeros(mlp_hidden),
                b2: 0.0,
            },
            rng_seed: seed,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map(|l| l.input_dim()).unwrap_or(0)
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers.last().map(|l| l.output_dim()).unwrap_or(self.input_dim())
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.map_inplace(|_| 0.0);
        z
    }

    fn map_inplace(&mut self, mut f: impl FnMut(f64) -> f64) {
        for l in &mut self.layers {
            l.w_self.mapv_inplace(&mut f);
            l.w_nbr.mapv_inplace(&mut f);
            l.bias.mapv_inplace(&mut f);
        }
        self.mlp.w1.mapv_inplace(&mut f);
        self.mlp.b1.mapv_inplace(&mut f);
        self.mlp.w2.mapv_inplace(&mut f);
        self.mlp.b2 = f(self.mlp.b2);
    }

    /// `self += alpha * other`, shapes assumed equal.
    pub fn add_scaled(&mut self, alpha: f64, other: &GraphNetParams) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w_self.scaled_add(alpha, &b.w_self);
            a.w_nbr.scaled_add(alpha, &b.w_nbr);
            a.bias.scaled_add(alpha, &b.bias);
        }
        self.mlp.w1.scaled_add(alpha, &other.mlp.w1);
        self.mlp.b1.scaled_add(alpha, &other.mlp.b1);
        self.mlp.w2.scaled_add(alpha, &other.mlp.w2);
        self.mlp.b2 += alpha * other.mlp.b2;
    }

    /// All parameters in a fixed order: per layer `w_self, w_nbr, bias`, then
    /// `w1, b1, w2, b2`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for l in &self.layers {
            v.extend(l.w_self.iter());
            v.extend(l.w_nbr.iter());
            v.extend(l.bias.iter());
        }
        v.extend(self.mlp.w1.iter());
        v.extend(self.mlp.b1.iter());
        v.extend(self.mlp.w2.iter());
        v.push(self.mlp.b2);
        v
    }

    /// Inverse of [`to_flat`](Self::to_flat) using `self` for shapes.
    pub fn with_flat(&self, flat: &[f64]) -> Self {
        let mut out = self.clone();
        let mut it = flat.iter().copied();
        out.map_inplace(|_| it.next().expect("flat vector too short"));
        assert!(it.next().is_none(), "flat vector too long");
        out
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|x| x.is_finite())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = header(KIND_FULL, self.rng_seed, &self.layers);
        write_layers(&mut out, &self.layers);
        put_u32(&mut out, self.mlp.w1.nrows());
        put_u32(&mut out, self.mlp.w1.ncols());
        put_f64s(&mut out, self.mlp.w1.iter());
        put_f64s(&mut out, self.mlp.b1.iter());
        put_f64s(&mut out, self.mlp.w2.iter());
        put_f64s(&mut out, std::iter::once(&self.mlp.b2));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GnnError> {
        let mut r = Reader { bytes, pos: 0 };
        let (kind, seed, layers) = read_header_and_layers(&mut r)?;
        if kind != KIND_FULL {
            return Err(GnnError::BadFormat("file holds a frozen extractor, not full parameters".into()));
        }
        let hidden = r.u32()?;
        let input = r.u32()?;
        let w1 = Array2::from_shape_vec((hidden, input), r.f64s(hidden * input)?).unwrap();
        let b1 = Array1::from(r.f64s(hidden)?);
        let w2 = Array1::from(r.f64s(hidden)?);
        let b2 = r.f64s(1)?[0];
        r.finish()?;
        Ok(Self { layers, mlp: EdgeMlp { w1, b1, w2, b2 }, rng_seed: seed })
    }
}

pub(crate) fn header(kind: u8, seed: u64, layers: &[ConvLayer]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(kind);
    out.extend_from_slice(&TAG_VOCAB_VERSION.to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    put_u32(&mut out, layers.first().map(|l| l.input_dim()).unwrap_or(0));
    put_u32(&mut out, layers.len());
    out
}

pub(crate) fn write_layers(out: &mut Vec<u8>, layers: &[ConvLayer]) {
    for l in layers {
        put_u32(out, l.output_dim());
        put_u32(out, l.input_dim());
        put_f64s(out, l.w_self.iter());
        put_f64s(out, l.w_nbr.iter());
        put_f64s(out, l.bias.iter());
    }
}

pub(crate) fn read_header_and_layers(r: &mut Reader<'_>) -> Result<(u8, u64, Vec<ConvLayer>), GnnError> {
    if r.take(4)? != MAGIC {
        return Err(GnnError::BadFormat("bad magic".into()));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(GnnError::BadFormat(format!("unsupported version {version}")));
    }
    let kind = r.take(1)?[0];
    let vocab = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if vocab != TAG_VOCAB_VERSION {
        return Err(GnnError::BadFormat(format!("tag vocabulary version {vocab}, expected {TAG_VOCAB_VERSION}")));
    }
    let seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let _input = r.u32()?;
    let count = r.u32()?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let out = r.u32()?;
        let inp = r.u32()?;
        let w_self = Array2::from_shape_vec((out, inp), r.f64s(out * inp)?).unwrap();
        let w_nbr = Array2::from_shape_vec((out, inp), r.f64s(out * inp)?).unwrap();
        let bias = Array1::from(r.f64s(out)?);
        layers.push(ConvLayer { w_self, w_nbr, bias });
    }
    for pair in layers.windows(2) {
        if pair[0].output_dim() != pair[1].input_dim() {
            return Err(GnnError::BadFormat("inconsistent layer shapes".into()));
        }
    }
    Ok((kind, seed, layers))
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f64s<'a>(out: &mut Vec<u8>, it: impl Iterator<Item = &'a f64>) {
    for x in it {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub(crate) struct Reader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GnnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| GnnError::BadFormat("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, GnnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, GnnError> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| GnnError::BadFormat("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub(crate) fn finish(&self) -> Result<(), GnnError> {
        if self.pos != self.bytes.len() {
            return Err(GnnError::BadFormat("trailing bytes".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NODE_FEATURE_LEN;

    #[test]
    fn shapes() {
        let p = GraphNetParams::init(NODE_FEATURE_LEN, 32, 2, 32, 1);
        assert_eq!(p.layers.len(), 2);
        assert_eq!(p.layers[0].w_self.dim(), (32, NODE_FEATURE_LEN));
        assert_eq!(p.layers[1].w_nbr.dim(), (32, 32));
        assert_eq!(p.mlp.input_dim(), 64 + EDGE_FEATURE_LEN);
        assert_eq!(p.embedding_dim(), 32);
    }

    #[test]
    fn bytes_round_trip() {
        let p = GraphNetParams::init(NODE_FEATURE_LEN, 8, 2, 4, 99);
        let bytes = p.to_bytes();
        let q = GraphNetParams::from_bytes(&bytes).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_bytes(), bytes);
        assert!(GraphNetParams::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(GraphNetParams::from_bytes(&bad).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let p = GraphNetParams::init(NODE_FEATURE_LEN, 4, 2, 3, 5);
        let flat = p.to_flat();
        assert_eq!(p.with_flat(&flat), p);
        let mut z = p.zeros_like();
        z.add_scaled(2.0, &p);
        assert_eq!(z.to_flat(), flat.iter().map(|x| 2.0 * x).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_init_is_deterministic() {
        assert_eq!(
            GraphNetParams::init(NODE_FEATURE_LEN, 8, 2, 8, 4),
            GraphNetParams::init(NODE_FEATURE_LEN, 8, 2, 8, 4)
        );
        assert_ne!(
            GraphNetParams::init(NODE_FEATURE_LEN, 8, 2, 8, 4),
            GraphNetParams::init(NODE_FEATURE_LEN, 8, 2, 8, 5)
        );
    }
}
