//! Little-endian encoding of fitted models.

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use super::tree::Node;
use super::*;

#[derive(Default)]
pub struct Encoder {
    pub buf: Vec<u8>,
}

impl Encoder {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u16(&mut self, v: u16) {
        self.buf.write_u16::<LE>(v).unwrap();
    }
    pub fn u32(&mut self, v: usize) {
        self.buf.write_u32::<LE>(v as u32).unwrap();
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.write_u64::<LE>(v).unwrap();
    }
    pub fn f64(&mut self, v: f64) {
        self.buf.write_f64::<LE>(v).unwrap();
    }
    pub fn f64s(&mut self, v: &[f64]) {
        self.u32(v.len());
        v.iter().for_each(|&x| self.f64(x));
    }
    pub fn bytes(&mut self, v: &[u8]) {
        self.u32(v.len());
        self.buf.extend_from_slice(v);
    }
    pub fn matrix(&mut self, m: &Array2<f64>) {
        self.u32(m.nrows());
        self.u32(m.ncols());
        m.iter().for_each(|&x| self.f64(x));
    }
}

pub struct Decoder<'a> {
    pub buf: &'a [u8],
    pub path: String,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8], path: impl Into<String>) -> Self {
        Self {
            buf,
            path: path.into(),
        }
    }

    fn truncated(&self) -> Error {
        Error::format(&self.path, "truncated data")
    }

    pub fn u8(&mut self) -> Result<u8> {
        self.buf.read_u8().map_err(|_| self.truncated())
    }
    pub fn u16(&mut self) -> Result<u16> {
        self.buf.read_u16::<LE>().map_err(|_| self.truncated())
    }
    pub fn u32(&mut self) -> Result<usize> {
        Ok(self.buf.read_u32::<LE>().map_err(|_| self.truncated())? as usize)
    }
    pub fn u64(&mut self) -> Result<u64> {
        self.buf.read_u64::<LE>().map_err(|_| self.truncated())
    }
    pub fn f64(&mut self) -> Result<f64> {
        self.buf.read_f64::<LE>().map_err(|_| self.truncated())
    }
    fn check_len(&self, n: usize, elem: usize) -> Result<()> {
        if n.saturating_mul(elem) > self.buf.len() {
            return Err(self.truncated());
        }
        Ok(())
    }
    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()?;
        self.check_len(n, 8)?;
        (0..n).map(|_| self.f64()).collect()
    }
    pub fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.u32()?;
        self.check_len(n, 1)?;
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a.to_vec())
    }
    pub fn matrix(&mut self) -> Result<Array2<f64>> {
        let (r, c) = (self.u32()?, self.u32()?);
        self.check_len(r.saturating_mul(c), 8)?;
        let v: Vec<f64> = (0..r * c).map(|_| self.f64()).collect::<Result<_>>()?;
        Array2::from_shape_vec((r, c), v).map_err(|e| Error::format(&self.path, e.to_string()))
    }
    pub fn bad(&self, reason: impl Into<String>) -> Error {
        Error::format(&self.path, reason)
    }
}

impl Standardizer {
    pub fn encode(&self, e: &mut Encoder) {
        e.f64s(&self.mean);
        e.f64s(&self.sd);
    }

    pub fn decode(d: &mut Decoder<'_>) -> Result<Self> {
        let mean = d.f64s()?;
        let sd = d.f64s()?;
        if mean.len() != sd.len() {
            return Err(d.bad("standardizer block lengths differ"));
        }
        Ok(Self { mean, sd })
    }
}

fn encode_tree(t: &DecisionTree, e: &mut Encoder) {
    e.u32(t.n_features);
    e.u32(t.nodes.len());
    for n in &t.nodes {
        match *n {
            Node::Leaf { proba } => {
                e.u8(0);
                e.f64(proba);
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                e.u8(1);
                e.u32(feature);
                e.f64(threshold);
                e.u32(left);
                e.u32(right);
            }
        }
    }
}

fn decode_tree(d: &mut Decoder<'_>) -> Result<DecisionTree> {
    let n_features = d.u32()?;
    let n = d.u32()?;
    d.check_len(n, 9)?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        nodes.push(match d.u8()? {
            0 => Node::Leaf { proba: d.f64()? },
            1 => Node::Split {
                feature: d.u32()?,
                threshold: d.f64()?,
                left: d.u32()?,
                right: d.u32()?,
            },
            t => return Err(d.bad(format!("unknown tree node tag {t}"))),
        });
    }
    for node in &nodes {
        if let Node::Split {
            feature,
            left,
            right,
            ..
        } = *node
        {
            if feature >= n_features || left >= n || right >= n {
                return Err(d.bad("tree node index out of range"));
            }
        }
    }
    if nodes.is_empty() {
        return Err(d.bad("empty tree"));
    }
    Ok(DecisionTree { n_features, nodes })
}

impl Model {
    pub fn encode(&self, e: &mut Encoder) {
        e.u8(self.kind().tag());
        match self {
            Model::Svm(m) => {
                e.f64(m.gamma);
                e.f64(m.rho);
                e.f64(m.platt_a);
                e.f64(m.platt_b);
                e.f64s(&m.coef);
                e.matrix(&m.support);
            }
            Model::Knn(m) => {
                e.u32(m.k);
                e.matrix(&m.x);
                e.bytes(&m.y);
            }
            Model::Dt(t) => encode_tree(t, e),
            Model::Rf(f) => {
                e.u32(f.n_features);
                e.u32(f.trees.len());
                f.trees.iter().for_each(|t| encode_tree(t, e));
            }
            Model::Bst(b) => {
                e.u32(b.n_features);
                e.f64s(&b.alphas);
                b.stumps.iter().for_each(|t| encode_tree(t, e));
            }
            Model::By(m) => {
                e.f64(m.log_prior[0]);
                e.f64(m.log_prior[1]);
                for c in 0..2 {
                    e.f64s(&m.mean[c]);
                    e.f64s(&m.var[c]);
                }
            }
            Model::Da(m) => {
                e.f64s(&m.w);
                e.f64(m.b);
            }
        }
    }

    pub fn decode(d: &mut Decoder<'_>) -> Result<Self> {
        let tag = d.u8()?;
        let kind =
            ClassifierKind::from_tag(tag).ok_or_else(|| d.bad(format!("unknown model tag {tag}")))?;
        Ok(match kind {
            ClassifierKind::Svm => {
                let (gamma, rho, platt_a, platt_b) = (d.f64()?, d.f64()?, d.f64()?, d.f64()?);
                let coef = d.f64s()?;
                let support = d.matrix()?;
                if support.nrows() != coef.len() {
                    return Err(d.bad("support vector count mismatch"));
                }
                Model::Svm(SvmModel {
                    gamma,
                    support,
                    coef,
                    rho,
                    platt_a,
                    platt_b,
                })
            }
            ClassifierKind::Knn => {
                let k = d.u32()?;
                let x = d.matrix()?;
                let y = d.bytes()?;
                if y.len() != x.nrows() || k == 0 || k > x.nrows() {
                    return Err(d.bad("inconsistent neighbor block"));
                }
                Model::Knn(KnnModel { k, x, y })
            }
            ClassifierKind::Dt => Model::Dt(decode_tree(d)?),
            ClassifierKind::Rf => {
                let n_features = d.u32()?;
                let n = d.u32()?;
                d.check_len(n, 8)?;
                let trees = (0..n).map(|_| decode_tree(d)).collect::<Result<Vec<_>>>()?;
                if trees.is_empty() {
                    return Err(d.bad("empty forest"));
                }
                Model::Rf(RandomForest { n_features, trees })
            }
            ClassifierKind::Bst => {
                let n_features = d.u32()?;
                let alphas = d.f64s()?;
                let stumps = (0..alphas.len())
                    .map(|_| decode_tree(d))
                    .collect::<Result<Vec<_>>>()?;
                if stumps.is_empty() {
                    return Err(d.bad("empty ensemble"));
                }
                Model::Bst(AdaBoost {
                    n_features,
                    stumps,
                    alphas,
                })
            }
            ClassifierKind::By => {
                let log_prior = [d.f64()?, d.f64()?];
                let (m0, v0, m1, v1) = (d.f64s()?, d.f64s()?, d.f64s()?, d.f64s()?);
                let n = m0.len();
                if [v0.len(), m1.len(), v1.len()].iter().any(|&l| l != n) {
                    return Err(d.bad("inconsistent naive Bayes block"));
                }
                Model::By(GaussianNb {
                    log_prior,
                    mean: [m0, m1],
                    var: [v0, v1],
                })
            }
            ClassifierKind::Da => {
                let w = d.f64s()?;
                let b = d.f64()?;
                Model::Da(Lda { w, b })
            }
        })
    }
}
