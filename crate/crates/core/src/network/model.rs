use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ArchitectureConfig, NetworkError, INPUT_FEATURES};
use crate::autodiff::{Tape, Tensor, Var};
use crate::geometry::{AnatomicalClass, MultiClassPointCloud, NormalizationTransform, Point3};

/// Coarse and dense outputs, per class.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationPrediction {
    /// `m` points per class.
    pub coarse: [Vec<Point3>; 3],
    /// `p` points per class; point `j * grid_side^2 + k` folds from coarse point `j`.
    pub dense: [Vec<Point3>; 3],
}

impl DeformationPrediction {
    pub fn dense_cloud(&self) -> MultiClassPointCloud {
        MultiClassPointCloud::from_classes(self.dense.clone())
    }

    pub fn coarse_cloud(&self) -> MultiClassPointCloud {
        MultiClassPointCloud::from_classes(self.coarse.clone())
    }

    pub fn is_finite(&self) -> bool {
        self.coarse
            .iter()
            .chain(&self.dense)
            .flatten()
            .all(|p| p.iter().all(|v| v.is_finite()))
    }

    pub fn map_points(&self, f: impl Fn(&Point3) -> Point3) -> Self {
        let map = |set: &[Vec<Point3>; 3]| -> [Vec<Point3>; 3] {
            [0, 1, 2].map(|c| set[c].iter().map(&f).collect())
        };
        Self {
            coarse: map(&self.coarse),
            dense: map(&self.dense),
        }
    }
}

/// Tape handles of all parameters for one forward pass.
#[derive(Debug, Clone)]
pub struct BoundParams {
    vars: Vec<Var>,
}

impl BoundParams {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Tape handles of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct NetOutputs {
    pub latent: Var,
    pub coarse: [Var; 3],
    pub dense: [Var; 3],
}

#[derive(Debug, Clone, Copy)]
struct Stack {
    start: usize,
    len: usize,
}

/// The encoder-decoder: all weights plus the normalization they were trained
/// under.
#[derive(Debug, Clone, PartialEq)]
pub struct PcdNet {
    config: ArchitectureConfig,
    normalization: NormalizationTransform,
    names: Vec<String>,
    params: Vec<Tensor>,
}

impl PcdNet {
    /// Seeded He-uniform weights and zero biases.
    pub fn init(
        config: ArchitectureConfig,
        normalization: NormalizationTransform,
    ) -> Result<Self, NetworkError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut names = Vec::new();
        let mut params = Vec::new();
        for (name, fan_in, fan_out) in config.layer_specs() {
            let bound = (6.0 / fan_in as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            names.push(format!("{name}.weight"));
            params.push(Tensor::matrix(fan_in, fan_out, w)?.with_grad());
            names.push(format!("{name}.bias"));
            params.push(Tensor::zeros(vec![fan_out])?.with_grad());
        }
        Ok(Self {
            config,
            normalization,
            names,
            params,
        })
    }

    /// Assembles a network from named tensors, checking every shape against
    /// the configuration.
    pub fn from_parts(
        config: ArchitectureConfig,
        normalization: NormalizationTransform,
        named: Vec<(String, Tensor)>,
    ) -> Result<Self, NetworkError> {
        config.validate()?;
        let expected = expected_shapes(&config);
        if expected.len() != named.len() {
            return Err(NetworkError::Checkpoint(format!(
                "expected {} tensors, found {}",
                expected.len(),
                named.len()
            )));
        }
        let mut names = Vec::new();
        let mut params = Vec::new();
        for ((ename, eshape), (name, mut t)) in expected.into_iter().zip(named) {
            if ename != name || eshape != t.shape() {
                return Err(NetworkError::Checkpoint(format!(
                    "tensor `{name}` {:?} does not match expected `{ename}` {eshape:?}",
                    t.shape()
                )));
            }
            t.set_requires_grad(true);
            names.push(name);
            params.push(t);
        }
        Ok(Self {
            config,
            normalization,
            names,
            params,
        })
    }

    pub fn config(&self) -> &ArchitectureConfig {
        &self.config
    }

    pub fn normalization(&self) -> &NormalizationTransform {
        &self.normalization
    }

    pub fn set_normalization(&mut self, t: NormalizationTransform) {
        self.normalization = t;
    }

    pub fn parameters(&self) -> &[Tensor] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.names
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::numel).sum()
    }

    pub fn parameter(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.params[i])
    }

    /// Sets every weight and bias of the named layer (e.g. `"fold.2"`) to zero.
    pub fn zero_layer(&mut self, layer: &str) -> Result<(), NetworkError> {
        let mut found = false;
        for (name, t) in self.names.iter().zip(self.params.iter_mut()) {
            if name == &format!("{layer}.weight") || name == &format!("{layer}.bias") {
                t.data_mut().iter_mut().for_each(|v| *v = 0.0);
                found = true;
            }
        }
        if found {
            Ok(())
        } else {
            Err(NetworkError::InvalidConfig(format!("no layer named `{layer}`")))
        }
    }

    /// Name of the last folding layer.
    pub fn final_fold_layer(&self) -> String {
        format!("fold.{}", self.config.fold_hidden.len())
    }

    /// Name of the last coarse-decoder layer.
    pub fn final_coarse_layer(&self) -> String {
        format!("coarse.{}", self.config.coarse_hidden.len())
    }

    /// Records all parameters on `tape` as differentiable leaves.
    pub fn bind(&self, tape: &mut Tape) -> BoundParams {
        BoundParams {
            vars: self.params.iter().map(|p| tape.leaf(p.clone())).collect(),
        }
    }

    /// Records all parameters on `tape` as constants.
    pub fn bind_frozen(&self, tape: &mut Tape) -> BoundParams {
        BoundParams {
            vars: self.params.iter().map(|p| tape.constant(p.clone())).collect(),
        }
    }

    fn stacks(&self) -> [Stack; 5] {
        let c = &self.config;
        let lens = [
            c.encoder_first.len(),
            c.encoder_second.len(),
            c.encoder_head.len() + 1,
            c.coarse_hidden.len() + 1,
            c.fold_hidden.len() + 1,
        ];
        let mut start = 0;
        lens.map(|len| {
            let s = Stack { start, len };
            start += len;
            s
        })
    }

    fn mlp(
        tape: &mut Tape,
        bound: &BoundParams,
        stack: Stack,
        mut x: Var,
    ) -> Result<Var, NetworkError> {
        for layer in 0..stack.len {
            let i = 2 * (stack.start + layer);
            x = tape.linear(x, bound.vars[i], bound.vars[i + 1])?;
            if layer + 1 < stack.len {
                x = tape.relu(x);
            }
        }
        Ok(x)
    }

    /// Encoder on the tape. `cloud` must be in normalized units.
    pub fn encode_on_tape(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        cloud: &MultiClassPointCloud,
    ) -> Result<Var, NetworkError> {
        cloud.validate_complete()?;
        let [first, second, head, _, _] = self.stacks();
        let n = cloud.len();
        let mut features = Vec::with_capacity(n * INPUT_FEATURES);
        for (p, l) in cloud.points().iter().zip(cloud.labels()) {
            features.extend_from_slice(p);
            let mut onehot = [0.0; 3];
            onehot[l.index()] = 1.0;
            features.extend_from_slice(&onehot);
        }
        let x = tape.constant(Tensor::matrix(n, INPUT_FEATURES, features)?);

        let h1 = Self::mlp(tape, bound, first, x)?;
        let g1 = tape.max_rows(h1)?;
        let g1 = tape.broadcast_rows(g1, n)?;
        let h = tape.concat_cols(&[h1, g1])?;
        let h2 = Self::mlp(tape, bound, second, h)?;
        let g2 = tape.max_rows(h2)?;
        let width = tape.shape(g2)[0];
        let g2 = tape.reshape(g2, vec![1, width])?;
        let z = Self::mlp(tape, bound, head, g2)?;
        Ok(tape.reshape(z, vec![self.config.latent_dim])?)
    }

    /// Coarse decoder on the tape: `m` points for each class.
    pub fn decode_coarse_on_tape(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        latent: Var,
    ) -> Result<[Var; 3], NetworkError> {
        let z = self.config.latent_dim;
        if tape.shape(latent) != [z] {
            return Err(NetworkError::LatentLength {
                expected: z,
                got: tape.value(latent).numel(),
            });
        }
        let [_, _, _, coarse, _] = self.stacks();
        let m = self.config.coarse_points;
        let row = tape.reshape(latent, vec![1, z])?;
        let out = Self::mlp(tape, bound, coarse, row)?;
        // (m, class, xyz) in row-major order
        let rows = tape.reshape(out, vec![m * 3, 3])?;
        let mut per_class = [rows; 3];
        for class in AnatomicalClass::ALL {
            let c = class.index();
            let idx: Vec<usize> = (0..m).map(|j| j * 3 + c).collect();
            per_class[c] = tape.gather_rows(rows, &idx)?;
        }
        Ok(per_class)
    }

    /// 2D patch coordinates on a `grid_side x grid_side` lattice spanning
    /// `[-grid_extent, grid_extent]^2`.
    pub fn grid_coordinates(&self) -> Vec<[f64; 2]> {
        let s = self.config.grid_side;
        let e = self.config.grid_extent;
        let lin = |i: usize| {
            if s == 1 {
                0.0
            } else {
                -e + 2.0 * e * i as f64 / (s - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(s * s);
        for a in 0..s {
            for b in 0..s {
                out.push([lin(a), lin(b)]);
            }
        }
        out
    }

    /// Folding decoder on the tape: `p` points per class, each the parent
    /// coarse point plus an MLP offset.
    pub fn fold_on_tape(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        latent: Var,
        coarse: [Var; 3],
    ) -> Result<[Var; 3], NetworkError> {
        let m = self.config.coarse_points;
        let z = self.config.latent_dim;
        if tape.shape(latent) != [z] {
            return Err(NetworkError::LatentLength {
                expected: z,
                got: tape.value(latent).numel(),
            });
        }
        for c in coarse {
            if tape.shape(c) != [m, 3] {
                return Err(NetworkError::CoarseShape {
                    expected: vec![m, 3],
                    got: tape.shape(c).to_vec(),
                });
            }
        }
        let [_, _, _, _, fold] = self.stacks();
        let grid = self.grid_coordinates();
        let patch = grid.len();
        let p = m * patch;

        let mut grid_data = Vec::with_capacity(3 * p * 2);
        for _ in 0..3 * m {
            for g in &grid {
                grid_data.extend_from_slice(g);
            }
        }
        let grid = tape.constant(Tensor::matrix(3 * p, 2, grid_data)?);

        let stacked = tape.concat_cols(&[coarse[0], coarse[1], coarse[2]])?;
        let stacked = tape.reshape(stacked, vec![m, 9])?;
        // rows of `all_coarse`: class-major, then coarse index
        let mut all_idx = Vec::with_capacity(3 * m);
        for c in 0..3 {
            for j in 0..m {
                all_idx.push(j * 3 + c);
            }
        }
        let flat = tape.reshape(stacked, vec![m * 3, 3])?;
        let all_coarse = tape.gather_rows(flat, &all_idx)?;
        let parent: Vec<usize> = (0..3 * m)
            .flat_map(|r| std::iter::repeat_n(r, patch))
            .collect();
        let parents = tape.gather_rows(all_coarse, &parent)?;
        let codes = tape.broadcast_rows(latent, 3 * p)?;
        let input = tape.concat_cols(&[grid, parents, codes])?;
        let offsets = Self::mlp(tape, bound, fold, input)?;
        let dense = tape.add(parents, offsets)?;

        let mut per_class = [dense; 3];
        for (c, slot) in per_class.iter_mut().enumerate() {
            let idx: Vec<usize> = (c * p..(c + 1) * p).collect();
            *slot = tape.gather_rows(dense, &idx)?;
        }
        Ok(per_class)
    }

    /// Full encoder-decoder on the tape.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        cloud: &MultiClassPointCloud,
    ) -> Result<NetOutputs, NetworkError> {
        let latent = self.encode_on_tape(tape, bound, cloud)?;
        let coarse = self.decode_coarse_on_tape(tape, bound, latent)?;
        let dense = self.fold_on_tape(tape, bound, latent, coarse)?;
        Ok(NetOutputs {
            latent,
            coarse,
            dense,
        })
    }

    /// Latent vector of a cloud in normalized units.
    pub fn encode(&self, cloud: &MultiClassPointCloud) -> Result<Vec<f64>, NetworkError> {
        let mut tape = Tape::new();
        let bound = self.bind_frozen(&mut tape);
        let z = self.encode_on_tape(&mut tape, &bound, cloud)?;
        Ok(tape.value(z).data().to_vec())
    }

    pub fn decode_coarse(&self, latent: &[f64]) -> Result<[Vec<Point3>; 3], NetworkError> {
        let mut tape = Tape::new();
        let bound = self.bind_frozen(&mut tape);
        let z = tape.constant(Tensor::vector(latent.to_vec())?);
        let coarse = self.decode_coarse_on_tape(&mut tape, &bound, z)?;
        Ok(coarse.map(|c| tape.value(c).to_points().unwrap_or_default()))
    }

    pub fn fold_dense(
        &self,
        latent: &[f64],
        coarse: &[Vec<Point3>; 3],
    ) -> Result<[Vec<Point3>; 3], NetworkError> {
        let mut tape = Tape::new();
        let bound = self.bind_frozen(&mut tape);
        let z = tape.constant(Tensor::vector(latent.to_vec())?);
        let mut vars = Vec::with_capacity(3);
        for c in coarse {
            if c.is_empty() {
                return Err(NetworkError::CoarseShape {
                    expected: vec![self.config.coarse_points, 3],
                    got: vec![0, 3],
                });
            }
            vars.push(tape.constant(Tensor::from_points(c)?));
        }
        let dense = self.fold_on_tape(&mut tape, &bound, z, [vars[0], vars[1], vars[2]])?;
        Ok(dense.map(|d| tape.value(d).to_points().unwrap_or_default()))
    }

    /// Prediction for a cloud in normalized units.
    pub fn predict(
        &self,
        cloud: &MultiClassPointCloud,
    ) -> Result<DeformationPrediction, NetworkError> {
        let mut tape = Tape::new();
        let bound = self.bind_frozen(&mut tape);
        let out = self.forward(&mut tape, &bound, cloud)?;
        let read = |v: Var| tape.value(v).to_points().unwrap_or_default();
        Ok(DeformationPrediction {
            coarse: out.coarse.map(read),
            dense: out.dense.map(read),
        })
    }

    /// Prediction for a cloud in millimetres, returned in millimetres.
    pub fn predict_mm(
        &self,
        cloud: &MultiClassPointCloud,
    ) -> Result<DeformationPrediction, NetworkError> {
        let t = self.normalization;
        let pred = self.predict(&t.normalize(cloud))?;
        Ok(pred.map_points(|p| t.denormalize_point(p)))
    }

    /// Latent vector of a cloud in millimetres.
    pub fn encode_mm(&self, cloud: &MultiClassPointCloud) -> Result<Vec<f64>, NetworkError> {
        self.encode(&self.normalization.normalize(cloud))
    }
}

/// `(name, shape)` of every parameter tensor implied by `config`.
pub fn expected_shapes(config: &ArchitectureConfig) -> Vec<(String, Vec<usize>)> {
    config
        .layer_specs()
        .into_iter()
        .flat_map(|(name, i, o)| {
            [
                (format!("{name}.weight"), vec![i, o]),
                (format!("{name}.bias"), vec![o]),
            ]
        })
        .collect()
}
