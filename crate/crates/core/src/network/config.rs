use serde::{Deserialize, Serialize};

use super::NetworkError;

/// Width of the per-point input: xyz plus a one-hot class code.
pub const INPUT_FEATURES: usize = 6;
/// Folding input: 2D grid coordinate, parent coarse point, latent vector.
pub const FOLD_FIXED_FEATURES: usize = 5;

/// Architecture hyperparameters of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchitectureConfig {
    /// Nominal input points per class (`n / 3`); the encoder accepts any count.
    pub input_points_per_class: usize,
    /// Coarse points per class (`m`).
    pub coarse_points: usize,
    /// Side length of the square folding patch.
    pub grid_side: usize,
    /// Latent vector length (`z`).
    pub latent_dim: usize,
    /// Shared per-point MLP widths of the first point-set stage.
    pub encoder_first: Vec<usize>,
    /// Shared per-point MLP widths of the second point-set stage.
    pub encoder_second: Vec<usize>,
    /// Hidden widths of the MLP mapping the pooled feature to the latent.
    pub encoder_head: Vec<usize>,
    /// Hidden widths of the coarse decoder.
    pub coarse_hidden: Vec<usize>,
    /// Hidden widths of the folding MLP.
    pub fold_hidden: Vec<usize>,
    /// Half-width of the folding patch, in normalized units.
    pub grid_extent: f64,
    pub init_seed: u64,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            input_points_per_class: 1024,
            coarse_points: 64,
            grid_side: 4,
            latent_dim: 64,
            encoder_first: vec![64, 128],
            encoder_second: vec![256, 512],
            encoder_head: vec![256],
            coarse_hidden: vec![256, 512],
            fold_hidden: vec![256, 128],
            grid_extent: 0.05,
            init_seed: 0,
        }
    }
}

impl ArchitectureConfig {
    /// Single-core sized model: 3 x 256 inputs, m = 16, p = 256, z = 16.
    pub fn desk() -> Self {
        Self {
            input_points_per_class: 256,
            coarse_points: 16,
            grid_side: 4,
            latent_dim: 16,
            encoder_first: vec![32, 64],
            encoder_second: vec![64, 128],
            encoder_head: vec![64],
            coarse_hidden: vec![128, 256],
            fold_hidden: vec![64, 64],
            grid_extent: 0.05,
            init_seed: 0,
        }
    }

    /// Tiny model for gradient checks: 3 x 32 inputs, m = 4, z = 8.
    pub fn toy() -> Self {
        Self {
            input_points_per_class: 32,
            coarse_points: 4,
            grid_side: 2,
            latent_dim: 8,
            encoder_first: vec![8, 8],
            encoder_second: vec![8, 12],
            encoder_head: vec![8],
            coarse_hidden: vec![12],
            fold_hidden: vec![8],
            grid_extent: 0.05,
            init_seed: 0,
        }
    }

    pub fn patch_size(&self) -> usize {
        self.grid_side * self.grid_side
    }

    /// Dense points per class (`p = m * grid_side^2`).
    pub fn dense_points(&self) -> usize {
        self.coarse_points * self.patch_size()
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |msg: &str| Err(NetworkError::InvalidConfig(msg.to_string()));
        if self.coarse_points == 0 {
            return bad("coarse_points must be positive");
        }
        if self.grid_side == 0 {
            return bad("grid_side must be positive");
        }
        if self.latent_dim < 2 {
            return bad("latent_dim must be at least 2");
        }
        if self.input_points_per_class == 0 {
            return bad("input_points_per_class must be positive");
        }
        if self.encoder_first.is_empty() || self.encoder_second.is_empty() {
            return bad("both point-set stages need at least one layer");
        }
        let widths = self
            .encoder_first
            .iter()
            .chain(&self.encoder_second)
            .chain(&self.encoder_head)
            .chain(&self.coarse_hidden)
            .chain(&self.fold_hidden);
        if widths.copied().any(|w| w == 0) {
            return bad("layer widths must be positive");
        }
        if !(self.grid_extent > 0.0) || !self.grid_extent.is_finite() {
            return bad("grid_extent must be positive");
        }
        Ok(())
    }

    /// `(name, fan_in, fan_out)` for every dense layer, in parameter order.
    pub fn layer_specs(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        let mut push_stack = |prefix: &str, input: usize, widths: &[usize]| {
            let mut prev = input;
            for (i, &w) in widths.iter().enumerate() {
                out.push((format!("{prefix}.{i}"), prev, w));
                prev = w;
            }
        };
        push_stack("enc1", INPUT_FEATURES, &self.encoder_first);
        let first_out = *self.encoder_first.last().unwrap_or(&INPUT_FEATURES);
        push_stack("enc2", 2 * first_out, &self.encoder_second);
        let second_out = *self.encoder_second.last().unwrap_or(&first_out);
        let mut head = self.encoder_head.clone();
        head.push(self.latent_dim);
        push_stack("head", second_out, &head);
        let mut coarse = self.coarse_hidden.clone();
        coarse.push(self.coarse_points * 9);
        push_stack("coarse", self.latent_dim, &coarse);
        let mut fold = self.fold_hidden.clone();
        fold.push(3);
        push_stack("fold", FOLD_FIXED_FEATURES + self.latent_dim, &fold);
        out
    }

    /// Number of learnable scalars.
    pub fn parameter_count(&self) -> usize {
        self.layer_specs()
            .iter()
            .map(|(_, i, o)| i * o + o)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dense_is_sixteen_times_coarse() {
        let c = ArchitectureConfig::default();
        assert_eq!(c.dense_points(), 1024);
        assert_eq!(c.dense_points(), 16 * c.coarse_points);
        assert_eq!(c.coarse_points * 9, 576);
        c.validate().unwrap();
    }

    #[test]
    fn desk_and_toy_are_valid() {
        let d = ArchitectureConfig::desk();
        d.validate().unwrap();
        assert_eq!(d.dense_points(), 256);
        ArchitectureConfig::toy().validate().unwrap();
    }

    #[test]
    fn parameter_count_is_pure_function_of_config() {
        let c = ArchitectureConfig::desk();
        assert_eq!(c.parameter_count(), c.clone().parameter_count());
        let mut wider = c.clone();
        wider.latent_dim += 1;
        assert!(wider.parameter_count() > c.parameter_count());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = ArchitectureConfig::toy();
        c.latent_dim = 1;
        assert!(c.validate().is_err());
        let mut c = ArchitectureConfig::toy();
        c.fold_hidden = vec![0];
        assert!(c.validate().is_err());
    }
}
