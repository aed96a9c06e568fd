//! Point-cloud deformation network for predicting biventricular cardiac shape
//! at one end of the cardiac cycle from the other, with the clinical and
//! outcome analytics built on its predictions and latent space.

pub mod autodiff;
pub mod geometry;
pub mod network;
pub mod training;
pub mod synthheart;
pub mod clinical;
pub mod analytics;
