//! Non-minutiae fingerprint verification in the wavelet domain.
//!
//! An image is decomposed by a three-level Daubechies DWT ([`dwt`]). Each
//! level contributes directional features of its approximation band
//! ([`orientation`]), texture statistics around per-band center points
//! ([`centerarea`]) and Canny edge statistics ([`edgefeat`]); all texture
//! statistics come from gray-level co-occurrence matrices ([`texture`]).
//! The concatenated 96-value vector ([`pipeline`]) is matched by Euclidean
//! distance ([`matcher`]) and evaluated with FAR/FRR/TSR sweeps ([`eval`],
//! [`protocol`]). [`synth`] generates ridge-pattern test corpora.

pub mod centerarea;
pub mod dwt;
pub mod edgefeat;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod matcher;
pub mod orientation;
pub mod pipeline;
pub mod plane;
pub mod protocol;
pub mod synth;
pub mod texture;

pub use error::{Error, Result};
pub use plane::{GrayImage, Plane};
