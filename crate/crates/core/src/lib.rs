//! Desk-scale multi-antenna GNSS simulator and receiver.
//!
//! The crate synthesizes GPS L1 C/A baseband at a ring antenna array under
//! barrage/beamforming jammers and multi-satellite spoofers, and implements
//! two receivers on top of it:
//!
//! * a traditional **baseline** (CAF argmax acquisition, despreading,
//!   data-step ranging, Gauss-Newton positioning), and
//! * the **schieber** receiver: jammer-nulling acquisition, projected MUSIC
//!   DoA estimation, a receiver-position-invariant pairwise consistency graph
//!   with greedy clique selection, and IRLS positioning.
//!
//! Module map:
//!
//! | module          | role                                                       |
//! |-----------------|------------------------------------------------------------|
//! | [`geometry`]    | orbits, visibility, directions, steering vectors           |
//! | [`synth`]       | C/A codes and the receive-stream forward model             |
//! | [`scene`]       | random trial placement (receiver, attackers, clock)        |
//! | [`acquisition`] | baseline and interference-nulling CAF acquisition          |
//! | [`ranging`]     | despreading, data-step detection, pseudoranges             |
//! | [`doa`]         | projected MUSIC and LoS screening                          |
//! | [`consistency`] | pairwise range test, plausibility graph, greedy clique     |
//! | [`positioning`] | LS / IRLS positioning and the surface error metric         |
//! | [`pipeline`]    | end-to-end receivers                                       |

pub mod acquisition;
pub mod consistency;
pub mod constants;
pub mod doa;
mod error;
pub mod geometry;
mod linalg;
pub mod pipeline;
pub mod positioning;
pub mod ranging;
pub mod scene;
pub mod synth;

pub use error::{Error, Result};
